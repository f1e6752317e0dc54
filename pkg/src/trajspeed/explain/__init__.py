"""Model explainability: importance, SHAP attributions, embeddings, curves."""
from .importance import ImportanceTable, feature_importance
from .shap import ShapMatrix, shap_values, tree_shap_single, background_covers, tree_expected_value
from .tsne import Embedding2D, tsne_embed
from .dependence import DependenceCurve, dependence_curve

__all__ = [
    "ImportanceTable",
    "feature_importance",
    "ShapMatrix",
    "shap_values",
    "tree_shap_single",
    "background_covers",
    "tree_expected_value",
    "Embedding2D",
    "tsne_embed",
    "DependenceCurve",
    "dependence_curve",
]
