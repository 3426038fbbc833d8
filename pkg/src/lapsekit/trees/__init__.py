"""CART, random forests and gradient-boosted trees."""
from .base import Binned, FeatureSpec, Tree, TreeNode, feature_matrix
from .boost import (BoostParams, Booster, fit_boost, fit_boost_design, leaf_weight,
                    predict_boost, soft_threshold)
from .cart import CartModel, CartParams, Split, best_split, fit_cart, gini_impurity, grow_tree, prune
from .forest import Forest, ForestParams, fit_forest, predict_forest
from .importance import gini_importance, tree_importance

__all__ = [
    "Binned", "BoostParams", "Booster", "CartModel", "CartParams", "FeatureSpec", "Forest",
    "ForestParams", "Split", "Tree", "TreeNode", "best_split", "feature_matrix", "fit_boost",
    "fit_boost_design", "fit_cart", "fit_forest", "gini_importance", "gini_impurity",
    "grow_tree", "leaf_weight", "predict_boost", "predict_forest", "prune", "soft_threshold",
    "tree_importance",
]
