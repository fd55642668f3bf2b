"""Clutter-aware path-loss modelling for street canyons."""

from ._core import (
    Dataset,
    FeatureTable,
    GroundTruthPL,
    LinearModel,
    SceneConfig,
    SlopeIntercept,
    evaluate,
    extract_clutter_features,
    fit_elasticnet,
    fit_lasso,
    fit_slope_intercept,
    generate_pl,
    generate_scene,
    gpp_uma_los,
    gpp_umi_nlos,
    lasso_importance,
    load_dataset,
    rmse,
    save_dataset,
    traverse_segment,
)

__all__ = [
    "Dataset",
    "FeatureTable",
    "GroundTruthPL",
    "LinearModel",
    "SceneConfig",
    "SlopeIntercept",
    "evaluate",
    "extract_clutter_features",
    "fit_elasticnet",
    "fit_lasso",
    "fit_slope_intercept",
    "generate_pl",
    "generate_scene",
    "gpp_uma_los",
    "gpp_umi_nlos",
    "lasso_importance",
    "load_dataset",
    "rmse",
    "save_dataset",
    "traverse_segment",
]
