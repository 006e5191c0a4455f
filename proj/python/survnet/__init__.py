"""Neural survival models with monotone networks."""

import json

from ._core import (
    ConfigError,
    ContractError,
    Dataset,
    DomainError,
    Model,
    ParseError,
    ShapeError,
    SurvnetError,
    UnsupportedOperation,
    build_model,
    fit_km,
    km_balanced_split,
    km_fit,
    load_csv,
    make_dataset,
    model_from_json,
    normalize,
    run_cli,
    synthetic_weibull,
)
from . import _core


def train(model, train_set, val_set, config=None):
    """Train in place; config is a dict in the TrainConfig JSON layout."""
    return _core.train(model, train_set, val_set, json.dumps(config) if config else "")


def evaluate(model, data, t_max=1.0, grid_size=65):
    """Integrated scores, concordance, mean and min as a dict."""
    return json.loads(_core.evaluate(model, data, t_max, grid_size))


__all__ = [
    "ConfigError",
    "ContractError",
    "Dataset",
    "DomainError",
    "Model",
    "ParseError",
    "ShapeError",
    "SurvnetError",
    "UnsupportedOperation",
    "build_model",
    "evaluate",
    "fit_km",
    "km_balanced_split",
    "km_fit",
    "load_csv",
    "make_dataset",
    "model_from_json",
    "normalize",
    "run_cli",
    "synthetic_weibull",
    "train",
]
