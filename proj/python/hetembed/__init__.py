# Copyright 2026 The hetembed Authors
# SPDX-License-Identifier: Apache-2.0

"""Multi-label classification over heterogeneous feature sources."""

from ._hetembed import (
    ConfigError,
    DataError,
    Error,
    NumericError,
    ShapeError,
    ablate,
    evaluate,
    generate_data,
    gradcheck,
    load_config,
    metrics,
    predict,
    stage2_loss,
    train,
)

__all__ = [
    "ConfigError",
    "DataError",
    "Error",
    "NumericError",
    "ShapeError",
    "ablate",
    "evaluate",
    "generate_data",
    "gradcheck",
    "load_config",
    "metrics",
    "predict",
    "stage2_loss",
    "train",
]
