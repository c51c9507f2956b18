"""Python bindings for the semantic image editing pipeline."""

import torch  # noqa: F401  loads the libtorch shared libraries the extension links against

from ._siedob import (  # noqa: F401
    ConfigError,
    DimensionError,
    IoError,
    NoStylesError,
    Pipeline,
    StageError,
    ValidationError,
    build_bank,
    disassemble,
    evaluate,
    frechet_distance,
    make_toy,
    train_stage,
    training_mask,
)
