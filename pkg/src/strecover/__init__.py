"""Spatio-temporal matrix completion via regularized latent factor analysis.

Recovers missing entries of a sensor-by-time matrix by factoring it into
low-dimensional latent features, with a graph-Laplacian penalty tying nearby
sensors together and a temporal-difference penalty tying adjacent time slots
together. Ships a synthetic data generator, masking/split tools, an RMSE
benchmark harness, and a CLI.
"""

from .data import (
    EntrySet,
    ObservedMatrix,
    load_sidecar,
    load_triplets,
    split_by_sampling_rate,
    split_half,
    write_sidecar,
    write_triplets,
)
from .engine import (
    FactorModel,
    LossTrace,
    TrainConfig,
    cheap_update,
    full_update,
    init_factors,
    load_checkpoint,
    objective,
    objective_gradient,
    predict,
    recover,
    save_checkpoint,
    train,
)
from .errors import (
    DegenerateDistanceError,
    DivergenceError,
    DuplicateEntryError,
    ParameterError,
    ParseError,
    StrecoverError,
)
from .evaluation import (
    EvalRecord,
    EvalReport,
    rmse,
    sweep_dimension,
    sweep_sampling,
    win_loss,
)
from .graph import (
    LaplacianGraph,
    knn_weights,
    laplacian,
    load_coords,
    pairwise_distances,
    write_coords,
)
from .synthetic import SMOKE_SPEC, SynthSpec, generate, smoke_dataset
from .tdiff import DiffOperator, apply_diff, apply_gram, gram_column

__version__ = "0.1.0"

__all__ = [
    "DegenerateDistanceError",
    "DiffOperator",
    "DivergenceError",
    "DuplicateEntryError",
    "EntrySet",
    "EvalRecord",
    "EvalReport",
    "FactorModel",
    "LaplacianGraph",
    "LossTrace",
    "ObservedMatrix",
    "ParameterError",
    "ParseError",
    "SMOKE_SPEC",
    "StrecoverError",
    "SynthSpec",
    "TrainConfig",
    "apply_diff",
    "apply_gram",
    "cheap_update",
    "full_update",
    "generate",
    "gram_column",
    "init_factors",
    "knn_weights",
    "laplacian",
    "load_checkpoint",
    "load_coords",
    "load_sidecar",
    "load_triplets",
    "objective",
    "objective_gradient",
    "pairwise_distances",
    "predict",
    "recover",
    "rmse",
    "save_checkpoint",
    "smoke_dataset",
    "split_by_sampling_rate",
    "split_half",
    "sweep_dimension",
    "sweep_sampling",
    "train",
    "win_loss",
    "write_coords",
    "write_sidecar",
    "write_triplets",
]
