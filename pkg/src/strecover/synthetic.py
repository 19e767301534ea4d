"""Deterministic synthetic spatio-temporal datasets.

Generates a fully observed low-rank matrix whose rows vary smoothly across a
random sensor layout and whose columns vary smoothly in time, on a value
scale resembling vehicle speeds. Everything is a pure function of the spec,
so benchmark datasets regenerate bit for bit.
"""

from dataclasses import dataclass

import numpy as np

from .data import ObservedMatrix
from .errors import ParameterError
from .graph import pairwise_distances, top_k_indices

# neighborhood size used for spatial smoothing rounds (capped at M - 1)
SMOOTHING_NEIGHBORS = 5


@dataclass(frozen=True)
class SynthSpec:
    """Recipe for one synthetic dataset.

    ``spatial_rounds`` / ``temporal_rounds`` are the number of neighborhood /
    moving-average smoothing passes applied to the ground-truth factors;
    ``noise_sd`` is the standard deviation of i.i.d. Gaussian noise added to
    the final matrix.
    """

    rows: int
    cols: int
    rank: int
    spatial_rounds: int = 0
    temporal_rounds: int = 0
    noise_sd: float = 0.0
    box_size: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.rows < 1 or self.cols < 1:
            raise ParameterError(f"dimensions must be positive, got {self.rows}x{self.cols}")
        if not 1 <= self.rank <= min(self.rows, self.cols):
            raise ParameterError(f"rank must be in [1, min(M, N)], got {self.rank}")
        if self.spatial_rounds < 0 or self.temporal_rounds < 0:
            raise ParameterError("smoothing rounds must be >= 0")
        if not np.isfinite(self.noise_sd) or self.noise_sd < 0:
            raise ParameterError(f"noise_sd must be finite and >= 0, got {self.noise_sd}")
        if not np.isfinite(self.box_size) or self.box_size <= 0:
            raise ParameterError(f"box_size must be positive, got {self.box_size}")


def _smooth_spatial(U, coords, rounds):
    if rounds == 0 or U.shape[0] < 2:
        return U
    k = min(SMOOTHING_NEIGHBORS, U.shape[0] - 1)
    neighbors = top_k_indices(pairwise_distances(coords), k)
    for _ in range(rounds):
        U = (U + U[neighbors].sum(axis=1)) / (k + 1)
    return U


def _smooth_temporal(V, rounds):
    if rounds == 0 or V.shape[0] < 2:
        return V
    for _ in range(rounds):
        acc = V.copy()
        count = np.ones((V.shape[0], 1))
        acc[:-1] += V[1:]
        count[:-1] += 1
        acc[1:] += V[:-1]
        count[1:] += 1
        V = acc / count
    return V


def generate(spec):
    """Build (fully observed matrix, coordinates) from a SynthSpec.

    Ground-truth factors are positive uniforms smoothed per the spec, so the
    product is entrywise positive with rank exactly ``spec.rank``; it is then
    scaled to mean 5 (a typical speed scale) and Gaussian noise is added.
    """
    rng = np.random.default_rng(spec.seed)
    coords = rng.uniform(0.0, spec.box_size, size=(spec.rows, 2))
    U = rng.uniform(0.1, 1.0, size=(spec.rows, spec.rank))
    V = rng.uniform(0.1, 1.0, size=(spec.cols, spec.rank))
    U = _smooth_spatial(U, coords, spec.spatial_rounds)
    V = _smooth_temporal(V, spec.temporal_rounds)
    H = U @ V.T
    H *= 5.0 / H.mean()
    if spec.noise_sd > 0:
        H = H + rng.normal(0.0, spec.noise_sd, size=H.shape)
    ii, jj = np.indices(H.shape)
    full = ObservedMatrix.from_arrays(
        spec.rows, spec.cols, ii.ravel(), jj.ravel(), H.ravel()
    )
    return full, coords


SMOKE_SPEC = SynthSpec(
    rows=40,
    cols=60,
    rank=4,
    spatial_rounds=12,
    temporal_rounds=12,
    noise_sd=0.1,
    box_size=60.0,
    seed=1729,
)


def smoke_dataset():
    """The pinned small benchmark instance used by the acceptance suite."""
    return generate(SMOKE_SPEC)
