"""Observation model: a uniformly shifted signal plus white Gaussian noise.

Each observation is ``G_i theta + sigma * xi_i`` with ``G_i`` Haar-uniform
on the configured group (uniform angle on the circle, or uniform shift in
``Z/L``) and ``xi_i`` standard normal.  Batches are reproducible from the
config seed and immutable once created.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument
from .rng import child_rng
from .signals import CONTINUOUS, DISCRETE, GROUP_KINDS, Signal, dft_matrix, freq_indices


@dataclass(frozen=True)
class ModelConfig:
    L: int
    sigma: float
    group: str = CONTINUOUS
    seed: int = 0

    def __post_init__(self):
        if self.L <= 0 or self.L % 2 == 0:
            raise InvalidArgument(f"L must be odd and positive, got {self.L}")
        if not self.sigma > 0:
            raise InvalidArgument(f"sigma must be positive, got {self.sigma}")
        if self.group not in GROUP_KINDS:
            raise InvalidArgument(f"unknown group kind {self.group!r}")


@dataclass(frozen=True, eq=False)
class SampleBatch:
    """n noisy observations plus the config that produced them.

    ``latent_shifts`` (angles for the continuous group, integer shifts for
    the discrete one) are retained for diagnostics only; estimators must
    not read them.
    """

    config: ModelConfig
    observations: np.ndarray
    latent_shifts: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        obs = self.observations
        if obs.ndim != 2 or obs.shape[1] != self.config.L:
            raise InvalidArgument(f"observations must be (n, {self.config.L})")
        if obs.size and not np.all(np.isfinite(obs)):
            raise InvalidArgument("observations must be finite")
        obs.setflags(write=False)
        if self.latent_shifts is not None:
            self.latent_shifts.setflags(write=False)

    @property
    def n(self) -> int:
        return self.observations.shape[0]

    def without_latents(self) -> "SampleBatch":
        return SampleBatch(config=self.config, observations=self.observations)


def _shifted_rows(theta: Signal, alphas: np.ndarray) -> np.ndarray:
    """Value-domain rows G_{z_i} theta for z_i = exp(-i*alphas_i)."""
    j = freq_indices(theta.L)
    phases = np.exp(-1j * np.outer(alphas, j))
    rows = (phases * theta.fourier) @ dft_matrix(theta.L).conj()
    return rows.real


def sample(theta: Signal, config: ModelConfig, n: int) -> SampleBatch:
    """Draw ``n`` observations from the model at ``theta``.

    Deterministic given ``config.seed``; ``n = 0`` yields a valid empty
    batch.
    """
    if theta.L != config.L:
        raise InvalidArgument(f"signal has L={theta.L}, config expects L={config.L}")
    if n < 0:
        raise InvalidArgument(f"sample count must be nonnegative, got {n}")
    n = int(n)
    L = config.L
    rng = child_rng(config.seed, "sample", n)

    if config.group == DISCRETE:
        shifts = rng.integers(0, L, size=n)
        alphas = 2 * np.pi * shifts / L
        latents = shifts
    else:
        alphas = rng.uniform(0.0, 2 * np.pi, size=n)
        latents = alphas

    obs = np.empty((n, L), dtype=float)
    chunk = 1 << 16
    for lo in range(0, n, chunk):
        hi = min(lo + chunk, n)
        obs[lo:hi] = _shifted_rows(theta, alphas[lo:hi])
    obs += config.sigma * rng.standard_normal((n, L))
    return SampleBatch(config=config, observations=obs, latent_shifts=latents)
