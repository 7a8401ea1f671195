"""Kullback-Leibler divergence between shifted-signal mixtures.

The density of an observation is a Haar mixture of Gaussians centered on
the orbit of the signal.  The group expectation is computed by the
uniform trapezoid rule on the circle (exact average over the L shifts in
the discrete case), in log-sum-exp form after factoring the common
Gaussian envelope.  On top of the Monte-Carlo estimator this module
provides the tensor-series lower bound and the truncated-series upper
bound, which bracket the divergence for centered in-regime pairs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidArgument
from .moments import delta_norm
from .rng import child_rng
from .sampling import ModelConfig, sample
from .signals import CONTINUOUS, DISCRETE, GROUP_KINDS, ZERO_TOL, Signal, dft_rows, orbit_distance

DEFAULT_K_QUAD = 256
DEFAULT_M_MAX = 8
DEFAULT_K_UPPER = 4

_CHUNK_ROWS = 1 << 15


def group_angles(L: int, group: str, K_quad: int) -> np.ndarray:
    """Quadrature angles: K uniform nodes on the circle, or the L shifts."""
    if group == DISCRETE:
        return 2 * np.pi * np.arange(L) / L
    if K_quad < 8:
        raise InvalidArgument(f"K_quad must be >= 8, got {K_quad}")
    return 2 * np.pi * np.arange(K_quad) / K_quad


def correlation_profile(Yf: np.ndarray, theta: Signal, alphas: np.ndarray) -> np.ndarray:
    """Matrix of inner products <y_i, G_{z_k} theta> from Fourier rows.

    Only the nonzero coefficients of ``theta`` enter, so the cost scales
    with its support size rather than with L.
    """
    half = theta.L // 2
    dc = Yf[:, half].real * theta.fourier[half].real
    pos = [j for j in range(1, half + 1) if abs(theta.fourier[half + j]) > ZERO_TOL]
    if not pos:
        return np.broadcast_to(dc[:, None], (Yf.shape[0], alphas.size)).copy()
    A = Yf[:, [half + j for j in pos]].conj() * theta.fourier[[half + j for j in pos]]
    E = np.exp(-1j * np.outer(pos, alphas))
    return dc[:, None] + 2 * np.real(A @ E)


def _log_mixture_rows(Yf: np.ndarray, theta: Signal, sigma: float, alphas: np.ndarray) -> np.ndarray:
    """log E_G exp(<y, G theta>/sigma^2) per row, via log-sum-exp."""
    corr = correlation_profile(Yf, theta, alphas)
    corr /= sigma**2
    m = corr.max(axis=1)
    np.subtract(corr, m[:, None], out=corr)
    np.exp(corr, out=corr)
    return np.log(corr.sum(axis=1)) + m - math.log(alphas.size)


def log_density_rows(
    Y: np.ndarray,
    theta: Signal,
    sigma: float,
    K_quad: int = DEFAULT_K_QUAD,
    group: str = CONTINUOUS,
) -> np.ndarray:
    """Log density of each row of Y under the mixture at ``theta``."""
    Y = np.asarray(Y, dtype=float)
    if not np.all(np.isfinite(Y)):
        raise InvalidArgument("observations must be finite")
    if not sigma > 0:
        raise InvalidArgument(f"sigma must be positive, got {sigma}")
    if group not in GROUP_KINDS:
        raise InvalidArgument(f"unknown group kind {group!r}")
    L = theta.L
    alphas = group_angles(L, group, K_quad)
    const = -0.5 * L * math.log(2 * math.pi * sigma**2)
    out = np.empty(Y.shape[0])
    for lo in range(0, Y.shape[0], _CHUNK_ROWS):
        rows = Y[lo : lo + _CHUNK_ROWS]
        Yf = dft_rows(rows)
        envelope = -(np.sum(rows**2, axis=1) + theta.norm**2) / (2 * sigma**2)
        out[lo : lo + _CHUNK_ROWS] = const + envelope + _log_mixture_rows(Yf, theta, sigma, alphas)
    return out


def log_density(
    y: np.ndarray,
    theta: Signal,
    sigma: float,
    K_quad: int = DEFAULT_K_QUAD,
    group: str = CONTINUOUS,
) -> float:
    """Log density of a single observation."""
    y = np.asarray(y, dtype=float)
    if y.ndim != 1:
        raise InvalidArgument("log_density expects a single observation vector")
    return float(log_density_rows(y[None, :], theta, sigma, K_quad, group)[0])


@dataclass(frozen=True)
class DivergenceEstimate:
    mean: float
    stderr: float
    n_mc: int
    K_quad: int

    def __post_init__(self):
        if self.n_mc < 1:
            raise InvalidArgument("n_mc must be >= 1")
        if self.stderr < 0:
            raise InvalidArgument("stderr must be nonnegative")


def _mc_child_seed(seed: int) -> int:
    """Stable 63-bit child seed for the nested sampling config."""
    return int(child_rng(seed, "kl_mc").integers(0, 2**63 - 1))


def kl_monte_carlo(
    theta: Signal,
    phi: Signal,
    sigma: float,
    n_mc: int,
    K_quad: int = DEFAULT_K_QUAD,
    seed: int = 0,
    group: str = CONTINUOUS,
) -> DivergenceEstimate:
    """Monte-Carlo estimate of D(P_theta || P_phi).

    Draws fresh samples from the model at ``theta`` and averages the
    log density ratio; the Gaussian envelope cancels analytically.
    """
    if theta.L != phi.L:
        raise InvalidArgument(f"length mismatch: {theta.L} vs {phi.L}")
    if n_mc < 1:
        raise InvalidArgument(f"n_mc must be >= 1, got {n_mc}")
    config = ModelConfig(L=theta.L, sigma=sigma, group=group, seed=_mc_child_seed(seed))
    batch = sample(theta, config, n_mc)
    alphas = group_angles(theta.L, group, K_quad)
    offset = (phi.norm**2 - theta.norm**2) / (2 * sigma**2)

    diffs = np.empty(n_mc)
    Y = batch.observations
    for lo in range(0, n_mc, _CHUNK_ROWS):
        Yf = dft_rows(Y[lo : lo + _CHUNK_ROWS])
        diffs[lo : lo + _CHUNK_ROWS] = (
            offset
            + _log_mixture_rows(Yf, theta, sigma, alphas)
            - _log_mixture_rows(Yf, phi, sigma, alphas)
        )
    mean = float(np.mean(diffs))
    stderr = float(np.std(diffs, ddof=1) / math.sqrt(n_mc)) if n_mc > 1 else 0.0
    return DivergenceEstimate(mean=mean, stderr=stderr, n_mc=n_mc, K_quad=len(alphas))


def _check_series_regime(theta: Signal, phi: Signal, sigma: float, group: str, force: bool) -> float:
    rho = orbit_distance(theta, phi, group)
    if force:
        return rho
    if abs(theta.coeff(0)) > ZERO_TOL or abs(phi.coeff(0)) > ZERO_TOL:
        raise DomainError(
            "series bounds require centered signals (zero DC Fourier coefficient); "
            "compose with first_moment_decompose or pass force=True"
        )
    if 3 * rho > theta.norm:
        raise DomainError(
            f"series bounds require 3*rho <= |theta|: rho={rho:.4g}, |theta|={theta.norm:.4g}"
        )
    if theta.norm > sigma:
        raise DomainError(
            f"series bounds require |theta| <= sigma: |theta|={theta.norm:.4g}, sigma={sigma:.4g}"
        )
    return rho


def kl_series_lower(
    theta: Signal,
    phi: Signal,
    sigma: float,
    m_max: int = DEFAULT_M_MAX,
    group: str = CONTINUOUS,
    force: bool = False,
) -> float:
    """Tensor-series lower bound on the divergence of a centered pair.

    Monotone nondecreasing in ``m_max``.
    """
    if m_max < 1:
        raise InvalidArgument(f"m_max must be >= 1, got {m_max}")
    _check_series_regime(theta, phi, sigma, group, force)
    total = 0.0
    for m in range(1, m_max + 1):
        dm = delta_norm(theta, phi, m, group)
        total += dm**2 / ((3 * sigma**2) ** m * math.factorial(m))
    return total / 15.0


def kl_series_upper(
    theta: Signal,
    phi: Signal,
    sigma: float,
    k: int = DEFAULT_K_UPPER,
    group: str = CONTINUOUS,
    force: bool = False,
) -> float:
    """Truncated-series upper bound on the divergence of a centered pair.

    Sums the first ``k-1`` tensor terms and adds the explicit remainder
    ``24*e^2 * rho^2 * |theta|^(2k-2) / sigma^(2k)``.
    """
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    rho = _check_series_regime(theta, phi, sigma, group, force)
    total = 0.0
    for m in range(1, k):
        dm = delta_norm(theta, phi, m, group)
        total += 2 * dm**2 / (sigma ** (2 * m) * math.factorial(m))
    remainder = 24 * math.e**2 * rho**2 * theta.norm ** (2 * k - 2) / sigma ** (2 * k)
    return total + remainder


def first_moment_decompose(
    theta: Signal, phi: Signal, sigma: float
) -> tuple[float, Signal, Signal]:
    """Split off the mean part of the divergence.

    Returns ``(mean_term, theta_centered, phi_centered)`` where the mean
    term is ``(theta_hat_0 - phi_hat_0)^2 / (2 sigma^2)`` and the centered
    signals have their DC coefficient zeroed; the divergence of the
    original pair equals the mean term plus the divergence of the
    centered pair.
    """
    if theta.L != phi.L:
        raise InvalidArgument(f"length mismatch: {theta.L} vs {phi.L}")
    d0 = theta.coeff(0).real - phi.coeff(0).real
    mean_term = d0**2 / (2 * sigma**2)
    half = theta.L // 2

    def centered(sig: Signal) -> Signal:
        fourier = sig.fourier.copy()
        fourier[half] = 0.0
        return Signal.from_fourier(fourier)

    return mean_term, centered(theta), centered(phi)


@dataclass(frozen=True)
class SandwichReport:
    """Series bracket around a Monte-Carlo divergence estimate."""

    lower: float
    upper: float
    k_used: int
    mc: DivergenceEstimate
    delta_norms: tuple[float, ...]

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise InvalidArgument("sandwich bounds must be finite")
        if self.lower > self.upper:
            raise InvalidArgument(
                f"lower bound {self.lower:.6g} exceeds upper bound {self.upper:.6g}"
            )


def kl_sandwich(
    theta: Signal,
    phi: Signal,
    sigma: float,
    n_mc: int = 10**5,
    K_quad: int = DEFAULT_K_QUAD,
    seed: int = 0,
    group: str = CONTINUOUS,
    m_max: int = DEFAULT_M_MAX,
    k: int = DEFAULT_K_UPPER,
    force: bool = False,
) -> SandwichReport:
    """Bracket the divergence and estimate it by Monte Carlo."""
    lower = kl_series_lower(theta, phi, sigma, m_max, group, force)
    upper = kl_series_upper(theta, phi, sigma, k, group, force)
    mc = kl_monte_carlo(theta, phi, sigma, n_mc, K_quad, seed, group)
    norms = tuple(delta_norm(theta, phi, m, group) for m in range(1, m_max + 1))
    return SandwichReport(lower=lower, upper=upper, k_used=k, mc=mc, delta_norms=norms)


@dataclass(frozen=True)
class CurvatureReport:
    """Diagnostic: smallest observed ratio D / rho^2 over a probe set."""

    min_ratio: float
    argmin: Signal
    ratios: tuple[float, ...]
    rhos: tuple[float, ...]


def curvature_ratio(
    theta: Signal,
    sigma: float,
    n_probe: int,
    seed: int,
    group: str = CONTINUOUS,
    n_mc: int = 2 * 10**4,
    K_quad: int = 128,
) -> CurvatureReport:
    """Probe the curvature of the divergence around ``theta``.

    Probes live in the projection image of the signal's own support
    (DC included); probes at orbit distance ~0 are skipped.  The ratio
    floor exhibits the noise-scaling of the local curvature; no constant
    is asserted.
    """
    if n_probe < 1:
        raise InvalidArgument("n_probe must be >= 1")
    rng = child_rng(seed, "curvature")
    half = theta.L // 2
    supp = list(theta.positive_support())
    ratios: list[float] = []
    rhos: list[float] = []
    argmin = None
    best = math.inf
    attempts = 0
    while len(ratios) < n_probe and attempts < 20 * n_probe:
        attempts += 1
        fourier = theta.fourier.copy()
        near = rng.random() < 0.5
        for j in supp:
            mag = abs(fourier[half + j])
            if near:
                mag *= 1.0 + 0.1 * rng.standard_normal()
                phase = np.angle(fourier[half + j]) + 0.35 * rng.standard_normal()
            else:
                mag *= rng.uniform(0.6, 1.4)
                phase = rng.uniform(0.0, 2 * np.pi)
            fourier[half + j] = mag * np.exp(1j * phase)
            fourier[half - j] = np.conj(fourier[half + j])
        fourier[half] = theta.fourier[half].real + 0.1 * rng.standard_normal()
        probe = Signal.from_fourier(fourier)
        rho = orbit_distance(theta, probe, group)
        if rho < 1e-6:
            continue
        est = kl_monte_carlo(
            theta, probe, sigma, n_mc, K_quad, seed=int(rng.integers(2**62)), group=group
        )
        ratio = est.mean / rho**2
        ratios.append(ratio)
        rhos.append(rho)
        if ratio < best:
            best = ratio
            argmin = probe
    if argmin is None:
        raise InvalidArgument("no probe with positive orbit distance was generated")
    return CurvatureReport(min_ratio=best, argmin=argmin, ratios=tuple(ratios), rhos=tuple(rhos))
