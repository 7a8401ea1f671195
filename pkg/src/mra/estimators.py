"""Estimation procedures: spectrum thresholding, constrained EM, and the
closed-form small-support estimators.

The likelihood of the model is a Haar mixture of Gaussians over the orbit
of the candidate signal.  ``em_fit`` maximizes the quadrature-discretized
likelihood (equal-weight mixture over K circle angles) by EM with random
phase restarts, constrained to a Fourier support; ``modified_mle`` chains
support estimation on one half of the sample with the constrained EM fit
on the other half.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .divergence import DEFAULT_K_QUAD, group_angles, log_density_rows
from .errors import InvalidArgument
from .rng import child_rng
from .sampling import SampleBatch
from .signals import Signal, SupportSet, dft_rows

_CHUNK_ROWS = 1 << 14


def spectrum_stats(batch: SampleBatch) -> np.ndarray:
    """Debiased power spectrum M_j over j = 1..floor(L/2).

    ``M_j`` averages ``|Y_hat_j|^2`` over the batch and subtracts the
    known noise power, so its expectation is the squared modulus of the
    signal's j-th Fourier coefficient.
    """
    if batch.n < 1:
        raise InvalidArgument("batch must be nonempty")
    L = batch.config.L
    half = L // 2
    Yf = dft_rows(batch.observations)
    power = np.mean(np.abs(Yf[:, half + 1 :]) ** 2, axis=0)
    return power - batch.config.sigma**2


@dataclass(frozen=True)
class SupportEstimate:
    S: SupportSet
    M: np.ndarray
    threshold: float


def estimate_support(M: np.ndarray, c0: float) -> SupportEstimate:
    """Threshold the debiased spectrum at c0^2/2 (boundary included)."""
    if not c0 > 0:
        raise InvalidArgument(f"c0 must be positive, got {c0}")
    M = np.asarray(M, dtype=float)
    threshold = 0.5 * c0**2
    S = SupportSet.of(j + 1 for j in range(M.size) if M[j] >= threshold)
    return SupportEstimate(S=S, M=M, threshold=threshold)


def log_likelihood(batch: SampleBatch, phi: Signal, K_quad: int = DEFAULT_K_QUAD) -> float:
    """Per-sample mean log likelihood of the batch under ``phi``.

    Includes the Gaussian normalizer, so values are comparable across
    ``phi`` only (the additive constant depends on sigma and L).
    """
    if batch.n < 1:
        raise InvalidArgument("batch must be nonempty")
    dens = log_density_rows(
        batch.observations, phi, batch.config.sigma, K_quad, batch.config.group
    )
    return float(np.mean(dens))


@dataclass(frozen=True)
class EmOptions:
    K_quad: int = DEFAULT_K_QUAD
    restarts: int = 20
    max_iter: int = 500
    tol: float = 1e-9
    c0: float = 0.25
    polish: bool = True


@dataclass(frozen=True, eq=False)
class FitResult:
    estimate: Signal
    loglik: float
    iterations: int
    restarts_used: int
    converged: bool
    support: SupportSet
    loglik_path: tuple[float, ...] = ()


class _EmCore:
    """Shared E-step machinery for one batch and support.

    ``XY`` stacks the real and imaginary parts of the batch's Fourier
    columns at the positive support indices, shape (n, 2P), so the
    correlation with every quadrature shift is a single real matmul.
    The DC coefficient of any iterate is group-invariant and stays
    pinned at the batch grand mean ``dc``.
    """

    def __init__(self, XY, dc, mean_norm_sq, sigma, alphas, pos, L):
        self.XY = XY
        self.dc = dc
        self.n = XY.shape[0]
        self.P = len(pos)
        self.K = alphas.size
        self.sigma_sq = sigma**2
        self.const = -0.5 * L * math.log(2 * math.pi * self.sigma_sq)
        self.mean_norm_sq = mean_norm_sq
        # phase tables: Eneg[p, k] = exp(-i j_p alpha_k); cosT/sinT give
        # the inverse shifts used when averaging the observations
        self.Eneg = np.exp(-1j * np.outer(pos, alphas))
        self.cosT = np.ascontiguousarray(self.Eneg.real.T)
        self.sinT = np.ascontiguousarray(-self.Eneg.imag.T)

    def ll_and_target(self, phi: np.ndarray) -> tuple[float, np.ndarray]:
        """Log likelihood at ``phi`` plus the EM update target (the
        responsibility-weighted average of the un-shifted observations)."""
        sigma_sq = self.sigma_sq
        phi_norm_sq = self.dc**2 + 2 * float(np.sum(np.abs(phi) ** 2))
        # logits_ik = (2/s^2) Re sum_p conj(Yhat_ip) phi_p e^{-i j_p a_k}
        D = phi[:, None] * self.Eneg
        UV = np.vstack([D.real, D.imag]) * (2.0 / sigma_sq)
        numer = np.zeros(self.P, dtype=complex)
        ll_sum = 0.0
        P = self.P
        for lo in range(0, self.n, _CHUNK_ROWS):
            XYc = self.XY[lo : lo + _CHUNK_ROWS]
            logits = XYc @ UV
            m = logits.max(axis=1)
            np.subtract(logits, m[:, None], out=logits)
            np.exp(logits, out=logits)
            Z = logits.sum(axis=1)
            ll_sum += float(np.sum(np.log(Z) + m))
            logits /= Z[:, None]
            # B_ip = sum_k w_ik e^{+i j_p a_k}; target_p = mean_i Yhat_ip B_ip
            Bre = logits @ self.cosT
            Bim = logits @ self.sinT
            X = XYc[:, :P]
            Y = XYc[:, P:]
            numer += (
                np.einsum("ip,ip->p", X, Bre)
                - np.einsum("ip,ip->p", Y, Bim)
                + 1j * (np.einsum("ip,ip->p", X, Bim) + np.einsum("ip,ip->p", Y, Bre))
            )
        ll = (
            ll_sum / self.n
            + self.dc**2 / sigma_sq  # DC correlation term; phi's DC is the grand mean
            - math.log(self.K)
            + self.const
            - (self.mean_norm_sq + phi_norm_sq) / (2 * sigma_sq)
        )
        return ll, numer / self.n

    def gradient(self, phi: np.ndarray) -> np.ndarray:
        """Loglik gradient in the real coordinates (Re, Im of each support
        coefficient); the mixture gradient is (EM target - phi)/sigma^2."""
        _, target = self.ll_and_target(phi)
        g = 2.0 * (target - phi) / self.sigma_sq
        return np.concatenate([g.real, g.imag])


def _em_single(core: _EmCore, init: np.ndarray, opts: EmOptions) -> tuple[np.ndarray, list[float], bool]:
    """Plain EM iteration from one initialization.

    Stops when the relative loglik change drops below ``tol``; the loglik
    sequence is non-decreasing by the EM ascent property.
    """
    phi = np.asarray(init, dtype=complex)
    path: list[float] = []
    converged = False
    for _ in range(opts.max_iter):
        ll, target = core.ll_and_target(phi)
        path.append(ll)
        if len(path) > 1:
            prev = path[-2]
            if abs(ll - prev) < opts.tol * max(1.0, abs(prev)):
                converged = True
                break
        if len(path) == opts.max_iter:
            break  # keep phi aligned with the recorded loglik
        phi = target
    return phi, path, converged


def _newton_polish(
    core: _EmCore, phi: np.ndarray, path: list[float], max_steps: int = 12
) -> np.ndarray:
    """Push an EM iterate to the constrained likelihood maximizer.

    EM is gradient ascent with the fixed step sigma^2, so its soft
    directions can contract impractically slowly at high noise.  The
    support space is tiny (2P real parameters), which makes a damped
    Newton step with a finite-difference Hessian of the analytic gradient
    cheap.  Steps are accepted only when the loglik does not decrease, so
    the recorded path stays monotone; on any failure the current iterate
    is kept.
    """
    P = core.P
    if P == 0:
        return phi
    dim = 2 * P

    def unpack(u: np.ndarray) -> np.ndarray:
        return u[:P] + 1j * u[P:]

    u = np.concatenate([phi.real, phi.imag])
    ll_here = path[-1]
    H = None
    for step_idx in range(max_steps):
        g = core.gradient(unpack(u))
        if np.max(np.abs(g)) < 1e-12:
            break
        if H is None or step_idx % 3 == 0:
            # finite-difference Hessian of the analytic gradient; the final
            # basin is near-quadratic, so it is reused across a few steps
            h = 1e-5 * max(1.0, float(np.max(np.abs(u))))
            H = np.empty((dim, dim))
            for d in range(dim):
                e = np.zeros(dim)
                e[d] = h
                H[:, d] = (core.gradient(unpack(u + e)) - core.gradient(unpack(u - e))) / (2 * h)
            H = 0.5 * (H + H.T)
        # solve (-H + ridge) step = g, escalating the ridge until ascent
        ridge = 0.0
        accepted = False
        for _attempt in range(8):
            try:
                step = np.linalg.solve(-H + ridge * np.eye(dim), g)
            except np.linalg.LinAlgError:
                ridge = max(10 * ridge, 1e-8)
                continue
            candidate = u + step
            ll_cand, _ = core.ll_and_target(unpack(candidate))
            if math.isfinite(ll_cand) and ll_cand >= ll_here - 1e-12:
                u = candidate
                improved = ll_cand - ll_here
                ll_here = ll_cand
                path.append(ll_here)
                accepted = True
                if improved < 1e-13 * max(1.0, abs(ll_here)):
                    return unpack(u)
                break
            ridge = max(10 * ridge, 1e-6 * float(np.abs(np.diag(H)).max() + 1.0))
        if not accepted:
            break
    return unpack(u)


def em_fit(
    batch: SampleBatch,
    S: SupportSet,
    opts: EmOptions | None = None,
    seed: int = 0,
) -> FitResult:
    """Maximum-likelihood fit constrained to the Fourier support S.

    EM on the equal-weight mixture over K quadrature shifts: responsibilities
    are softmax correlations, the M-step averages the un-shifted observations
    in the Fourier domain and projects onto the support.  Moduli are
    initialized from the debiased spectrum and phases are re-randomized on
    every restart; the best run by final log likelihood wins, ties broken
    toward the lowest restart index.
    """
    if batch.n < 1:
        raise InvalidArgument("batch must be nonempty")
    if not isinstance(S, SupportSet):
        S = SupportSet.of(S)
    opts = opts or EmOptions()
    config = batch.config
    S.check_against(config.L)
    L, half = config.L, config.L // 2
    pos = list(S)

    Yf = dft_rows(batch.observations)
    Ypos = Yf[:, [half + j for j in pos]]
    XY = np.ascontiguousarray(np.hstack([Ypos.real, Ypos.imag]))
    mean_norm_sq = float(np.mean(np.sum(batch.observations**2, axis=1)))
    alphas = group_angles(L, config.group, opts.K_quad)
    M = spectrum_stats(batch)
    dc0 = float(np.mean(Yf[:, half].real))
    init_moduli = np.array([math.sqrt(max(M[j - 1], 0.5 * opts.c0**2)) for j in pos])
    core = _EmCore(XY, dc0, mean_norm_sq, config.sigma, alphas, pos, L)

    best: tuple[float, int] | None = None
    best_fit: tuple[np.ndarray, list[float], bool] | None = None
    for r in range(opts.restarts):
        rng = child_rng(seed, "em_restart", r)
        phases = rng.uniform(0.0, 2 * np.pi, size=len(pos))
        if pos:
            # stagger the last phase across restarts: each restart is still
            # uniform, but jointly they stripe the unidentified direction
            phases[-1] = (phases[-1] / opts.restarts + 2 * np.pi * r / opts.restarts) % (
                2 * np.pi
            )
        init = init_moduli * np.exp(1j * phases)
        coeffs, path, converged = _em_single(core, init, opts)
        if opts.polish:
            coeffs = _newton_polish(core, coeffs, path)
        ll = path[-1]
        if best is None or ll > best[0] + 1e-12:
            best = (ll, r)
            best_fit = (coeffs, path, converged)

    coeffs, path, converged = best_fit
    fourier = np.zeros(L, dtype=complex)
    fourier[half] = dc0
    for idx, j in enumerate(pos):
        fourier[half + j] = coeffs[idx]
        fourier[half - j] = np.conj(coeffs[idx])
    return FitResult(
        estimate=Signal.from_fourier(fourier),
        loglik=path[-1],
        iterations=len(path),
        restarts_used=opts.restarts,
        converged=converged,
        support=S,
        loglik_path=tuple(path),
    )


def modified_mle(
    batch: SampleBatch,
    c0: float,
    opts: EmOptions | None = None,
    seed: int = 0,
) -> FitResult:
    """Two-stage estimator: support from the first half of the sample,
    constrained EM on the second half.

    The split is 50/50 in sample order; for odd batch sizes the first
    half receives the extra observation.
    """
    if batch.n < 2:
        raise InvalidArgument("modified MLE needs at least two observations")
    opts = opts or EmOptions()
    n1 = (batch.n + 1) // 2
    first = SampleBatch(config=batch.config, observations=batch.observations[:n1].copy())
    second = SampleBatch(config=batch.config, observations=batch.observations[n1:].copy())
    support = estimate_support(spectrum_stats(first), c0)
    return em_fit(second, support.S, replace(opts, c0=c0), seed=seed)


def estimate_s0(batch: SampleBatch) -> Signal:
    """Constant-signal estimator: grand mean of all n*L scalar entries."""
    if batch.n < 1:
        raise InvalidArgument("batch must be nonempty")
    grand = float(np.mean(batch.observations))
    return Signal.from_values(np.full(batch.config.L, grand))


def estimate_s1(batch: SampleBatch, c0: float) -> Signal:
    """Closed-form estimator for support within {1}.

    Combines the grand mean with the square root of the thresholded
    debiased first spectral coefficient, placed on the cosine harmonic.
    """
    if batch.n < 1:
        raise InvalidArgument("batch must be nonempty")
    if not c0 > 0:
        raise InvalidArgument(f"c0 must be positive, got {c0}")
    L = batch.config.L
    grand = float(np.mean(batch.observations))
    M1 = float(spectrum_stats(batch)[0])
    M1_tilde = M1 if M1 >= 0.5 * c0**2 else 0.0
    k = np.arange(1, L + 1)
    u = 2.0 / math.sqrt(L) * np.cos(2 * np.pi * k / L)
    return Signal.from_values(grand + math.sqrt(M1_tilde) * u)
