"""Signals in the Fourier domain, shift-group actions, and orbit geometry.

Conventions
-----------
A signal is a real vector ``theta`` of odd length ``L`` together with its
unitary discrete Fourier transform

    hat(theta)_j = (1/sqrt(L)) * sum_{k=1..L} exp(2*pi*i*j*k/L) * theta_k

indexed by ``j = -floor(L/2), ..., floor(L/2)`` and stored centered, i.e.
position ``p`` of the ``fourier`` array holds coefficient ``j = p - L//2``.
Realness of the signal is equivalent to conjugate symmetry
``fourier[-j] == conj(fourier[j])``, which every constructor enforces.

Two groups act on signals by phase shifts of the Fourier coefficients:
the full circle (coefficient ``j`` multiplied by ``z**j`` with ``|z| = 1``)
and its cyclic subgroup of ``L``-th roots of unity, which on the value
side is a circular shift of the coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable

import numpy as np

from .errors import InvalidArgument
from .rng import child_rng

CONTINUOUS = "continuous"
DISCRETE = "discrete"
GROUP_KINDS = (CONTINUOUS, DISCRETE)

#: Magnitude below which a Fourier coefficient counts as zero (support checks).
ZERO_TOL = 1e-12

#: Largest supported signal length; the orbit-distance grid is sized for this.
MAX_L = 64

#: Grid resolution used to isolate the global basin of the orbit correlation.
ORBIT_GRID = 4096


def _check_length(L: int) -> int:
    L = int(L)
    if L <= 0 or L % 2 == 0:
        raise InvalidArgument(f"signal length must be odd and positive, got {L}")
    if L > MAX_L:
        raise InvalidArgument(f"signal length {L} exceeds supported maximum {MAX_L}")
    return L


def freq_indices(L: int) -> np.ndarray:
    """Centered frequency indices -L//2 .. L//2."""
    half = L // 2
    return np.arange(-half, half + 1)


@lru_cache(maxsize=None)
def dft_matrix(L: int) -> np.ndarray:
    """Unitary DFT matrix F with F[j, k] = exp(2*pi*i*j*(k+1)/L)/sqrt(L).

    Rows follow the centered frequency order of :func:`freq_indices`;
    columns follow value positions 0..L-1 (holding theta_1..theta_L).
    """
    L = _check_length(L)
    j = freq_indices(L)[:, None]
    k = np.arange(1, L + 1)[None, :]
    F = np.exp(2j * np.pi * j * k / L) / math.sqrt(L)
    F.setflags(write=False)
    return F


def dft(values: np.ndarray) -> np.ndarray:
    """Unitary DFT of a real vector, centered index order.

    Raises
    ------
    InvalidArgument
        If the length is even or zero.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1:
        raise InvalidArgument("dft expects a one-dimensional vector")
    L = _check_length(values.shape[0])
    return dft_matrix(L) @ values


def idft(fourier: np.ndarray) -> np.ndarray:
    """Inverse of :func:`dft`; returns the real value vector."""
    fourier = np.asarray(fourier, dtype=complex)
    L = _check_length(fourier.shape[0])
    values = dft_matrix(L).conj().T @ fourier
    return values.real


def dft_rows(rows: np.ndarray) -> np.ndarray:
    """DFT applied to each row of an (n, L) real matrix."""
    rows = np.asarray(rows, dtype=float)
    L = _check_length(rows.shape[1])
    return rows @ dft_matrix(L).T


def _symmetrize(fourier: np.ndarray) -> np.ndarray:
    # Average with the mirrored conjugate so conjugate symmetry is exact.
    return 0.5 * (fourier + fourier[::-1].conj())


@dataclass(frozen=True, eq=False)
class Signal:
    """Immutable real signal with its centered unitary DFT.

    Use :meth:`from_values` or :meth:`from_fourier`; the raw constructor
    assumes the two representations are already consistent.
    """

    values: np.ndarray
    fourier: np.ndarray

    def __post_init__(self):
        self.values.setflags(write=False)
        self.fourier.setflags(write=False)

    @classmethod
    def from_values(cls, values) -> "Signal":
        values = np.asarray(values, dtype=float).copy()
        if values.ndim != 1:
            raise InvalidArgument("signal values must be a one-dimensional vector")
        if not np.all(np.isfinite(values)):
            raise InvalidArgument("signal values must be finite")
        return cls(values=values, fourier=dft(values))

    @classmethod
    def from_fourier(cls, fourier, atol: float = 1e-9) -> "Signal":
        """Build a signal from centered Fourier coefficients.

        The coefficients must be conjugate-symmetric within ``atol`` (they
        are exactly symmetrized before the inverse transform).
        """
        fourier = np.asarray(fourier, dtype=complex).copy()
        if fourier.ndim != 1:
            raise InvalidArgument("fourier coefficients must be a one-dimensional vector")
        _check_length(fourier.shape[0])
        asym = np.max(np.abs(fourier - fourier[::-1].conj()))
        scale = max(1.0, float(np.max(np.abs(fourier)))) if fourier.size else 1.0
        if asym > atol * scale:
            raise InvalidArgument(
                f"coefficients violate conjugate symmetry (asymmetry {asym:.3e})"
            )
        fourier = _symmetrize(fourier)
        return cls(values=idft(fourier), fourier=fourier)

    @property
    def L(self) -> int:
        return self.values.shape[0]

    def coeff(self, j: int) -> complex:
        """Fourier coefficient at signed index j."""
        half = self.L // 2
        if not -half <= j <= half:
            raise InvalidArgument(f"index {j} out of range for L={self.L}")
        return complex(self.fourier[j + half])

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def positive_support(self, tol: float = ZERO_TOL) -> "SupportSet":
        """Indices j >= 1 whose Fourier coefficient is nonzero (within tol)."""
        half = self.L // 2
        idx = [j for j in range(1, half + 1) if abs(self.coeff(j)) > tol]
        return SupportSet.of(idx)

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"Signal(L={self.L}, norm={self.norm:.6g})"


@dataclass(frozen=True)
class GroupElement:
    """A phase shift: either a circle element or a cyclic coordinate shift.

    The acting phase is ``z = exp(-i*angle)``; coefficient ``j`` of a
    signal picks up ``z**j``.  A discrete element with shift ``k`` on a
    length-``L`` signal acts identically to the continuous element with
    angle ``2*pi*k/L``.
    """

    kind: str
    angle: float = 0.0
    shift: int = 0
    L: int = 0

    @classmethod
    def continuous(cls, angle: float) -> "GroupElement":
        return cls(kind=CONTINUOUS, angle=float(angle) % (2 * math.pi))

    @classmethod
    def discrete(cls, shift: int, L: int) -> "GroupElement":
        L = _check_length(L)
        shift = int(shift) % L
        return cls(kind=DISCRETE, angle=2 * math.pi * shift / L, shift=shift, L=L)

    def phases(self, L: int) -> np.ndarray:
        """The multipliers z**j over the centered index range."""
        j = freq_indices(L)
        if self.kind == DISCRETE:
            if self.L != L:
                raise InvalidArgument(f"shift defined for L={self.L}, signal has L={L}")
            # exact roots of unity: reduce k*j mod L before exponentiating
            return np.exp(-2j * np.pi * ((self.shift * j) % L) / L)
        return np.exp(-1j * self.angle * j)


def apply_shift(theta: Signal, g: GroupElement) -> Signal:
    """Act on a signal by a group element; preserves realness and norm."""
    shifted = theta.fourier * g.phases(theta.L)
    return Signal(values=idft(_symmetrize(shifted)), fourier=_symmetrize(shifted))


@dataclass(frozen=True)
class SupportSet:
    """A set of positive Fourier indices, kept sorted."""

    indices: tuple[int, ...]

    @classmethod
    def of(cls, indices: Iterable[int]) -> "SupportSet":
        idx = sorted({int(j) for j in indices})
        if any(j < 1 for j in idx):
            raise InvalidArgument(f"support indices must be >= 1, got {idx}")
        return cls(indices=tuple(idx))

    def check_against(self, L: int) -> None:
        half = _check_length(L) // 2
        if self.indices and self.indices[-1] > half:
            raise InvalidArgument(
                f"support index {self.indices[-1]} exceeds floor(L/2)={half}"
            )

    def __iter__(self):
        return iter(self.indices)

    def __len__(self) -> int:
        return len(self.indices)

    def __contains__(self, j: int) -> bool:
        return j in self.indices


@dataclass(frozen=True)
class SignalClassParams:
    """Parameters of the signal class: max support index ``s``, coefficient
    floor ``c0``, and the norm band ``[1/c, c]``."""

    s: int
    c0: float = 0.25
    c: float = 2.0

    def __post_init__(self):
        if self.s < 0:
            raise InvalidArgument(f"s must be nonnegative, got {self.s}")
        if self.c0 <= 0:
            raise InvalidArgument(f"c0 must be positive, got {self.c0}")
        if self.c <= 1:
            raise InvalidArgument(f"c must exceed 1, got {self.c}")


@dataclass(frozen=True)
class ClassValidation:
    """Per-condition report from :func:`validate_class`."""

    norm_ok: bool
    support_ok: bool
    magnitude_ok: bool
    norm: float
    support: SupportSet
    min_nonzero: float | None

    @property
    def passed(self) -> bool:
        return self.norm_ok and self.support_ok and self.magnitude_ok


def validate_class(theta: Signal, params: SignalClassParams) -> ClassValidation:
    """Check membership of a signal in the class (norm band, support within
    [1..s], nonzero coefficient magnitudes >= c0)."""
    half = theta.L // 2
    if params.s > half:
        raise InvalidArgument(f"s={params.s} exceeds floor(L/2)={half} for L={theta.L}")
    supp = theta.positive_support()
    norm = theta.norm
    norm_ok = 1.0 / params.c <= norm <= params.c
    support_ok = all(j <= params.s for j in supp)
    mags = [abs(theta.coeff(j)) for j in supp]
    min_nonzero = min(mags) if mags else None
    magnitude_ok = min_nonzero is None or min_nonzero >= params.c0
    return ClassValidation(
        norm_ok=norm_ok,
        support_ok=support_ok,
        magnitude_ok=magnitude_ok,
        norm=norm,
        support=supp,
        min_nonzero=min_nonzero,
    )


def project_support(phi: Signal, S: SupportSet | Iterable[int]) -> Signal:
    """Zero all Fourier coefficients outside S, -S, and the DC index.

    Idempotent; the DC coefficient is always retained.
    """
    if not isinstance(S, SupportSet):
        S = SupportSet.of(S)
    S.check_against(phi.L)
    half = phi.L // 2
    keep = np.zeros(phi.L, dtype=bool)
    keep[half] = True
    for j in S:
        keep[half + j] = True
        keep[half - j] = True
    fourier = np.where(keep, phi.fourier, 0.0 + 0.0j)
    return Signal(values=idft(fourier), fourier=fourier)


def _correlation_coeffs(theta: Signal, phi: Signal) -> np.ndarray:
    # c_j = conj(theta_hat_j) * phi_hat_j; <theta, G_z phi> = sum_j c_j z^j
    return theta.fourier.conj() * phi.fourier


def _correlation_at(c: np.ndarray, L: int, alphas: np.ndarray) -> np.ndarray:
    half = L // 2
    # conjugate symmetry of c makes the sum real: c_0 + 2 Re sum_{j>=1} c_j e^{-i j a}
    pos = c[half + 1 :]
    phases = np.exp(-1j * np.outer(np.arange(1, half + 1), alphas))
    return c[half].real + 2 * np.real(pos @ phases)


def _golden_max(f, lo: float, hi: float, tol: float = 1e-12) -> float:
    """Golden-section maximization of a unimodal bracket to width <= tol."""
    invphi = (math.sqrt(5) - 1) / 2
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
        else:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
    return 0.5 * (lo + hi)


def orbit_distance(theta: Signal, phi: Signal, group: str = CONTINUOUS) -> float:
    """Minimum Euclidean distance from ``theta`` to the group orbit of ``phi``.

    Continuous case: the correlation ``<theta, G_z phi>`` is a trigonometric
    polynomial of degree ``L//2`` in the angle; it is maximized on a dense
    grid of ``ORBIT_GRID`` angles and the winning bracket is refined by
    golden-section search.  Distances are exact to ~1e-8 near zero (the
    angle of a smooth maximum cannot be located better than sqrt(eps) by
    value comparisons).  Discrete case: exact minimum over the L shifts.
    """
    if group not in GROUP_KINDS:
        raise InvalidArgument(f"unknown group kind {group!r}")
    if theta.L != phi.L:
        raise InvalidArgument(f"length mismatch: {theta.L} vs {phi.L}")
    L = theta.L
    c = _correlation_coeffs(theta, phi)

    if group == DISCRETE:
        alphas = 2 * np.pi * np.arange(L) / L
        corr = _correlation_at(c, L, alphas)
        best_alpha = float(alphas[int(np.argmax(corr))])
    else:
        alphas = 2 * np.pi * np.arange(ORBIT_GRID) / ORBIT_GRID
        corr = _correlation_at(c, L, alphas)
        i = int(np.argmax(corr))
        best_alpha = float(alphas[i])
        spread = float(np.max(corr) - np.min(corr))
        if spread > 1e-15 * max(1.0, abs(float(corr[i]))):
            step = 2 * np.pi / ORBIT_GRID

            def val(alpha: float) -> float:
                return float(_correlation_at(c, L, np.array([alpha]))[0])

            refined = _golden_max(val, alphas[i] - step, alphas[i] + step)
            if val(refined) >= float(corr[i]):
                best_alpha = refined

    # evaluate the gap coefficient-wise at the winning angle: unlike
    # |theta|^2 + |phi|^2 - 2*corr this does not cancel near zero
    j = freq_indices(L)
    gap = theta.fourier - np.exp(-1j * best_alpha * j) * phi.fourier
    return float(np.linalg.norm(gap))


def random_signal(params: SignalClassParams, L: int, seed: int) -> Signal:
    """Draw a class member with full support on [1..s], deterministically.

    Moduli are drawn in ``[c0, 1.25*c0]``; the DC coefficient is then set so
    the total norm lands inside the class norm band.

    Raises
    ------
    InvalidArgument
        If the class is infeasible for this L (e.g. ``s*c0**2`` too large
        for the norm ceiling).
    """
    L = _check_length(L)
    half = L // 2
    if params.s > half:
        raise InvalidArgument(f"s={params.s} exceeds floor(L/2)={half} for L={L}")
    rng = child_rng(seed, "random_signal", L, params.s)

    fourier = np.zeros(L, dtype=complex)
    if params.s > 0:
        moduli = params.c0 * (1.0 + 0.25 * rng.random(params.s))
        phases = rng.uniform(0.0, 2 * np.pi, size=params.s)
        for j, (m, p) in enumerate(zip(moduli, phases), start=1):
            fourier[half + j] = m * np.exp(1j * p)
            fourier[half - j] = np.conj(fourier[half + j])

    ac_norm = float(np.linalg.norm(fourier))
    ceiling = 0.98 * params.c
    floor = max(1.02 / params.c, ac_norm)
    if floor >= ceiling:
        raise InvalidArgument(
            f"class infeasible: support power {ac_norm:.3g} vs norm band "
            f"[{1 / params.c:.3g}, {params.c:.3g}]"
        )
    target = rng.uniform(floor, ceiling)
    dc = math.sqrt(max(target**2 - ac_norm**2, 0.0))
    fourier[half] = dc * rng.choice([-1.0, 1.0])
    return Signal.from_fourier(fourier)
