"""Invariant moment tensors of shifted signals, and their estimation.

The order-m moment tensor of the shifted-signal distribution is diagonal
in the Fourier basis: entry ``(j_1, ..., j_m)`` equals the product of the
Fourier coefficients when the indices sum to zero (continuous group) or
to zero mod L (discrete group), and vanishes otherwise.  Tensors are
stored sparsely, keyed by sorted multi-index; Hilbert-Schmidt norms weight
each key by its number of orderings, which matches the norm of the dense
symmetric tensor in the value domain because the DFT is unitary.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from functools import reduce
from itertools import combinations_with_replacement
from typing import Mapping

import numpy as np

from .errors import InvalidArgument, ResourceLimit
from .sampling import SampleBatch
from .signals import (
    CONTINUOUS,
    DISCRETE,
    GROUP_KINDS,
    ZERO_TOL,
    Signal,
    dft_matrix,
    freq_indices,
)

#: Ordered-tuple enumeration guard for moment_tensor.
ENUMERATION_LIMIT = 10**8


def _multiplicity(key: tuple[int, ...]) -> int:
    """Number of ordered tuples realizing a sorted multi-index."""
    counts = Counter(key)
    out = math.factorial(len(key))
    for c in counts.values():
        out //= math.factorial(c)
    return out


@dataclass(frozen=True)
class MomentTensor:
    """Sparse symmetric moment tensor in the Fourier basis.

    ``entries`` maps sorted index tuples (each satisfying the zero-sum
    constraint of the group) to complex values; ``hs_norm_sq`` is the
    squared Hilbert-Schmidt norm over all ordered tuples.
    """

    m: int
    L: int
    group: str
    entries: Mapping[tuple[int, ...], complex]
    hs_norm_sq: float

    def norm(self) -> float:
        return math.sqrt(max(self.hs_norm_sq, 0.0))


def _active_indices(theta: Signal, tol: float = ZERO_TOL) -> list[int]:
    half = theta.L // 2
    return [j for j in range(-half, half + 1) if abs(theta.coeff(j)) > tol]


def _zero_sum(total: int, L: int, group: str) -> bool:
    return total % L == 0 if group == DISCRETE else total == 0


def _tensor_entries(theta: Signal, m: int, group: str) -> dict[tuple[int, ...], complex]:
    active = _active_indices(theta)
    if active and len(active) ** m > ENUMERATION_LIMIT:
        raise ResourceLimit(
            f"order-{m} tensor over {len(active)} active indices exceeds the "
            f"enumeration guard of {ENUMERATION_LIMIT:.0e} ordered tuples"
        )
    coeff = {j: theta.coeff(j) for j in active}
    entries: dict[tuple[int, ...], complex] = {}
    for key in combinations_with_replacement(active, m):
        if _zero_sum(sum(key), theta.L, group):
            value = 1.0 + 0.0j
            for j in key:
                value *= coeff[j]
            entries[key] = value
    return entries


def moment_tensor(theta: Signal, m: int, group: str = CONTINUOUS) -> MomentTensor:
    """Exact order-m moment tensor of the orbit of ``theta``."""
    if m < 1:
        raise InvalidArgument(f"tensor order must be >= 1, got {m}")
    if group not in GROUP_KINDS:
        raise InvalidArgument(f"unknown group kind {group!r}")
    entries = _tensor_entries(theta, m, group)
    norm_sq = sum(_multiplicity(k) * abs(v) ** 2 for k, v in entries.items())
    return MomentTensor(m=m, L=theta.L, group=group, entries=entries, hs_norm_sq=norm_sq)


def delta_norm(theta: Signal, phi: Signal, m: int, group: str = CONTINUOUS) -> float:
    """Hilbert-Schmidt norm of the difference of two order-m moment tensors."""
    if theta.L != phi.L:
        raise InvalidArgument(f"length mismatch: {theta.L} vs {phi.L}")
    a = moment_tensor(theta, m, group).entries
    b = moment_tensor(phi, m, group).entries
    total = 0.0
    for key in a.keys() | b.keys():
        diff = a.get(key, 0.0 + 0.0j) - b.get(key, 0.0 + 0.0j)
        total += _multiplicity(key) * abs(diff) ** 2
    return math.sqrt(max(total, 0.0))


def matched_pair_continuous(
    s: int, delta: float, r: float = 0.5, L: int | None = None
) -> tuple[Signal, Signal]:
    """Two distinct orbits whose continuous moments agree through order 2s-2.

    Both signals put modulus ``r`` on Fourier indices ``+-(s-1)`` and
    ``+-s``; the first has coefficient ``s`` rotated by ``exp(i*delta)``.
    """
    if L is None:
        L = 2 * s + 1
    half = L // 2
    if not 2 <= s <= half:
        raise InvalidArgument(f"s must satisfy 2 <= s <= floor(L/2)={half}, got {s}")
    if abs(delta) > math.pi:
        raise InvalidArgument(f"|delta| must be <= pi, got {delta}")
    if r <= 0:
        raise InvalidArgument(f"modulus r must be positive, got {r}")

    phi_hat = np.zeros(L, dtype=complex)
    for j in (s - 1, s):
        phi_hat[half + j] = r
        phi_hat[half - j] = r
    theta_hat = phi_hat.copy()
    theta_hat[half + s] = r * np.exp(1j * delta)
    theta_hat[half - s] = r * np.exp(-1j * delta)
    return Signal.from_fourier(theta_hat), Signal.from_fourier(phi_hat)


def matched_pair_discrete(L: int, delta: float) -> tuple[Signal, Signal]:
    """Pure-harmonic pair whose discrete moments agree through order L-1.

    Requires ``|delta| < pi/L`` so the nearest cyclic shift of one signal
    to the other is the identity.
    """
    if L < 3 or L % 2 == 0:
        raise InvalidArgument(f"L must be odd and >= 3, got {L}")
    if not abs(delta) < math.pi / L:
        raise InvalidArgument(f"|delta| must be < pi/L = {math.pi / L:.4g}, got {delta}")
    half = L // 2
    phi_hat = np.zeros(L, dtype=complex)
    phi_hat[half + 1] = 1.0
    phi_hat[half - 1] = 1.0
    theta_hat = np.zeros(L, dtype=complex)
    theta_hat[half + 1] = np.exp(1j * delta)
    theta_hat[half - 1] = np.exp(-1j * delta)
    return Signal.from_fourier(theta_hat), Signal.from_fourier(phi_hat)


def moment_tensor_dense(theta: Signal, m: int, group: str = CONTINUOUS) -> np.ndarray:
    """Exact moment tensor as a dense array in the value domain.

    Intended for small L and m (storage is L**m); used to validate the
    sparse Fourier representation and the Hermite estimates.
    """
    if m < 1:
        raise InvalidArgument(f"tensor order must be >= 1, got {m}")
    L = theta.L
    if L**m > 10**7:
        raise ResourceLimit(f"dense order-{m} tensor for L={L} is too large")
    j = freq_indices(L)
    fourier_tensor = reduce(np.multiply.outer, [theta.fourier] * m)
    index_sum = reduce(np.add.outer, [j] * m)
    mask = (index_sum % L == 0) if group == DISCRETE else (index_sum == 0)
    fourier_tensor = np.where(mask, fourier_tensor, 0.0 + 0.0j)

    # change of basis back to the value domain, one axis at a time
    Finv = dft_matrix(L).conj().T
    out = fourier_tensor
    for _ in range(m):
        out = np.tensordot(out, Finv, axes=(0, 1))
    return out.real


def hermite_moment_estimate(
    batch: SampleBatch, m: int, return_stderr: bool = False
) -> np.ndarray | tuple[np.ndarray, np.ndarray]:
    """Unbiased estimate of the order-m moment tensor from noisy samples.

    Averages the sigma-scaled multivariate Hermite tensor of each
    observation; supported for m in {1, 2, 3} (dense storage).  With
    ``return_stderr=True`` also returns the entrywise standard error.
    """
    if batch.n < 1:
        raise InvalidArgument("batch must be nonempty")
    if m not in (1, 2, 3):
        raise InvalidArgument(f"hermite estimation supports m in {{1, 2, 3}}, got {m}")
    if return_stderr and batch.n < 2:
        raise InvalidArgument("stderr requires at least two samples")

    Y = batch.observations
    n, L = Y.shape
    sigma_sq = batch.config.sigma**2
    shape = (L,) * m
    acc = np.zeros(shape)
    acc_sq = np.zeros(shape)
    eye = np.eye(L)

    chunk = max(1, (1 << 21) // L**m)
    for lo in range(0, n, chunk):
        yb = Y[lo : min(lo + chunk, n)]
        if m == 1:
            t = yb
        elif m == 2:
            t = np.einsum("ia,ib->iab", yb, yb) - sigma_sq * eye
        else:
            t = np.einsum("ia,ib,ic->iabc", yb, yb, yb)
            t -= sigma_sq * (
                np.einsum("ia,bc->iabc", yb, eye)
                + np.einsum("ib,ac->iabc", yb, eye)
                + np.einsum("ic,ab->iabc", yb, eye)
            )
        acc += t.sum(axis=0)
        acc_sq += (t**2).sum(axis=0)

    mean = acc / n
    if not return_stderr:
        return mean
    var = (acc_sq - n * mean**2) / (n - 1)
    stderr = np.sqrt(np.maximum(var, 0.0) / n)
    return mean, stderr
