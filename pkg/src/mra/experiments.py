"""Hard-pair constructions and the Monte-Carlo risk/rate harness.

``lower_bound_pair`` reproduces the moment-matched pairs that drive the
minimax lower bounds (one construction per support regime s=0, s=1,
s>=2, plus the discrete pure-harmonic variant).  ``risk_mc`` measures
the orbit-distance risk of an estimator over seeded independent trials
and ``rate_curve`` fits log-log scaling exponents over a grid of sample
sizes or noise levels.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument
from .estimators import EmOptions, em_fit, estimate_s0, estimate_s1, modified_mle
from .moments import matched_pair_continuous, matched_pair_discrete
from .rng import child_rng
from .sampling import ModelConfig, sample
from .signals import CONTINUOUS, DISCRETE, Signal, SupportSet, orbit_distance

ESTIMATORS = ("modified_mle", "em_oracle", "s0", "s1")


@dataclass(frozen=True, eq=False)
class LowerBoundPair:
    theta: Signal
    phi: Signal
    s: int
    sigma: float
    n: int
    c1: float
    delta: float
    group: str = CONTINUOUS
    kl_budget: float = 0.5


def worst_case_signal(s: int, L: int | None = None) -> Signal:
    """The equal-moduli signal on indices +-(s-1), +-s used by the hard
    constructions; its divergence curvature carries the slow noise scaling."""
    _, phi = matched_pair_continuous(s, 0.0, 0.5, L)
    return phi


def lower_bound_pair(
    s: int, sigma: float, n: int, c1: float = 0.1, L: int | None = None
) -> LowerBoundPair:
    """The two-point construction behind the continuous-model lower bound.

    s=0: a zero signal against a constant one at the detection scale.
    s=1: equal-phase harmonics whose moduli differ by c1*sigma^2/sqrt(2n).
    s>=2: moment-matched pair with phase delta = c1*(sigma^(2s-1)/sqrt(n) ^ 1).
    """
    if s < 0:
        raise InvalidArgument(f"s must be nonnegative, got {s}")
    if not 0 < c1 <= 1:
        raise InvalidArgument(f"c1 must lie in (0, 1], got {c1}")
    if not sigma > 0 or n < 1:
        raise InvalidArgument("sigma must be positive and n >= 1")
    if L is None:
        L = max(2 * s + 1, 5)
    half = L // 2
    if s > half:
        raise InvalidArgument(f"s={s} exceeds floor(L/2)={half}")

    if s == 0:
        theta = Signal.from_values(np.full(L, sigma / math.sqrt(n * L)))
        phi = Signal.from_values(np.zeros(L))
        delta = 0.0
    elif s == 1:
        bump = c1 * sigma**2 / math.sqrt(2 * n)
        base = np.zeros(L, dtype=complex)
        base[half + 1] = base[half - 1] = 1 / math.sqrt(2)
        phi = Signal.from_fourier(base)
        bumped = base.copy()
        bumped[half + 1] = bumped[half - 1] = 1 / math.sqrt(2) + bump
        theta = Signal.from_fourier(bumped)
        delta = 0.0
    else:
        delta = c1 * min(sigma ** (2 * s - 1) / math.sqrt(n), 1.0)
        theta, phi = matched_pair_continuous(s, delta, 0.5, L)
    return LowerBoundPair(
        theta=theta, phi=phi, s=s, sigma=sigma, n=n, c1=c1, delta=delta, group=CONTINUOUS
    )


def lower_bound_pair_discrete(L: int, sigma: float, n: int, c1: float) -> LowerBoundPair:
    """Pure-harmonic pair for the cyclic-shift model; requires c1 < pi/L so
    the identity is the minimizing shift."""
    if not 0 < c1 < math.pi / L:
        raise InvalidArgument(f"c1 must satisfy 0 < c1 < pi/L = {math.pi / L:.4g}, got {c1}")
    if not sigma > 0 or n < 1:
        raise InvalidArgument("sigma must be positive and n >= 1")
    delta = c1 * min(sigma**L / math.sqrt(n), 1.0)
    theta, phi = matched_pair_discrete(L, delta)
    return LowerBoundPair(
        theta=theta, phi=phi, s=1, sigma=sigma, n=n, c1=c1, delta=delta, group=DISCRETE
    )


@dataclass(frozen=True)
class RatePoint:
    sigma: float
    n: int
    trials: int
    risk_mean: float
    risk_stderr: float


@dataclass(frozen=True)
class RateCurve:
    points: tuple[RatePoint, ...]
    fitted_slope: float
    slope_stderr: float
    axis: str
    n_rule: str = ""


def fit_loglog(xs, ys) -> tuple[float, float]:
    """Least-squares slope of log(y) against log(x), with its standard error."""
    x = np.log(np.asarray(xs, dtype=float))
    y = np.log(np.asarray(ys, dtype=float))
    if x.size < 2:
        raise InvalidArgument("need at least two points to fit a slope")
    xc = x - x.mean()
    sxx = float(np.sum(xc**2))
    if sxx == 0:
        raise InvalidArgument("degenerate grid: all abscissae equal")
    slope = float(np.sum(xc * y) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    resid = y - intercept - slope * x
    dof = x.size - 2
    stderr = math.sqrt(float(np.sum(resid**2)) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr


def _run_trial(
    spec: str,
    theta: Signal,
    sigma: float,
    n: int,
    group: str,
    trial_seed: int,
    c0: float,
    em_opts: EmOptions,
    oracle: SupportSet,
) -> float:
    config = ModelConfig(L=theta.L, sigma=sigma, group=group, seed=trial_seed)
    batch = sample(theta, config, n)
    if spec == "modified_mle":
        fit = modified_mle(batch, c0, em_opts, seed=trial_seed)
        estimate = fit.estimate
    elif spec == "em_oracle":
        fit = em_fit(batch, oracle, em_opts, seed=trial_seed)
        estimate = fit.estimate
    elif spec == "s0":
        estimate = estimate_s0(batch)
    elif spec == "s1":
        estimate = estimate_s1(batch, c0)
    else:  # pragma: no cover - guarded by caller
        raise InvalidArgument(f"unknown estimator {spec!r}")
    return orbit_distance(estimate, theta, group)


def risk_mc(
    estimator_spec: str,
    theta: Signal,
    sigma: float,
    n: int,
    trials: int,
    seed: int,
    group: str = CONTINUOUS,
    c0: float = 0.25,
    em_opts: EmOptions | None = None,
    oracle_support: SupportSet | None = None,
    threads: int | None = None,
) -> RatePoint:
    """Mean orbit-distance risk over seeded independent trials.

    Trial t simulates a fresh batch with a child seed derived from
    (seed, t), runs the estimator, and measures the orbit distance to the
    truth; results do not depend on the degree of parallelism.
    """
    if estimator_spec not in ESTIMATORS:
        raise InvalidArgument(f"estimator must be one of {ESTIMATORS}, got {estimator_spec!r}")
    if trials < 2:
        raise InvalidArgument(f"trials must be >= 2, got {trials}")
    em_opts = em_opts or EmOptions()
    oracle = oracle_support if oracle_support is not None else theta.positive_support()

    def one(t: int) -> float:
        trial_seed = int(child_rng(seed, "risk_trial", t).integers(0, 2**63 - 1))
        return _run_trial(
            estimator_spec, theta, sigma, n, group, trial_seed, c0, em_opts, oracle
        )

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rhos = np.array(list(pool.map(one, range(trials))))
    else:
        rhos = np.array([one(t) for t in range(trials)])
    return RatePoint(
        sigma=float(sigma),
        n=int(n),
        trials=trials,
        risk_mean=float(np.mean(rhos)),
        risk_stderr=float(np.std(rhos, ddof=1) / math.sqrt(trials)),
    )


def rate_curve(
    estimator_spec: str,
    theta: Signal,
    axis: str,
    grid,
    sigma: float | None = None,
    n: int | None = None,
    n0: int | None = None,
    s: int | None = None,
    trials: int = 50,
    seed: int = 0,
    group: str = CONTINUOUS,
    c0: float = 0.25,
    em_opts: EmOptions | None = None,
    oracle_support: SupportSet | None = None,
    threads: int | None = None,
) -> RateCurve:
    """Risk curve over a grid of n (fixed sigma) or sigma values.

    On the sigma axis the sample size follows n(sigma) = round(n0 *
    sigma^(2*(2s-1))) unless a fixed ``n`` is supplied; the coupling rule
    is recorded in the output so slopes can be read as risk*sqrt(n)
    against sigma.
    """
    grid = [float(g) for g in grid]
    if len(grid) < 3:
        raise InvalidArgument("grid needs at least three points")
    if any(g <= 0 for g in grid):
        raise InvalidArgument("grid values must be positive")
    if axis not in ("n", "sigma"):
        raise InvalidArgument(f"axis must be 'n' or 'sigma', got {axis!r}")

    points = []
    n_rule = ""
    if axis == "n":
        if sigma is None:
            raise InvalidArgument("axis='n' requires a fixed sigma")
        n_rule = f"sigma={sigma:g}"
        for idx, g in enumerate(grid):
            points.append(
                risk_mc(
                    estimator_spec, theta, sigma, int(round(g)), trials,
                    seed=int(child_rng(seed, "grid", idx).integers(0, 2**63 - 1)),
                    group=group, c0=c0, em_opts=em_opts,
                    oracle_support=oracle_support, threads=threads,
                )
            )
    else:
        if n is None and n0 is None:
            raise InvalidArgument("axis='sigma' requires n or n0")
        if n is None:
            if s is None:
                supp = theta.positive_support()
                s = max(supp) if len(supp) else 0
            exponent = 2 * (2 * s - 1)
            n_rule = f"n=round({n0}*sigma^{exponent})"
        else:
            n_rule = f"n={n}"
        for idx, g in enumerate(grid):
            n_g = n if n is not None else int(round(n0 * g**exponent))
            points.append(
                risk_mc(
                    estimator_spec, theta, g, n_g, trials,
                    seed=int(child_rng(seed, "grid", idx).integers(0, 2**63 - 1)),
                    group=group, c0=c0, em_opts=em_opts,
                    oracle_support=oracle_support, threads=threads,
                )
            )

    slope, stderr = fit_loglog(grid, [p.risk_mean for p in points])
    return RateCurve(
        points=tuple(points), fitted_slope=slope, slope_stderr=stderr, axis=axis, n_rule=n_rule
    )
