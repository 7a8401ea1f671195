"""Stable file formats: signal/tensor/report JSON and batch/rate CSV.

Floats in CSV files are written with 17 significant digits so that a
write -> read -> write cycle is byte-identical; JSON files rely on
Python's shortest-round-trip float repr, which is equally lossless.
"""

from __future__ import annotations

import csv
import json
import math
from typing import Any

import numpy as np

from .divergence import SandwichReport
from .errors import InvalidArgument
from .estimators import FitResult, SupportEstimate
from .experiments import LowerBoundPair, RateCurve
from .moments import MomentTensor
from .sampling import ModelConfig, SampleBatch
from .signals import Signal, SupportSet


def fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------- signals


def signal_to_dict(sig: Signal) -> dict:
    half = sig.L // 2
    return {
        "L": sig.L,
        "fourier": [
            {"j": j, "re": sig.coeff(j).real, "im": sig.coeff(j).imag}
            for j in range(0, half + 1)
        ],
    }


def signal_from_dict(data: dict) -> Signal:
    L = int(data["L"])
    half = L // 2
    fourier = np.zeros(L, dtype=complex)
    for item in data["fourier"]:
        j = int(item["j"])
        if not 0 <= j <= half:
            raise InvalidArgument(f"signal JSON index {j} out of range for L={L}")
        value = complex(float(item["re"]), float(item["im"]))
        fourier[half + j] = value
        fourier[half - j] = np.conj(value)
    if abs(fourier[half].imag) > 1e-9:
        raise InvalidArgument("DC coefficient must be real")
    fourier[half] = fourier[half].real
    return Signal.from_fourier(fourier)


def write_signal(sig: Signal, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(signal_to_dict(sig), fh, indent=1)
        fh.write("\n")


def read_signal(path) -> Signal:
    with open(path, "r", encoding="utf-8") as fh:
        return signal_from_dict(json.load(fh))


def write_values_csv(sig: Signal, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        csv.writer(fh).writerow([fmt(v) for v in sig.values])


def read_values_csv(path) -> Signal:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        row = next(csv.reader(fh))
    return Signal.from_values([float(v) for v in row])


# ---------------------------------------------------------------- batches


def write_batch(batch: SampleBatch, path) -> None:
    cfg = batch.config
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["sigma", "L", "group", "seed"])
        w.writerow([fmt(cfg.sigma), cfg.L, cfg.group, cfg.seed])
        for row in batch.observations:
            w.writerow([fmt(v) for v in row])


def read_batch(path) -> SampleBatch:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header[:4] != ["sigma", "L", "group", "seed"]:
            raise InvalidArgument(f"unexpected batch header {header!r}")
        sigma_s, L_s, group, seed_s = next(reader)[:4]
        config = ModelConfig(L=int(L_s), sigma=float(sigma_s), group=group, seed=int(seed_s))
        rows = [[float(v) for v in row] for row in reader if row]
    obs = np.asarray(rows, dtype=float).reshape(len(rows), config.L)
    return SampleBatch(config=config, observations=obs)


# ----------------------------------------------------------------- tensors


def tensor_to_dict(tensor: MomentTensor) -> dict:
    return {
        "m": tensor.m,
        "L": tensor.L,
        "group": tensor.group,
        "entries": [
            {"idx": list(key), "re": value.real, "im": value.imag}
            for key, value in sorted(tensor.entries.items())
        ],
    }


def tensor_from_dict(data: dict) -> MomentTensor:
    from .moments import _multiplicity  # local: internal weight helper

    entries = {
        tuple(int(i) for i in item["idx"]): complex(float(item["re"]), float(item["im"]))
        for item in data["entries"]
    }
    norm_sq = sum(_multiplicity(k) * abs(v) ** 2 for k, v in entries.items())
    return MomentTensor(
        m=int(data["m"]),
        L=int(data["L"]),
        group=str(data["group"]),
        entries=entries,
        hs_norm_sq=norm_sq,
    )


def write_tensor(tensor: MomentTensor, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(tensor_to_dict(tensor), fh, indent=1)
        fh.write("\n")


def write_delta_csv(norms: dict[int, float], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["m", "delta_norm"])
        for m in sorted(norms):
            w.writerow([m, fmt(norms[m])])


# ----------------------------------------------------------------- reports


def support_to_dict(est: SupportEstimate) -> dict:
    return {
        "S": list(est.S),
        "M": [float(v) for v in est.M],
        "threshold": est.threshold,
    }


def fit_to_dict(fit: FitResult) -> dict:
    return {
        "loglik": fit.loglik,
        "iterations": fit.iterations,
        "restarts_used": fit.restarts_used,
        "converged": fit.converged,
        "support": list(fit.support),
        "estimate": signal_to_dict(fit.estimate),
    }


def sandwich_to_dict(report: SandwichReport) -> dict:
    return {
        "lower": report.lower,
        "upper": report.upper,
        "k_used": report.k_used,
        "mc_mean": report.mc.mean,
        "mc_stderr": report.mc.stderr,
        "n_mc": report.mc.n_mc,
        "K_quad": report.mc.K_quad,
        "delta_norms": list(report.delta_norms),
    }


def pair_to_dict(pair: LowerBoundPair) -> dict:
    return {
        "s": pair.s,
        "sigma": pair.sigma,
        "n": pair.n,
        "c1": pair.c1,
        "delta": pair.delta,
        "group": pair.group,
        "kl_budget": pair.kl_budget,
        "theta": signal_to_dict(pair.theta),
        "phi": signal_to_dict(pair.phi),
    }


def write_json(data: dict, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(data, fh, indent=1)
        fh.write("\n")


def read_json(path) -> Any:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------- curves


def write_rate_csv(curve: RateCurve, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["axis_value", "n", "sigma", "trials", "risk_mean", "risk_stderr"])
        for p in curve.points:
            axis_value = p.n if curve.axis == "n" else p.sigma
            w.writerow(
                [fmt(axis_value), p.n, fmt(p.sigma), p.trials, fmt(p.risk_mean), fmt(p.risk_stderr)]
            )


def rate_summary_dict(curve: RateCurve) -> dict:
    return {
        "axis": curve.axis,
        "fitted_slope": curve.fitted_slope,
        "slope_stderr": curve.slope_stderr,
        "n_rule": curve.n_rule,
        "points": [
            {
                "sigma": p.sigma,
                "n": p.n,
                "trials": p.trials,
                "risk_mean": p.risk_mean,
                "risk_stderr": p.risk_stderr,
            }
            for p in curve.points
        ],
    }


def read_rate_csv(path) -> list[dict]:
    with open(path, "r", newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def support_set_from_list(indices) -> SupportSet:
    return SupportSet.of(indices)


def is_finite_dict(data: dict) -> bool:
    """True when every float leaf in a JSON-able dict is finite."""

    def walk(node) -> bool:
        if isinstance(node, dict):
            return all(walk(v) for v in node.values())
        if isinstance(node, (list, tuple)):
            return all(walk(v) for v in node)
        if isinstance(node, float):
            return math.isfinite(node)
        return True

    return walk(data)
