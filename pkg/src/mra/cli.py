"""Command-line entry point.

Subcommands: simulate, estimate, support, moments, kl, matchpair, rate,
lowerbound, replay.  Every run writes a manifest next to its outputs
(``<out>.manifest.json``) recording the resolved options, seeds, and
SHA-256 of each output; ``mra replay`` re-executes a manifest and checks
the outputs are byte-identical.

Exit codes: 0 success, 1 usage/invalid argument, 2 estimate did not
converge, 3 precondition or domain error (e.g. the KL series regime is
violated and --force was not given).
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time

import numpy as np

from . import __version__, divergence, estimators, experiments, figures, formats, moments
from .errors import DomainError, InvalidArgument, ResourceLimit
from .manifest import RunManifest, read_manifest, sha256_file, write_manifest
from .sampling import ModelConfig, sample
from .signals import CONTINUOUS, DISCRETE, Signal, SupportSet, orbit_distance


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _add_common(p: argparse.ArgumentParser, *, seed: bool = True, group: bool = True) -> None:
    p.add_argument("--out", required=True, help="output path prefix")
    if seed:
        p.add_argument("--seed", type=int, default=0)
    if group:
        p.add_argument("--group", choices=[CONTINUOUS, DISCRETE], default=CONTINUOUS)


def build_parser() -> _Parser:
    parser = _Parser(prog="mra", description=__doc__)
    parser.add_argument("--version", action="version", version=f"mra-lab {__version__}")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("simulate", help="draw a noisy batch from a signal")
    p.add_argument("--theta", required=True, help="signal JSON file")
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    _add_common(p)

    p = sub.add_parser("estimate", help="fit a signal to a batch CSV")
    p.add_argument("--batch", required=True)
    p.add_argument("--method", choices=["mle", "s0", "s1"], default="mle")
    p.add_argument("--c0", type=float, default=0.25)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--quad", type=int, default=256)
    _add_common(p, group=False)

    p = sub.add_parser("support", help="estimate the Fourier support of a batch")
    p.add_argument("--batch", required=True)
    p.add_argument("--c0", type=float, default=0.25)
    _add_common(p, seed=False, group=False)

    p = sub.add_parser("moments", help="moment tensor of one signal or delta norms of two")
    p.add_argument("--theta", required=True)
    p.add_argument("--phi", default=None)
    p.add_argument("--m", type=int, required=True, help="tensor order (or max order for deltas)")
    _add_common(p, seed=False)

    p = sub.add_parser("kl", help="KL sandwich report for a pair of signals")
    p.add_argument("--theta", required=True)
    p.add_argument("--phi", required=True)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n-mc", type=int, default=10**5)
    p.add_argument("--quad", type=int, default=256)
    p.add_argument("--m-max", type=int, default=8)
    p.add_argument("--k", type=int, default=4)
    p.add_argument("--force", action="store_true", help="evaluate outside the bound regime")
    _add_common(p)

    p = sub.add_parser("matchpair", help="construct a moment-matched pair")
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--r", type=float, default=0.5)
    p.add_argument("--L", type=int, default=None)
    _add_common(p, seed=False)

    p = sub.add_parser("rate", help="Monte-Carlo risk curve with fitted slope")
    p.add_argument("--estimator", choices=list(experiments.ESTIMATORS), required=True)
    p.add_argument("--axis", choices=["n", "sigma"], required=True)
    p.add_argument("--grid", required=True, help="comma-separated grid values")
    p.add_argument("--sigma", type=float, default=None, help="fixed sigma for axis=n")
    p.add_argument("--n", type=int, default=None, help="fixed n for axis=sigma")
    p.add_argument("--n0", type=int, default=None, help="n(sigma)=round(n0*sigma^(2(2s-1)))")
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--theta", default=None, help="optional signal JSON (default: hard signal)")
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--c0", type=float, default=0.25)
    p.add_argument("--restarts", type=int, default=6)
    p.add_argument("--max-iter", type=int, default=300)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--quad", type=int, default=64)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--no-plot", action="store_true")
    _add_common(p)

    p = sub.add_parser("lowerbound", help="hard pair plus its KL budget check")
    p.add_argument("--s", type=int, default=2)
    p.add_argument("--sigma", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--c1", type=float, default=0.1)
    p.add_argument("--L", type=int, default=None)
    p.add_argument("--n-mc", type=int, default=10**5)
    p.add_argument("--quad", type=int, default=256)
    p.add_argument("--no-plot", action="store_true")
    _add_common(p)

    p = sub.add_parser("replay", help="re-run a manifest and verify outputs byte-for-byte")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, help="optional new output prefix")

    return parser


def _threads(args) -> int | None:
    t = getattr(args, "threads", None)
    if t is None:
        env = os.environ.get("MRA_THREADS")
        t = int(env) if env else os.cpu_count()
    return t


# ------------------------------------------------------------- handlers
# Each handler returns (exit_code, output_paths, input_paths, recipe).


def cmd_simulate(args):
    theta = formats.read_signal(args.theta)
    config = ModelConfig(L=theta.L, sigma=args.sigma, group=args.group, seed=args.seed)
    batch = sample(theta, config, args.n)
    out = args.out + ".batch.csv"
    formats.write_batch(batch, out)
    return 0, [out], [args.theta], ""


def cmd_estimate(args):
    batch = formats.read_batch(args.batch)
    opts = estimators.EmOptions(
        K_quad=args.quad,
        restarts=args.restarts,
        max_iter=args.max_iter,
        tol=args.tol,
        c0=args.c0,
    )
    if args.method == "mle":
        fit = estimators.modified_mle(batch, args.c0, opts, seed=args.seed)
    else:
        est = (
            estimators.estimate_s0(batch)
            if args.method == "s0"
            else estimators.estimate_s1(batch, args.c0)
        )
        fit = estimators.FitResult(
            estimate=est,
            loglik=estimators.log_likelihood(batch, est, args.quad),
            iterations=0,
            restarts_used=0,
            converged=True,
            support=est.positive_support(),
        )
    fit_out = args.out + ".fit.json"
    est_out = args.out + ".estimate.json"
    formats.write_json(formats.fit_to_dict(fit), fit_out)
    formats.write_signal(fit.estimate, est_out)
    return (0 if fit.converged else 2), [fit_out, est_out], [args.batch], ""


def cmd_support(args):
    batch = formats.read_batch(args.batch)
    est = estimators.estimate_support(estimators.spectrum_stats(batch), args.c0)
    out = args.out + ".support.json"
    formats.write_json(formats.support_to_dict(est), out)
    return 0, [out], [args.batch], ""


def cmd_moments(args):
    theta = formats.read_signal(args.theta)
    inputs = [args.theta]
    if args.phi is None:
        tensor = moments.moment_tensor(theta, args.m, args.group)
        out = args.out + ".tensor.json"
        formats.write_tensor(tensor, out)
        return 0, [out], inputs, ""
    phi = formats.read_signal(args.phi)
    inputs.append(args.phi)
    norms = {m: moments.delta_norm(theta, phi, m, args.group) for m in range(1, args.m + 1)}
    out = args.out + ".delta.csv"
    formats.write_delta_csv(norms, out)
    return 0, [out], inputs, ""


def cmd_kl(args):
    theta = formats.read_signal(args.theta)
    phi = formats.read_signal(args.phi)
    report = divergence.kl_sandwich(
        theta,
        phi,
        args.sigma,
        n_mc=args.n_mc,
        K_quad=args.quad,
        seed=args.seed,
        group=args.group,
        m_max=args.m_max,
        k=args.k,
        force=args.force,
    )
    out = args.out + ".kl.json"
    formats.write_json(formats.sandwich_to_dict(report), out)
    return 0, [out], [args.theta, args.phi], ""


def cmd_matchpair(args):
    if args.group == DISCRETE:
        if args.L is None:
            raise InvalidArgument("discrete matchpair requires --L")
        theta, phi = moments.matched_pair_discrete(args.L, args.delta)
    else:
        theta, phi = moments.matched_pair_continuous(args.s, args.delta, args.r, args.L)
    outs = [args.out + ".theta.json", args.out + ".phi.json"]
    formats.write_signal(theta, outs[0])
    formats.write_signal(phi, outs[1])
    return 0, outs, [], ""


def _rate_default_signal(args) -> Signal:
    if args.estimator == "s0":
        L = args.L or 5
        return Signal.from_values(np.full(L, 1.0 / np.sqrt(L)))
    if args.estimator == "s1":
        L = args.L or 5
        k = np.arange(1, L + 1)
        u = 2.0 / np.sqrt(L) * np.cos(2 * np.pi * k / L)
        return Signal.from_values(0.35 + 0.5 * u)
    return experiments.worst_case_signal(args.s, args.L)


def cmd_rate(args):
    inputs = []
    if args.theta:
        theta = formats.read_signal(args.theta)
        inputs.append(args.theta)
    else:
        theta = _rate_default_signal(args)
    grid = [float(v) for v in args.grid.split(",") if v.strip()]
    opts = estimators.EmOptions(
        K_quad=args.quad,
        restarts=args.restarts,
        max_iter=args.max_iter,
        tol=args.tol,
        c0=args.c0,
    )
    curve = experiments.rate_curve(
        args.estimator,
        theta,
        args.axis,
        grid,
        sigma=args.sigma,
        n=args.n,
        n0=args.n0,
        s=args.s,
        trials=args.trials,
        seed=args.seed,
        group=args.group,
        c0=args.c0,
        em_opts=opts,
        threads=_threads(args),
    )
    csv_out = args.out + ".rate.csv"
    json_out = args.out + ".rate.json"
    formats.write_rate_csv(curve, csv_out)
    formats.write_json(formats.rate_summary_dict(curve), json_out)
    outs = [csv_out, json_out]
    if not args.no_plot:
        png_out = args.out + ".rate.png"
        figures.rate_figure(curve, png_out)
        outs.append(png_out)
    recipe = (
        f"gnuplot: set logscale xy; plot '{os.path.basename(csv_out)}' "
        "using 1:5:6 with yerrorbars"
    )
    return 0, outs, inputs, recipe


def cmd_lowerbound(args):
    if args.group == DISCRETE:
        if args.L is None:
            raise InvalidArgument("discrete lowerbound requires --L")
        pair = experiments.lower_bound_pair_discrete(args.L, args.sigma, args.n, args.c1)
    else:
        pair = experiments.lower_bound_pair(args.s, args.sigma, args.n, args.c1, args.L)
    est = divergence.kl_monte_carlo(
        pair.theta, pair.phi, pair.sigma, args.n_mc, args.quad, args.seed, pair.group
    )
    rho = orbit_distance(pair.theta, pair.phi, pair.group)
    report = {
        "pair": formats.pair_to_dict(pair),
        "rho": rho,
        "kl_mean": est.mean,
        "kl_stderr": est.stderr,
        "n_times_kl": pair.n * est.mean,
        "kl_budget": pair.kl_budget,
        "within_budget": pair.n * est.mean <= pair.kl_budget + 3 * pair.n * est.stderr,
    }
    outs = [args.out + ".pair_theta.json", args.out + ".pair_phi.json", args.out + ".lowerbound.json"]
    formats.write_signal(pair.theta, outs[0])
    formats.write_signal(pair.phi, outs[1])
    formats.write_json(report, outs[2])
    if not args.no_plot:
        png_out = args.out + ".pair.png"
        figures.pair_figure(pair, png_out)
        outs.append(png_out)
    return 0, outs, [], ""


def cmd_replay(args):
    manifest = read_manifest(args.manifest)
    for path, digest in manifest.inputs.items():
        if not os.path.exists(path) or sha256_file(path) != digest:
            print(f"replay: input changed or missing: {path}", file=sys.stderr)
            return 3
    old_out = manifest.options["out"]
    workdir = None
    if args.out is not None:
        new_out = args.out
    else:
        workdir = tempfile.mkdtemp(prefix="mra-replay-")
        new_out = os.path.join(workdir, "replay")
    options = dict(manifest.options)
    options["out"] = new_out
    ns = argparse.Namespace(**options)
    code, outputs, _inputs, _recipe = HANDLERS[manifest.command](ns)

    mismatches = []
    for old_path, digest in manifest.outputs.items():
        suffix = old_path[len(old_out):]
        new_path = new_out + suffix
        if new_path not in outputs:
            mismatches.append(f"missing output {new_path}")
        elif sha256_file(new_path) != digest:
            mismatches.append(f"hash mismatch for {new_path}")
    if mismatches:
        for msg in mismatches:
            print(f"replay: {msg}", file=sys.stderr)
        return 3
    print(f"replay: {len(manifest.outputs)} outputs reproduced byte-for-byte")
    return code


HANDLERS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "support": cmd_support,
    "moments": cmd_moments,
    "kl": cmd_kl,
    "matchpair": cmd_matchpair,
    "rate": cmd_rate,
    "lowerbound": cmd_lowerbound,
}


def _manifest_options(args) -> dict:
    options = {k: v for k, v in vars(args).items() if k != "command"}
    return options


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"mra: {exc}", file=sys.stderr)
        return 1
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    if args.command == "replay":
        try:
            return cmd_replay(args)
        except (InvalidArgument, UsageError) as exc:
            print(f"mra: {exc}", file=sys.stderr)
            return 1
        except (DomainError, ResourceLimit) as exc:
            print(f"mra: {exc}", file=sys.stderr)
            return 3

    try:
        start = time.monotonic()
        code, outputs, inputs, recipe = HANDLERS[args.command](args)
        duration = time.monotonic() - start
    except (InvalidArgument, UsageError) as exc:
        print(f"mra: {exc}", file=sys.stderr)
        return 1
    except (DomainError, ResourceLimit) as exc:
        print(f"mra: {exc}", file=sys.stderr)
        return 3

    manifest = RunManifest(
        command=args.command,
        options=_manifest_options(args),
        seed=getattr(args, "seed", None),
        version=__version__,
        inputs={p: sha256_file(p) for p in inputs},
        outputs={p: sha256_file(p) for p in outputs},
        duration_s=duration,
        recipe=recipe,
    )
    write_manifest(manifest, args.out + ".manifest.json")
    for path in outputs:
        print(path)
    return code


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
