"""Command-line frontend: ``intmin solve | bench | verify``."""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from typing import Optional

import numpy as np

from . import checks
from .errors import (AmbiguousYes, InfeasibleSlab, IntminError, MalformedInstance, NonTermination,
                     OracleInconsistency)
from .oracles import (EvalOracle, Instance, brute_force_sfm, indicator, instance_from_json,
                      quadratic_separation, random_graph_cut)
from .solver import POLICIES, SolverConfig, minimize, minimize_submodular

SCHEMA = "v1"
EXIT_OK, EXIT_MALFORMED, EXIT_ORACLE, EXIT_NONTERMINATION = 0, 2, 3, 4
LOG_LEVELS = {"off": logging.CRITICAL + 1, "info": logging.INFO, "trace": logging.DEBUG}

log = logging.getLogger("intmin")


def configure_logging(env=None):
    value = (env if env is not None else os.environ.get("INTMIN_LOG", "off")).strip().lower()
    level = LOG_LEVELS.get(value)
    if level is None:
        print(f"intmin: ignoring INTMIN_LOG={value!r} (use off, info or trace)", file=sys.stderr)
        level = LOG_LEVELS["off"]
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")
    log.setLevel(level)


def parse_sizes(text: str) -> list[int]:
    """``"3..10"`` or ``"3,5,8"``."""
    try:
        if ".." in text:
            lo, hi = text.split("..")
            sizes = list(range(int(lo), int(hi) + 1))
        else:
            sizes = [int(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None
    if not sizes or min(sizes) < 1:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}")
    return sizes


def load_instance(path: str) -> Instance:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise MalformedInstance(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise MalformedInstance(f"{path} is not valid JSON: {exc}") from exc
    return instance_from_json(data)


def solve_instance(inst: Instance, config: SolverConfig) -> dict:
    """Solve and build the report body (everything except wall time)."""
    if inst.kind == "quadratic":
        x, tr = minimize(quadratic_separation(inst.target), inst.n, config)
        value = int(((x - inst.target) ** 2).sum())
        extra = {}
    else:
        config = replace(config, R=1)
        res = minimize_submodular(inst.eo, config)
        x, tr, value = indicator(res.minimizer, inst.n).astype(np.int64), res.transcript, res.value
        extra = {"minimizingSet": sorted(res.minimizer)}
    return {
        "schema": SCHEMA,
        "instance": {"type": inst.kind, "n": inst.n},
        "minimizer": [int(t) for t in x],
        "objectiveValue": value,
        **extra,
        "counts": dict(tr.counts),
        "potentials": tr.potentials,
        "rho": tr.rho,
        "events": tr.events,
        "config": config.to_json(),
    }


def write_json(obj, path: Optional[str]):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def exit_code_for(exc: Exception) -> int:
    if isinstance(exc, MalformedInstance):
        return EXIT_MALFORMED
    if isinstance(exc, (OracleInconsistency, AmbiguousYes, InfeasibleSlab)):
        return EXIT_ORACLE
    # NonTermination, NonConvergence and any remaining solver failure
    return EXIT_NONTERMINATION


def cmd_solve(args) -> int:
    try:
        inst = load_instance(args.instance)
        config = SolverConfig(R=args.radius, thresholdPolicy=args.threshold_policy,
                              strict=args.strict, gramBits=args.gram_bits, maxBlocks=args.max_blocks)
        if inst.kind != "quadratic" and args.radius != 1:
            log.info("set-function instances search [0,1]^n; --radius is ignored")
        start = time.perf_counter()
        report = solve_instance(inst, config)
    except IntminError as exc:
        print(f"intmin: {type(exc).__name__}: {exc}", file=sys.stderr)
        if args.report and isinstance(exc, NonTermination) and exc.transcript is not None:
            write_json({"schema": SCHEMA, "error": type(exc).__name__, "message": str(exc),
                        "counts": exc.transcript.counts}, args.report)
        return exit_code_for(exc)
    report["wallTime"] = time.perf_counter() - start
    write_json(report, args.report)
    return EXIT_OK


def _bench_one(job):
    family, n, seed, radius = job
    rng = np.random.default_rng([seed, n])
    start = time.perf_counter()
    if family == "quad":
        target = rng.integers(-radius, radius + 1, size=n)
        x, tr = minimize(quadratic_separation(target), n, SolverConfig(R=radius))
        ok = bool(np.array_equal(x, target))
    else:
        # a random cut plus a modular term, so the minimizer is not always the empty set
        eo = random_graph_cut(n, rng)
        w = rng.integers(-5, 6, size=n)
        f = EvalOracle(n, lambda s: eo.raw(s) + int(sum(w[i - 1] for i in s)))
        res = minimize_submodular(f)
        ok = res.value == brute_force_sfm(f)[0]
        tr = res.transcript
    return {"n": n, "seed": seed, "exact": ok, "counts": dict(tr.counts),
            "wallTime": time.perf_counter() - start}


def fit_scaling(rows) -> dict:
    """Log-log slope of mean SO calls against n, and the constant C in calls <= C n^2 ln n."""
    sizes = sorted({r["n"] for r in rows})
    means = [float(np.mean([r["counts"]["soCalls"] for r in rows if r["n"] == n])) for n in sizes]
    out = {"sizes": sizes, "meanSoCalls": means}
    if len(sizes) >= 2:
        out["slope"] = float(np.polyfit(np.log(sizes), np.log(means), 1)[0])
    ratios = [r["counts"]["soCalls"] / (r["n"] ** 2 * math.log(max(r["n"], 2))) for r in rows]
    out["C"] = float(max(ratios))
    return out


def cmd_bench(args) -> int:
    radius = args.radius if args.family == "quad" else 1
    jobs = [(args.family, n, s, radius) for n in args.sizes for s in range(args.seeds)]
    try:
        if args.jobs > 1:
            with ProcessPoolExecutor(args.jobs) as pool:
                rows = list(pool.map(_bench_one, jobs))
        else:
            rows = [_bench_one(j) for j in jobs]
    except IntminError as exc:
        print(f"intmin: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    fit = fit_scaling(rows)
    print(f"{'n':>3} {'seeds':>5} {'exact':>5} {'SO':>8} {'EO':>8} {'blocks':>6} {'reduce':>6} {'sec':>7}")
    for n, mean in zip(fit["sizes"], fit["meanSoCalls"]):
        sel = [r for r in rows if r["n"] == n]
        print(f"{n:>3} {len(sel):>5} {sum(r['exact'] for r in sel):>5} {mean:>8.1f} "
              f"{np.mean([r['counts']['eoCalls'] for r in sel]):>8.1f} "
              f"{np.mean([r['counts']['blocks'] for r in sel]):>6.1f} "
              f"{np.mean([r['counts']['dimReductions'] for r in sel]):>6.1f} "
              f"{np.mean([r['wallTime'] for r in sel]):>7.2f}")
    if "slope" in fit:
        print(f"log-log slope of SO calls: {fit['slope']:.3f}")
    print(f"C in SO <= C n^2 ln n: {fit['C']:.3f}")
    if args.report:
        write_json({"schema": SCHEMA, "family": args.family, "runs": rows, "fit": fit}, args.report)
    return EXIT_OK if all(r["exact"] for r in rows) else 1


def cmd_verify(args) -> int:
    names = list(checks.SUITES) if args.suite == "all" else [args.suite]
    ok = True
    for name in names:
        for res in checks.run_suite(name, seed=args.seed):
            print(f"{name:8s} {res.line()}")
            ok &= res.passed
    return EXIT_OK if ok else 1


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="intmin", description="Integral minimization with separation oracles.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one instance and write a JSON report")
    s.add_argument("--instance", required=True, help="instance JSON file")
    s.add_argument("--radius", type=int, default=16, help="search box B_inf(R) (default 16)")
    s.add_argument("--threshold-policy", choices=POLICIES, default="lemma31")
    s.add_argument("--strict", action="store_true", help="strict-mode cutting planes")
    s.add_argument("--gram-bits", type=int, default=64)
    s.add_argument("--max-blocks", type=int, default=None)
    s.add_argument("--report", default=None, help="output file (default stdout)")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bench", help="scaling benchmark on random instances")
    b.add_argument("--family", choices=("quad", "sfm-cut"), required=True)
    b.add_argument("--sizes", type=parse_sizes, default=parse_sizes("3..10"))
    b.add_argument("--seeds", type=int, default=3)
    b.add_argument("--radius", type=int, default=16)
    b.add_argument("--jobs", type=int, default=1, help="worker processes")
    b.add_argument("--report", default=None)
    b.set_defaults(func=cmd_bench)

    v = sub.add_parser("verify", help="run a property suite")
    v.add_argument("--suite", choices=[*checks.SUITES, "all"], required=True)
    v.add_argument("--seed", type=int, default=0)
    v.set_defaults(func=cmd_verify)
    return p


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging()
    return args.func(args)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
