"""Command-line entry points.

Subcommands: simulate, fit, experiment, metrics, qq, info-loss. All file
outputs are the same CSV/JSON formats the library reads back.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .core import GammaPriorSet, HawkesParams, read_events_csv
from .harness import budgeted_fit, ingest_events, load_config, run_experiment
from .metrics import (
    estimation_report,
    info_loss_bound,
    info_loss_ratio,
    qq_pairs,
    time_rescaling_qq,
)
from .results import FitResult
from .schedule import Budget
from .simulate import dense3, save_dataset, simulate, sparse10


def _params_from_json(path: str) -> HawkesParams:
    """Accept a fit result, a dataset sidecar, or a bare parameter document."""
    with open(path) as fh:
        doc = json.load(fh)
    if "params" in doc:
        doc = doc["params"]
    if "result" in doc and isinstance(doc["result"], dict):
        doc = doc["result"].get("params", doc)
    return HawkesParams(
        np.asarray(doc["mu"], dtype=np.float64),
        np.asarray(doc["alpha"], dtype=np.float64),
        np.asarray(doc["beta"], dtype=np.float64),
    )


def _cmd_simulate(args) -> int:
    if args.scenario == "dense3":
        spec = dense3(args.T)
    elif args.scenario == "sparse10":
        spec = sparse10(args.level, args.T, args.mask_seed)
    else:
        raise SystemExit(f"unknown scenario {args.scenario!r}")
    seq = simulate(spec, args.seed)
    save_dataset(seq, spec, args.seed, f"{args.out}.csv", f"{args.out}.json")
    print(f"wrote {args.out}.csv ({seq.n} events, K={seq.K}, T={seq.T})")
    return 0


def _cmd_fit(args) -> int:
    seq = read_events_csv(args.data, T=args.T, K=args.K)
    priors = GammaPriorSet.constant(seq.K)
    budget = Budget(max_iters=args.iters) if args.iters else Budget(seconds=args.budget)
    sched_cfg = {}
    if args.rho0 is not None:
        sched_cfg["rho0"] = args.rho0
    delta_cfg = {"policy": "fixed", "value": args.delta} if args.delta else None
    rng = np.random.default_rng(args.seed)
    result = budgeted_fit(
        args.method,
        seq,
        priors,
        args.kappa,
        budget,
        rng,
        schedule_cfg=sched_cfg or None,
        delta_cfg=delta_cfg,
    )
    result.save(args.out)
    print(
        f"{result.method}: odl={result.odl!r} iters={result.iterations} "
        f"elapsed={result.elapsed:.2f}s -> {args.out}"
    )
    return 0


def _cmd_experiment(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    out = run_experiment(cfg, args.out, workers=args.workers)
    print(f"experiment written to {out}")
    return 0


def _cmd_metrics(args) -> int:
    fit = FitResult.load(args.fit)
    truth = _params_from_json(args.truth)
    mask = None
    if args.nonzero_mask:
        with open(args.truth) as fh:
            doc = json.load(fh)
        if "mask" in doc:
            mask = np.asarray(doc["mask"], dtype=bool)
        else:
            mask = truth.alpha > 0
    rep = estimation_report(truth, fit.params, fit.intervals, mask)
    print(json.dumps(rep.to_dict(), indent=1, sort_keys=True))
    return 0


def _cmd_qq(args) -> int:
    seq = read_events_csv(args.data, T=args.T, K=args.K)
    params = _params_from_json(args.params)
    report = time_rescaling_qq(seq, params)
    lines = ["dim,theoretical,empirical"]
    for ell, z in enumerate(report.z):
        for theo, emp in qq_pairs(z):
            lines.append(f"{ell},{float(theo)!r},{float(emp)!r}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    for ell in range(seq.K):
        print(
            f"dim {ell}: ks={float(report.ks_stat[ell])!r} p={float(report.p_value[ell])!r}"
        )
    print(f"quantile pairs -> {args.out}")
    return 0


def _cmd_info_loss(args) -> int:
    val = info_loss_ratio(args.beta, args.delta, args.T)
    bound = info_loss_bound(args.beta, args.delta, args.T)
    print(f"phi={val!r} bound={bound!r}")
    return 0


def _cmd_ingest(args) -> int:
    _, report = ingest_events(args.data, T=args.T, K=args.K)
    print(json.dumps(report, indent=1, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sghawkes")
    sub = p.add_subparsers(dest="cmd", required=True)

    sim = sub.add_parser("simulate", help="generate a benchmark dataset")
    sim.add_argument("--scenario", default="dense3", choices=["dense3", "sparse10"])
    sim.add_argument("--T", type=float, default=1000.0)
    sim.add_argument("--level", default="high", choices=["high", "medium", "low"])
    sim.add_argument("--mask-seed", type=int, default=0)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", required=True, help="output path stem (.csv/.json added)")
    sim.set_defaults(func=_cmd_simulate)

    fit = sub.add_parser("fit", help="fit one method to an event CSV")
    fit.add_argument("--data", required=True)
    fit.add_argument("--method", required=True)
    fit.add_argument("--kappa", type=float, default=0.05)
    fit.add_argument("--budget", type=float, default=60.0, help="seconds")
    fit.add_argument("--iters", type=int, default=None, help="iteration budget instead")
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--delta", type=float, default=None)
    fit.add_argument("--rho0", type=float, default=None)
    fit.add_argument("--T", type=float, default=None)
    fit.add_argument("--K", type=int, default=None)
    fit.add_argument("--out", required=True)
    fit.set_defaults(func=_cmd_fit)

    exp = sub.add_parser("experiment", help="run a full config-driven grid")
    exp.add_argument("--config", default=None)
    exp.add_argument("--seed", type=int, default=None, help="override master seed")
    exp.add_argument("--workers", type=int, default=None)
    exp.add_argument("--out", default="results")
    exp.set_defaults(func=_cmd_experiment)

    met = sub.add_parser("metrics", help="score a fit against known parameters")
    met.add_argument("--fit", required=True)
    met.add_argument("--truth", required=True, help="JSON with mu/alpha/beta (+ mask)")
    met.add_argument("--nonzero-mask", action="store_true")
    met.set_defaults(func=_cmd_metrics)

    qq = sub.add_parser("qq", help="time-rescaling uniformity check")
    qq.add_argument("--data", required=True)
    qq.add_argument("--params", required=True)
    qq.add_argument("--T", type=float, default=None)
    qq.add_argument("--K", type=int, default=None)
    qq.add_argument("--out", required=True)
    qq.set_defaults(func=_cmd_qq)

    il = sub.add_parser("info-loss", help="compensator approximation loss ratio")
    il.add_argument("--beta", type=float, required=True)
    il.add_argument("--delta", type=float, required=True)
    il.add_argument("--T", type=float, required=True)
    il.set_defaults(func=_cmd_info_loss)

    ing = sub.add_parser("ingest", help="validate an external event CSV")
    ing.add_argument("--data", required=True)
    ing.add_argument("--T", type=float, default=None)
    ing.add_argument("--K", type=int, default=None)
    ing.set_defaults(func=_cmd_ingest)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
