"""Experiment orchestration: config handling, seeding, fitting, aggregation.

An experiment is described by one JSON document (all fields defaulted). The
grid (datasets x methods x kappas x budgets x inits) is expanded into
independent tasks, each with its own RNG derived from the master seed, so
reruns and parallel schedules produce the same numbers. Full-batch samplers
ignore kappa and run once per (dataset, budget, init).

Layout under the output directory: ``<experiment-id>/data/*.csv`` for the
simulated datasets, ``fits/*.json`` for one result per task, and
``tables/*.csv`` for the aggregated metric and likelihood-ratio tables.
The experiment id is a content hash of the resolved config. Aggregation
reads only the serialized fit files.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import jsonschema

from .core import (
    EXACT,
    CompensatorMode,
    EventSequence,
    GammaPriorSet,
    HawkesParams,
    LEWIS,
    read_events_csv,
)
from .mcmc import fit_mcmc
from .metrics import bodl_rbodl, estimation_report
from .results import FitResult
from .schedule import Budget, StepSchedule
from .sgem import adaptive_delta, fit_sgem, init_params
from .sgld import fit_sgld, sgld_step_scale
from .sgvi import fit_sgvi
from .simulate import ScenarioSpec, custom_scenario, dense3, save_dataset, simulate, sparse10

__all__ = [
    "METHODS",
    "CONFIG_SCHEMA",
    "load_config",
    "experiment_id",
    "budgeted_fit",
    "ingest_events",
    "run_experiment",
]

METHODS = (
    "sgem",
    "sgem-c",
    "sgvi",
    "sgvi-c",
    "sgld",
    "sgld-apx",
    "mcmc",
    "mcmc-c",
    "mcmc-rw",
)

_STOCHASTIC = frozenset(m for m in METHODS if not m.startswith("mcmc"))

_matrix = {"type": "array", "items": {"type": "array", "items": {"type": "number"}}}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "scenario": {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"enum": ["dense3", "sparse10", "custom"]},
                "T": {"type": "number", "exclusiveMinimum": 0},
                "level": {"enum": ["high", "medium", "low"]},
                "mask_seed": {"type": "integer", "minimum": 0},
                "mu": {"type": "array", "items": {"type": "number"}},
                "alpha": _matrix,
                "beta": _matrix,
            },
        },
        "methods": {
            "type": "array",
            "items": {"enum": list(METHODS)},
            "minItems": 1,
        },
        "kappas": {
            "type": "array",
            "items": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
            "minItems": 1,
        },
        "budgets": {
            "type": "array",
            "minItems": 1,
            "items": {
                "oneOf": [
                    {"type": "number", "exclusiveMinimum": 0},
                    {
                        "type": "object",
                        "additionalProperties": False,
                        "required": ["iters"],
                        "properties": {"iters": {"type": "integer", "minimum": 1}},
                    },
                ]
            },
        },
        "inits": {"type": "integer", "minimum": 1},
        "datasets": {"type": "integer", "minimum": 1},
        "priors": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                k: {"type": "number", "exclusiveMinimum": 0}
                for k in ("a", "b", "e", "f", "w", "s")
            },
        },
        "schedule": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "rho0": {"type": "number", "exclusiveMinimum": 0},
                "tau1": {"type": "number", "minimum": 0},
                "tau2": {"type": "number", "exclusiveMinimum": 0.5, "maximum": 1},
                "sgld_rho0": {"type": ["number", "null"], "exclusiveMinimum": 0},
            },
        },
        "delta": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "policy": {"enum": ["fixed", "adaptive"]},
                "value": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "master_seed": {"type": "integer", "minimum": 0},
        "mcmc_sweeps": {"type": "integer", "minimum": 1},
        "sgld_thin": {"type": "integer", "minimum": 1},
        "ref_kappa": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
    },
}

DEFAULTS: dict = {
    "scenario": {"name": "dense3", "T": 1000.0},
    "methods": list(METHODS),
    "kappas": [0.01, 0.05, 0.1, 0.2, 0.3, 0.4],
    "budgets": [60.0, 180.0, 300.0],
    "inits": 16,
    "datasets": 50,
    "priors": {"a": 2.0, "b": 4.0, "e": 2.0, "f": 4.0, "w": 2.0, "s": 0.5},
    "schedule": {"rho0": 0.02, "tau1": 1.0, "tau2": 0.51, "sgld_rho0": None},
    "delta": {"policy": "fixed", "value": 0.25},
    "master_seed": 12345,
    "mcmc_sweeps": 100000,
    "sgld_thin": 1,
}


def load_config(source) -> dict:
    """Merge a config dict or JSON file over the defaults and validate it."""
    if isinstance(source, (str, Path)):
        with open(source) as fh:
            raw = json.load(fh)
    elif source is None:
        raw = {}
    else:
        raw = source
    jsonschema.validate(raw, CONFIG_SCHEMA)
    cfg = copy.deepcopy(DEFAULTS)
    for key, val in raw.items():
        if isinstance(val, dict) and isinstance(cfg.get(key), dict):
            cfg[key].update(val)
        else:
            cfg[key] = val
    if "ref_kappa" not in cfg:
        cfg["ref_kappa"] = min(cfg["kappas"])
    if cfg["ref_kappa"] not in cfg["kappas"]:
        raise ValueError("ref_kappa must be one of the configured kappas")
    if cfg["scenario"]["name"] == "custom" and "mu" not in cfg["scenario"]:
        raise ValueError("custom scenario requires mu, alpha, beta")
    if cfg["scenario"]["name"] == "sparse10":
        cfg["scenario"].setdefault("level", "high")
        cfg["scenario"].setdefault("mask_seed", 0)
    return cfg


def experiment_id(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:12]


def _build_scenario(sc: dict) -> ScenarioSpec:
    T = float(sc.get("T", 1000.0))
    if sc["name"] == "dense3":
        return dense3(T)
    if sc["name"] == "sparse10":
        return sparse10(sc.get("level", "high"), T, sc.get("mask_seed", 0))
    params = HawkesParams(
        np.asarray(sc["mu"], dtype=np.float64),
        np.asarray(sc["alpha"], dtype=np.float64),
        np.asarray(sc["beta"], dtype=np.float64),
    )
    return custom_scenario(params, T)


def _priors_from_cfg(p: dict, K: int) -> GammaPriorSet:
    return GammaPriorSet.constant(
        K, a=p["a"], b=p["b"], e=p["e"], f=p["f"], w=p["w"], s=p["s"]
    )


def _parse_budget(spec) -> tuple[Budget, str]:
    if isinstance(spec, dict):
        n = int(spec["iters"])
        return Budget(max_iters=n), f"{n}it"
    sec = float(spec)
    tag = f"{int(sec)}s" if sec == int(sec) else f"{sec}s"
    return Budget(seconds=sec), tag


def _task_seed(master: int, dataset: int, method: str, kappa: float, init: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(
        master,
        spawn_key=(1, dataset, METHODS.index(method), int(round(kappa * 1_000_000)), init),
    )


def _dataset_seed(master: int, dataset: int) -> int:
    return int(np.random.SeedSequence(master, spawn_key=(0, dataset)).generate_state(1)[0])


def budgeted_fit(
    method: str,
    seq: EventSequence,
    priors: GammaPriorSet,
    kappa: float,
    budget: Budget,
    rng: np.random.Generator,
    schedule_cfg: dict | None = None,
    delta_cfg: dict | None = None,
    init: HawkesParams | None = None,
    mcmc_sweeps: int = 100000,
    sgld_thin: int = 1,
) -> FitResult:
    """Dispatch one budgeted fit by method name.

    ``delta_cfg`` picks the boundary threshold: a fixed value, or a multiple
    of the mean inverse decay at the initialization.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    sch = dict(DEFAULTS["schedule"])
    if schedule_cfg:
        sch.update(schedule_cfg)
    dl = dict(DEFAULTS["delta"])
    if delta_cfg:
        dl.update(delta_cfg)
    if init is None:
        init = init_params(priors, rng)
    if dl["policy"] == "fixed":
        delta = float(dl["value"])
    else:
        delta = adaptive_delta(init, dl["value"])
    bc = CompensatorMode("boundary", delta)
    sched = StepSchedule(sch["rho0"], sch["tau1"], sch["tau2"])

    if method in ("sgem", "sgem-c"):
        mode = LEWIS if method == "sgem" else bc
        return fit_sgem(seq, priors, sched, kappa, budget, rng, mode=mode, init=init)
    if method in ("sgvi", "sgvi-c"):
        mode = LEWIS if method == "sgvi" else bc
        return fit_sgvi(seq, priors, sched, kappa, budget, rng, mode=mode, init=init)
    if method in ("sgld", "sgld-apx"):
        rho0 = sch["sgld_rho0"]
        if rho0 is None:
            rho0 = sgld_step_scale(seq.T, kappa)
        lsched = StepSchedule(rho0, sch["tau1"], sch["tau2"])
        mode = EXACT if method == "sgld" else bc
        return fit_sgld(
            seq, priors, lsched, kappa, budget, rng, mode=mode, init=init, thin=sgld_thin
        )
    mode = {"mcmc": LEWIS, "mcmc-c": bc, "mcmc-rw": EXACT}[method]
    if budget.max_iters is not None:
        return fit_mcmc(seq, priors, rng, n_sweeps=budget.max_iters, mode=mode, init=init)
    return fit_mcmc(
        seq, priors, rng, n_sweeps=mcmc_sweeps, mode=mode, init=init, budget=budget
    )


def ingest_events(path, T: float | None = None, K: int | None = None) -> tuple[EventSequence, dict]:
    """Read an event CSV and report its shape, for external datasets."""
    seq = read_events_csv(path, T=T, K=K)
    report = {
        "n": seq.n,
        "n_by_dim": seq.counts().tolist(),
        "T": seq.T,
        "K": seq.K,
    }
    return seq, report


def _run_task(task: dict) -> str:
    """Execute one grid task and write its fit JSON; returns the tag."""
    seq = read_events_csv(task["data_csv"], T=task["T"], K=task["K"])
    priors = _priors_from_cfg(task["priors"], seq.K)
    budget, _ = _parse_budget(task["budget"])
    ss = _task_seed(
        task["master_seed"], task["dataset"], task["method"], task["kappa"], task["init"]
    )
    rng = np.random.default_rng(ss)
    try:
        result = budgeted_fit(
            task["method"],
            seq,
            priors,
            task["kappa"],
            budget,
            rng,
            schedule_cfg=task["schedule"],
            delta_cfg=task["delta"],
            mcmc_sweeps=task["mcmc_sweeps"],
            sgld_thin=task["sgld_thin"],
        )
        payload = result.to_dict()
    except Exception as exc:  # fit failures are recorded, the grid continues
        payload = {"method": task["method"], "failed": True, "failure": repr(exc)}
    doc = {
        "task": {
            "dataset": task["dataset"],
            "method": task["method"],
            "kappa": task["kappa"],
            "budget": task["budget"],
            "init": task["init"],
            "seed_spawn_key": list(ss.spawn_key),
            "master_seed": task["master_seed"],
        },
        "result": payload,
    }
    out = Path(task["out_json"])
    with open(out, "w") as fh:
        json.dump(doc, fh, indent=1, sort_keys=True)
        fh.write("\n")
    return out.stem


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_format_cell(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _aggregate(out: Path, cfg: dict, spec: ScenarioSpec) -> None:
    """Serial pass over fit files producing the metric and BODL tables."""
    fits_dir = out / "fits"
    groups: dict[tuple, list[dict]] = {}
    for fp in sorted(fits_dir.glob("*.json")):
        with open(fp) as fh:
            doc = json.load(fh)
        t = doc["task"]
        res = doc["result"]
        if res.get("failed"):
            continue
        key = (t["method"], json.dumps(t["budget"]), float(t["kappa"]), t["dataset"])
        groups.setdefault(key, []).append(res)

    est_rows: list[list] = []
    bodl_rows: list[list] = []
    by_mbd: dict[tuple, dict[float, float]] = {}
    for (method, budget, kappa, dataset), results in sorted(groups.items()):
        best = max(results, key=lambda r: r["odl"])
        fit = FitResult.from_dict(best)
        rep = estimation_report(spec.params, fit.params, fit.intervals, spec.mask)
        for name, value in sorted(rep.to_dict().items()):
            est_rows.append([method, budget, kappa, dataset, name, float(value)])
        by_mbd.setdefault((method, budget, dataset), {})[kappa] = max(
            r["odl"] for r in results
        )

    ref = float(cfg["ref_kappa"])
    mean_acc: dict[tuple, list[float]] = {}
    for (method, budget, dataset), odls in sorted(by_mbd.items()):
        use_ref = ref if ref in odls else min(odls)
        comp = bodl_rbodl({k: [v] for k, v in odls.items()}, use_ref)
        for kappa in sorted(odls):
            bodl_rows.append(
                [method, budget, kappa, dataset, comp.bodl[kappa], comp.rbodl[kappa]]
            )
            mean_acc.setdefault((method, budget, kappa), []).append(comp.rbodl[kappa])

    mean_rows = [
        [m, b, k, float(np.mean(v))] for (m, b, k), v in sorted(mean_acc.items())
    ]
    tables = out / "tables"
    _write_csv(
        tables / "estimation.csv",
        ["method", "budget", "kappa", "dataset", "metric", "value"],
        est_rows,
    )
    _write_csv(
        tables / "bodl.csv",
        ["method", "budget", "kappa", "dataset", "bodl", "rbodl"],
        bodl_rows,
    )
    _write_csv(
        tables / "rbodl_mean.csv", ["method", "budget", "kappa", "mean_rbodl"], mean_rows
    )


def run_experiment(cfg, out_dir, workers: int | None = None) -> Path:
    """Run the full grid described by ``cfg`` under ``out_dir``.

    Returns the experiment directory. Worker count comes from the argument,
    else the SGHAWKES_WORKERS environment variable, else 1.
    """
    cfg = load_config(cfg)
    if workers is None:
        workers = int(os.environ.get("SGHAWKES_WORKERS", "1"))
    out = Path(out_dir) / experiment_id(cfg)
    for sub in ("data", "fits", "tables"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    with open(out / "config.json", "w") as fh:
        json.dump(cfg, fh, indent=1, sort_keys=True)
        fh.write("\n")

    spec = _build_scenario(cfg["scenario"])
    data_files: list[str] = []
    for d in range(cfg["datasets"]):
        stem = out / "data" / f"d{d:03d}"
        seed = _dataset_seed(cfg["master_seed"], d)
        seq = simulate(spec, seed)
        save_dataset(seq, spec, seed, f"{stem}.csv", f"{stem}.json")
        data_files.append(str(stem) + ".csv")

    tasks: list[dict] = []
    for d in range(cfg["datasets"]):
        for method in cfg["methods"]:
            kappas = cfg["kappas"] if method in _STOCHASTIC else [1.0]
            for kappa in kappas:
                for budget in cfg["budgets"]:
                    _, btag = _parse_budget(budget)
                    for init in range(cfg["inits"]):
                        tag = f"d{d:03d}_{method}_k{kappa}_b{btag}_i{init:02d}"
                        tasks.append(
                            {
                                "dataset": d,
                                "method": method,
                                "kappa": float(kappa),
                                "budget": budget,
                                "init": init,
                                "data_csv": data_files[d],
                                "T": spec.T,
                                "K": spec.params.K,
                                "priors": cfg["priors"],
                                "schedule": cfg["schedule"],
                                "delta": cfg["delta"],
                                "master_seed": cfg["master_seed"],
                                "mcmc_sweeps": cfg["mcmc_sweeps"],
                                "sgld_thin": cfg["sgld_thin"],
                                "out_json": str(out / "fits" / f"{tag}.json"),
                            }
                        )
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            list(pool.map(_run_task, tasks))
    else:
        for task in tasks:
            _run_task(task)
    _aggregate(out, cfg, spec)
    return out
