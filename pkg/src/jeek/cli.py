"""Command-line front end: ``jeek simulate | estimate | sweep``.

Every run writes into one output directory with fixed file names and a
``manifest.json`` recording the resolved parameters, seeds and versions.
Option values are resolved as command-line flags, then the ``--config`` JSON
file, then built-in defaults.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import platform
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .backward import (DEFAULT_V_GRID, RCOND_MIN, SingularBackwardMapError, TaskDataset,
                       ThresholdSelectionError, proxy_backward_map)
from .entry_lp import THREADS_ENV, estimate, lambda_grid
from .evaluate import MetricsReport, sweep
from .knowledge import (KnowledgeWeights, build_cohub_weights, build_group_weights,
                        build_matrix_weights, build_perturbed_weights, group_edges,
                        uniform_weights)
from .matio import dumps, read_container, read_csv, read_matrix, write_container, write_csv
from .simulate import PROTOCOLS, GroundTruth, generate, sample_gaussian

PROG = "jeek"

# offset between the graph seed and the sampling seed of the same run
SAMPLE_SEED_OFFSET = 2**32

TRUTH_FILE = "truth.json"
PRECISION_FILE = "precision.json"
MANIFEST_FILE = "manifest.json"


class UsageError(Exception):
    """Bad option values detected after argument parsing."""


# ---------------------------------------------------------------------------
# option parsing
# ---------------------------------------------------------------------------

def _positive_int(s: str) -> int:
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _gamma(s: str) -> float:
    v = float(s)
    if not v > 1:
        raise argparse.ArgumentTypeError(f"gamma must exceed 1, got {s}")
    return v


DEFAULTS = {
    "protocol": "cohub",
    "p": 50,
    "K": 2,
    "n": 50,
    "seed": 0,
    "seeds": 1,
    "hub_fraction": 0.05,
    "distance": None,
    "knowledge": "none",
    "baseline": None,
    "gamma": 2.0,
    "lambdas": "arith",
    "steps": 30,
    "lam": None,
    "lambda_index": 30,
    "v": None,
    "rcond_min": RCOND_MIN,
    "threads": None,
    "truth": None,
    "plots": True,
}


def _common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--out", required=True, type=Path, help="output directory (created if missing)")
    sub.add_argument("--config", type=Path, help="JSON file of option values; flags take precedence")


def _sim_opts(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--protocol", help=f"one of {', '.join(PROTOCOLS)}")
    sub.add_argument("--p", type=_positive_int, help="number of variables")
    sub.add_argument("--K", type=_positive_int, help="number of tasks")
    sub.add_argument("--n", type=_positive_int, help="samples per task")
    sub.add_argument("--seed", type=int, help="graph seed (sampling uses seed + 2**32)")
    sub.add_argument("--hub-fraction", dest="hub_fraction", type=float)
    sub.add_argument("--distance", type=Path, help="distance matrix CSV (brain protocol)")


def _est_opts(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--knowledge", help="weight spec, e.g. none, cohub:hubs=0,1:gamma=4, file:path=w.json")
    sub.add_argument("--gamma", type=_gamma, help="default gamma for knowledge specs")
    sub.add_argument("--v", type=float, help="fixed threshold v (default: select from the v grid)")
    sub.add_argument("--rcond-min", dest="rcond_min", type=float,
                     help="conditioning floor used when selecting v")
    sub.add_argument("--threads", type=_positive_int, help=f"entry-LP workers (fallback ${THREADS_ENV})")
    sub.add_argument("--truth", type=Path, help="truth.json, needed for hubs=truth knowledge")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog=PROG, description="Knowledge-weighted joint sparse precision estimation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subs = parser.add_subparsers(dest="command", required=True)

    sim = subs.add_parser("simulate", help="generate ground truth graphs and Gaussian samples")
    _common(sim)
    _sim_opts(sim)

    est = subs.add_parser("estimate", help="estimate individual and shared precision parts")
    _common(est)
    est.add_argument("--data", type=Path, nargs="+",
                     help="a simulate output directory, or one CSV (n x p) per task")
    _est_opts(est)
    est.add_argument("--lambda", dest="lam", type=float, help="explicit lambda")
    est.add_argument("--lambda-index", dest="lambda_index", type=_positive_int,
                     help="use the i-th value of the default lambda grid (1-based)")
    est.add_argument("--steps", type=_positive_int, help="length of the default lambda grid")

    sw = subs.add_parser("sweep", help="score estimates over a lambda grid on simulated data")
    _common(sw)
    _sim_opts(sw)
    _est_opts(sw)
    sw.add_argument("--seeds", type=_positive_int, help="number of consecutive seeds starting at --seed")
    sw.add_argument("--baseline", help="second knowledge spec for a paired AUC comparison")
    sw.add_argument("--lambdas", help="'arith', 'path' or a comma-separated list")
    sw.add_argument("--steps", type=_positive_int, help="grid length for 'arith' and 'path'")
    sw.add_argument("--no-plots", dest="plots", action="store_false", default=None,
                    help="skip the PNG figures")
    return parser


def _load_config(path: Path | None, allowed: set[str]) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError(f"config {path} must hold a JSON object")
    doc = {k.replace("-", "_"): v for k, v in doc.items()}
    unknown = sorted(set(doc) - allowed)
    if unknown:
        raise UsageError(f"config {path}: unknown keys {', '.join(unknown)}")
    return doc


def resolve(args: argparse.Namespace) -> dict:
    """Merge flags over config values over defaults."""
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out")}
    config = _load_config(args.config, set(flags))
    out = {}
    for key, flag in flags.items():
        if flag is not None:
            out[key] = flag
        elif key in config:
            out[key] = config[key]
        else:
            out[key] = DEFAULTS.get(key)
    for key in ("distance", "truth"):
        if out.get(key) is not None:
            out[key] = Path(out[key])
    if out.get("data") is not None:
        data = out["data"]
        out["data"] = [Path(data)] if isinstance(data, (str, Path)) else [Path(d) for d in data]
    return out


def resolve_threads(threads: int | None) -> int:
    if threads is not None:
        return int(threads)
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw == "":
        return 1
    try:
        val = int(raw)
    except ValueError:
        raise UsageError(f"${THREADS_ENV}={raw!r} is not an integer") from None
    if val < 1:
        raise UsageError(f"${THREADS_ENV} must be >= 1, got {val}")
    return val


# ---------------------------------------------------------------------------
# knowledge specs
# ---------------------------------------------------------------------------

def _int_list(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def parse_knowledge(spec: str, p: int, K: int, gamma: float = 2.0,
                    truth: GroundTruth | None = None) -> KnowledgeWeights:
    """Turn a knowledge spec string into weight matrices.

    Forms (fields separated by ``:``)::

        none
        cohub:hubs=0,1[:gamma=4]          hubs=truth reads hubs from --truth
        perturbed:hubs=0[:gamma=4][:present=1,0,1]
        group:nodes=0,1,2/5,6[:gamma=4]   '/' separates groups
        group:edges=0-1,2-3[:gamma=4]
        matrix:file=dist.csv
        file:path=weights.json            K individual matrices then W_S
    """
    head, *fields = spec.strip().split(":")
    opts = {}
    for f in fields:
        if "=" not in f:
            raise UsageError(f"knowledge field {f!r} is not key=value")
        k, v = f.split("=", 1)
        opts[k.strip()] = v.strip()
    g = float(opts.pop("gamma", gamma))

    def hubs() -> list[int]:
        raw = opts.pop("hubs", None)
        if raw is None:
            raise UsageError(f"knowledge '{head}' needs hubs=...")
        if raw == "truth":
            if truth is None:
                raise UsageError("hubs=truth needs a ground truth (--truth or simulated data)")
            return list(truth.hubs)
        return _int_list(raw)

    if head == "none":
        w = uniform_weights(p, K)
    elif head == "cohub":
        w = build_cohub_weights(p, K, hubs(), g)
    elif head == "perturbed":
        h = hubs()
        present = opts.pop("present", None)
        if present is None and truth is not None and "present" in truth.metadata:
            cls = tuple(truth.metadata["present"])
        else:
            cls = None if present is None else tuple(bool(x) for x in _int_list(present))
        w = build_perturbed_weights(p, K, h, g, cls)
    elif head == "group":
        if "nodes" in opts:
            edges = [e for grp in opts.pop("nodes").split("/") for e in group_edges(_int_list(grp))]
        elif "edges" in opts:
            edges = [tuple(int(x) for x in pair.split("-")) for pair in opts.pop("edges").split(",")]
        else:
            raise UsageError("knowledge 'group' needs nodes=... or edges=...")
        w = build_group_weights(p, K, edges, g)
    elif head == "matrix":
        if "file" not in opts:
            raise UsageError("knowledge 'matrix' needs file=...")
        w = build_matrix_weights(read_matrix(opts.pop("file")), K)
    elif head == "file":
        if "path" not in opts:
            raise UsageError("knowledge 'file' needs path=...")
        mats, _ = read_container(opts.pop("path"))
        w = KnowledgeWeights.from_matrices(mats)
    else:
        raise UsageError(f"unknown knowledge kind {head!r}")
    if opts:
        raise UsageError(f"unused knowledge fields: {', '.join(sorted(opts))}")
    if w.p != p or w.K != K:
        raise UsageError(f"knowledge weights are K={w.K}, p={w.p}; data are K={K}, p={p}")
    return w


# ---------------------------------------------------------------------------
# file helpers
# ---------------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def write_manifest(out: Path, command: str, params: dict, outputs: Sequence[str],
                   volatile: Sequence[str] = ()) -> None:
    """Record parameters, versions and a SHA-256 of every reproducible output.

    ``volatile`` files (wall-clock timings) are listed without digests.
    """
    digests = {name: hashlib.sha256((out / name).read_bytes()).hexdigest() for name in sorted(outputs)}
    doc = {
        "tool": PROG,
        "version": __version__,
        "command": command,
        "parameters": _jsonable(params),
        "versions": {"python": platform.python_version(), "numpy": np.__version__},
        "outputs": digests,
        "volatile_outputs": sorted(volatile),
    }
    (out / MANIFEST_FILE).write_text(dumps(doc))


def task_file(i: int) -> str:
    return f"data_task{i}.csv"


def write_truth(out: Path, truth: GroundTruth) -> list[str]:
    d = truth.decomp
    write_container(out / TRUTH_FILE, [*d.omega_individual, d.omega_shared],
                    delta=truth.delta, metadata=_jsonable(truth.metadata))
    write_container(out / PRECISION_FILE, list(truth.precisions), delta=truth.delta)
    return [TRUTH_FILE, PRECISION_FILE]


def read_truth(path: Path) -> GroundTruth:
    from .knowledge import PrecisionDecomposition

    mats, rest = read_container(path)
    if len(mats) < 2 or "delta" not in rest:
        raise ValueError(f"{path}: not a ground-truth container")
    return GroundTruth(PrecisionDecomposition(tuple(mats[:-1]), mats[-1]), rest["delta"],
                       rest.get("metadata", {}))


def read_dataset(paths: Sequence[Path]) -> tuple[TaskDataset, GroundTruth | None]:
    """Load tasks from a simulate directory or from explicit CSV files."""
    truth = None
    if len(paths) == 1 and Path(paths[0]).is_dir():
        root = Path(paths[0])
        files = []
        i = 0
        while (root / task_file(i)).exists():
            files.append(root / task_file(i))
            i += 1
        if not files:
            raise ValueError(f"{root}: no {task_file(0)} found")
        if (root / TRUTH_FILE).exists():
            truth = read_truth(root / TRUTH_FILE)
    else:
        files = [Path(p) for p in paths]
    tasks, names = [], None
    for f in files:
        X, header = read_csv(f)
        if names is None:
            names = header
        elif header is not None and header != names:
            raise ValueError(f"{f}: variable names differ from the first task")
        tasks.append(X)
    return TaskDataset(tuple(tasks), names), truth


def _distance(params: dict):
    if params["protocol"] != "brain":
        return None
    if params.get("distance") is None:
        raise UsageError("protocol 'brain' needs --distance (a p x p distance matrix CSV)")
    return read_matrix(params["distance"])


def _simulate_one(params: dict, seed: int) -> tuple[GroundTruth, TaskDataset]:
    if params["protocol"] not in PROTOCOLS:
        raise UsageError(f"unknown protocol {params['protocol']!r}; choose from {', '.join(PROTOCOLS)}")
    truth = generate(params["protocol"], params["p"], params["K"], seed,
                     distance=_distance(params), hub_fraction=params["hub_fraction"])
    data = sample_gaussian(truth, params["n"], seed + SAMPLE_SEED_OFFSET)
    return truth, data


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_simulate(params: dict, out: Path) -> list[str]:
    truth, data = _simulate_one(params, params["seed"])
    params["p"] = truth.p
    outputs = write_truth(out, truth)
    header = [f"x{j}" for j in range(truth.p)]
    for i, X in enumerate(data.tasks):
        write_csv(out / task_file(i), X, header)
        outputs.append(task_file(i))
    params["sample_seed"] = params["seed"] + SAMPLE_SEED_OFFSET
    params["delta"] = truth.delta
    return outputs


def cmd_estimate(params: dict, out: Path) -> list[str]:
    if not params.get("data"):
        raise UsageError("estimate needs --data (flag or config key 'data')")
    data, truth = read_dataset(params["data"])
    if params.get("truth") is not None:
        truth = read_truth(params["truth"])
    w = parse_knowledge(params["knowledge"], data.p, data.K, params["gamma"], truth)
    bmap = proxy_backward_map(data, params["v"], DEFAULT_V_GRID, params["rcond_min"])
    if params["lam"] is not None:
        lam = float(params["lam"])
    else:
        grid = lambda_grid(data.p, data.K, data.n_tot, params["steps"])
        if params["lambda_index"] > len(grid):
            raise UsageError(f"--lambda-index {params['lambda_index']} exceeds grid length {len(grid)}")
        lam = grid[params["lambda_index"] - 1]
    workers = resolve_threads(params["threads"])
    params["threads"] = workers
    est = estimate(bmap, w, lam, workers)

    outputs = []
    for i, m in enumerate(est.omega_individual):
        write_csv(out / f"omega_individual_{i}.csv", m)
        outputs.append(f"omega_individual_{i}.csv")
    write_csv(out / "omega_shared.csv", est.omega_shared)
    outputs.append("omega_shared.csv")
    for i, m in enumerate(est.omega_total):
        write_csv(out / f"omega_total_{i}.csv", m)
        outputs.append(f"omega_total_{i}.csv")
    write_container(out / "estimate.json", [*est.omega_individual, est.omega_shared],
                    layout="omega_individual[0..K-1], omega_shared",
                    **{"lambda": lam, "v_used": bmap.v_used})
    outputs.append("estimate.json")
    params["lambda_used"] = lam
    params["v_used"] = bmap.v_used
    return outputs


def _lambdas(params: dict, data: TaskDataset):
    spec = params["lambdas"]
    if isinstance(spec, (list, tuple)):
        return [float(x) for x in spec]
    if spec == "arith":
        return lambda_grid(data.p, data.K, data.n_tot, params["steps"])
    if spec == "path":
        return "path"
    try:
        return [float(x) for x in str(spec).split(",")]
    except ValueError:
        raise UsageError(f"--lambdas must be 'arith', 'path' or numbers, got {spec!r}") from None


def _report_files(out: Path, stem: str, rep: MetricsReport) -> list[str]:
    doc = rep.to_dict()
    timing = doc.pop("runtime_seconds")
    (out / f"{stem}_metrics.json").write_text(dumps(doc))
    (out / f"{stem}_timing.json").write_text(dumps(timing))
    (out / f"{stem}_roc.csv").write_text(rep.to_csv())
    return [f"{stem}_metrics.json"]


def _summary(reports: Sequence[MetricsReport], seeds: Sequence[int]) -> dict:
    return {
        "per_seed": [{"seed": s, "f1": r.f1, "auc": r.auc, "best_lambda": r.best_lambda,
                      "v_used": r.v_used}
                     for s, r in zip(seeds, reports)],
        "mean": {"f1": float(np.mean([r.f1 for r in reports])),
                 "auc": float(np.mean([r.auc for r in reports]))},
    }


def cmd_sweep(params: dict, out: Path) -> list[str]:
    workers = resolve_threads(params["threads"])
    params["threads"] = workers
    seeds = [params["seed"] + s for s in range(params["seeds"])]
    labels = {"knowledge": params["knowledge"]}
    if params.get("baseline"):
        labels["baseline"] = params["baseline"]
    reports = {k: [] for k in labels}
    outputs, volatile = [], []
    for seed in seeds:
        truth, data = _simulate_one(params, seed)
        lams = _lambdas(params, data)
        for key, spec in labels.items():
            w = parse_knowledge(spec, truth.p, truth.K, params["gamma"], truth)
            rep = sweep(data, truth, w, lams, v=params["v"], workers=workers,
                        rcond_min=params["rcond_min"], path_steps=params["steps"])
            reports[key].append(rep)
            outputs += _report_files(out, f"seed{seed}_{key}", rep)
            volatile += [f"seed{seed}_{key}_roc.csv", f"seed{seed}_{key}_timing.json"]

    summary = {key: _summary(reps, seeds) for key, reps in reports.items()}
    summary["auc_method"] = reports["knowledge"][0].to_dict()["auc_method"]
    if "baseline" in reports:
        rows = ["seed,auc_knowledge,auc_baseline,auc_delta"]
        deltas = []
        for s, a, b in zip(seeds, reports["knowledge"], reports["baseline"]):
            deltas.append(a.auc - b.auc)
            rows.append(f"{s},{a.auc!r},{b.auc!r},{deltas[-1]!r}")
        (out / "paired_auc.csv").write_text("\n".join(rows) + "\n")
        outputs.append("paired_auc.csv")
        summary["paired"] = {"mean_auc_delta": float(np.mean(deltas)),
                             "wins": int(sum(d > 0 for d in deltas)), "seeds": len(deltas)}
    (out / "summary.json").write_text(dumps(summary))
    outputs.append("summary.json")

    if params["plots"]:
        from .plotting import plot_lambda_curves, plot_roc

        groups = {labels[k]: reports[k] for k in reports}
        plot_roc(groups, out / "roc.png")
        plot_lambda_curves(groups, out / "f1_lambda.png")
        outputs += ["roc.png", "f1_lambda.png"]
    params["seed_list"] = seeds
    params["volatile"] = volatile
    return outputs


COMMANDS = {"simulate": cmd_simulate, "estimate": cmd_estimate, "sweep": cmd_sweep}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = resolve(args)
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        outputs = COMMANDS[args.command](params, out)
        volatile = params.pop("volatile", [])
        write_manifest(out, args.command, params, outputs, volatile)
    except UsageError as exc:
        parser.error(str(exc))
    except (SingularBackwardMapError, ThresholdSelectionError) as exc:
        print(f"{PROG}: error: backward map: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"{PROG}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
