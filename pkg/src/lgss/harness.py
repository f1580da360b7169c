"""Scenario runner: repetitions x random partitions x methods, with reports.

Every (repetition, partition) pair is an independent job whose random
streams are keyed by its indices, so a process pool reproduces the serial
run exactly.  Within a job all stability-selection methods that share a
boosting configuration reuse one selection profile, i.e. they see the same
subsamples.

Output files
------------
``results.csv``
    One row per repetition x partition x method with the columns in
    :data:`RESULT_COLUMNS`.  Missing values are empty cells.
``summary.json``
    Per-method aggregates (means over partitions, then over repetitions)
    plus run metadata.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from .boosting import BoostConfig, fit_boost
from .datagen import (
    STREAM_DATA,
    STREAM_PARTITIONS,
    STREAM_SUBSAMPLES,
    Dataset,
    GroundTruth,
    Partition,
    ScenarioConfig,
    generate,
    make_partitions,
    read_csv,
    rng_stream,
)
from .errors import ConfigError, DataError, LGSSError
from .estimators import FittedSubmodel, evaluate_loss, fit_with_fallback
from .losses import get_loss
from .stabsel import GridSpec, PssConfig, StabSelConfig, compute_profile, select_from_profile

log = logging.getLogger(__name__)

METHOD_NAMES = ("raw_boost", "lss", "pss_es", "pss_fw", "pss_bw")
RESULT_COLUMNS = (
    "scenario",
    "repetition",
    "partition",
    "method",
    "selected_count",
    "tp_count",
    "precision",
    "val_loss",
    "test_loss",
    "pfer_bound",
    "status",
)
METRIC_COLUMNS = ("selected_count", "tp_count", "precision", "val_loss", "test_loss", "pfer_bound")


@dataclass(frozen=True)
class MethodSpec:
    name: str
    boost: BoostConfig = BoostConfig()
    grid: GridSpec | None = None
    pss: PssConfig | None = None

    def __post_init__(self) -> None:
        if self.name not in METHOD_NAMES:
            raise ConfigError(f"unknown method {self.name!r}; expected one of {METHOD_NAMES}")
        if self.name == "lss" and self.grid is None:
            raise ConfigError("lss needs a grid")
        if self.name.startswith("pss") and self.pss is None:
            raise ConfigError(f"{self.name} needs a PSS configuration")
        if self.pss is not None:
            expected = {"pss_es": "exhaustive", "pss_fw": "forward", "pss_bw": "backward"}.get(self.name)
            if self.pss.strategy != expected:
                raise ConfigError(f"{self.name} is inconsistent with strategy {self.pss.strategy!r}")

    @classmethod
    def default(cls, name: str, task: str = "regression") -> "MethodSpec":
        classification = task == "classification"
        if name == "lss":
            return cls(name, grid=GridSpec())
        if name == "pss_es":
            return cls(name, pss=PssConfig(0.25, 15 if classification else 20, "exhaustive"))
        if name in ("pss_fw", "pss_bw"):
            strategy = "forward" if name == "pss_fw" else "backward"
            return cls(name, pss=PssConfig(0.25, 15 if classification else 50, strategy))
        return cls(name)

    @classmethod
    def parse(cls, spec: Any, task: str = "regression") -> "MethodSpec":
        """From a method name or a dict such as ``{"name": "pss_es", "q0": 10}``."""
        if isinstance(spec, MethodSpec):
            return spec
        if isinstance(spec, str):
            return cls.default(spec, task)
        if not isinstance(spec, dict) or "name" not in spec:
            raise ConfigError(f"cannot parse method {spec!r}")
        spec = dict(spec)
        base = cls.default(spec.pop("name"), task)
        boost = BoostConfig(spec.pop("m_iter", base.boost.m_iter), spec.pop("kappa", base.boost.kappa))
        grid = GridSpec.parse(spec.pop("grid")) if "grid" in spec else base.grid
        pss = base.pss
        if pss is not None and ("pi_thr" in spec or "q0" in spec):
            pss = PssConfig(spec.pop("pi_thr", pss.pi_thr), spec.pop("q0", pss.q0), pss.strategy)
        if spec:
            raise ConfigError(f"unknown keys for method {base.name}: {sorted(spec)}")
        return cls(base.name, boost, grid, pss)

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {"name": self.name, "m_iter": self.boost.m_iter, "kappa": self.boost.kappa}
        if self.grid is not None:
            out["grid"] = self.grid.to_dict()
        if self.pss is not None:
            out["pi_thr"] = self.pss.pi_thr
            out["q0"] = self.pss.q0
        return out


def parse_methods(specs: Sequence[Any] | None, task: str) -> list[MethodSpec]:
    if not specs:
        specs = METHOD_NAMES
    methods = [MethodSpec.parse(s, task) for s in specs]
    names = [m.name for m in methods]
    if len(set(names)) != len(names):
        raise ConfigError(f"duplicate methods: {names}")
    return methods


# -- metrics ----------------------------------------------------------------------------


def compute_metrics(
    selected,
    truth: GroundTruth | None,
    test_fit: FittedSubmodel | None,
    test: Dataset | None,
    loss,
) -> dict[str, Any]:
    """Selection counts against the truth and the test loss of the refit.

    Precision is ``None`` for an empty selection; true-positive figures are
    ``None`` without a ground truth.
    """
    selected = np.asarray(selected, dtype=int)
    out: dict[str, Any] = {"selected_count": int(selected.size), "tp_count": None, "precision": None}
    if truth is not None:
        tp = int(np.intersect1d(selected, truth.support).size)
        out["tp_count"] = tp
        out["precision"] = tp / selected.size if selected.size else None
    out["test_loss"] = (
        evaluate_loss(test_fit, test.X, test.y, loss) if test_fit is not None and test is not None and test.n else None
    )
    return out


def _partition_rows(
    data: Dataset,
    part: Partition,
    truth: GroundTruth | None,
    methods: Sequence[MethodSpec],
    B: int,
    n_sub: int,
    seed: int,
    keys: tuple[int, ...],
) -> list[dict[str, Any]]:
    fit_idx = np.union1d(part.train_idx, part.val_idx)
    # test rows never reach a fit or a validation score
    assert np.intersect1d(fit_idx, part.test_idx).size == 0
    assert np.intersect1d(part.train_idx, part.val_idx).size == 0
    train, val, full = data.rows(part.train_idx), data.rows(part.val_idx), data.rows(fit_idx)
    test = data.rows(part.test_idx)
    loss = get_loss(data.task)
    profiles: dict[BoostConfig, Any] = {}
    rows = []
    for method in methods:
        row: dict[str, Any] = {"method": method.name, "val_loss": None, "pfer_bound": None}
        try:
            if method.name == "raw_boost":
                selected = fit_boost(full.X, full.y, loss, method.boost).selected
                refit = fit_with_fallback(full.X, full.y, selected, loss, method.boost)
            else:
                if method.boost not in profiles:
                    profiles[method.boost] = compute_profile(
                        train, B, n_sub, loss, method.boost, seed, keys
                    )
                cfg = StabSelConfig(
                    B, n_sub, method.boost, loss.kind, method.name,
                    method.grid or GridSpec(), method.pss or PssConfig(),
                )
                model = select_from_profile(profiles[method.boost], cfg, train, val, full)
                selected, refit = model.support, model.submodel
                row["val_loss"] = model.val_loss
                row["pfer_bound"] = model.pfer_bound
            row.update(compute_metrics(selected, truth, refit, test, loss))
            row["status"] = "ok"
        except (LGSSError, np.linalg.LinAlgError) as exc:
            log.warning("%s failed on %s: %s", method.name, keys, exc)
            row.update({"selected_count": None, "tp_count": None, "precision": None, "test_loss": None})
            row["val_loss"] = row["pfer_bound"] = None
            row["status"] = f"error: {type(exc).__name__}: {exc}"
        rows.append(row)
    return rows


def _scenario_job(args) -> tuple[list[dict[str, Any]], float | None]:
    cfg, methods, r, k = args
    data, truth, nsr_inverse = generate(cfg, rng_stream(cfg.seed, r, STREAM_DATA))
    partitions = make_partitions(
        data.n, (cfg.n_train, cfg.n_val, cfg.n_test), cfg.n_partitions, rng_stream(cfg.seed, r, STREAM_PARTITIONS)
    )
    rows = _partition_rows(
        data, partitions[k], truth, methods, cfg.B, cfg.n_sub, cfg.seed, (r, STREAM_SUBSAMPLES, k)
    )
    for row in rows:
        row.update(scenario=cfg.name, repetition=r, partition=k)
    return rows, nsr_inverse


def _external_job(args) -> tuple[list[dict[str, Any]], None]:
    data, part, methods, B, n_sub, seed, name, k = args
    rows = _partition_rows(data, part, None, methods, B, n_sub, seed, (0, STREAM_SUBSAMPLES, k))
    for row in rows:
        row.update(scenario=name, repetition=0, partition=k)
    return rows, None


def _run_jobs(fn, jobs, n_jobs: int):
    if n_jobs == 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=n_jobs) as pool:
        return list(pool.map(fn, jobs, chunksize=1))


# -- reports -------------------------------------------------------------------------------


def _mean(values: list[float]) -> float | None:
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def aggregate_rows(rows: Sequence[dict[str, Any]]) -> dict[str, dict[str, Any]]:
    """Per-method means, first over partitions, then over repetitions.

    Missing cells (empty selections for precision, failed rows) are skipped
    at both levels.
    """
    methods: list[str] = []
    grouped: dict[str, dict[Any, list[dict[str, Any]]]] = {}
    for row in rows:
        if row["method"] not in grouped:
            methods.append(row["method"])
            grouped[row["method"]] = {}
        grouped[row["method"]].setdefault(row["repetition"], []).append(row)
    out = {}
    for m in methods:
        reps = grouped[m]
        entry: dict[str, Any] = {}
        for col in METRIC_COLUMNS:
            per_rep = [_mean([r[col] for r in reps[rep]]) for rep in reps]
            entry[f"mean_{col}"] = _mean(per_rep)
        all_rows = [r for rep in reps.values() for r in rep]
        entry["n_rows"] = len(all_rows)
        entry["n_failed"] = sum(1 for r in all_rows if r["status"] != "ok")
        entry["n_empty_models"] = sum(1 for r in all_rows if r["status"] == "ok" and r["selected_count"] == 0)
        out[m] = entry
    return out


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        if math.isnan(v):
            return ""
        return repr(float(v))
    return str(v)


def write_results_csv(rows: Sequence[dict[str, Any]], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RESULT_COLUMNS)
        for row in rows:
            writer.writerow([_cell(row.get(c)) for c in RESULT_COLUMNS])


def read_results_csv(path: str | Path) -> list[dict[str, Any]]:
    ints = {"repetition", "partition", "selected_count", "tp_count"}
    floats = {"precision", "val_loss", "test_loss", "pfer_bound"}
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(RESULT_COLUMNS) - set(reader.fieldnames or [])
        if missing:
            raise DataError(f"{path}: missing result columns {sorted(missing)}")
        for rec in reader:
            row: dict[str, Any] = {}
            for c in RESULT_COLUMNS:
                v = rec[c]
                try:
                    if c in ints:
                        row[c] = int(v) if v != "" else None
                    elif c in floats:
                        row[c] = float(v) if v != "" else None
                    else:
                        row[c] = v
                except ValueError:
                    raise DataError(f"{path}: line {reader.line_num}: bad value {v!r} for {c}") from None
            rows.append(row)
    return rows


@dataclass
class RunReport:
    rows: list[dict[str, Any]]
    aggregates: dict[str, dict[str, Any]]
    meta: dict[str, Any] = field(default_factory=dict)

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        csv_path, json_path = out_dir / "results.csv", out_dir / "summary.json"
        write_results_csv(self.rows, csv_path)
        with open(json_path, "w") as fh:
            json.dump({"meta": self.meta, "aggregates": self.aggregates}, fh, indent=2, sort_keys=True)
            fh.write("\n")
        return csv_path, json_path

    def summary_table(self) -> str:
        lines = [f"{'method':<10} {'selected':>9} {'TP':>7} {'precision':>10} {'test_loss':>11} {'empty':>6} {'failed':>6}"]
        for m, a in self.aggregates.items():
            def fmt(v, w, d):
                return f"{v:>{w}.{d}f}" if v is not None else f"{'-':>{w}}"
            lines.append(
                f"{m:<10} {fmt(a['mean_selected_count'], 9, 2)} {fmt(a['mean_tp_count'], 7, 2)} "
                f"{fmt(a['mean_precision'], 10, 3)} {fmt(a['mean_test_loss'], 11, 4)} "
                f"{a['n_empty_models']:>6} {a['n_failed']:>6}"
            )
        return "\n".join(lines)


def _sort_key(methods: Sequence[MethodSpec]):
    order = {m.name: i for i, m in enumerate(methods)}
    return lambda r: (r["repetition"], r["partition"], order[r["method"]])


def run_scenario(
    cfg: ScenarioConfig,
    methods: Sequence[MethodSpec | str | dict] | None = None,
    out: str | Path | None = None,
    n_jobs: int = 1,
) -> RunReport:
    """Run ``cfg.V`` repetitions x ``cfg.n_partitions`` partitions of every method.

    Raw boosting is trained on train+val rows; stability methods subsample
    the train rows and validate on the val rows.  All refits use train+val
    and every test loss is computed on the untouched test rows.
    """
    methods = parse_methods(methods, cfg.task)
    jobs = [(cfg, methods, r, k) for r in range(cfg.V) for k in range(cfg.n_partitions)]
    results = _run_jobs(_scenario_job, jobs, n_jobs)
    rows = sorted((row for rs, _ in results for row in rs), key=_sort_key(methods))
    meta: dict[str, Any] = {"scenario": cfg.to_dict(), "methods": [m.to_dict() for m in methods]}
    if cfg.task == "classification":
        # one value per repetition (every partition of a repetition shares the data)
        nsr = [results[r * cfg.n_partitions][1] for r in range(cfg.V)]
        meta["nsr_inverse"] = nsr
        meta["mean_nsr_inverse"] = sum(nsr) / len(nsr)
    report = RunReport(rows, aggregate_rows(rows), meta)
    if out is not None:
        report.write(out)
    return report


def run_external(
    data: Dataset | str | Path,
    task: str = "regression",
    methods: Sequence[MethodSpec | str | dict] | None = None,
    n_train: int = 50,
    n_val: int = 10,
    n_test: int | None = None,
    n_sub: int | None = None,
    B: int = 50,
    n_partitions: int = 100,
    seed: int = 0,
    out: str | Path | None = None,
    n_jobs: int = 1,
    name: str = "external",
    response: str = "y",
) -> RunReport:
    """Same pipeline on user data; no ground truth, so no TP or precision."""
    if not isinstance(data, Dataset):
        data = read_csv(data, task, response)
    if n_test is None:
        n_test = data.n - n_train - n_val
    if min(n_train, n_val, n_test) < 1:
        raise ConfigError(f"partition sizes ({n_train}, {n_val}, {n_test}) must be positive")
    if n_sub is None:
        n_sub = max(2, int(round(0.7 * n_train)))
    if not 2 <= n_sub < n_train:
        raise ConfigError(f"n_sub={n_sub} must lie in [2, n_train)")
    methods = parse_methods(methods, task)
    parts = make_partitions(data.n, (n_train, n_val, n_test), n_partitions, rng_stream(seed, 0, STREAM_PARTITIONS))
    jobs = [(data, part, methods, B, n_sub, seed, name, k) for k, part in enumerate(parts)]
    results = _run_jobs(_external_job, jobs, n_jobs)
    rows = sorted((row for rs, _ in results for row in rs), key=_sort_key(methods))
    meta = {
        "external": {
            "name": name, "task": task, "n": data.n, "p": data.p, "n_train": n_train, "n_val": n_val,
            "n_test": n_test, "n_sub": n_sub, "B": B, "n_partitions": n_partitions, "seed": seed,
        },
        "methods": [m.to_dict() for m in methods],
    }
    report = RunReport(rows, aggregate_rows(rows), meta)
    if out is not None:
        report.write(out)
    return report


def load_run_config(path: str | Path) -> tuple[ScenarioConfig, list[MethodSpec]]:
    """Scenario JSON: flat :class:`ScenarioConfig` keys plus an optional ``methods`` array."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object")
    methods = data.pop("methods", None)
    cfg = ScenarioConfig.from_dict(data)
    return cfg, parse_methods(methods, cfg.task)
