"""Command line interface.

Verbs: ``gen``, ``run``, ``run-external``, ``report`` and ``select``.
Exit codes: 0 success, 1 configuration error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .datagen import STREAM_DATA, STREAM_PARTITIONS, ScenarioConfig, generate, make_partitions, read_csv, rng_stream, write_csv
from .errors import ConfigError, DataError
from .harness import aggregate_rows, load_run_config, parse_methods, read_results_csv, run_external, run_scenario
from .stabsel import GridSpec, PssConfig, StabSelConfig, profile_to_dict, run_stability_selection, stable_model_to_dict
from .boosting import BoostConfig

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

# (flag, ScenarioConfig key, type)
_SCENARIO_FLAGS = [
    ("--p", "p", int),
    ("--n-train", "n_train", int),
    ("--n-sub", "n_sub", int),
    ("--n-val", "n_val", int),
    ("--n-test", "n_test", int),
    ("--s0", "s0", int),
    ("--snr", "snr", float),
    ("--mu-beta", "mu_beta", float),
    ("--mu-x", "mu_x", float),
    ("--B", "B", int),
    ("--V", "V", int),
    ("--task", "task", str),
    ("--n-partitions", "n_partitions", int),
    ("--name", "name", str),
]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _add_scenario_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="scenario JSON (flat ScenarioConfig keys, optional methods array)")
    for flag, key, typ in _SCENARIO_FLAGS:
        p.add_argument(flag, dest=key, type=typ, default=None)


def _scenario_from_args(args, require_seed: bool):
    methods = None
    data: dict = {}
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        methods = data.pop("methods", None)
    for _, key, _ in _SCENARIO_FLAGS:
        v = getattr(args, key)
        if v is not None:
            data[key] = v
    if args.seed is not None:
        data["seed"] = args.seed
    elif require_seed:
        raise ConfigError("--seed is required")
    cfg = ScenarioConfig.from_dict(data)
    return cfg, methods


def _methods_arg(value: str | None):
    return [m.strip() for m in value.split(",") if m.strip()] if value else None


def cmd_gen(args) -> int:
    cfg, _ = _scenario_from_args(args, require_seed=False)
    data, truth, nsr = generate(cfg, rng_stream(cfg.seed, args.repetition, STREAM_DATA))
    write_csv(data, args.out)
    if args.truth:
        doc = {
            "support": [int(j) + 1 for j in truth.support],
            "beta": {str(int(j) + 1): float(truth.beta[j]) for j in truth.support},
            "sigma_noise": truth.sigma_noise,
            "nsr_inverse": nsr,
        }
        Path(args.truth).write_text(json.dumps(doc, indent=2) + "\n")
    print(f"wrote {data.n} x {data.p} dataset to {args.out}")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg, methods = _scenario_from_args(args, require_seed=True)
    methods = parse_methods(_methods_arg(args.methods) or methods, cfg.task)
    report = run_scenario(cfg, methods, args.out, n_jobs=args.jobs)
    print(report.summary_table())
    if "mean_nsr_inverse" in report.meta:
        print(f"mean 1/NSR: {report.meta['mean_nsr_inverse']:.1f}")
    print(f"results in {args.out}")
    return EXIT_OK


def cmd_run_external(args) -> int:
    report = run_external(
        args.data,
        task=args.task,
        methods=_methods_arg(args.methods),
        n_train=args.n_train,
        n_val=args.n_val,
        n_test=args.n_test,
        n_sub=args.n_sub,
        B=args.B,
        n_partitions=args.n_partitions,
        seed=args.seed,
        out=args.out,
        n_jobs=args.jobs,
        name=args.name,
        response=args.response,
    )
    print(report.summary_table())
    print(f"results in {args.out}")
    return EXIT_OK


def cmd_report(args) -> int:
    rows = read_results_csv(args.results)
    doc = json.dumps({"aggregates": aggregate_rows(rows)}, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(doc + "\n")
    else:
        print(doc)
    return EXIT_OK


def cmd_select(args) -> int:
    data = read_csv(args.data, args.task, args.response)
    rng = rng_stream(args.seed, 0, STREAM_PARTITIONS)
    n_val = args.n_val
    part = make_partitions(data.n, (data.n - n_val, n_val, 0), 1, rng)[0]
    train, val = data.rows(part.train_idx), data.rows(part.val_idx)
    n_sub = args.n_sub or max(2, train.n // 2)
    method = args.method
    cfg = StabSelConfig(
        B=args.B,
        n_sub=n_sub,
        boost=BoostConfig(args.m_iter, args.kappa),
        loss="logistic" if args.task == "classification" else "squared",
        method=method,
        grid=GridSpec.parse(args.grid),
        pss=PssConfig(args.pi_thr, args.q0, {"pss_fw": "forward", "pss_bw": "backward"}.get(method, "exhaustive")),
    )
    model, profile = run_stability_selection(train, val, data, cfg, seed=args.seed, keys=(0, 2, 0), n_jobs=args.jobs)
    doc = {"stable_model": stable_model_to_dict(model), "profile": profile_to_dict(profile)}
    if data.columns:
        doc["stable_model"]["columns"] = [data.columns[j] for j in model.support]
    text = json.dumps(doc, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lgss", description="Loss-guided stability selection")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("gen", help="write one synthetic dataset as CSV")
    _add_scenario_flags(p)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--repetition", type=int, default=0, help="repetition index whose data to emit")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--truth", type=Path, help="also write the true support and coefficients as JSON")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("run", help="run a synthetic scenario")
    _add_scenario_flags(p)
    p.add_argument("--seed", type=int, default=None, help="root seed (required)")
    p.add_argument("--methods", help="comma separated subset of raw_boost,lss,pss_es,pss_fw,pss_bw")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("run-external", help="run the protocol on a CSV dataset")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--task", default="regression", choices=["regression", "classification"])
    p.add_argument("--response", default="y")
    p.add_argument("--n-train", type=int, required=True)
    p.add_argument("--n-val", type=int, required=True)
    p.add_argument("--n-test", type=int, default=None)
    p.add_argument("--n-sub", type=int, default=None)
    p.add_argument("--B", type=int, default=50)
    p.add_argument("--n-partitions", type=int, default=100)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--methods")
    p.add_argument("--name", default="external")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_run_external)

    p = sub.add_parser("report", help="recompute aggregates from a results CSV")
    p.add_argument("--results", required=True, type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("select", help="stability selection on one CSV, JSON to stdout")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--task", default="regression", choices=["regression", "classification"])
    p.add_argument("--response", default="y")
    p.add_argument("--n-val", type=int, required=True)
    p.add_argument("--n-sub", type=int, default=None)
    p.add_argument("--B", type=int, default=100)
    p.add_argument("--m-iter", type=int, default=100)
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--method", default="lss", choices=["lss", "pss_es", "pss_fw", "pss_bw"])
    p.add_argument("--grid", default="q:1-10", help='"q:1-10", "q:1,3,5" or "pi:0.05"')
    p.add_argument("--pi-thr", type=float, default=0.25)
    p.add_argument("--q0", type=int, default=20)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_select)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logging.getLogger("lgss").exception("internal error")
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
