"""Command-line interface.

Verbs:
  run CONFIG            run a multi-seed experiment, write regret/weights CSVs
  bounds PARAMS         evaluate all bound families for one instance
  table GRID            old-vs-new bound comparison over a parameter grid
  verify-lemmas         run the closed-form verification suites

Exit codes: 0 success, 1 configuration error, 2 solver failure,
3 verification failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .bounds import (
    BoundInputs,
    baseline_bounds,
    sqrt_condition_bounds,
    tsallis_bounds,
)
from .errors import ConfigError, SolverError
from .harness import (
    ExperimentConfig,
    regime_table,
    run_experiment,
    write_regime_csv,
    write_regret_csv,
    write_weights_csv,
)
from .oracles import run_all_suites

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_VERIFY = 3


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tsallisinf",
        description="Bandit simulation and regret-bound verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run an experiment config")
    run_p.add_argument("config", type=Path, help="JSON experiment config")
    run_p.add_argument(
        "--seed", type=int, default=None,
        help="replace the config's seeds with this master (same seed count)",
    )
    run_p.add_argument(
        "--out-dir", type=Path, default=None,
        help="output directory (overrides the config's output.dir)",
    )
    run_p.add_argument(
        "--threads", type=int, default=1,
        help="worker processes for seed parallelism (default 1)",
    )

    bounds_p = sub.add_parser("bounds", help="evaluate bounds for one instance")
    bounds_p.add_argument("params", type=Path, help="JSON bound parameters")
    bounds_p.add_argument("--out-dir", type=Path, default=None)

    table_p = sub.add_parser("table", help="old-vs-new bound comparison table")
    table_p.add_argument("grid", type=Path, help="JSON grid of instances")
    table_p.add_argument("--out-dir", type=Path, default=None)

    verify_p = sub.add_parser("verify-lemmas", help="run verification suites")
    verify_p.add_argument(
        "--trials", type=int, default=500,
        help="instances for the main suite; others scale down from it",
    )
    verify_p.add_argument("--seed", type=int, default=0)
    return parser


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from None


def _cmd_run(args) -> int:
    config = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        entropies = tuple(
            (args.seed, i) for i in range(len(config.seed_entropies))
        )
        config = dataclasses.replace(config, seed_entropies=entropies)
    out_dir = args.out_dir if args.out_dir is not None else config.out_dir
    if out_dir is None:
        raise ConfigError("no output directory: set output.dir or pass --out-dir")
    result = run_experiment(config, threads=args.threads)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    regret_path = write_regret_csv(result, out_dir / "regret.csv")
    weights_path = write_weights_csv(result, out_dir / "weights.csv")
    print(
        f"ran {result.n_seeds} seeds x {config.horizon} rounds "
        f"({config.environment.regime}, {config.estimator})"
    )
    print(
        f"final regret {result.final_mean_regret:.4f} "
        f"+/- {result.final_stderr:.4f}"
    )
    print(f"wrote {regret_path} and {weights_path}")
    return EXIT_OK


def _cmd_bounds(args) -> int:
    raw = _load_json(args.params)
    if not isinstance(raw, dict):
        raise ConfigError("bound parameters must be a JSON object")
    known = {"n_arms", "horizon", "gaps", "corruption", "scale", "offset"}
    extra = set(raw) - known
    if extra:
        raise ConfigError(f"unexpected bound parameter keys: {sorted(extra)}")
    try:
        inputs = BoundInputs(
            n_arms=raw.get("n_arms"),
            horizon=raw.get("horizon"),
            gaps=raw.get("gaps"),
            corruption=raw.get("corruption", 0.0),
            scale=raw.get("scale", 1.25),
            offset=raw.get("offset"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad bound parameters: {exc}") from None

    families = {
        "t1": baseline_bounds(inputs),
        "t2": tsallis_bounds(inputs),
        "t3": sqrt_condition_bounds(inputs),
    }
    lines = []
    for tier, bounds_ in families.items():
        for variant, bv in (
            ("adv", bounds_.adversarial),
            ("sto", bounds_.self_bounding),
            ("stoC", bounds_.corrupted),
        ):
            lines.append((f"bound_{tier}_{variant}", bv))
    for name, bv in lines:
        if bv.valid:
            print(f"{name} = {bv.value!r}")
        else:
            print(f"{name} = NA ({bv.reason})")
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        rows = ["bound,value,valid,reason"]
        for name, bv in lines:
            value = "NA" if not bv.valid else repr(float(bv.value))
            rows.append(f"{name},{value},{str(bv.valid).lower()},{bv.reason}")
        (out_dir / "bounds.csv").write_text("\n".join(rows) + "\n")
        print(f"wrote {out_dir / 'bounds.csv'}")
    return EXIT_OK


def _cmd_table(args) -> int:
    raw = _load_json(args.grid)
    if not isinstance(raw, dict) or "instances" not in raw:
        raise ConfigError("grid file must be an object with an 'instances' list")
    extra = set(raw) - {"instances"}
    if extra:
        raise ConfigError(f"unexpected grid keys: {sorted(extra)}")
    rows = regime_table(raw["instances"])
    for row in rows:
        sto = row.ratio(row.old_self_bounding, row.new_self_bounding)
        cor = row.ratio(row.old_corrupted, row.new_corrupted)
        print(
            f"K={row.n_arms} T={row.horizon} C={row.corruption:.6g}: "
            f"self-bounding old/new = {sto:.4f}, "
            f"corrupted old/new = {cor:.4f}, "
            f"reference sqrt(lnT/lnlnT) = {row.reference_ratio:.4f}"
        )
    if args.out_dir is not None:
        out_dir = Path(args.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        path = write_regime_csv(rows, out_dir / "regimes.csv")
        print(f"wrote {path}")
    return EXIT_OK


def _cmd_verify(args) -> int:
    if args.trials < 1:
        raise ConfigError(f"--trials must be >= 1, got {args.trials}")
    results = run_all_suites(trials=args.trials, seed=args.seed)
    all_passed = True
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        print(
            f"{status} {check.name} ({check.n_instances} instances): {check.detail}"
        )
        all_passed = all_passed and check.passed
    return EXIT_OK if all_passed else EXIT_VERIFY


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "bounds": _cmd_bounds,
        "table": _cmd_table,
        "verify-lemmas": _cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


if __name__ == "__main__":
    sys.exit(main())
