import argparse
import dataclasses
import json
import math
import sys
from collections.abc import Callable
from pathlib import Path
from typing import Any, NoReturn

import structlog
from pydantic import ValidationError

from app.artifacts import reserve_path, timestamp, write_csv, write_manifest
from app.config import Settings, get_settings
from app.errors import ConfigError, IsacError, UnknownExperimentError
from app.experiments import (
    FIG2_REPEATER_COUNTS,
    activation_threshold,
    roc_experiment,
    sweep_sensing_sinr,
    write_activation,
    write_roc,
    write_sweep,
)
from app.geometry import build_layout
from app.logs import configure_logging
from app.models import DinkelbachVariant, Experiment, SweepVariable
from app.optimizer import optimize
from app.scenario import apply_overrides, baseline_config, linear_to_db, load_config, to_scenario
from app.schemas import OptimizeResponse, RunConfig, SinrResponse, SweepSpec
from app.sinr import sinr_report

log = structlog.get_logger()

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}

DEFAULT_SWEEPS: dict[Experiment, tuple[SweepVariable, str]] = {
    Experiment.sinr_sweep: (SweepVariable.alpha_max_db, "0:80:1"),
    Experiment.activation: (SweepVariable.alpha_max_db, "0:80:1"),
    Experiment.roc: (SweepVariable.num_repeaters, "0,50,100"),
}
DEFAULT_SWEEP_TRIALS = 1000


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def parse_values(text: str) -> list[float]:
    """`start:stop:step` (inclusive) or a comma-separated list."""
    if ":" in text:
        try:
            start, stop, step = (float(part) for part in text.split(":"))
        except ValueError as exc:
            raise ConfigError(f"bad range: {text}", kind="invalid_value", key="values") from exc
        if step <= 0:
            raise ConfigError("range step must be positive", kind="invalid_value", key="values")
        count = math.floor((stop - start) / step + 1e-9) + 1
        return [round(start + i * step, 12) for i in range(max(count, 0))]
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad value list: {text}", kind="invalid_value", key="values") from exc


def parse_overrides(pairs: list[str]) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    for pair in pairs:
        key, sep, raw = pair.partition("=")
        if not sep or not key:
            raise ConfigError(f"expected KEY=VALUE, got {pair!r}", kind="invalid_value", key=pair)
        try:
            overrides[key.strip()] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key.strip()] = raw
    return overrides


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> NoReturn:
        raise ConfigError(f"bad arguments: {message}", kind="invalid_value", argument=message)


def build_parser(settings: Settings) -> argparse.ArgumentParser:
    parser = _Parser(
        prog="swarm-isac",
        description="Swarm-repeater ISAC drone detection: optimization and Monte-Carlo experiments",
    )
    parser.add_argument("--config", type=Path, help="scenario JSON in Table-1 units")
    parser.add_argument(
        "--experiment",
        required=True,
        help="one of: " + ", ".join(e.value for e in Experiment),
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="scenario override, repeatable",
    )
    parser.add_argument("--seed", type=int, default=settings.SEED)
    parser.add_argument("--trials", type=int, default=settings.MC_TRIALS)
    parser.add_argument("--out", type=Path, default=settings.OUT_DIR)
    parser.add_argument("--workers", type=int, default=settings.WORKERS, help="0 = all cores")
    parser.add_argument("--include-rr", type=parse_bool, default=False, metavar="BOOL")
    parser.add_argument(
        "--dinkelbach-variant",
        choices=[v.value for v in DinkelbachVariant],
        default=DinkelbachVariant.linearized.value,
    )
    parser.add_argument("--sweep-var", choices=[v.value for v in SweepVariable])
    parser.add_argument("--values", help="start:stop:step or a comma list")
    parser.add_argument(
        "--sweep-trials",
        type=int,
        default=DEFAULT_SWEEP_TRIALS,
        help="Monte-Carlo trials per SINR sweep row (0 = closed form only)",
    )
    return parser


def _sweep_spec(
    experiment: Experiment, args: argparse.Namespace, seed: int, trials: int
) -> SweepSpec | None:
    if experiment not in DEFAULT_SWEEPS:
        return None
    default_var, default_values = DEFAULT_SWEEPS[experiment]
    variable = SweepVariable(args.sweep_var) if args.sweep_var else default_var
    if args.values:
        values = parse_values(args.values)
    elif variable is SweepVariable.num_repeaters and experiment is Experiment.sinr_sweep:
        values = [float(n) for n in FIG2_REPEATER_COUNTS]
    elif variable is default_var:
        values = parse_values(default_values)
    else:
        raise ConfigError(
            f"--values is required when sweeping {variable}", kind="missing_field", key="values"
        )
    return SweepSpec(
        variable=variable,
        values=values,
        mc_trials=trials if experiment is Experiment.roc else args.sweep_trials,
        seed=seed,
        include_rr=args.include_rr,
    )


def parse_config(argv: list[str] | None = None, settings: Settings | None = None) -> RunConfig:
    settings = settings or get_settings()
    args = build_parser(settings).parse_args(argv)

    try:
        experiment = Experiment(args.experiment)
    except ValueError as exc:
        raise UnknownExperimentError(
            f"unknown experiment: {args.experiment}", experiment=args.experiment
        ) from exc

    base = load_config(args.config) if args.config else baseline_config()
    overrides = parse_overrides(args.overrides)
    try:
        return RunConfig(
            scenario=apply_overrides(base, overrides),
            experiment=experiment,
            overrides=overrides,
            seed=args.seed,
            out_dir=args.out,
            trials=args.trials,
            workers=args.workers,
            include_rr=args.include_rr,
            variant=DinkelbachVariant(args.dinkelbach_variant),
            sweep=_sweep_spec(experiment, args, args.seed, args.trials),
        )
    except ValidationError as exc:
        first = exc.errors()[0]
        key = ".".join(str(part) for part in first["loc"])
        raise ConfigError(f"unit out of range: {key}", kind="unit_out_of_range", key=key) from exc


def _manifest(config: RunConfig) -> dict[str, Any]:
    return {
        "experiment": config.experiment.value,
        "scenario": config.scenario.model_dump(mode="json"),
        "overrides": config.overrides,
        "seed": config.seed,
        "trials": config.trials,
        "include_rr": config.include_rr,
        "variant": config.variant.value,
        "gain_db_convention": config.scenario.gain_db_convention.value,
        "sweep": config.sweep.model_dump(mode="json") if config.sweep else None,
    }


def _emit(payload: dict[str, Any]) -> None:
    print(json.dumps(payload, indent=2, default=str))


def _run_optimize_once(config: RunConfig, settings: Settings) -> list[Path]:
    s = to_scenario(config.scenario)
    lay = build_layout(s)
    result = optimize(
        s,
        lay,
        tol=settings.DINKELBACH_TOL,
        max_iter=settings.DINKELBACH_MAX_ITER,
        variant=config.variant,
    )
    _emit(OptimizeResponse.from_result(result).model_dump())

    active = set(result.active_set)
    rows = [
        {
            "index": n,
            "l_an_m": float(lay.l_an[n]),
            "l_dn_m": float(lay.l_dn[n]),
            "t": float(result.t[n]),
            "alpha": float(result.alpha[n]),
            "active": n in active,
        }
        for n in range(s.num_repeaters)
    ]
    stamp = timestamp()
    table = write_csv(
        reserve_path(config.out_dir, "optimize-once", ".csv", stamp),
        ["index", "l_an_m", "l_dn_m", "t", "alpha", "active"],
        rows,
    )
    summary = {
        "lambda_star": result.lambda_star,
        "gamma_s_db": linear_to_db(result.gamma_s),
        "iterations": result.iterations,
        "converged": result.converged,
        "monotone": result.monotone,
    }
    meta = write_manifest(
        reserve_path(config.out_dir, "optimize-once-manifest", ".json", stamp),
        {**_manifest(config), "result": summary},
    )
    return [table, meta]


def _run_validate_sinr(config: RunConfig, settings: Settings) -> list[Path]:
    s = to_scenario(config.scenario)
    lay = build_layout(s)
    result = optimize(
        s,
        lay,
        tol=settings.DINKELBACH_TOL,
        max_iter=settings.DINKELBACH_MAX_ITER,
        variant=config.variant,
    )
    report = sinr_report(
        s, lay, result.power, result.gains, config.trials, seed=config.seed, workers=config.workers
    )
    gap_db = linear_to_db(report.gamma_s_norr) - linear_to_db(report.gamma_s_approx)
    _emit({**SinrResponse.from_report(report).model_dump(), "mc_minus_closed_db": gap_db})

    stamp = timestamp()
    record = dataclasses.asdict(report)
    table = write_csv(
        reserve_path(config.out_dir, "validate-sinr", ".csv", stamp), list(record), [record]
    )
    meta = write_manifest(
        reserve_path(config.out_dir, "validate-sinr-manifest", ".json", stamp), _manifest(config)
    )
    return [table, meta]


def _sweep(config: RunConfig) -> SweepSpec:
    if config.sweep is None:
        raise ConfigError("experiment needs a sweep", kind="missing_field", key="sweep")
    return config.sweep


def _run_sinr_sweep(config: RunConfig, settings: Settings) -> list[Path]:
    rows = sweep_sensing_sinr(
        _sweep(config),
        config.scenario,
        workers=config.workers,
        tol=settings.DINKELBACH_TOL,
        max_iter=settings.DINKELBACH_MAX_ITER,
        variant=config.variant,
    )
    return write_sweep(config.out_dir, config.experiment.value, rows, _manifest(config))


def _run_activation(config: RunConfig, settings: Settings) -> list[Path]:
    rows = activation_threshold(
        _sweep(config),
        config.scenario,
        workers=config.workers,
        tol=settings.DINKELBACH_TOL,
        max_iter=settings.DINKELBACH_MAX_ITER,
        variant=config.variant,
    )
    return write_activation(config.out_dir, rows, _manifest(config))


def _run_roc(config: RunConfig, settings: Settings) -> list[Path]:
    curves = roc_experiment(
        _sweep(config),
        config.scenario,
        trials=config.trials,
        workers=config.workers,
        grid_size=settings.ROC_GRID_SIZE,
        tol=settings.DINKELBACH_TOL,
        max_iter=settings.DINKELBACH_MAX_ITER,
        variant=config.variant,
    )
    return write_roc(config.out_dir, _sweep(config).variable, curves, _manifest(config))


RUNNERS: dict[Experiment, Callable[[RunConfig, Settings], list[Path]]] = {
    Experiment.optimize_once: _run_optimize_once,
    Experiment.validate_sinr: _run_validate_sinr,
    Experiment.sinr_sweep: _run_sinr_sweep,
    Experiment.activation: _run_activation,
    Experiment.roc: _run_roc,
}


def run(config: RunConfig, settings: Settings | None = None) -> int:
    settings = settings or get_settings()
    log.info("run_started", experiment=config.experiment.value, seed=config.seed)
    files = RUNNERS[config.experiment](config, settings)
    log.info("run_finished", experiment=config.experiment.value, files=[str(p) for p in files])
    return 0


def main(argv: list[str] | None = None) -> int:
    settings = get_settings()
    configure_logging(settings.LOG_LEVEL)
    try:
        return run(parse_config(argv, settings), settings)
    except IsacError as exc:
        log.error("run_failed", error=exc.code, message=exc.message)
        print(json.dumps(exc.record(), default=str), file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
