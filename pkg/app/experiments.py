"""Config-driven runners for the SINR sweep, the activation table and the ROC family."""

import dataclasses
import time
from pathlib import Path
from typing import Any

import structlog
from joblib import Parallel, delayed

from app.artifacts import reserve_path, timestamp, write_csv, write_manifest
from app.detection import build_roc, run_hypothesis_mc, write_roc_csv
from app.errors import ConfigError, IsacError
from app.geometry import build_layout
from app.models import ActivationRow, DinkelbachVariant, RocCurve, SweepRow, SweepVariable
from app.montecarlo import resolve_workers
from app.optimizer import DEFAULT_MAX_ITER, DEFAULT_TOL, optimize
from app.scenario import apply_overrides, linear_to_db, to_scenario
from app.schemas import ScenarioConfig, SweepSpec
from app.sinr import MIN_MC_TRIALS, sensing_sinr_mc

log = structlog.get_logger()

SWEEP_KEYS = {
    SweepVariable.alpha_max_db: "alpha_max_db",
    SweepVariable.num_repeaters: "num_repeaters",
    SweepVariable.l_ad: "l_ad_m",
}

FIG2_REPEATER_COUNTS = (10, 25, 50, 100)

SWEEP_FIELDS = [
    "value",
    "gamma_s_approx_db",
    "gamma_s_mc_db",
    "mc_stderr",
    "active_count",
    "lambda_star",
    "error",
]
ACTIVATION_FIELDS = ["alpha_max_db", "num_repeaters", "active_count", "fraction_at_full_gain"]


def sweep_config(base: ScenarioConfig, spec: SweepSpec, value: float) -> ScenarioConfig:
    """Scenario for one sweep point: fixed overrides first, then the swept key."""
    point: float | int = int(value) if spec.variable is SweepVariable.num_repeaters else value
    return apply_overrides(base, {**spec.fixed, SWEEP_KEYS[spec.variable]: point})


def _sinr_row(
    base: ScenarioConfig,
    spec: SweepSpec,
    value: float,
    tol: float,
    max_iter: int,
    variant: DinkelbachVariant,
) -> SweepRow:
    started = time.perf_counter()
    try:
        s = to_scenario(sweep_config(base, spec, value))
        lay = build_layout(s)
        result = optimize(s, lay, tol=tol, max_iter=max_iter, variant=variant)
        mc_db: float | None = None
        stderr: float | None = None
        if spec.mc_trials:
            est = sensing_sinr_mc(
                s,
                lay,
                result.power,
                result.gains,
                spec.mc_trials,
                include_rr=spec.include_rr,
                seed=spec.seed,
            )
            mc_db, stderr = linear_to_db(est.estimate), est.stderr
        row = SweepRow(
            value=value,
            gamma_s_approx_db=linear_to_db(result.gamma_s),
            gamma_s_mc_db=mc_db,
            mc_stderr=stderr,
            active_count=len(result.active_set),
            lambda_star=result.lambda_star,
            runtime_ms=(time.perf_counter() - started) * 1e3,
        )
    except IsacError as exc:
        log.warning("sweep_row_failed", value=value, error=exc.code, message=exc.message)
        row = SweepRow(
            value=value,
            gamma_s_approx_db=None,
            gamma_s_mc_db=None,
            mc_stderr=None,
            active_count=None,
            lambda_star=None,
            runtime_ms=(time.perf_counter() - started) * 1e3,
            error=exc.code,
        )
    log.info("sweep_row", variable=str(spec.variable), value=value, runtime_ms=row.runtime_ms)
    return row


def sweep_sensing_sinr(
    spec: SweepSpec,
    base: ScenarioConfig,
    *,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    variant: DinkelbachVariant = DinkelbachVariant.linearized,
) -> list[SweepRow]:
    """One row per sweep value, in sweep order; a failing row is recorded, not raised."""
    if 0 < spec.mc_trials < MIN_MC_TRIALS:
        raise ConfigError(
            f"Monte-Carlo SINR needs at least {MIN_MC_TRIALS} trials",
            kind="unit_out_of_range",
            key="mc_trials",
            value=spec.mc_trials,
        )
    rows: list[SweepRow] = Parallel(n_jobs=resolve_workers(workers))(
        delayed(_sinr_row)(base, spec, value, tol, max_iter, variant) for value in spec.values
    )
    return rows


def _activation_row(
    base: ScenarioConfig,
    spec: SweepSpec,
    value: float,
    tol: float,
    max_iter: int,
    variant: DinkelbachVariant,
) -> ActivationRow:
    s = to_scenario(sweep_config(base, spec, value))
    result = optimize(s, build_layout(s), tol=tol, max_iter=max_iter, variant=variant)
    n = s.num_repeaters
    active = len(result.active_set)
    return ActivationRow(
        alpha_max_db=value,
        num_repeaters=n,
        active_count=active,
        fraction_at_full_gain=active / n if n > 0 else None,
    )


def activation_threshold(
    spec: SweepSpec,
    base: ScenarioConfig,
    *,
    workers: int = 1,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    variant: DinkelbachVariant = DinkelbachVariant.linearized,
) -> list[ActivationRow]:
    if spec.variable is not SweepVariable.alpha_max_db:
        raise ConfigError(
            "activation table sweeps alpha_max_db",
            kind="invalid_value",
            key="variable",
            value=str(spec.variable),
        )
    rows: list[ActivationRow] = Parallel(n_jobs=resolve_workers(workers))(
        delayed(_activation_row)(base, spec, value, tol, max_iter, variant)
        for value in spec.values
    )
    return rows


def roc_experiment(
    spec: SweepSpec,
    base: ScenarioConfig,
    *,
    trials: int,
    workers: int = 1,
    grid_size: int = 200,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    variant: DinkelbachVariant = DinkelbachVariant.linearized,
) -> list[tuple[float, RocCurve]]:
    """One ROC per configuration, all drawn from the same seed.

    Trial i uses the same target, user channel and noise draws in every
    configuration, so differences between curves come from the repeaters.
    """
    trials = spec.mc_trials or trials
    curves: list[tuple[float, RocCurve]] = []
    for value in spec.values:
        s = to_scenario(sweep_config(base, spec, value))
        lay = build_layout(s)
        result = optimize(s, lay, tol=tol, max_iter=max_iter, variant=variant)
        t_h1, t_h0 = run_hypothesis_mc(
            s,
            lay,
            result.power,
            result.gains,
            trials,
            include_rr=spec.include_rr,
            seed=spec.seed,
            workers=workers,
        )
        label = f"{spec.variable}={value:g}"
        curve = build_roc(t_h1, t_h0, grid_size, trials=trials, seed=spec.seed, label=label)
        log.info("roc_curve", label=label, auc=curve.auc, active=len(result.active_set))
        curves.append((value, curve))
    return curves


# --- Exporters ---


def write_sweep(
    out_dir: Path, experiment: str, rows: list[SweepRow], manifest: dict[str, Any]
) -> list[Path]:
    stamp = timestamp()
    table = write_csv(
        reserve_path(out_dir, experiment, ".csv", stamp),
        SWEEP_FIELDS,
        (dataclasses.asdict(row) for row in rows),
    )
    meta = write_manifest(reserve_path(out_dir, f"{experiment}-manifest", ".json", stamp), manifest)
    return [table, meta]


def write_activation(
    out_dir: Path, rows: list[ActivationRow], manifest: dict[str, Any]
) -> list[Path]:
    stamp = timestamp()
    table = write_csv(
        reserve_path(out_dir, "activation", ".csv", stamp),
        ACTIVATION_FIELDS,
        (dataclasses.asdict(row) for row in rows),
    )
    meta = write_manifest(reserve_path(out_dir, "activation-manifest", ".json", stamp), manifest)
    return [table, meta]


def write_roc(
    out_dir: Path,
    variable: SweepVariable,
    curves: list[tuple[float, RocCurve]],
    manifest: dict[str, Any],
) -> list[Path]:
    stamp = timestamp()
    paths = [
        write_roc_csv(curve, reserve_path(out_dir, f"roc-{variable}-{value:g}", ".csv", stamp))
        for value, curve in curves
    ]
    summary = [{"label": curve.label, "value": value, "auc": curve.auc} for value, curve in curves]
    meta = write_manifest(
        reserve_path(out_dir, "roc-manifest", ".json", stamp), {**manifest, "curves": summary}
    )
    return [*paths, meta]
