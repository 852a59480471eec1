import dataclasses
import math
from pathlib import Path
from typing import Any

from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.models import (
    DinkelbachVariant,
    Experiment,
    GainDbConvention,
    NullingMode,
    OptimizerResult,
    RcsModel,
    SinrReport,
    SweepVariable,
)

# --- Scenario (Table-1 units) ---


class ScenarioConfig(BaseModel):
    """Scenario as written in a config file: dB, dBm, dBsm, meters, Hz, radians."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    num_antennas: int = Field(ge=1)
    num_repeaters: int = Field(ge=0)
    carrier_hz: float = Field(gt=0)
    l_ad_m: float = Field(gt=0)
    l_au_m: float = Field(gt=0)
    l_a1_m: float = Field(gt=0)
    spacing_m: float | None = Field(default=None, ge=0)  # None -> repeater_span_m / N
    repeater_span_m: float = Field(default=400.0, gt=0)
    theta_rad: float = Field(ge=0, le=math.pi)
    rcs_dbsm: float
    rcs_model: RcsModel = RcsModel.swerling1
    noise_repeater_dbm: float
    noise_ap_dbm: float
    noise_ue_dbm: float
    alpha_max_db: float
    gain_db_convention: GainDbConvention = GainDbConvention.power
    gamma_ue_req_db: float
    rho_max_dbm: float
    nulling: NullingMode = NullingMode.transpose


# --- Sweeps ---


class SweepSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    variable: SweepVariable
    values: list[float] = Field(min_length=1)
    fixed: dict[str, Any] = Field(default_factory=dict)
    mc_trials: int = Field(default=0, ge=0)  # 0 skips the Monte-Carlo column
    seed: int
    include_rr: bool = False

    @field_validator("values")
    @classmethod
    def strictly_increasing(cls, values: list[float]) -> list[float]:
        if any(b <= a for a, b in zip(values, values[1:], strict=False)):
            raise ValueError("sweep values must be strictly increasing")
        return values


# --- Runs ---


class RunConfig(BaseModel):
    scenario: ScenarioConfig
    experiment: Experiment
    overrides: dict[str, Any] = Field(default_factory=dict)
    seed: int
    out_dir: Path
    trials: int = Field(ge=1)
    workers: int = Field(ge=0)
    include_rr: bool = False
    variant: DinkelbachVariant = DinkelbachVariant.linearized
    sweep: SweepSpec | None = None


# --- API ---


class OptimizeRequest(BaseModel):
    scenario: ScenarioConfig
    variant: DinkelbachVariant = DinkelbachVariant.linearized


class OptimizeResponse(BaseModel):
    rho_s: float
    rho_c: float
    t: list[float]
    alpha: list[float]
    active_set: list[int]
    lambda_star: float
    gamma_s: float
    gamma_s_db: float
    iterations: int
    residuals: list[float]
    converged: bool

    @classmethod
    def from_result(cls, result: OptimizerResult) -> "OptimizeResponse":
        return cls(
            rho_s=result.power.rho_s,
            rho_c=result.power.rho_c,
            t=result.t.tolist(),
            alpha=result.alpha.tolist(),
            active_set=list(result.active_set),
            lambda_star=result.lambda_star,
            gamma_s=result.gamma_s,
            gamma_s_db=10.0 * math.log10(result.gamma_s) if result.gamma_s > 0 else -math.inf,
            iterations=result.iterations,
            residuals=result.residuals,
            converged=result.converged,
        )


class SinrRequest(BaseModel):
    scenario: ScenarioConfig
    trials: int = Field(default=1000, ge=100, le=100_000)
    seed: int | None = None


class SinrResponse(BaseModel):
    gamma_ue_closed: float
    gamma_ue_mc: float
    gamma_s_approx: float
    gamma_s_norr: float
    gamma_s_full: float | None
    mc_trials: int
    mc_stderr: float
    full_stderr: float | None
    self_loop_share: float
    spectral_radius: float

    @classmethod
    def from_report(cls, report: SinrReport) -> "SinrResponse":
        return cls.model_validate(dataclasses.asdict(report))
