import enum
import math
from dataclasses import dataclass, field, replace

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field
from scipy.constants import speed_of_light

ComplexArray = NDArray[np.complex128]
FloatArray = NDArray[np.float64]
BoolArray = NDArray[np.bool_]


class GainDbConvention(enum.StrEnum):
    power = "power"  # alpha_max = 10^(dB/20)
    amplitude = "amplitude"  # alpha_max = 10^(dB/10)


class RcsModel(enum.StrEnum):
    swerling0 = "swerling0"
    swerling1 = "swerling1"


class NullingMode(enum.StrEnum):
    transpose = "transpose"  # removes conj(h_AU): h_AU^T w_s = 0
    hermitian = "hermitian"  # removes h_AU: h_AU^H w_s = 0


class DinkelbachVariant(enum.StrEnum):
    linearized = "linearized"
    printed_test = "paper-typo"  # activation test without the repeater noise power


class Experiment(enum.StrEnum):
    sinr_sweep = "sinr-sweep"
    activation = "activation"
    roc = "roc"
    optimize_once = "optimize-once"
    validate_sinr = "validate-sinr"


class SweepVariable(enum.StrEnum):
    alpha_max_db = "alpha_max_db"
    num_repeaters = "N"
    l_ad = "l_AD"


# --- Scenario ---


class Scenario(BaseModel):
    """Physical parameters in linear units (W, m, m^2, Hz, rad).

    Built from a `ScenarioConfig` by `app.scenario.to_scenario`; nothing
    downstream of that boundary handles dB values.
    """

    model_config = ConfigDict(frozen=True)

    num_antennas: int = Field(ge=1)
    num_repeaters: int = Field(ge=0)
    carrier_hz: float = Field(gt=0)
    l_ad: float = Field(gt=0)
    l_au: float = Field(gt=0)
    l_a1: float = Field(gt=0)
    spacing: float = Field(ge=0)
    theta: float = Field(ge=0, le=math.pi)
    rcs_mean: float = Field(ge=0)
    rcs_model: RcsModel = RcsModel.swerling1
    noise_repeater: float = Field(gt=0)
    noise_ap: float = Field(gt=0)
    noise_ue: float = Field(ge=0)
    alpha_max: float = Field(ge=0)
    gamma_ue_req: float = Field(ge=0)
    rho_max: float = Field(gt=0)
    nulling: NullingMode = NullingMode.transpose

    @property
    def wavelength(self) -> float:
        return float(speed_of_light / self.carrier_hz)

    @property
    def t_max(self) -> float:
        return self.alpha_max**2


@dataclass(frozen=True)
class Layout:
    ap_position: FloatArray
    ula_axis: FloatArray
    repeater_positions: FloatArray  # (N, 2)
    drone_position: FloatArray
    ue_distance: float
    l_an: FloatArray
    l_dn: FloatArray
    l_nn: FloatArray  # (N, N), zero diagonal


# --- Channels ---


@dataclass(frozen=True)
class PathGains:
    beta_ad: float
    beta_an: FloatArray
    beta_adn: FloatArray
    beta_au: float
    beta_nn: FloatArray  # zero diagonal

    def with_rcs_scale(self, scale: float) -> "PathGains":
        """Target-dependent gains are linear in the RCS; everything else is unchanged."""
        return replace(self, beta_ad=self.beta_ad * scale, beta_adn=self.beta_adn * scale)


@dataclass(frozen=True)
class ChannelSet:
    h_ad: ComplexArray  # (M, M)
    h_ar: ComplexArray  # (M, N)
    h_adr: ComplexArray  # (M, N)
    h_rr: ComplexArray  # (N, N)
    h_au: ComplexArray  # (M,)
    gains: PathGains
    rcs_draw: float
    target_phase: float = 0.0

    def without_target(self) -> "ChannelSet":
        """Null hypothesis: both target channels removed, everything else kept."""
        return replace(
            self,
            h_ad=np.zeros_like(self.h_ad),
            h_adr=np.zeros_like(self.h_adr),
            gains=self.gains.with_rcs_scale(0.0),
            rcs_draw=0.0,
        )


# --- Signals ---


@dataclass(frozen=True)
class Precoders:
    w_c: ComplexArray
    w_s: ComplexArray


@dataclass(frozen=True)
class GainVector:
    alpha: FloatArray

    def __post_init__(self) -> None:
        if np.any(self.alpha < 0):
            raise ValueError("repeater gains must be non-negative")

    @classmethod
    def zeros(cls, n: int) -> "GainVector":
        return cls(np.zeros(n))

    @classmethod
    def from_squared(cls, t: FloatArray) -> "GainVector":
        return cls(np.sqrt(t))

    @property
    def t(self) -> FloatArray:
        return self.alpha**2


@dataclass(frozen=True)
class PowerSplit:
    rho_s: float
    rho_c: float

    def __post_init__(self) -> None:
        if self.rho_s < 0 or self.rho_c < 0:
            raise ValueError("transmit powers must be non-negative")

    @property
    def total(self) -> float:
        return self.rho_s + self.rho_c


@dataclass(frozen=True)
class ApRx:
    drone_echo: ComplexArray
    repeater_useful: ComplexArray
    repeater_self_loop: ComplexArray
    repeater_noise: ComplexArray
    ap_noise: ComplexArray

    @property
    def useful(self) -> ComplexArray:
        return self.drone_echo + self.repeater_useful

    @property
    def interference(self) -> ComplexArray:
        return self.repeater_self_loop + self.repeater_noise + self.ap_noise

    @property
    def y(self) -> ComplexArray:
        return (
            self.drone_echo
            + self.repeater_useful
            + self.repeater_self_loop
            + self.repeater_noise
            + self.ap_noise
        )


# --- SINR ---


@dataclass(frozen=True)
class SinrEstimate:
    estimate: float
    stderr: float
    trials: int
    useful_power: float
    interference_power: float
    self_loop_power: float
    repeater_noise_power: float
    ap_noise_power: float

    @property
    def self_loop_share(self) -> float:
        return self.self_loop_power / self.interference_power


@dataclass(frozen=True)
class SinrReport:
    gamma_ue_closed: float
    gamma_ue_mc: float
    gamma_s_approx: float
    gamma_s_norr: float
    gamma_s_full: float | None  # None when the repeater loop is unstable
    mc_trials: int
    mc_stderr: float
    full_stderr: float | None
    self_loop_share: float
    spectral_radius: float


# --- Optimizer ---


@dataclass(frozen=True)
class OptimizerResult:
    t: FloatArray
    power: PowerSplit
    lambda_star: float  # ratio of the gain subproblem
    gamma_s: float  # sensing SINR, (rho_s M + rho_c) * lambda_star
    iterations: int
    residuals: list[float]
    lambdas: list[float]
    active_set: tuple[int, ...]
    converged: bool
    monotone: bool
    variant: DinkelbachVariant

    @property
    def alpha(self) -> FloatArray:
        return np.sqrt(self.t)

    @property
    def gains(self) -> GainVector:
        return GainVector(self.alpha)


# --- Detection ---


@dataclass(frozen=True)
class RocCurve:
    thresholds: FloatArray
    p_fa: FloatArray
    p_d: FloatArray
    trials: int
    seed: int
    label: str = field(default="")

    @property
    def auc(self) -> float:
        return float(np.trapezoid(self.p_d[::-1], self.p_fa[::-1]))

    def p_d_at(self, p_fa: FloatArray) -> FloatArray:
        """Best detection probability reachable with false-alarm rate at most `p_fa`."""
        fa = self.p_fa[::-1]
        pd = self.p_d[::-1]
        idx = np.searchsorted(fa, p_fa, side="right") - 1
        return np.where(idx >= 0, pd[np.clip(idx, 0, None)], 0.0)


# --- Experiments ---


@dataclass(frozen=True)
class SweepRow:
    value: float
    gamma_s_approx_db: float | None
    gamma_s_mc_db: float | None
    mc_stderr: float | None
    active_count: int | None
    lambda_star: float | None
    runtime_ms: float
    error: str | None = None


@dataclass(frozen=True)
class ActivationRow:
    alpha_max_db: float
    num_repeaters: int
    active_count: int
    fraction_at_full_gain: float | None  # None when there are no repeaters
