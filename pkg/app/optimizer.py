import math

import numpy as np
import structlog

from app.channel import free_space_gain
from app.errors import ConstraintViolationError, InfeasibleRequirementError, OracleSizeError
from app.models import (
    BoolArray,
    DinkelbachVariant,
    FloatArray,
    Layout,
    OptimizerResult,
    PathGains,
    PowerSplit,
    Scenario,
)
from app.sinr import gain_ratio, mean_path_gains, user_sinr_closed

log = structlog.get_logger()

DEFAULT_TOL = 1e-12
DEFAULT_MAX_ITER = 100
ORACLE_MAX_REPEATERS = 20
_ORACLE_BLOCK = 1 << 16
_MONOTONE_SLACK = 1e-12


def power_split(s: Scenario) -> PowerSplit:
    # full budget spent, UE constraint tight
    beta_au = float(free_space_gain(s.wavelength, s.l_au))
    a = s.gamma_ue_req / s.num_antennas
    b = s.gamma_ue_req * s.noise_ue / (s.num_antennas * beta_au)
    if s.rho_max < b:
        raise InfeasibleRequirementError(
            "infeasible UE requirement: power budget below the noise-limited minimum",
            rho_max=s.rho_max,
            required=b,
        )
    rho_s = (s.rho_max - b) / (1.0 + a)
    return PowerSplit(rho_s=rho_s, rho_c=(a * s.rho_max + b) / (1.0 + a))


def activation_mask(
    lam: float,
    betas: PathGains,
    noise_r: float,
    variant: DinkelbachVariant = DinkelbachVariant.linearized,
) -> BoolArray:
    # `paper-typo` drops the repeater noise power from the test
    weight = noise_r if variant is DinkelbachVariant.linearized else 1.0
    coefficient = betas.beta_an * betas.beta_adn - lam * weight * betas.beta_an
    return np.asarray(coefficient > 0.0)


def dinkelbach(
    s: Scenario,
    betas: PathGains,
    pw: PowerSplit,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    variant: DinkelbachVariant = DinkelbachVariant.linearized,
) -> OptimizerResult:
    # Every iterate is a vertex of the box 0 <= t_n <= alpha_max^2. The residual is
    # (lambda_{k+1} - lambda_k) / lambda_{k+1}, i.e. F(lambda_k) relative to the new ratio.
    t_max = s.t_max
    lam = betas.beta_ad / s.noise_ap
    lambdas = [lam]
    residuals: list[float] = []
    t = np.zeros(s.num_repeaters)
    converged = False

    for _ in range(max_iter):
        mask = activation_mask(lam, betas, s.noise_repeater, variant)
        t = np.where(mask, t_max, 0.0)
        new = gain_ratio(betas, s.noise_repeater, s.noise_ap, t)
        residual = abs(new - lam) / new if new > 0 else 0.0
        lambdas.append(new)
        residuals.append(residual)
        lam = new
        if residual <= tol:
            converged = True
            break

    steps = zip(lambdas, lambdas[1:], strict=False)
    monotone = all(b >= a - _MONOTONE_SLACK * abs(a) for a, b in steps)
    if not converged:
        log.warning("dinkelbach_not_converged", iterations=len(residuals), residual=residuals[-1])
    if not monotone:
        log.warning("dinkelbach_not_monotone", variant=str(variant))

    active = np.flatnonzero(t > 0)
    result = OptimizerResult(
        t=t,
        power=pw,
        lambda_star=lam,
        gamma_s=(pw.rho_s * s.num_antennas + pw.rho_c) * lam,
        iterations=len(residuals),
        residuals=residuals,
        lambdas=lambdas,
        active_set=tuple(int(n) for n in active),
        converged=converged,
        monotone=monotone,
        variant=variant,
    )
    log.debug(
        "dinkelbach_done",
        iterations=result.iterations,
        lambda_star=lam,
        active=len(result.active_set),
        N=s.num_repeaters,
    )
    return result


def brute_force_oracle(s: Scenario, betas: PathGains, pw: PowerSplit) -> tuple[FloatArray, float]:
    # ties go to fewer active repeaters, then to the lowest vertex index
    n = s.num_repeaters
    if n > ORACLE_MAX_REPEATERS:
        raise OracleSizeError(
            f"brute-force oracle limited to {ORACLE_MAX_REPEATERS} repeaters", N=n
        )
    t_max = s.t_max
    useful = betas.beta_an * betas.beta_adn * t_max
    noise = betas.beta_an * s.noise_repeater * t_max
    bits_of = np.arange(n, dtype=np.int64)

    best = (math.inf, 0, 0)  # (-value, popcount, index)
    for start in range(0, 1 << n, _ORACLE_BLOCK):
        idx = np.arange(start, min(start + _ORACLE_BLOCK, 1 << n), dtype=np.int64)
        bits = ((idx[:, None] >> bits_of[None, :]) & 1).astype(np.float64)
        values = (betas.beta_ad + bits @ useful) / (s.noise_ap + bits @ noise)
        counts = bits.sum(axis=1).astype(np.int64)
        top = values == values.max()
        pick = int(np.lexsort((idx[top], counts[top]))[0])
        candidate = (-float(values[top][pick]), int(counts[top][pick]), int(idx[top][pick]))
        if candidate < best:
            best = candidate

    vertex = best[2]
    t_best = np.where((vertex >> bits_of) & 1, t_max, 0.0)
    return t_best, (pw.rho_s * s.num_antennas + pw.rho_c) * -best[0]


def verify_constraints(s: Scenario, result: OptimizerResult) -> None:
    pw = result.power
    if pw.total > s.rho_max * (1.0 + 1e-12):
        raise ConstraintViolationError("power budget exceeded", total=pw.total, rho_max=s.rho_max)
    gamma_ue = user_sinr_closed(s, pw)
    if gamma_ue < s.gamma_ue_req * (1.0 - 1e-9):
        raise ConstraintViolationError(
            "UE SINR below requirement", gamma_ue=gamma_ue, required=s.gamma_ue_req
        )
    if np.any(result.t < 0) or np.any(result.t > s.t_max):
        raise ConstraintViolationError("repeater gain outside [0, alpha_max]", t_max=s.t_max)


def optimize(
    s: Scenario,
    lay: Layout,
    *,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    variant: DinkelbachVariant = DinkelbachVariant.linearized,
) -> OptimizerResult:
    pw = power_split(s)
    result = dinkelbach(s, mean_path_gains(s, lay), pw, tol, max_iter, variant)
    verify_constraints(s, result)
    return result
