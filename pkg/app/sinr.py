import math
from functools import partial

import numpy as np
import structlog

from app.channel import free_space_gain, los_channels, path_gains, realize_channels
from app.errors import ConfigError, UnstableRepeaterLoopError
from app.models import (
    FloatArray,
    GainVector,
    Layout,
    PathGains,
    PowerSplit,
    Scenario,
    SinrEstimate,
    SinrReport,
)
from app.montecarlo import complex_normal, qpsk, run_trials, trial_streams
from app.signal_chain import (
    build_repeater_loop,
    check_stability,
    make_precoders,
    receive_ap,
    receive_ue,
    transmit,
)

log = structlog.get_logger()

MIN_MC_TRIALS = 100

# Columns of the per-trial power table.
_USEFUL, _INTERFERENCE, _SELF_LOOP, _REP_NOISE, _AP_NOISE, _UE_SIGNAL, _UE_INTERFERENCE = range(7)


def user_sinr_closed(s: Scenario, pw: PowerSplit) -> float:
    beta_au = float(free_space_gain(s.wavelength, s.l_au))
    den = pw.rho_s * beta_au + s.noise_ue
    if den == 0.0:
        return math.inf if pw.rho_c > 0 else 0.0
    return pw.rho_c * s.num_antennas * beta_au / den


def mean_path_gains(s: Scenario, lay: Layout) -> PathGains:
    # exact for the closed forms, which are linear in the RCS
    return path_gains(s, lay, s.rcs_mean)


def gain_ratio(betas: PathGains, noise_r: float, noise_ap: float, t: FloatArray) -> float:
    # sensing SINR without its transmit-power factor rho_s M + rho_c
    num = betas.beta_ad + float(np.dot(betas.beta_an * betas.beta_adn, t))
    den = noise_ap + noise_r * float(np.dot(betas.beta_an, t))
    return num / den


def sensing_sinr_approx(s: Scenario, betas: PathGains, pw: PowerSplit, g: GainVector) -> float:
    scale = pw.rho_s * s.num_antennas + pw.rho_c
    return scale * gain_ratio(betas, s.noise_repeater, s.noise_ap, g.t)


def _power_chunk(
    seed: int,
    start: int,
    stop: int,
    *,
    s: Scenario,
    lay: Layout,
    pw: PowerSplit,
    g: GainVector,
    include_rr: bool,
) -> FloatArray:
    los = los_channels(s, lay)
    loop = build_repeater_loop(los.h_rr, g, include_rr)
    out = np.empty((stop - start, 7))
    for row, trial in enumerate(range(start, stop)):
        streams = trial_streams(seed, trial)
        ch = realize_channels(s, lay, streams.channel, los)
        p = make_precoders(ch.h_au, s.theta, s.nulling)
        s_s, s_c = qpsk(streams.symbols, 2)
        x = transmit(p, pw, s_s, s_c)
        n_ap = complex_normal(streams.ap_noise, s.num_antennas, s.noise_ap)
        n_r = complex_normal(streams.repeater_noise, s.num_repeaters, s.noise_repeater)
        n_ue = complex_normal(streams.ue_noise, 1, s.noise_ue)[0]

        rx = receive_ap(ch, g, x, n_r, n_ap, include_rr, loop)
        y_ue = receive_ue(ch, x, n_ue)
        ue_signal = np.sqrt(pw.rho_c) * s_c * (ch.h_au @ p.w_c)
        ue_rest = y_ue - ue_signal
        out[row] = (
            np.vdot(rx.useful, rx.useful).real,
            np.vdot(rx.interference, rx.interference).real,
            np.vdot(rx.repeater_self_loop, rx.repeater_self_loop).real,
            np.vdot(rx.repeater_noise, rx.repeater_noise).real,
            np.vdot(n_ap, n_ap).real,
            abs(ue_signal) ** 2,
            abs(ue_rest) ** 2,
        )
    return out


def simulate_powers(
    s: Scenario,
    lay: Layout,
    pw: PowerSplit,
    g: GainVector,
    trials: int,
    *,
    include_rr: bool,
    seed: int,
    workers: int = 1,
) -> FloatArray:
    if trials < MIN_MC_TRIALS:
        raise ConfigError(
            f"Monte-Carlo SINR needs at least {MIN_MC_TRIALS} trials",
            kind="unit_out_of_range",
            key="trials",
            value=trials,
        )
    chunk = partial(_power_chunk, s=s, lay=lay, pw=pw, g=g, include_rr=include_rr)
    powers = run_trials(chunk, seed=seed, trials=trials, workers=workers)
    log.info("sinr_mc_done", trials=trials, seed=seed, include_rr=include_rr, N=s.num_repeaters)
    return powers


def ratio_of_means(num: FloatArray, den: FloatArray) -> tuple[float, float]:
    # delta-method standard error
    n = num.size
    mu_n, mu_d = float(num.mean()), float(den.mean())
    if mu_d == 0.0:
        return (math.inf if mu_n > 0 else 0.0), 0.0
    ratio = mu_n / mu_d
    if n < 2:
        return ratio, 0.0
    cov = np.cov(num, den)
    var = (cov[0, 0] - 2.0 * ratio * cov[0, 1] + ratio**2 * cov[1, 1]) / (mu_d**2 * n)
    return ratio, math.sqrt(max(float(var), 0.0))


def _sensing_estimate(powers: FloatArray) -> SinrEstimate:
    estimate, stderr = ratio_of_means(powers[:, _USEFUL], powers[:, _INTERFERENCE])
    means = powers.mean(axis=0)
    return SinrEstimate(
        estimate=estimate,
        stderr=stderr,
        trials=powers.shape[0],
        useful_power=float(means[_USEFUL]),
        interference_power=float(means[_INTERFERENCE]),
        self_loop_power=float(means[_SELF_LOOP]),
        repeater_noise_power=float(means[_REP_NOISE]),
        ap_noise_power=float(means[_AP_NOISE]),
    )


def sensing_sinr_mc(
    s: Scenario,
    lay: Layout,
    pw: PowerSplit,
    g: GainVector,
    trials: int,
    *,
    include_rr: bool,
    seed: int,
    workers: int = 1,
) -> SinrEstimate:
    # without `include_rr` the inter-repeater channel is treated as zero
    powers = simulate_powers(
        s, lay, pw, g, trials, include_rr=include_rr, seed=seed, workers=workers
    )
    return _sensing_estimate(powers)


def user_sinr_mc(
    s: Scenario,
    lay: Layout,
    pw: PowerSplit,
    g: GainVector,
    trials: int,
    *,
    seed: int,
    workers: int = 1,
) -> tuple[float, float]:
    powers = simulate_powers(s, lay, pw, g, trials, include_rr=False, seed=seed, workers=workers)
    return ratio_of_means(powers[:, _UE_SIGNAL], powers[:, _UE_INTERFERENCE])


def sinr_report(
    s: Scenario,
    lay: Layout,
    pw: PowerSplit,
    g: GainVector,
    trials: int,
    *,
    seed: int,
    workers: int = 1,
) -> SinrReport:
    norr_powers = simulate_powers(
        s, lay, pw, g, trials, include_rr=False, seed=seed, workers=workers
    )
    norr = _sensing_estimate(norr_powers)
    ue_mc, _ = ratio_of_means(norr_powers[:, _UE_SIGNAL], norr_powers[:, _UE_INTERFERENCE])

    full: SinrEstimate | None
    try:
        full = sensing_sinr_mc(s, lay, pw, g, trials, include_rr=True, seed=seed, workers=workers)
    except UnstableRepeaterLoopError as exc:
        log.warning("sinr_full_skipped", reason=exc.code, radius=exc.radius)
        full = None

    _, radius = check_stability(los_channels(s, lay).h_rr, g)
    report = SinrReport(
        gamma_ue_closed=user_sinr_closed(s, pw),
        gamma_ue_mc=ue_mc,
        gamma_s_approx=sensing_sinr_approx(s, mean_path_gains(s, lay), pw, g),
        gamma_s_norr=norr.estimate,
        gamma_s_full=full.estimate if full is not None else None,
        mc_trials=trials,
        mc_stderr=norr.stderr,
        full_stderr=full.stderr if full is not None else None,
        self_loop_share=norr.self_loop_share,
        spectral_radius=radius,
    )
    log.info(
        "sinr_report",
        gamma_s_approx=report.gamma_s_approx,
        gamma_s_norr=report.gamma_s_norr,
        self_loop_share=report.self_loop_share,
        radius=radius,
    )
    return report
