import math

import numpy as np
import pytest

from app.errors import ConfigError
from app.geometry import build_layout
from app.models import GainVector, Layout, PathGains, PowerSplit, Scenario
from app.optimizer import optimize, power_split
from app.scenario import apply_overrides, linear_to_db, to_scenario
from app.schemas import ScenarioConfig
from app.sinr import (
    gain_ratio,
    mean_path_gains,
    sensing_sinr_approx,
    sensing_sinr_mc,
    simulate_powers,
    sinr_report,
    user_sinr_closed,
    user_sinr_mc,
)


def test_floor_without_repeater_gain(scenario: Scenario, layout: Layout) -> None:
    pw = power_split(scenario)
    betas = mean_path_gains(scenario, layout)
    floor = (pw.rho_s * 100 + pw.rho_c) * betas.beta_ad / scenario.noise_ap
    assert sensing_sinr_approx(scenario, betas, pw, GainVector.zeros(50)) == pytest.approx(floor)

    none = scenario.model_copy(update={"num_repeaters": 0})
    lay = build_layout(none)
    gamma = sensing_sinr_approx(none, mean_path_gains(none, lay), pw, GainVector.zeros(0))
    assert gamma == pytest.approx(floor)


def test_single_repeater_saturates(scenario: Scenario) -> None:
    single = scenario.model_copy(update={"num_repeaters": 1})
    betas = mean_path_gains(single, build_layout(single))
    limit = float(betas.beta_adn[0]) / single.noise_repeater
    ratio = gain_ratio(betas, single.noise_repeater, single.noise_ap, np.array([1e40]))
    assert ratio == pytest.approx(limit, rel=1e-6)


def test_gain_ratio_is_a_mediant(scenario: Scenario, layout: Layout) -> None:
    betas = mean_path_gains(scenario, layout)
    bound = max(
        betas.beta_ad / scenario.noise_ap, float(np.max(betas.beta_adn)) / scenario.noise_repeater
    )
    rng = np.random.default_rng(0)
    for _ in range(50):
        t = rng.uniform(0, 1e12, 50) * (rng.random(50) < 0.5)
        assert gain_ratio(betas, scenario.noise_repeater, scenario.noise_ap, t) <= bound


def test_user_sinr_closed_form(scenario: Scenario) -> None:
    beta_au = (scenario.wavelength / (4 * math.pi * 100.0)) ** 2
    pw = PowerSplit(rho_s=1.0, rho_c=0.5)
    expected = 0.5 * 100 * beta_au / (beta_au + scenario.noise_ue)
    assert user_sinr_closed(scenario, pw) == pytest.approx(expected)
    assert user_sinr_closed(scenario, PowerSplit(1.0, 0.6)) > user_sinr_closed(scenario, pw)
    assert user_sinr_closed(scenario, PowerSplit(1.2, 0.5)) < user_sinr_closed(scenario, pw)


def test_user_sinr_without_any_noise(scenario: Scenario) -> None:
    quiet = scenario.model_copy(update={"noise_ue": 0.0})
    assert user_sinr_closed(quiet, PowerSplit(0.0, 1.0)) == math.inf
    assert user_sinr_closed(quiet, PowerSplit(0.0, 0.0)) == 0.0


def test_sensing_mc_at_zero_gain(baseline: ScenarioConfig) -> None:
    s = to_scenario(apply_overrides(baseline, {"num_repeaters": 0, "rcs_model": "swerling0"}))
    lay = build_layout(s)
    pw = power_split(s)
    est = sensing_sinr_mc(s, lay, pw, GainVector.zeros(0), 500, include_rr=True, seed=3)

    # w_s loses one dimension to the null-space projection on average
    m = s.num_antennas
    closed = sensing_sinr_approx(s, mean_path_gains(s, lay), pw, GainVector.zeros(0))
    expected = closed * (pw.rho_s * (m - 1) + pw.rho_c) / (pw.rho_s * m + pw.rho_c)
    assert abs(est.estimate - expected) <= 4 * est.stderr
    assert est.trials == 500
    assert est.self_loop_power == 0.0
    assert est.repeater_noise_power == 0.0


def test_sensing_mc_near_closed_form_at_baseline(scenario: Scenario, layout: Layout) -> None:
    result = optimize(scenario, layout)
    approx = sensing_sinr_approx(
        scenario, mean_path_gains(scenario, layout), result.power, result.gains
    )
    est = sensing_sinr_mc(
        scenario, layout, result.power, result.gains, 1000, include_rr=False, seed=11
    )
    assert abs(linear_to_db(est.estimate) - linear_to_db(approx)) < 1.0
    assert 0.0 <= est.self_loop_share < 1.0


def test_user_sinr_mc_meets_requirement(scenario: Scenario, layout: Layout) -> None:
    pw = power_split(scenario)
    gamma, stderr = user_sinr_mc(scenario, layout, pw, GainVector.zeros(50), 500, seed=5)
    assert stderr > 0
    assert gamma >= user_sinr_closed(scenario, pw)


def test_sinr_report(scenario: Scenario, layout: Layout) -> None:
    result = optimize(scenario, layout)
    report = sinr_report(scenario, layout, result.power, result.gains, 200, seed=2)
    assert report.mc_trials == 200
    assert report.gamma_ue_closed == pytest.approx(scenario.gamma_ue_req, rel=1e-9)
    assert report.gamma_s_approx == pytest.approx(result.gamma_s)
    assert report.gamma_s_norr > 0
    assert (report.gamma_s_full is None) == (report.spectral_radius >= 1 - 1e-6)
    assert (report.full_stderr is None) == (report.gamma_s_full is None)


def test_sinr_report_unstable_loop(baseline: ScenarioConfig) -> None:
    s = to_scenario(
        apply_overrides(baseline, {"num_repeaters": 2, "spacing_m": 8.0, "alpha_max_db": 100.0})
    )
    lay = build_layout(s)
    result = optimize(s, lay)
    assert result.active_set == (0, 1)
    report = sinr_report(s, lay, result.power, result.gains, 100, seed=2)
    assert report.gamma_s_full is None
    assert report.spectral_radius > 1


def test_too_few_trials(small_scenario: Scenario) -> None:
    lay = build_layout(small_scenario)
    pw, g = PowerSplit(1.0, 1.0), GainVector.zeros(4)
    with pytest.raises(ConfigError) as exc:
        simulate_powers(small_scenario, lay, pw, g, 99, include_rr=False, seed=0)
    assert exc.value.kind == "unit_out_of_range"
    assert exc.value.context["key"] == "trials"


def test_gain_ratio_moves_with_repeater_quality() -> None:
    rng = np.random.default_rng(2024)
    for _ in range(200):
        n = int(rng.integers(1, 8))
        noise_r, noise_ap = 10 ** rng.uniform(-16, -14), 1e-14
        betas = PathGains(
            beta_ad=10 ** rng.uniform(-20, -17),
            beta_an=10 ** rng.uniform(-12, -9, n),
            beta_adn=10 ** rng.uniform(-20, -16, n),
            beta_au=1e-10,
            beta_nn=np.zeros((n, n)),
        )
        t = rng.uniform(0.0, 1e6, n)
        ratio = gain_ratio(betas, noise_r, noise_ap, t)
        for k in range(n):
            bumped = t.copy()
            bumped[k] += 1e5
            moved = gain_ratio(betas, noise_r, noise_ap, bumped)
            quality = betas.beta_adn[k] / noise_r
            if quality > ratio * (1 + 1e-9):
                assert moved >= ratio * (1 - 1e-12)
            elif quality < ratio * (1 - 1e-9):
                assert moved <= ratio * (1 + 1e-12)


def test_sensing_sinr_grows_with_rcs(scenario: Scenario, layout: Layout) -> None:
    result = optimize(scenario, layout)
    betas = mean_path_gains(scenario, layout)
    base = sensing_sinr_approx(scenario, betas, result.power, result.gains)
    for scale in (1.01, 2.0, 10.0):
        bigger = sensing_sinr_approx(
            scenario, betas.with_rcs_scale(scale), result.power, result.gains
        )
        assert bigger > base
    assert sensing_sinr_approx(
        scenario, betas.with_rcs_scale(2.0), result.power, result.gains
    ) == pytest.approx(2.0 * base)
