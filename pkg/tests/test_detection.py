import csv
import math
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from app import detection
from app.channel import steering
from app.experiments import roc_experiment
from app.geometry import build_layout
from app.models import GainVector, Layout, PowerSplit, Scenario, SweepVariable
from app.optimizer import optimize
from app.scenario import apply_overrides, load_config, to_scenario
from app.schemas import ScenarioConfig, SweepSpec

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def test_statistic_on_steering_vector() -> None:
    theta = math.pi / 6
    assert float(detection.test_statistic(steering(theta, 100), theta)) == pytest.approx(100.0)
    orthogonal = detection.test_statistic(steering(math.pi / 3, 4), math.pi / 2)
    assert float(orthogonal) == pytest.approx(0.0, abs=1e-20)


def test_statistic_on_noise(rng: np.random.Generator) -> None:
    sigma2 = 3e-14
    y = np.sqrt(sigma2 / 2) * (
        rng.standard_normal((100_000, 16)) + 1j * rng.standard_normal((100_000, 16))
    )
    t = detection.test_statistic(y, 0.4)
    assert t.shape == (100_000,)
    assert t.mean() == pytest.approx(sigma2, rel=0.02)


def test_null_statistic_is_exponential(small_scenario: Scenario) -> None:
    lay = build_layout(small_scenario)
    pw = PowerSplit(rho_s=1.5, rho_c=0.5)
    _, t_h0 = detection.run_hypothesis_mc(
        small_scenario, lay, pw, GainVector.zeros(4), 2000, include_rr=True, seed=4
    )
    scaled = t_h0 / small_scenario.noise_ap
    assert scaled.mean() == pytest.approx(1.0, rel=0.1)
    assert stats.kstest(scaled, "expon").pvalue > 1e-3


def test_no_target_means_identical_hypotheses(small_scenario: Scenario) -> None:
    s = small_scenario.model_copy(update={"rcs_mean": 0.0})
    lay = build_layout(s)
    g = GainVector(np.full(4, 30.0))
    t_h1, t_h0 = detection.run_hypothesis_mc(
        s, lay, PowerSplit(1.5, 0.5), g, 200, include_rr=True, seed=1
    )
    np.testing.assert_array_equal(t_h1, t_h0)


def test_target_raises_statistic(scenario: Scenario, layout: Layout) -> None:
    result = optimize(scenario, layout)
    t_h1, t_h0 = detection.run_hypothesis_mc(
        scenario, layout, result.power, result.gains, 500, include_rr=False, seed=8
    )
    assert t_h1.shape == t_h0.shape == (500,)
    assert t_h1.mean() > t_h0.mean()


def test_roc_of_identical_samples_is_diagonal(rng: np.random.Generator) -> None:
    t = rng.exponential(size=300)
    curve = detection.build_roc(t, t.copy(), grid_size=50)
    np.testing.assert_array_equal(curve.p_fa, curve.p_d)
    assert curve.auc == pytest.approx(0.5)


def test_roc_of_separated_samples() -> None:
    curve = detection.build_roc(np.array([10.0, 11.0, 12.0]), np.array([1.0, 2.0, 3.0]))
    assert any(fa == 0.0 and pd == 1.0 for fa, pd in zip(curve.p_fa, curve.p_d, strict=True))
    assert curve.auc == pytest.approx(1.0)
    np.testing.assert_array_equal(curve.p_d_at(np.array([0.0, 0.5])), [1.0, 1.0])


def test_roc_shape(rng: np.random.Generator) -> None:
    t_h0 = rng.exponential(size=400)
    t_h1 = rng.exponential(scale=3.0, size=400)
    curve = detection.build_roc(t_h1, t_h0, grid_size=100, trials=400, seed=5, label="N=0")
    assert (curve.p_fa[0], curve.p_d[0]) == (1.0, 1.0)
    assert (curve.p_fa[-1], curve.p_d[-1]) == (0.0, 0.0)
    assert np.all(np.diff(curve.thresholds) > 0)
    assert np.all(np.diff(curve.p_fa) <= 0)
    assert np.all(np.diff(curve.p_d) <= 0)
    assert 0.5 < curve.auc < 1.0
    assert (curve.trials, curve.seed, curve.label) == (400, 5, "N=0")
    # every null sample is a threshold, so each false-alarm level k/400 is reached exactly
    assert set(np.round(curve.p_fa * 400).astype(int)) == set(range(401))


def test_roc_needs_both_hypotheses() -> None:
    with pytest.raises(ValueError):
        detection.build_roc(np.array([]), np.array([1.0]))


def test_write_roc_csv(tmp_path: Path, rng: np.random.Generator) -> None:
    curve = detection.build_roc(rng.exponential(size=50), rng.exponential(size=50), grid_size=20)
    path = detection.write_roc_csv(curve, tmp_path / "roc.csv")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["threshold", "p_fa", "p_d"]
    assert len(rows) == curve.thresholds.size + 1
    assert float(rows[1][1]) == 1.0
    assert float(rows[-1][2]) == 0.0


@pytest.mark.parametrize("repeaters", [50, 100])
def test_target_raises_statistic_with_strong_repeaters(repeaters: int) -> None:
    config = load_config(CONFIGS / "fig2_weak_channel.json")
    s = to_scenario(apply_overrides(config, {"num_repeaters": repeaters}))
    lay = build_layout(s)
    result = optimize(s, lay)
    t_h1, t_h0 = detection.run_hypothesis_mc(
        s, lay, result.power, result.gains, 1000, include_rr=False, seed=17
    )
    diff = t_h1 - t_h0
    assert diff.mean() >= -3 * diff.std(ddof=1) / math.sqrt(diff.size)
    curve = detection.build_roc(t_h1, t_h0)
    assert curve.auc >= 0.5 - 2 / math.sqrt(diff.size)


def test_more_repeaters_do_not_hurt_detection(baseline: ScenarioConfig) -> None:
    trials = 300
    spec = SweepSpec(
        variable=SweepVariable.num_repeaters, values=[50.0, 100.0], mc_trials=trials, seed=23
    )
    (_, fifty), (_, hundred) = roc_experiment(spec, baseline, trials=trials)
    grid = np.array([0.01, 0.05, 0.1, 0.2, 0.5])
    assert np.all(hundred.p_d_at(grid) >= fifty.p_d_at(grid) - 2 / math.sqrt(trials))


def test_detection_spread_shrinks_with_trials(small_scenario: Scenario) -> None:
    lay = build_layout(small_scenario)
    pw = PowerSplit(rho_s=1.5, rho_c=0.5)
    g = GainVector.zeros(4)
    _, reference = detection.run_hypothesis_mc(
        small_scenario, lay, pw, g, 2000, include_rr=False, seed=999
    )
    tau = float(np.quantile(reference, 0.7))

    def spread(trials: int, first_seed: int) -> float:
        estimates = []
        for seed in range(first_seed, first_seed + 40):
            t_h1, _ = detection.run_hypothesis_mc(
                small_scenario, lay, pw, g, trials, include_rr=False, seed=seed
            )
            estimates.append(float(np.mean(t_h1 > tau)))
        return float(np.std(estimates, ddof=1))

    ratio = spread(400, 1000) / spread(200, 0)
    assert 0.4 < ratio < 1.05
