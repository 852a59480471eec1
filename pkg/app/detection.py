import csv
from functools import partial
from pathlib import Path

import numpy as np
import structlog

from app.channel import los_channels, realize_channels, steering
from app.models import (
    ComplexArray,
    FloatArray,
    GainVector,
    Layout,
    PowerSplit,
    RocCurve,
    Scenario,
)
from app.montecarlo import complex_normal, qpsk, run_trials, trial_streams
from app.signal_chain import build_repeater_loop, make_precoders, receive_ap, transmit

log = structlog.get_logger()


def test_statistic(y_ap: ComplexArray, theta: float) -> FloatArray:
    """|v^H y|^2 with v = a(theta)/||a(theta)||; `y_ap` may stack samples along the first axis."""
    a = steering(theta, y_ap.shape[-1])
    v = a / np.linalg.norm(a)
    return np.asarray(np.abs(y_ap @ np.conj(v)) ** 2, dtype=np.float64)


def _hypothesis_chunk(
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
    samples = np.empty((stop - start, 2, s.num_antennas), dtype=np.complex128)
    for row, trial in enumerate(range(start, stop)):
        streams = trial_streams(seed, trial)
        ch = realize_channels(s, lay, streams.channel, los)
        p = make_precoders(ch.h_au, s.theta, s.nulling)
        s_s, s_c = qpsk(streams.symbols, 2)
        x = transmit(p, pw, s_s, s_c)
        n_ap = complex_normal(streams.ap_noise, s.num_antennas, s.noise_ap)
        n_r = complex_normal(streams.repeater_noise, s.num_repeaters, s.noise_repeater)

        # Both hypotheses see the same symbols, user channel and noise.
        samples[row, 0] = receive_ap(ch, g, x, n_r, n_ap, include_rr, loop).y
        samples[row, 1] = receive_ap(ch.without_target(), g, x, n_r, n_ap, include_rr, loop).y
    return test_statistic(samples, s.theta)


def run_hypothesis_mc(
    s: Scenario,
    lay: Layout,
    pw: PowerSplit,
    g: GainVector,
    trials: int,
    *,
    include_rr: bool,
    seed: int,
    workers: int = 1,
) -> tuple[FloatArray, FloatArray]:
    """Paired test statistics (target present, target absent), one pair per trial."""
    chunk = partial(_hypothesis_chunk, s=s, lay=lay, pw=pw, g=g, include_rr=include_rr)
    stats = run_trials(chunk, seed=seed, trials=trials, workers=workers)
    log.info(
        "hypothesis_mc_done", trials=trials, seed=seed, N=s.num_repeaters, include_rr=include_rr
    )
    return stats[:, 0], stats[:, 1]


def _exceedance(samples: FloatArray, thresholds: FloatArray) -> FloatArray:
    ordered = np.sort(samples)
    above = ordered.size - np.searchsorted(ordered, thresholds, side="right")
    return np.asarray(above / ordered.size, dtype=np.float64)


def build_roc(
    t_h1: FloatArray,
    t_h0: FloatArray,
    grid_size: int = 200,
    *,
    trials: int | None = None,
    seed: int = 0,
    label: str = "",
) -> RocCurve:
    """ROC of the rule T > tau with tau on pooled sample quantiles.

    Every null-hypothesis sample is also a threshold so the false-alarm axis is
    resolved exactly. The first threshold lies just below all samples and the
    last at the largest, so the curve runs from (1, 1) to (0, 0).
    """
    if t_h1.size == 0 or t_h0.size == 0:
        raise ValueError("ROC needs samples under both hypotheses")
    pooled = np.concatenate([t_h1, t_h0])
    thresholds = np.unique(
        np.concatenate(
            [
                [np.nextafter(pooled.min(), -np.inf)],
                np.quantile(pooled, np.linspace(0.0, 1.0, grid_size)),
                t_h0,
            ]
        )
    )
    return RocCurve(
        thresholds=thresholds,
        p_fa=_exceedance(t_h0, thresholds),
        p_d=_exceedance(t_h1, thresholds),
        trials=trials if trials is not None else int(t_h1.size),
        seed=seed,
        label=label,
    )


def write_roc_csv(curve: RocCurve, path: Path) -> Path:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["threshold", "p_fa", "p_d"])
        for row in zip(curve.thresholds, curve.p_fa, curve.p_d, strict=True):
            writer.writerow([repr(float(v)) for v in row])
    log.info("roc_written", path=str(path), points=curve.thresholds.size, auc=curve.auc)
    return path
