from dataclasses import dataclass

import numpy as np

from app.models import (
    ChannelSet,
    ComplexArray,
    FloatArray,
    Layout,
    PathGains,
    RcsModel,
    Scenario,
)
from app.montecarlo import complex_normal

_FOUR_PI = 4.0 * np.pi


def steering(theta: float, m: int) -> ComplexArray:
    """ULA steering vector with half-wavelength spacing: entry k is exp(j k pi cos theta)."""
    return np.exp(1j * np.pi * np.cos(theta) * np.arange(m))


def free_space_gain(wavelength: float, distance: FloatArray | float) -> FloatArray:
    return np.asarray(wavelength**2 / (_FOUR_PI * np.asarray(distance)) ** 2, dtype=np.float64)


def path_gains(s: Scenario, lay: Layout, rcs: float) -> PathGains:
    lam2 = s.wavelength**2
    radar = rcs * lam2 / _FOUR_PI**3

    l_nn = lay.l_nn
    beta_nn = np.zeros_like(l_nn)
    off = l_nn > 0
    beta_nn[off] = lam2 / (_FOUR_PI * l_nn[off]) ** 2

    return PathGains(
        beta_ad=radar / s.l_ad**4,
        beta_an=free_space_gain(s.wavelength, lay.l_an),
        beta_adn=radar / (s.l_ad * lay.l_dn) ** 2,
        beta_au=float(free_space_gain(s.wavelength, lay.ue_distance)),
        beta_nn=beta_nn,
    )


def draw_rcs(
    mean_rcs: float, rng: np.random.Generator, model: RcsModel = RcsModel.swerling1
) -> float:
    # the exponential variate is consumed for every model to keep streams aligned
    unit = rng.standard_exponential()
    if model is RcsModel.swerling0:
        return mean_rcs
    return float(mean_rcs * unit)


@dataclass(frozen=True)
class LosChannels:
    """Deterministic line-of-sight channels, target paths at unit RCS."""

    h_ad_unit: ComplexArray
    h_ar: ComplexArray
    h_adr_unit: ComplexArray
    h_rr: ComplexArray
    gains_unit: PathGains


def los_channels(s: Scenario, lay: Layout) -> LosChannels:
    k = 2.0 * np.pi / s.wavelength  # exp(-j 2 pi f_c tau) with tau = path / c
    g = path_gains(s, lay, 1.0)
    a_t = steering(s.theta, s.num_antennas)
    a_0 = steering(0.0, s.num_antennas)

    h_ad = np.sqrt(g.beta_ad) * np.exp(-1j * k * 2.0 * s.l_ad) * np.outer(a_t, a_t)
    h_ar = a_0[:, None] * (np.sqrt(g.beta_an) * np.exp(-1j * k * lay.l_an))[None, :]
    h_adr = a_t[:, None] * (np.sqrt(g.beta_adn) * np.exp(-1j * k * (s.l_ad + lay.l_dn)))[None, :]
    h_rr = np.sqrt(g.beta_nn) * np.exp(-1j * k * lay.l_nn)
    return LosChannels(h_ad_unit=h_ad, h_ar=h_ar, h_adr_unit=h_adr, h_rr=h_rr, gains_unit=g)


def realize_channels(
    s: Scenario, lay: Layout, rng: np.random.Generator, los: LosChannels | None = None
) -> ChannelSet:
    """One channel realization: complex target coefficient and Rayleigh AP-UE channel.

    Only N-independent quantities are drawn from `rng`: RCS, target phase, then h_AU.
    The phase is common to the direct and via-repeater target paths.
    """
    los = los if los is not None else los_channels(s, lay)
    rcs = draw_rcs(s.rcs_mean, rng, s.rcs_model)
    phase = float(rng.uniform(0.0, 2.0 * np.pi))
    gains = los.gains_unit.with_rcs_scale(rcs)
    amp = np.sqrt(rcs) * np.exp(1j * phase)
    return ChannelSet(
        h_ad=amp * los.h_ad_unit,
        h_ar=los.h_ar,
        h_adr=amp * los.h_adr_unit,
        h_rr=los.h_rr,
        h_au=complex_normal(rng, s.num_antennas, gains.beta_au),
        gains=gains,
        rcs_draw=rcs,
        target_phase=phase,
    )
