import numpy as np

from app.errors import GeometryError
from app.models import Layout, Scenario


def build_layout(s: Scenario) -> Layout:
    """Place the AP at the origin, the repeaters along the ULA axis and the drone at angle theta.

    The AP-to-repeater channels use the steering vector a(0), so the repeater
    line lies on the array axis. Everything is planar (same altitude).
    """
    n = s.num_repeaters
    if n > 0 and s.spacing <= 0:
        raise GeometryError("repeater spacing must be positive", spacing=s.spacing, N=n)

    ap = np.zeros(2)
    axis = np.array([1.0, 0.0])
    l_an = s.l_a1 + s.spacing * np.arange(n, dtype=np.float64)
    repeaters = np.outer(l_an, axis)
    drone = s.l_ad * np.array([np.cos(s.theta), np.sin(s.theta)])

    idx = np.arange(n)
    return Layout(
        ap_position=ap,
        ula_axis=axis,
        repeater_positions=repeaters,
        drone_position=drone,
        ue_distance=s.l_au,
        l_an=l_an,
        l_dn=np.linalg.norm(drone - repeaters, axis=1),
        l_nn=np.abs(idx[:, None] - idx[None, :]) * s.spacing,
    )
