from dataclasses import dataclass

import numpy as np
import structlog
from numpy.typing import NDArray
from scipy.linalg import lu_factor, lu_solve

from app.channel import steering
from app.errors import SingularSystemError, UnservableDirectionError, UnstableRepeaterLoopError
from app.models import (
    ApRx,
    ChannelSet,
    ComplexArray,
    FloatArray,
    GainVector,
    NullingMode,
    PowerSplit,
    Precoders,
)

log = structlog.get_logger()

STABILITY_MARGIN = 1e-6
_UNSERVABLE_NORM = 1e-12


def make_precoders(
    h_au_hat: ComplexArray, theta: float, mode: NullingMode = NullingMode.transpose
) -> Precoders:
    # `transpose` removes what the UE actually receives (h^T w_s = 0), `hermitian` removes h
    norm = float(np.linalg.norm(h_au_hat))
    if norm == 0.0:
        raise UnservableDirectionError("user channel estimate is zero", theta=theta)
    w_c = np.conj(h_au_hat) / norm

    a = steering(theta, h_au_hat.size)
    target = np.conj(a) / np.linalg.norm(a)
    u = w_c if mode is NullingMode.transpose else h_au_hat / norm
    projected = target - u * np.vdot(u, target)

    residual = float(np.linalg.norm(projected))
    if residual < _UNSERVABLE_NORM:
        raise UnservableDirectionError(
            "sensing direction unservable: steering vector parallel to user channel",
            theta=theta,
            residual=residual,
        )
    return Precoders(w_c=w_c, w_s=projected / residual)


def transmit(p: Precoders, pw: PowerSplit, s_s: complex, s_c: complex) -> ComplexArray:
    return np.sqrt(pw.rho_s) * p.w_s * s_s + np.sqrt(pw.rho_c) * p.w_c * s_c


def check_stability(h_rr: ComplexArray, g: GainVector) -> tuple[bool, float]:
    if h_rr.size == 0:
        return True, 0.0
    radius = float(np.max(np.abs(np.linalg.eigvals(g.alpha[:, None] * h_rr))))
    return radius < 1.0 - STABILITY_MARGIN, radius


@dataclass(frozen=True)
class RepeaterLoop:
    # b -> (I - Phi H_RR)^-1 Phi b, or Phi b when `lu` is None

    alpha: FloatArray
    lu: tuple[ComplexArray, NDArray[np.int32]] | None
    radius: float

    def apply(self, b: ComplexArray) -> ComplexArray:
        scaled = self.alpha[:, None] * b if b.ndim == 2 else self.alpha * b
        if self.lu is None:
            return scaled
        return np.asarray(lu_solve(self.lu, scaled), dtype=np.complex128)


def build_repeater_loop(h_rr: ComplexArray, g: GainVector, include_rr: bool = True) -> RepeaterLoop:
    stable, radius = check_stability(h_rr, g)
    if not include_rr or h_rr.size == 0:
        return RepeaterLoop(alpha=g.alpha, lu=None, radius=radius)
    if not stable:
        log.warning("repeater_loop_unstable", radius=radius, N=h_rr.shape[0])
        raise UnstableRepeaterLoopError(radius)

    system = np.eye(h_rr.shape[0]) - g.alpha[:, None] * h_rr
    lu, piv = lu_factor(system)
    pivots = np.abs(np.diag(lu))
    if pivots.min() <= np.finfo(np.float64).eps * pivots.max() * h_rr.shape[0]:
        raise SingularSystemError("singular repeater feedback system", radius=radius)
    return RepeaterLoop(alpha=g.alpha, lu=(lu, piv), radius=radius)


def solve_repeater_tx(
    ch: ChannelSet,
    g: GainVector,
    x: ComplexArray,
    n_r: ComplexArray,
    loop: RepeaterLoop | None = None,
) -> ComplexArray:
    loop = loop if loop is not None else build_repeater_loop(ch.h_rr, g)
    return loop.apply(ch.h_ar.T @ x + ch.h_adr.T @ x + n_r)


def receive_ap(
    ch: ChannelSet,
    g: GainVector,
    x: ComplexArray,
    n_r: ComplexArray,
    n_ap: ComplexArray,
    include_rr: bool,
    loop: RepeaterLoop | None = None,
) -> ApRx:
    # the three repeater inputs go through the loop as one batch
    loop = loop if loop is not None else build_repeater_loop(ch.h_rr, g, include_rr)
    inputs = np.stack([ch.h_adr.T @ x, ch.h_ar.T @ x, n_r], axis=1)
    echoes = ch.h_ar @ loop.apply(inputs)
    return ApRx(
        drone_echo=ch.h_ad @ x,
        repeater_useful=echoes[:, 0],
        repeater_self_loop=echoes[:, 1],
        repeater_noise=echoes[:, 2],
        ap_noise=n_ap,
    )


def receive_ue(ch: ChannelSet, x: ComplexArray, n_ue: complex) -> complex:
    return complex(ch.h_au @ x + n_ue)
