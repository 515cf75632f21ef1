"""Event-level processing units.

Every rule lives in a small ``numba``-compiled function. The bulk engine calls
them in its inner loop and the Python-level wrappers below call the very same
functions one event at a time, so unit tests exercise the production code path.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from enum import IntEnum

import numba
import numpy as np

from ..model import SPIN_UP, Spinor
from ..oracle import abs_matrix, bs_amplitudes, ps_matrix, sr_matrix, st_matrix


class Fate(IntEnum):
    """Terminal outcome of one messenger."""

    H_DETECTED = 0
    O_DETECTED = 1
    EXIT_BS1 = 2
    EXIT_BS2 = 3
    ABSORBED = 4
    ANALYZER_REJECTED = 5
    ZETA_LOST = 6
    SCATTER_DISCARDED = 7


class Path(IntEnum):
    UNSET = 0
    PATH1 = 1
    PATH2 = 2


@dataclass(frozen=True)
class Message:
    """What a messenger carries, plus the bookkeeping the engine needs."""

    spinor: Spinor = SPIN_UP
    path: Path = Path.UNSET
    traversed_absorber: bool = False
    location: str = "source"

    def with_spinor(self, s: Spinor, location: str | None = None) -> "Message":
        return dataclasses.replace(self, spinor=s, location=location or self.location)


# --- compiled kernels --------------------------------------------------------

@numba.njit(cache=True)
def bs_step(x, stored, k, gamma, t, r, s_up, s_dn, u):
    """One beam-splitter event; returns (output_port, out_up, out_dn).

    ``x`` (2,) and ``stored`` (2, 2) are updated in place.
    """
    xk = gamma * x[k] + (1.0 - gamma)
    x[k] = xk
    x[1 - k] = 1.0 - xk
    stored[k, 0] = s_up
    stored[k, 1] = s_dn
    a0 = math.sqrt(x[0])
    a1 = math.sqrt(x[1])
    tc = t.conjugate()
    rc = r.conjugate()
    o0u = tc * a0 * stored[0, 0] + r * a1 * stored[1, 0]
    o0d = tc * a0 * stored[0, 1] + r * a1 * stored[1, 1]
    o1u = -rc * a0 * stored[0, 0] + t * a1 * stored[1, 0]
    o1d = -rc * a0 * stored[0, 1] + t * a1 * stored[1, 1]
    w0 = o0u.real ** 2 + o0u.imag ** 2 + o0d.real ** 2 + o0d.imag ** 2
    w1 = o1u.real ** 2 + o1u.imag ** 2 + o1d.real ** 2 + o1d.imag ** 2
    tot = w0 + w1
    if tot < 1e-30:
        # degenerate cancellation: route uniformly, message unchanged
        return (0 if u < 0.5 else 1), s_up, s_dn
    if u * tot < w0:
        n = math.sqrt(w0)
        return 0, o0u / n, o0d / n
    n = math.sqrt(w1)
    return 1, o1u / n, o1d / n


@numba.njit(cache=True)
def apply2(m, s_up, s_dn):
    return m[0, 0] * s_up + m[0, 1] * s_dn, m[1, 0] * s_up + m[1, 1] * s_dn


@numba.njit(cache=True)
def absorber_passes(T, u):
    return u < T


@numba.njit(cache=True)
def analyzer_outcome(s_up, s_dn, zeta, u_zeta, u_spin):
    """0 = detected, 1 = lost to zeta, 2 = rejected by the spin analysis."""
    if u_zeta < zeta:
        return 1
    p_up = (s_up.real ** 2 + s_up.imag ** 2) / (
        s_up.real ** 2 + s_up.imag ** 2 + s_dn.real ** 2 + s_dn.imag ** 2)
    if u_spin < p_up:
        return 0
    return 2


@numba.njit(cache=True)
def scatter_discards(traversed, path, out_port, pscatt1, pscatt2, u):
    """True if an absorber-traversing messenger reflected at BS3 is discarded.

    BS3 wiring: path 1 enters port 0, path 2 enters port 1. Output port 0 is the
    H-beam, port 1 the O-beam. A messenger is reflected when it leaves through
    the other port: path 1 reflects into O, path 2 reflects into H.
    """
    if not traversed:
        return False
    if out_port == path - 1:
        return False
    p = pscatt1 if path == 1 else pscatt2
    return u < p


# --- Python-level units ------------------------------------------------------

def _draw(rng) -> float:
    return float(rng.random()) if hasattr(rng, "random") else float(rng)


class BeamSplitterUnit:
    """Adaptive two-port beam splitter controlled by the learning parameter ``gamma``.

    ``x`` estimates the relative arrival frequencies at the two input ports;
    ``stored`` keeps the last spinor seen on each port.
    """

    def __init__(self, R: float, gamma: float):
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma={gamma!r} outside [0, 1)")
        self.R = R
        self.gamma = gamma
        self.t, self.r = bs_amplitudes(R)
        self.x = np.array([0.5, 0.5])
        self.stored = np.zeros((2, 2), dtype=complex)
        self.stored[:, 0] = 1.0

    def process(self, input_port: int, msg: Message, rng) -> tuple[int, Message]:
        """Route ``msg`` arriving on ``input_port``; ``rng`` is a Generator or a uniform draw."""
        if input_port not in (0, 1):
            raise ValueError(f"input_port must be 0 or 1, got {input_port!r}")
        port, up, dn = bs_step(self.x, self.stored, input_port, self.gamma, self.t, self.r,
                               msg.spinor.up, msg.spinor.down, _draw(rng))
        return int(port), msg.with_spinor(Spinor(up, dn))


def bs_process(unit: BeamSplitterUnit, input_port: int, msg: Message, rng) -> tuple[int, Message]:
    return unit.process(input_port, msg, rng)


_PASSIVE = {"ST": st_matrix, "SR": sr_matrix, "BZ": sr_matrix, "PS": ps_matrix}


def passive_process(kind: str, angle: float, msg: Message) -> Message:
    """Multiply the carried spinor by the 2x2 matrix of a spin turner, rotator, field or phase shifter."""
    try:
        m = _PASSIVE[kind.upper()](angle)
    except KeyError:
        raise ValueError(f"unknown passive unit {kind!r}") from None
    up, dn = apply2(m, msg.spinor.up, msg.spinor.down)
    return msg.with_spinor(Spinor(up, dn))


def absorber_process(T: float, msg: Message, rng) -> Message | None:
    """Pass with probability T (marking the traversal), otherwise destroy (``None``)."""
    abs_matrix(T)  # domain check
    if absorber_passes(T, _draw(rng)):
        return dataclasses.replace(msg, traversed_absorber=True)
    return None


def analyzer_process(msg: Message, zeta: float, rng) -> Fate:
    """Apply the O-beam loss ``zeta`` and then the spin-up projection."""
    if rng is not None and hasattr(rng, "random"):
        u_zeta, u_spin = float(rng.random()), float(rng.random())
    else:
        u_zeta, u_spin = rng
    code = analyzer_outcome(msg.spinor.up, msg.spinor.down, zeta, u_zeta, u_spin)
    return (Fate.O_DETECTED, Fate.ZETA_LOST, Fate.ANALYZER_REJECTED)[code]


def scatter_filter(msg: Message, exit: str, pscatt1: float, pscatt2: float, rng) -> bool:
    """True to keep the messenger, False if it is discarded as scattered.

    ``exit`` is the BS3 output beam taken, "H" or "O".
    """
    if msg.path not in (Path.PATH1, Path.PATH2):
        raise ValueError("scatter_filter needs a messenger with a definite path")
    out_port = {"H": 0, "O": 1}[exit.upper()]
    return not scatter_discards(msg.traversed_absorber, int(msg.path), out_port,
                                pscatt1, pscatt2, _draw(rng))
