"""Exact quantum-mechanical predictions for the two-path neutron interferometer.

The state is an 8-component vector: pairs (1,2), (3,4), (5,6), (7,8) (1-based)
hold (spin-up, spin-down) amplitudes on the four internal pathways. After the
last beam splitter, pair (5,6) is the H-beam and pair (7,8) the O-beam.

Phase conventions (fixed by requiring the matrix pipeline to reproduce the
closed-form probabilities, including sin(chi) fringes of the empty interferometer):

* beam splitter: transmission amplitude ``sqrt(T) * exp(i pi/4)``, reflection
  amplitude ``i sqrt(R)``, acting on an (input a, input b) pair as
  ``[[conj(t), r], [-conj(r), t]]``;
* rotation about z by an angle mu (spin rotators and weak fields):
  ``diag(exp(i mu/2), exp(-i mu/2))``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .errors import DomainError, NormalizationError
from .model import InterferometerConfig, Postselect

TRANSMISSION_PHASE = math.pi / 4

_KINDS = ("BS", "BS4", "ST", "SR", "BZ", "ABS", "PS")


@dataclass(frozen=True, eq=False)
class ComponentMatrix:
    """Matrix of one optical component and the (0-based) state indices it acts on."""

    kind: str
    matrix: np.ndarray
    targets: tuple[int, ...] = ()
    label: str = ""

    def apply(self, psi: np.ndarray) -> None:
        """Apply in place to the state array ``psi``."""
        idx = list(self.targets)
        psi[idx] = self.matrix @ psi[idx]


def bs_amplitudes(R: float) -> tuple[complex, complex]:
    """(transmission, reflection) amplitudes of a beam splitter of reflectivity R."""
    if not 0.0 <= R <= 1.0:
        raise DomainError(f"reflectivity R={R!r} outside [0, 1]")
    t = math.sqrt(1.0 - R) * cmath.exp(1j * TRANSMISSION_PHASE)
    r = 1j * math.sqrt(R)
    return t, r


def bs_matrix(R: float) -> np.ndarray:
    """2x2 beam-splitter block acting on one spin component of the (a, b) inputs."""
    t, r = bs_amplitudes(R)
    return np.array([[t.conjugate(), r], [-r.conjugate(), t]], dtype=complex)


def st_matrix(angle: float) -> np.ndarray:
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def sr_matrix(angle: float) -> np.ndarray:
    return np.diag([cmath.exp(0.5j * angle), cmath.exp(-0.5j * angle)])


def abs_matrix(T: float) -> np.ndarray:
    if not 0.0 <= T <= 1.0:
        raise DomainError(f"transmissivity T={T!r} outside [0, 1]")
    return math.sqrt(T) * np.eye(2, dtype=complex)


def ps_matrix(phi: float) -> np.ndarray:
    return cmath.exp(1j * phi) * np.eye(2, dtype=complex)


def component_matrix(kind: str, parameter: float, targets: Sequence[int] = (),
                     label: str = "") -> ComponentMatrix:
    """Matrix representation of one interferometer component.

    ``kind`` is one of BS (2x2 block on a pair of same-spin amplitudes), BS4
    (the full 4x4 splitter on (a_up, a_down, b_up, b_down)), ST, SR, BZ (alias
    of SR), ABS or PS. ``targets`` are 0-based state-vector indices.
    """
    kind = kind.upper()
    if kind == "BS":
        m = bs_matrix(parameter)
    elif kind == "BS4":
        m = np.kron(bs_matrix(parameter), np.eye(2))
    elif kind == "ST":
        m = st_matrix(parameter)
    elif kind in ("SR", "BZ"):
        m = sr_matrix(parameter)
    elif kind == "ABS":
        m = abs_matrix(parameter)
    elif kind == "PS":
        m = ps_matrix(parameter)
    else:
        raise ValueError(f"unknown component kind {kind!r}; expected one of {_KINDS}")
    m.setflags(write=False)
    targets = tuple(int(i) for i in targets)
    if targets and len(targets) != m.shape[0]:
        raise ValueError(f"{kind} acts on {m.shape[0]} amplitudes, got targets {targets}")
    return ComponentMatrix(kind, m, targets, label or kind)


@dataclass(frozen=True, eq=False)
class StateVector8:
    """Read-only 8-component amplitude vector."""

    amp: np.ndarray = field(default_factory=lambda: np.eye(8, dtype=complex)[0])

    def __post_init__(self):
        a = np.array(self.amp, dtype=complex).reshape(-1)
        if a.shape != (8,):
            raise ValueError(f"state vector must have 8 components, got {a.shape}")
        a.setflags(write=False)
        object.__setattr__(self, "amp", a)

    def norm2(self) -> float:
        return float(np.vdot(self.amp, self.amp).real)

    def pair(self, j: int) -> np.ndarray:
        """Amplitudes of pathway j = 1..4, i.e. 1-based elements (2j-1, 2j)."""
        return self.amp[2 * j - 2: 2 * j]


def initial_state() -> StateVector8:
    """Incident beam fully polarized along +z: (1, 0, 0, 0, 0, 0, 0, 0)."""
    return StateVector8()


def _p(i: int, j: int) -> tuple[int, int]:
    # 1-based pair -> 0-based indices
    return (i - 1, j - 1)


def pipeline(config: InterferometerConfig) -> list[ComponentMatrix]:
    """The component matrices in application order (right-to-left product)."""
    c = config
    R = c.R
    steps = [
        component_matrix("ST", c.alpha, _p(1, 2), "ST1"),
        component_matrix("BS", R, _p(2, 4), "BS0"),
        component_matrix("BS", R, _p(1, 3), "BS0"),
        component_matrix("SR", c.mu2, _p(3, 4), "SR2"),
        component_matrix("SR", c.mu1, _p(1, 2), "SR1"),
        component_matrix("BS", R, _p(4, 8), "BS2"),
        component_matrix("BS", R, _p(3, 7), "BS2"),
        component_matrix("BS", R, _p(2, 6), "BS1"),
        component_matrix("BS", R, _p(1, 5), "BS1"),
        component_matrix("ABS", c.T2, _p(7, 8), "ABS2"),
        component_matrix("BZ", c.theta2, _p(7, 8), "B2z"),
        component_matrix("PS", c.phi2, _p(7, 8), "PS2"),
        component_matrix("ABS", c.T1, _p(5, 6), "ABS1"),
        component_matrix("BZ", c.theta1, _p(5, 6), "B1z"),
        component_matrix("PS", c.phi1, _p(5, 6), "PS1"),
        component_matrix("BS", R, _p(6, 8), "BS3"),
        component_matrix("BS", R, _p(5, 7), "BS3"),
    ]
    # ST2 sits in front of the analyzer of each postselected beam.
    if c.postselect.o_selected:
        steps.append(component_matrix("ST", c.beta, _p(7, 8), "ST2(O)"))
    if c.postselect.h_selected:
        steps.append(component_matrix("ST", c.beta, _p(5, 6), "ST2(H)"))
    return steps


def propagate(config: InterferometerConfig, state: StateVector8 | None = None) -> StateVector8:
    """Propagate ``state`` (default: spin-up in pathway 1) through the interferometer.

    Raises:
        NormalizationError: if the input state is not normalized.
    """
    if state is None:
        state = initial_state()
    elif not isinstance(state, StateVector8):
        state = StateVector8(state)
    n2 = state.norm2()
    if abs(n2 - 1.0) > 1e-10:
        raise NormalizationError(f"input state has norm^2 {n2!r}")
    psi = state.amp.copy()
    for step in pipeline(config):
        step.apply(psi)
    return StateVector8(psi)


class DetectionProbs(NamedTuple):
    H: float
    O: float


def detection_probs(config: InterferometerConfig, out: StateVector8 | None = None) -> DetectionProbs:
    """Detector probabilities from the matrix pipeline.

    A postselected beam keeps only its spin-up amplitude (the analyzer passes +z).
    """
    if out is None:
        out = propagate(config)
    a2 = np.abs(out.amp) ** 2
    ph = a2[4] if config.postselect.h_selected else a2[4] + a2[5]
    po = a2[6] if config.postselect.o_selected else a2[6] + a2[7]
    return DetectionProbs(float(ph), float(po))


def _clamp(p: float) -> float:
    # closed forms are non-negative; only rounding can push them below 0
    return min(1.0, max(0.0, p))


def prob_H(config: InterferometerConfig) -> float:
    """H-detector probability with ST2 and analyzer in the O-beam only."""
    R, T = config.R, config.T
    T1, T2, chi = config.T1, config.T2, config.chi
    s = math.sin((config.theta1 - config.theta2) / 2)
    return _clamp(R * (T1 * T * T + T2 * R * R
                       - 2 * T * R * math.sqrt(T1 * T2) * math.sin(chi) * s))


def prob_O(config: InterferometerConfig) -> float:
    """O-detector probability (spin-up after ST2) with postselection in the O-beam."""
    R, T = config.R, config.T
    T1, T2, chi = config.T1, config.T2, config.chi
    s1 = math.sin(config.theta1 / 2)
    c2 = math.cos(config.theta2 / 2)
    return _clamp(R * R * T * (T1 * s1 * s1 + T2 * c2 * c2
                               + 2 * math.sqrt(T1 * T2) * math.sin(chi) * s1 * c2))


def prob_H_tilde(config: InterferometerConfig) -> float:
    """H-detector probability with ST2 and analyzer moved to the H-beam."""
    R, T = config.R, config.T
    T1, T2, chi = config.T1, config.T2, config.chi
    s1 = math.sin(config.theta1 / 2)
    c2 = math.cos(config.theta2 / 2)
    return _clamp(R * (T1 * T * T * s1 * s1 + T2 * R * R * c2 * c2
                       - 2 * T * R * math.sqrt(T1 * T2) * math.sin(chi) * s1 * c2))


def prob_O_tilde(config: InterferometerConfig) -> float:
    """O-detector probability without spin analysis in the O-beam."""
    R, T = config.R, config.T
    T1, T2, chi = config.T1, config.T2, config.chi
    s = math.sin((config.theta1 - config.theta2) / 2)
    return _clamp(R * R * T * (T1 + T2 + 2 * math.sqrt(T1 * T2) * math.sin(chi) * s))


def closed_form_probs(config: InterferometerConfig) -> DetectionProbs:
    """Closed-form (H, O) probabilities for the config's postselection mode.

    Valid for the preselection used in the experiment (alpha = beta = pi/2,
    mu1 = 0, mu2 = pi); other spin settings need :func:`detection_probs`.
    """
    ps = config.postselect
    ph = prob_H_tilde(config) if ps.h_selected else prob_H(config)
    po = prob_O(config) if ps.o_selected else prob_O_tilde(config)
    return DetectionProbs(ph, po)


def ideal_empty_visibilities(R: float) -> tuple[float, float]:
    """(v_H, v_O) of the empty interferometer: 2RT/(R^2+T^2) and 1."""
    if not 0.0 < R < 1.0:
        raise DomainError(f"reflectivity R={R!r} outside (0, 1)")
    T = 1.0 - R
    return 2 * R * T / (R * R + T * T), 1.0


def empty_probs(R: float, chi: float, vH: float | None = None,
                vO: float | None = None) -> DetectionProbs:
    """Output probabilities of the empty interferometer with fringe visibilities vH, vO.

    Omitted visibilities default to the ideal values of :func:`ideal_empty_visibilities`.
    """
    ideal_h, ideal_o = ideal_empty_visibilities(R)
    vH = ideal_h if vH is None else vH
    vO = ideal_o if vO is None else vO
    for name, v in (("vH", vH), ("vO", vO)):
        if not 0.0 <= v <= 1.0:
            raise DomainError(f"visibility {name}={v!r} outside [0, 1]")
    T = 1.0 - R
    s = math.sin(chi)
    return DetectionProbs(R * (R * R + T * T) * (1 - vH * s), 2 * T * R * R * (1 + vO * s))
