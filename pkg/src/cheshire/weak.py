"""Weak values of path and spin-path projectors.

Two routes are provided. :func:`generic_weak_value` implements the textbook
definition on 8-component states. The report functions follow the
experimental procedure instead: every weak value is assembled from detector
intensity ratios (absorber or weak field in one path, divided by the
reference interferometer), each computed in its own parameter regime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePostselectionError, DomainError, UndefinedLimitError
from .model import DEFAULT_R, InterferometerConfig, Postselect, Scenario, scenario_config
from .oracle import StateVector8, prob_H_tilde, prob_O

_DEGENERATE = 1e-12
_EPS = 2.0 ** -52


def generic_weak_value(pre, post, A) -> complex:
    """<post|A|pre> / <post|pre>.

    ``pre`` and ``post`` are :class:`StateVector8` instances or 8-element arrays;
    ``A`` is an 8x8 matrix.

    Raises:
        DegeneratePostselectionError: if |<post|pre>| < 1e-12.
    """
    psi = _amp(pre)
    phi = _amp(post)
    A = np.asarray(A, dtype=complex)
    if A.shape != (8, 8):
        raise ValueError(f"operator must be 8x8, got {A.shape}")
    overlap = np.vdot(phi, psi)
    if abs(overlap) < _DEGENERATE:
        raise DegeneratePostselectionError(
            f"|<post|pre>| = {abs(overlap):.3g}; weak value undefined")
    return complex(np.vdot(phi, A @ psi) / overlap)


def _amp(s) -> np.ndarray:
    if isinstance(s, StateVector8):
        return s.amp
    a = np.asarray(s, dtype=complex).reshape(-1)
    if a.shape != (8,):
        raise ValueError(f"state must have 8 components, got {a.shape}")
    return a


# --- intensity ratios ----------------------------------------------------------

def _point(chi, theta1, theta2, T1, T2, R, postselect) -> InterferometerConfig:
    overrides = dict(theta1=theta1, theta2=theta2, T1=T1, T2=T2, R=R, postselect=postselect)
    return scenario_config(Scenario("COMBINED", overrides), chi)


def _ratio(prob, chi, R, postselect, **knobs) -> float:
    args = dict(theta1=0.0, theta2=0.0, T1=1.0, T2=1.0)
    ref = prob(_point(chi, R=R, postselect=postselect, **args))
    if ref == 0.0:
        raise ZeroDivisionError(f"reference intensity vanishes at chi={chi!r}")
    args.update(knobs)
    return prob(_point(chi, R=R, postselect=postselect, **args)) / ref


def _ratios(prob, postselect, chi, theta1, theta2, T1, T2, R) -> tuple[float, float, float, float]:
    return (_ratio(prob, chi, R, postselect, T1=T1),
            _ratio(prob, chi, R, postselect, T2=T2),
            _ratio(prob, chi, R, postselect, theta1=theta1),
            _ratio(prob, chi, R, postselect, theta2=theta2))


def intensity_ratios_O(chi: float, theta1: float, theta2: float, T1: float, T2: float,
                       R: float = DEFAULT_R) -> tuple[float, float, float, float]:
    """O-beam ratios (ABS1, ABS2, MAG1, MAG2) / REF.

    Each ratio changes a single knob relative to the reference interferometer:
    absorber 1 (T1), absorber 2 (T2), field 1 (theta1), field 2 (theta2).

    Raises:
        ZeroDivisionError: if the reference probability is zero.
    """
    return _ratios(prob_O, Postselect.O, chi, theta1, theta2, T1, T2, R)


def intensity_ratios_H(chi: float, theta1: float, theta2: float, T1: float, T2: float,
                       R: float = DEFAULT_R) -> tuple[float, float, float, float]:
    """Same as :func:`intensity_ratios_O` with spin analysis moved to the H-beam."""
    return _ratios(prob_H_tilde, Postselect.H, chi, theta1, theta2, T1, T2, R)


# --- weak values ---------------------------------------------------------------

@dataclass(frozen=True)
class WeakValueReport:
    pi1_w: float
    pi2_w: float
    sz_pi1_sq: float
    sz_pi2_sq: float
    chi: float
    theta1: float
    theta2: float
    T1: float
    T2: float
    beam: str

    @property
    def pathological(self) -> dict[str, bool]:
        """True for each field lying outside [0, 1]."""
        return {name: not 0.0 <= getattr(self, name) <= 1.0
                for name in ("pi1_w", "pi2_w", "sz_pi1_sq", "sz_pi2_sq")}

    def as_dict(self) -> dict:
        d = {name: getattr(self, name) for name in
             ("beam", "chi", "theta1", "theta2", "T1", "T2",
              "pi1_w", "pi2_w", "sz_pi1_sq", "sz_pi2_sq")}
        d["pathological"] = self.pathological
        return d


def _path_weak_value(ratio: float, T: float) -> float:
    # (1 - I/I_ref) / (2 (1 - sqrt T)); the T -> 1 limit is taken analytically
    return (1.0 - ratio) / (2.0 * (1.0 - math.sqrt(T)))


def _snap_zero(x: float, condition: float) -> float:
    """Zero for results indistinguishable from 0 given the ratio's rounding amplification.

    Used only on fields that vanish identically, where the ratio arithmetic
    leaves a residue of order ``condition * eps``.
    """
    return 0.0 if abs(x) <= 64.0 * _EPS * condition else x


def _check(name, value, lo, hi):
    if not (isinstance(value, (int, float)) and math.isfinite(value) and lo <= value <= hi):
        raise DomainError(f"{name}={value!r} outside [{lo}, {hi}]")


def _weak_values(ratios, beam, chi, theta1, theta2, T1, T2, R) -> WeakValueReport:
    _check("T1", T1, 0.0, 1.0)
    _check("T2", T2, 0.0, 1.0)
    _check("R", R, 1e-300, 1.0 - 1e-16)
    if math.sin(theta1 / 2) == 0.0:
        raise UndefinedLimitError(
            "|<sigma_z Pi_1>_w|^2 has no limit at theta1 = 0: it depends on the order "
            "in which chi and theta1 approach zero")

    # Pi_1: absorber 1 alone (theta1 = theta2 = 0, T2 = 1)
    r = ratios(chi, 0.0, 0.0, T1, 1.0, R)[0]
    pi1 = 0.0 if T1 == 1.0 else _snap_zero(_path_weak_value(r, T1), 1.0 / (1.0 - math.sqrt(T1)))
    # sigma_z Pi_1: field 1 alone, Pi_1 taken from the same regime (T1 = 1)
    r = ratios(chi, theta1, 0.0, 1.0, 1.0, R)[2]
    sz1 = (r - 1.0) / math.sin(theta1 / 2) ** 2
    # Pi_2: absorber 2 alone (theta = 0, T1 = 1)
    r = ratios(chi, 0.0, 0.0, 1.0, T2, R)[1]
    pi2 = 1.0 if T2 == 1.0 else _path_weak_value(r, T2)
    # sigma_z Pi_2: field 2 alone, Pi_2 at T2 = 1 equals 1; theta2 -> 0 limit is 1 - 1
    if math.sin(theta2 / 2) == 0.0:
        sz2 = 0.0
    else:
        r = ratios(chi, 0.0, theta2, 1.0, 1.0, R)[3]
        s2 = math.sin(theta2 / 2) ** 2
        sz2 = _snap_zero(1.0 + (r - 1.0) / s2, 1.0 + 1.0 / s2)
    return WeakValueReport(pi1, pi2, sz1, sz2, chi, theta1, theta2, T1, T2, beam)


def weak_values_O(chi: float, theta1: float, theta2: float, T1: float, T2: float,
                  R: float = DEFAULT_R) -> WeakValueReport:
    """Weak values inferred from O-beam intensities with the analyzer in the O-beam.

    Raises:
        UndefinedLimitError: if theta1 is zero (mod 2 pi).
    """
    return _weak_values(intensity_ratios_O, "O", chi, theta1, theta2, T1, T2, R)


def weak_values_H(chi: float, theta1: float, theta2: float, T1: float, T2: float,
                  R: float = DEFAULT_R) -> WeakValueReport:
    """Weak values inferred from H-beam intensities with the analyzer in the H-beam."""
    return _weak_values(intensity_ratios_H, "H", chi, theta1, theta2, T1, T2, R)
