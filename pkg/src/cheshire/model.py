"""Shared domain types: spinors, interferometer configurations and scenario presets.

All angles are radians. Degrees only appear at the CLI and file boundaries.
"""

from __future__ import annotations

import cmath
import dataclasses
import math
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError, InvalidSpinorError

#: Transmissivity of the absorbers used in the experiment.
ABSORBER_T = 0.79
#: Weak-field rotation angle (20 degrees).
WEAK_FIELD_THETA = 20.0 * math.pi / 180.0
#: Beam-splitter reflectivity fitted to the empty interferometer.
DEFAULT_R = 0.22


@dataclass(frozen=True)
class Spinor:
    """Two-component spin amplitude in the (spin-up, spin-down) basis along z.

    The global phase is kept: it encodes the phase accumulated by a messenger.
    """

    up: complex
    down: complex

    def __post_init__(self):
        object.__setattr__(self, "up", complex(self.up))
        object.__setattr__(self, "down", complex(self.down))

    @classmethod
    def from_array(cls, a) -> "Spinor":
        return cls(complex(a[0]), complex(a[1]))

    def as_array(self) -> np.ndarray:
        return np.array([self.up, self.down], dtype=complex)

    def norm2(self) -> float:
        return abs(self.up) ** 2 + abs(self.down) ** 2

    def normalized(self) -> "Spinor":
        n = math.sqrt(self.norm2())
        if n == 0.0:
            raise InvalidSpinorError("cannot normalize a zero spinor")
        return Spinor(self.up / n, self.down / n)

    def is_close(self, other: "Spinor", atol: float = 1e-12) -> bool:
        return abs(self.up - other.up) <= atol and abs(self.down - other.down) <= atol


SPIN_UP = Spinor(1.0, 0.0)
SPIN_DOWN = Spinor(0.0, 1.0)


def spinor_from_bloch(theta: float, phi: float) -> Spinor:
    """Spinor (cos(theta/2), e^{i phi} sin(theta/2)) for polar angle theta and azimuth phi."""
    return Spinor(math.cos(theta / 2.0), cmath.exp(1j * phi) * math.sin(theta / 2.0))


def _wrap_angle(x: float) -> float:
    """Map x into [-pi, pi)."""
    y = math.fmod(x + math.pi, 2.0 * math.pi)
    if y < 0.0:
        y += 2.0 * math.pi
    return y - math.pi


def bloch_from_spinor(s: Spinor) -> tuple[float, float, float]:
    """Inverse of :func:`spinor_from_bloch`.

    Returns ``(theta, phi, global_phase)`` with theta in [0, pi] and phi in
    [-pi, pi) such that ``e^{i global_phase} * spinor_from_bloch(theta, phi) == s``.
    At the poles phi is set to 0 and the whole phase goes into ``global_phase``.

    Raises:
        InvalidSpinorError: if the norm of ``s`` deviates from 1 by more than 1e-9.
    """
    n2 = s.norm2()
    if not math.isfinite(n2) or abs(n2 - 1.0) > 1e-9:
        raise InvalidSpinorError(f"spinor norm^2 = {n2!r}, expected 1")
    a, b = s.up, s.down
    theta = 2.0 * math.atan2(abs(b), abs(a))
    if a == 0:
        return theta, 0.0, _wrap_angle(cmath.phase(b))
    gphase = cmath.phase(a)
    phi = 0.0 if b == 0 else _wrap_angle(cmath.phase(b) - gphase)
    return theta, phi, _wrap_angle(gphase)


class Postselect(str, Enum):
    """Where the spin turner ST2 and analyzer A sit."""

    NONE = "none"
    O = "O-only"
    H = "H-only"
    BOTH = "both"

    @classmethod
    def parse(cls, value) -> "Postselect":
        if isinstance(value, cls):
            return value
        aliases = {"o": cls.O, "h": cls.H, "o-only": cls.O, "h-only": cls.H,
                   "none": cls.NONE, "both": cls.BOTH}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ConfigError(f"unknown postselection mode {value!r}") from None

    @property
    def o_selected(self) -> bool:
        return self in (Postselect.O, Postselect.BOTH)

    @property
    def h_selected(self) -> bool:
        return self in (Postselect.H, Postselect.BOTH)


@dataclass(frozen=True)
class InterferometerConfig:
    """Every physical knob of the two-path interferometer.

    ``chi`` is not a field: it is always ``phi1 - phi2``.
    """

    alpha: float = math.pi / 2
    beta: float = math.pi / 2
    mu1: float = 0.0
    mu2: float = math.pi
    theta1: float = 0.0
    theta2: float = 0.0
    T1: float = 1.0
    T2: float = 1.0
    phi1: float = 0.0
    phi2: float = 0.0
    R: float = DEFAULT_R
    postselect: Postselect = Postselect.O
    zeta: float = 0.0
    pscatt1: float = 0.0
    pscatt2: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "postselect", Postselect.parse(self.postselect))
        for name in ("alpha", "beta", "mu1", "mu2", "theta1", "theta2", "phi1", "phi2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise ConfigError(f"{name} must be a finite number, got {v!r}")
            object.__setattr__(self, name, float(v))
        for name in ("T1", "T2", "R", "zeta", "pscatt1", "pscatt2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not (0.0 <= v <= 1.0):
                raise ConfigError(f"{name} must lie in [0, 1], got {v!r}")
            object.__setattr__(self, name, float(v))

    @property
    def chi(self) -> float:
        return self.phi1 - self.phi2

    @property
    def T(self) -> float:
        """Beam-splitter transmittance 1 - R."""
        return 1.0 - self.R

    def replace(self, **changes) -> "InterferometerConfig":
        if "chi" in changes:
            chi = changes.pop("chi")
            changes["phi1"] = changes.get("phi2", self.phi2) + chi
        return dataclasses.replace(self, **changes)

    def with_chi(self, chi: float) -> "InterferometerConfig":
        return self.replace(chi=chi)


CONFIG_FIELDS = tuple(f.name for f in dataclasses.fields(InterferometerConfig))


class ScenarioName(str, Enum):
    EMPTY = "EMPTY"
    REF = "REF"
    ABS1 = "ABS1"
    ABS2 = "ABS2"
    MAG1 = "MAG1"
    MAG2 = "MAG2"
    COMBINED = "COMBINED"

    @classmethod
    def parse(cls, value) -> "ScenarioName":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise ConfigError(f"unknown scenario {value!r}") from None


_REFERENCE = dict(mu1=0.0, mu2=math.pi, T1=1.0, T2=1.0, theta1=0.0, theta2=0.0)

# Keys each preset pins. User overrides may repeat a pinned value but not change it.
_PRESETS: dict[ScenarioName, dict[str, Any]] = {
    ScenarioName.REF: dict(_REFERENCE),
    ScenarioName.ABS1: {**_REFERENCE, "T1": ABSORBER_T},
    ScenarioName.ABS2: {**_REFERENCE, "T2": ABSORBER_T},
    ScenarioName.MAG1: {**_REFERENCE, "theta1": WEAK_FIELD_THETA},
    ScenarioName.MAG2: {**_REFERENCE, "theta2": WEAK_FIELD_THETA},
    ScenarioName.EMPTY: dict(alpha=0.0, beta=0.0, mu1=0.0, mu2=0.0, T1=1.0, T2=1.0,
                             theta1=0.0, theta2=0.0, postselect=Postselect.NONE),
    ScenarioName.COMBINED: {},
}

#: The six canonical presets, in the order used by sweeps and reports.
CANONICAL_SCENARIOS = (ScenarioName.EMPTY, ScenarioName.REF, ScenarioName.ABS1,
                       ScenarioName.ABS2, ScenarioName.MAG1, ScenarioName.MAG2)


@dataclass(frozen=True)
class Scenario:
    """A named preset plus optional partial overrides of :class:`InterferometerConfig`."""

    name: ScenarioName
    overrides: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "name", ScenarioName.parse(self.name))
        object.__setattr__(self, "overrides", MappingProxyType(dict(self.overrides)))

    def __hash__(self):
        return hash((self.name, tuple(sorted(self.overrides.items()))))

    @property
    def label(self) -> str:
        return self.name.value


def _same(a, b) -> bool:
    if isinstance(a, Postselect) or isinstance(b, Postselect):
        return Postselect.parse(a) == Postselect.parse(b)
    return float(a) == float(b)


def scenario_config(s: Scenario | str, chi: float = 0.0) -> InterferometerConfig:
    """Full configuration for scenario ``s`` at phase ``chi`` (phi1 = chi, phi2 = 0).

    Raises:
        ConfigError: for unknown keys, attempts to set the derived phases, or an
            override that contradicts a value pinned by the preset.
    """
    if not isinstance(s, Scenario):
        s = Scenario(s)
    values: dict[str, Any] = {}
    for key, val in _PRESETS[s.name].items():
        values[key] = val
    for key, val in s.overrides.items():
        if key in ("chi", "phi1", "phi2"):
            raise ConfigError(f"{key} is derived from the sweep phase and cannot be overridden")
        if key not in CONFIG_FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}")
        if key in values and not _same(values[key], val):
            raise ConfigError(
                f"{key} is set twice for scenario {s.label}: preset {values[key]!r} vs override {val!r}"
            )
        values[key] = val
    values["phi1"] = float(chi)
    values["phi2"] = 0.0
    return InterferometerConfig(**values)
