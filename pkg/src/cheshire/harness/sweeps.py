"""Chi sweeps of the quantum oracle and of the event-based engine."""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from ..des import EngineRunSpec, Tally, run
from ..des.engine import DEFAULT_WARMUP
from ..errors import ConfigError
from ..model import (CANONICAL_SCENARIOS, DEFAULT_R, InterferometerConfig, Postselect, Scenario,
                     ScenarioName, scenario_config)
from ..oracle import DetectionProbs, detection_probs

BEAMS = ("H", "O")


class Normalization(str, Enum):
    RAW = "raw"
    REF = "by-REF"
    P00011 = "by-(0,0,0,1,1)"

    @classmethod
    def parse(cls, value) -> "Normalization":
        if isinstance(value, cls):
            return value
        aliases = {"raw": cls.RAW, "by-ref": cls.REF, "ref": cls.REF,
                   "by-(0,0,0,1,1)": cls.P00011, "p00011": cls.P00011, "00011": cls.P00011}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise ConfigError(f"unknown normalization {value!r}") from None


def chi_grid_deg(start: float, stop: float, step: float) -> list[float]:
    """Half-open grid ``start, start + step, ...`` below ``stop`` (degrees)."""
    if not all(math.isfinite(v) for v in (start, stop, step)):
        raise ConfigError("chi grid bounds must be finite")
    if step <= 0:
        raise ConfigError(f"chi step must be positive, got {step!r}")
    n = math.ceil((stop - start) / step - 1e-9)
    if n <= 0:
        raise ConfigError(f"empty chi grid [{start}, {stop}) with step {step}")
    return [start + k * step for k in range(n)]


@dataclass(frozen=True)
class SweepSpec:
    """Everything a sweep needs. Angles in degrees, as on the command line."""

    scenarios: tuple[Scenario, ...] = tuple(Scenario(s) for s in CANONICAL_SCENARIOS)
    chi_start: float = 0.0
    chi_stop: float = 360.0
    chi_step: float = 45.0
    gamma: float = 0.65
    N: int = 72000
    seed: int = 0
    warmup: bool = True
    postselect: Postselect | None = None
    normalization: Normalization = Normalization.RAW
    R: float = DEFAULT_R
    zeta: float = 0.0
    pscatt1: float = 0.0
    pscatt2: float = 0.0
    jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "scenarios", tuple(
            s if isinstance(s, Scenario) else Scenario(s) for s in self.scenarios))
        if not self.scenarios:
            raise ConfigError("no scenarios selected")
        if self.postselect is not None:
            object.__setattr__(self, "postselect", Postselect.parse(self.postselect))
        object.__setattr__(self, "normalization", Normalization.parse(self.normalization))
        if not isinstance(self.N, (int, np.integer)) or self.N < 0:
            raise ConfigError(f"N must be a non-negative integer, got {self.N!r}")
        if self.jobs < 1:
            raise ConfigError(f"jobs must be >= 1, got {self.jobs!r}")
        self.chi_deg  # validates the grid
        for s in self.scenarios:
            self.config(s, 0.0)  # validates overrides early

    @property
    def chi_deg(self) -> list[float]:
        return chi_grid_deg(self.chi_start, self.chi_stop, self.chi_step)

    def config(self, scenario: Scenario, chi: float) -> InterferometerConfig:
        """Configuration of one sweep point; sweep-wide knobs become scenario overrides."""
        extra: dict = dict(R=self.R, zeta=self.zeta, pscatt1=self.pscatt1, pscatt2=self.pscatt2)
        # the empty interferometer has no spin analysis to relocate
        if self.postselect is not None and scenario.name is not ScenarioName.EMPTY:
            extra["postselect"] = self.postselect
        merged = {**extra, **scenario.overrides}
        return scenario_config(Scenario(scenario.name, merged), chi)

    def engine_spec(self, config: InterferometerConfig, seed: int) -> EngineRunSpec:
        return EngineRunSpec(config, gamma=self.gamma, N=int(self.N), seed=seed,
                             warmup=DEFAULT_WARMUP if self.warmup else 0)


def expected_probs(config: InterferometerConfig) -> DetectionProbs:
    """Quantum prediction including the O-beam analyzer loss ``zeta``.

    Absorber scattering is a path-dependent discard with no counterpart in the
    wave description, so configs with ``pscatt > 0`` are rejected.
    """
    if config.pscatt1 > 0 or config.pscatt2 > 0:
        raise ConfigError("no quantum prediction exists for scattering losses (pscatt > 0)")
    p = detection_probs(config)
    if config.postselect.o_selected and config.zeta:
        p = DetectionProbs(p.H, p.O * (1.0 - config.zeta))
    return p


def _reference(spec: SweepSpec, scenario: Scenario, chi: float) -> DetectionProbs:
    """Normalization denominator for ``scenario`` at ``chi``."""
    # the reference keeps the sweep's spin analysis and losses but drops path knobs
    ref = Scenario(ScenarioName.REF, {k: v for k, v in scenario.overrides.items()
                                     if k in ("R", "zeta", "postselect", "alpha", "beta")})
    at = 0.0 if spec.normalization is Normalization.P00011 else chi
    c = spec.config(ref, at).replace(pscatt1=0.0, pscatt2=0.0)
    return expected_probs(c)


def normalize(spec: SweepSpec, scenario: Scenario, chi: float, beam: str, value: float) -> float:
    if spec.normalization is Normalization.RAW:
        return value
    ref = getattr(_reference(spec, scenario, chi), beam)
    return value / ref if ref > 0 else math.nan


@dataclass(frozen=True)
class OraclePoint:
    scenario: Scenario
    beam: str
    chi_deg: float
    chi: float
    probability: float
    normalized: float


def oracle_sweep(spec: SweepSpec) -> list[OraclePoint]:
    """All (scenario, beam, chi) oracle points, ordered by scenario, beam, chi."""
    points = []
    for s in spec.scenarios:
        for beam in BEAMS:
            for d in spec.chi_deg:
                chi = math.radians(d)
                p = getattr(expected_probs(spec.config(s, chi)), beam)
                points.append(OraclePoint(s, beam, d, chi, p, normalize(spec, s, chi, beam, p)))
    return points


def cell_seed(seed: int, scenario: Scenario, chi_index: int) -> int:
    """Per-cell 64-bit seed, independent of the other cells and of the job layout."""
    code = list(ScenarioName).index(scenario.name)
    ss = np.random.SeedSequence([int(seed), code, int(chi_index)])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


@dataclass(frozen=True)
class DesCell:
    scenario: Scenario
    chi_deg: float
    chi: float
    seed: int
    config: InterferometerConfig = field(repr=False)
    tally: Tally


def _run_one(args) -> Tally:
    return run(args)


def des_sweep(spec: SweepSpec) -> list[DesCell]:
    """Run the engine once per (scenario, chi); results ordered by scenario, chi."""
    jobs = []
    for s in spec.scenarios:
        for k, d in enumerate(spec.chi_deg):
            chi = math.radians(d)
            c = spec.config(s, chi)
            seed = cell_seed(spec.seed, s, k)
            jobs.append((s, d, chi, seed, c, spec.engine_spec(c, seed)))
    specs = [j[-1] for j in jobs]
    if spec.jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            tallies = list(pool.map(_run_one, specs))
    else:
        tallies = [run(e) for e in specs]
    return [DesCell(s, d, chi, seed, c, t) for (s, d, chi, seed, c, _), t in zip(jobs, tallies)]


def scenarios_from_names(names: Sequence[str] | None,
                         overrides: Mapping[str, object] | None = None) -> tuple[Scenario, ...]:
    names = names or [s.value for s in CANONICAL_SCENARIOS]
    return tuple(Scenario(n, dict(overrides or {})) for n in names)
