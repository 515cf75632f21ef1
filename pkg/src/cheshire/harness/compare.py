"""Oracle versus engine comparison: binomial z-scores and chi-averaged means."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from ..errors import KeyMismatchError

Key = tuple[str, str, float]  # (scenario label, beam, chi in degrees)


def cell_key(scenario: str, beam: str, chi_deg: float) -> Key:
    # rounding absorbs the last-ulp noise of degree/radian conversions
    return (str(scenario), str(beam).upper(), round(float(chi_deg), 9) + 0.0)


@dataclass(frozen=True)
class ComparisonCell:
    scenario: str
    beam: str
    chi_deg: float
    probability: float
    frequency: float
    N: int
    sigma: float
    z: float


def binomial_z(count: int, N: int, p: float) -> tuple[float, float, float]:
    """(frequency, binomial sigma, z) for ``count`` successes out of ``N`` against ``p``.

    With ``p`` equal to 0 or 1 the sigma vanishes: z is 0 on an exact match and
    infinite otherwise.
    """
    if N <= 0:
        raise ValueError("z-score needs a positive sample size")
    f = count / N
    sigma = math.sqrt(p * (1.0 - p) / N)
    if sigma == 0.0:
        return f, 0.0, 0.0 if f == p else math.inf
    return f, sigma, (f - p) / sigma


@dataclass
class ComparisonReport:
    cells: list[ComparisonCell] = field(default_factory=list)
    threshold: float = 3.0
    # (source, scenario, beam) -> chi-averaged value
    means: dict[tuple[str, str, str], float] = field(default_factory=dict)

    @property
    def max_abs_z(self) -> float:
        return max((abs(c.z) for c in self.cells), default=0.0)

    @property
    def outliers(self) -> list[ComparisonCell]:
        return [c for c in self.cells if not abs(c.z) <= self.threshold]

    def within(self) -> int:
        return len(self.cells) - len(self.outliers)

    def passed(self, max_outliers: int = 0) -> bool:
        return len(self.outliers) <= max_outliers

    def mean_ratios(self, source: str, reference: str = "REF") -> dict[tuple[str, str], float]:
        """Each scenario's mean divided by the reference scenario's mean, per beam."""
        out = {}
        for (src, scen, beam), m in self.means.items():
            ref = self.means.get((src, reference, beam))
            if src == source and ref:
                out[(scen, beam)] = m / ref
        return out

    def summary(self) -> str:
        lines = [f"cells: {len(self.cells)}  within {self.threshold:g} sigma: {self.within()}  "
                 f"max |z|: {self.max_abs_z:.3f}"]
        for c in self.outliers:
            lines.append(f"  outlier {c.scenario} {c.beam} chi={c.chi_deg:g} deg: "
                         f"p={c.probability:.6g} f={c.frequency:.6g} z={c.z:.3f}")
        if self.means:
            lines.append("chi-averaged means:")
            for (src, scen, beam), m in sorted(self.means.items()):
                lines.append(f"  {src:<12} {scen:<8} {beam} {m:.6g}")
        return "\n".join(lines)


def compare_cells(des: dict[Key, tuple[int, int]], oracle: dict[Key, float],
                  threshold: float = 3.0) -> ComparisonReport:
    """z-score table for matching keys.

    ``des`` maps a key to ``(count, N)``; ``oracle`` maps it to a probability.

    Raises:
        KeyMismatchError: if the key sets differ.
    """
    missing_left = set(oracle) - set(des)
    missing_right = set(des) - set(oracle)
    if missing_left or missing_right:
        raise KeyMismatchError(missing_left, missing_right)
    report = ComparisonReport(threshold=threshold)
    for key in sorted(des):
        count, N = des[key]
        p = oracle[key]
        f, sigma, z = binomial_z(count, N, p)
        report.cells.append(ComparisonCell(key[0], key[1], key[2], p, f, N, sigma, z))
    return report


def chi_means(values: Iterable[tuple[str, str, float]]) -> dict[tuple[str, str], float]:
    """Average ``(scenario, beam, value)`` triples over chi."""
    acc: dict[tuple[str, str], list[float]] = defaultdict(list)
    for scen, beam, v in values:
        acc[(scen, beam)].append(v)
    return {k: sum(v) / len(v) for k, v in acc.items()}


def add_means(report: ComparisonReport, source: str,
              values: Sequence[tuple[str, str, float]]) -> None:
    for (scen, beam), m in chi_means(values).items():
        report.means[(source, scen, beam)] = m
