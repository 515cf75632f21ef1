"""Fringe fitting and reflectivity estimation.

Fringe model: ``f(chi) = b [1 + v sin(chi)]``. It is linear in ``(b, b v)``,
so the fit is an ordinary (or weighted) linear least-squares problem and the
covariance of ``(b, v)`` follows from the delta method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DomainError, UnderdeterminedFitError
from .model import Scenario
from .oracle import ideal_empty_visibilities


@dataclass(frozen=True)
class FringeSeries:
    """Measured or simulated intensities along a chi scan.

    ``sigma`` is either ``None`` or one standard error per point.
    """

    chi: tuple[float, ...]
    values: tuple[float, ...]
    sigma: tuple[float, ...] | None = None
    beam: str = "O"
    scenario: Scenario | None = None

    def __post_init__(self):
        chi = tuple(float(c) for c in self.chi)
        values = tuple(float(v) for v in self.values)
        if len(chi) != len(values):
            raise ValueError(f"{len(chi)} chi values but {len(values)} data values")
        if any(not math.isfinite(c) for c in chi):
            raise ValueError("chi values must be finite")
        if any(b <= a for a, b in zip(chi, chi[1:])):
            raise ValueError("chi values must be strictly increasing")
        if any(not (math.isfinite(v) and v >= 0.0) for v in values):
            raise ValueError("data values must be finite and non-negative")
        sigma = self.sigma
        if sigma is not None:
            sigma = tuple(float(s) for s in sigma)
            if len(sigma) != len(chi):
                raise ValueError(f"{len(sigma)} sigma values for {len(chi)} points")
            if any(not (math.isfinite(s) and s > 0.0) for s in sigma):
                raise ValueError("sigma values must be finite and positive")
        beam = str(self.beam).upper()
        if beam not in ("H", "O"):
            raise ValueError(f"beam must be 'H' or 'O', got {self.beam!r}")
        object.__setattr__(self, "chi", chi)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "beam", beam)

    def __len__(self) -> int:
        return len(self.chi)

    @classmethod
    def from_arrays(cls, chi, values, sigma=None, beam="O", scenario=None) -> "FringeSeries":
        return cls(tuple(np.asarray(chi, float)), tuple(np.asarray(values, float)),
                   None if sigma is None else tuple(np.asarray(sigma, float)), beam, scenario)


@dataclass(frozen=True)
class FitResult:
    b: float
    v: float
    residual_rms: float
    covariance: np.ndarray = field(repr=False, compare=False)
    phase: float = 0.0  # only set by fit_fringe_cos

    @property
    def stderr_b(self) -> float:
        return math.sqrt(max(self.covariance[0, 0], 0.0))

    @property
    def stderr_v(self) -> float:
        return math.sqrt(max(self.covariance[1, 1], 0.0))

    @property
    def flagged(self) -> bool:
        """True if |v| exceeds 1 by more than three standard errors, or b <= 0."""
        return abs(self.v) > 1.0 + 3.0 * self.stderr_v or self.b <= 0.0


def _weighted_lstsq(X: np.ndarray, y: np.ndarray, sigma):
    """Solve y ~ X p. Returns (p, cov(p), rms of unweighted residuals)."""
    if sigma is None:
        w = np.ones_like(y)
    else:
        w = 1.0 / np.asarray(sigma, float)
    Xw = X * w[:, None]
    yw = y * w
    if np.linalg.matrix_rank(Xw) < X.shape[1]:
        raise UnderdeterminedFitError("design matrix is rank deficient")
    p, *_ = np.linalg.lstsq(Xw, yw, rcond=None)
    resid = y - X @ p
    normal_inv = np.linalg.inv(Xw.T @ Xw)
    if sigma is None:
        dof = len(y) - X.shape[1]
        s2 = float(resid @ resid) / dof if dof > 0 else 0.0
        cov = normal_inv * s2
    else:
        cov = normal_inv
    return p, cov, float(np.sqrt(np.mean(resid ** 2)))


def _series_arrays(series: FringeSeries):
    if len(series) < 3:
        raise UnderdeterminedFitError(f"need at least 3 points, got {len(series)}")
    chi = np.asarray(series.chi)
    y = np.asarray(series.values)
    return chi, y


def fit_fringe(series: FringeSeries) -> FitResult:
    """Least-squares fit of ``b [1 + v sin(chi)]``.

    Weighted by ``1/sigma^2`` when the series carries per-point errors.

    Raises:
        UnderdeterminedFitError: fewer than 3 points or all sin(chi) equal.
    """
    chi, y = _series_arrays(series)
    s = np.sin(chi)
    if np.ptp(s) <= 1e-12 * max(1.0, np.abs(s).max()):
        raise UnderdeterminedFitError("all sin(chi) values are equal; visibility is not identifiable")
    X = np.column_stack([np.ones_like(s), s])
    (b, bv), cov_p, rms = _weighted_lstsq(X, y, series.sigma)
    if b == 0.0:
        raise UnderdeterminedFitError("fitted baseline is zero; visibility undefined")
    v = bv / b
    # delta method: (b, v) = g(b, bv) with dv/db = -bv/b^2, dv/d(bv) = 1/b
    J = np.array([[1.0, 0.0], [-bv / b ** 2, 1.0 / b]])
    return FitResult(float(b), float(v), rms, J @ cov_p @ J.T)


def fit_fringe_cos(series: FringeSeries) -> FitResult:
    """Fit of ``b [1 + v cos(chi + phase)]``.

    Writing the model as ``b + c cos(chi) + d sin(chi)`` makes it linear, so the
    global optimum is found exactly; the sign convention picks ``v >= 0``.
    """
    chi, y = _series_arrays(series)
    X = np.column_stack([np.ones_like(chi), np.cos(chi), np.sin(chi)])
    (b, c, d), cov_p, rms = _weighted_lstsq(X, y, series.sigma)
    if b == 0.0:
        raise UnderdeterminedFitError("fitted baseline is zero; visibility undefined")
    amp = math.hypot(c, d)
    # c cos chi + d sin chi = amp cos(chi + phase) with cos phase = c/amp, sin phase = -d/amp
    phase = math.atan2(-d, c) if amp > 0.0 else 0.0
    v = amp / b
    if amp > 0.0:
        dv = np.array([-amp / b ** 2, c / (amp * b), d / (amp * b)])
    else:
        dv = np.array([0.0, 0.0, 0.0])
    J = np.array([[1.0, 0.0, 0.0], dv])
    return FitResult(float(b), float(v), rms, J @ cov_p @ J.T, phase=phase)


def _two_roots(disc: float) -> tuple[float, float]:
    h = 0.5 * math.sqrt(disc)
    return 0.5 - h, 0.5 + h


def estimate_R_empty(a: float) -> tuple[float, float]:
    """Both reflectivity roots from the empty-interferometer ratio a = P_H/P_O at chi = 0.

    Raises:
        DomainError: if a < 1.
    """
    if not (math.isfinite(a) and a >= 1.0):
        raise DomainError(f"ratio a={a!r} must be >= 1")
    return _two_roots((a - 1.0) / (a + 1.0))


def estimate_R_postselected(a: float) -> tuple[float, float]:
    """Both reflectivity roots from the reference-interferometer ratio a = P_H/P_O.

    Raises:
        DomainError: if a < 2.
    """
    if not (math.isfinite(a) and a >= 2.0):
        raise DomainError(f"ratio a={a!r} must be >= 2")
    return _two_roots((a - 2.0) / (a + 2.0))


def quality_factor_prediction(R: float, v_O_measured: float) -> float:
    """Expected H-beam visibility when the O-beam visibility is degraded to ``v_O_measured``."""
    if not 0.0 <= v_O_measured <= 1.0:
        raise DomainError(f"v_O={v_O_measured!r} outside [0, 1]")
    return ideal_empty_visibilities(R)[0] * v_O_measured


def fringe_from_probs(chi: Sequence[float], probs: Sequence[float], beam: str = "O",
                      scenario: Scenario | None = None) -> FringeSeries:
    return FringeSeries(tuple(chi), tuple(probs), None, beam, scenario)
