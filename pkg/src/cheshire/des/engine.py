"""Sequential discrete-event simulation of the two-path interferometer.

Unit network (one messenger in flight at a time)::

    source -> ST1 -> BS0 -+- port 0 (path 1) -> SR1 -> BS1 -+- port 0: leaves (dashed beam)
                          |                                  +- port 1 -> ABS1, B1z, PS1 -> BS3 port 0
                          +- port 1 (path 2) -> SR2 -> BS2 -+- port 0: leaves (dashed beam)
                                                             +- port 1 -> ABS2, B2z, PS2 -> BS3 port 1
    BS3 port 0 -> H-beam, BS3 port 1 -> O-beam
    beam -> [scatter discard] -> [ST2 -> zeta loss -> analyzer, if postselected] -> detector

Each messenger draws exactly ``SLOTS`` uniforms from a PCG64 stream, one slot
per decision point, so a run is a pure function of its :class:`EngineRunSpec`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from typing import IO

import numba
import numpy as np

from ..model import InterferometerConfig
from ..oracle import bs_amplitudes, ps_matrix, sr_matrix, st_matrix
from .units import (Fate, absorber_passes, analyzer_outcome, apply2, bs_step,
                    scatter_discards)

RNG_ID = "numpy.PCG64/uniform-8slot"
SLOTS = 8
DEFAULT_WARMUP = 1000
_CHUNK = 1 << 16

# uniform slots
_U_BS0, _U_BS12, _U_ABS, _U_BS3, _U_SCATTER, _U_ZETA, _U_SPIN = range(7)

# exit codes recorded per messenger
EXIT_NAMES = ("H", "O", "BS1", "BS2", "ABS1", "ABS2")


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class EngineRunSpec:
    config: InterferometerConfig
    gamma: float = 0.99
    N: int = 0
    seed: int = 0
    rng_id: str = RNG_ID
    warmup: int = DEFAULT_WARMUP

    def __post_init__(self):
        c = self.config
        if not isinstance(c, InterferometerConfig):
            raise SpecError("config must be an InterferometerConfig")
        if not 0.0 < c.R < 1.0:
            raise SpecError(f"DES needs 0 < R < 1, got R={c.R!r}")
        if not (isinstance(self.gamma, (int, float)) and 0.0 <= self.gamma < 1.0):
            raise SpecError(f"gamma={self.gamma!r} outside [0, 1)")
        for name in ("N", "warmup"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool) or v < 0:
                raise SpecError(f"{name} must be a non-negative integer, got {v!r}")
        if not isinstance(self.seed, (int, np.integer)) or not 0 <= self.seed < 2 ** 64:
            raise SpecError(f"seed must be an integer in [0, 2**64), got {self.seed!r}")
        if self.rng_id != RNG_ID:
            raise SpecError(f"unsupported rng_id {self.rng_id!r}; this build provides {RNG_ID!r}")


@dataclass(frozen=True)
class Tally:
    """Event counts of one run. ``counts[beam][path-1]`` with beam 0 = H, 1 = O."""

    counts: tuple[tuple[int, int], tuple[int, int]] = ((0, 0), (0, 0))
    exits_bs1: int = 0
    exits_bs2: int = 0
    absorbed: int = 0
    analyzer_rejected: int = 0
    zeta_lost: int = 0
    scatter_discarded: int = 0
    emitted: int = 0

    def count(self, beam: str, path: int | None = None) -> int:
        row = self.counts[{"H": 0, "O": 1}[beam.upper()]]
        return row[0] + row[1] if path is None else row[path - 1]

    @property
    def H(self) -> int:
        return self.count("H")

    @property
    def O(self) -> int:
        return self.count("O")

    def sinks(self) -> int:
        return (self.H + self.O + self.exits_bs1 + self.exits_bs2 + self.absorbed
                + self.analyzer_rejected + self.zeta_lost + self.scatter_discarded)

    def is_conserved(self) -> bool:
        return self.sinks() == self.emitted

    def __add__(self, other: "Tally") -> "Tally":
        if not isinstance(other, Tally):
            return NotImplemented
        counts = tuple(tuple(a + b for a, b in zip(ra, rb))
                       for ra, rb in zip(self.counts, other.counts))
        rest = {f.name: getattr(self, f.name) + getattr(other, f.name)
                for f in fields(self) if f.name != "counts"}
        return Tally(counts=counts, **rest)

    def as_dict(self) -> dict[str, int]:
        d = {"H_path1": self.counts[0][0], "H_path2": self.counts[0][1],
             "O_path1": self.counts[1][0], "O_path2": self.counts[1][1]}
        d.update({f.name: getattr(self, f.name) for f in fields(self) if f.name != "counts"})
        return d

    @classmethod
    def from_dict(cls, d) -> "Tally":
        counts = ((int(d["H_path1"]), int(d["H_path2"])), (int(d["O_path1"]), int(d["O_path2"])))
        rest = {f.name: int(d[f.name]) for f in fields(cls) if f.name != "counts"}
        return cls(counts=counts, **rest)

    @classmethod
    def from_events(cls, path: np.ndarray, fate: np.ndarray) -> "Tally":
        fc = np.bincount(fate.astype(np.int64), minlength=len(Fate))
        det = np.bincount((fate.astype(np.int64) * 3 + path), minlength=3 * len(Fate))
        counts = ((int(det[3 * Fate.H_DETECTED + 1]), int(det[3 * Fate.H_DETECTED + 2])),
                  (int(det[3 * Fate.O_DETECTED + 1]), int(det[3 * Fate.O_DETECTED + 2])))
        return cls(counts=counts, exits_bs1=int(fc[Fate.EXIT_BS1]),
                   exits_bs2=int(fc[Fate.EXIT_BS2]), absorbed=int(fc[Fate.ABSORBED]),
                   analyzer_rejected=int(fc[Fate.ANALYZER_REJECTED]),
                   zeta_lost=int(fc[Fate.ZETA_LOST]),
                   scatter_discarded=int(fc[Fate.SCATTER_DISCARDED]), emitted=int(len(fate)))


@numba.njit(cache=True)
def _run_chunk(u, x, stored, mats, t, r, gamma, T1, T2, zeta, ps1, ps2,
               abs1, abs2, sel_h, sel_o, out_path, out_fate, out_exit):
    """Process len(u) messengers. ``mats`` = [ST1, SR1, SR2, path-1 op, path-2 op, ST2]."""
    for i in range(u.shape[0]):
        s_up, s_dn = apply2(mats[0], 1.0 + 0.0j, 0.0 + 0.0j)
        port, s_up, s_dn = bs_step(x[0], stored[0], 0, gamma, t, r, s_up, s_dn, u[i, _U_BS0])
        path = port + 1
        out_path[i] = path
        # SR_j then BS_j; transmitted messengers leave the interferometer
        s_up, s_dn = apply2(mats[path], s_up, s_dn)
        port, s_up, s_dn = bs_step(x[path], stored[path], 0, gamma, t, r,
                                   s_up, s_dn, u[i, _U_BS12])
        if port == 0:
            out_fate[i] = 2 if path == 1 else 3
            out_exit[i] = 1 + path
            continue
        traversed = abs1 if path == 1 else abs2
        if traversed and not absorber_passes(T1 if path == 1 else T2, u[i, _U_ABS]):
            out_fate[i] = 4
            out_exit[i] = 3 + path
            continue
        s_up, s_dn = apply2(mats[2 + path], s_up, s_dn)
        port, s_up, s_dn = bs_step(x[3], stored[3], path - 1, gamma, t, r,
                                   s_up, s_dn, u[i, _U_BS3])
        out_exit[i] = port
        if scatter_discards(traversed, path, port, ps1, ps2, u[i, _U_SCATTER]):
            out_fate[i] = 7
            continue
        if (port == 0 and sel_h) or (port == 1 and sel_o):
            s_up, s_dn = apply2(mats[5], s_up, s_dn)
            z = zeta if port == 1 else 0.0
            code = analyzer_outcome(s_up, s_dn, z, u[i, _U_ZETA], u[i, _U_SPIN])
            if code == 1:
                out_fate[i] = 6
                continue
            if code == 2:
                out_fate[i] = 5
                continue
        out_fate[i] = port


class Engine:
    """One simulator instance: four beam-splitter units and a private RNG stream.

    Strictly sequential; create one instance per run or per worker.
    """

    def __init__(self, spec: EngineRunSpec):
        self.spec = spec
        c = spec.config
        self.rng = np.random.Generator(np.random.PCG64(int(spec.seed)))
        self.x = np.full((4, 2), 0.5)
        self.stored = np.zeros((4, 2, 2), dtype=complex)
        self.stored[:, :, 0] = 1.0
        self.t, self.r = bs_amplitudes(c.R)
        p1 = ps_matrix(c.phi1) @ sr_matrix(c.theta1)
        p2 = ps_matrix(c.phi2) @ sr_matrix(c.theta2)
        self.mats = np.ascontiguousarray(np.stack(
            [st_matrix(c.alpha), sr_matrix(c.mu1), sr_matrix(c.mu2), p1, p2, st_matrix(c.beta)]))
        # an absorber with T = 1 is treated as absent
        self._abs = (c.T1 < 1.0, c.T2 < 1.0)

    def _step(self, n: int):
        c = self.spec.config
        u = self.rng.random((n, SLOTS))
        path = np.zeros(n, dtype=np.int8)
        fate = np.zeros(n, dtype=np.int8)
        exit_ = np.zeros(n, dtype=np.int8)
        _run_chunk(u, self.x, self.stored, self.mats, self.t, self.r, float(self.spec.gamma),
                   c.T1, c.T2, c.zeta, c.pscatt1, c.pscatt2, self._abs[0], self._abs[1],
                   c.postselect.h_selected, c.postselect.o_selected, path, fate, exit_)
        return path, fate, exit_

    def run(self, log: IO[str] | None = None) -> Tally:
        remaining = self.spec.warmup
        while remaining:
            n = min(remaining, _CHUNK)
            self._step(n)
            remaining -= n
        tally = Tally()
        done = 0
        if log is not None:
            log.write("index,path,fate,exit\n")
        while done < self.spec.N:
            n = min(self.spec.N - done, _CHUNK)
            path, fate, exit_ = self._step(n)
            tally = tally + Tally.from_events(path, fate)
            if log is not None:
                _write_log(log, done, path, fate, exit_)
            done += n
        return tally


def _write_log(log: IO[str], start: int, path, fate, exit_) -> None:
    names = [f.name for f in Fate]
    for k in range(len(fate)):
        log.write(f"{start + k},{path[k]},{names[fate[k]]},{EXIT_NAMES[exit_[k]]}\n")


def run(spec: EngineRunSpec, log: IO[str] | None = None) -> Tally:
    """Emit ``spec.N`` messengers one at a time (after ``spec.warmup`` untallied ones)."""
    return Engine(spec).run(log=log)
