"""Command-line front end.

Exit codes: 0 success, 2 validation or input error, 3 comparison failure.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from collections import defaultdict
from pathlib import Path
from typing import Sequence

import numpy as np

from . import __version__
from .calibration import (estimate_R_empty, estimate_R_postselected, fit_fringe, fit_fringe_cos,
                          quality_factor_prediction)
from .des.engine import RNG_ID
from .errors import CheshireError, ConfigError
from .harness.compare import ComparisonReport, add_means, cell_key, compare_cells
from .harness.sweeps import (BEAMS, Normalization, SweepSpec, des_sweep, normalize, oracle_sweep,
                             scenarios_from_names)
from .harness.tables import emit_series, ingest_series, read_table, value_column, write_table
from .model import CONFIG_FIELDS, DEFAULT_R, Postselect
from .weak import weak_values_H, weak_values_O

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_COMPARISON = 3

OUT_ENV = "CHESHIRE_OUT"
_ANGLE_KEYS = {"alpha", "beta", "mu1", "mu2", "theta1", "theta2"}

# engine presets: the standard run, absorber scattering on both paths or on path 2 only,
# and a long high-gamma run for convergence checks
PRESETS = {
    "standard": dict(gamma=0.65, N=72000, R=0.22, zeta=0.7, pscatt1=0.0, pscatt2=0.0),
    "scatter-both": dict(gamma=0.65, N=72000, R=0.22, zeta=0.7, pscatt1=0.4, pscatt2=0.4),
    "scatter-path2": dict(gamma=0.65, N=72000, R=0.22, zeta=0.7, pscatt1=0.0, pscatt2=0.4),
    "convergence": dict(gamma=0.99, N=1_000_000, R=0.22, zeta=0.0, pscatt1=0.0, pscatt2=0.0),
}


class UsageError(CheshireError):
    pass


# --- argument helpers -----------------------------------------------------------

def _parse_overrides(items: Sequence[str] | None) -> dict:
    out = {}
    for item in items or ():
        key, sep, val = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise UsageError(f"--set expects key=value, got {item!r}")
        if key not in CONFIG_FIELDS:
            raise ConfigError(f"unknown configuration key {key!r}")
        if key == "postselect":
            out[key] = Postselect.parse(val)
            continue
        try:
            num = float(val)
        except ValueError:
            raise UsageError(f"--set {key}: {val!r} is not a number") from None
        out[key] = math.radians(num) if key in _ANGLE_KEYS else num
    return out


def _out_dir(args) -> Path:
    d = Path(args.out or os.environ.get(OUT_ENV) or "cheshire-out")
    d.mkdir(parents=True, exist_ok=True)
    return d


def _add_sweep_args(p: argparse.ArgumentParser, des: bool) -> None:
    p.add_argument("--scenario", action="append", metavar="NAME",
                   help="scenario preset (repeatable; default: the six canonical presets)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE",
                   help="override a configuration field for every scenario; angles in degrees")
    p.add_argument("--chi-start", type=float, default=0.0, help="degrees (default 0)")
    p.add_argument("--chi-stop", type=float, default=360.0, help="degrees, exclusive (default 360)")
    p.add_argument("--chi-step", type=float, default=45.0, help="degrees (default 45)")
    p.add_argument("--postselect", choices=["none", "O-only", "H-only", "both"],
                   help="relocate the spin analysis (EMPTY never has one)")
    p.add_argument("--normalization", default="raw",
                   choices=[n.value for n in Normalization])
    p.add_argument("--R", type=float, default=None, help=f"reflectivity (default {DEFAULT_R})")
    p.add_argument("--zeta", type=float, default=None, help="O-beam analyzer loss")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./cheshire-out)")
    p.add_argument("--no-timestamp", action="store_true",
                   help="omit the creation-time metadata line (byte-identical reruns)")
    if des:
        p.add_argument("--preset", choices=sorted(PRESETS), default="standard")
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--N", type=int, default=None, help="messengers per chi point")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--no-warmup", action="store_true", help="tally from the first messenger")
        p.add_argument("--pscatt1", type=float, default=None)
        p.add_argument("--pscatt2", type=float, default=None)
        p.add_argument("--jobs", type=int, default=1, help="parallel engine processes")


def _sweep_spec(args, des: bool) -> SweepSpec:
    base = dict(PRESETS[args.preset]) if des else dict(R=DEFAULT_R, zeta=0.0)
    for key in ("R", "zeta", "gamma", "N", "pscatt1", "pscatt2"):
        val = getattr(args, key, None)
        if val is not None:
            base[key] = val
    kw = dict(
        scenarios=scenarios_from_names(args.scenario, _parse_overrides(args.set)),
        chi_start=args.chi_start, chi_stop=args.chi_stop, chi_step=args.chi_step,
        postselect=args.postselect, normalization=args.normalization,
        R=base["R"], zeta=base["zeta"],
    )
    if des:
        kw.update(gamma=base["gamma"], N=base["N"], seed=args.seed, warmup=not args.no_warmup,
                  pscatt1=base["pscatt1"], pscatt2=base["pscatt2"], jobs=args.jobs)
    return SweepSpec(**kw)


def _meta(kind: str, spec: SweepSpec, scenario, config, beam: str | None, stamp: bool) -> dict:
    meta = {"tool": f"cheshire {__version__}", "numpy": np.__version__, "kind": kind,
            "scenario": scenario.label}
    if scenario.overrides:
        meta["overrides"] = json.dumps({k: (v.value if isinstance(v, Postselect) else v)
                                        for k, v in scenario.overrides.items()}, sort_keys=True)
    if beam:
        meta["beam"] = beam
    meta.update(postselect=config.postselect.value, normalization=spec.normalization.value,
                R=repr(config.R), zeta=repr(config.zeta), pscatt1=repr(config.pscatt1),
                pscatt2=repr(config.pscatt2))
    if kind == "des":
        import numba
        meta.update(numba=numba.__version__, rng=RNG_ID, seed=spec.seed, gamma=repr(spec.gamma),
                    N=spec.N, warmup="on" if spec.warmup else "off")
    if stamp:
        meta["created"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return meta


def _tag(config) -> str:
    return config.postselect.value


# --- subcommands ----------------------------------------------------------------

def cmd_oracle_sweep(args) -> int:
    spec = _sweep_spec(args, des=False)
    out = _out_dir(args)
    groups = defaultdict(list)
    for pt in oracle_sweep(spec):
        groups[(pt.scenario, pt.beam)].append(pt)
    written = []
    for (scen, beam), pts in groups.items():
        config = spec.config(scen, pts[0].chi)
        path = out / f"oracle_{scen.label}_{beam}_{_tag(config)}.csv"
        write_table(path, ["chi_deg", "chi_rad", "probability", "normalized"],
                    [[p.chi_deg, p.chi, p.probability, p.normalized] for p in pts],
                    _meta("oracle", spec, scen, config, beam, not args.no_timestamp))
        written.append(path)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_des_sweep(args) -> int:
    spec = _sweep_spec(args, des=True)
    out = _out_dir(args)
    cells = des_sweep(spec) if spec.N > 0 else []
    written = []
    for scen in spec.scenarios:
        config = spec.config(scen, 0.0)
        mine = [c for c in cells if c.scenario is scen]
        tag = _tag(config)
        for b, beam in enumerate(BEAMS):
            rows = []
            for c in mine:
                h1, h2 = c.tally.counts[b]
                n = h1 + h2
                freq = n / spec.N
                rows.append([c.chi_deg, c.chi, n, h1, h2, spec.N, freq,
                             normalize(spec, scen, c.chi, beam, freq)])
            path = out / f"des_{scen.label}_{beam}_{tag}.csv"
            write_table(path, ["chi_deg", "chi_rad", "counts", "path1", "path2", "N",
                               "frequency", "normalized"], rows,
                        _meta("des", spec, scen, config, beam, not args.no_timestamp))
            written.append(path)
        keys = list(mine[0].tally.as_dict()) if mine else []
        path = out / f"des_{scen.label}_{tag}_tally.csv"
        write_table(path, ["chi_deg", "chi_rad", "seed"] + keys,
                    [[c.chi_deg, c.chi, c.seed] + list(c.tally.as_dict().values()) for c in mine],
                    _meta("des", spec, scen, config, None, not args.no_timestamp))
        written.append(path)
    for p in written:
        print(p)
    return EXIT_OK


def cmd_ingest(args) -> int:
    series = ingest_series(args.file, value=args.value, beam=args.beam, scenario=args.scenario)
    label = series.scenario.label if series.scenario else "-"
    weighted = "weighted" if series.sigma is not None else "unweighted"
    print(f"{args.file}: {len(series)} points, beam {series.beam}, scenario {label}, {weighted}")
    if args.emit:
        emit_series(args.emit, series)
        print(args.emit)
    return EXIT_OK


def _file_meta(table, path) -> tuple[str, str]:
    try:
        return table.meta["scenario"], table.meta["beam"].upper()
    except KeyError as e:
        raise UsageError(f"{path}: metadata line '# {e.args[0]}: ...' is required") from None


def cmd_compare(args) -> int:
    des_counts, des_vals, des_meta = {}, [], {}
    for path in args.des:
        t = read_table(path, required=("chi_deg", "counts", "N"))
        scen, beam = _file_meta(t, path)
        des_meta[(scen, beam)] = {k: t.meta.get(k) for k in ("postselect", "R", "zeta")}
        for d, n, N in zip(t.column("chi_deg"), t.column("counts"), t.column("N")):
            des_counts[cell_key(scen, beam, d)] = (int(n), int(N))
            des_vals.append((scen, beam, n))
    report = ComparisonReport(threshold=args.sigma)
    if args.oracle:
        probs = {}
        for path in args.oracle:
            t = read_table(path, required=("chi_deg", "probability"))
            scen, beam = _file_meta(t, path)
            mine = {k: t.meta.get(k) for k in ("postselect", "R", "zeta")}
            if (scen, beam) in des_meta and des_meta[(scen, beam)] != mine:
                raise UsageError(f"{path}: settings {mine} differ from the engine run "
                                 f"{des_meta[(scen, beam)]}")
            for d, p in zip(t.column("chi_deg"), t.column("probability")):
                probs[cell_key(scen, beam, d)] = p
        report = compare_cells(des_counts, probs, args.sigma)
        add_means(report, "oracle", [(k[0], k[1], p) for k, p in probs.items()])
    add_means(report, "des", des_vals)
    for path in args.exp or ():
        t = read_table(path, required=("chi_deg",))
        scen, beam = _file_meta(t, path)
        add_means(report, "experiment", [(scen, beam, v) for v in t.column(value_column(t))])
    print(report.summary())
    for source in ("des", "experiment", "oracle"):
        ratios = report.mean_ratios(source)
        if ratios:
            text = ", ".join(f"{s}/{b} {r:.4f}" for (s, b), r in sorted(ratios.items()))
            print(f"{source} means relative to REF: {text}")
    if args.report:
        write_table(args.report, ["scenario", "beam", "chi_deg", "probability", "frequency",
                                  "N", "sigma", "z"],
                    [[c.scenario, c.beam, c.chi_deg, c.probability, c.frequency, c.N,
                      c.sigma, c.z] for c in report.cells])
    if args.oracle and not report.passed(args.max_outliers):
        return EXIT_COMPARISON
    return EXIT_OK


def cmd_weak(args) -> int:
    f = weak_values_O if args.beam == "O" else weak_values_H
    th1, th2 = math.radians(args.theta1), math.radians(args.theta2)
    rep = f(math.radians(args.chi), th1, th2, args.T1, args.T2, args.R)
    grid = np.arange(-180.0, 180.0, args.sweep_step)
    sweep = [(float(d), f(math.radians(d), th1, th2, args.T1, args.T2, args.R).sz_pi1_sq)
             for d in grid]
    if args.json:
        d = rep.as_dict()
        d["chi_sweep_deg"] = [{"chi_deg": c, "sz_pi1_sq": v} for c, v in sweep]
        print(json.dumps(d, indent=2))
        return EXIT_OK
    flags = rep.pathological
    print(f"beam {rep.beam}  chi={args.chi:g} deg  theta1={args.theta1:g} deg  "
          f"theta2={args.theta2:g} deg  T1={args.T1:g}  T2={args.T2:g}  R={args.R:g}")
    for name, label in (("pi1_w", "<Pi_1>_w"), ("pi2_w", "<Pi_2>_w"),
                        ("sz_pi1_sq", "|<sigma_z Pi_1>_w|^2"), ("sz_pi2_sq", "|<sigma_z Pi_2>_w|^2")):
        mark = "  PATHOLOGICAL" if flags[name] else ""
        print(f"  {label:<22} {getattr(rep, name):+.6f}{mark}")
    print("chi sweep of |<sigma_z Pi_1>_w|^2:")
    for c, v in sweep:
        print(f"  {c:8.2f} {v:+.6f}")
    return EXIT_OK


def cmd_fit(args) -> int:
    series = ingest_series(args.file, value=args.value)
    if args.unweighted and series.sigma is not None:
        series = type(series)(series.chi, series.values, None, series.beam, series.scenario)
    res = fit_fringe(series) if args.model == "sin" else fit_fringe_cos(series)
    out = {"model": args.model, "b": res.b, "v": res.v, "stderr_b": res.stderr_b,
           "stderr_v": res.stderr_v, "residual_rms": res.residual_rms, "flagged": res.flagged}
    if args.model == "cos":
        out["phase_deg"] = math.degrees(res.phase)
    if args.json:
        print(json.dumps(out, indent=2))
    else:
        for k, v in out.items():
            print(f"{k}: {v}")
    return EXIT_OK


def cmd_estimate_r(args) -> int:
    if args.ratio is not None:
        a = args.ratio
    elif args.counts is not None:
        h, o = args.counts
        if o <= 0:
            raise UsageError("O-beam value must be positive")
        a = h / o
    else:
        raise UsageError("give --ratio or --counts H O")
    lo, hi = (estimate_R_empty if args.mode == "empty" else estimate_R_postselected)(a)
    print(f"a = {a:.6g}  R roots: {lo:.6f} {hi:.6f}")
    if args.v_o is not None:
        for R in (lo, hi):
            if 0.0 < R < 1.0:
                print(f"  R={R:.4f}: expected v_H = {quality_factor_prediction(R, args.v_o):.4f}")
    return EXIT_OK


# --- entry point ----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cheshire",
                                     description="Neutron Cheshire-cat interferometer: "
                                                 "quantum theory, event-based simulation, analysis")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("oracle-sweep", help="quantum-theory probabilities over a chi grid")
    _add_sweep_args(p, des=False)
    p.set_defaults(func=cmd_oracle_sweep)

    p = sub.add_parser("des-sweep", help="event-based simulation over a chi grid")
    _add_sweep_args(p, des=True)
    p.set_defaults(func=cmd_des_sweep)

    p = sub.add_parser("ingest", help="validate a fringe data file")
    p.add_argument("file")
    p.add_argument("--value", help="value column (default: counts/probability/frequency/value)")
    p.add_argument("--beam", choices=["H", "O"])
    p.add_argument("--scenario")
    p.add_argument("--emit", metavar="PATH", help="write the validated series in canonical form")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("compare", help="z-scores of engine counts against oracle probabilities")
    p.add_argument("--des", nargs="+", required=True, metavar="FILE")
    p.add_argument("--oracle", nargs="+", metavar="FILE")
    p.add_argument("--exp", nargs="+", metavar="FILE", help="experimental fringe files")
    p.add_argument("--sigma", type=float, default=3.0, help="z threshold (default 3)")
    p.add_argument("--max-outliers", type=int, default=0,
                   help="cells allowed beyond the threshold before exit code 3")
    p.add_argument("--report", metavar="PATH", help="write the per-cell z table")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("weak", help="weak values from intensity ratios")
    p.add_argument("--chi", type=float, default=0.0, help="degrees")
    p.add_argument("--theta1", type=float, default=20.0, help="degrees")
    p.add_argument("--theta2", type=float, default=20.0, help="degrees")
    p.add_argument("--T1", type=float, default=0.79)
    p.add_argument("--T2", type=float, default=0.79)
    p.add_argument("--R", type=float, default=DEFAULT_R)
    p.add_argument("--beam", choices=["O", "H"], default="O")
    p.add_argument("--sweep-step", type=float, default=30.0, help="degrees")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_weak)

    p = sub.add_parser("fit", help="fit b[1 + v sin chi] (or the cosine variant) to a file")
    p.add_argument("file")
    p.add_argument("--model", choices=["sin", "cos"], default="sin")
    p.add_argument("--value")
    p.add_argument("--unweighted", action="store_true", help="ignore a sigma column")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("estimate-r", help="beam-splitter reflectivity from an H/O ratio")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--ratio", type=float)
    g.add_argument("--counts", type=float, nargs=2, metavar=("H", "O"))
    p.add_argument("--mode", choices=["empty", "postselected"], default="empty")
    p.add_argument("--v-o", type=float, help="measured O-beam visibility for the v_H prediction")
    p.set_defaults(func=cmd_estimate_r)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "weak" and args.sweep_step <= 0:
        parser.error("--sweep-step must be positive")
    try:
        return args.func(args)
    except (CheshireError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
