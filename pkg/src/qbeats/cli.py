"""Command-line entry point: ``qbeats <command> [options]``.

Exit codes::

    0  success
    1  unexpected internal error
    2  usage error (bad flags)
    3  configuration error (scenario file or option values)
    4  parse error (QBTT or other malformed input)
    5  domain error
    6  no solution (e.g. balanced detuning does not exist)
    7  numerical failure
    8  fit failure
    9  alignment error (compare inputs do not line up)
    10 file-system error

On failure a single JSON line ``{"error": {...}}`` goes to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import platform
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (AlignmentError, ConfigurationError, FitError, QBeatsError)

EXIT_CODES = {"config": 3, "parse": 4, "domain": 5, "no-solution": 6, "numeric": 7, "fit": 8,
              "alignment": 9, "io": 10, "error": 1}
OUT_ENV = "QBEATS_OUT"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("usage", message)
        sys.exit(2)


def _emit_error(category, message, keys=()):
    line = {"error": {"category": category, "message": str(message)}}
    if keys:
        line["error"]["keys"] = list(keys)
    print(json.dumps(line, sort_keys=True), file=sys.stderr)


def _dump_json(obj, path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n")
    return path


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _write_csv(path, header, columns, fmt="%.10g"):
    data = np.column_stack([np.asarray(c, float) for c in columns])
    np.savetxt(path, data, delimiter=",", header=",".join(header), comments="", fmt=fmt)
    return path


class Run:
    """Output directory, scenario and manifest bookkeeping for one command."""

    def __init__(self, args):
        self.args = args
        self.out = Path(args.out or os.environ.get(OUT_ENV) or "qbeats_out")
        self.out.mkdir(parents=True, exist_ok=True)
        self.outputs = []
        self.sf = None
        if getattr(args, "scenario", None):
            from .scenario import load_scenario
            self.sf = load_scenario(args.scenario)
        self.seed = args.seed if args.seed is not None else (self.sf.run.seed if self.sf else 0)

    def need_scenario(self):
        if self.sf is None:
            raise ConfigurationError(f"command {self.args.command!r} needs --scenario", ["scenario"])
        return self.sf

    @property
    def scenario(self):
        sc = self.need_scenario().scenario
        if self.args.bin_ns is not None:
            from dataclasses import replace
            sc = replace(sc, grid=replace(sc.grid, bin_ns=self.args.bin_ns))
        return sc

    @property
    def bin_ns(self):
        if self.args.bin_ns is not None:
            return self.args.bin_ns
        return self.sf.run.bin_ns if self.sf else 2.0

    def path(self, name):
        p = self.out / name
        self.outputs.append(p)
        return p

    def manifest(self, extra=None):
        import matplotlib
        import scipy
        files = {}
        for p in self.outputs:
            if p.exists():
                files[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        m = {
            "command": self.args.command,
            "scenario": self.sf.name if self.sf else None,
            "config_hash": self.sf.config_hash if self.sf else None,
            "seed": int(self.seed),
            "versions": {"qbeats": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
                         "matplotlib": matplotlib.__version__,
                         "python": platform.python_version()},
            "outputs": files,
            "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        }
        if extra:
            m.update(extra)
        _dump_json(m, self.out / f"{self.args.command}.manifest.json")


# ---------------------------------------------------------------- commands


def cmd_beat(run: Run):
    from .amplitude import scheme
    from .fitting import BEAT, fit_beat
    from .master import simulate_histogram
    from .plotting import plot_beat

    sf = run.need_scenario()
    t, counts = simulate_histogram(run.scenario, sf.run.n_triggers, run.bin_ns)
    if run.args.poisson:
        counts = np.random.default_rng(run.seed).poisson(counts).astype(float)
    _write_csv(run.path("beat.csv"), ["t_ns", "counts"], [t, counts])
    nu = scheme(sf.scenario.scheme).larmor(sf.scenario.zeeman)
    report = {"scenario": sf.name, "larmor_mhz": nu, "bin_ns": run.bin_ns}
    try:
        res = fit_beat((t, counts), window=sf.run.fit_window_ns, background=sf.run.fit_background)
        report["fit"] = _fit_report(res, "beat", (t, counts), sf.run.fit_window_ns, run.bin_ns)
        report["nu_relative_error"] = res["nu"] / nu - 1.0
        model = BEAT.f(t, res.values)
        env = res["b"] + res["A"] * np.exp(-t / res["tau"])
    except FitError as e:
        report["fit_error"] = f"{type(e).__name__}: {e}"
        model = env = None
    _dump_json(report, run.path("beat_fit.json"))
    plot_beat(t, counts, run.path("beat.png"), model, env, title=sf.name)


def _fit_report(res, model, curve, window, bin_ns):
    from .fitting import _curve
    t, _ = _curve(curve, window)
    d = res.to_dict()
    d.update({"model": model, "bin_ns": float(bin_ns), "n_points": int(len(t)),
              "window_ns": [float(t[0]), float(t[-1])] if len(t) else None})
    return d


def cmd_sample(run: Run):
    from .tcspc import sample_clicks, write_timetags

    sf = run.need_scenario()
    n = run.args.n_triggers or sf.run.n_triggers
    stream = sample_clicks(run.scenario, n, run.seed, jitter_fwhm_ps=sf.run.jitter_fwhm_ps,
                           jobs=run.args.jobs)
    stream.header["scenario_hash"] = sf.config_hash
    stream.header["bin_hint_ns"] = run.bin_ns
    size = write_timetags(stream, run.path("clicks.qbtt"))
    _dump_json({"n_triggers": n, "n_records": len(stream), "bytes": size},
               run.path("sample.json"))


def cmd_hist(run: Run):
    from .plotting import plot_beat
    from .tcspc import build_histogram, read_timetags

    if not run.args.input:
        raise ConfigurationError("hist needs --input <clicks.qbtt>", ["input"])
    stream = read_timetags(run.args.input)
    bin_ns = run.args.bin_ns or float(stream.header.get("bin_hint_ns", 2.0))
    window = tuple(run.args.window) if run.args.window else None
    h = build_histogram(stream, bin_ns, window)
    h.to_csv(run.path("hist.csv"))
    _dump_json({"bin_width_ns": bin_ns, "total_triggers": h.total_triggers,
                "total_counts": int(h.counts.sum()), **h.metadata}, run.path("hist.json"))
    plot_beat(h.centers_ns, h.counts, run.path("hist.png"), title="click histogram")


def cmd_fit(run: Run):
    from .fitting import BEAT, EXP_DECAY, fit_beat, fit_decay
    from .plotting import plot_beat
    from .tcspc import read_histogram_csv

    if not run.args.input:
        raise ConfigurationError("fit needs --input <hist.csv>", ["input"])
    t, y = read_histogram_csv(run.args.input)
    sf = run.sf
    window = tuple(run.args.window) if run.args.window else (sf.run.fit_window_ns if sf else None)
    background = run.args.background if run.args.background is not None else (
        sf.run.fit_background if sf else None)
    bin_ns = float(np.median(np.diff(t))) if len(t) > 1 else run.bin_ns
    if run.args.model == "decay":
        res, model = fit_decay((t, y), window=window, background=background), EXP_DECAY
    else:
        res = fit_beat((t, y), nu_hint=run.args.nu_hint, window=window, background=background)
        model = BEAT
    report = _fit_report(res, run.args.model, (t, y), window, bin_ns)
    _dump_json(report, run.path("fit.json"))
    fitted = model.f(t, res.values)
    _write_csv(run.path("residuals.csv"), ["t_ns", "counts", "model", "residual"],
               [t, y, fitted, y - fitted])
    plot_beat(t, y, run.path("fit.png"), fitted, title=f"{run.args.model} fit")


def cmd_depletion(run: Run):
    from .amplitude import scheme
    from .fitting import spectral_contrast
    from .master import depletion_scan
    from .plotting import plot_depletion

    sf = run.need_scenario()
    lengths = sf.run.pulse_lengths()
    remaining = depletion_scan(run.scenario, lengths)
    _write_csv(run.path("depletion.csv"), ["pulse_ns", "d52_population"], [lengths, remaining])
    nu = scheme(sf.scenario.scheme).larmor(sf.scenario.zeeman)
    sc = spectral_contrast(lengths, remaining, nu, sf.run.shots_per_point)
    _dump_json({"larmor_mhz": nu, "peak": sc.peak, "noise_floor": sc.floor, "ratio": sc.ratio,
                "shots_per_point": sf.run.shots_per_point}, run.path("depletion.json"))
    plot_depletion(lengths, remaining, run.path("depletion.png"), title=sf.name)


def cmd_phasescan(run: Run):
    from .fitting import fit_sinusoid
    from .master import phase_scan
    from .plotting import plot_phase_scan

    sf = run.need_scenario()
    phis = sf.run.phases_rad()
    vals = phase_scan(run.scenario, phis, sf.run.phase_mode)
    deg = np.rad2deg(phis)
    _write_csv(run.path("phasescan.csv"), ["phi_deg", "value"], [deg, vals])
    report = {"mode": sf.run.phase_mode, "max": float(vals.max()), "min": float(vals.min()),
              "max_over_min": float(vals.max() / vals.min()) if vals.min() > 0 else math.inf}
    fit = None
    if len(phis) >= 4:
        res = fit_sinusoid(phis, vals)
        report["sinusoid"] = res.to_dict()
        fit = tuple(res.values)
    _dump_json(report, run.path("phasescan.json"))
    label = "detection probability" if sf.run.phase_mode == "integrated_flux" else "D5/2 population"
    plot_phase_scan(deg, vals, run.path("phasescan.png"), fit, label, sf.name)


def cmd_visibility_scan(run: Run):
    from .fitting import visibility_scan
    from .plotting import plot_visibility

    sf = run.need_scenario()
    pops = sf.run.populations or tuple(np.round(np.arange(0.45, 0.96, 0.05), 2))
    vs = visibility_scan(pops, run.scenario, jobs=run.args.jobs,
                         window=sf.run.fit_window_ns, background=sf.run.fit_background)
    _write_csv(run.path("visibility.csv"), ["population", "visibility", "sigma"],
               [vs.populations, vs.visibilities, vs.sigmas])
    _dump_json(vs.to_dict(), run.path("visibility.json"))
    plot_visibility(vs.populations, vs.visibilities, vs.sigmas, run.path("visibility.png"),
                    vs.argmax, sf.name)


def _model_from_report(report):
    from .fitting import BEAT, EXP_DECAY
    fit = report.get("fit", report)
    try:
        kind = fit["model"]
        model = {"beat": BEAT, "decay": EXP_DECAY}[kind]
        values = np.array([fit["parameters"][n] for n in model.names])
    except KeyError as e:
        raise AlignmentError(f"fit report lacks {e}") from None
    return fit, model, values


def cmd_compare(run: Run):
    from .plotting import plot_compare
    from .tcspc import read_histogram_csv

    a = run.args
    if not (a.data and a.fit):
        raise ConfigurationError("compare needs --data <csv> and --fit <json>", ["data", "fit"])
    t, y = read_histogram_csv(a.data)
    fit, model, values = _model_from_report(json.loads(Path(a.fit).read_text()))
    lo, hi = fit.get("window_ns") or (t[0], t[-1])
    sel = (t >= lo - 1e-9) & (t <= hi + 1e-9)
    n_expected = fit.get("n_points")
    if n_expected is not None and sel.sum() != n_expected:
        raise AlignmentError(f"{a.data}: {int(sel.sum())} rows in the fit window "
                             f"[{lo}, {hi}] ns, the fit used {n_expected}")
    if len(t) > 1 and "bin_ns" in fit:
        step = float(np.median(np.diff(t)))
        if abs(step - fit["bin_ns"]) > 1e-6 * max(step, 1.0):
            raise AlignmentError(f"data bin width {step} ns differs from the fit's {fit['bin_ns']} ns")
    t, y = t[sel], y[sel]
    m = model.f(t, values)
    dev = y - m
    chi2 = float(np.sum(dev ** 2 / np.maximum(m, 1.0)))
    dof = max(len(t) - len(values), 1)
    report = {"n_points": int(len(t)), "max_abs_deviation": float(np.max(np.abs(dev))),
              "chi2": chi2, "dof": dof, "chi2_per_dof": chi2 / dof}
    if a.other:
        other, _, ov = _model_from_report(json.loads(Path(a.other).read_text()))
        if "phi" not in fit["parameters"] or "phi" not in other["parameters"]:
            raise AlignmentError("phase comparison needs two beat fits")
        d = math.degrees(other["parameters"]["phi"] - fit["parameters"]["phi"]) % 360.0
        report["phase_difference_deg"] = d
    _dump_json(report, run.path("compare.json"))
    plot_compare(t, y, m, run.path("compare.png"), "model vs data")


COMMANDS = {"beat": cmd_beat, "sample": cmd_sample, "hist": cmd_hist, "fit": cmd_fit,
            "depletion": cmd_depletion, "phasescan": cmd_phasescan,
            "visibility-scan": cmd_visibility_scan, "compare": cmd_compare}


def build_parser():
    p = _Parser(prog="qbeats", description="Single-photon quantum beat simulations and fits.")
    p.add_argument("--version", action="version", version=f"qbeats {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--scenario", help="scenario TOML path or bundled scenario name")
        s.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./qbeats_out)")
        s.add_argument("--seed", type=int, help="RNG seed (overrides the scenario)")
        s.add_argument("--jobs", type=int, default=1, help="parallel workers for scans/sampling")
        s.add_argument("--bin-ns", type=float, help="histogram bin width in ns")
        if name in ("hist", "fit"):
            s.add_argument("--input", help="input file")
        if name in ("hist", "fit"):
            s.add_argument("--window", type=float, nargs=2, metavar=("START", "STOP"))
        if name == "fit":
            s.add_argument("--model", choices=("beat", "decay"), default="beat")
            s.add_argument("--background", type=float)
            s.add_argument("--nu-hint", type=float)
        if name == "beat":
            s.add_argument("--poisson", action="store_true",
                           help="draw Poisson counts instead of writing expected counts")
        if name == "sample":
            s.add_argument("--n-triggers", type=int)
        if name == "compare":
            s.add_argument("--data", help="histogram CSV (t_ns, counts)")
            s.add_argument("--fit", help="fit report JSON")
            s.add_argument("--other", help="second beat fit report for a phase comparison")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2 ** 64:
        _emit_error("config", "seed must be an unsigned 64-bit integer", ["seed"])
        return 3
    if args.jobs < 1:
        _emit_error("config", "jobs must be >= 1", ["jobs"])
        return 3
    try:
        run = Run(args)
        COMMANDS[args.command](run)
        run.manifest()
    except QBeatsError as e:
        _emit_error(e.category, e, getattr(e, "keys", ()))
        return EXIT_CODES.get(e.category, 1)
    except OSError as e:
        _emit_error("io", e)
        return EXIT_CODES["io"]
    return 0


if __name__ == "__main__":
    sys.exit(main())
