"""End-to-end acceptance checks. Each test prints one PASS/FAIL line.

Run directly (``python tests/test_acceptance.py``) for the summary alone.
"""
import math
import sys
import time

import numpy as np
import pytest
from scipy import stats

from qbeats.amplitude import LAMBDA, VSCHEME, AtomicSuperposition, response_phase_offset, scheme
from qbeats.atomic import DIPOLE_PAIRS, ZeemanConfig, cgc, sublevels
from qbeats.errors import ParseError
from qbeats.fitting import (BEAT, EXP_DECAY, calibrate_rabi, fit_beat, fit_decay,
                            residual_modulation, spectral_contrast, visibility_scan)
from qbeats.master import (Scenario, TimeGrid, depletion_scan, evolve, phase_scan,
                           simulate_histogram)
from qbeats.scenario import bundled_scenarios, load_scenario
from qbeats.tcspc import (ClickStream, build_histogram, decode_timetags, encode_timetags,
                          sample_clicks)

from test_atomic import racah_value


def _line(n, ok, detail):
    print(f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}", flush=True)
    return ok


def _scn(name):
    return load_scenario(name).scenario


def _fit(sc, window_start=150.0, **kw):
    return fit_beat(simulate_histogram(sc, 1e6, 2.0), window=(window_start, sc.grid.t_max_ns),
                    **kw)


def _dphi(a, b):
    """a - b in degrees, wrapped to [0, 360)."""
    return math.degrees((a - b) % (2 * math.pi))


def check_1():
    out, ok = [], True
    for b, det, period in ((0.987, 0.0, 301.6), (2.798, None, None)):
        t0 = time.perf_counter()
        sc = _scn("lambda_fig3").with_drive(detuning_mhz=det, rabi_mhz=0.5)
        sc = Scenario(sc.scheme, ZeemanConfig(b), sc.initial, sc.drive, geometry=sc.geometry,
                      grid=sc.grid)
        nu_pred = LAMBDA.larmor(sc.zeeman)
        nu = _fit(sc, background=0.0)["nu"]
        dt = time.perf_counter() - t0
        rel = abs(nu / nu_pred - 1)
        ok &= rel < 1e-3 and dt < 10
        if period is not None:
            ok &= abs(1e3 / nu_pred - period) < 0.05
        out.append(f"B={b} G rel.err {rel:.1e} period {1e3 / nu:.1f} ns ({dt:.1f} s)")
    return ok, "; ".join(out)


def check_2():
    worst_phi = worst_nu = 0.0
    for name, sch in (("lambda_fig3", LAMBDA), ("v_fig4b", VSCHEME)):
        base = _scn(name).with_drive(rabi_mhz=0.5)
        for phi0 in (0.0, 1.0, 2.5):
            s = base.with_phase(phi0)
            res = _fit(s, background=0.0)
            off = response_phase_offset(sch.name, s.zeeman, s.detuning_mhz)
            pred = -(phi0 + s.drive.polarization.phi854 + off) + (math.pi if sch is VSCHEME else 0)
            d = (res["phi"] - pred + math.pi) % (2 * math.pi) - math.pi
            worst_phi = max(worst_phi, abs(math.degrees(d)))
            worst_nu = max(worst_nu, abs(res["nu"] / sch.larmor(s.zeeman) - 1))
    ideal = _scn("lambda_fig3")
    v_ideal = _fit(ideal, window_start=70.0)["V"]
    v_knob = _fit(Scenario(ideal.scheme, ideal.zeeman, ideal.initial, ideal.drive,
                           geometry=ideal.geometry, grid=ideal.grid, prep_infidelity=0.05),
                  window_start=70.0)["V"]
    ok = worst_phi < 1.0 and worst_nu < 1e-3 and v_ideal >= 0.99 and v_knob < v_ideal
    return ok, (f"max phase err {worst_phi:.2f} deg, max nu err {worst_nu:.1e}, "
                f"ideal V {v_ideal:.4f}, V with 5% prep infidelity {v_knob:.3f}")


def check_3():
    t0 = time.perf_counter()
    diffs = {}
    for name in ("lambda_fig4a", "v_fig4b"):
        sc = _scn(name)
        p = _fit(sc)["phi"]
        diffs[f"{name} D/A"] = _dphi(p, _fit(sc.with_drive(polarization="A"))["phi"])
        diffs[f"{name} 0/pi"] = _dphi(p, _fit(sc.with_phase(math.pi))["phi"])
    dt = time.perf_counter() - t0
    ok = all(abs(d - 180) <= 2 for d in diffs.values()) and dt < 60
    return ok, ", ".join(f"{k} {v:.1f}" for k, v in diffs.items()) + f" deg ({dt:.1f} s)"


def check_4():
    base = _scn("lambda_fig3").with_envelope(rise_ns=300.0)
    a, b = base.initial.level_a, base.initial.level_b
    window = (400.0, base.grid.t_max_ns)

    def mixture(rabi):
        s = base.with_drive(rabi_mhz=rabi)
        runs = [simulate_histogram(Scenario("lambda", s.zeeman, AtomicSuperposition(x, y, 1.0, 0.0),
                                            s.drive, geometry=s.geometry, grid=s.grid), 1e6, 2.0)
                for x, y in ((a, b), (b, a))]
        return runs[0][0], 0.5 * (runs[0][1] + runs[1][1])

    rabi, dec = calibrate_rabi(mixture, 461.0, window=window)
    h = mixture(rabi)
    mod = residual_modulation(h, LAMBDA.larmor(base.zeeman), window=window)
    rng = np.random.default_rng(4)
    noisy = fit_decay((h[0], rng.poisson(h[1]).astype(float)), window=window)
    ok = mod < 0.01 and abs(dec["tau"] / 461.0 - 1) < 0.01 and 0.8 < noisy.chi2_red < 1.2
    return ok, (f"Rabi {rabi:.3f} MHz gives tau {dec['tau']:.1f} ns; residual modulation "
                f"{100 * mod:.2f}%; Poisson chi2/dof {noisy.chi2_red:.2f}")


def check_5():
    sf = load_scenario("v_fig5")
    t0 = time.perf_counter()
    vs = visibility_scan(sf.run.populations, sf.scenario, window=sf.run.fit_window_ns,
                         background=sf.run.fit_background)
    dt = time.perf_counter() - t0
    ok = vs.argmax is not None and abs(vs.argmax - 0.75) <= 0.02 and dt < 300
    return ok, f"argmax {vs.argmax:.3f} over {len(vs.populations)} points ({dt:.1f} s)"


def _ratio(sc, phis):
    v = phase_scan(sc, phis, "integrated_flux")
    return float(v.max() / v.min())


def check_6():
    lam, vee = load_scenario("lambda_fig7a"), load_scenario("v_fig7b")
    r_l = _ratio(lam.scenario, lam.run.phases_rad())
    r_v = _ratio(vee.scenario, vee.run.phases_rad())
    phis = np.linspace(0, 2 * math.pi, 12, endpoint=False)
    long_l = _ratio(_scn("lambda_fig4a").with_drive(rabi_mhz=6.0), phis)
    long_v = _ratio(_scn("v_fig4b").with_drive(rabi_mhz=6.0), phis)
    ok = r_l >= 5 and 2 <= r_v <= 4 and long_l < 1.1 and long_v < 1.1
    return ok, (f"short pulse: Lambda {r_l:.2f}, V {r_v:.2f}; continuous drive: "
                f"Lambda {long_l:.3f}, V {long_v:.3f}")


def check_7():
    ratios = {}
    for name in ("lambda_fig8", "v_fig9"):
        sf = load_scenario(name)
        L = sf.run.pulse_lengths()
        nu = scheme(sf.scenario.scheme).larmor(sf.scenario.zeeman)
        ratios[name] = spectral_contrast(L, depletion_scan(sf.scenario, L), nu,
                                         sf.run.shots_per_point).ratio
    amp = {}
    for name in ("lambda_fig10", "v_fig10"):
        sf = load_scenario(name)
        amp[name] = float(np.ptp(phase_scan(sf.scenario, sf.run.phases_rad(),
                                            "depletion_at_fixed_pulse")))
    rel = amp["v_fig10"] / amp["lambda_fig10"]
    ok = ratios["lambda_fig8"] >= 10 and ratios["v_fig9"] <= 2 and amp["lambda_fig10"] > 0 and rel < 0.1
    return ok, (f"FFT peak/floor Lambda {ratios['lambda_fig8']:.1f}, V {ratios['v_fig9']:.3f}; "
                f"12.5 ns pulse p-p Lambda {amp['lambda_fig10']:.4f}, V/Lambda {rel:.3f}")


def _merge(expected, observed, min_expected=10.0):
    e_out, o_out, e_acc, o_acc = [], [], 0.0, 0.0
    for e, o in zip(expected, observed):
        e_acc, o_acc = e_acc + e, o_acc + o
        if e_acc >= min_expected:
            e_out.append(e_acc)
            o_out.append(o_acc)
            e_acc = o_acc = 0.0
    e_out[-1] += e_acc
    o_out[-1] += o_acc
    return np.array(e_out), np.array(o_out)


def check_8():
    worst, n = 0.0, 0
    for lo, up in DIPOLE_PAIRS:
        for s in sublevels(lo):
            for q in (-1, 0, 1):
                M = s.m + q
                if abs(M) <= up.J:
                    worst = max(worst, abs(cgc(lo.J, s.m, q, up.J, M) - racah_value(lo.J, s.m, q, up.J, M)))
                    n += 1
    sc = _scn("lambda_fig4a").with_drive(rabi_mhz=10.0)
    sc = Scenario(sc.scheme, sc.zeeman, sc.initial, sc.drive, geometry=sc.geometry,
                  grid=TimeGrid(1000.0, 0.5, 4.0))
    n_trig = 100_000
    clicks = sample_clicks(sc, n_trig, seed=42, jitter_fwhm_ps=0.0)
    h = build_histogram(clicks, 4.0, (0, 1000))
    _, mu = simulate_histogram(sc, n_trig, 4.0)
    e, o = _merge(mu, h.counts.astype(float))
    chi2 = float(np.sum((o - e) ** 2 / e))
    p = stats.chi2.sf(chi2, len(e) - 1)
    ok = worst < 1e-12 and p > 0.01
    return ok, (f"{n} CGCs, max deviation {worst:.1e}; {n_trig} trajectories chi2 {chi2:.1f} "
                f"on {len(e) - 1} dof, p = {p:.3f}")


def check_9():
    drift = herm = 0.0
    min_eig = math.inf
    for name in bundled_scenarios():
        inv = evolve(_scn(name)).invariants()
        drift = max(drift, inv["trace_drift"])
        herm = max(herm, inv["hermiticity"])
        min_eig = min(min_eig, inv["min_eigenvalue"])
    t = np.arange(1.0, 2000.0, 2.0)
    jac_err = 0.0
    for model, p in ((EXP_DECAY, [800.0, 300.0, 4.0]), (BEAT, [1000.0, 461.0, 0.93, 9.4, 0.0, 5.0])):
        p = np.asarray(p, float)
        J = model.jac(t, p)
        for k in range(len(p)):
            dp = np.zeros_like(p)
            dp[k] = 1e-6 * max(abs(p[k]), 1.0)
            fd = (model.f(t, p + dp) - model.f(t, p - dp)) / (2 * dp[k])
            jac_err = max(jac_err, np.max(np.abs(J[:, k] - fd)) / np.max(np.abs(fd)))
    ok = drift < 1e-9 and herm < 1e-9 and min_eig > -1e-9 and jac_err < 1e-6
    return ok, (f"{len(bundled_scenarios())} scenarios: trace drift {drift:.1e}, min eigenvalue "
                f"{min_eig:.1e}; Jacobian rel. err {jac_err:.1e}")


def check_10():
    rng = np.random.default_rng(0)
    n = 1_000_000
    trig = np.sort(rng.integers(0, n // 3, n)).astype(np.uint64)
    ts = rng.integers(0, 3_000_000, n).astype(np.uint64)
    ts[rng.random(n) < 0.001] += np.uint64(2 ** 33)
    order = np.lexsort((ts, trig))
    s = ClickStream(trig[order], (rng.random(n) < 0.1).astype(np.uint8)[order], ts[order],
                    {"n_triggers": n // 3})
    data = encode_timetags(s)
    identical = encode_timetags(decode_timetags(data)) == data
    base = 10 + int.from_bytes(data[6:10], "little")
    probes = {0: lambda b: b.__setitem__(slice(0, 4), b"XXXX"),
              base + 5 * 16 + 8: lambda b: b.__setitem__(base + 5 * 16 + 8, 9)}
    offsets_ok = True
    for expected, corrupt in probes.items():
        bad = bytearray(data[:base + 4096])
        corrupt(bad)
        try:
            decode_timetags(bytes(bad))
            offsets_ok = False
        except ParseError as e:
            offsets_ok &= e.offset == expected
    cut = data[:-3]
    expected = base + (len(cut) - base) // 16 * 16
    try:
        decode_timetags(cut)
        offsets_ok = False
    except ParseError as e:
        offsets_ok &= e.offset == expected
    return identical and offsets_ok, (f"{n} records ({len(data)} bytes) byte-identical: "
                                      f"{identical}; corruption offsets exact: {offsets_ok}")


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9, check_10]


@pytest.mark.parametrize("n", range(1, 11))
def test_criterion(n, capsys):
    ok, detail = CHECKS[n - 1]()
    with capsys.disabled():
        print()
        _line(n, ok, detail)
    assert ok, detail


if __name__ == "__main__":
    results = [_line(i + 1, *c()) for i, c in enumerate(CHECKS)]
    sys.exit(0 if all(results) else 1)
