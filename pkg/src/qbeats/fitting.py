"""Least-squares fits of arrival-time histograms and phase scans.

The optimizer is a small Levenberg-Marquardt loop with analytic Jacobians,
Poisson weights ``1/max(y, 1)`` and box bounds handled by projection.
Uncertainties come from the linearized covariance scaled by the reduced
chi-square.  Times are in ns and frequencies in MHz throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConditioningError, DegenerateDataError, FitError, NoBeatError,
                     NoSolutionError, RankDeficiencyError)

TWO_PI_MHZ = 2e-3 * math.pi


@dataclass
class Model:
    """A parametric curve y = f(t, p) with its Jacobian df/dp of shape (n, k)."""

    names: tuple
    f: callable
    jac: callable


def _exp_decay(t, p):
    A, tau, b = p
    return b + A * np.exp(-t / tau)


def _exp_decay_jac(t, p):
    A, tau, b = p
    e = np.exp(-t / tau)
    return np.column_stack([e, A * t / tau ** 2 * e, np.ones_like(t)])


def _beat(t, p):
    A, tau, V, nu, phi, b = p
    return b + A * np.exp(-t / tau) * (1 + V * np.cos(TWO_PI_MHZ * nu * t + phi))


def _beat_jac(t, p):
    A, tau, V, nu, phi, b = p
    e = np.exp(-t / tau)
    arg = TWO_PI_MHZ * nu * t + phi
    c, s = np.cos(arg), np.sin(arg)
    mod = 1 + V * c
    return np.column_stack([
        e * mod,
        A * t / tau ** 2 * e * mod,
        A * e * c,
        -A * e * V * s * TWO_PI_MHZ * t,
        -A * e * V * s,
        np.ones_like(t),
    ])


EXP_DECAY = Model(("A", "tau", "b"), _exp_decay, _exp_decay_jac)
BEAT = Model(("A", "tau", "V", "nu", "phi", "b"), _beat, _beat_jac)


@dataclass
class FitResult:
    names: tuple
    values: np.ndarray
    sigmas: np.ndarray
    chi2_red: float
    converged: bool
    iterations: int
    dof: int = 0
    covariance: np.ndarray | None = None
    extra: dict = field(default_factory=dict)

    def __getitem__(self, name):
        return float(self.values[self.names.index(name)])

    def sigma(self, name):
        return float(self.sigmas[self.names.index(name)])

    def to_dict(self):
        return {
            "parameters": {n: float(v) for n, v in zip(self.names, self.values)},
            "sigmas": {n: float(s) for n, s in zip(self.names, self.sigmas)},
            "chi2_red": float(self.chi2_red),
            "dof": int(self.dof),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            **{k: v for k, v in self.extra.items()},
        }


def poisson_weights(y):
    return 1.0 / np.maximum(np.asarray(y, float), 1.0)


def _lm(model, t, y, p, w, free, lo, hi, max_iter, ftol, gtol):
    """Levenberg-Marquardt with fixed weights; returns (p, cost, converged, iterations)."""
    sw = np.sqrt(w)

    def resid(pp):
        return sw * (y - model.f(t, pp))

    r = resid(p)
    cost = float(r @ r)
    lam = 1e-3
    scale0 = float((sw * y) @ (sw * y)) or 1.0
    for it in range(1, max_iter + 1):
        J = (sw[:, None] * model.jac(t, p))[:, free]
        g = J.T @ r
        if cost <= 1e-28 * scale0:
            return p, cost, True, it - 1
        cn = np.linalg.norm(J, axis=0)
        cos = np.abs(g) / np.where(cn > 0, cn, 1.0) / math.sqrt(cost)
        if np.max(cos) < gtol:
            return p, cost, True, it - 1
        JTJ = J.T @ J
        diag = np.diag(JTJ).copy()
        diag[diag == 0] = 1.0
        accepted = False
        for _ in range(60):
            try:
                step = np.linalg.solve(JTJ + lam * np.diag(diag), g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            trial = p.copy()
            trial[free] += step
            trial = np.clip(trial, lo, hi)
            rt = resid(trial)
            ct = float(rt @ rt)
            if np.isfinite(ct) and ct <= cost:
                accepted = True
                break
            lam *= 10
        if not accepted:
            return p, cost, True, it  # no descent direction left at machine precision
        rel = (cost - ct) / max(cost, 1e-300)
        p, r, cost = trial, rt, ct
        lam = max(lam / 10, 1e-12)
        if rel < ftol:
            return p, cost, True, it
    return p, cost, False, max_iter


def least_squares(model: Model, t, y, p0, bounds=None, weights="poisson", fixed=(),
                  max_iter: int = 200, ftol: float = 1e-10, gtol: float = 1e-8,
                  max_reweight: int = 30) -> FitResult:
    """Levenberg-Marquardt minimization of sum w (y - f)^2.

    Converges when an accepted step changes the cost by less than ``ftol``
    relative, or when the largest cosine between the residual and a Jacobian
    column is below ``gtol``.  Hitting ``max_iter`` returns with
    ``converged=False``.  ``fixed`` lists parameter names held at p0.

    With ``weights="poisson"`` the weights are ``1/max(mu, 1)`` for the
    model prediction ``mu``, refreshed after each solve (starting from the
    data) until they settle.  The fixed point solves the Poisson likelihood
    equations, so low-count bins do not bias the estimates.
    """
    t = np.asarray(t, float)
    y = np.asarray(y, float)
    p = np.array(p0, float)
    k = len(model.names)
    if p.shape != (k,) or not np.all(np.isfinite(p)):
        raise FitError(f"initial guess must be {k} finite values")
    free = np.array([n not in fixed for n in model.names])
    nfree = int(free.sum())
    if len(t) < nfree:
        raise FitError(f"{len(t)} data points for {nfree} free parameters")
    lo, hi = (np.full(k, -np.inf), np.full(k, np.inf)) if bounds is None else \
        (np.asarray(bounds[0], float), np.asarray(bounds[1], float))
    if np.any(p < lo) or np.any(p > hi):
        raise FitError("initial guess outside bounds")
    adaptive = isinstance(weights, str) and weights == "poisson"
    if isinstance(weights, str):
        w = poisson_weights(y) if adaptive else np.ones_like(y)
    else:
        w = np.asarray(weights, float)
    total_it = 0
    for _ in range(max_reweight if adaptive else 1):
        p, cost, converged, it = _lm(model, t, y, p, w, free, lo, hi, max_iter, ftol, gtol)
        total_it += it
        if not adaptive:
            break
        w_new = poisson_weights(model.f(t, p))
        settled = np.max(np.abs(w_new - w) / w) < 1e-9
        w = w_new
        if settled:
            break
    else:
        if adaptive:
            converged = False
    sw = np.sqrt(w)
    r = sw * (y - model.f(t, p))
    cost = float(r @ r)
    J = (sw[:, None] * model.jac(t, p))[:, free]
    cn = np.linalg.norm(J, axis=0)
    if np.any(cn == 0):
        raise RankDeficiencyError("a free parameter does not affect the model")
    s = np.linalg.svd(J / cn, compute_uv=False)
    cond = (s[0] / max(s[-1], 1e-300)) ** 2
    if cond > 1e13:
        raise RankDeficiencyError(f"singular normal equations (condition number {cond:.3g})")
    dof = max(len(t) - nfree, 1)
    chi2_red = cost / dof
    cov_free = np.linalg.inv(J.T @ J) * max(chi2_red, 0.0)
    cov = np.zeros((k, k))
    cov[np.ix_(free, free)] = cov_free
    sig = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    return FitResult(model.names, p, sig, chi2_red, converged, total_it, dof, cov)


# ----------------------------------------------------------------- data access


def _curve(h, window=None):
    """(t_centers, counts) from a Histogram, a (t, y) pair, or a dict with those keys."""
    if isinstance(h, tuple) and len(h) == 2:
        t, y = (np.asarray(a, float) for a in h)
    elif hasattr(h, "centers_ns"):
        t, y = np.asarray(h.centers_ns, float), np.asarray(h.counts, float)
    else:
        raise FitError(f"cannot read a curve from {type(h).__name__}")
    if window is not None:
        sel = (t >= window[0]) & (t <= window[1])
        t, y = t[sel], y[sel]
    return t, y


def fit_decay(h, window=None, tau_guess=None, background=None) -> FitResult:
    """b + A exp(-t/tau) over the wave-packet window.

    A known ``background`` is held fixed instead of fitted.
    """
    t, y = _curve(h, window)
    if y.size == 0 or not np.any(y):
        raise DegenerateDataError("histogram is empty or all zero")
    n = len(y)
    b0 = float(np.mean(y[-max(n // 10, 1):])) if background is None else float(background)
    fixed = () if background is None else ("b",)
    z = y - b0
    head = z[: max(n // 3, 2)]
    pos = head > 0
    if tau_guess is None:
        if pos.sum() >= 2:
            slope = np.polyfit(t[: len(head)][pos], np.log(head[pos]), 1)[0]
            tau_guess = -1.0 / slope if slope < 0 else (t[-1] - t[0])
        else:
            tau_guess = (t[-1] - t[0]) / 3
    tau_guess = float(np.clip(tau_guess, 1e-3, 1e7))
    A0 = float(max(z[0] * math.exp(t[0] / tau_guess), 1e-12)) if z[0] > 0 else float(np.max(z) + 1e-12)
    p0 = [A0, tau_guess, b0]
    bounds = ([-np.inf, 1e-3, -np.inf], [np.inf, 1e7, np.inf])
    try:
        return least_squares(EXP_DECAY, t, y, p0, bounds, fixed=fixed)
    except RankDeficiencyError:
        # no decaying component to pin tau on; hold it at the guess
        res = least_squares(EXP_DECAY, t, y, p0, bounds, fixed=fixed + ("tau",))
        res.extra["tau_fixed"] = True
        return res


def _wrap_near(phi, ref):
    return ref + (phi - ref + math.pi) % (2 * math.pi) - math.pi


def dominant_frequency(t, resid, nu_min=0.0):
    """Peak frequency (MHz) of a uniformly sampled signal and its peak-to-floor ratio."""
    dt = float(np.median(np.diff(t)))
    n = len(resid)
    nfft = 1 << max(int(math.ceil(math.log2(n))) + 2, 4)
    power = np.abs(np.fft.rfft((resid - resid.mean()) * np.hanning(n), nfft))
    freqs = np.fft.rfftfreq(nfft, dt) * 1e3
    sel = freqs > max(nu_min, 1.5e3 / (t[-1] - t[0]))
    if sel.sum() < 3:
        return None, 0.0
    s, f = power[sel], freqs[sel]
    i = int(np.argmax(s))
    floor = float(np.median(s)) or 1e-300
    nu = f[i]
    if 0 < i < len(s) - 1:
        a, b, c = s[i - 1], s[i], s[i + 1]
        den = a - 2 * b + c
        if den != 0:
            nu = f[i] + 0.5 * (a - c) / den * (f[1] - f[0])
    return float(nu), float(s[i] / floor)


def _period_average(t, y, nu):
    """Boxcar average over one beat period; returns (t_mid, mean) on the valid range."""
    dt = float(np.median(np.diff(t)))
    n = int(round(1e3 / (nu * dt)))
    if n < 2 or n >= len(y) // 2:
        return t, y
    k = np.ones(n) / n
    return np.convolve(t, k, "valid"), np.convolve(y, k, "valid")


def fit_beat(h, nu_hint=None, window=None, phi_guess=None, background=None,
             min_peak_ratio=5.0) -> FitResult:
    """Full BeatModel fit; visibility and phase come with 1-sigma uncertainties.

    The frequency is seeded from the spectral peak of the detrended data
    unless ``nu_hint`` is given; the envelope seed comes from a decay fit to
    the period-averaged curve.  The phase is reported on the branch nearest
    ``phi_guess`` (default: the linear estimate at the seeded frequency).
    With a wave packet much longer than the window the background and the
    amplitude are nearly degenerate; pass a known ``background`` to fix it.
    """
    t, y = _curve(h, window)
    if y.size == 0 or not np.any(y):
        raise DegenerateDataError("histogram is empty or all zero")
    if nu_hint is None:
        try:
            trend = EXP_DECAY.f(t, fit_decay((t, y), background=background).values)
        except FitError:
            x = (t - t.mean()) / max(np.ptp(t), 1e-300)
            trend = np.polyval(np.polyfit(x, y, 3), x)
        nu0, ratio = dominant_frequency(t, y - trend)
        if nu0 is None or ratio < min_peak_ratio:
            raise NoBeatError(f"no spectral peak above noise (peak/floor = {ratio:.2f}); "
                              "supply nu_hint")
    else:
        nu0 = float(nu_hint)
    dec = fit_decay(_period_average(t, y, nu0), background=background)
    A0, tau0, b0 = dec.values
    env = A0 * np.exp(-t / tau0)
    arg = TWO_PI_MHZ * nu0 * t
    X = np.column_stack([env * np.cos(arg), env * np.sin(arg)])
    coef, *_ = np.linalg.lstsq(X, y - b0 - env, rcond=None)
    V0 = float(np.clip(np.hypot(*coef), 1e-3, 1.0))
    phi0 = float(math.atan2(-coef[1], coef[0]))
    if A0 < 0:
        phi0 += math.pi
    p0 = [abs(A0), tau0, V0, nu0, phi0, b0]
    bounds = ([0.0, 1e-3, 0.0, 0.0, -np.inf, -np.inf], [np.inf, 1e7, 1.0, np.inf, np.inf, np.inf])
    res = least_squares(BEAT, t, y, p0, bounds, fixed=() if background is None else ("b",))
    ref = phi0 if phi_guess is None else phi_guess
    res.values[4] = _wrap_near(res.values[4], ref)
    res.extra["nu_seed"] = nu0
    return res


def fit_sinusoid(x, y, sigma=None) -> FitResult:
    """y = offset + amplitude cos(x + phase), solved as a linear problem."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    if len(x) < 4:
        raise FitError("need at least 4 phase points")
    X = np.column_stack([np.ones_like(x), np.cos(x), np.sin(x)])
    s = np.linalg.svd(X, compute_uv=False)
    if s[-1] < 1e-8 * s[0]:
        raise ConditioningError(f"phase points do not constrain a sinusoid "
                                f"(condition number {s[0] / max(s[-1], 1e-300):.3g})")
    w = np.ones_like(y) if sigma is None else 1.0 / np.asarray(sigma, float) ** 2
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(X * sw[:, None], y * sw, rcond=None)
    r = (y - X @ coef) * sw
    dof = max(len(x) - 3, 1)
    chi2 = float(r @ r) / dof
    cov_lin = np.linalg.inv((X * w[:, None]).T @ X)
    cov_lin = cov_lin * (chi2 if sigma is None else 1.0)
    o, a, b = coef
    amp = math.hypot(a, b)
    phase = math.atan2(-b, a)
    # propagate (o, a, b) -> (o, amp, phase)
    Jp = np.zeros((3, 3))
    Jp[0, 0] = 1.0
    if amp > 0:
        Jp[1, 1:] = [a / amp, b / amp]
        Jp[2, 1:] = [b / amp ** 2, -a / amp ** 2]
    cov = Jp @ cov_lin @ Jp.T
    sig = np.sqrt(np.clip(np.diag(cov), 0, None))
    vis = amp / o if o else float("nan")
    ratio = (1 + vis) / (1 - vis) if vis < 1 else float("inf")
    return FitResult(("offset", "amplitude", "phase"), np.array([o, amp, phase]), sig, chi2,
                     True, 0, dof, cov, {"visibility": vis, "ratio": ratio})


@dataclass
class VisibilityScan:
    populations: np.ndarray
    visibilities: np.ndarray
    sigmas: np.ndarray
    errors: dict
    argmax: float | None

    def to_dict(self):
        return {"populations": self.populations.tolist(),
                "visibilities": self.visibilities.tolist(),
                "sigmas": self.sigmas.tolist(), "argmax": self.argmax,
                "errors": {str(k): v for k, v in self.errors.items()}}


def _parabolic_argmax(x, y):
    ok = np.isfinite(y)
    x, y = x[ok], y[ok]
    if len(x) < 3:
        return float(x[np.argmax(y)]) if len(x) else None
    i = int(np.argmax(y))
    i = min(max(i, 1), len(x) - 2)
    c = np.polyfit(x[i - 1:i + 2], y[i - 1:i + 2], 2)
    if c[0] >= 0:
        return float(x[int(np.argmax(y))])
    return float(np.clip(-c[1] / (2 * c[0]), x[i - 1], x[i + 1]))


def visibility_scan(populations, template, simulate=None, jobs: int = 1, **fit_kw) -> VisibilityScan:
    """Beat visibility versus the population of the second superposition level.

    ``simulate(scenario) -> (t, counts)`` defaults to the master-equation
    expected histogram.  Failed fits are recorded per point as NaN.
    """
    pops = np.asarray(populations, float)
    if np.any((pops <= 0) | (pops >= 1)):
        raise FitError("populations must lie in (0, 1)")
    if simulate is None:
        from .master import simulate_histogram as simulate
    from dataclasses import replace

    def one(p):
        s = template.initial
        sc = replace(template, initial=type(s)(s.level_a, s.level_b, 1.0 - p, p, s.phi_D0))
        return fit_beat(simulate(sc), **fit_kw)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(jobs) as ex:
            futures = [ex.submit(one, p) for p in pops]
        outcomes = []
        for f in futures:
            try:
                outcomes.append(f.result())
            except FitError as e:
                outcomes.append(e)
    else:
        outcomes = []
        for p in pops:
            try:
                outcomes.append(one(p))
            except FitError as e:
                outcomes.append(e)
    vis, sig, errors = np.full(len(pops), np.nan), np.full(len(pops), np.nan), {}
    for i, o in enumerate(outcomes):
        if isinstance(o, FitResult):
            vis[i], sig[i] = o["V"], o.sigma("V")
        else:
            errors[float(pops[i])] = f"{type(o).__name__}: {o}"
    argmax = _parabolic_argmax(pops, vis) if len(pops) > 1 else None
    return VisibilityScan(pops, vis, sig, errors, argmax)


# ----------------------------------------------------------------- spectral checks


@dataclass
class SpectralContrast:
    nu_mhz: float
    peak: float
    floor: float

    @property
    def ratio(self):
        return self.peak / self.floor if self.floor > 0 else math.inf


def spectral_contrast(t, p, nu_mhz, shots_per_point) -> SpectralContrast:
    """Hann-windowed Fourier amplitude at ``nu_mhz`` of a detrended population curve.

    The trend is an exponential decay fit.  The floor is the amplitude that
    binomial projection noise from ``shots_per_point`` state measurements per
    point would produce at any frequency.
    """
    t = np.asarray(t, float)
    p = np.clip(np.asarray(p, float), 0.0, 1.0)
    if shots_per_point <= 0:
        raise FitError("shots_per_point must be positive")
    dec = fit_decay((t, p))
    resid = p - EXP_DECAY.f(t, dec.values)
    w = np.hanning(len(t))
    peak = abs(np.sum(w * resid * np.exp(-1j * TWO_PI_MHZ * nu_mhz * t)))
    floor = math.sqrt(np.sum(w ** 2 * p * (1 - p)) / shots_per_point)
    return SpectralContrast(float(nu_mhz), float(peak), float(floor))


def residual_modulation(h, nu_mhz, window=None, background=None) -> float:
    """Relative amplitude of a cosine at ``nu_mhz`` riding on the fitted decay envelope."""
    t, y = _curve(h, window)
    dec = fit_decay((t, y), background=background)
    A, tau, b = dec.values
    env = A * np.exp(-t / tau)
    arg = TWO_PI_MHZ * nu_mhz * t
    X = np.column_stack([env * np.cos(arg), env * np.sin(arg)])
    coef, *_ = np.linalg.lstsq(X, y - b - env, rcond=None)
    return float(np.hypot(*coef))


def calibrate_rabi(make_histogram, tau_target_ns, bracket=(0.5, 30.0), window=None,
                   xtol=1e-4) -> tuple[float, FitResult]:
    """Drive strength whose fitted envelope decay time equals ``tau_target_ns``.

    ``make_histogram(rabi_mhz)`` returns a curve accepted by ``fit_decay``.
    """
    from scipy.optimize import brentq

    def gap(rabi):
        return fit_decay(make_histogram(rabi), window=window)["tau"] - tau_target_ns

    lo, hi = bracket
    g_lo, g_hi = gap(lo), gap(hi)
    if g_lo * g_hi > 0:
        raise NoSolutionError(f"tau = {tau_target_ns} ns is not reached for Rabi frequencies in "
                              f"{bracket} MHz (tau gap {g_lo:.1f} .. {g_hi:.1f})")
    rabi = brentq(gap, lo, hi, xtol=xtol)
    return float(rabi), fit_decay(make_histogram(rabi), window=window)
