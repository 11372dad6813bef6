"""Closed-form scattering amplitudes: absorption at 854 nm, emission at 393 nm.

The D5/2 superposition evolves freely as exp(-2 pi i f_Z(m) t) per sublevel
(f_Z the Zeeman shift in MHz, t in ns), so the relative phase of the second
level is

    Phi_D(t) = Phi_D(0) - 2 pi nu_L t,    nu_L = f_Z(m_b) - f_Z(m_a) > 0

for m_b > m_a and g B > 0.  Only phase differences are observable, so the
sign of the precession term is a convention; the one here matches the
master-equation propagator exactly.

Each absorption channel carries ``c = cgc * ctilde`` with the complex
Lorentzian response ``ctilde = 1/(1 - 2i Delta_ch/Gamma)``.  When the two
interfering channels are balanced (|c_a| = |c_b|) their responses still
differ in phase by ``arg c_b - arg c_a``; this response phase adds to
Phi_D + Phi_854 in the beat and is reported by
:func:`response_phase_offset`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq

from .atomic import (Manifold, Sublevel, TransitionChannel, ZeemanConfig, cgc, find_channel,
                     larmor_frequency, level, zeeman_shift)
from .errors import ConfigurationError, DomainError, NoSolutionError
from .geometry import Q_VALUES, analyzer_amplitudes

# P3/2 natural linewidth Gamma/2pi in MHz, from the 6.924 ns lifetime.
GAMMA_P32_MHZ = 1e3 / (2 * math.pi * 6.924)


@dataclass(frozen=True)
class PhotonPolarization:
    theta: float = math.pi / 2
    phi854: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.theta <= math.pi):
            raise DomainError(f"theta must lie in [0, pi], got {self.theta}")


H = PhotonPolarization(math.pi / 2, 0.0)
V = PhotonPolarization(math.pi / 2, math.pi)
D = PhotonPolarization(math.pi / 2, math.pi / 2)
A = PhotonPolarization(math.pi / 2, 3 * math.pi / 2)
R = PhotonPolarization(0.0, 0.0)
L = PhotonPolarization(math.pi, 0.0)

NAMED_POLARIZATIONS = {"H": H, "V": V, "D": D, "A": A, "R": R, "L": L}


def polarization(name_or_value) -> PhotonPolarization:
    if isinstance(name_or_value, PhotonPolarization):
        return name_or_value
    try:
        return NAMED_POLARIZATIONS[str(name_or_value).upper()]
    except KeyError:
        raise ConfigurationError(f"unknown polarization {name_or_value!r}", ["polarization"]) from None


def atomic_frame_polarization(p: PhotonPolarization) -> tuple[complex, complex]:
    """(a_+1, a_-1): sigma+ and sigma- amplitudes for a beam along +B."""
    return (complex(math.cos(p.theta / 2)),
            math.sin(p.theta / 2) * complex(math.cos(p.phi854), math.sin(p.phi854)))


@dataclass(frozen=True)
class AtomicSuperposition:
    """sqrt(rho1)|a> + exp(i Phi_D(0)) sqrt(rho2)|b>, both in D5/2, at t = 0."""

    level_a: Sublevel
    level_b: Sublevel
    rho1: float
    rho2: float
    phi_D0: float = 0.0

    def __post_init__(self):
        if abs(self.rho1 + self.rho2 - 1.0) > 1e-12:
            raise DomainError(f"populations must sum to 1, got {self.rho1} + {self.rho2}")
        if min(self.rho1, self.rho2) < 0:
            raise DomainError("populations must be non-negative")
        for s in (self.level_a, self.level_b):
            if s.manifold is not Manifold.D52:
                raise DomainError(f"{s} is not a D5/2 sublevel")
        if self.level_a == self.level_b:
            raise DomainError("the two sublevels must differ")

    @classmethod
    def make(cls, m_a, m_b, rho2, phi_D0=0.0):
        return cls(level("D5/2", m_a), level("D5/2", m_b), 1.0 - rho2, rho2, phi_D0)

    def amplitudes(self, cfg: ZeemanConfig | None = None, t: float = 0.0) -> dict:
        out = {}
        for s, amp in ((self.level_a, math.sqrt(self.rho1)),
                       (self.level_b, math.sqrt(self.rho2) * complex(math.cos(self.phi_D0),
                                                                     math.sin(self.phi_D0)))):
            if cfg is not None and t:
                amp = amp * np.exp(-2j * math.pi * zeeman_shift(cfg, s) * t * 1e-3)
            out[s] = complex(amp)
        return out

    def precession_frequency(self, cfg: ZeemanConfig) -> float:
        """Signed rate (MHz) of Phi_D(t); negative for m_b > m_a when g B > 0."""
        return zeeman_shift(cfg, self.level_a) - zeeman_shift(cfg, self.level_b)

    def phase_at(self, cfg: ZeemanConfig, t: float) -> float:
        return self.phi_D0 + 2 * math.pi * self.precession_frequency(cfg) * t * 1e-3

    def with_phase(self, phi_D0):
        return AtomicSuperposition(self.level_a, self.level_b, self.rho1, self.rho2, phi_D0)


@dataclass(frozen=True)
class Scheme:
    name: str
    m_a: Fraction
    m_b: Fraction
    analyzer: str
    default_rho2: float

    @property
    def level_a(self):
        return level("D5/2", self.m_a)

    @property
    def level_b(self):
        return level("D5/2", self.m_b)

    def channels(self) -> tuple[TransitionChannel, TransitionChannel]:
        """The sigma+ channel out of level a and the sigma- channel out of level b."""
        a, b = self.level_a, self.level_b
        return (find_channel(a, level("P3/2", a.m + 1)),
                find_channel(b, level("P3/2", b.m - 1)))

    def larmor(self, cfg: ZeemanConfig) -> float:
        return larmor_frequency(cfg, Manifold.D52, self.m_b - self.m_a)

    def superposition(self, rho2=None, phi_D0=0.0) -> AtomicSuperposition:
        rho2 = self.default_rho2 if rho2 is None else rho2
        return AtomicSuperposition(self.level_a, self.level_b, 1.0 - rho2, rho2, phi_D0)


LAMBDA = Scheme("lambda", Fraction(-3, 2), Fraction(1, 2), "H", 0.5)
VSCHEME = Scheme("V", Fraction(-5, 2), Fraction(3, 2), "V", 0.75)
SCHEMES = {"lambda": LAMBDA, "v": VSCHEME}


def scheme(name) -> Scheme:
    if isinstance(name, Scheme):
        return name
    key = str(name).lower()
    if key in ("λ", "l", "lambda"):
        key = "lambda"
    try:
        return SCHEMES[key]
    except KeyError:
        raise ConfigurationError(f"unknown scheme {name!r}", ["scheme"]) from None


def channel_detuning(ch: TransitionChannel, delta: float, cfg: ZeemanConfig) -> float:
    """Laser detuning from this channel's own resonance, MHz."""
    return delta - (zeeman_shift(cfg, ch.upper) - zeeman_shift(cfg, ch.lower))


def lorentzian_response(ch: TransitionChannel, delta: float, cfg: ZeemanConfig,
                        gamma_p: float = GAMMA_P32_MHZ) -> complex:
    """cgc times the complex Lorentzian 1/(1 - 2i Delta_ch/Gamma)."""
    if not gamma_p > 0:
        raise ConfigurationError(f"linewidth must be positive, got {gamma_p}", ["gamma_p_mhz"])
    if ch.upper.manifold is not Manifold.P32 or ch.lower.manifold is not Manifold.D52:
        raise DomainError(f"{ch.lower} -> {ch.upper} is not a D5/2 -> P3/2 channel")
    x = 2.0 * channel_detuning(ch, delta, cfg) / gamma_p
    return ch.cgc / complex(1.0, -x)


def balance_channels(ch1: TransitionChannel, ch2: TransitionChannel, cfg: ZeemanConfig,
                     gamma_p: float = GAMMA_P32_MHZ, span: float = 20.0) -> float:
    """Detuning where both channels respond with equal magnitude.

    Sign changes of log|c1| - log|c2| are bracketed on a grid of +-span
    linewidths around the midpoint of the two resonances and refined with
    Brent's method; among several roots the one with the strongest response
    is returned.
    """
    o1 = zeeman_shift(cfg, ch1.upper) - zeeman_shift(cfg, ch1.lower)
    o2 = zeeman_shift(cfg, ch2.upper) - zeeman_shift(cfg, ch2.lower)
    mid = 0.5 * (o1 + o2)

    def f(d):
        return (math.log(abs(lorentzian_response(ch1, d, cfg, gamma_p)))
                - math.log(abs(lorentzian_response(ch2, d, cfg, gamma_p))))

    grid = mid + gamma_p * np.linspace(-span, span, int(40 * span) + 1)
    vals = np.array([f(d) for d in grid])
    if np.max(np.abs(vals)) < 1e-13:
        return mid
    roots = []
    for i in range(len(grid) - 1):
        if vals[i] == 0.0:
            roots.append(grid[i])
        elif vals[i] * vals[i + 1] < 0:
            roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-13, rtol=1e-15, maxiter=200))
    if not roots:
        raise NoSolutionError(
            f"no balanced detuning within +-{span} linewidths: |c1|/|c2| ranges over "
            f"[{math.exp(vals.min()):.4f}, {math.exp(vals.max()):.4f}] "
            f"(cgc {ch1.cgc:.4f} vs {ch2.cgc:.4f}, resonances {o1:.4f} / {o2:.4f} MHz)")
    return max(roots, key=lambda d: abs(lorentzian_response(ch1, d, cfg, gamma_p)))


def balance_detuning(scheme_name, cfg: ZeemanConfig, gamma_p: float = GAMMA_P32_MHZ) -> float:
    ch_a, ch_b = scheme(scheme_name).channels()
    return balance_channels(ch_a, ch_b, cfg, gamma_p)


def response_phase_offset(scheme_name, cfg: ZeemanConfig, delta: float,
                          gamma_p: float = GAMMA_P32_MHZ) -> float:
    """arg c_b - arg c_a for the interfering pair, in radians."""
    ch_a, ch_b = scheme(scheme_name).channels()
    ca = lorentzian_response(ch_a, delta, cfg, gamma_p)
    cb = lorentzian_response(ch_b, delta, cfg, gamma_p)
    return float(np.angle(cb / ca))


def apply_absorption(s: AtomicSuperposition, p: PhotonPolarization, delta: float, t: float,
                     cfg: ZeemanConfig, gamma_p: float = GAMMA_P32_MHZ) -> dict:
    """P3/2 amplitudes after absorbing one 854-nm photon at time t (ns)."""
    a_plus, a_minus = atomic_frame_polarization(p)
    out = {}
    for d, amp in s.amplitudes(cfg, t).items():
        for q, aq in ((1, a_plus), (-1, a_minus)):
            m_p = d.m + q
            if abs(m_p) > Manifold.P32.J or aq == 0:
                continue
            ch = find_channel(d, level("P3/2", m_p))
            out[ch.upper] = out.get(ch.upper, 0j) + amp * aq * lorentzian_response(ch, delta, cfg, gamma_p)
    return out


def apply_emission(p3_amplitudes: dict) -> dict:
    """Joint (photon q, S1/2 sublevel) amplitudes after the 393-nm decay."""
    out = {}
    for p, amp in p3_amplitudes.items():
        for q in Q_VALUES:
            m_s = p.m - q
            if abs(m_s) > Manifold.S12.J:
                continue
            c = cgc(Manifold.S12.J, m_s, q, Manifold.P32.J, p.m)
            if c == 0.0:
                continue
            key = (q, level("S1/2", m_s))
            out[key] = out.get(key, 0j) + c * amp
    return out


def project(scattering: dict, analyzer: str, theta=math.pi / 2, phi=0.0) -> float:
    """Detected intensity for a point detector at (theta, phi) behind ``analyzer``."""
    A = analyzer_amplitudes(theta, phi, analyzer)
    weights = dict(zip(Q_VALUES, A))
    by_final = {}
    for (q, s), amp in scattering.items():
        by_final[s] = by_final.get(s, 0j) + weights[q] * amp
    return float(sum(abs(v) ** 2 for v in by_final.values()))


def detected_intensity(scheme_name, analyzer, s: AtomicSuperposition, p: PhotonPolarization,
                       delta: float, t: float, cfg: ZeemanConfig,
                       gamma_p: float = GAMMA_P32_MHZ) -> float:
    """Analyzer-projected 393-nm intensity (arbitrary units) at time t."""
    sc = scheme(scheme_name)
    analyzer = str(analyzer).upper()
    if analyzer != sc.analyzer:
        warnings.warn(f"{sc.name} scheme is normally detected with analyzer {sc.analyzer}, "
                      f"not {analyzer}", stacklevel=2)
    return project(apply_emission(apply_absorption(s, p, delta, t, cfg, gamma_p)), analyzer)


def ideal_beat(scheme_name, phase) -> float:
    """Eq.-form intensity in units of c**2: (1/3)(1 + cos) for Lambda, (1/8)(1 - cos) for V."""
    sc = scheme(scheme_name)
    if sc is LAMBDA:
        return (1.0 + np.cos(phase)) / 3.0
    return (1.0 - np.cos(phase)) / 8.0


def interference_phase(scheme_name, s: AtomicSuperposition, p: PhotonPolarization, delta: float,
                       t: float, cfg: ZeemanConfig, gamma_p: float = GAMMA_P32_MHZ) -> float:
    """Phi_D(t) + Phi_854 + response phase: the argument of the beat cosine."""
    return (s.phase_at(cfg, t) + p.phi854
            + response_phase_offset(scheme_name, cfg, delta, gamma_p))
