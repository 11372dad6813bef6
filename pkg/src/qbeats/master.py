"""Lindblad dynamics of the 18-level ion under a pulsed 854-nm drive.

Units: time in ns, frequencies in MHz; internally angular rates in rad/ns.
The density matrix is vectorized row-major, so ``vec(A rho B) =
kron(A, B.T) vec(rho)``.  The generator is ``L(t) = L0 + f(t) L1`` with the
pulse envelope ``f``.  A few linear functionals of rho (detected 393-nm
flux, total 393/854/850 emission) are integrated alongside as extra rows,
which gives exact bin integrals for histograms.

Piecewise-constant envelope segments are propagated with the matrix
exponential; ramps use an adaptive embedded Runge-Kutta method (DOP853).
Only the part of Liouville space reachable from the initial state is
integrated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .amplitude import (GAMMA_P32_MHZ, AtomicSuperposition, PhotonPolarization,
                        atomic_frame_polarization, balance_detuning, polarization, scheme)
from .atomic import (BASIS, INDEX, Manifold, ZeemanConfig, cgc, channel_table, level,
                     manifold_indices, sublevels, zeeman_shift)
from .errors import ConfigurationError, DomainError, NumericError
from .geometry import Q_VALUES, CollectionGeometry, collection_weights

N = len(BASIS)
TWO_PI_MHZ = 2e-3 * math.pi  # MHz -> rad/ns

# P3/2 branching ratios (literature values, not fitted).
DEFAULT_BRANCHING = {Manifold.S12: 0.9347, Manifold.D52: 0.0587, Manifold.D32: 0.0066}

ACCUMULATORS = ("detected", "emitted_393", "emitted_854", "emitted_850")


@dataclass(frozen=True)
class PulseEnvelope:
    """Raised-cosine switch-on, flat top, optional raised-cosine switch-off.

    The drive is on from ``start_ns`` to ``start_ns + duration_ns`` (None
    means until the end of the window); ``fall_ns`` is appended after that.
    A duration shorter than the rise cuts the ramp abruptly.
    """

    start_ns: float = 0.0
    duration_ns: float | None = None
    rise_ns: float = 60.0
    fall_ns: float = 0.0

    def __post_init__(self):
        for k in ("start_ns", "rise_ns", "fall_ns"):
            if not getattr(self, k) >= 0:
                raise ConfigurationError(f"{k} must be >= 0", [k])
        if self.duration_ns is not None and not self.duration_ns >= 0:
            raise ConfigurationError("duration_ns must be >= 0", ["duration_ns"])

    @property
    def end_ns(self):
        return math.inf if self.duration_ns is None else self.start_ns + self.duration_ns

    def _rise(self, t):
        if self.rise_ns <= 0:
            return 1.0
        x = min(max((t - self.start_ns) / self.rise_ns, 0.0), 1.0)
        return 0.5 * (1 - math.cos(math.pi * x))

    def value(self, t):
        t = np.asarray(t, float)
        s, e = self.start_ns, self.end_ns
        f = np.zeros_like(t)
        on = (t >= s) & (t < e)
        if self.rise_ns > 0:
            x = np.clip((t - s) / self.rise_ns, 0.0, 1.0)
            f = np.where(on, 0.5 * (1 - np.cos(np.pi * x)), f)
        else:
            f = np.where(on, 1.0, f)
        if self.fall_ns > 0 and math.isfinite(e):
            f_end = self._rise(e) if e > s else 0.0
            x = (t - e) / self.fall_ns
            tail = f_end * 0.5 * (1 + np.cos(np.pi * np.clip(x, 0, 1)))
            f = np.where((t >= e) & (x <= 1), tail, f)
        return f if f.ndim else float(f)

    def segments(self, t_end):
        """[(a, b, constant value or None)] covering [0, t_end]."""
        s, e = self.start_ns, self.end_ns
        pts = {0.0, t_end}
        for p in (s, min(s + self.rise_ns, e), e, e + self.fall_ns):
            if 0 < p < t_end:
                pts.add(p)
        pts = sorted(pts)
        out = []
        for a, b in zip(pts[:-1], pts[1:]):
            mid = 0.5 * (a + b)
            ramp = (s <= mid < min(s + self.rise_ns, e) and self.rise_ns > 0) or \
                   (e <= mid < e + self.fall_ns and self.fall_ns > 0)
            out.append((a, b, None if ramp else float(self.value(mid))))
        return out


@dataclass(frozen=True)
class LaserDrive:
    """854-nm drive. ``detuning_mhz = None`` selects the balanced detuning."""

    rabi_mhz: float
    detuning_mhz: float | None = None
    polarization: PhotonPolarization = field(default_factory=lambda: polarization("H"))
    envelope: PulseEnvelope = field(default_factory=PulseEnvelope)

    def __post_init__(self):
        if not self.rabi_mhz >= 0:
            raise ConfigurationError(f"rabi_mhz must be >= 0, got {self.rabi_mhz}", ["rabi_mhz"])
        object.__setattr__(self, "polarization", polarization(self.polarization))


@dataclass(frozen=True)
class DecayConfig:
    gamma_mhz: float = GAMMA_P32_MHZ
    branching: dict = field(default_factory=lambda: dict(DEFAULT_BRANCHING))

    def __post_init__(self):
        if not self.gamma_mhz > 0:
            raise ConfigurationError("gamma_mhz must be positive", ["gamma_mhz"])
        b = {Manifold.parse(k): float(v) for k, v in dict(self.branching).items()}
        for k in b:
            if k not in DEFAULT_BRANCHING:
                raise ConfigurationError(f"P3/2 cannot decay to {k.value}", ["branching"])
        if any(v < 0 for v in b.values()) or abs(sum(b.values()) - 1.0) > 1e-9:
            raise ConfigurationError(f"branching fractions must be >= 0 and sum to 1, got {b}",
                                     ["branching"])
        object.__setattr__(self, "branching", {k: b.get(k, 0.0) for k in DEFAULT_BRANCHING})


@dataclass(frozen=True)
class TimeGrid:
    t_max_ns: float = 2000.0
    step_ns: float = 0.5
    bin_ns: float = 2.0

    def __post_init__(self):
        if not (self.step_ns > 0 and self.t_max_ns > 0):
            raise ConfigurationError("t_max_ns and step_ns must be positive", ["t_max_ns", "step_ns"])
        if self.bin_ns < self.step_ns - 1e-12:
            raise ConfigurationError("bin_ns must be >= step_ns", ["bin_ns"])
        r = self.bin_ns / self.step_ns
        if abs(r - round(r)) > 1e-9:
            raise ConfigurationError("bin_ns must be an integer multiple of step_ns", ["bin_ns"])

    @property
    def steps_per_bin(self):
        return int(round(self.bin_ns / self.step_ns))

    @property
    def n_bins(self):
        return int(math.floor(self.t_max_ns / self.bin_ns + 1e-9))

    def times(self):
        n = self.n_bins * self.steps_per_bin
        return np.arange(n + 1) * self.step_ns


@dataclass(frozen=True)
class Scenario:
    scheme: str
    zeeman: ZeemanConfig
    initial: AtomicSuperposition
    drive: LaserDrive
    geometry: CollectionGeometry = field(default_factory=CollectionGeometry)
    decay: DecayConfig | None = field(default_factory=DecayConfig)
    grid: TimeGrid = field(default_factory=TimeGrid)
    prep_infidelity: float = 0.0
    dark_rate_per_ns: float = 0.0
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "scheme", scheme(self.scheme).name)
        if not 0.0 <= self.prep_infidelity <= 0.5:
            raise ConfigurationError("prep_infidelity must be in [0, 0.5]", ["prep_infidelity"])
        if self.dark_rate_per_ns < 0:
            raise ConfigurationError("dark_rate_per_ns must be >= 0", ["dark_rate_per_ns"])

    @property
    def detuning_mhz(self) -> float:
        if self.drive.detuning_mhz is not None:
            return float(self.drive.detuning_mhz)
        gamma = self.decay.gamma_mhz if self.decay else GAMMA_P32_MHZ
        return balance_detuning(self.scheme, self.zeeman, gamma)

    def with_phase(self, phi_D0):
        return replace(self, initial=self.initial.with_phase(phi_D0))

    def with_drive(self, **kw):
        return replace(self, drive=replace(self.drive, **kw))

    def with_envelope(self, **kw):
        return self.with_drive(envelope=replace(self.drive.envelope, **kw))


# ---------------------------------------------------------------- generator


def _commutator_super(H):
    eye = np.eye(H.shape[0])
    return -1j * (np.kron(H, eye) - np.kron(eye, H.T))


def _dissipator_super(Ls):
    n = Ls[0].shape[0]
    eye = np.eye(n)
    out = np.zeros((n * n, n * n), complex)
    for L in Ls:
        LdL = L.conj().T @ L
        out += np.kron(L, L.conj()) - 0.5 * (np.kron(LdL, eye) + np.kron(eye, LdL.T))
    return out


def _vec_functional(M):
    """Row c with c @ vec(rho) = Tr(M rho) for row-major vec."""
    return M.T.reshape(-1)


def detection_operator(geometry: CollectionGeometry) -> np.ndarray:
    """Hermitian operator on the 18-level space, Tr(M rho) = collected fraction of 393-nm decay."""
    na = geometry.numerical_aperture
    W = collection_weights(na, geometry.analyzer) if na > 0 else np.zeros((3, 3))
    M = np.zeros((N, N), complex)
    for s in sublevels(Manifold.S12):
        terms = []
        for iq, q in enumerate(Q_VALUES):
            m_p = s.m + q
            if abs(m_p) > Manifold.P32.J:
                continue
            terms.append((iq, INDEX[level("P3/2", m_p)], cgc(0.5, s.m, q, 1.5, m_p)))
        for iq, a, ca in terms:
            for jq, b, cb in terms:
                M[a, b] += ca * cb * W[iq, jq]
    return M


def collapse_operators(decay: DecayConfig) -> dict:
    """{(manifold, q): 18x18 jump operator} for every P3/2 decay branch, in sqrt(rad/ns)."""
    gamma = TWO_PI_MHZ * decay.gamma_mhz
    out = {}
    for man, b in decay.branching.items():
        if b == 0:
            continue
        for q in Q_VALUES:
            L = np.zeros((N, N), complex)
            for p in sublevels(Manifold.P32):
                m_low = p.m - q
                if abs(m_low) > man.J:
                    continue
                c = cgc(man.J, m_low, q, Manifold.P32.J, p.m)
                if c:
                    L[INDEX[level(man, m_low)], INDEX[p]] = math.sqrt(gamma * b) * c
            if np.any(L):
                out[(man, q)] = L
    return out


def hamiltonians(sc: Scenario):
    """(H0, Hd) in rad/ns in the frame rotating at the laser frequency; H = H0 + f(t) Hd."""
    cfg, delta = sc.zeeman, sc.detuning_mhz
    energies = np.array([zeeman_shift(cfg, s) for s in BASIS])
    for i in manifold_indices(Manifold.P32):
        energies[i] -= delta
    H0 = np.diag(TWO_PI_MHZ * energies).astype(complex)
    a_plus, a_minus = atomic_frame_polarization(sc.drive.polarization)
    amp = {1: a_plus, -1: a_minus}
    Hd = np.zeros((N, N), complex)
    half_rabi = 0.5 * TWO_PI_MHZ * sc.drive.rabi_mhz
    for ch in channel_table(Manifold.D52, Manifold.P32):
        if ch.q == 0:
            continue
        u, d = INDEX[ch.upper], INDEX[ch.lower]
        Hd[u, d] += half_rabi * amp[ch.q] * ch.cgc
        Hd[d, u] = np.conj(Hd[u, d])
    return H0, Hd


@dataclass
class Generator:
    L0: np.ndarray
    L1: np.ndarray
    C: np.ndarray  # accumulator rows, one per ACCUMULATORS entry
    H0: np.ndarray
    Hd: np.ndarray
    collapse: dict
    M: np.ndarray
    envelope: PulseEnvelope

    @cached_property
    def _pattern(self):
        return (np.abs(self.L0) > 0) | (np.abs(self.L1) > 0)

    def support(self, vec0: np.ndarray) -> np.ndarray:
        """Indices of Liouville space reachable from the nonzero entries of vec0."""
        reach = np.abs(vec0) > 0
        pattern = self._pattern
        while True:
            new = reach | pattern[:, reach].any(axis=1)
            if new.sum() == reach.sum():
                return np.flatnonzero(new)
            reach = new


def build_generator(sc: Scenario) -> Generator:
    if sc.decay is None:
        raise ConfigurationError("decay configuration missing", ["decay"])
    H0, Hd = hamiltonians(sc)
    ops = collapse_operators(sc.decay)
    L0 = _commutator_super(H0) + _dissipator_super(list(ops.values()))
    L1 = _commutator_super(Hd)
    gamma = TWO_PI_MHZ * sc.decay.gamma_mhz
    P = np.zeros((N, N))
    P[manifold_indices(Manifold.P32), manifold_indices(Manifold.P32)] = 1.0
    M = detection_operator(sc.geometry)
    b = sc.decay.branching
    eta = sc.geometry.detector_efficiency
    C = np.array([
        _vec_functional(eta * gamma * b[Manifold.S12] * M),
        _vec_functional(gamma * b[Manifold.S12] * P),
        _vec_functional(gamma * b[Manifold.D52] * P),
        _vec_functional(gamma * b[Manifold.D32] * P),
    ])
    return Generator(L0, L1, C, H0, Hd, ops, M, sc.drive.envelope)


def excitation_rates(sc: Scenario) -> dict:
    """Perturbative D5/2 -> P3/2 pumping rate (1/ns) per channel at full envelope."""
    H0, Hd = hamiltonians(sc)
    gamma = TWO_PI_MHZ * (sc.decay or DecayConfig()).gamma_mhz
    out = {}
    for ch in channel_table(Manifold.D52, Manifold.P32):
        u, d = INDEX[ch.upper], INDEX[ch.lower]
        h = Hd[u, d]
        if h == 0:
            continue
        detuning = (H0[u, u] - H0[d, d]).real
        out[(ch.lower, ch.upper)] = float(abs(h) ** 2 * gamma / (detuning ** 2 + gamma ** 2 / 4))
    return out


# ---------------------------------------------------------------- evolution


def initial_density(sc: Scenario) -> np.ndarray:
    s = sc.initial
    ia, ib = INDEX[s.level_a], INDEX[s.level_b]
    eps = sc.prep_infidelity
    rho = np.zeros((N, N), complex)
    rho[ia, ia] = (1 - eps) * s.rho1 + eps * s.rho2
    rho[ib, ib] = (1 - eps) * s.rho2 + eps * s.rho1
    coh = (1 - 2 * eps) * math.sqrt(s.rho1 * s.rho2) * complex(math.cos(s.phi_D0), math.sin(s.phi_D0))
    rho[ib, ia] = coh
    rho[ia, ib] = np.conj(coh)
    return rho


def _propagate(gen: Generator, vec0, times, rtol=1e-8, atol=1e-12):
    """Augmented state [vec(rho) on the support; accumulators] at ``times`` (ascending, >= 0)."""
    times = np.asarray(times, float)
    if np.any(np.diff(times) < 0) or times[0] < 0:
        raise DomainError("output times must be ascending and >= 0")
    sup = gen.support(vec0)
    n, k = len(sup), gen.C.shape[0]
    L0 = gen.L0[np.ix_(sup, sup)]
    L1 = gen.L1[np.ix_(sup, sup)]
    Cs = gen.C[:, sup]

    def aug(f):
        A = np.zeros((n + k, n + k), complex)
        A[:n, :n] = L0 + f * L1
        A[n:, :n] = Cs
        return A

    y = np.zeros(n + k, complex)
    y[:n] = vec0[sup]
    out = np.empty((len(times), n + k), complex)
    t_end = float(times[-1])
    env = gen.envelope
    i = 0
    t = 0.0
    while i < len(times) and times[i] <= 0.0:
        out[i] = y
        i += 1
    cache = {}
    for a, b, fconst in env.segments(max(t_end, 1e-12)):
        sel = [j for j in range(i, len(times)) if times[j] <= b + 1e-12]
        if fconst is not None:
            A = aug(fconst)
            for j in sel:
                dt = times[j] - t
                if dt > 0:
                    key = (fconst, round(dt, 12))
                    E = cache.get(key)
                    if E is None:
                        E = cache[key] = expm(A * dt)
                    y = E @ y
                    t = times[j]
                out[j] = y
            if t < b:
                y = expm(A * (b - t)) @ y
                t = b
        else:
            A0, A1 = aug(0.0), np.zeros((n + k, n + k), complex)
            A1[:n, :n] = L1

            def rhs(tt, yy):
                return (A0 + env.value(tt) * A1) @ yy

            t_eval = [times[j] for j in sel if times[j] > t]
            if not t_eval or t_eval[-1] < b:
                t_eval.append(b)
            sol = solve_ivp(rhs, (t, b), y, method="DOP853", t_eval=t_eval,
                            rtol=rtol, atol=atol)
            if sol.status < 0:
                raise NumericError(f"integration failed at t = {sol.t[-1]:.6g} ns: {sol.message}")
            m = 0
            for j in sel:
                if times[j] > t:
                    out[j] = sol.y[:, m]
                    m += 1
                else:
                    out[j] = y
            y = sol.y[:, -1]
            t = b
        i += len(sel)
        if i >= len(times):
            break
    return sup, out


@dataclass
class DensityTrajectory:
    t: np.ndarray
    rho: np.ndarray  # (n_t, 18, 18)
    accumulated: dict  # name -> (n_t,) integrated emission
    scenario: Scenario
    generator: Generator

    def population(self, manifold) -> np.ndarray:
        idx = manifold_indices(Manifold.parse(manifold))
        return np.real(np.einsum("tii->t", self.rho[:, idx][:, :, idx]))

    def level_population(self, sublevel) -> np.ndarray:
        i = INDEX[sublevel]
        return self.rho[:, i, i].real

    def invariants(self) -> dict:
        rho = self.rho
        trace = np.real(np.einsum("tii->t", rho))
        herm = float(np.max(np.abs(rho - np.conj(np.swapaxes(rho, 1, 2)))))
        herm_rho = 0.5 * (rho + np.conj(np.swapaxes(rho, 1, 2)))
        min_eig = float(np.min(np.linalg.eigvalsh(herm_rho)))
        # D5/2 loss is balanced by P3/2 population plus everything that left P3/2
        # towards S1/2 or D3/2.
        loss = 1.0 - self.population(Manifold.D52)
        sinks = (self.population(Manifold.P32) + self.accumulated["emitted_393"]
                 + self.accumulated["emitted_850"])
        d0 = float(self.population(Manifold.D52)[0])
        book = float(np.max(np.abs((loss - (1.0 - d0)) - sinks)))
        return {"trace_drift": float(np.max(np.abs(trace - trace[0]))),
                "hermiticity": herm, "min_eigenvalue": min_eig, "bookkeeping": book}


def _vec(rho):
    return np.asarray(rho, complex).reshape(-1)


def _check_density(rho):
    if rho.shape != (N, N):
        raise DomainError(f"density matrix must be {N}x{N}")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-10:
        raise DomainError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > 1e-9:
        raise DomainError("density matrix trace differs from 1")
    if np.min(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))) < -1e-9:
        raise DomainError("density matrix is not positive")


def _expand(sup, out, n_t):
    k = len(ACCUMULATORS)
    rho = np.zeros((n_t, N * N), complex)
    rho[:, sup] = out[:, :-k]
    acc = {name: out[:, len(sup) + j].real.copy() for j, name in enumerate(ACCUMULATORS)}
    return rho.reshape(n_t, N, N), acc


def evolve(sc: Scenario, rho0=None, times=None, generator: Generator | None = None,
           rtol: float = 1e-8, atol: float = 1e-12) -> DensityTrajectory:
    """Integrate the master equation from rho0 (default: the scenario's prepared state)."""
    rho0 = initial_density(sc) if rho0 is None else np.asarray(rho0, complex)
    _check_density(rho0)
    gen = generator or build_generator(sc)
    times = sc.grid.times() if times is None else np.asarray(times, float)
    sup, out = _propagate(gen, _vec(rho0), times, rtol, atol)
    rho, acc = _expand(sup, out, len(times))
    return DensityTrajectory(times, rho, acc, sc, gen)


def detection_flux(traj: DensityTrajectory, geometry: CollectionGeometry | None = None) -> np.ndarray:
    """Detected 393-nm photon rate (1/ns) at the trajectory times."""
    sc = traj.scenario
    if geometry is None:
        M = traj.generator.M
        geometry = sc.geometry
    else:
        M = detection_operator(geometry)
    gamma = TWO_PI_MHZ * sc.decay.gamma_mhz
    pref = geometry.detector_efficiency * gamma * sc.decay.branching[Manifold.S12]
    flux = pref * np.real(np.einsum("ab,tba->t", M, traj.rho))
    return np.clip(flux, 0.0, None) + sc.dark_rate_per_ns


def expected_counts(traj: DensityTrajectory, bin_ns: float | None = None):
    """(bin_edges, expected detections per trigger in each bin) from the exact accumulator."""
    sc = traj.scenario
    bin_ns = sc.grid.bin_ns if bin_ns is None else bin_ns
    r = bin_ns / sc.grid.step_ns
    if abs(r - round(r)) > 1e-9 or r < 1:
        raise ConfigurationError("bin_ns must be an integer multiple of the grid step", ["bin_ns"])
    r = int(round(r))
    acc = traj.accumulated["detected"][::r]
    edges = traj.t[::r]
    counts = np.clip(np.diff(acc), 0.0, None) + sc.dark_rate_per_ns * np.diff(edges)
    return edges, counts


# ---------------------------------------------------------------- scans


def _phase_basis(sc: Scenario):
    """rho0(phi) = R + cos(phi) X + sin(phi) Y, all Hermitian."""
    s = sc.initial
    ia, ib = INDEX[s.level_a], INDEX[s.level_b]
    R = initial_density(sc.with_phase(0.0))
    X = np.zeros((N, N), complex)
    Y = np.zeros((N, N), complex)
    X[ia, ib] = X[ib, ia] = R[ib, ia]
    Y[ib, ia] = 1j * R[ib, ia].real
    Y[ia, ib] = -1j * R[ib, ia].real
    R[ia, ib] = R[ib, ia] = 0.0
    return R, X, Y


def _phase_components(sc, times, gen):
    comps = []
    for part in _phase_basis(sc):
        sup, out = _propagate(gen, _vec(part), times)
        comps.append(_expand(sup, out, len(times)))
    return comps


def depletion_scan(sc: Scenario, pulse_lengths_ns) -> np.ndarray:
    """Remaining D5/2 population after abruptly stopping the pulse at each length.

    Population still in P3/2 at switch-off is counted with its D5/2
    branching fraction, as it decays back before state detection.
    """
    lengths = np.asarray(pulse_lengths_ns, float)
    if np.any(np.diff(lengths) < 0) or np.any(lengths < 0):
        raise DomainError("pulse lengths must be ascending and non-negative")
    sc_on = sc.with_envelope(duration_ns=None, fall_ns=0.0)
    start = sc_on.drive.envelope.start_ns
    traj = evolve(sc_on, times=start + lengths)
    b_d = sc.decay.branching[Manifold.D52]
    return traj.population(Manifold.D52) + b_d * traj.population(Manifold.P32)


def phase_scan(sc: Scenario, phi_values, mode: str = "integrated_flux") -> np.ndarray:
    """Integrated detection probability or remaining D5/2 population vs Phi_D(0).

    The response is linear in the initial state, so three propagations
    cover any number of phases.
    """
    phis = np.asarray(phi_values, float)
    gen = build_generator(sc)
    env = sc.drive.envelope
    if mode == "integrated_flux":
        times = np.array([0.0, sc.grid.t_max_ns])
        vals = []
        for rho, acc in _phase_components(sc, times, gen):
            v = acc["detected"][-1]
            if env.end_ns + env.fall_ns <= sc.grid.t_max_ns:
                # photons still to come from the residual P3/2 population
                gamma = TWO_PI_MHZ * sc.decay.gamma_mhz
                v += gen.C[0] @ _vec(rho[-1]) / gamma
            vals.append(v.real)
    elif mode == "depletion_at_fixed_pulse":
        if env.duration_ns is None:
            raise ConfigurationError("depletion phase scan needs a finite pulse duration",
                                     ["pulse_ns"])
        times = np.array([0.0, env.start_ns + env.duration_ns])
        sc_cut = sc.with_envelope(fall_ns=0.0)
        gen = build_generator(sc_cut)
        b_d = sc.decay.branching[Manifold.D52]
        vals = []
        for rho, acc in _phase_components(sc_cut, times, gen):
            d = np.real(np.trace(rho[-1][np.ix_(manifold_indices(Manifold.D52),
                                                 manifold_indices(Manifold.D52))]))
            p = np.real(np.trace(rho[-1][np.ix_(manifold_indices(Manifold.P32),
                                                 manifold_indices(Manifold.P32))]))
            vals.append(d + b_d * p)
    else:
        raise ConfigurationError(f"unknown phase scan mode {mode!r}", ["mode"])
    r, x, y = vals
    return r + x * np.cos(phis) + y * np.sin(phis)


def simulate_histogram(sc: Scenario, n_triggers: float = 1e6, bin_ns: float | None = None):
    """Noise-free expected histogram (bin centers in ns, counts for ``n_triggers``)."""
    edges, counts = expected_counts(evolve(sc), bin_ns)
    return 0.5 * (edges[:-1] + edges[1:]), n_triggers * counts
