"""Photon-click sampling, the QBTT time-tag format and arrival-time histograms.

Clicks are drawn with a Monte Carlo wave-function unraveling of the same
generator the master equation uses, restricted to D5/2 + P3/2 (decays to
S1/2 or D3/2 end a trajectory since nothing re-excites them).  Each trigger
owns a random stream seeded by ``(seed, trigger_index)``, so results do not
depend on chunking or execution order.

QBTT layout (all little-endian)::

    "QBTT"  u16 version  u32 header_len  header_len bytes of JSON
    16-byte records: u64 trigger, u8 channel, 3 zero bytes, u32 delta_ps

``delta_ps`` is relative to the previous record of the same trigger (the
first record of a trigger stores its absolute time).  A delta that does not
fit stores 0xFFFFFFFF and is followed by a 16-byte extension record holding
the absolute u64 timestamp and 8 zero bytes.
"""

from __future__ import annotations

import csv
import io
import json
import math
import struct
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .atomic import INDEX, Manifold, manifold_indices
from .errors import ConfigurationError, DomainError, ParseError
from .master import TWO_PI_MHZ, Scenario, build_generator

MAGIC = b"QBTT"
VERSION = 1
SENTINEL = 0xFFFFFFFF
RECORD_SIZE = 16
PREAMBLE = 10  # magic + version + header length

DETECTOR_393 = 0
SYNC = 1
CHANNELS = {"detector_393": DETECTOR_393, "sync": SYNC}

FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

_REC = np.dtype([("trigger", "<u8"), ("channel", "u1"), ("pad", "u1", 3), ("delta", "<u4")])
_EXT = np.dtype([("timestamp", "<u8"), ("zero", "<u8")])


@dataclass(frozen=True)
class ClickRecord:
    trigger_index: int
    channel: int
    timestamp_ps: int


class ClickStream:
    """Column-stored click records ordered by trigger, then time."""

    def __init__(self, trigger=(), channel=(), timestamp_ps=(), header=None):
        self.trigger = np.asarray(trigger, dtype=np.uint64)
        self.channel = np.asarray(channel, dtype=np.uint8)
        self.timestamp_ps = np.asarray(timestamp_ps, dtype=np.uint64)
        self.header = dict(header or {})
        n = len(self.trigger)
        if len(self.channel) != n or len(self.timestamp_ps) != n:
            raise DomainError("click columns differ in length")
        if n and np.any(self.channel > SYNC):
            raise DomainError("invalid channel value")
        if n > 1:
            tr = self.trigger
            same = tr[1:] == tr[:-1]
            if np.any(tr[1:] < tr[:-1]):
                raise DomainError("records are not ordered by trigger index")
            if np.any(same & (self.timestamp_ps[1:] < self.timestamp_ps[:-1])):
                raise DomainError("timestamps decrease within a trigger")

    @classmethod
    def from_records(cls, records, header=None):
        recs = list(records)
        return cls([r.trigger_index for r in recs], [r.channel for r in recs],
                   [r.timestamp_ps for r in recs], header)

    def __len__(self):
        return len(self.trigger)

    def __iter__(self):
        for t, c, s in zip(self.trigger.tolist(), self.channel.tolist(), self.timestamp_ps.tolist()):
            yield ClickRecord(t, c, s)

    def __eq__(self, other):
        return (isinstance(other, ClickStream) and self.header == other.header
                and np.array_equal(self.trigger, other.trigger)
                and np.array_equal(self.channel, other.channel)
                and np.array_equal(self.timestamp_ps, other.timestamp_ps))

    @property
    def n_triggers(self):
        return int(self.header.get("n_triggers", 0))


# ---------------------------------------------------------------- sampling


@dataclass
class _Propagators:
    sub: np.ndarray  # indices of D5/2 + P3/2 in the 18-level basis
    steps: list  # per-step non-unitary propagators (dim x dim)
    dt: float
    branch_p: np.ndarray  # (S1/2, D5/2, D3/2) probabilities
    M: np.ndarray  # detection operator on the subspace
    P: np.ndarray  # P3/2 projector on the subspace
    jumps_d: list  # D5/2 jump operators on the subspace
    eta: float


def _propagators(sc: Scenario, dt: float, n_steps: int) -> _Propagators:
    gen = build_generator(sc)
    sub = np.array(manifold_indices(Manifold.D52) + manifold_indices(Manifold.P32))
    gamma = TWO_PI_MHZ * sc.decay.gamma_mhz
    n = len(sub)
    P = np.zeros((n, n))
    P[6:, 6:] = np.eye(4)
    H0 = gen.H0[np.ix_(sub, sub)] - 0.5j * gamma * P
    Hd = gen.Hd[np.ix_(sub, sub)]
    env = sc.drive.envelope
    fs = env.value((np.arange(n_steps) + 0.5) * dt)
    cache, steps = {}, []
    for f in np.asarray(fs, float):
        U = cache.get(f)
        if U is None:
            U = cache[f] = expm(-1j * (H0 + f * Hd) * dt)
        steps.append(U)
    b = sc.decay.branching
    jumps_d = [L[np.ix_(sub, sub)] for (man, q), L in gen.collapse.items() if man is Manifold.D52]
    return _Propagators(sub, steps, dt,
                        np.array([b[Manifold.S12], b[Manifold.D52], b[Manifold.D32]]),
                        gen.M[np.ix_(sub, sub)], P, jumps_d, sc.geometry.detector_efficiency)


class _Uniforms:
    """Per-trigger uniform draws, extended lazily from the trigger's own stream."""

    def __init__(self, seed, triggers, k=24):
        self.seed, self.k = int(seed), k
        self.gens = {}
        self.buf = np.empty((len(triggers), k))
        self.jitter = np.empty(len(triggers))
        for i, trig in enumerate(triggers):
            g = np.random.default_rng([self.seed, int(trig)])
            self.buf[i] = g.random(k)
            self.jitter[i] = g.standard_normal()
            self.gens[i] = g
        self.pos = np.zeros(len(triggers), dtype=np.int64)

    def take(self, rows):
        out = np.empty(len(rows))
        for j, r in enumerate(rows):
            if self.pos[r] >= self.k:
                out[j] = self.gens[r].random()
            else:
                out[j] = self.buf[r, self.pos[r]]
            self.pos[r] += 1
        return out

    def take_vec(self, rows):
        rows = np.asarray(rows)
        if rows.size == 0:
            return np.empty(0)
        if np.all(self.pos[rows] < self.k):
            out = self.buf[rows, self.pos[rows]]
            self.pos[rows] += 1
            return out
        return self.take(rows)


def _abs2(psi):
    return psi.real ** 2 + psi.imag ** 2


def _initial_states(sc, props):
    """Normalized prepared state and its orthogonal partner, on the subspace."""
    s = sc.initial
    sub = list(props.sub)
    try:
        ia, ib = sub.index(INDEX[s.level_a]), sub.index(INDEX[s.level_b])
    except ValueError:
        raise DomainError("click sampling needs the initial superposition inside D5/2") from None
    ph = complex(math.cos(s.phi_D0), math.sin(s.phi_D0))
    good = np.zeros(len(sub), complex)
    bad = np.zeros(len(sub), complex)
    good[ia], good[ib] = math.sqrt(s.rho1), ph * math.sqrt(s.rho2)
    bad[ia], bad[ib] = math.sqrt(s.rho2), -ph * math.sqrt(s.rho1)
    return good, bad


def _no_jump_path(props, psi0):
    """Unnormalized no-jump states at every step boundary and their squared norms."""
    out = np.empty((len(props.steps) + 1, len(psi0)), complex)
    out[0] = psi0
    for k, U in enumerate(props.steps):
        out[k + 1] = U @ out[k]
    return out, _abs2(out).sum(axis=1)


def _jump_time(k, n0, n1, r, dt):
    # log-linear interpolation of the norm inside step k
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.log(n0 / r) / np.log(n0 / np.maximum(n1, 1e-300))
    frac = np.where(n0 > n1, frac, 1.0)
    return (k + np.clip(frac, 0.0, 1.0)) * dt


class _Jumps:
    """Applies jumps to a batch; collects clicks and returns the D5/2 re-entries."""

    def __init__(self, props, uniforms):
        self.p, self.u = props, uniforms
        self.cum = np.cumsum(props.branch_p)
        self.rows, self.times = [], []

    def __call__(self, rows, t_jump, states):
        p, u = self.p, self.u
        branch = np.searchsorted(self.cum, u.take_vec(rows) * self.cum[-1], side="right")
        s_sel = np.flatnonzero(branch == 0)
        if s_sel.size:
            st = states[s_sel]
            pop_p = _abs2(st[:, 6:]).sum(axis=1)
            m = np.einsum("ij,jk,ik->i", st.conj(), p.M, st).real
            det = u.take_vec(rows[s_sel]) < p.eta * m / np.maximum(pop_p, 1e-300)
            self.rows.append(rows[s_sel][det])
            self.times.append(t_jump[s_sel][det])
        d_sel = np.flatnonzero(branch == 1)
        if not d_sel.size:
            return d_sel, states[:0]
        st = states[d_sel]
        new = np.stack([st @ L.T for L in p.jumps_d], axis=1)
        w = _abs2(new).sum(axis=2)
        cw = np.cumsum(w, axis=1)
        pick = u.take_vec(rows[d_sel]) * cw[:, -1]
        q = np.minimum((cw < pick[:, None]).sum(axis=1), len(p.jumps_d) - 1)
        idx = np.arange(len(d_sel))
        nxt = new[idx, q] / np.sqrt(np.maximum(w[idx, q], 1e-300))[:, None]
        return d_sel, nxt

    def result(self):
        rows = np.concatenate(self.rows) if self.rows else np.empty(0, np.int64)
        times = np.concatenate(self.times) if self.times else np.empty(0)
        return rows, times


def _run_chunk(sc, props, triggers, seed, t_max, jitter_sigma_ns):
    """Click trigger ids and times (ns) for one chunk of triggers."""
    n = len(triggers)
    u = _Uniforms(seed, triggers)
    dt, n_steps = props.dt, len(props.steps)
    all_rows = np.arange(n)
    eps = sc.prep_infidelity
    wrong = u.take_vec(all_rows) < eps if eps > 0 else np.zeros(n, bool)
    thresh = u.take_vec(all_rows)
    jumps = _Jumps(props, u)

    # first jump: every trigger in a group follows the same no-jump path
    pend_rows, pend_step, pend_psi = [], [], []
    for flag, psi0 in zip((False, True), _initial_states(sc, props)):
        rows = all_rows[wrong == flag]
        if not rows.size:
            continue
        path, norms = _no_jump_path(props, psi0)
        r = thresh[rows]
        j = np.searchsorted(-norms, -r, side="right")  # first boundary with norm < r
        hit = j <= n_steps
        rows, j, r = rows[hit], j[hit], r[hit]
        t_jump = _jump_time(j - 1, norms[j - 1], norms[j], r, dt)
        d_sel, nxt = jumps(rows, t_jump, path[j])
        pend_rows.append(rows[d_sel])
        pend_step.append(j[d_sel])
        pend_psi.append(nxt)

    # trajectories that fell back into D5/2 are followed step by step
    p_rows = np.concatenate(pend_rows)
    p_step = np.concatenate(pend_step)
    p_psi = np.concatenate(pend_psi) if pend_psi else np.empty((0, len(props.sub)), complex)
    if p_rows.size:
        thresh[p_rows] = u.take_vec(p_rows)
        act_rows = np.empty(0, np.int64)
        act_psi = np.empty((0, len(props.sub)), complex)
        act_norm = np.empty(0)
        for k in range(int(p_step.min()), n_steps):
            enter = p_step == k
            if np.any(enter):
                act_rows = np.concatenate([act_rows, p_rows[enter]])
                act_psi = np.concatenate([act_psi, p_psi[enter]])
                act_norm = np.concatenate([act_norm, np.ones(int(enter.sum()))])
            if not act_rows.size:
                if not np.any(p_step > k):
                    break
                continue
            new_psi = act_psi @ props.steps[k].T
            new_norm = _abs2(new_psi).sum(axis=1)
            hit = np.flatnonzero(new_norm < thresh[act_rows])
            keep = np.ones(len(act_rows), bool)
            if hit.size:
                rows = act_rows[hit]
                t_jump = _jump_time(k, act_norm[hit], new_norm[hit], thresh[rows], dt)
                d_sel, nxt = jumps(rows, t_jump, new_psi[hit])
                keep[hit] = False
                keep[hit[d_sel]] = True
                new_psi[hit[d_sel]] = nxt
                new_norm[hit[d_sel]] = 1.0
                thresh[rows[d_sel]] = u.take_vec(rows[d_sel])
            act_rows, act_psi, act_norm = act_rows[keep], new_psi[keep], new_norm[keep]

    rows, times = jumps.result()
    times = times + jitter_sigma_ns * u.jitter[rows]
    out_trig = np.asarray(triggers)[rows]
    # dark counts: uniform over the window, from each trigger's own stream
    if sc.dark_rate_per_ns > 0:
        dark_trig, dark_t = [], []
        for i, trig in enumerate(triggers):
            g = u.gens[i]
            k = g.poisson(sc.dark_rate_per_ns * t_max)
            if k:
                dark_trig.append(np.full(k, trig))
                dark_t.append(g.uniform(0.0, t_max, k))
        if dark_trig:
            out_trig = np.concatenate([out_trig] + dark_trig)
            times = np.concatenate([times] + dark_t)
    return out_trig, times


def sample_clicks(sc: Scenario, n_triggers: int, seed: int, dt_ns: float = 0.5,
                  jitter_fwhm_ps: float = 300.0, chunk: int = 20000, include_sync: bool = False,
                  t_max_ns: float | None = None, jobs: int = 1) -> ClickStream:
    """Quantum-jump click stream for ``n_triggers`` repetitions of the scenario."""
    if n_triggers < 1:
        raise DomainError("n_triggers must be >= 1")
    eta = sc.geometry.detector_efficiency
    if not 0.0 <= eta <= 1.0:
        raise ConfigurationError(f"detector efficiency must be in [0, 1], got {eta}",
                                 ["detector_efficiency"])
    if jitter_fwhm_ps < 0:
        raise ConfigurationError("jitter must be >= 0", ["jitter_fwhm_ps"])
    t_max = float(sc.grid.t_max_ns if t_max_ns is None else t_max_ns)
    n_steps = int(math.ceil(t_max / dt_ns))
    props = _propagators(sc, dt_ns, n_steps)
    sigma_ns = jitter_fwhm_ps * FWHM_TO_SIGMA * 1e-3
    bounds = [(a, min(a + chunk, n_triggers)) for a in range(0, n_triggers, chunk)]

    def work(ab):
        return _run_chunk(sc, props, np.arange(*ab, dtype=np.uint64), seed, t_max, sigma_ns)

    if jobs > 1 and len(bounds) > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(jobs) as ex:
            parts = list(ex.map(work, bounds))
    else:
        parts = [work(ab) for ab in bounds]
    trig = np.concatenate([p[0] for p in parts]).astype(np.uint64)
    ts = np.concatenate([p[1] for p in parts])
    ts_ps = np.round(np.clip(ts, 0.0, None) * 1e3).astype(np.uint64)
    ch = np.full(len(trig), DETECTOR_393, np.uint8)
    if include_sync:
        all_t = np.arange(n_triggers, dtype=np.uint64)
        trig = np.concatenate([all_t, trig])
        ts_ps = np.concatenate([np.zeros(n_triggers, np.uint64), ts_ps])
        ch = np.concatenate([np.full(n_triggers, SYNC, np.uint8), ch])
    order = np.lexsort((ch, ts_ps, trig))
    header = {"n_triggers": int(n_triggers), "seed": int(seed), "jitter_fwhm_ps": jitter_fwhm_ps,
              "bin_hint_ns": sc.grid.bin_ns, "t_max_ns": t_max}
    return ClickStream(trig[order], ch[order], ts_ps[order], header)


# ---------------------------------------------------------------- QBTT


def _header_bytes(header):
    return json.dumps(header, sort_keys=True, separators=(",", ":")).encode()


def encode_timetags(stream: ClickStream) -> bytes:
    hb = _header_bytes(stream.header)
    pre = MAGIC + struct.pack("<HI", VERSION, len(hb)) + hb
    n = len(stream)
    if n == 0:
        return pre
    trig, ts = stream.trigger, stream.timestamp_ps
    first = np.ones(n, bool)
    first[1:] = trig[1:] != trig[:-1]
    delta = ts.copy()
    delta[~first] = ts[~first] - ts[np.flatnonzero(~first) - 1]
    over = delta >= SENTINEL
    rec = np.zeros(n, _REC)
    rec["trigger"] = trig
    rec["channel"] = stream.channel
    rec["delta"] = np.where(over, SENTINEL, delta).astype(np.uint32)
    if not np.any(over):
        return pre + rec.tobytes()
    n_over = int(over.sum())
    rows = np.zeros((n + n_over, RECORD_SIZE), np.uint8)
    pos = np.arange(n) + np.concatenate([[0], np.cumsum(over)[:-1]])
    rows[pos] = rec.view(np.uint8).reshape(n, RECORD_SIZE)
    ext = np.zeros(n_over, _EXT)
    ext["timestamp"] = ts[over]
    rows[pos[over] + 1] = ext.view(np.uint8).reshape(n_over, RECORD_SIZE)
    return pre + rows.tobytes()


def decode_timetags(data: bytes) -> ClickStream:
    data = bytes(data)
    if len(data) < PREAMBLE:
        raise ParseError("truncated preamble", len(data))
    if data[:4] != MAGIC:
        raise ParseError(f"bad magic {data[:4]!r}", 0)
    version, hlen = struct.unpack_from("<HI", data, 4)
    if version != VERSION:
        raise ParseError(f"unsupported format version {version}", 4)
    if PREAMBLE + hlen > len(data):
        raise ParseError(f"header length {hlen} exceeds file size", 6)
    try:
        header = json.loads(data[PREAMBLE:PREAMBLE + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise ParseError(f"header is not valid JSON: {e}", PREAMBLE) from None
    if not isinstance(header, dict):
        raise ParseError("header must be a JSON object", PREAMBLE)
    base = PREAMBLE + hlen
    body = len(data) - base
    nrows, rem = divmod(body, RECORD_SIZE)
    if rem:
        raise ParseError(f"truncated record ({rem} of {RECORD_SIZE} bytes)", base + nrows * RECORD_SIZE)
    if nrows == 0:
        return ClickStream(header=header)
    raw = np.frombuffer(data, np.uint8, count=nrows * RECORD_SIZE, offset=base).reshape(nrows, RECORD_SIZE)
    rec = raw.view(_REC).reshape(nrows)

    def offset(i, field_at=0):
        return base + int(i) * RECORD_SIZE + field_at

    is_sent = rec["delta"] == SENTINEL
    # a sentinel inside an extension row is caught by the zero check below
    ext_rows = np.flatnonzero(is_sent) + 1
    if ext_rows.size and ext_rows[-1] >= nrows:
        raise ParseError("overflow record missing its extension", base + nrows * RECORD_SIZE)
    is_ext = np.zeros(nrows, bool)
    is_ext[ext_rows] = True
    if np.any(is_ext & is_sent):
        i = np.flatnonzero(is_ext & is_sent)[0]
        raise ParseError("extension record has nonzero padding", offset(i, 8))
    ext = raw[is_ext].view(_EXT).reshape(-1)
    bad = np.flatnonzero(ext["zero"] != 0)
    if bad.size:
        raise ParseError("extension record has nonzero padding", offset(ext_rows[bad[0]], 8))
    main = ~is_ext
    main_idx = np.flatnonzero(main)
    m = rec[main]
    bad = np.flatnonzero(np.any(m["pad"] != 0, axis=1))
    if bad.size:
        raise ParseError("nonzero pad bytes", offset(main_idx[bad[0]], 9))
    bad = np.flatnonzero(m["channel"] > SYNC)
    if bad.size:
        raise ParseError(f"invalid channel {int(m['channel'][bad[0]])}", offset(main_idx[bad[0]], 8))
    trig = m["trigger"].astype(np.uint64)
    bad = np.flatnonzero(trig[1:] < trig[:-1])
    if bad.size:
        raise ParseError("trigger index decreases", offset(main_idx[bad[0] + 1]))
    n = len(m)
    vals = m["delta"].astype(np.uint64)
    sent_main = m["delta"] == SENTINEL
    vals[sent_main] = ext["timestamp"]
    first = np.ones(n, bool)
    first[1:] = trig[1:] != trig[:-1]
    reset = first | sent_main
    seg = np.cumsum(reset) - 1
    starts = np.flatnonzero(reset)
    c = np.cumsum(vals, dtype=np.uint64)
    c0 = c[starts] - vals[starts]
    ts = c - c0[seg]
    dec = np.flatnonzero(~first[1:] & (ts[1:] < ts[:-1]))
    if dec.size:
        i = main_idx[dec[0] + 1]
        raise ParseError("timestamp decreases within a trigger", offset(i + 1 if sent_main[dec[0] + 1] else i))
    return ClickStream(trig, m["channel"].copy(), ts, header)


def write_timetags(stream: ClickStream, sink) -> int:
    """Write to a path or binary file object; returns the byte count."""
    data = encode_timetags(stream)
    if hasattr(sink, "write"):
        sink.write(data)
    else:
        with open(sink, "wb") as fh:
            fh.write(data)
    return len(data)


def read_timetags(source) -> ClickStream:
    if hasattr(source, "read"):
        return decode_timetags(source.read())
    with open(source, "rb") as fh:
        return decode_timetags(fh.read())


# ---------------------------------------------------------------- histograms


@dataclass
class Histogram:
    bin_width_ns: float
    edges_ns: np.ndarray
    counts: np.ndarray
    total_triggers: int
    metadata: dict = field(default_factory=dict)

    @property
    def centers_ns(self):
        return 0.5 * (self.edges_ns[:-1] + self.edges_ns[1:])

    def to_csv(self, sink=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t_ns", "counts"])
        for t, c in zip(self.centers_ns, self.counts):
            w.writerow([f"{t:.6f}", int(c)])
        text = buf.getvalue()
        if sink is not None:
            with open(sink, "w") as fh:
                fh.write(text)
        return text

    def __add__(self, other: "Histogram"):
        if not np.array_equal(self.edges_ns, other.edges_ns):
            raise DomainError("histograms have different binning")
        meta = {"dropped": self.metadata.get("dropped", 0) + other.metadata.get("dropped", 0)}
        return Histogram(self.bin_width_ns, self.edges_ns, self.counts + other.counts,
                         self.total_triggers + other.total_triggers, meta)


def build_histogram(stream: ClickStream, bin_width_ns: float = 2.0, window=None) -> Histogram:
    """Trigger-relative detector_393 counts in [window[0], window[1]) with the given bin width."""
    if not bin_width_ns >= 0.001:
        raise ConfigurationError("bin width must be >= 0.001 ns", ["bin_ns"])
    sel = stream.channel == DETECTOR_393
    t = stream.timestamp_ps[sel].astype(np.float64) * 1e-3
    if window is None:
        hi = float(stream.header.get("t_max_ns", t.max() if t.size else bin_width_ns))
        window = (0.0, hi)
    lo, hi = float(window[0]), float(window[1])
    nb = max(int(math.ceil((hi - lo) / bin_width_ns - 1e-9)), 1)
    edges = lo + bin_width_ns * np.arange(nb + 1)
    idx = np.floor((t - lo) / bin_width_ns).astype(np.int64)
    inside = (t >= lo) & (idx < nb) & (t < hi + 1e-12)
    counts = np.bincount(idx[inside], minlength=nb).astype(np.uint64)
    meta = {"dropped": int((~inside).sum())}
    for k in ("scenario_hash", "seed"):
        if k in stream.header:
            meta[k] = stream.header[k]
    return Histogram(bin_width_ns, edges, counts, stream.n_triggers, meta)


def read_histogram_csv(path) -> tuple[np.ndarray, np.ndarray]:
    """(t_ns, values) from a two-column CSV with a header row; row numbers in errors."""
    from .errors import AlignmentError
    t, y = [], []
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise AlignmentError(f"{path}: empty file")
    for i, row in enumerate(rows[1:], start=2):
        if len(row) < 2:
            raise AlignmentError(f"{path}: row {i} has {len(row)} columns")
        try:
            t.append(float(row[0]))
            y.append(float(row[1]))
        except ValueError:
            raise AlignmentError(f"{path}: row {i} is not numeric") from None
    return np.array(t), np.array(y)
