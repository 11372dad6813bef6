"""Level structure of the 40Ca+ ion: sublevels, Zeeman shifts, dipole channels.

Sign convention for Clebsch-Gordan coefficients is Condon-Shortley. A
channel ``lower -> upper`` with polarization index ``q`` carries the amplitude

    cgc = <J_lower m_lower; 1 q | J_upper m_upper>,   m_upper = m_lower + q

so that, for a fixed upper sublevel, the squared amplitudes of all its decay
channels into one lower manifold sum to one.  Only squared values and the
relative sign inside one interference pair are observable.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import ConfigurationError, DomainError

# Bohr magneton over Planck constant, MHz per gauss.
MU_B_OVER_H = 1.3996245


class Manifold(enum.Enum):
    S12 = "S1/2"
    P12 = "P1/2"
    D32 = "D3/2"
    D52 = "D5/2"
    P32 = "P3/2"

    @property
    def J(self) -> Fraction:
        return _QUANTUM_NUMBERS[self][2]

    @property
    def L(self) -> int:
        return _QUANTUM_NUMBERS[self][0]

    @property
    def dim(self) -> int:
        return int(2 * self.J + 1)

    @classmethod
    def parse(cls, name) -> "Manifold":
        if isinstance(name, cls):
            return name
        key = str(name).replace("_", "").replace("/", "").upper()
        for m in cls:
            if m.value.replace("/", "").upper() == key or m.name == key:
                return m
        raise ConfigurationError(f"unknown manifold {name!r}")


# (L, S, J)
_QUANTUM_NUMBERS = {
    Manifold.S12: (0, Fraction(1, 2), Fraction(1, 2)),
    Manifold.P12: (1, Fraction(1, 2), Fraction(1, 2)),
    Manifold.D32: (2, Fraction(1, 2), Fraction(3, 2)),
    Manifold.D52: (2, Fraction(1, 2), Fraction(5, 2)),
    Manifold.P32: (1, Fraction(1, 2), Fraction(3, 2)),
}


def lande_g(manifold: Manifold) -> Fraction:
    """LS-coupling Lande factor with g_s = 2."""
    L, S, J = _QUANTUM_NUMBERS[manifold]
    return 1 + (J * (J + 1) + S * (S + 1) - L * (L + 1)) / (2 * J * (J + 1))


@dataclass(frozen=True, order=True)
class Sublevel:
    manifold: Manifold
    m: Fraction

    def __post_init__(self):
        m = Fraction(self.m).limit_denominator(2)
        if m.denominator != 2 or abs(m) > self.manifold.J:
            raise DomainError(f"m={self.m} not allowed in {self.manifold.value}")
        object.__setattr__(self, "m", m)

    def __str__(self):
        sign = "+" if self.m > 0 else "-"
        return f"{self.manifold.value},{sign}{abs(self.m)}"


def sublevels(manifold: Manifold) -> list[Sublevel]:
    J = manifold.J
    return [Sublevel(manifold, -J + k) for k in range(manifold.dim)]


MANIFOLD_ORDER = (Manifold.S12, Manifold.P12, Manifold.D32, Manifold.D52, Manifold.P32)

# The 18-level basis used by the density-matrix code, in this order.
BASIS: tuple[Sublevel, ...] = tuple(s for man in MANIFOLD_ORDER for s in sublevels(man))
INDEX = {s: i for i, s in enumerate(BASIS)}


def level(manifold, m) -> Sublevel:
    return Sublevel(Manifold.parse(manifold), Fraction(m).limit_denominator(2))


def manifold_indices(manifold: Manifold) -> list[int]:
    return [INDEX[s] for s in sublevels(manifold)]


@dataclass(frozen=True)
class ZeemanConfig:
    b_gauss: float
    mu_b_over_h: float = MU_B_OVER_H
    g_factors: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.b_gauss >= 0) or not math.isfinite(self.b_gauss):
            raise ConfigurationError(f"magnetic field must be >= 0 G, got {self.b_gauss}",
                                     ["b_gauss"])
        g = {m: float(lande_g(m)) for m in Manifold}
        for k, v in dict(self.g_factors).items():
            g[Manifold.parse(k)] = float(v)
        if g[Manifold.D52] != 1.2:
            raise ConfigurationError("g(D5/2) is fixed to 6/5", ["g_factors"])
        object.__setattr__(self, "g_factors", g)

    def g(self, manifold) -> float:
        try:
            return self.g_factors[Manifold.parse(manifold)]
        except KeyError:
            raise ConfigurationError(f"unknown manifold {manifold!r}") from None


def larmor_frequency(cfg: ZeemanConfig, manifold, delta_m) -> float:
    """Splitting in MHz between sublevels ``delta_m`` apart in ``manifold``."""
    return cfg.mu_b_over_h * float(delta_m) * cfg.g(manifold) * cfg.b_gauss


def zeeman_shift(cfg: ZeemanConfig, s: Sublevel) -> float:
    """Linear Zeeman shift of one sublevel in MHz."""
    return cfg.mu_b_over_h * cfg.g(s.manifold) * float(s.m) * cfg.b_gauss


def _is_half_integer(x) -> bool:
    return abs(2 * x - round(2 * x)) < 1e-9


def cgc(lower_J, m_lower, q, upper_J, m_upper) -> float:
    """<lower_J m_lower; 1 q | upper_J m_upper> for the dipole (rank-1) coupling.

    Closed-form j x 1 table; zero when ``m_upper != m_lower + q`` or when the
    triangle rule fails.
    """
    j1, m1, J, M = (float(x) for x in (lower_J, m_lower, upper_J, m_upper))
    if q not in (-1, 0, 1):
        raise DomainError(f"|q| must be <= 1, got {q}")
    for x in (j1, m1, J, M):
        if not _is_half_integer(x):
            raise DomainError(f"non-physical angular momentum value {x}")
    if j1 < 0 or J < 0 or abs(m1) > j1 + 1e-9 or abs(M) > J + 1e-9:
        raise DomainError(f"non-physical J/m: j={j1}, m={m1}, J={J}, M={M}")
    if abs((j1 - m1) - round(j1 - m1)) > 1e-9:
        raise DomainError(f"m={m1} incompatible with j={j1}")
    if abs((J - M) - round(J - M)) > 1e-9:
        raise DomainError(f"M={M} incompatible with J={J}")
    if abs(M - (m1 + q)) > 1e-9:
        return 0.0
    d = round(J - j1)
    if abs(J - j1 - d) > 1e-9 or abs(d) > 1 or (j1 == 0 and J == 0):
        return 0.0
    if d == 1:
        den = (2 * j1 + 1) * (2 * j1 + 2)
        if q == 1:
            v = math.sqrt((j1 + M) * (j1 + M + 1) / den)
        elif q == 0:
            v = math.sqrt((j1 - M + 1) * (j1 + M + 1) / ((2 * j1 + 1) * (j1 + 1)))
        else:
            v = math.sqrt((j1 - M) * (j1 - M + 1) / den)
    elif d == 0:
        if j1 == 0:
            return 0.0
        den = 2 * j1 * (j1 + 1)
        if q == 1:
            v = -math.sqrt(max((j1 + M) * (j1 - M + 1), 0.0) / den)
        elif q == 0:
            v = M / math.sqrt(j1 * (j1 + 1))
        else:
            v = math.sqrt(max((j1 - M) * (j1 + M + 1), 0.0) / den)
    else:
        den = 2 * j1 * (2 * j1 + 1)
        if q == 1:
            v = math.sqrt(max((j1 - M) * (j1 - M + 1), 0.0) / den)
        elif q == 0:
            v = -math.sqrt(max((j1 - M) * (j1 + M), 0.0) / (j1 * (2 * j1 + 1)))
        else:
            v = math.sqrt(max((j1 + M + 1) * (j1 + M), 0.0) / den)
    return v + 0.0


@dataclass(frozen=True)
class TransitionChannel:
    lower: Sublevel
    upper: Sublevel
    q: int
    cgc: float

    def __post_init__(self):
        if self.upper.m != self.lower.m + self.q:
            raise DomainError(f"selection rule violated: {self.lower} -> {self.upper}, q={self.q}")


# lower manifold -> upper manifold, with the optical wavelength in nm
DIPOLE_PAIRS = {
    (Manifold.S12, Manifold.P12): 397,
    (Manifold.S12, Manifold.P32): 393,
    (Manifold.D32, Manifold.P12): 866,
    (Manifold.D32, Manifold.P32): 850,
    (Manifold.D52, Manifold.P32): 854,
}


def channel_table(lower_manifold, upper_manifold) -> list[TransitionChannel]:
    """All nonzero dipole channels between two connected manifolds."""
    lo, up = Manifold.parse(lower_manifold), Manifold.parse(upper_manifold)
    if (lo, up) not in DIPOLE_PAIRS:
        raise DomainError(f"{lo.value} and {up.value} are not dipole connected (lower, upper)")
    out = []
    for s in sublevels(lo):
        for q in (-1, 0, 1):
            m_up = s.m + q
            if abs(m_up) > up.J:
                continue
            c = cgc(lo.J, s.m, q, up.J, m_up)
            if c != 0.0:
                out.append(TransitionChannel(s, Sublevel(up, m_up), q, c))
    return out


def find_channel(lower: Sublevel, upper: Sublevel) -> TransitionChannel:
    q = int(upper.m - lower.m)
    if abs(q) > 1:
        raise DomainError(f"no dipole channel {lower} -> {upper}")
    return TransitionChannel(lower, upper, q,
                             cgc(lower.manifold.J, lower.m, q, upper.manifold.J, upper.m))
