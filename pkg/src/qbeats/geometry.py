"""Dipole emission patterns, analyzer projection and finite-aperture collection.

Geometry: the quantization axis (magnetic field) is z, the collection
objective looks along +x.  Directions are given by polar angle ``theta``
measured from z and azimuth ``phi`` measured from x.  The analyzer H selects
polarization along -e_theta (parallel to the field for a detector at
theta = pi/2) and V selects e_phi.

A photon emitted on a Delta m = q transition has polarization vector
``u_q``; with u_0 = z and u_{+-1} = (x +- i y)/sqrt(2) the point-detector
projection onto V is (sigma+ - sigma-)/sqrt(2) up to a global phase, which is
the convention the amplitude model uses together with plain CGC weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import DomainError, NumericError

Q_VALUES = (-1, 0, 1)

_SQ2 = np.sqrt(2.0)
U_Q = {
    -1: np.array([1.0, -1.0j, 0.0]) / _SQ2,
    0: np.array([0.0, 0.0, 1.0], dtype=complex),
    1: np.array([1.0, 1.0j, 0.0]) / _SQ2,
}
_U = np.array([U_Q[q] for q in Q_VALUES])  # rows ordered as Q_VALUES

# normalizes each |u_q| dipole pattern to unit power over 4 pi
PATTERN_NORM = 3.0 / (8.0 * np.pi)

ANALYZERS = ("H", "V")


def solid_angle_fraction(na: float) -> float:
    """Fraction of 4 pi inside a collection cone of numerical aperture ``na`` (in vacuum)."""
    if not (0.0 <= na < 1.0):
        raise DomainError(f"numerical aperture must be in [0, 1), got {na}")
    return (1.0 - np.sqrt(1.0 - na * na)) / 2.0


def _check_analyzer(analyzer):
    a = str(analyzer).upper()
    if a not in ANALYZERS:
        raise DomainError(f"analyzer must be 'H' or 'V', got {analyzer!r}")
    return a


def analyzer_vector(theta, phi, analyzer):
    """Real unit vector(s) of the analyzer for emission direction(s) (theta, phi)."""
    a = _check_analyzer(analyzer)
    theta, phi = np.broadcast_arrays(np.asarray(theta, float), np.asarray(phi, float))
    if a == "H":
        # -e_theta
        return np.stack([-np.cos(theta) * np.cos(phi), -np.cos(theta) * np.sin(phi),
                         np.sin(theta)], axis=-1)
    return np.stack([-np.sin(phi), np.cos(phi), np.zeros_like(phi)], axis=-1)


def analyzer_amplitudes(theta, phi, analyzer):
    """Projection e . u_q for q = -1, 0, +1 (last axis)."""
    e = analyzer_vector(theta, phi, analyzer)
    return e @ _U.T


@dataclass
class EmissionPattern:
    """Coherent dipole emission with complex amplitude ``amplitudes[q]`` per q."""

    amplitudes: dict = field(default_factory=dict)

    def vector(self):
        return np.array([complex(self.amplitudes.get(q, 0.0)) for q in Q_VALUES])

    def total_power(self):
        return float(np.sum(np.abs(self.vector()) ** 2))


def dipole_intensity(pattern: EmissionPattern, theta, phi, analyzer) -> np.ndarray:
    """Analyzer-resolved far-field intensity per steradian.

    Patterns are normalized so that summing both analyzers over the full
    sphere returns ``pattern.total_power()``.
    """
    amp = analyzer_amplitudes(theta, phi, analyzer) @ pattern.vector()
    return PATTERN_NORM * np.abs(amp) ** 2


@dataclass(frozen=True)
class CollectionGeometry:
    numerical_aperture: float = 0.4
    analyzer: str = "H"
    detector_efficiency: float = 1.0
    order: int = 24

    def __post_init__(self):
        if not (0.0 <= self.numerical_aperture < 1.0):
            raise DomainError(f"numerical aperture must be in [0, 1), got {self.numerical_aperture}")
        object.__setattr__(self, "analyzer", _check_analyzer(self.analyzer))
        if not (0.0 <= self.detector_efficiency <= 1.0):
            from .errors import ConfigurationError
            raise ConfigurationError(
                f"detector efficiency must be in [0, 1], got {self.detector_efficiency}",
                ["detector_efficiency"])


def cone_nodes(na: float, order: int):
    """Gauss-Legendre product nodes over the cone around +x.

    Returns (theta, phi, weights) with weights summing to the cone solid angle.
    """
    if not (0.0 <= na < 1.0):
        raise DomainError(f"numerical aperture must be in [0, 1), got {na}")
    cos_a = np.sqrt(1.0 - na * na)
    x, wx = np.polynomial.legendre.leggauss(order)
    # cos(beta) in [cos_a, 1], gamma in [0, 2 pi)
    cb = 0.5 * (1.0 - cos_a) * x + 0.5 * (1.0 + cos_a)
    wcb = 0.5 * (1.0 - cos_a) * wx
    y, wy = np.polynomial.legendre.leggauss(2 * order)
    gamma = np.pi * (y + 1.0)
    wg = np.pi * wy
    cb, gamma = np.meshgrid(cb, gamma, indexing="ij")
    w = np.outer(wcb, wg)
    sb = np.sqrt(np.clip(1.0 - cb ** 2, 0.0, None))
    n = np.stack([cb, sb * np.cos(gamma), sb * np.sin(gamma)], axis=-1)
    theta = np.arccos(np.clip(n[..., 2], -1.0, 1.0))
    phi = np.arctan2(n[..., 1], n[..., 0])
    return theta.ravel(), phi.ravel(), w.ravel()


@lru_cache(maxsize=64)
def _collection_weights(na, analyzer, order):
    if na == 0.0:
        return np.zeros((3, 3), complex)
    theta, phi, w = cone_nodes(na, order)
    A = analyzer_amplitudes(theta, phi, analyzer)  # (n, 3)
    W = PATTERN_NORM * np.einsum("n,ni,nj->ij", w, A.conj(), A)
    return W


def collection_weights(na: float, analyzer: str, order: int = 24, tol: float = 1e-6) -> np.ndarray:
    """Hermitian 3x3 matrix W with collected power = a^H W a for q-amplitudes a.

    The quadrature order is checked against twice the order; a change larger
    than ``tol`` raises NumericError.
    """
    analyzer = _check_analyzer(analyzer)
    W = _collection_weights(float(na), analyzer, int(order))
    W2 = _collection_weights(float(na), analyzer, int(2 * order))
    err = float(np.max(np.abs(W - W2)))
    if err > tol:
        raise NumericError(f"cone quadrature not converged: order {order} vs {2 * order} "
                           f"differ by {err:.3e} > {tol:.1e}")
    return W2.copy()


def point_weights(analyzer: str, theta=np.pi / 2, phi=0.0) -> np.ndarray:
    """Per-steradian weights for an ideal point detector at (theta, phi)."""
    A = analyzer_amplitudes(theta, phi, analyzer)
    return PATTERN_NORM * np.outer(A.conj(), A)


def collection_visibility(scheme, na: float, order: int = 24) -> float:
    """Modulation depth of the collected beat signal for a balanced interfering pair.

    Lambda: the interference happens in absorption, so every detected photon
    comes from one modulated P3/2 population and the depth is 1 for any
    aperture.  V: the sigma+ and sigma- emission amplitudes interfere in the
    detector; with equal collected weights the depth is 2|W_-+|/(W_-- + W_++).
    """
    name = getattr(scheme, "name", scheme)
    name = str(name).lower()
    if not (0.0 <= na < 1.0):
        raise DomainError(f"numerical aperture must be in [0, 1), got {na}")
    if name in ("lambda", "l", "λ"):
        return 1.0
    if name != "v":
        raise DomainError(f"unknown scheme {scheme!r}")
    if na == 0.0:
        W = point_weights("V")
    else:
        W = collection_weights(na, "V", order)
    i, j = Q_VALUES.index(-1), Q_VALUES.index(1)
    return float(2.0 * abs(W[i, j]) / (W[i, i].real + W[j, j].real))
