import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbeats.errors import DomainError, NumericError
from qbeats.geometry import (PATTERN_NORM, U_Q, CollectionGeometry, EmissionPattern,
                             analyzer_amplitudes, analyzer_vector, collection_visibility,
                             collection_weights, cone_nodes, dipole_intensity, point_weights,
                             solid_angle_fraction)


def _sphere(n=64):
    x, wx = np.polynomial.legendre.leggauss(n)
    theta = np.arccos(x)
    phi = np.linspace(0, 2 * np.pi, 2 * n, endpoint=False)
    T, P = np.meshgrid(theta, phi, indexing="ij")
    W = np.outer(wx, np.full(2 * n, np.pi / n))
    return T, P, W


def test_solid_angle_at_na_0p4():
    assert solid_angle_fraction(0.4) == pytest.approx(0.0417, abs=5e-5)
    assert solid_angle_fraction(0.0) == 0.0


def test_solid_angle_monotone_and_bounded():
    nas = np.linspace(0, 0.99, 50)
    vals = [solid_angle_fraction(x) for x in nas]
    assert np.all(np.diff(vals) > 0) and vals[-1] < 0.5


@pytest.mark.parametrize("na", [-0.1, 1.0, 1.5])
def test_solid_angle_rejects_bad_na(na):
    with pytest.raises(DomainError):
        solid_angle_fraction(na)


def test_cone_weights_sum_to_solid_angle():
    _, _, w = cone_nodes(0.4, 16)
    assert w.sum() / (4 * np.pi) == pytest.approx(solid_angle_fraction(0.4), rel=1e-12)


def test_analyzer_vectors_are_transverse_and_orthonormal():
    rng = np.random.default_rng(3)
    th, ph = rng.uniform(0, np.pi, 50), rng.uniform(0, 2 * np.pi, 50)
    k = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], -1)
    h, v = analyzer_vector(th, ph, "H"), analyzer_vector(th, ph, "v")
    assert np.allclose(np.sum(h * k, -1), 0) and np.allclose(np.sum(v * k, -1), 0)
    assert np.allclose(np.sum(h * v, -1), 0)
    assert np.allclose(np.linalg.norm(h, axis=-1), 1) and np.allclose(np.linalg.norm(v, axis=-1), 1)


def test_analyzer_rejects_unknown():
    with pytest.raises(DomainError):
        analyzer_vector(0.1, 0.2, "D")
    with pytest.raises(DomainError):
        CollectionGeometry(analyzer="X")


@pytest.mark.parametrize("q", [-1, 0, 1])
def test_each_q_pattern_has_unit_power_over_sphere(q):
    T, P, W = _sphere()
    pat = EmissionPattern({q: 1.0})
    tot = sum(np.sum(W * dipole_intensity(pat, T, P, a)) for a in ("H", "V"))
    assert tot == pytest.approx(1.0, rel=1e-12)


def test_pi_pattern_at_detector_is_h_only():
    pat = EmissionPattern({0: 1.0})
    assert dipole_intensity(pat, np.pi / 2, 0.0, "H") == pytest.approx(PATTERN_NORM)
    assert dipole_intensity(pat, np.pi / 2, 0.0, "V") == pytest.approx(0.0, abs=1e-30)
    # sin^2 shape: no emission along the field
    assert dipole_intensity(pat, 0.0, 0.0, "H") == pytest.approx(0.0, abs=1e-30)


def test_sigma_pattern_at_detector_splits_half_and_half():
    for q in (-1, 1):
        pat = EmissionPattern({q: 1.0})
        assert dipole_intensity(pat, np.pi / 2, 0.0, "V") == pytest.approx(PATTERN_NORM / 2)
        assert dipole_intensity(pat, np.pi / 2, 0.0, "H") == pytest.approx(0.0, abs=1e-30)


def test_v_projection_of_sigma_pair_is_difference():
    a = analyzer_amplitudes(np.pi / 2, 0.0, "V")
    # (sigma+ - sigma-)/sqrt(2) up to a global phase
    ratio = a[2] / a[0]
    assert ratio == pytest.approx(-1.0)
    assert abs(a[2]) == pytest.approx(1 / math.sqrt(2))


def test_collection_weights_hermitian_and_bounded():
    W = collection_weights(0.4, "V")
    assert np.allclose(W, W.conj().T)
    assert np.all(np.linalg.eigvalsh(W) >= -1e-15)
    Wh = collection_weights(0.4, "H")
    total = np.trace(W + Wh).real / 3
    assert total == pytest.approx(solid_angle_fraction(0.4), rel=1e-10)


def test_collection_weights_small_na_tends_to_point_detector():
    na = 0.01
    W = collection_weights(na, "V", order=8)
    omega = 4 * np.pi * solid_angle_fraction(na)
    assert np.allclose(W / omega, point_weights("V"), atol=1e-4)


def test_collection_weights_convergence_check():
    with pytest.raises(NumericError):
        collection_weights(0.95, "V", order=1, tol=1e-12)


def test_v_visibility_is_sqrt_one_minus_na_squared():
    for na in (0.0, 0.1, 0.4, 0.7, 0.9):
        assert collection_visibility("V", na) == pytest.approx(math.sqrt(1 - na * na), rel=1e-9)
    assert collection_visibility("V", 0.4) == pytest.approx(0.9165, abs=1e-4)


def test_lambda_visibility_is_aperture_independent():
    for na in (0.0, 0.4, 0.9):
        assert collection_visibility("lambda", na) == 1.0
    with pytest.raises(DomainError):
        collection_visibility("W", 0.4)


@settings(max_examples=40, deadline=None)
@given(re=st.lists(st.floats(-1, 1), min_size=3, max_size=3),
       im=st.lists(st.floats(-1, 1), min_size=3, max_size=3))
def test_full_sphere_power_equals_total(re, im):
    amps = {q: complex(r, i) for q, r, i in zip((-1, 0, 1), re, im)}
    pat = EmissionPattern(amps)
    T, P, W = _sphere(24)
    tot = sum(np.sum(W * dipole_intensity(pat, T, P, a)) for a in ("H", "V"))
    assert tot == pytest.approx(pat.total_power(), rel=1e-10, abs=1e-14)


def test_polarization_basis_orthonormal():
    M = np.array([U_Q[q] for q in (-1, 0, 1)])
    assert np.allclose(M.conj() @ M.T, np.eye(3))
