"""Support-function algebra: width, parity split, Minkowski sums, convexity
certificates, volume, homothety fitting, and the JSON body format.

Zonal oracle used below: for h depending only on the polar angle, the
support matrix in the (theta-hat, phi-hat) frame is
diag(h + h'', h + cot(theta) h'). The frozen constants were computed with
sympy from that reduction (see the repeated values in test comments).
"""

import json
import math

import numpy as np
import pytest

import widthbright as wb
from widthbright import (
    SupportFunction, NotConvexError,
    ball, basis_index, make_basis, width, central_symmetral, odd_part,
    minkowski_sum, certify_convex, volume, homothety_fit,
)
from widthbright.body import support_values, scale, body_to_spec, body_from_spec
from widthbright.sphere import basis_values

FOUR_PI = 4.0 * math.pi


def harmonic(l, m, coeff=1.0, lmax=None, extra=None):
    lmax = max([l, lmax or 0] + [le for le, _, _ in extra or []])
    coeffs = np.zeros((lmax + 1) ** 2)
    coeffs[0] = 2.0 * math.sqrt(math.pi)  # the constant 1
    coeffs[basis_index(l, m)] = coeff
    for le, me, ce in extra or []:
        coeffs[basis_index(le, me)] = ce
    return SupportFunction(coeffs, lmax)


def pure_harmonic(l, m, coeff=1.0):
    coeffs = np.zeros((l + 1) ** 2)
    coeffs[basis_index(l, m)] = coeff
    return SupportFunction(coeffs, l)


# ---------------------------------------------------------------------------
# width

def test_width_of_ball(grid32):
    assert np.abs(width(ball(1.0), grid32) - 2.0).max() < 1e-12


def test_width_ignores_odd_part(grid32):
    h = harmonic(3, 1, 0.1)
    assert np.abs(width(h, grid32) - 2.0).max() < 1e-12


def test_width_doubles_even_part(grid32):
    h = harmonic(2, 0, 0.1)
    y20 = basis_values(make_basis(2), grid32.nodes)[:, basis_index(2, 0)]
    np.testing.assert_allclose(width(h, grid32), 2.0 + 0.2 * y20, atol=1e-12)


def test_width_equals_twice_symmetral_values(grid32):
    rng = np.random.default_rng(4)
    h = SupportFunction(rng.standard_normal(49) * 0.05 + np.eye(49)[0] * 4.0, 6)
    np.testing.assert_allclose(
        width(h, grid32), 2.0 * support_values(central_symmetral(h), grid32),
        atol=1e-12)


# ---------------------------------------------------------------------------
# parity split

def test_symmetral_of_ball_is_ball():
    assert np.array_equal(central_symmetral(ball(1.0)).coeffs, ball(1.0).coeffs)


def test_symmetral_removes_odd_terms():
    h = harmonic(3, 2, 0.3)
    s = central_symmetral(h)
    assert s.coeffs[basis_index(3, 2)] == 0.0
    assert s.coeffs[0] == h.coeffs[0]


def test_symmetral_keeps_even_terms():
    h = harmonic(2, 0, 0.2, extra=[(3, 0, 0.4)])
    s = central_symmetral(h)
    assert s.coeffs[basis_index(2, 0)] == 0.2
    assert s.coeffs[basis_index(3, 0)] == 0.0


def test_odd_part_examples():
    assert np.all(odd_part(ball(2.0)).coeffs == 0.0)
    h = harmonic(3, 0, 0.7)
    p = odd_part(h)
    assert p.coeffs[basis_index(3, 0)] == 0.7
    assert p.coeffs[0] == 0.0


def test_parity_split_reconstructs_exactly():
    rng = np.random.default_rng(8)
    h = SupportFunction(rng.standard_normal(36), 5)
    assert np.array_equal(
        central_symmetral(h).coeffs + odd_part(h).coeffs, h.coeffs)


# ---------------------------------------------------------------------------
# Minkowski sum

def test_minkowski_sum_of_balls():
    s = minkowski_sum(ball(1.5), ball(0.5))
    np.testing.assert_allclose(s.coeffs, ball(2.0).coeffs, rtol=1e-15)
    assert s.closed_form == "ball:2.0"


def test_minkowski_sum_with_zero():
    h = harmonic(2, 1, 0.05)
    zero = SupportFunction(np.zeros(1), 0)
    assert np.array_equal(minkowski_sum(h, zero).coeffs, h.coeffs)


def test_minkowski_sum_cancels_odd_parts():
    a = harmonic(3, 0, 0.2)
    b = harmonic(3, 0, -0.2)
    s = minkowski_sum(a, b)
    assert s.coeffs[basis_index(3, 0)] == 0.0
    assert abs(s.coeffs[0] - 2.0 * 2.0 * math.sqrt(math.pi)) < 1e-15


def test_minkowski_sum_pads_shorter_body():
    s = minkowski_sum(ball(1.0), harmonic(4, -2, 0.01))
    assert s.lmax == 4
    assert s.coeffs[basis_index(4, -2)] == 0.01


# ---------------------------------------------------------------------------
# convexity certificate

def test_certificate_of_ball(grid32):
    cert = certify_convex(ball(1.0), grid32)
    assert cert.convex
    assert abs(cert.min_eigenvalue - 1.0) < 1e-10
    assert abs(cert.det_min - 1.0) < 1e-10


def test_certificate_superadditivity(grid32):
    # adding a certified body to ball(r) keeps det >= r^2: the summed
    # support matrix is r I plus a PSD matrix
    for r in (0.3, 1.0):
        for seed in range(20):
            h1 = wb.random_convex(seed, 6, grid32)
            cert = certify_convex(minkowski_sum(ball(r), h1), grid32)
            assert cert.det_min >= r * r - 1e-6


def test_large_odd_perturbation_is_not_convex(grid32):
    # sympy zonal oracle for h = 1 + 5 Y30: the minimum eigenvalue over the
    # 32 Gauss-Legendre rings is -17.65346217525563
    h = harmonic(3, 0, 5.0)
    cert = certify_convex(h, grid32)
    assert not cert.convex
    assert cert.min_eigenvalue < 0.0
    assert abs(cert.min_eigenvalue - (-17.65346217525563)) < 1e-9
    assert 0 <= cert.node_of_min < grid32.n_nodes


def test_zonal_oracle_matrix_entries(grid32):
    # frozen from the zonal reduction of Y30 at the first ring of the
    # symmetrized 32-point Gauss-Legendre rule
    from widthbright.sphere import matrix_entries
    c = np.zeros(16)
    c[basis_index(3, 0)] = 1.0
    ent0 = matrix_entries(grid32, make_basis(3), c)[0]
    np.testing.assert_allclose(
        ent0, [3.6402026920967785, 0.0, 3.7012152024465323], atol=1e-12)


# ---------------------------------------------------------------------------
# volume

def test_volume_of_balls(grid32):
    assert abs(volume(ball(1.0), grid32) - FOUR_PI / 3.0) < 1e-8
    assert abs(volume(ball(2.0), grid32) - 8.0 * FOUR_PI / 3.0) < 1e-7


def test_volume_drops_below_symmetral_for_odd_part(grid32):
    rec = wb.constant_width_body(ball(1.0), pure_harmonic(3, 0), math.inf, grid32)
    v = volume(rec.resolved, grid32)
    assert v < FOUR_PI / 3.0 - 1e-6
    v0 = volume(central_symmetral(rec.resolved), grid32)
    assert v0 > v


def test_volume_refuses_non_convex(grid32):
    with pytest.raises(NotConvexError):
        volume(harmonic(3, 0, 5.0), grid32)


def test_symmetral_volume_dominates_for_random_bodies(grid32):
    for seed in range(20):
        h = wb.random_convex(seed, 6, grid32)
        assert volume(central_symmetral(h), grid32) >= volume(h, grid32) - 1e-8


# ---------------------------------------------------------------------------
# homothety fit

def test_homothety_fit_exact_model(grid32):
    h2 = ball(1.0)
    coeffs = np.zeros(4)
    coeffs[0] = 2.0 * 2.0 * math.sqrt(math.pi)
    coeffs[basis_index(1, 0)] = 0.3 * math.sqrt(4.0 * math.pi / 3.0)  # <(0,0,0.3),u>
    h1 = SupportFunction(coeffs, 1)
    lam, v, res = homothety_fit(h1, h2, grid32)
    assert abs(lam - 2.0) < 1e-10
    np.testing.assert_allclose(v, [0.0, 0.0, 0.3], atol=1e-10)
    assert res < 1e-10


def test_homothety_fit_identity(grid32):
    h = harmonic(2, 0, 0.05)
    lam, v, res = homothety_fit(h, h, grid32)
    assert abs(lam - 1.0) < 1e-10
    assert np.abs(v).max() < 1e-10
    assert res < 1e-10


def test_homothety_fit_detects_shape_difference(grid32):
    # best fit of 1 + 0.05 Y20 against the ball leaves the Y20 term, whose
    # weighted RMS is 0.05 / sqrt(4 pi) = 0.014104739588693908
    h1 = harmonic(2, 0, 0.05)
    lam, v, res = homothety_fit(h1, ball(1.0), grid32)
    assert res > 1e-3
    assert abs(res - 0.014104739588693908) < 1e-9


def test_homothety_fit_recovers_scale(grid32):
    h = harmonic(2, 2, 0.04)
    shift = np.zeros(9)
    shift[basis_index(1, 1)] = 0.2
    for alpha in (0.5, 1.0, 3.0):
        h1 = SupportFunction(alpha * h.coeffs + shift, 2)
        lam, v, res = homothety_fit(h1, h, grid32)
        assert abs(lam - alpha) < 1e-9
        assert res < 1e-9


def test_homothety_fit_rejects_zero_reference(grid32):
    with pytest.raises(ValueError):
        homothety_fit(ball(1.0), SupportFunction(np.zeros(4), 1), grid32)


# ---------------------------------------------------------------------------
# scaling and construction guards

def test_scale():
    h = scale(ball(1.0), 2.5)
    np.testing.assert_allclose(h.coeffs, ball(2.5).coeffs, rtol=1e-15)


def test_support_function_validates_inputs():
    with pytest.raises(ValueError):
        SupportFunction(np.zeros(5), 1)  # wrong length for lmax 1
    with pytest.raises(ValueError):
        SupportFunction(np.array([np.nan]), 0)


# ---------------------------------------------------------------------------
# JSON body format

def test_body_spec_roundtrip(tmp_path):
    h = harmonic(2, -1, 0.07, extra=[(3, 3, -0.02)])
    spec = body_to_spec(h)
    assert spec["basis"] == "real-sph-harm"
    assert spec["lmax"] == h.lmax
    assert len(spec["coeffs"]) == h.coeffs.size
    back = body_from_spec(spec)
    assert np.array_equal(back.coeffs, h.coeffs)

    path = tmp_path / "body.json"
    wb.save_body(ball(1.5), path)
    loaded = wb.load_body(path)
    assert np.array_equal(loaded.coeffs, ball(1.5).coeffs)
    assert loaded.closed_form == "ball:1.5"
    assert loaded.label == ball(1.5).label


def test_body_spec_coefficient_order():
    # (l, m) lexicographic, l ascending, m from -l to l: the degree-1
    # block sits at positions 1..3
    h = harmonic(1, -1, 0.5)
    spec = body_to_spec(h)
    assert spec["coeffs"][1] == 0.5


def test_body_from_spec_rejects_garbage():
    with pytest.raises(ValueError):
        body_from_spec({"basis": "other", "lmax": 0, "coeffs": [1.0]})
    with pytest.raises(ValueError):
        body_from_spec({"basis": "real-sph-harm", "lmax": 2, "coeffs": [1.0]})


def test_closed_form_consistency_is_checked(grid32):
    # a closed_form tag whose samples disagree with the coefficients beyond
    # the recorded truncation tolerance is refused on load
    spec = body_to_spec(ball(1.0))
    spec["coeffs"][0] *= 1.5
    with pytest.raises(ValueError):
        body_from_spec(spec)
