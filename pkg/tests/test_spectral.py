from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from rnbody.configuration import maxwell_ring_config, three_body_config
from rnbody.equilibria import MINIMUM, SADDLE, find_planar_equilibria, newton_refine
from rnbody.errors import SingularBlockError
from rnbody.spectral import (
    EIGHT,
    PLANAR,
    all_bifurcations,
    block_M0,
    block_M1,
    collinear_nu_plus_squared,
    det_M0,
    det_M0_quartic,
    equilibrium_report,
    hermitian_eigvalsh,
    index_jump,
    morse_index_M0,
    morse_index_M1,
    planar_bifurcations,
    planar_resonance_values,
    rotated_M0_spectrum,
    routh_bound,
    sign_det_full_M0,
    spatial_bifurcation,
    three_body_closed_forms,
    triangular_onset_squared,
)


def l4(mu, alpha=2.0):
    return newton_refine(three_body_config(mu, alpha), [0.5 - mu, math.sqrt(3) / 2])


def test_block_M1_values():
    eq = l4(0.3)
    assert block_M1(eq, 1.0) == pytest.approx(0.0, abs=1e-13)
    assert block_M1(eq, 0.0) < 0
    assert block_M1(eq, 50.0) > 0


def test_block_M0_properties():
    eq = l4(0.5)
    np.testing.assert_allclose(block_M0(eq, 0.0), eq.hessian.planar, atol=1e-15)
    M = block_M0(eq, 0.7)
    np.testing.assert_allclose(M, M.conj().T, atol=1e-15)
    assert det_M0(eq, 1.0) == pytest.approx(27 / 16, rel=1e-12)
    assert np.all(np.linalg.eigvalsh(block_M0(eq, 100.0)) > 0)


@given(st.floats(0.0, 5.0), st.floats(0.01, 0.99))
@settings(max_examples=60, deadline=None)
def test_det_matches_quartic_and_numeric_eigs(lam, mu):
    eq = l4(mu)
    assert det_M0(eq, lam) == pytest.approx(det_M0_quartic(eq.T, eq.D, lam), abs=1e-10 * (1 + lam**4))
    lo, hi = hermitian_eigvalsh(block_M0(eq, lam))
    ref = np.linalg.eigvalsh(block_M0(eq, lam))
    np.testing.assert_allclose([lo, hi], ref, atol=1e-9 * (1 + lam**2))


@given(st.floats(0.0, 4.0))
@settings(max_examples=30, deadline=None)
def test_block_spectrum_invariant_under_rotation(lam):
    eq = newton_refine(three_body_config(0.3), [1.3, 0.2])
    np.testing.assert_allclose(
        np.linalg.eigvalsh(block_M0(eq, lam)), rotated_M0_spectrum(eq, lam), atol=1e-10 * (1 + lam**2)
    )


def test_morse_indices():
    cfg = three_body_config(0.01)
    eqs = find_planar_equilibria(cfg)
    saddle = next(e for e in eqs if e.kind == SADDLE)
    assert morse_index_M0(saddle, 0.0) == 1
    assert morse_index_M0(saddle, 1e3) == 0
    eq = l4(0.01)
    nu_p, nu_m = (b.nu for b in planar_bifurcations(eq).points)
    assert morse_index_M0(eq, 0.5 * (nu_p + nu_m)) == 1
    assert morse_index_M0(eq, 0.5 * nu_m) == 0
    with pytest.raises(SingularBlockError):
        morse_index_M0(eq, nu_p)
    with pytest.raises(SingularBlockError):
        morse_index_M1(eq, 1.0)


def test_saddle_sign_of_full_determinant():
    for e in find_planar_equilibria(three_body_config(0.3)):
        # the normal entry is negative, so sign(det M(0)) = -sigma
        assert sign_det_full_M0(e) == -e.sigma


def test_l4_small_mu_frequencies():
    eq = l4(0.01)
    pts = planar_bifurcations(eq).points
    assert [b.eta for b in pts] == [1, -1]
    assert pts[0].nu == pytest.approx(0.9633221090850995, abs=1e-12)
    assert pts[1].nu == pytest.approx(0.26834774854251253, abs=1e-12)
    hi, lo = triangular_onset_squared(0.01, 2.0)
    assert pts[0].nu ** 2 == pytest.approx(hi, abs=1e-12)
    assert pts[1].nu ** 2 == pytest.approx(lo, abs=1e-12)
    sp = spatial_bifurcation(eq)
    assert sp.symmetry == EIGHT and sp.eta == 1 and sp.nu == pytest.approx(1.0, abs=1e-12)
    assert sp.resonant_flags == ()


def test_above_routh_bound_is_empty():
    out = planar_bifurcations(l4(0.25))
    assert out.points == () and out.reason == "complex"


def test_routh_bound_value():
    b = routh_bound(2.0)
    assert b == pytest.approx((1 - math.sqrt(23 / 27)) / 2, abs=1e-15)
    assert b == pytest.approx(0.0385209, abs=1e-7)
    assert brentq(lambda m: 27 * m * (1 - m) - 1, 0.0, 0.5, xtol=1e-16) == pytest.approx(b, abs=1e-14)
    assert planar_bifurcations(l4(b - 1e-6)).reason == "two_frequencies"
    assert planar_bifurcations(l4(b + 1e-6)).reason == "complex"


def test_saddles_have_single_planar_point():
    for e in find_planar_equilibria(three_body_config(0.3)):
        if e.kind != SADDLE:
            continue
        pts = planar_bifurcations(e).points
        assert len(pts) == 1 and pts[0].eta == -1 and pts[0].symmetry == PLANAR
        b = 2 - e.T / 2
        assert pts[0].nu == pytest.approx(math.sqrt(b + math.sqrt(b * b - e.D)), rel=1e-13)
        assert spatial_bifurcation(e).eta == -1


def test_collinear_closed_forms():
    assert collinear_nu_plus_squared(4.0, 2.0) == pytest.approx(-1.0 + math.sqrt(28.0), abs=1e-14)
    mu = 0.5
    forms = three_body_closed_forms(mu, 2.0)
    eqs = find_planar_equilibria(three_body_config(mu))
    axis = sorted((e for e in eqs if abs(e.position[1]) < 1e-9), key=lambda e: e.position[0])
    for e, c in zip(axis, forms.collinear):
        assert e.position[0] == pytest.approx(c.x, abs=1e-12)
        assert planar_bifurcations(e).points[0].nu == pytest.approx(c.nu_plus, rel=1e-12)
        assert math.sqrt(e.nu1_squared) == pytest.approx(c.nu1, rel=1e-12)


def test_collinear_has_no_eight_resonance():
    for e in find_planar_equilibria(three_body_config(0.5)):
        if e.kind == SADDLE:
            assert spatial_bifurcation(e, mode_cutoff=10).resonant_flags == ()


@pytest.mark.parametrize("mu", np.linspace(0.002, 0.038, 10))
def test_definition_index_jumps_match_cases(mu):
    for e in find_planar_equilibria(three_body_config(mu)):
        for b in all_bifurcations(e):
            assert index_jump(e, 0 if b.symmetry == PLANAR else 1, b.nu) == b.eta


def test_planar_resonance_m2():
    # (4 - T)/sqrt(D) = 5/2 at T = 3 needs D = 0.16, i.e. mu (1 - mu) = 0.64/27
    c = 0.64 / 27
    mu = (1 - math.sqrt(1 - 4 * c)) / 2
    assert mu == pytest.approx(0.02429, abs=1e-5)
    eq = l4(mu)
    res = dict(planar_resonance_values(eq.T, eq.D))
    assert res[2] < 1e-9
    pts = planar_bifurcations(eq).points
    assert pts[0].nu / pts[1].nu == pytest.approx(2.0, abs=1e-9)


def resonant_mu(m):
    c = 4.0 / (27.0 * (m + 1.0 / m) ** 2)
    return 2 * c / (1 + math.sqrt(1 - 4 * c))


def test_double_root_and_resonance_accumulation():
    assert planar_resonance_values(3.0, 0.25)[0][1] == pytest.approx(0.0, abs=1e-15)
    mus = [resonant_mu(m) for m in range(2, 200)]
    assert all(a > b > 0 for a, b in zip(mus, mus[1:]))
    for m in (2, 7, 40):
        eq = l4(resonant_mu(m))
        assert dict(planar_resonance_values(eq.T, eq.D))[m] < 1e-9
    # resonant mass ratios accumulate at zero
    assert sum(mu < 1e-3 for mu in mus) > sum(1e-3 <= mu < 2e-3 for mu in mus) > 0


def test_ring_origin_spectrum():
    cfg, _ = maxwell_ring_config(3, 0.0, 2.0)
    eq = newton_refine(cfg, [0.01, 0.0])
    rep = equilibrium_report(eq)
    # D2V(0) = lam I with lam > 1 leaves no real planar onset
    assert eq.hessian.planar[0, 0] > 1
    assert rep["planar_reason"] == "complex"
    assert rep["bifurcations"][0]["symmetry"] == EIGHT
    assert rep["bifurcations"][0]["nu"] ** 2 == pytest.approx(3 * math.sqrt(3), rel=1e-12)
