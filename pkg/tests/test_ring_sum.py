from __future__ import annotations

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rnbody.errors import ParameterDomainError
from rnbody.ring_sum import (
    RingSumQuery,
    direct_sum_S,
    direct_sum_S_phi,
    extended_S,
    integral_S,
    integral_S_phi,
    ring_sum,
    ring_sum_phi,
    ringsum_table,
    write_ringsum_csv,
)

# values from a 30-digit mpmath evaluation of the direct sum
MP_ORACLE = [
    ((3, 1.0, 0.5, 0.3), 3.376523048922176523, -0.77233562946645603494),
    ((7, 1.5, 0.9, 0.0), 36.167532367813464817, 0.0),
    ((3, 1.0, 2.0, 0.3), 1.6882615244610882615, -0.38616781473322801747),
    ((4, 0.05, 0.5, 0.2), 4.0029562554868455648, -0.010310248075415998792),
    ((4, 1.95, 0.5, 0.2), 5.6918740865490861028, -2.1269955225536405738),
    ((5, 0.5, 0.7, 1.0), 5.2242914428610366281, 0.81425905131355766138),
]


def test_direct_sum_hand_values():
    assert direct_sum_S(RingSumQuery(2, 1.0, 0.5, 0.0)) == pytest.approx(8 / 3, rel=1e-15)
    assert direct_sum_S(RingSumQuery(2, 1.0, 2.0, 0.0)) == pytest.approx(4 / 3, rel=1e-15)
    assert direct_sum_S(RingSumQuery(9, 1.3, 1e-9, 0.4)) == pytest.approx(9.0, rel=1e-8)


@pytest.mark.parametrize("query, value, deriv", MP_ORACLE)
def test_against_mpmath_oracle(query, value, deriv):
    q = RingSumQuery(*query)
    assert direct_sum_S(q) == pytest.approx(value, rel=1e-13)
    assert ring_sum(q) == pytest.approx(value, rel=1e-10)
    assert ring_sum_phi(q).s_phi == pytest.approx(deriv, rel=1e-9, abs=1e-14)
    assert direct_sum_S_phi(q) == pytest.approx(deriv, rel=1e-12, abs=1e-10)


@pytest.mark.parametrize("beta", [0.05, 1.95])
def test_beta_near_limits(beta):
    q = RingSumQuery(4, beta, 0.5, 0.2)
    assert integral_S(q) == pytest.approx(direct_sum_S(q), rel=1e-6)


@pytest.mark.parametrize("r", [0.96, 0.99, 0.999, 0.99999, 1 - 2e-6])
def test_close_to_ring(r):
    q = RingSumQuery(5, 1.2, r, 0.4)
    assert integral_S(q) == pytest.approx(direct_sum_S(q), rel=1e-9)


@given(
    st.integers(2, 12), st.floats(0.1, 1.9), st.floats(0.01, 0.98), st.floats(-math.pi, math.pi)
)
@settings(max_examples=80, deadline=None)
def test_integral_matches_direct(n, beta, r, phi):
    q = RingSumQuery(n, beta, r, phi)
    assert integral_S(q) == pytest.approx(direct_sum_S(q), rel=1e-8)


@given(st.integers(2, 12), st.floats(0.1, 1.9), st.floats(0.05, 0.95), st.floats(-3, 3))
@settings(max_examples=60, deadline=None)
def test_inversion_identity(n, beta, r, phi):
    q = RingSumQuery(n, beta, r, phi)
    # independent of the quadrature
    assert direct_sum_S(q.inverted()) == pytest.approx(r**beta * direct_sum_S(q), rel=1e-12)
    assert abs(extended_S(q.inverted()) - r**beta * integral_S(q)) < 1e-10


@given(st.integers(2, 9), st.floats(0.2, 1.8), st.floats(0.05, 3.0), st.floats(0.0, 2 * math.pi))
@settings(max_examples=60, deadline=None)
def test_angular_derivative_sign_and_periodicity(n, beta, r, phi):
    if abs(r - 1) < 0.02:
        return
    q = RingSumQuery(n, beta, r, phi)
    d = ring_sum_phi(q)
    assert d.omega > 0
    s = math.sin(n * phi)
    if abs(s) > 1e-6:
        assert np.sign(d.s_phi) == -np.sign(s)
    shifted = RingSumQuery(n, beta, r, phi + 2 * math.pi / n)
    assert ring_sum(shifted) == pytest.approx(ring_sum(q), rel=1e-10)


def test_angular_derivative_zero_on_symmetry_rays():
    for phi in (0.0, math.pi / 5):
        assert integral_S_phi(RingSumQuery(5, 1.0, 0.5, phi)).s_phi == pytest.approx(0.0, abs=1e-14)


def test_angular_derivative_finite_difference():
    h = 1e-5
    q = RingSumQuery(3, 1.0, 0.5, 0.3)
    fd = (direct_sum_S(RingSumQuery(3, 1.0, 0.5, 0.3 + h)) - direct_sum_S(RingSumQuery(3, 1.0, 0.5, 0.3 - h))) / (2 * h)
    assert integral_S_phi(q).s_phi == pytest.approx(fd, abs=1e-7)
    assert integral_S_phi(RingSumQuery(5, 0.5, 0.7, 1.0)).omega > 0


def test_query_domain():
    with pytest.raises(ParameterDomainError):
        RingSumQuery(1, 1.0, 0.5, 0.0)
    with pytest.raises(ParameterDomainError):
        RingSumQuery(3, 2.0, 0.5, 0.0)
    with pytest.raises(ParameterDomainError):
        RingSumQuery(3, 1.0, 1.0 + 1e-7, 0.0)
    with pytest.raises(ParameterDomainError):
        integral_S(RingSumQuery(3, 1.0, 1.5, 0.0))
    with pytest.raises(ParameterDomainError):
        extended_S(RingSumQuery(3, 1.0, 0.5, 0.0))


def test_table_and_csv(tmp_path):
    rows = ringsum_table()
    assert len(rows) == 600
    assert max(r["rel_err"] for r in rows) < 1e-8
    path = tmp_path / "rs.csv"
    write_ringsum_csv(rows, path)
    with open(path) as fh:
        back = list(csv.DictReader(fh))
    assert float(back[17]["integral"]) == rows[17]["integral"]
