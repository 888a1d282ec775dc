from __future__ import annotations

import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rnbody.configuration import (
    PrimaryConfiguration,
    config_from_dict,
    equilibrium_residual,
    lattice_sum,
    load_config,
    maxwell_ring_config,
    residual_norm,
    rotation_order,
    symmetry_maps,
    three_body_config,
    unscaled_ring_config,
)
from rnbody.errors import ParameterDomainError, SingularConfigurationError


def test_three_body_equal_masses():
    cfg = three_body_config(0.5, 2.0)
    np.testing.assert_array_equal(cfg.masses, [0.5, 0.5])
    np.testing.assert_array_equal(cfg.positions, [[0.5, 0.0], [-0.5, 0.0]])
    assert residual_norm(cfg) < 1e-12


def test_three_body_unequal_alpha():
    cfg = three_body_config(0.3, 2.5)
    np.testing.assert_allclose(cfg.masses, [0.3, 0.7])
    np.testing.assert_allclose(cfg.positions, [[0.7, 0.0], [-0.3, 0.0]])
    assert residual_norm(cfg) < 1e-12


@given(st.floats(0.01, 0.99), st.floats(1.05, 2.95))
@settings(max_examples=50, deadline=None)
def test_three_body_is_relative_equilibrium(mu, alpha):
    assert residual_norm(three_body_config(mu, alpha)) < 1e-12


def test_lattice_sum_hand_values():
    assert lattice_sum(2, 2.0) == pytest.approx(0.25, abs=1e-15)
    assert lattice_sum(3, 2.0) == pytest.approx(1.0 / math.sqrt(3.0), rel=1e-15)


def test_ring_n3_scaled_masses():
    cfg, geom = maxwell_ring_config(3, 0.0, 2.0)
    assert cfg.n_primaries == 3
    np.testing.assert_allclose(cfg.masses, math.sqrt(3.0), rtol=1e-14)
    angles = np.sort(np.mod(np.arctan2(cfg.positions[:, 1], cfg.positions[:, 0]), 2 * math.pi))
    np.testing.assert_allclose(angles, [0.0, 2 * math.pi / 3, 4 * math.pi / 3], atol=1e-15)
    assert residual_norm(cfg) < 1e-9
    assert geom.a == pytest.approx(geom.s ** (1 / 3), rel=1e-15)


RING_CASES = [(n, mu) for n in (2, 3, 4, 5, 7, 12) for mu in (0.0, 0.001, 1.0, 10.0, 1000.0)
              if (n, mu) != (2, 0.0)]


@pytest.mark.parametrize("n, mu", RING_CASES)
def test_ring_is_relative_equilibrium(n, mu):
    cfg, geom = maxwell_ring_config(n, mu, 2.0)
    assert residual_norm(cfg) < 1e-9
    assert cfg.n_primaries == n + (mu > 0)
    if mu > 0:
        np.testing.assert_array_equal(cfg.positions[-1], [0.0, 0.0])


def test_unscaled_ring_balances_at_physical_radius():
    _, geom = maxwell_ring_config(7, 10.0, 2.0)
    assert residual_norm(unscaled_ring_config(geom)) < 1e-9
    assert residual_norm(unscaled_ring_config(geom, 1.1)) > 1e-3


def test_ring_n2_mu0_redirects():
    with pytest.raises(ParameterDomainError, match="three_body_config"):
        maxwell_ring_config(2, 0.0, 2.0)


def test_unbalanced_pair_has_residual():
    cfg = PrimaryConfiguration.from_arrays(2.0, [1.0, 1.0], [[1.0, 0.0], [-1.0, 0.0]])
    res = equilibrium_residual(cfg)
    assert res.shape == (2, 2)
    assert np.max(np.abs(res)) > 0.5


@pytest.mark.parametrize("alpha", [1.0, 3.0, 0.5, 3.5])
def test_alpha_domain(alpha):
    with pytest.raises(ParameterDomainError):
        three_body_config(0.5, alpha)


def test_rejects_bad_primaries():
    with pytest.raises(ParameterDomainError):
        PrimaryConfiguration.from_arrays(2.0, [1.0, -1.0], [[1, 0], [0, 1]])
    with pytest.raises(SingularConfigurationError):
        PrimaryConfiguration.from_arrays(2.0, [1.0, 1.0], [[1, 0], [1, 0]])


def test_arrays_are_read_only():
    cfg = three_body_config(0.3)
    with pytest.raises(ValueError):
        cfg.positions[0, 0] = 3.0


@given(st.permutations(range(5)))
@settings(max_examples=20, deadline=None)
def test_residual_permutation_equivariant(perm):
    cfg, _ = maxwell_ring_config(4, 2.0, 2.0)
    perm = list(perm)
    shuffled = PrimaryConfiguration.from_arrays(2.0, cfg.masses[perm], cfg.positions[perm])
    np.testing.assert_allclose(equilibrium_residual(shuffled), equilibrium_residual(cfg)[perm], atol=1e-13)


def test_symmetry_group_orders():
    assert rotation_order(three_body_config(0.5)) == 2
    assert rotation_order(three_body_config(0.3)) == 1
    assert len(symmetry_maps(three_body_config(0.3))) == 2
    cfg, _ = maxwell_ring_config(7, 1.0)
    assert rotation_order(cfg) == 7
    assert len(symmetry_maps(cfg)) == 14


def test_config_documents(tmp_path):
    cfg, geom = config_from_dict({"alpha": 2.0, "ring": {"n": 5, "mu": 1.0}})
    assert geom is not None and cfg.n_primaries == 6
    cfg, geom = config_from_dict({"alpha": 2.0, "three_body": {"mu": 0.2}})
    assert geom is None and cfg.masses[0] == 0.2
    doc = three_body_config(0.3).to_dict()
    path = tmp_path / "c.json"
    path.write_text(json.dumps(doc))
    loaded, _ = load_config(path)
    np.testing.assert_array_equal(loaded.positions, three_body_config(0.3).positions)
    with pytest.raises(ParameterDomainError):
        config_from_dict({"ring": {"n": 3}})
