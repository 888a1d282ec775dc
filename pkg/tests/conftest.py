from __future__ import annotations

import math

import numpy as np
import pytest

from rnbody.configuration import maxwell_ring_config, three_body_config
from rnbody.equilibria import find_planar_equilibria


@pytest.fixture(scope="session")
def copenhagen():
    cfg = three_body_config(0.5, 2.0)
    return cfg, find_planar_equilibria(cfg)


@pytest.fixture(scope="session")
def l4_small_mu():
    """L4 of the three-body problem at mu = 0.01, alpha = 2."""
    cfg = three_body_config(0.01, 2.0)
    eqs = find_planar_equilibria(cfg)
    target = np.array([0.49, math.sqrt(3) / 2])
    eq = min(eqs, key=lambda e: np.hypot(*(e.position - target)))
    return cfg, eq, eqs


@pytest.fixture(scope="session")
def ring3_origin():
    cfg, geom = maxwell_ring_config(3, 0.0, 2.0)
    eqs = find_planar_equilibria(cfg)
    eq = min(eqs, key=lambda e: np.hypot(*e.position))
    return cfg, geom, eq, eqs


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip("]"))):
            terminalreporter.write_line(line)
