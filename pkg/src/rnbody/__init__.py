"""Equilibria, index jumps and periodic orbits of a satellite attracted by
primaries in a planar relative equilibrium, under the force law
``|x|**-alpha`` with ``1 < alpha < 3``."""

from .configuration import (
    Primary,
    PrimaryConfiguration,
    RingGeometry,
    load_config,
    maxwell_ring_config,
    three_body_config,
)
from .continuation import Branch, FourierLoop, Termination, branch_start, trace_branch
from .equilibria import Equilibrium, find_planar_equilibria, morse_consistency
from .ring_sum import RingSumQuery, direct_sum_S, ring_sum
from .spectral import BifurcationPoint, all_bifurcations

__version__ = "0.1.0"
