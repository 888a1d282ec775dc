"""Relative-equilibrium arrangements of the primaries.

Everything is expressed in the rotating frame with unit angular speed. Two
builders are provided: the restricted three-body problem and the Maxwell
ring (``n`` equal masses on a regular polygon plus an optional central mass).
The ring is returned in its scaled frame, with unit radius and effective
masses divided by ``s + mu``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ParameterDomainError, SingularConfigurationError

ALPHA_MIN = 1.0
ALPHA_MAX = 3.0
RESIDUAL_TOL = 1e-9


def check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not ALPHA_MIN < alpha < ALPHA_MAX:
        raise ParameterDomainError(
            f"force exponent alpha must lie in (1, 3), got {alpha!r}"
        )
    return alpha


@dataclass(frozen=True)
class Primary:
    mass: float
    position: tuple[float, float]


@dataclass(frozen=True)
class PrimaryConfiguration:
    """Masses and planar positions of the primaries plus the force exponent.

    Instances are immutable; ``masses`` and ``positions`` are read-only
    array views built once from ``primaries``.
    """

    alpha: float
    primaries: tuple[Primary, ...]
    label: str = ""

    def __post_init__(self) -> None:
        check_alpha(self.alpha)
        if len(self.primaries) < 1:
            raise ParameterDomainError("at least one primary is required")
        for p in self.primaries:
            if not (p.mass > 0 and math.isfinite(p.mass)):
                raise ParameterDomainError(f"primary masses must be positive, got {p.mass!r}")
        pos = self.positions
        for i in range(len(pos)):
            for j in range(i + 1, len(pos)):
                if np.hypot(*(pos[i] - pos[j])) == 0.0:
                    raise SingularConfigurationError(
                        f"primaries {i} and {j} share the position {tuple(pos[i])}"
                    )

    @classmethod
    def from_arrays(cls, alpha: float, masses, positions, label: str = "") -> "PrimaryConfiguration":
        masses = np.asarray(masses, dtype=float).ravel()
        positions = np.asarray(positions, dtype=float).reshape(-1, 2)
        if len(masses) != len(positions):
            raise ParameterDomainError("masses and positions must have equal length")
        prims = tuple(
            Primary(float(m), (float(p[0]), float(p[1]))) for m, p in zip(masses, positions)
        )
        return cls(float(alpha), prims, label)

    @cached_property
    def masses(self) -> np.ndarray:
        m = np.array([p.mass for p in self.primaries], dtype=float)
        m.flags.writeable = False
        return m

    @cached_property
    def positions(self) -> np.ndarray:
        a = np.array([p.position for p in self.primaries], dtype=float).reshape(-1, 2)
        a.flags.writeable = False
        return a

    @property
    def n_primaries(self) -> int:
        return len(self.primaries)

    def to_dict(self) -> dict[str, Any]:
        return {
            "alpha": self.alpha,
            "primaries": [
                {"mass": p.mass, "position": list(p.position)} for p in self.primaries
            ],
            "label": self.label,
        }


@dataclass(frozen=True)
class RingGeometry:
    """Lattice data of the Maxwell ring.

    ``a`` is the physical ring radius solving ``a**(alpha+1) = s + mu``;
    ``scaled_masses`` holds (peripheral, central) masses in the scaled frame.
    """

    n: int
    mu: float
    alpha: float
    s: float
    a: float
    scaled_masses: tuple[float, float] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "scaled_masses", (1.0 / (self.s + self.mu), self.mu / (self.s + self.mu))
        )

    @property
    def zeta(self) -> float:
        return 2.0 * math.pi / self.n

    def recompute_s(self) -> float:
        return lattice_sum(self.n, self.alpha)


def lattice_sum(n: int, alpha: float) -> float:
    """Ring lattice sum ``2**-alpha * sum_{j=1}^{n-1} sin(j*pi/n)**(1-alpha)``."""
    terms = [math.sin(j * math.pi / n) ** (1.0 - alpha) for j in range(1, n)]
    return math.fsum(terms) / 2.0**alpha


def three_body_config(mu: float, alpha: float = 2.0) -> PrimaryConfiguration:
    """Restricted three-body primaries: mass ``mu`` at (1-mu, 0), ``1-mu`` at (-mu, 0)."""
    mu = float(mu)
    if not 0.0 < mu < 1.0:
        raise ParameterDomainError(f"mass ratio mu must lie in (0, 1), got {mu!r}")
    alpha = check_alpha(alpha)
    return PrimaryConfiguration.from_arrays(
        alpha,
        [mu, 1.0 - mu],
        [[1.0 - mu, 0.0], [-mu, 0.0]],
        label=f"three-body mu={mu:g} alpha={alpha:g}",
    )


def maxwell_ring_config(
    n: int, mu: float = 0.0, alpha: float = 2.0
) -> tuple[PrimaryConfiguration, RingGeometry]:
    """Scaled Maxwell ring with ``n`` peripheral bodies and central mass ``mu``.

    Vertices sit at ``exp(i*j*2*pi/n)`` for ``j = 1..n`` (so vertex ``n`` is on
    the positive x-axis) with mass ``1/(s+mu)``; the central body, of mass
    ``mu/(s+mu)``, is appended last and omitted when ``mu == 0``.
    """
    if int(n) != n:
        raise ParameterDomainError(f"n must be an integer, got {n!r}")
    n = int(n)
    mu = float(mu)
    alpha = check_alpha(alpha)
    if n < 2:
        raise ParameterDomainError(f"ring needs n >= 2 vertices, got {n}")
    if mu < 0:
        raise ParameterDomainError(f"central mass must be non-negative, got {mu!r}")
    if n == 2 and mu == 0.0:
        raise ParameterDomainError(
            "the ring with n=2 and mu=0 is the restricted three-body problem "
            "with equal masses; use three_body_config(0.5, alpha) instead"
        )
    s = lattice_sum(n, alpha)
    geom = RingGeometry(n=n, mu=mu, alpha=alpha, s=s, a=(s + mu) ** (1.0 / (alpha + 1.0)))
    m_ring, m_center = geom.scaled_masses
    angles = 2.0 * math.pi * np.arange(1, n + 1) / n
    positions = np.column_stack([np.cos(angles), np.sin(angles)])
    # exact axis placement for the last vertex
    positions[-1] = (1.0, 0.0)
    masses = [m_ring] * n
    if mu > 0:
        positions = np.vstack([positions, [0.0, 0.0]])
        masses.append(m_center)
    config = PrimaryConfiguration.from_arrays(
        alpha, masses, positions, label=f"ring n={n} mu={mu:g} alpha={alpha:g}"
    )
    return config, geom


def unscaled_ring_config(geom: RingGeometry, radius_factor: float = 1.0) -> PrimaryConfiguration:
    """Physical-frame ring: unit masses at radius ``a * radius_factor``."""
    a = geom.a * radius_factor
    angles = 2.0 * math.pi * np.arange(1, geom.n + 1) / geom.n
    positions = a * np.column_stack([np.cos(angles), np.sin(angles)])
    masses = [1.0] * geom.n
    if geom.mu > 0:
        positions = np.vstack([positions, [0.0, 0.0]])
        masses.append(geom.mu)
    return PrimaryConfiguration.from_arrays(geom.alpha, masses, positions, label="ring (physical)")


def equilibrium_residual(config: PrimaryConfiguration) -> np.ndarray:
    """Per-primary residual ``a_i - sum_j m_j (a_i - a_j) / |a_i - a_j|**(alpha+1)``.

    Returns an ``(n, 2)`` array; it vanishes iff the primaries form a
    relative equilibrium at unit angular speed.
    """
    a = config.positions
    m = config.masses
    if len(a) < 2:
        raise ParameterDomainError("the residual needs at least two primaries")
    diff = a[:, None, :] - a[None, :, :]
    dist = np.hypot(diff[..., 0], diff[..., 1])
    np.fill_diagonal(dist, np.inf)
    if np.any(dist == 0.0):
        raise SingularConfigurationError("coincident primaries")
    weight = m[None, :] / dist ** (config.alpha + 1.0)
    return a - np.einsum("ij,ijk->ik", weight, diff)


def residual_norm(config: PrimaryConfiguration) -> float:
    return float(np.max(np.hypot(*equilibrium_residual(config).T)))


def symmetry_maps(config: PrimaryConfiguration, tol: float = 1e-12) -> list[np.ndarray]:
    """Orthogonal 2x2 maps (about the origin) that permute the primaries.

    Checks rotations by ``2*pi*k/q`` for ``q`` up to the number of primaries
    and the reflections composed with them. Always contains the identity.
    """
    a = config.positions
    m = config.masses
    scale = max(1.0, float(np.max(np.abs(a))))

    def preserves(mat: np.ndarray) -> bool:
        b = a @ mat.T
        for p, mass in zip(b, m):
            d = np.hypot(*(a - p).T)
            k = int(np.argmin(d))
            if d[k] > tol * scale * 10 or abs(m[k] - mass) > tol * max(1.0, mass) * 10:
                return False
        return True

    maps = [np.eye(2)]
    nmax = max(2, len(a))
    for q in range(nmax, 1, -1):
        th = 2.0 * math.pi / q
        rot = np.array([[math.cos(th), -math.sin(th)], [math.sin(th), math.cos(th)]])
        if preserves(rot):
            maps = [np.linalg.matrix_power(rot, k) for k in range(q)]
            break
    refl = np.diag([1.0, -1.0])
    if preserves(refl):
        maps = maps + [r @ refl for r in maps]
    return maps


def rotation_order(config: PrimaryConfiguration) -> int:
    """Largest ``q`` such that rotation by ``2*pi/q`` about the origin permutes the primaries."""
    return sum(1 for g in symmetry_maps(config) if np.linalg.det(g) > 0)


def config_from_dict(doc: dict[str, Any]) -> tuple[PrimaryConfiguration, RingGeometry | None]:
    """Build a configuration from the JSON document layout.

    Accepts an explicit primaries list or the ``three_body`` / ``ring``
    builder shorthands.
    """
    if "alpha" not in doc:
        raise ParameterDomainError("configuration document needs an 'alpha' entry")
    alpha = doc["alpha"]
    if "three_body" in doc:
        return three_body_config(doc["three_body"]["mu"], alpha), None
    if "ring" in doc:
        ring = doc["ring"]
        return maxwell_ring_config(ring["n"], ring.get("mu", 0.0), alpha)
    if "primaries" in doc:
        prims = doc["primaries"]
        cfg = PrimaryConfiguration.from_arrays(
            alpha,
            [p["mass"] for p in prims],
            [p["position"] for p in prims],
            label=doc.get("label", ""),
        )
        return cfg, None
    raise ParameterDomainError("configuration needs 'primaries', 'three_body' or 'ring'")


def load_config(path: str | Path) -> tuple[PrimaryConfiguration, RingGeometry | None]:
    with open(path) as fh:
        return config_from_dict(json.load(fh))
