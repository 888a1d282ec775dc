"""Effective potential of the satellite in the rotating frame.

    V(x) = |(x, y)|**2 / 2 + sum_j m_j * phi_alpha(|x - (a_j, 0)|)

with ``phi_alpha(d) = d**(1 - alpha) / (alpha - 1)``. The satellite obeys
``x'' + 2 Jbar x' = grad V(x)``, so equilibria are critical points of V.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .configuration import PrimaryConfiguration
from .errors import CollisionError, ParameterDomainError

COLLISION_GUARD = 1e-12


def phi_alpha(d, alpha: float):
    """Attraction potential ``d**(1-alpha)/(alpha-1)``; its derivative is ``-d**-alpha``."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise CollisionError("phi_alpha needs a positive distance", distance=float(np.min(d)))
    out = d ** (1.0 - alpha) / (alpha - 1.0)
    return float(out) if out.ndim == 0 else out


def phi_alpha_prime(d, alpha: float):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise CollisionError("phi_alpha needs a positive distance", distance=float(np.min(d)))
    out = -(d ** -alpha)
    return float(out) if out.ndim == 0 else out


def phi_alpha_second(d, alpha: float):
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise CollisionError("phi_alpha needs a positive distance", distance=float(np.min(d)))
    out = alpha * d ** (-alpha - 1.0)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True, eq=False)
class HessianBlocks:
    """Hessian of V at a planar point, split into in-plane and normal parts."""

    planar: np.ndarray
    normal: float

    @property
    def trace_planar(self) -> float:
        return float(self.planar[0, 0] + self.planar[1, 1])

    @property
    def det_planar(self) -> float:
        p = self.planar
        return float(p[0, 0] * p[1, 1] - p[0, 1] * p[1, 0])

    def full(self) -> np.ndarray:
        h = np.zeros((3, 3))
        h[:2, :2] = self.planar
        h[2, 2] = self.normal
        return h


def _as_points(x) -> tuple[np.ndarray, bool]:
    pts = np.asarray(x, dtype=float)
    single = pts.ndim == 1
    pts = np.atleast_2d(pts)
    if pts.shape[-1] == 2:
        pts = np.concatenate([pts, np.zeros(pts.shape[:-1] + (1,))], axis=-1)
    if pts.shape[-1] != 3:
        raise ParameterDomainError(f"points must have 2 or 3 coordinates, got shape {pts.shape}")
    return pts, single


def _offsets(config: PrimaryConfiguration, pts: np.ndarray, guard: float = COLLISION_GUARD):
    """Offsets ``x - (a_j, 0)`` with shape (N, n, 3) and distances (N, n)."""
    prim = np.zeros((config.n_primaries, 3))
    prim[:, :2] = config.positions
    delta = pts[:, None, :] - prim[None, :, :]
    dist = np.sqrt(np.einsum("...k,...k->...", delta, delta))
    dmin = float(np.min(dist)) if dist.size else np.inf
    if dmin < guard:
        k = int(np.argmin(np.min(dist, axis=0)))
        raise CollisionError(
            f"point within {guard:g} of primary {k} (distance {dmin:.3e})", primary=k, distance=dmin
        )
    return delta, dist


def min_primary_distance(config: PrimaryConfiguration, x) -> tuple[int, float]:
    """Closest primary (index, distance) over a point or a set of points."""
    pts, _ = _as_points(x)
    _, dist = _offsets(config, pts, guard=0.0)
    per_primary = dist.min(axis=0)
    k = int(np.argmin(per_primary))
    return k, float(per_primary[k])


def potential_value(config: PrimaryConfiguration, x):
    pts, single = _as_points(x)
    _, dist = _offsets(config, pts)
    a = config.alpha
    v = 0.5 * (pts[:, 0] ** 2 + pts[:, 1] ** 2) + (dist ** (1.0 - a) / (a - 1.0)) @ config.masses
    return float(v[0]) if single else v


def potential_gradient(config: PrimaryConfiguration, x) -> np.ndarray:
    """Analytic ``grad V``; accepts one point or an (N, 3) stack."""
    pts, single = _as_points(x)
    delta, dist = _offsets(config, pts)
    w = config.masses[None, :] * dist ** (-config.alpha - 1.0)
    g = pts.copy()
    g[:, 2] = 0.0
    g -= np.einsum("nj,njk->nk", w, delta)
    return g[0] if single else g


def hessian_full(config: PrimaryConfiguration, x) -> np.ndarray:
    """Full 3x3 Hessian of V, valid off the plane as well; shape (3, 3) or (N, 3, 3)."""
    pts, single = _as_points(x)
    delta, dist = _offsets(config, pts)
    a = config.alpha
    m = config.masses[None, :]
    w1 = m * dist ** (-a - 1.0)
    w3 = (a + 1.0) * m * dist ** (-a - 3.0)
    h = np.einsum("nj,nja,njb->nab", w3, delta, delta)
    h -= w1.sum(axis=1)[:, None, None] * np.eye(3)[None]
    h[:, 0, 0] += 1.0
    h[:, 1, 1] += 1.0
    return h[0] if single else h


def potential_hessian(config: PrimaryConfiguration, x) -> HessianBlocks:
    """Hessian blocks at a planar point: ``I + sum m_j A_j`` and ``-sum m_j/d_j**(alpha+1)``."""
    p = np.asarray(x, dtype=float).ravel()
    if p.size == 3:
        if p[2] != 0.0:
            raise ParameterDomainError("Hessian blocks are defined at planar points (z = 0)")
        p = p[:2]
    if p.size != 2:
        raise ParameterDomainError("expected a planar point")
    pts, _ = _as_points(p)
    delta, dist = _offsets(config, pts)
    d2 = delta[0, :, :2]
    d = dist[0]
    a = config.alpha
    m = config.masses
    planar = np.eye(2)
    for mj, dj, vj in zip(m, d, d2):
        A = (a + 1.0) / dj ** (a + 3.0) * np.outer(vj, vj) - np.eye(2) / dj ** (a + 1.0)
        planar = planar + mj * A
    planar = 0.5 * (planar + planar.T)
    normal = -float(np.sum(m / d ** (a + 1.0)))
    planar.flags.writeable = False
    return HessianBlocks(planar=planar, normal=normal)


def nu1_squared(config: PrimaryConfiguration, x) -> float:
    """``sum_j m_j / d_j**(alpha+1)``, the squared onset frequency of spatial oscillations."""
    pts, _ = _as_points(np.asarray(x, dtype=float).ravel()[:2])
    _, dist = _offsets(config, pts)
    return float(np.sum(config.masses / dist[0] ** (config.alpha + 1.0)))


def trace_formula(config: PrimaryConfiguration, x) -> float:
    """Planar trace from ``2 + (alpha - 1) * nu1**2``; independent of the assembled block."""
    return 2.0 + (config.alpha - 1.0) * nu1_squared(config, x)
