"""Planar equilibria of the satellite: location, classification and counting.

Equilibria are critical points of the effective potential restricted to the
plane. A multistart damped Newton iteration over a polar grid finds them;
symmetric configurations have each point's whole group orbit added. For the
Maxwell ring an independent one-dimensional search along the symmetry rays
``phi = 0`` and ``phi = pi/n`` serves as a cross-check.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .configuration import PrimaryConfiguration, RingGeometry, symmetry_maps
from .errors import CollisionError, ConvergenceError, ParameterDomainError
from .potential import (
    HessianBlocks,
    hessian_full,
    nu1_squared,
    potential_gradient,
    potential_hessian,
)

MINIMUM = "Minimum"
SADDLE = "Saddle"
DEGENERATE = "Degenerate"

GRADIENT_TOL = 1e-10
DEDUP_TOL = 1e-8
NEWTON_GUARD = 1e-9


@dataclass(frozen=True, eq=False)
class Equilibrium:
    position: np.ndarray
    hessian: HessianBlocks
    kind: str
    sigma: int
    gradient_norm: float

    @property
    def T(self) -> float:
        return self.hessian.trace_planar

    @property
    def D(self) -> float:
        return self.hessian.det_planar

    @property
    def nu1_squared(self) -> float:
        return -self.hessian.normal

    def as_row(self) -> dict:
        return {
            "x": float(self.position[0]),
            "y": float(self.position[1]),
            "kind": self.kind,
            "sigma": self.sigma,
            "T": self.T,
            "D": self.D,
            "nu1_squared": self.nu1_squared,
        }


def degeneracy_tolerance(T: float) -> float:
    return 1e-8 * (1.0 + T * T)


def classify(hessian: HessianBlocks) -> tuple[str, int]:
    """Kind and local index from the planar trace and determinant.

    The trace is positive for every admissible exponent, so no maxima occur;
    a negative trace with positive determinant would indicate a bug upstream.
    """
    T, D = hessian.trace_planar, hessian.det_planar
    if abs(D) < degeneracy_tolerance(T):
        return DEGENERATE, 0
    if D < 0:
        return SADDLE, -1
    if T > 0:
        return MINIMUM, 1
    raise ConvergenceError(f"planar Hessian with T={T:g} <= 0 and D={D:g} > 0 (a maximum)")


def make_equilibrium(config: PrimaryConfiguration, point) -> Equilibrium:
    p = np.array(np.asarray(point, dtype=float).ravel()[:2])
    hess = potential_hessian(config, p)
    kind, sigma = classify(hess)
    if kind == DEGENERATE:
        warnings.warn(
            f"degenerate equilibrium at {tuple(p)} (D={hess.det_planar:.3e}); "
            "its index is reported as 0",
            stacklevel=2,
        )
    g = potential_gradient(config, p)[:2]
    p.flags.writeable = False
    return Equilibrium(p, hess, kind, sigma, float(np.hypot(*g)))


def newton_refine(
    config: PrimaryConfiguration,
    guess,
    tol: float = GRADIENT_TOL,
    max_iter: int = 100,
) -> Equilibrium:
    """Damped Newton iteration on the planar gradient.

    Steps are capped at half the distance to the nearest primary and then
    backtracked until the gradient norm decreases.

    Raises
    ------
    ConvergenceError
        If ``tol`` is not reached within ``max_iter`` iterations.
    CollisionError
        If the guess, or the limit point, lies within the collision guard.
    """
    x = np.array(np.asarray(guess, dtype=float).ravel()[:2])
    dmin = _min_dist(config, x)
    if dmin < NEWTON_GUARD:
        raise CollisionError(f"Newton guess {tuple(x)} is on a primary", distance=dmin)

    g = potential_gradient(config, x)[:2]
    gn = float(np.hypot(*g))
    for _ in range(max_iter):
        if gn < tol:
            break
        H = hessian_full(config, x)[:2, :2]
        try:
            step = -np.linalg.solve(H, g)
        except np.linalg.LinAlgError:
            step = -g
        cap = 0.5 * _min_dist(config, x)
        sn = float(np.hypot(*step))
        if sn > cap:
            step *= cap / sn
        t = 1.0
        for _ in range(40):
            trial = x + t * step
            gt = potential_gradient(config, trial)[:2]
            gtn = float(np.hypot(*gt))
            if gtn < (1.0 - 1e-4 * t) * gn or gtn < tol:
                break
            t *= 0.5
        x, g, gn = trial, gt, gtn
    else:
        if gn >= tol:
            raise ConvergenceError(
                f"Newton did not converge from {guess!r}: |grad V| = {gn:.3e} after {max_iter} steps"
            )
    if gn >= tol:
        raise ConvergenceError(f"Newton stalled at |grad V| = {gn:.3e}")
    dmin = _min_dist(config, x)
    if dmin < NEWTON_GUARD:
        raise CollisionError(f"Newton converged onto a primary at {tuple(x)}", distance=dmin)
    return make_equilibrium(config, x)


def _min_dist(config: PrimaryConfiguration, x) -> float:
    d = np.hypot(*(config.positions - np.asarray(x)[:2]).T)
    return float(np.min(d))


def _batch_newton(config: PrimaryConfiguration, starts: np.ndarray, iters: int = 80) -> np.ndarray:
    """Vectorised damped Newton over many starts; returns final points and gradient norms."""
    x = np.array(starts, dtype=float)
    a = config.positions
    for _ in range(iters):
        dist = np.hypot(x[:, None, 0] - a[None, :, 0], x[:, None, 1] - a[None, :, 1])
        dmin = dist.min(axis=1)
        g = potential_gradient(config, x)[:, :2]
        gn = np.hypot(g[:, 0], g[:, 1])
        active = gn > 1e-13
        if not np.any(active):
            break
        H = hessian_full(config, x)[:, :2, :2]
        det = H[:, 0, 0] * H[:, 1, 1] - H[:, 0, 1] * H[:, 1, 0]
        ok = np.abs(det) > 1e-14
        safe = np.where(ok, det, 1.0)
        step = np.empty_like(x)
        step[:, 0] = -(H[:, 1, 1] * g[:, 0] - H[:, 0, 1] * g[:, 1]) / safe
        step[:, 1] = -(-H[:, 1, 0] * g[:, 0] + H[:, 0, 0] * g[:, 1]) / safe
        step[~ok] = -g[~ok]
        sn = np.hypot(step[:, 0], step[:, 1])
        cap = np.minimum(0.5 * dmin, 1.0)
        scale = np.where(sn > cap, cap / np.maximum(sn, 1e-300), 1.0)
        x = x + (scale * active)[:, None] * step
    g = potential_gradient(config, x)[:, :2]
    return x, np.hypot(g[:, 0], g[:, 1])


def default_search_radius(config: PrimaryConfiguration) -> float:
    return 2.0 * float(np.max(np.hypot(*config.positions.T))) + 2.0


def gradient_points_outward(config: PrimaryConfiguration, radius: float, samples: int = 720) -> bool:
    th = np.linspace(0.0, 2.0 * math.pi, samples, endpoint=False)
    pts = radius * np.column_stack([np.cos(th), np.sin(th)])
    g = potential_gradient(config, pts)[:, :2]
    return bool(np.all(np.einsum("ij,ij->i", g, pts) > 0))


def _seed_points(
    config: PrimaryConfiguration,
    radius: float,
    n_radial: int,
    n_angular: int,
    exclusion: float,
    local_seeds: bool,
) -> np.ndarray:
    r = np.linspace(0.05, radius, n_radial)
    th = np.linspace(0.0, 2.0 * math.pi, n_angular, endpoint=False)
    # half-cell angular offset on alternate rings avoids seeding exactly on symmetry rays
    R, TH = np.meshgrid(r, th, indexing="ij")
    TH = TH + (np.arange(n_radial)[:, None] % 2) * (math.pi / n_angular)
    seeds = [np.column_stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()])]
    if local_seeds:
        rl = np.geomspace(3e-3, 0.3, 12)
        tl = np.linspace(0.0, 2.0 * math.pi, 24, endpoint=False) + 0.1
        RL, TL = np.meshgrid(rl, tl, indexing="ij")
        ring = np.column_stack([(RL * np.cos(TL)).ravel(), (RL * np.sin(TL)).ravel()])
        seeds.extend(p + ring for p in config.positions)
    pts = np.vstack(seeds)
    a = config.positions
    dist = np.hypot(pts[:, None, 0] - a[None, :, 0], pts[:, None, 1] - a[None, :, 1])
    return pts[dist.min(axis=1) > exclusion]


def _dedup(points: list[np.ndarray], tol: float) -> list[np.ndarray]:
    kept: list[np.ndarray] = []
    for p in points:
        if all(np.hypot(*(p - q)) > tol for q in kept):
            kept.append(p)
    return kept


def find_planar_equilibria(
    config: PrimaryConfiguration,
    radius: float | None = None,
    n_radial: int = 60,
    n_angular: int = 120,
    exclusion: float = 1e-3,
    local_seeds: bool = True,
    dedup_tol: float = DEDUP_TOL,
) -> list[Equilibrium]:
    """Locate all planar critical points of V inside a disk of given radius.

    Parameters
    ----------
    config : PrimaryConfiguration
    radius : float, optional
        Outer search radius; defaults to twice the largest primary radius
        plus two. The gradient must point outward on this circle.
    n_radial, n_angular : int
        Polar seed grid over ``[0.05, radius] x [0, 2 pi)``.
    exclusion : float
        Seeds closer than this to a primary are dropped.
    local_seeds : bool
        Add small polar seed rings around each primary; this catches the
        Hill-type saddles next to light primaries.
    dedup_tol : float
        Points closer than this are merged.

    Returns
    -------
    list of Equilibrium
        Sorted by angle and then radius, with every symmetry image included.
    """
    if radius is None:
        radius = default_search_radius(config)
    if not gradient_points_outward(config, radius):
        raise ParameterDomainError(
            f"grad V does not point outward on the circle of radius {radius:g}; enlarge it"
        )
    seeds = _seed_points(config, radius, n_radial, n_angular, exclusion, local_seeds)
    xs, gn = _batch_newton(config, seeds)
    r = np.hypot(xs[:, 0], xs[:, 1])
    good = np.isfinite(gn) & (gn < 1e-7) & (r < radius)
    candidates = _dedup([p for p in xs[good]], 1e-6)

    found: list[np.ndarray] = []
    for p in candidates:
        try:
            eq = newton_refine(config, p)
        except (ConvergenceError, CollisionError):
            continue
        found.append(np.array(eq.position))
    found = _dedup(found, dedup_tol)

    maps = symmetry_maps(config)
    images: list[np.ndarray] = []
    for p in found:
        for g in maps:
            images.append(g @ p)
    polished = []
    for p in _dedup(images, 1e-6):
        try:
            polished.append(newton_refine(config, p))
        except (ConvergenceError, CollisionError):
            continue
    unique: list[Equilibrium] = []
    for eq in polished:
        if all(np.hypot(*(eq.position - u.position)) > dedup_tol for u in unique):
            unique.append(eq)
    unique.sort(key=lambda e: (round(math.atan2(e.position[1], e.position[0]) % (2 * math.pi), 9),
                               float(np.hypot(*e.position))))
    return unique


@dataclass(frozen=True)
class MorseReport:
    n_saddle: int
    n_minimum: int
    n_degenerate: int
    index_sum: int
    primary_count: int
    conclusive: bool
    passed: bool

    @property
    def message(self) -> str:
        status = "PASS" if self.passed else ("INCONCLUSIVE" if not self.conclusive else "FAIL")
        return (
            f"{self.n_saddle} = {self.primary_count - 1} + {self.n_minimum}: {status} "
            f"(index sum {self.index_sum}, expected {1 - self.primary_count})"
        )


def morse_consistency(equilibria: list[Equilibrium], primary_count: int) -> MorseReport:
    """Check ``#saddles = n - 1 + #minima`` and ``sum(sigma) = 1 - n``."""
    n_s = sum(e.kind == SADDLE for e in equilibria)
    n_m = sum(e.kind == MINIMUM for e in equilibria)
    n_d = sum(e.kind == DEGENERATE for e in equilibria)
    isum = sum(e.sigma for e in equilibria)
    conclusive = n_d == 0
    passed = conclusive and n_s == primary_count - 1 + n_m and isum == 1 - primary_count
    return MorseReport(n_s, n_m, n_d, isum, primary_count, conclusive, passed)


def write_equilibria_csv(equilibria: list[Equilibrium], path: str | Path) -> None:
    cols = ["x", "y", "kind", "sigma", "T", "D", "nu1_squared"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for e in equilibria:
            row = e.as_row()
            w.writerow([_fmt(row[c]) for c in cols])


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


# ---------------------------------------------------------------------------
# Maxwell ring: polar analysis along the symmetry rays


def _ring_terms(geometry: RingGeometry, r: float, phi: float):
    n, a = geometry.n, geometry.alpha
    theta = geometry.zeta * np.arange(1, n + 1) - phi
    c, s = np.cos(theta), np.sin(theta)
    d2 = r * r + 1.0 - 2.0 * r * c
    if np.min(d2) < 1e-24:
        raise CollisionError(f"(r, phi) = ({r}, {phi}) is a ring vertex", distance=float(np.sqrt(np.min(d2))))
    d = np.sqrt(d2)
    return theta, c, s, d, a


def ring_radial_derivative(geometry: RingGeometry, r: float, phi: float) -> float:
    """``dV/dr`` in polar coordinates of the scaled ring frame."""
    _, c, _, d, a = _ring_terms(geometry, r, phi)
    m_ring, m_center = geometry.scaled_masses
    central = m_center * r ** (-a) if m_center > 0 else 0.0
    return float(r - central - m_ring * math.fsum((r - c) / d ** (a + 1.0)))


def ring_angular_derivative(geometry: RingGeometry, r: float, phi: float) -> float:
    """``dV/dphi``; only the peripheral masses depend on the angle."""
    _, _, s, d, a = _ring_terms(geometry, r, phi)
    m_ring = geometry.scaled_masses[0]
    return float(m_ring * r * math.fsum(s / d ** (a + 1.0)))


def ring_second_derivatives(geometry: RingGeometry, r: float, phi: float) -> tuple[float, float]:
    """``(V_rr, V_phiphi)`` from the polar formulas."""
    _, c, s, d, a = _ring_terms(geometry, r, phi)
    m_ring, m_center = geometry.scaled_masses
    central = m_center * a * r ** (-a - 1.0) if m_center > 0 else 0.0
    v_rr = 1.0 + central - m_ring * math.fsum(
        1.0 / d ** (a + 1.0) - (a + 1.0) * (r - c) ** 2 / d ** (a + 3.0)
    )
    v_pp = m_ring * r * math.fsum(-c / d ** (a + 1.0) + (a + 1.0) * r * s * s / d ** (a + 3.0))
    return float(v_rr), float(v_pp)


@dataclass(frozen=True)
class RingCriticalSet:
    """Radii of the critical points of the ring potential on the two symmetry rays.

    ``r2_ray`` is the angle of the ray carrying ``r2``: ``0`` when ``mu > 0``
    and ``pi/n`` when ``mu == 0``.
    """

    n: int
    mu: float
    r1: float
    r2: float
    r2_ray: float
    r3: float
    r4: float | None = None
    r5: float | None = None
    origin_flag: bool = False
    degenerate: float | None = None

    @property
    def has_inner_pair(self) -> bool:
        return self.r4 is not None and self.r5 is not None

    def points(self) -> list[tuple[float, float, str]]:
        """(r, phi, kind) for one representative of each orbit."""
        half = math.pi / self.n
        out = [(self.r1, 0.0, SADDLE), (self.r2, self.r2_ray, SADDLE), (self.r3, half, MINIMUM)]
        if self.has_inner_pair:
            out += [(self.r4, half, MINIMUM), (self.r5, half, SADDLE)]
        if self.degenerate is not None:
            out.append((self.degenerate, half, DEGENERATE))
        return out

    def expected_counts(self) -> tuple[int, int, int]:
        """(#saddles, #minima, #degenerate) after expanding each orbit."""
        pts = self.points()
        n_s = sum(k == SADDLE for *_, k in pts) * self.n
        n_m = sum(k == MINIMUM for *_, k in pts) * self.n + int(self.origin_flag)
        n_d = sum(k == DEGENERATE for *_, k in pts) * self.n
        return n_s, n_m, n_d


def _ray_samples(rho: float, count: int = 10_000) -> tuple[np.ndarray, np.ndarray]:
    quarter = count // 4
    inner = np.unique(
        np.concatenate([np.geomspace(1e-6, 0.5, quarter), 1.0 - np.geomspace(1e-6, 0.5, quarter)])
    )
    outer = 1.0 + np.geomspace(1e-6, rho - 1.0, count - 2 * quarter)
    return inner, outer


def _roots_on(geometry: RingGeometry, phi: float, r: np.ndarray) -> list[float]:
    f = np.array([ring_radial_derivative(geometry, ri, phi) for ri in r])
    roots = []
    for k in np.nonzero(np.sign(f[:-1]) * np.sign(f[1:]) < 0)[0]:
        roots.append(brentq(lambda x: ring_radial_derivative(geometry, x, phi), r[k], r[k + 1],
                            xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200))
    for k in np.nonzero(f == 0.0)[0]:
        raise ConvergenceError(f"ray root sits on a sample point r={r[k]!r}; refine the grid")
    return sorted(roots)


def ring_critical_rays(geometry: RingGeometry, rho: float | None = None, merge_tol: float = 1e-6) -> RingCriticalSet:
    """Roots of ``V_r`` on the rays ``phi = 0`` and ``phi = pi/n``.

    Sign changes are bracketed on a dense sample of ``(0, 1)`` and
    ``(1, rho)`` and polished with Brent's method; each root is classified
    from the signs of ``V_rr`` and ``V_phiphi``.
    """
    n, mu = geometry.n, geometry.mu
    if n < 2 or (n == 2 and mu <= 0):
        raise ParameterDomainError("ring ray analysis needs n >= 3, or n = 2 with mu > 0")
    if rho is None:
        rho = 4.0
    half = math.pi / n
    inner, outer = _ray_samples(rho)

    zero_inner = _roots_on(geometry, 0.0, inner)
    zero_outer = _roots_on(geometry, 0.0, outer)
    half_inner = _roots_on(geometry, half, inner)
    half_outer = _roots_on(geometry, half, outer)

    for r in zero_inner + zero_outer:
        v_rr, v_pp = ring_second_derivatives(geometry, r, 0.0)
        if not (v_rr > 0 and v_pp < 0):
            raise ConvergenceError(f"root r={r} on phi=0 is not a saddle (V_rr={v_rr}, V_pp={v_pp})")
    if len(zero_outer) != 1:
        raise ConvergenceError(f"expected one root beyond the ring on phi=0, found {zero_outer}")
    if len(half_outer) != 1:
        raise ConvergenceError(f"expected one root beyond the ring on phi=pi/n, found {half_outer}")
    r1 = zero_outer[0]
    r3 = half_outer[0]

    r4 = r5 = degenerate = None
    if mu > 0:
        if len(zero_inner) != 1:
            raise ConvergenceError(f"expected one inner root on phi=0, found {zero_inner}")
        r2, r2_ray = zero_inner[0], 0.0
        if len(half_inner) == 2:
            a, b = half_inner
            if b - a < merge_tol:
                degenerate = 0.5 * (a + b)
            else:
                r4, r5 = a, b
        elif len(half_inner) != 0:
            raise ConvergenceError(f"unexpected inner roots on phi=pi/n: {half_inner}")
    else:
        if zero_inner:
            raise ConvergenceError(f"unexpected inner roots on phi=0 with mu=0: {zero_inner}")
        if len(half_inner) != 1:
            raise ConvergenceError(f"expected one inner root on phi=pi/n with mu=0, found {half_inner}")
        r2, r2_ray = half_inner[0], half

    if r4 is not None:
        rr4, _ = ring_second_derivatives(geometry, r4, half)
        rr5, _ = ring_second_derivatives(geometry, r5, half)
        if not (rr4 > 0 > rr5):
            raise ConvergenceError(f"inner pair misclassified: V_rr(r4)={rr4}, V_rr(r5)={rr5}")
    return RingCriticalSet(
        n=n, mu=mu, r1=r1, r2=r2, r2_ray=r2_ray, r3=r3, r4=r4, r5=r5,
        origin_flag=(mu == 0 and n >= 3), degenerate=degenerate,
    )


def ring_equilibria_from_rays(config: PrimaryConfiguration, crit: RingCriticalSet) -> list[Equilibrium]:
    """Expand the ray roots into their full dihedral orbits as Equilibrium records."""
    zeta = 2.0 * math.pi / crit.n
    out = []
    if crit.origin_flag:
        out.append(make_equilibrium(config, [0.0, 0.0]))
    for r, phi, _ in crit.points():
        for j in range(crit.n):
            ang = phi + j * zeta
            out.append(newton_refine(config, [r * math.cos(ang), r * math.sin(ang)]))
    return out
