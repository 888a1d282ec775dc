"""The ring sum ``S(r, phi) = sum_j |r - exp(i (j zeta - phi))|**-beta``.

Two independent evaluations are offered: the direct ``n``-term sum and an
integral representation over ``tau in (0, 1)``,

    S = (n/pi) sin(pi beta/2) int_0^1 (1/tau - 1)**(-beta/2) f(tau) dtau,
    f(tau) = (1 - (r tau)**(2n)) / (tau (1 - r**2 tau)**(beta/2) |1 - (tau r e^{-i phi})**n|**2),

valid for ``0 < r < 1`` and ``0 < beta < 2``. The integrand carries the
Jacobi weight ``tau**(beta/2 - 1) (1 - tau)**(-beta/2)`` times a function
that is smooth on the closed interval, so Gauss-Jacobi quadrature absorbs
both endpoint singularities exactly. Radii beyond the ring use
``S(r) = r**-beta S(1/r)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import roots_jacobi

from .errors import CollisionError, ParameterDomainError, QuadratureError

RADIUS_GAP = 1e-6
QUAD_TOL = 1e-11
N_START = 16
N_MAX = 4096


@dataclass(frozen=True)
class RingSumQuery:
    n: int
    beta: float
    r: float
    phi: float

    def __post_init__(self) -> None:
        if int(self.n) != self.n or self.n < 2:
            raise ParameterDomainError(f"n must be an integer >= 2, got {self.n!r}")
        if not 0.0 < self.beta < 2.0:
            raise ParameterDomainError(f"beta must lie in (0, 2), got {self.beta!r}")
        if not self.r > 0.0:
            raise ParameterDomainError(f"r must be positive, got {self.r!r}")
        if abs(self.r - 1.0) < RADIUS_GAP:
            raise ParameterDomainError("r must stay at least 1e-6 away from the ring radius 1")

    @property
    def zeta(self) -> float:
        return 2.0 * math.pi / self.n

    def inverted(self) -> "RingSumQuery":
        return RingSumQuery(self.n, self.beta, 1.0 / self.r, self.phi)


@dataclass(frozen=True)
class AngularDerivative:
    """``S_phi = -sin(n phi) * omega``; ``integrand_min`` is the smallest sampled
    value of the smooth part of the omega integrand."""

    s_phi: float
    omega: float
    integrand_min: float


def direct_sum_S(q: RingSumQuery) -> float:
    theta = q.zeta * np.arange(1, q.n + 1) - q.phi
    d2 = q.r * q.r + 1.0 - 2.0 * q.r * np.cos(theta)
    if np.min(d2) <= 0.0:
        raise CollisionError("query point coincides with a ring vertex", distance=0.0)
    return math.fsum(d2 ** (-0.5 * q.beta))


def direct_sum_S_phi(q: RingSumQuery) -> float:
    """Angular derivative of the direct sum (used as a cross-check)."""
    theta = q.zeta * np.arange(1, q.n + 1) - q.phi
    d2 = q.r * q.r + 1.0 - 2.0 * q.r * np.cos(theta)
    # d(d2)/dphi = -2 r sin(theta)
    return math.fsum(-0.5 * q.beta * d2 ** (-0.5 * q.beta - 1.0) * (-2.0 * q.r * np.sin(theta)))


@lru_cache(maxsize=64)
def _jacobi_rule(npts: int, beta: float) -> tuple[np.ndarray, np.ndarray]:
    """Nodes in tau and weights for the weight ``tau**(beta/2-1) (1-tau)**(-beta/2)`` on (0, 1)."""
    # scipy's (1-x)**a (1+x)**b on [-1, 1]; a + b = -1 triggers a harmless 0/0 in the k=1 term
    with np.errstate(invalid="ignore", divide="ignore"):
        x, w = roots_jacobi(npts, -0.5 * beta, 0.5 * beta - 1.0)
    tau = 0.5 * (1.0 + x)
    # the Jacobian 1/2 and the factors 2**-a, 2**-b combine to 2**(-(a+b+1)) = 1
    tau.flags.writeable = False
    w.flags.writeable = False
    return tau, w


def _denominator(q: RingSumQuery, tau: np.ndarray) -> np.ndarray:
    z = (tau * q.r * np.exp(-1j * q.phi)) ** q.n
    return np.abs(1.0 - z) ** 2


def _s_smooth(q: RingSumQuery, tau: np.ndarray) -> np.ndarray:
    rt = q.r * tau
    return (1.0 - rt ** (2 * q.n)) / ((1.0 - q.r * q.r * tau) ** (0.5 * q.beta) * _denominator(q, tau))


def _omega_smooth(q: RingSumQuery, tau: np.ndarray) -> np.ndarray:
    rt = q.r * tau
    return (
        2.0 * rt**q.n * (1.0 - rt ** (2 * q.n))
        / ((1.0 - q.r * q.r * tau) ** (0.5 * q.beta) * _denominator(q, tau) ** 2)
    )


@lru_cache(maxsize=32)
def _legendre_rule(npts: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(npts)


def _graded_panels(r: float) -> list[tuple[float, float]]:
    """Panels refined geometrically toward tau = 1, where the integrand's
    near-poles sit at distance about ``1 - r``."""
    levels = max(1, math.ceil(math.log2(1.0 / (1.0 - r)))) + 2
    edges = [0.0] + [1.0 - 2.0**-k for k in range(1, levels + 1)] + [1.0]
    return list(zip(edges[:-1], edges[1:]))


def _composite(q: RingSumQuery, smooth, npts: int) -> tuple[float, float]:
    """Graded composite rule: Jacobi end panels carry the endpoint powers,
    Gauss-Legendre handles the interior panels with the weight evaluated."""
    A, B = 0.5 * q.beta - 1.0, -0.5 * q.beta
    panels = _graded_panels(q.r)
    total = 0.0
    vmin = math.inf
    # first panel [0, c]: tau**A by Jacobi, (1 - tau)**B evaluated
    c = panels[0][1]
    with np.errstate(invalid="ignore", divide="ignore"):
        x, w = roots_jacobi(npts, 0.0, A)
    tau = 0.5 * c * (1.0 + x)
    vals = smooth(q, tau)
    total += (0.5 * c) ** (A + 1.0) * float(np.dot(w, (1.0 - tau) ** B * vals))
    vmin = min(vmin, float(np.min(vals)))
    xl, wl = _legendre_rule(npts)
    for lo, hi in panels[1:-1]:
        tau = lo + 0.5 * (hi - lo) * (1.0 + xl)
        vals = smooth(q, tau)
        total += 0.5 * (hi - lo) * float(np.dot(wl, tau**A * (1.0 - tau) ** B * vals))
        vmin = min(vmin, float(np.min(vals)))
    # last panel [d, 1]: (1 - tau)**B by Jacobi, tau**A evaluated
    d = panels[-1][0]
    half = 0.5 * (1.0 - d)
    with np.errstate(invalid="ignore", divide="ignore"):
        x, w = roots_jacobi(npts, B, 0.0)
    tau = 1.0 - half * (1.0 - x)
    vals = smooth(q, tau)
    total += half ** (B + 1.0) * float(np.dot(w, tau**A * vals))
    vmin = min(vmin, float(np.min(vals)))
    return total, vmin


def _adaptive(q: RingSumQuery, smooth, tol: float) -> tuple[float, float, float]:
    """Quadrature with doubling node counts until successive values agree.

    A single Gauss-Jacobi rule is used unless ``r`` is close to 1, in which
    case the graded composite rule takes over.
    """
    graded = q.r > 0.95
    prev = None
    npts = N_START
    limit = 512 if graded else N_MAX
    while npts <= limit:
        if graded:
            est, vmin = _composite(q, smooth, npts)
        else:
            tau, w = _jacobi_rule(npts, q.beta)
            vals = smooth(q, tau)
            est, vmin = float(np.dot(w, vals)), float(np.min(vals))
        if prev is not None:
            err = abs(est - prev)
            if err < tol * max(1.0, abs(est)):
                return est, err, vmin
        prev = est
        npts *= 2
    raise QuadratureError(
        f"quadrature did not converge for {q} within {limit} nodes per rule",
        estimate=abs(est - prev),
    )


def _prefactor(q: RingSumQuery) -> float:
    return q.n / math.pi * math.sin(0.5 * math.pi * q.beta)


def integral_S(q: RingSumQuery, tol: float = QUAD_TOL) -> float:
    """Integral representation of ``S`` for ``r < 1``."""
    if not q.r < 1.0 - RADIUS_GAP:
        raise ParameterDomainError("integral_S needs r < 1 - 1e-6; use extended_S beyond the ring")
    val, _, _ = _adaptive(q, _s_smooth, tol)
    return _prefactor(q) * val


def extended_S(q: RingSumQuery, tol: float = QUAD_TOL) -> float:
    """``S`` for ``r > 1`` from ``S(r) = r**-beta S(1/r)``."""
    if not q.r > 1.0 + RADIUS_GAP:
        raise ParameterDomainError("extended_S needs r > 1 + 1e-6")
    return q.r ** (-q.beta) * integral_S(q.inverted(), tol)


def ring_sum(q: RingSumQuery, tol: float = QUAD_TOL) -> float:
    """Integral evaluation on either side of the ring."""
    return integral_S(q, tol) if q.r < 1.0 else extended_S(q, tol)


def integral_S_phi(q: RingSumQuery, tol: float = QUAD_TOL) -> AngularDerivative:
    """``S_phi = -sin(n phi) omega(r, phi)`` with ``omega`` from its integral; ``r < 1``."""
    if not q.r < 1.0 - RADIUS_GAP:
        raise ParameterDomainError("integral_S_phi needs r < 1 - 1e-6")
    val, _, vmin = _adaptive(q, _omega_smooth, tol)
    omega = q.n * _prefactor(q) * val
    return AngularDerivative(-math.sin(q.n * q.phi) * omega, omega, vmin)


def ring_sum_phi(q: RingSumQuery, tol: float = QUAD_TOL) -> AngularDerivative:
    """Angular derivative on either side of the ring."""
    if q.r < 1.0:
        return integral_S_phi(q, tol)
    inner = integral_S_phi(q.inverted(), tol)
    scale = q.r ** (-q.beta)
    return AngularDerivative(scale * inner.s_phi, scale * inner.omega, inner.integrand_min)


DEFAULT_GRID = {
    "n": (2, 3, 5, 7, 12),
    "beta": (0.5, 1.0, 1.5),
    "r": (0.1, 0.5, 0.9, 2.0, 10.0),
    "phi": tuple(0.05 + k * 0.77 for k in range(8)),
}


def ringsum_table(grid: dict | None = None) -> list[dict]:
    """Direct-vs-integral comparison rows over a parameter grid."""
    grid = grid or DEFAULT_GRID
    rows = []
    for n in grid["n"]:
        for beta in grid["beta"]:
            for r in grid["r"]:
                for phi in grid["phi"]:
                    q = RingSumQuery(n, beta, r, phi)
                    direct = direct_sum_S(q)
                    integ = ring_sum(q)
                    rows.append(
                        {"n": n, "beta": beta, "r": r, "phi": phi, "direct": direct,
                         "integral": integ, "rel_err": abs(integ - direct) / abs(direct)}
                    )
    return rows


def write_ringsum_csv(rows: list[dict], path: str | Path) -> None:
    cols = ["n", "beta", "r", "phi", "direct", "integral", "rel_err"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row["n"]] + [f"{row[c]:.17g}" for c in cols[1:]])
