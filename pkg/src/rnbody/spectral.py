"""Linearised blocks at an equilibrium, onset frequencies and index jumps.

At an equilibrium ``x0`` the linearisation of the periodic-orbit operator on
the Fourier mode ``l`` with frequency ``nu`` is ``M(l nu)``, where

    M(lam) = lam**2 I - 2 i lam Jbar + D^2 V(x0) = diag(M0(lam), M1(lam)).

``M0`` is the Hermitian 2x2 in-plane block and ``M1`` the scalar normal
block. Planar branches start where ``M0`` is singular (``nu_+``, ``nu_-``),
spatial "eight" branches where ``M1`` vanishes (``nu_1``). The integer jump
``eta`` of the Morse index across such a frequency, multiplied by the local
index ``sigma``, decides whether a global branch emanates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .configuration import PrimaryConfiguration
from .equilibria import DEGENERATE, Equilibrium
from .errors import ParameterDomainError, SingularBlockError

J = np.array([[0.0, -1.0], [1.0, 0.0]])

PLANAR = "PlanarZ2"
EIGHT = "EightZ2tilde"

RESONANCE_TOL = 1e-9
DEFAULT_MODE_CUTOFF = 16
SINGULAR_TOL = 1e-12


@dataclass(frozen=True)
class BifurcationPoint:
    nu: float
    symmetry: str
    eta: int
    resonant_flags: tuple[tuple[str, int, float], ...] = ()

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.nu

    def to_dict(self) -> dict:
        return {
            "nu": self.nu,
            "period": self.period,
            "symmetry": self.symmetry,
            "eta": self.eta,
            "resonances": [
                {"root": root, "l": l, "ratio_error": err} for root, l, err in self.resonant_flags
            ],
        }


@dataclass(frozen=True)
class PlanarOutcome:
    """Planar bifurcation points together with why the list may be empty."""

    points: tuple[BifurcationPoint, ...]
    reason: str


@dataclass(frozen=True)
class SpectralData:
    T: float
    D: float
    nu_plus: float | None
    nu_minus: float | None
    nu1: float
    sigma: int


def _hessian_2x2(eq) -> np.ndarray:
    return np.asarray(eq.hessian.planar if isinstance(eq, Equilibrium) else eq, dtype=float)


def block_M1(eq: Equilibrium, lam: float) -> float:
    return lam * lam - eq.nu1_squared


def block_M0(eq: Equilibrium, lam: float) -> np.ndarray:
    """``lam**2 I - 2 i lam J + H`` with ``H`` the planar Hessian block."""
    H = _hessian_2x2(eq)
    return lam * lam * np.eye(2) - 2j * lam * J + H


def hermitian_eigvalsh(M: np.ndarray) -> tuple[float, float]:
    """Eigenvalues of a Hermitian 2x2 matrix from its trace and determinant, ascending."""
    a = M[0, 0].real
    d = M[1, 1].real
    b = M[0, 1]
    half = 0.5 * (a + d)
    rad = math.hypot(0.5 * (a - d), abs(b))
    lo, hi = half - rad, half + rad
    # recover the small eigenvalue from the determinant when it cancels
    det = a * d - abs(b) ** 2
    if abs(lo) < abs(hi) and hi != 0.0:
        lo = det / hi
    elif lo != 0.0:
        hi = det / lo
    return (lo, hi) if lo <= hi else (hi, lo)


def det_M0(eq: Equilibrium, lam: float) -> float:
    M = block_M0(eq, lam)
    return float((M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]).real)


def det_M0_quartic(T: float, D: float, lam: float) -> float:
    return lam**4 - 2.0 * (2.0 - T / 2.0) * lam**2 + D


def morse_index_M0(eq: Equilibrium, lam: float) -> int:
    """Number of negative eigenvalues of ``M0(lam)``.

    Raises
    ------
    SingularBlockError
        If ``|det M0(lam)| <= 1e-12``; move ``lam`` off the bifurcation value.
    """
    M = block_M0(eq, lam)
    if abs(det_M0(eq, lam)) <= SINGULAR_TOL:
        raise SingularBlockError(f"M0({lam}) is singular")
    lo, hi = hermitian_eigvalsh(M)
    return int(lo < 0) + int(hi < 0)


def morse_index_M1(eq: Equilibrium, lam: float) -> int:
    v = block_M1(eq, lam)
    if abs(v) <= SINGULAR_TOL:
        raise SingularBlockError(f"M1({lam}) vanishes")
    return int(v < 0)


def probe_offset(nu: float) -> float:
    return 1e-6 * (1.0 + nu)


def index_jump(eq: Equilibrium, block: int, nu: float, rho: float | None = None) -> int:
    """``sigma * (n_k(nu - rho) - n_k(nu + rho))`` computed from the Morse indices."""
    if rho is None:
        rho = probe_offset(nu)
    idx = morse_index_M0 if block == 0 else morse_index_M1
    return eq.sigma * (idx(eq, nu - rho) - idx(eq, nu + rho))


def onset_frequencies(T: float, D: float) -> tuple[float | None, float | None]:
    """Real positive roots ``nu_+ >= nu_-`` of ``nu**4 - 2 (2 - T/2) nu**2 + D``, if any."""
    b = 2.0 - T / 2.0
    disc = b * b - D
    if disc < 0:
        return None, None
    root = math.sqrt(disc)
    hi = b + root
    # product of the squared roots is D; avoids cancellation in b - root
    lo = D / hi if hi != 0 else b - root
    nu_p = math.sqrt(hi) if hi > 0 else None
    nu_m = math.sqrt(lo) if lo > 0 else None
    return nu_p, nu_m


def spectral_data(eq: Equilibrium) -> SpectralData:
    nu_p, nu_m = onset_frequencies(eq.T, eq.D)
    return SpectralData(eq.T, eq.D, nu_p, nu_m, math.sqrt(eq.nu1_squared), eq.sigma)


def planar_bifurcations(eq: Equilibrium, double_root_tol: float = 1e-12) -> PlanarOutcome:
    """Planar onset frequencies with their index jumps, by case analysis on ``(T, D)``.

    Saddles (``D < 0``) give one point ``(nu_+, -1)``. Minima with
    ``(2 - T/2)**2 > D`` and ``T < 4`` give ``(nu_+, +1)`` and ``(nu_-, -1)``.
    Otherwise the list is empty and ``reason`` says why.
    """
    if eq.kind == DEGENERATE:
        raise ParameterDomainError("degenerate equilibrium: V is not Morse there, no planar analysis")
    T, D = eq.T, eq.D
    b = 2.0 - T / 2.0
    disc = b * b - D
    nu_p, nu_m = onset_frequencies(T, D)
    if D < 0:
        return PlanarOutcome((BifurcationPoint(nu_p, PLANAR, -1),), "saddle")
    if abs(disc) <= double_root_tol * max(1.0, b * b):
        return PlanarOutcome((), "double_root")
    if disc < 0:
        return PlanarOutcome((), "complex")
    if T >= 4:
        return PlanarOutcome((), "no_positive_roots")
    return PlanarOutcome(
        (BifurcationPoint(nu_p, PLANAR, +1), BifurcationPoint(nu_m, PLANAR, -1)),
        "two_frequencies",
    )


def spatial_bifurcation(eq: Equilibrium, mode_cutoff: int = DEFAULT_MODE_CUTOFF) -> BifurcationPoint:
    """Eight-solution onset at ``nu_1`` with ``eta = sigma``.

    Resonances ``2 l nu_1 = nu_+-`` for ``l <= mode_cutoff`` are listed in
    ``resonant_flags`` as ``(root, l, |ratio - 1|)``; they do not suppress
    the point.
    """
    if eq.kind == DEGENERATE:
        raise ParameterDomainError("degenerate equilibrium: no index is available")
    nu1 = math.sqrt(eq.nu1_squared)
    nu_p, nu_m = onset_frequencies(eq.T, eq.D)
    flags = []
    for name, root in (("nu_plus", nu_p), ("nu_minus", nu_m)):
        if root is None:
            continue
        for l in range(1, mode_cutoff + 1):
            err = abs(root / (2 * l * nu1) - 1.0)
            if err < RESONANCE_TOL:
                flags.append((name, l, err))
    return BifurcationPoint(nu1, EIGHT, eq.sigma, tuple(flags))


def all_bifurcations(eq: Equilibrium, mode_cutoff: int = DEFAULT_MODE_CUTOFF) -> list[BifurcationPoint]:
    """Planar points (``nu_+`` before ``nu_-``) followed by the eight point."""
    return list(planar_bifurcations(eq).points) + [spatial_bifurcation(eq, mode_cutoff)]


def planar_resonance_values(T: float, D: float, m_max: int = 50) -> list[tuple[int, float]]:
    """Residuals ``|(4 - T)/sqrt(D) - (m + 1/m)|`` for ``m = 1..m_max``.

    A residual below ``1e-9`` marks the resonance ``nu_+ = m nu_-``.
    """
    if not D > 0:
        raise ParameterDomainError("resonance values need D > 0")
    q = (4.0 - T) / math.sqrt(D)
    return [(m, abs(q - (m + 1.0 / m))) for m in range(1, m_max + 1)]


def sign_det_full_M0(eq: Equilibrium) -> int:
    """Sign of ``det M(0)`` for the full 3x3 Hessian."""
    return int(np.sign(np.linalg.det(eq.hessian.full())))


def rotated_M0_spectrum(eq: Equilibrium, lam: float) -> np.ndarray:
    """Spectrum of ``diag(lam**2 + l1, lam**2 + l2) - 2 lam i J`` with ``l1, l2`` the Hessian eigenvalues."""
    l1, l2 = np.linalg.eigvalsh(_hessian_2x2(eq))
    M = np.diag([lam * lam + l1, lam * lam + l2]).astype(complex) - 2.0 * lam * 1j * J
    return np.linalg.eigvalsh(M)


# ---------------------------------------------------------------------------
# restricted three-body closed forms


@dataclass(frozen=True)
class TriangularForms:
    nu_plus: float | None
    nu_minus: float | None
    nu1: float
    routh_bound: float | None


@dataclass(frozen=True)
class CollinearForms:
    x: float
    nu1: float
    nu_plus: float


@dataclass(frozen=True)
class ThreeBodyForms:
    triangular: TriangularForms
    collinear: tuple[CollinearForms, ...] = field(default_factory=tuple)


def routh_bound(alpha: float) -> float | None:
    """Smaller root of ``mu (1 - mu) = (3 - alpha)**2 / (3 (alpha + 1)**2)``; None if no root."""
    c = (3.0 - alpha) ** 2 / (3.0 * (alpha + 1.0) ** 2)
    if c >= 0.25:
        return None
    return 2.0 * c / (1.0 + math.sqrt(1.0 - 4.0 * c))


def triangular_onset_squared(mu: float, alpha: float) -> tuple[float, float] | None:
    """``nu_+-**2 = (3 - alpha +- sqrt((3 - alpha)**2 - 3 (alpha + 1)**2 mu (1 - mu))) / 2``."""
    disc = (3.0 - alpha) ** 2 - 3.0 * (alpha + 1.0) ** 2 * mu * (1.0 - mu)
    if disc < 0:
        return None
    r = math.sqrt(disc)
    hi = 0.5 * (3.0 - alpha + r)
    lo = 0.75 * (alpha + 1.0) ** 2 * mu * (1.0 - mu) / hi
    return hi, lo


def collinear_nu_plus_squared(nu1_sq: float, alpha: float) -> float:
    """``1 - (alpha - 1) nu1**2 / 2 + sqrt((alpha + 1)**2 nu1**4 / 4 - 2 (alpha - 1) nu1**2)``."""
    return (
        1.0
        - 0.5 * (alpha - 1.0) * nu1_sq
        + math.sqrt(0.25 * (alpha + 1.0) ** 2 * nu1_sq**2 - 2.0 * (alpha - 1.0) * nu1_sq)
    )


def three_body_collinear_points(mu: float, alpha: float) -> list[float]:
    """x-coordinates of the three collinear equilibria, by bracketing on the axis."""
    x1, x2 = 1.0 - mu, -mu

    def vx(x: float) -> float:
        d1, d2 = x - x1, x - x2
        return x - mu * d1 / abs(d1) ** (alpha + 1.0) - (1.0 - mu) * d2 / abs(d2) ** (alpha + 1.0)

    eps = 1e-12
    out = [
        brentq(vx, x2 - 10.0, x2 - eps, xtol=1e-15),
        brentq(vx, x2 + eps, x1 - eps, xtol=1e-15),
        brentq(vx, x1 + eps, x1 + 10.0, xtol=1e-15),
    ]
    return out


def three_body_closed_forms(mu: float, alpha: float) -> ThreeBodyForms:
    if not 0 < mu < 1:
        raise ParameterDomainError("mu must lie in (0, 1)")
    if not 1 < alpha < 3:
        raise ParameterDomainError("alpha must lie in (1, 3)")
    tri = triangular_onset_squared(mu, alpha)
    triangular = TriangularForms(
        nu_plus=math.sqrt(tri[0]) if tri else None,
        nu_minus=math.sqrt(tri[1]) if tri else None,
        nu1=1.0,
        routh_bound=routh_bound(alpha),
    )
    coll = []
    for x in three_body_collinear_points(mu, alpha):
        nu1_sq = mu / abs(x - 1.0 + mu) ** (alpha + 1.0) + (1.0 - mu) / abs(x + mu) ** (alpha + 1.0)
        coll.append(CollinearForms(x, math.sqrt(nu1_sq), math.sqrt(collinear_nu_plus_squared(nu1_sq, alpha))))
    return ThreeBodyForms(triangular, tuple(coll))


# ---------------------------------------------------------------------------
# report


def equilibrium_report(eq: Equilibrium, mode_cutoff: int = DEFAULT_MODE_CUTOFF) -> dict:
    """JSON-ready spectral summary of one equilibrium."""
    out = {
        "position": [float(eq.position[0]), float(eq.position[1])],
        "kind": eq.kind,
        "T": eq.T,
        "D": eq.D,
        "sigma": eq.sigma,
        "nu1_squared": eq.nu1_squared,
    }
    if eq.kind == DEGENERATE:
        out["bifurcations"] = []
        out["warning"] = "degenerate equilibrium; index jumps not computed"
        return out
    planar = planar_bifurcations(eq)
    out["planar_reason"] = planar.reason
    out["bifurcations"] = [b.to_dict() for b in planar.points] + [
        spatial_bifurcation(eq, mode_cutoff).to_dict()
    ]
    return out


def write_spectrum_json(config: PrimaryConfiguration, equilibria, path: str | Path,
                        mode_cutoff: int = DEFAULT_MODE_CUTOFF) -> list[dict]:
    reports = [equilibrium_report(e, mode_cutoff) for e in equilibria]
    doc = {"config": config.to_dict(), "equilibria": reports}
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2)
    return reports

