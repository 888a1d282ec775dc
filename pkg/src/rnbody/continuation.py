"""Periodic satellite orbits as truncated Fourier series, and their continuation.

A ``2 pi / nu`` periodic orbit is rescaled to a ``2 pi`` periodic loop
``x(t) = sum_{|l| <= p} x_l exp(i l t)`` solving

    f(x) = -nu**2 x'' - 2 nu Jbar x' + grad V(x) = 0,

whose Fourier modes are ``F_l = l**2 nu**2 x_l - 2 i l nu Jbar x_l + g_l``
with ``g_l`` the modes of ``grad V(x(t))``. The nonlinear term is evaluated
pseudo-spectrally on ``4p + 4`` equispaced samples.

Branches are traced by pseudo-arclength continuation in the unknowns
``(x, nu)``. Time-shift invariance is removed by an integral phase condition
against the previous loop, and the system is squared with an unfolding term
``gamma * x'``: since ``<f(x), x'> = 0`` identically (energy conservation),
solutions have ``gamma = 0``. Symmetric families are solved inside their
fixed-point subspaces:

* ``PlanarZ2``: ``z == 0``;
* ``EightZ2tilde``: ``x, y`` keep only even modes and ``z`` only odd modes,
  i.e. ``x(t+pi) = x(t)``, ``y(t+pi) = y(t)``, ``z(t+pi) = -z(t)``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path

import numpy as np

from .configuration import PrimaryConfiguration, rotation_order
from .equilibria import Equilibrium
from .errors import CollisionError, ConvergenceError, ParameterDomainError
from .potential import COLLISION_GUARD, hessian_full, potential_gradient
from .spectral import EIGHT, PLANAR, BifurcationPoint, all_bifurcations, block_M0

NO_SYMMETRY = "None"
SYMMETRIES = (PLANAR, EIGHT, NO_SYMMETRY)

JBAR = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])

# termination kinds
COLLISION = "CollisionApproach"
NORM_BLOWUP = "NormBlowup"
PERIOD_BLOWUP = "PeriodBlowup"
FREQUENCY_FLOOR = "FrequencyFloor"
FREQUENCY_CEILING = "FrequencyCeiling"
RETURN = "ReturnToEquilibrium"
STEP_LIMIT = "StepLimit"
CORRECTOR_FAILURE = "CorrectorFailure"
NON_ADMISSIBLE = (COLLISION, NORM_BLOWUP, PERIOD_BLOWUP, FREQUENCY_FLOOR)


def samples_for(p: int) -> int:
    return 4 * p + 4


# ---------------------------------------------------------------------------
# loops


@dataclass(frozen=True, eq=False)
class FourierLoop:
    """Truncated Fourier loop; ``coefficients[l + p]`` is the complex 3-vector ``x_l``.

    ``amplitude`` is ``max_t |x(t) - anchor|`` for the equilibrium the loop
    was built around. ``axial`` marks loops confined to the z-axis through a
    rotation centre of the primaries.
    """

    coefficients: np.ndarray
    nu: float
    symmetry: str = NO_SYMMETRY
    amplitude: float = 0.0
    axial: bool = False

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim != 2 or c.shape[1] != 3 or c.shape[0] % 2 != 1:
            raise ParameterDomainError(f"coefficients must have shape (2p+1, 3), got {c.shape}")
        if self.symmetry not in SYMMETRIES:
            raise ParameterDomainError(f"unknown symmetry class {self.symmetry!r}")
        c = c.copy()
        c.flags.writeable = False
        object.__setattr__(self, "coefficients", c)

    @property
    def p(self) -> int:
        return (self.coefficients.shape[0] - 1) // 2

    @property
    def period(self) -> float:
        return 2.0 * math.pi / self.nu

    def mode(self, l: int) -> np.ndarray:
        return self.coefficients[l + self.p]

    def reality_error(self) -> float:
        c = self.coefficients
        return float(np.max(np.abs(c - np.conj(c[::-1]))))

    def samples(self, n_samples: int | None = None) -> np.ndarray:
        """Positions ``x(2 pi k / N)`` for ``k = 0..N-1``; shape (N, 3)."""
        n = n_samples or samples_for(self.p)
        return _synth_complex(self.coefficients, n)

    def velocity_samples(self, n_samples: int | None = None) -> np.ndarray:
        l = np.arange(-self.p, self.p + 1)[:, None]
        n = n_samples or samples_for(self.p)
        return _synth_complex(1j * l * self.coefficients, n)

    def with_anchor(self, anchor) -> "FourierLoop":
        return replace(self, amplitude=loop_amplitude(self, anchor))


def _synth_complex(coeffs: np.ndarray, n: int) -> np.ndarray:
    p = (coeffs.shape[0] - 1) // 2
    if n <= 2 * p:
        raise ParameterDomainError(f"{n} samples cannot resolve {p} modes")
    full = np.zeros((n, 3), dtype=complex)
    l = np.arange(-p, p + 1)
    full[l % n] = coeffs
    return np.real(np.fft.ifft(full, axis=0) * n)


def loop_amplitude(loop: FourierLoop, anchor, n_samples: int | None = None) -> float:
    a = np.zeros(3)
    a[: len(np.ravel(anchor))] = np.ravel(anchor)
    x = loop.samples(n_samples or 4 * samples_for(loop.p))
    return float(np.max(np.linalg.norm(x - a, axis=1)))


def constant_loop(position, nu: float, p: int = 32, symmetry: str = NO_SYMMETRY) -> FourierLoop:
    c = np.zeros((2 * p + 1, 3), dtype=complex)
    c[p, : len(np.ravel(position))] = np.ravel(position)
    return FourierLoop(c, float(nu), symmetry, 0.0)


def symmetry_mask(p: int, symmetry: str, axial: bool = False) -> np.ndarray:
    """Boolean (2p+1, 3) mask of the coefficients allowed in a symmetry class."""
    mask = np.ones((2 * p + 1, 3), dtype=bool)
    l = np.abs(np.arange(-p, p + 1))
    if symmetry == PLANAR:
        mask[:, 2] = False
    elif symmetry == EIGHT:
        mask[l % 2 == 1, :2] = False
        mask[l % 2 == 0, 2] = False
    if axial:
        mask[:, :2] = False
    return mask


def apply_symmetry(loop: FourierLoop, symmetry: str, axial: bool | None = None) -> FourierLoop:
    """Project onto the fixed-point subspace of a symmetry class (idempotent)."""
    ax = loop.axial if axial is None else axial
    c = np.where(symmetry_mask(loop.p, symmetry, ax), loop.coefficients, 0.0)
    return replace(loop, coefficients=c, symmetry=symmetry, axial=ax)


def resize(loop: FourierLoop, p: int) -> FourierLoop:
    """Zero-pad or truncate to mode cutoff ``p``."""
    c = np.zeros((2 * p + 1, 3), dtype=complex)
    q = min(p, loop.p)
    c[p - q: p + q + 1] = loop.coefficients[loop.p - q: loop.p + q + 1]
    return replace(loop, coefficients=c)


def harmonic(loop: FourierLoop, m: int) -> FourierLoop:
    """The same orbit traversed ``m`` times per period: modes ``l -> m l``, ``nu -> nu/m``."""
    p = loop.p * m
    c = np.zeros((2 * p + 1, 3), dtype=complex)
    l = np.arange(-loop.p, loop.p + 1)
    c[m * l + p] = loop.coefficients
    return replace(loop, coefficients=c, nu=loop.nu / m)


def loop_residual(config: PrimaryConfiguration, loop: FourierLoop, n_samples: int | None = None) -> np.ndarray:
    """Complex modes ``F_l``, ``|l| <= p``, of the periodic-orbit operator; shape (2p+1, 3).

    Raises
    ------
    CollisionError
        If a sample lands within the collision guard of a primary.
    """
    p = loop.p
    n = n_samples or samples_for(p)
    x = loop.samples(n)
    g = potential_gradient(config, x)
    ghat = np.fft.fft(g, axis=0) / n
    l = np.arange(-p, p + 1)
    g_l = ghat[l % n]
    xl = loop.coefficients
    lin = (l**2 * loop.nu**2)[:, None] * xl - 2j * (l * loop.nu)[:, None] * (xl @ JBAR.T)
    return lin + g_l


def residual_norm(config: PrimaryConfiguration, loop: FourierLoop) -> float:
    """``max_l |F_l|``."""
    return float(np.max(np.linalg.norm(loop_residual(config, loop), axis=1)))


def energy_pairing(config: PrimaryConfiguration, loop: FourierLoop) -> float:
    """Discrete ``<f(x), x'>`` over one period (zero by energy conservation)."""
    F = loop_residual(config, loop)
    l = np.arange(-loop.p, loop.p + 1)[:, None]
    xdot = 1j * l * loop.coefficients
    return float(2.0 * math.pi * np.real(np.sum(F * np.conj(xdot))))


def tail_fraction(loop: FourierLoop) -> float:
    """Energy in modes ``|l| > p - 2`` relative to the total."""
    c = loop.coefficients
    l = np.abs(np.arange(-loop.p, loop.p + 1))
    e = np.sum(np.abs(c) ** 2, axis=1)
    total = float(np.sum(e))
    return float(np.sum(e[l > loop.p - 2]) / total) if total > 0 else 0.0


# ---------------------------------------------------------------------------
# real cos/sin discretisation used by the Newton solver
#
# each component is stored as [a_0, a_1..a_p, b_1..b_p] with
# x(t) = a_0 + sum a_l cos(l t) + b_l sin(l t), i.e. x_l = (a_l - i b_l)/2.


def _to_real(coeffs: np.ndarray) -> np.ndarray:
    p = (coeffs.shape[0] - 1) // 2
    pos = coeffs[p + 1:]
    return np.concatenate([coeffs[p: p + 1].real, 2.0 * pos.real, -2.0 * pos.imag], axis=0).T.copy()


def _from_real(c: np.ndarray) -> np.ndarray:
    K = c.shape[1]
    p = (K - 1) // 2
    a, b = c[:, 1: p + 1].T, c[:, p + 1:].T
    pos = 0.5 * (a - 1j * b)
    return np.concatenate([np.conj(pos[::-1]), c[:, :1].T.astype(complex), pos], axis=0)


def _real_mask(p: int, symmetry: str, axial: bool) -> np.ndarray:
    m = symmetry_mask(p, symmetry, axial)
    return np.concatenate([m[p: p + 1], m[p + 1:], m[p + 1:]], axis=0).T.copy()


@lru_cache(maxsize=16)
def _basis(p: int):
    n = samples_for(p)
    t = 2.0 * math.pi * np.arange(n) / n
    l = np.arange(1, p + 1)
    E = np.concatenate([np.ones((n, 1)), np.cos(np.outer(t, l)), np.sin(np.outer(t, l))], axis=1)
    P = np.concatenate([np.ones((1, n)) / n, 2.0 / n * np.cos(np.outer(l, t)), 2.0 / n * np.sin(np.outer(l, t))], axis=0)
    Q = np.concatenate([[0.0], l**2, l**2]).astype(float)
    Dm = np.zeros((2 * p + 1, 2 * p + 1))
    Dm[1: p + 1, p + 1:] = np.diag(l)  # cos coefficient of x' is l b_l
    Dm[p + 1:, 1: p + 1] = -np.diag(l)  # sin coefficient of x' is -l a_l
    W = np.concatenate([[1.0], 0.5 * np.ones(2 * p)])
    # index tables for the Galerkin product matrix
    lk = np.arange(p + 1)
    L, Kx = np.meshgrid(lk, lk, indexing="ij")
    for arr in (E, P, Q, Dm, W):
        arr.flags.writeable = False
    return n, E, P, Q, Dm, W, (L - Kx) % n, (L + Kx) % n


def _galerkin(h: np.ndarray, p: int) -> np.ndarray:
    """Matrix of ``c -> P (h * (E c))`` built from the FFT of the samples ``h``."""
    n, *_ , dif, tot = _basis(p)
    hh = np.fft.fft(h) / n
    re_d, im_d = hh.real[dif], hh.imag[dif]
    re_s, im_s = hh.real[tot], hh.imag[tot]
    # dif[l, k] = l - k, so im_d.T gives Im h_{k-l}
    K = 2 * p + 1
    G = np.empty((K, K))
    c, s = slice(1, p + 1), slice(p + 1, K)
    G[0, 0] = hh.real[0]
    G[0, c] = re_s[0, 1:]
    G[0, s] = -im_s[0, 1:]
    G[c, 0] = 2.0 * re_s[1:, 0]
    G[s, 0] = -2.0 * im_s[1:, 0]
    G[c, c] = re_d[1:, 1:] + re_s[1:, 1:]
    G[c, s] = -im_s[1:, 1:] - im_d.T[1:, 1:]
    G[s, c] = -im_s[1:, 1:] - im_d[1:, 1:]
    G[s, s] = re_d[1:, 1:] - re_s[1:, 1:]
    return G


class _System:
    """Residual and Jacobian in the real basis, restricted to a symmetry subspace."""

    def __init__(self, config: PrimaryConfiguration, p: int, symmetry: str, axial: bool):
        self.config = config
        self.p = p
        self.K = 2 * p + 1
        self.symmetry = symmetry
        self.axial = axial
        self.mask = _real_mask(p, symmetry, axial)
        self.free = np.flatnonzero(self.mask.ravel())
        (self.n, self.E, self.P, self.Q, self.Dm, self.W, *_) = _basis(p)

    def synth(self, c: np.ndarray) -> np.ndarray:
        return self.E @ c.T

    def xdot(self, c: np.ndarray) -> np.ndarray:
        return c @ self.Dm.T

    def residual(self, c: np.ndarray, nu: float) -> np.ndarray:
        x = self.synth(c)
        g = potential_gradient(self.config, x)
        lin = nu * nu * self.Q[None, :] * c - 2.0 * nu * JBAR @ self.xdot(c)
        return lin + (self.P @ g).T

    def jacobian(self, c: np.ndarray, nu: float) -> tuple[np.ndarray, np.ndarray]:
        """``dR/dc`` (3K x 3K) and ``dR/dnu`` (3K,)."""
        K = self.K
        x = self.synth(c)
        H = hessian_full(self.config, x)
        Jc = np.zeros((3 * K, 3 * K))
        comps = range(3) if not self.axial else [2]
        if self.symmetry == PLANAR:
            comps = [0, 1]
        for i in comps:
            for j in comps:
                Jc[i * K:(i + 1) * K, j * K:(j + 1) * K] = _galerkin(H[:, i, j], self.p)
        Jc += np.kron(nu * nu * np.eye(3), np.diag(self.Q)) - 2.0 * nu * np.kron(JBAR, self.Dm)
        dnu = (2.0 * nu * self.Q[None, :] * c - 2.0 * JBAR @ self.xdot(c)).ravel()
        return Jc, dnu


# ---------------------------------------------------------------------------
# corrector


@dataclass(frozen=True, eq=False)
class LinearConstraint:
    """``<direction, c> + nu_weight * nu = value`` in the real coefficient layout (3, 2p+1)."""

    direction: np.ndarray
    nu_weight: float
    value: float


@dataclass(frozen=True, eq=False)
class Constraints:
    """Phase reference loop plus one linear constraint (amplitude or arclength)."""

    phase_reference: FourierLoop
    constraint: LinearConstraint


@dataclass(frozen=True, eq=False)
class Correction:
    loop: FourierLoop
    iterations: int
    gamma: float
    residual: float


def _phase_row(sys: _System, ref: FourierLoop) -> np.ndarray:
    cref = _to_real(resize(ref, sys.p).coefficients)
    row = (sys.W[None, :] * sys.xdot(cref)).ravel()
    return row


def corrector(
    config: PrimaryConfiguration,
    predictor: FourierLoop,
    constraints: Constraints,
    max_iter: int = 25,
    tol: float = 1e-10,
) -> Correction:
    """Newton solve of the Fourier residual with phase and linear constraints.

    The symmetry projection is applied to the predictor and every update
    stays in the subspace. Returns the corrected loop with its iteration
    count; iteration 0 means the predictor already met the tolerance.

    Raises
    ------
    ConvergenceError
        Tolerance not met within ``max_iter`` iterations.
    CollisionError
        A sample of an iterate hit the collision guard.
    """
    sys = _System(config, predictor.p, predictor.symmetry, predictor.axial)
    free = sys.free
    m = len(free)
    c = _to_real(apply_symmetry(predictor, predictor.symmetry).coefficients)
    nu = float(predictor.nu)
    gamma = 0.0
    prow = _phase_row(sys, constraints.phase_reference)
    pscale = float(np.linalg.norm(prow[free]))
    if pscale == 0.0:
        raise ParameterDomainError("phase reference loop is constant")
    prow = prow / pscale
    cref = _to_real(resize(constraints.phase_reference, sys.p).coefficients).ravel()
    lc = constraints.constraint
    crow = np.asarray(lc.direction, dtype=float).ravel()

    def augmented(c, nu, gamma):
        R = sys.residual(c, nu) + gamma * sys.xdot(c)
        cf = c.ravel()
        return np.concatenate([
            R.ravel()[free],
            [prow[free] @ (cf - cref)[free]],
            [crow[free] @ cf[free] + lc.nu_weight * nu - lc.value],
        ])

    G = augmented(c, nu, gamma)
    it = 0
    while True:
        res = _residual_of(sys, c, nu)
        if res < tol and np.max(np.abs(G[m:])) < tol:
            break
        if it >= max_iter:
            raise ConvergenceError(f"corrector did not converge in {max_iter} iterations (residual {res:.2e})")
        Jc, dnu = sys.jacobian(c, nu)
        Jc = Jc + gamma * np.kron(np.eye(3), sys.Dm)
        A = np.zeros((m + 2, m + 2))
        A[:m, :m] = Jc[np.ix_(free, free)]
        A[:m, m] = dnu[free]
        A[:m, m + 1] = sys.xdot(c).ravel()[free]
        A[m, :m] = prow[free]
        A[m + 1, :m] = crow[free]
        A[m + 1, m] = lc.nu_weight
        try:
            du = np.linalg.solve(A, -G)
        except np.linalg.LinAlgError as exc:
            raise ConvergenceError(f"singular corrector Jacobian: {exc}") from exc
        cf = c.ravel().copy()
        cf[free] += du[:m]
        c = cf.reshape(3, sys.K)
        nu += du[m]
        gamma += du[m + 1]
        if not (np.all(np.isfinite(c)) and np.isfinite(nu)) or nu <= 0:
            raise ConvergenceError("corrector diverged")
        it += 1
        G = augmented(c, nu, gamma)
    loop = FourierLoop(_from_real(c), nu, predictor.symmetry, predictor.amplitude, predictor.axial)
    return Correction(loop, it, gamma, res)


def _residual_of(sys: _System, c: np.ndarray, nu: float) -> float:
    R = sys.residual(c, nu)
    # |F_l| = |(R^c_l, R^s_l)| / 2 for l >= 1
    p = sys.p
    r0 = np.abs(R[:, 0])
    rl = 0.5 * np.sqrt(np.sum(R[:, 1: p + 1] ** 2 + R[:, p + 1:] ** 2, axis=0))
    return float(max(np.linalg.norm(r0), np.max(rl) if p else 0.0))


# ---------------------------------------------------------------------------
# branch start


def _kernel_M0(eq: Equilibrium, nu: float) -> np.ndarray:
    M = block_M0(eq, nu)
    v1 = np.array([-M[0, 1], M[0, 0]])
    v2 = np.array([M[1, 1], -M[1, 0]])
    v = v1 if np.linalg.norm(v1) >= np.linalg.norm(v2) else v2
    return v / np.linalg.norm(v)


def is_axial(config: PrimaryConfiguration, eq: Equilibrium) -> bool:
    """True when the equilibrium is a rotation centre of the primaries, so the
    z-axis through it is invariant."""
    return bool(np.hypot(*eq.position) < 1e-12 and rotation_order(config) >= 2)


def onset_direction(eq: Equilibrium, bif: BifurcationPoint, p: int) -> FourierLoop:
    """Unit kernel direction (mode 1) of the singular block at ``bif.nu``."""
    c = np.zeros((2 * p + 1, 3), dtype=complex)
    if bif.symmetry == PLANAR:
        v = _kernel_M0(eq, bif.nu)
        c[p + 1, :2] = 0.5 * v
        c[p - 1, :2] = 0.5 * np.conj(v)
    elif bif.symmetry == EIGHT:
        c[p + 1, 2] = 0.5
        c[p - 1, 2] = 0.5
    else:
        raise ParameterDomainError(f"no onset direction for symmetry {bif.symmetry!r}")
    return FourierLoop(c, bif.nu, bif.symmetry)


def real_coefficients(loop: FourierLoop) -> np.ndarray:
    """Cosine/sine coefficients, shape (3, 2p+1): ``[a_0, a_1..a_p, b_1..b_p]`` per component."""
    return _to_real(loop.coefficients)


def amplitude_constraint(eq: Equilibrium, bif: BifurcationPoint, p: int, epsilon: float) -> LinearConstraint:
    """Fix the projection of ``x - x0`` on the unit onset direction to ``epsilon``."""
    d = real_coefficients(onset_direction(eq, bif, p))
    c0 = real_coefficients(constant_loop(eq.position, bif.nu, p, bif.symmetry))
    return LinearConstraint(d, 0.0, float(np.sum(d * c0)) + epsilon)


def branch_start(
    config: PrimaryConfiguration,
    eq: Equilibrium,
    bif: BifurcationPoint,
    epsilon: float = 1e-4,
    p: int = 32,
    tol: float = 1e-10,
) -> Correction:
    """Corrected small loop at distance ``epsilon`` from the equilibrium along the kernel.

    The predictor is ``x0 + epsilon * Re(v exp(i t))`` with ``v`` the unit
    null vector of ``M0(nu)`` (planar) or the z unit vector (eight). The
    amplitude constraint fixes the projection of ``x - x0`` on that
    direction to ``epsilon``.
    """
    if not 1e-6 <= epsilon <= 1e-2:
        raise ParameterDomainError("epsilon must lie in [1e-6, 1e-2]")
    axial = bif.symmetry == EIGHT and is_axial(config, eq)
    direction = onset_direction(eq, bif, p)
    anchor = constant_loop(eq.position, bif.nu, p, bif.symmetry)
    pred = FourierLoop(anchor.coefficients + epsilon * direction.coefficients, bif.nu, bif.symmetry, axial=axial)
    cons = Constraints(pred, amplitude_constraint(eq, bif, p, epsilon))
    out = corrector(config, pred, cons, tol=tol)
    loop = out.loop.with_anchor(eq.position)
    return replace(out, loop=loop)


# ---------------------------------------------------------------------------
# branch tracing


@dataclass(frozen=True)
class Termination:
    kind: str
    primary: int | None = None
    distance: float | None = None
    equilibrium: tuple[float, float] | None = None
    frequency: float | None = None
    eta: int | None = None
    message: str = ""

    def to_dict(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if v is not None}


@dataclass(frozen=True)
class TraceOptions:
    max_steps: int = 2000
    ds_initial: float = 1e-2
    ds_min: float = 1e-6
    ds_max: float = 5e-2
    delta: float = 1e-3
    norm_cap: float = 50.0
    period_cap: float = 1e4
    frequency_floor: float = 1e-3
    frequency_ceiling: float = 1e3
    p: int = 32
    p_max: int = 256
    epsilon: float = 1e-3
    tail_tol: float = 1e-14
    return_radius: float = 5e-2
    return_frequency_tol: float = 1e-3
    fast_iterations: int = 3
    growth: float = 1.3
    both_directions: bool = True


@dataclass(frozen=True)
class BranchPoint:
    loop: FourierLoop
    arclength: float
    min_primary_distance: float
    closest_primary: int
    max_abs_z: float
    residual: float


@dataclass(frozen=True, eq=False)
class Branch:
    """A traced family. Points run from the negative to the positive
    direction, ordered by signed arclength (0 at the start loop)."""

    origin: BifurcationPoint
    anchor: Equilibrium
    points: tuple[BranchPoint, ...]
    termination: Termination
    reverse_termination: Termination | None = None

    @property
    def terminations(self) -> tuple[Termination, ...]:
        out = (self.termination,)
        return out + ((self.reverse_termination,) if self.reverse_termination else ())

    @property
    def admissible(self) -> bool:
        return all(t.kind == RETURN for t in self.terminations)

    def eta_sum(self) -> int | None:
        """Sum of index jumps over the end points of an admissible branch.

        Both directions of a Lyapunov family reach the same end point, so the
        positive direction alone is counted.
        """
        if not self.admissible:
            return None
        return self.origin.eta + int(self.termination.eta or 0)

    def loops(self) -> list[FourierLoop]:
        return [pt.loop for pt in self.points]


def _diagnostics(config: PrimaryConfiguration, loop: FourierLoop) -> tuple[int, float, float, float]:
    x = loop.samples(4 * samples_for(loop.p))
    d = np.linalg.norm(x[:, None, :2] - config.positions[None, :, :], axis=2)
    d = np.sqrt(d**2 + x[:, None, 2] ** 2)
    per = d.min(axis=0)
    k = int(np.argmin(per))
    return k, float(per[k]), float(np.max(np.abs(x[:, 2]))), float(np.max(np.linalg.norm(x, axis=1)))


class _Tracer:
    def __init__(self, config, eq, bif, opts: TraceOptions, equilibria):
        self.config = config
        self.eq = eq
        self.bif = bif
        self.opts = opts
        self.targets = []
        for e in equilibria:
            try:
                pts = all_bifurcations(e)
            except ParameterDomainError:
                continue
            for b in pts:
                if b.symmetry == bif.symmetry:
                    self.targets.append((e, b))

    def _state(self, loop: FourierLoop):
        sys = _System(self.config, loop.p, loop.symmetry, loop.axial)
        return sys, _to_real(loop.coefficients)

    def _tangent(self, loop: FourierLoop, gamma: float, previous: np.ndarray | None, orient: np.ndarray | None):
        """Unit null vector of the (residual, phase) Jacobian in (c_free, nu) space."""
        sys, c = self._state(loop)
        free = sys.free
        m = len(free)
        Jc, dnu = sys.jacobian(c, loop.nu)
        Jc = Jc + gamma * np.kron(np.eye(3), sys.Dm)
        A = np.zeros((m + 1, m + 2))
        A[:m, :m] = Jc[np.ix_(free, free)]
        A[:m, m] = dnu[free]
        A[:m, m + 1] = sys.xdot(c).ravel()[free]
        prow = _phase_row(sys, loop)
        A[m, :m] = prow[free] / np.linalg.norm(prow[free])
        if previous is None:
            _, _, vt = np.linalg.svd(A)
            t = vt[-1]
        else:
            B = np.vstack([A, previous])
            rhs = np.zeros(m + 2)
            rhs[-1] = 1.0
            t = np.linalg.solve(B, rhs)
        t[m + 1] = 0.0
        t /= np.linalg.norm(t)
        if orient is not None and t @ orient < 0:
            t = -t
        return t

    def _embed(self, loop: FourierLoop, t: np.ndarray, p_new: int) -> np.ndarray:
        """Re-express a tangent in the layout of a larger mode cutoff."""
        sys_old = _System(self.config, loop.p, loop.symmetry, loop.axial)
        full = np.zeros(3 * sys_old.K)
        full[sys_old.free] = t[: len(sys_old.free)]
        grown = resize(FourierLoop(_from_real(full.reshape(3, -1)), 1.0), p_new)
        sys_new = _System(self.config, p_new, loop.symmetry, loop.axial)
        cf = _to_real(grown.coefficients).ravel()[sys_new.free]
        return np.concatenate([cf, t[-2:]])

    def _check(self, loop: FourierLoop, left_start: bool) -> Termination | None:
        o = self.opts
        k, dmin, _, rmax = _diagnostics(self.config, loop)
        if dmin < o.delta:
            return Termination(COLLISION, primary=k, distance=dmin,
                               message=f"loop within {dmin:.3e} of primary {k}")
        if rmax > o.norm_cap:
            return Termination(NORM_BLOWUP, message=f"max |x| = {rmax:.3g} > {o.norm_cap:g}")
        if loop.period > o.period_cap:
            return Termination(PERIOD_BLOWUP, frequency=loop.nu, message=f"period {loop.period:.3g}")
        if loop.nu < o.frequency_floor:
            return Termination(FREQUENCY_FLOOR, frequency=loop.nu)
        if loop.nu > o.frequency_ceiling:
            return Termination(FREQUENCY_CEILING, frequency=loop.nu)
        if left_start:
            for e, b in self.targets:
                amp = loop_amplitude(loop, e.position)
                close_freq = abs(loop.nu - b.nu) < o.return_frequency_tol
                if amp < 2.0 * o.epsilon or (amp < o.return_radius and close_freq):
                    if close_freq or amp < 2.0 * o.epsilon:
                        return Termination(
                            RETURN, equilibrium=(float(e.position[0]), float(e.position[1])),
                            frequency=b.nu, eta=b.eta,
                            message=f"loop shrinks onto equilibrium {tuple(np.round(e.position, 9))}",
                        )
        return None

    def _point(self, loop: FourierLoop, s: float, res: float) -> BranchPoint:
        k, dmin, zmax, _ = _diagnostics(self.config, loop)
        return BranchPoint(loop, s, dmin, k, zmax, res)

    def run(self, start: Correction, sign: float) -> tuple[list[BranchPoint], Termination]:
        o = self.opts
        loop = start.loop
        gamma = start.gamma
        direction = _to_real(onset_direction(self.eq, self.bif, loop.p).coefficients)
        sys, _ = self._state(loop)
        orient = np.concatenate([direction.ravel()[sys.free], [0.0, 0.0]]) * sign
        t = self._tangent(loop, gamma, None, orient)
        s = 0.0
        ds = o.ds_initial
        points: list[BranchPoint] = []
        left_start = False
        last_error = ""
        for _ in range(o.max_steps):
            # grow the mode cutoff when the spectrum is not resolved
            if tail_fraction(loop) > o.tail_tol and loop.p < o.p_max:
                p_new = min(o.p_max, 2 * loop.p)
                t = self._embed(loop, t, p_new)
                loop = resize(loop, p_new)
            sys, c = self._state(loop)
            free = sys.free
            m = len(free)
            u = np.concatenate([c.ravel()[free], [loop.nu]])
            while True:
                upred = u + ds * t[: m + 1]
                cf = np.zeros(3 * sys.K)
                cf[free] = upred[:m]
                pred = FourierLoop(_from_real(cf.reshape(3, -1)), upred[m], loop.symmetry, axial=loop.axial)
                dir_full = np.zeros(3 * sys.K)
                dir_full[free] = t[:m]
                cons = Constraints(loop, LinearConstraint(dir_full.reshape(3, -1), t[m], float(t[: m + 1] @ u) + ds))
                try:
                    out = corrector(self.config, pred, cons)
                    break
                except (ConvergenceError, CollisionError, np.linalg.LinAlgError) as exc:
                    last_error = type(exc).__name__
                    ds *= 0.5
                    if ds < o.ds_min:
                        if isinstance(exc, CollisionError):
                            return points, Termination(COLLISION, primary=exc.primary, distance=exc.distance,
                                                       message="collision during correction")
                        return points, Termination(CORRECTOR_FAILURE, message=f"step below ds_min ({last_error})")
            new = out.loop.with_anchor(self.eq.position)
            s += sign * ds
            try:
                t = self._tangent(new, out.gamma, t, None)
            except np.linalg.LinAlgError:
                return points, Termination(CORRECTOR_FAILURE, message="singular tangent system")
            loop, gamma = new, out.gamma
            points.append(self._point(loop, s, out.residual))
            if loop.amplitude > max(10.0 * o.epsilon, 2.0 * o.return_radius):
                left_start = True
            term = self._check(loop, left_start)
            if term is not None:
                return points, term
            if out.iterations <= o.fast_iterations:
                ds = min(o.ds_max, ds * o.growth)
        return points, Termination(STEP_LIMIT, message=f"{o.max_steps} steps")


def trace_branch(
    config: PrimaryConfiguration,
    eq: Equilibrium,
    bif: BifurcationPoint,
    options: TraceOptions | None = None,
    equilibria: list[Equilibrium] | None = None,
) -> Branch:
    """Follow the global branch emanating from ``bif`` at equilibrium ``eq``.

    Parameters
    ----------
    options : TraceOptions, optional
        Step control, termination thresholds and mode cutoffs.
    equilibria : list of Equilibrium, optional
        Candidates for ``ReturnToEquilibrium`` detection. Defaults to the
        result of ``find_planar_equilibria(config)``.
    """
    from .equilibria import find_planar_equilibria

    opts = options or TraceOptions()
    if equilibria is None:
        equilibria = find_planar_equilibria(config)
    tracer = _Tracer(config, eq, bif, opts, equilibria)
    start = branch_start(config, eq, bif, opts.epsilon, opts.p)
    first = tracer._point(start.loop, 0.0, start.residual)
    fwd, term = tracer.run(start, +1.0)
    back, rterm = ([], None)
    if opts.both_directions:
        back, rterm = tracer.run(start, -1.0)
    pts = tuple(reversed(back)) + (first,) + tuple(fwd)
    return Branch(bif, eq, pts, term, rterm)


# ---------------------------------------------------------------------------
# output


def write_branch_csv(branch: Branch, path: str | Path) -> None:
    cols = ["arclength", "nu", "period", "amplitude", "min_primary_distance", "max_abs_z", "termination"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for i, pt in enumerate(branch.points):
            last = i == len(branch.points) - 1
            w.writerow([
                f"{pt.arclength:.17g}", f"{pt.loop.nu:.17g}", f"{pt.loop.period:.17g}",
                f"{pt.loop.amplitude:.17g}", f"{pt.min_primary_distance:.17g}",
                f"{pt.max_abs_z:.17g}", branch.termination.kind if last else "",
            ])


def loop_to_dict(loop: FourierLoop) -> dict:
    c = loop.coefficients[loop.p:]
    return {
        "nu": loop.nu,
        "p": loop.p,
        "symmetry": loop.symmetry,
        "axial": loop.axial,
        "amplitude": loop.amplitude,
        "modes_re": c.real.tolist(),
        "modes_im": c.imag.tolist(),
    }


def loop_from_dict(doc: dict) -> FourierLoop:
    pos = np.array(doc["modes_re"]) + 1j * np.array(doc["modes_im"])
    full = np.concatenate([np.conj(pos[:0:-1]), pos], axis=0)
    return FourierLoop(full, doc["nu"], doc["symmetry"], doc.get("amplitude", 0.0), doc.get("axial", False))


def write_branch_json(branch: Branch, path: str | Path, every: int = 25) -> None:
    pts = branch.points
    keep = sorted(set(range(0, len(pts), max(1, every))) | {len(pts) - 1})
    doc = {
        "origin": branch.origin.to_dict(),
        "anchor": [float(v) for v in branch.anchor.position],
        "termination": branch.termination.to_dict(),
        "reverse_termination": branch.reverse_termination.to_dict() if branch.reverse_termination else None,
        "loops": [dict(arclength=pts[i].arclength, **loop_to_dict(pts[i].loop)) for i in keep],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)
