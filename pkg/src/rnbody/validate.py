"""Cross-module property checks behind ``rnbody validate``.

Each check returns a :class:`CheckResult`; none of them raise on a failed
property. The standard matrix covers the three-body problem at three mass
ratios and Maxwell rings with ``n`` in {2, 3, 5, 7}.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .configuration import (
    RESIDUAL_TOL,
    PrimaryConfiguration,
    maxwell_ring_config,
    equilibrium_residual,
    three_body_config,
)
from .equilibria import (
    DEGENERATE,
    MINIMUM,
    SADDLE,
    Equilibrium,
    find_planar_equilibria,
    morse_consistency,
    ring_critical_rays,
    ring_radial_derivative,
)
from .ring_sum import RingSumQuery, direct_sum_S, ring_sum, ring_sum_phi, ringsum_table
from .spectral import (
    EIGHT,
    PLANAR,
    index_jump,
    planar_bifurcations,
    routh_bound,
    spatial_bifurcation,
    triangular_onset_squared,
)

THREE_BODY_MUS = (0.1, 0.3, 0.5)
RING_NS = (2, 3, 5, 7)
RING_MUS = (0.001, 1.0, 1000.0)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.detail} ({self.seconds:.2f} s)"


def standard_matrix(alpha: float = 2.0) -> list[PrimaryConfiguration]:
    out = [three_body_config(mu, alpha) for mu in THREE_BODY_MUS]
    for n in RING_NS:
        for mu in RING_MUS:
            out.append(maxwell_ring_config(n, mu, alpha)[0])
        if n >= 3:
            out.append(maxwell_ring_config(n, 0.0, alpha)[0])
    return out


def _timed(name: str, fn) -> CheckResult:
    t0 = time.perf_counter()
    passed, detail = fn()
    return CheckResult(name, bool(passed), detail, time.perf_counter() - t0)


# ---------------------------------------------------------------------------


def expected_index_jumps(eq: Equilibrium) -> dict[tuple[str, float], int]:
    """Index jumps predicted from the equilibrium type alone."""
    out = {}
    planar = planar_bifurcations(eq)
    if eq.kind == SADDLE:
        out[(PLANAR, planar.points[0].nu)] = -1
    elif planar.reason == "two_frequencies":
        nu_p, nu_m = planar.points[0].nu, planar.points[1].nu
        out[(PLANAR, nu_p)] = 1
        out[(PLANAR, nu_m)] = -1
    out[(EIGHT, spatial_bifurcation(eq).nu)] = eq.sigma
    return out


def index_jump_mismatches(eqs: list[Equilibrium]) -> list[str]:
    """Equilibria whose definition-based index jumps differ from the predicted ones."""
    bad = []
    for e in eqs:
        if e.kind == DEGENERATE:
            continue
        for (sym, nu), eta in expected_index_jumps(e).items():
            got = index_jump(e, 0 if sym == PLANAR else 1, nu)
            if got != eta:
                bad.append(f"{tuple(np.round(e.position, 6))} {sym} nu={nu:.6g}: {got} != {eta}")
    return bad


def check_configuration(config: PrimaryConfiguration) -> CheckResult:
    def run():
        per = np.hypot(*equilibrium_residual(config).T)
        res = float(np.max(per))
        rows = ", ".join(f"{i}: {v:.3e}" for i, v in enumerate(per))
        return res < RESIDUAL_TOL, f"relative-equilibrium residual {res:.3e} (tolerance {RESIDUAL_TOL:g}); per primary {rows}"

    return _timed(f"configuration residual [{config.label or 'custom'}]", run)


def check_census(config: PrimaryConfiguration) -> CheckResult:
    def run():
        eqs = find_planar_equilibria(config)
        rep = morse_consistency(eqs, config.n_primaries)
        bad = index_jump_mismatches(eqs)
        detail = f"{len(eqs)} equilibria, {rep.message}"
        if bad:
            detail += "; index-jump mismatches: " + "; ".join(bad)
        return rep.passed and not bad, detail

    return _timed(f"census [{config.label or 'custom'}]", run)


def check_three_body(alpha: float = 2.0) -> CheckResult:
    def run():
        msgs = []
        ok = True
        for mu in THREE_BODY_MUS:
            cfg = three_body_config(mu, alpha)
            eqs = find_planar_equilibria(cfg)
            tri = [e for e in eqs if abs(e.position[1]) > 0.1]
            target = np.array([(1 - 2 * mu) / 2, math.sqrt(3) / 2])
            err = max(
                (np.min([np.hypot(*(e.position - target * [1, s])) for e in tri]) for s in (1, -1)),
                default=math.inf,
            )
            rep = morse_consistency(eqs, 2)
            good = len(eqs) == 5 and err < 1e-10 and rep.passed
            ok &= good
            msgs.append(f"mu={mu}: {len(eqs)} eqs, L4/L5 err {err:.1e}, {rep.message.split(' (')[0]}")
        return ok, "; ".join(msgs)

    return _timed("three-body census", run)


def check_triangular_spectrum(alpha: float = 2.0, count: int = 20) -> CheckResult:
    def run():
        bound = routh_bound(alpha)
        worst = 0.0
        for mu in np.linspace(bound / (count + 1), bound * count / (count + 1), count):
            cfg = three_body_config(mu, alpha)
            eq = _triangular(cfg, mu)
            pts = planar_bifurcations(eq).points
            closed = triangular_onset_squared(mu, alpha)
            worst = max(worst, abs(pts[0].nu ** 2 - closed[0]), abs(pts[1].nu ** 2 - closed[1]))
            worst = max(worst, abs(spatial_bifurcation(eq).nu - 1.0))
        below = planar_bifurcations(_triangular(three_body_config(bound - 1e-6, alpha), bound - 1e-6))
        above = planar_bifurcations(_triangular(three_body_config(bound + 1e-6, alpha), bound + 1e-6))
        flip = len(below.points) == 2 and len(above.points) == 0
        return worst < 1e-12 and flip, (
            f"max closed-form error {worst:.1e}; Routh bound {bound:.10f}; "
            f"{below.reason} below, {above.reason} above"
        )

    return _timed("triangular spectrum", run)


def _triangular(cfg: PrimaryConfiguration, mu: float) -> Equilibrium:
    from .equilibria import newton_refine

    return newton_refine(cfg, np.array([(1 - 2 * mu) / 2, math.sqrt(3) / 2]))


def check_ring_structure(alpha: float = 2.0) -> CheckResult:
    def run():
        msgs = []
        vr = [ring_radial_derivative(maxwell_ring_config(n, mu, alpha)[1], 1.0, math.pi / n)
              for n in (3, 5, 7, 12) for mu in (0.0, 0.001, 1.0, 1000.0)]
        ok_vr = max(vr) < 0
        msgs.append(f"max V_r(1, pi/n) = {max(vr):.3e}")
        _, g = maxwell_ring_config(2, 1.0, alpha)
        err = 0.0
        for r in np.linspace(0.05, 5.0, 100):
            f = -2.0 * (r * r + 1.0) ** (-(alpha + 1.0) / 2.0)
            lhs = (g.s + g.mu) * ring_radial_derivative(g, r, math.pi / 2)
            rhs = r * (f + g.s) + g.mu * (r - r ** -alpha)
            err = max(err, abs(lhs - rhs))
        msgs.append(f"n=2 identity error {err:.1e}")
        inner_small = ring_critical_rays(maxwell_ring_config(7, 0.001, alpha)[1]).has_inner_pair
        inner_big = ring_critical_rays(maxwell_ring_config(7, 1000.0, alpha)[1]).has_inner_pair
        msgs.append(f"n=7 inner pair at mu=1e-3: {inner_small}, at mu=1e3: {inner_big}")
        r3 = [ring_critical_rays(maxwell_ring_config(7, mu, alpha)[1]).r3 for mu in (10.0, 1e2, 1e3, 1e4)]
        mono = all(a > b > 1.0 for a, b in zip(r3, r3[1:]))
        msgs.append("r3 = " + ", ".join(f"{v:.6f}" for v in r3))
        return ok_vr and err < 1e-12 and inner_small and not inner_big and mono, "; ".join(msgs)

    return _timed("ring structure", run)


def check_ring_sum() -> CheckResult:
    def run():
        rows = ringsum_table()
        worst = max(r["rel_err"] for r in rows)
        inv = 0.0
        sign_bad = 0
        grid = {(r["n"], r["beta"], r["r"], r["phi"]) for r in rows}
        for n, beta, r, phi in grid:
            q = RingSumQuery(n, beta, r, phi)
            inv = max(inv, abs(ring_sum(q.inverted()) - r**beta * ring_sum(q)))
            s = math.sin(n * phi)
            if abs(s) > 1e-12 and np.sign(ring_sum_phi(q).s_phi) != -np.sign(s):
                sign_bad += 1
        ok = worst < 1e-8 and inv < 1e-10 and sign_bad == 0
        return ok, f"{len(rows)} rows, max rel_err {worst:.1e}, inversion {inv:.1e}, sign failures {sign_bad}"

    return _timed("ring sum", run)


def check_onset() -> CheckResult:
    from .continuation import branch_start, residual_norm as loop_residual_norm
    from .spectral import all_bifurcations

    def run():
        cfg = three_body_config(0.01, 2.0)
        eq = _triangular(cfg, 0.01)
        msgs = []
        ok = True
        for b in all_bifurcations(eq):
            eps = np.array([1e-2, 1e-3, 1e-4])
            shift, res = [], []
            for e in eps:
                loop = branch_start(cfg, eq, b, e).loop
                shift.append(abs(loop.nu - b.nu))
                res.append(loop_residual_norm(cfg, loop))
            slope = np.polyfit(np.log(eps), np.log(shift), 1)[0]
            good = max(res) < 1e-9 and abs(slope - 2.0) < 0.3
            ok &= good
            msgs.append(f"{b.symmetry} nu={b.nu:.6f}: slope {slope:.3f}, residual {max(res):.1e}")
        return ok, "; ".join(msgs)

    return _timed("continuation onset", run)


def check_global_branch(mu: float = 0.5, alpha: float = 2.0) -> CheckResult:
    from .continuation import NON_ADMISSIBLE, RETURN, trace_branch

    def run():
        cfg = three_body_config(mu, alpha)
        eqs = find_planar_equilibria(cfg)
        msgs = []
        ok = True
        for e in (q for q in eqs if q.kind == SADDLE):
            br = trace_branch(cfg, e, planar_bifurcations(e).points[0], equilibria=eqs)
            for t in br.terminations:
                own = t.kind == RETURN and np.hypot(*(np.array(t.equilibrium) - e.position)) < 1e-8
                ok &= (t.kind in NON_ADMISSIBLE or t.kind == RETURN) and not own
            if br.admissible:
                ok &= br.eta_sum() == 0
            msgs.append(f"x={e.position[0]:.6f}: {br.termination.kind}/{br.reverse_termination.kind}")
        return ok, "; ".join(msgs)

    return _timed("global saddle branches", run)


def run_validation(config: PrimaryConfiguration | None = None, include_slow: bool = False) -> list[CheckResult]:
    """Checks for one configuration, or the full standard matrix when ``config`` is None."""
    if config is not None:
        first = check_configuration(config)
        if not first.passed:
            return [first]
        return [first, check_census(config)]
    results = [check_three_body(), check_triangular_spectrum(), check_ring_structure()]
    for cfg in standard_matrix():
        results.append(check_census(cfg))
    results += [check_ring_sum(), check_onset()]
    if include_slow:
        results.append(check_global_branch())
    return results
