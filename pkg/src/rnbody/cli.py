"""Command-line front end: ``rnbody <command> [options]``.

Exit codes: 0 success, 2 validation failure, 3 input error.
"""

from __future__ import annotations

import argparse
import json
import sys
import warnings
from pathlib import Path

from .configuration import config_from_dict, maxwell_ring_config, three_body_config
from .continuation import TraceOptions, trace_branch, write_branch_csv, write_branch_json
from .equilibria import find_planar_equilibria, morse_consistency, write_equilibria_csv
from .errors import RNBodyError
from .ring_sum import ringsum_table, write_ringsum_csv
from .spectral import all_bifurcations, write_spectrum_json
from .validate import run_validation

COMMANDS = ("equilibria", "spectrum", "branch", "ringsum", "validate")
EXIT_OK, EXIT_VALIDATION, EXIT_INPUT = 0, 2, 3


class InputError(Exception):
    pass


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rnbody", description="Satellite equilibria and periodic orbits of n-body relative equilibria.")
    ap.add_argument("command_pos", nargs="?", choices=COMMANDS, metavar="COMMAND",
                    help="one of: " + ", ".join(COMMANDS))
    ap.add_argument("--command", choices=COMMANDS, help="alternative to the positional command")
    ap.add_argument("--config", type=Path, help="configuration JSON")
    ap.add_argument("--out", type=Path, default=Path("."), help="output directory")
    ap.add_argument("--mu", type=float, help="three-body mass ratio or ring central mass")
    ap.add_argument("--n", type=int, help="ring size (selects the Maxwell ring)")
    ap.add_argument("--alpha", type=float, help="force exponent in (1, 3)")
    ap.add_argument("--eq-index", type=int, default=0, help="equilibrium row for 'branch'")
    ap.add_argument("--bif-index", type=int, default=0, help="bifurcation point for 'branch'")
    ap.add_argument("--max-steps", type=int, default=2000)
    ap.add_argument("--delta", type=float, default=1e-3, help="collision-approach threshold")
    ap.add_argument("--modes", type=int, default=32, help="initial Fourier mode cutoff")
    ap.add_argument("--slow", action="store_true", help="'validate': also trace the global saddle branches")
    return ap


def resolve_config(args):
    """Configuration from --config, with --mu/--n/--alpha overrides applied."""
    doc: dict = {}
    if args.config is not None:
        try:
            doc = json.loads(args.config.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read configuration {args.config}: {exc}") from exc
        if not isinstance(doc, dict):
            raise InputError("configuration JSON must be an object")
    alpha = args.alpha if args.alpha is not None else doc.get("alpha", 2.0)
    if args.n is not None or "ring" in doc and args.mu is not None:
        ring = dict(doc.get("ring", {}))
        if args.n is not None:
            ring["n"] = args.n
        if args.mu is not None:
            ring["mu"] = args.mu
        return maxwell_ring_config(ring["n"], ring.get("mu", 0.0), alpha)[0]
    if args.mu is not None:
        return three_body_config(args.mu, alpha)
    if not doc:
        raise InputError("no configuration: pass --config or --mu/--n")
    doc = dict(doc)
    doc["alpha"] = alpha
    return config_from_dict(doc)[0]


def _outdir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise InputError(f"cannot create output directory {path}: {exc}") from exc
    return path


def cmd_equilibria(args) -> int:
    cfg = resolve_config(args)
    out = _outdir(args.out)
    eqs = find_planar_equilibria(cfg)
    write_equilibria_csv(eqs, out / "equilibria.csv")
    rep = morse_consistency(eqs, cfg.n_primaries)
    (out / "morse.txt").write_text(rep.message + "\n")
    print(f"{len(eqs)} equilibria written to {out / 'equilibria.csv'}")
    print(rep.message)
    return EXIT_OK if rep.passed else EXIT_VALIDATION


def cmd_spectrum(args) -> int:
    cfg = resolve_config(args)
    out = _outdir(args.out)
    eqs = find_planar_equilibria(cfg)
    reports = write_spectrum_json(cfg, eqs, out / "spectrum.json")
    for i, rep in enumerate(reports):
        pts = ", ".join(f"{b['symmetry']} nu={b['nu']:.10g} eta={b['eta']:+d}" for b in rep["bifurcations"])
        reason = rep.get("planar_reason", "")
        print(f"[{i}] {rep['kind']} at ({rep['position'][0]:.10g}, {rep['position'][1]:.10g}): {pts} ({reason})")
        if "warning" in rep:
            print(f"    warning: {rep['warning']}")
    return EXIT_OK


def cmd_branch(args) -> int:
    cfg = resolve_config(args)
    out = _outdir(args.out)
    eqs = find_planar_equilibria(cfg)
    if not 0 <= args.eq_index < len(eqs):
        raise InputError(f"--eq-index must lie in [0, {len(eqs) - 1}]")
    eq = eqs[args.eq_index]
    bifs = all_bifurcations(eq)
    if not 0 <= args.bif_index < len(bifs):
        raise InputError(f"--bif-index must lie in [0, {len(bifs) - 1}]")
    if not 0 < args.delta < 1:
        raise InputError("--delta must lie in (0, 1)")
    if not 4 <= args.modes <= 256:
        raise InputError("--modes must lie in [4, 256]")
    opts = TraceOptions(max_steps=args.max_steps, delta=args.delta, p=args.modes, p_max=max(256, args.modes))
    br = trace_branch(cfg, eq, bifs[args.bif_index], opts, equilibria=eqs)
    write_branch_csv(br, out / "branch.csv")
    write_branch_json(br, out / "branch.json")
    summary = {
        "equilibrium": [float(v) for v in eq.position],
        "bifurcation": bifs[args.bif_index].to_dict(),
        "points": len(br.points),
        "termination": br.termination.to_dict(),
        "reverse_termination": br.reverse_termination.to_dict() if br.reverse_termination else None,
        "admissible": br.admissible,
        "eta_sum": br.eta_sum(),
    }
    (out / "termination.json").write_text(json.dumps(summary, indent=2) + "\n")
    print(f"{len(br.points)} loops; termination {br.termination.kind}"
          + (f", reverse {br.reverse_termination.kind}" if br.reverse_termination else ""))
    return EXIT_OK


def cmd_ringsum(args) -> int:
    out = _outdir(args.out)
    rows = ringsum_table()
    write_ringsum_csv(rows, out / "ringsum.csv")
    worst = max(r["rel_err"] for r in rows)
    print(f"{len(rows)} rows, max rel_err {worst:.3e}")
    return EXIT_OK if worst < 1e-8 else EXIT_VALIDATION


def cmd_validate(args) -> int:
    cfg = resolve_config(args) if (args.config or args.mu is not None or args.n is not None) else None
    results = run_validation(cfg, include_slow=args.slow)
    lines = [r.line() for r in results]
    for line in lines:
        print(line)
    _outdir(args.out)
    (args.out / "validate.txt").write_text("\n".join(lines) + "\n")
    ok = all(r.passed for r in results)
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VALIDATION


HANDLERS = {
    "equilibria": cmd_equilibria,
    "spectrum": cmd_spectrum,
    "branch": cmd_branch,
    "ringsum": cmd_ringsum,
    "validate": cmd_validate,
}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    command = args.command or args.command_pos
    if command is None:
        print("rnbody: a command is required (" + ", ".join(COMMANDS) + ")", file=sys.stderr)
        return EXIT_INPUT
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return HANDLERS[command](args)
    except (InputError, RNBodyError, KeyError, TypeError) as exc:
        print(f"rnbody {command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
