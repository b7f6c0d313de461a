"""Command line interface: solve, trace, shocks, validate, scenario-list.

Output is deterministic: numbers are printed with 17 significant digits, rows
are emitted in a fixed order, and no randomness is used, so identical inputs
produce byte-identical files.  Exit codes: 0 success, 1 usage, 2 bad data,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import replace

import numpy as np

from . import characteristics as chars
from . import diagnostics as diag
from .errors import DataError, NumericError
from .scenarios import Scenario, builtin_scenario, builtin_scenarios, parse_scenario

USAGE_EXIT = 1
DATA_EXIT = 2
NUMERIC_EXIT = 3


def _fmt(v) -> str:
    return f"{float(v):.17g}"


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        sys.exit(USAGE_EXIT)


def _parse_t_list(spec: str) -> list:
    if ":" in spec:
        a, b, n = spec.split(":")
        return [float(v) for v in np.linspace(float(a), float(b), int(n))]
    return [float(v) for v in spec.split(",") if v]


def _parse_x_grid(spec: str) -> np.ndarray:
    a, b, n = spec.split(":")
    return np.linspace(float(a), float(b), int(n))


def _load_scenario(args) -> Scenario:
    ref = args.scenario
    if os.path.exists(ref):
        sc = parse_scenario(ref)
    else:
        sc = builtin_scenario(ref)
    if getattr(args, "eps_floor", None) is not None:
        sc = sc.with_eps_floor(args.eps_floor)
    if getattr(args, "tol_eq", None) is not None:
        sc = sc.with_tol_eq(args.tol_eq)
    if getattr(args, "t", None):
        sc = replace(sc, t_values=tuple(_parse_t_list(args.t)))
    return sc


def _out_path(args, name: str) -> str:
    out = getattr(args, "out", None) or "."
    os.makedirs(out, exist_ok=True)
    return os.path.join(out, name)


def _write_rows(path: str, header: str, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _atom_rows(field, t, x_grid):
    shocks = chars.locate_shocks(field, t, (float(x_grid[0]), float(x_grid[-1])))
    for s in shocks:
        kind = "boundary" if s.x == 0.0 else "interior"
        yield (_fmt(t), _fmt(s.x), _fmt(s.mass), _fmt(s.u_shock), kind)


def cmd_solve(args) -> int:
    sc = _load_scenario(args)
    field = sc.field()
    x_grid = _parse_x_grid(args.x) if args.x else np.linspace(*sc.x_grid)
    field_rows, atom_rows = [], []
    for t in sc.t_values:
        if t <= 0:
            continue
        shocks = chars.locate_shocks(field, t, (0.0, field.reach(t)))
        interior = [s for s in shocks if s.x > 0.0]
        u, m, q, rho = field.slice_fields(x_grid, t)
        for i, x in enumerate(x_grid):
            reg = field.potentials.classify(float(x), t)
            e_val = field.energy_potential(float(x), t, shocks=interior)
            field_rows.append(
                (
                    _fmt(x),
                    _fmt(t),
                    reg.tag.value,
                    _fmt(u[i] if x > 0 else field.velocity(0.0, t)),
                    _fmt(m[i] if x > 0 else field.mass_potential(0.0, t)),
                    _fmt(q[i] if x > 0 else field.momentum_potential(0.0, t)),
                    _fmt(e_val),
                    _fmt(rho[i]),
                )
            )
        atom_rows.extend(_atom_rows(field, t, x_grid))
    wrote = []
    if "field" in sc.outputs or not sc.outputs:
        p = _out_path(args, "field.csv")
        _write_rows(p, "x,t,regime,u,m,q,E,rho_ac", field_rows)
        wrote.append(p)
    if "atoms" in sc.outputs or not sc.outputs:
        p = _out_path(args, "atoms.csv")
        _write_rows(p, "t,x,mass,u,kind", atom_rows)
        wrote.append(p)
    for p in wrote:
        print(p)
    return 0


def cmd_shocks(args) -> int:
    sc = _load_scenario(args)
    field = sc.field()
    x_grid = _parse_x_grid(args.x) if args.x else np.linspace(*sc.x_grid)
    rows = []
    for t in sc.t_values:
        if t <= 0:
            continue
        rows.extend(_atom_rows(field, t, x_grid))
    p = _out_path(args, "atoms.csv")
    _write_rows(p, "t,x,mass,u,kind", rows)
    print(p)
    return 0


def cmd_trace(args) -> int:
    sc = _load_scenario(args)
    field = sc.field()
    ts = sorted(t for t in sc.t_values if t > 0)
    if len(ts) < 2:
        raise DataError("trace needs --t a:b:n with at least two slices")
    t0, t_end = ts[0], ts[-1]
    dt = (t_end - t0) / max(len(ts) - 1, 1)
    seeds = [s for s in chars.locate_shocks(field, t0, (0.0, field.reach(t0))) if s.x > 0.0]
    rows = []
    for k, seed in enumerate(seeds):
        path = chars.trace_shock_path(field, seed, t_end, dt)
        for s in path:
            rows.append((_fmt(s.t), _fmt(s.x), _fmt(s.mass), _fmt(s.u_shock), s.source))
    p = _out_path(args, "tracks.csv")
    _write_rows(p, "t,x,mass,u_shock,source", rows)
    print(p)
    return 0


def _validate_scenario(sc: Scenario) -> dict:
    field = sc.field()
    x_min, x_max, _ = sc.x_grid
    checks = []
    shock_counts = []
    ts = [t for t in sc.t_values if t > 0]
    for t in ts:
        itf = chars.locate_interface_interval(field, t)
        shocks = chars.locate_shocks(field, t, (x_min, x_max))
        shock_counts.append((t, len([s for s in shocks if s.x > 0.0])))
        ent = diag.entropy_report(field, t, (x_min, x_max), n_samples=1024)
        checks.append(
            {
                "name": "entropy",
                "t": t,
                "passed": not ent.violations,
                "checked": ent.checked,
                "violations": ent.violations,
            }
        )
        try:
            mb = diag.mass_balance(field, t, x_max)
            checks.append(
                {
                    "name": "mass_balance",
                    "t": t,
                    "passed": bool(abs(mb.residual) <= sc.quad_rtol * (1 + abs(mb.expected))),
                    "residual": mb.residual,
                }
            )
            qb = diag.momentum_balance(field, t, x_max)
            ok = (
                abs(qb.residual) <= sc.quad_rtol * (1 + abs(qb.expected))
                if qb.relation == "equality"
                else qb.residual >= -sc.quad_rtol * (1 + abs(qb.expected))
            )
            checks.append(
                {
                    "name": "momentum_balance",
                    "t": t,
                    "relation": qb.relation,
                    "passed": bool(ok),
                    "residual": qb.residual,
                }
            )
        except NumericError:
            lhs, rhs = diag.mu_identity_space(field, t, x_min + 0.05 * (x_max - x_min), x_max)
            checks.append(
                {
                    "name": "mass_window_identity",
                    "t": t,
                    "passed": bool(abs(lhs - rhs) <= sc.quad_rtol * (1 + abs(rhs))),
                    "residual": lhs - rhs,
                }
            )
        lo = x_min + 0.2 * (x_max - x_min)
        hi = x_min + 0.7 * (x_max - x_min)
        lhs, rhs = diag.mu_identity_space(field, t, lo, hi)
        checks.append(
            {
                "name": "mu_space_identity",
                "t": t,
                "passed": bool(abs(lhs - rhs) <= sc.quad_rtol * (1 + abs(rhs))),
                "residual": lhs - rhs,
            }
        )
        checks.append({"name": "interface", "t": t, "l": itf.l, "r": itf.r, "passed": True})
    if len(ts) >= 2:
        lhs, rhs = diag.mu_identity_time(field, 0.5 * (x_min + x_max), ts[0], ts[-1])
        checks.append(
            {
                "name": "mu_time_identity",
                "passed": bool(abs(lhs - rhs) <= sc.quad_rtol * (1 + abs(rhs))),
                "residual": lhs - rhs,
            }
        )
    merges = []
    for (t1, n1), (t2, n2) in zip(shock_counts, shock_counts[1:]):
        if n1 >= 2 and n2 == n1 - 1:
            tm, xm = chars.merge_event(field, t1, t2, (x_min, x_max))
            merges.append([tm, xm])
    mid_t = ts[len(ts) // 2] if ts else 1.0
    bump = diag.BumpSpec(
        x_min + 0.25 * (x_max - x_min),
        x_min + 0.75 * (x_max - x_min),
        0.5 * mid_t,
        mid_t,
    )
    r1, r2 = diag.weak_residual(field, bump, quad_n=256)
    checks.append(
        {
            "name": "weak_residual",
            "passed": bool(abs(r1) <= 1e-4 and abs(r2) <= 1e-4),
            "r1": r1,
            "r2": r2,
        }
    )
    trace = diag.boundary_trace(field, ts)
    checks.append({"name": "boundary_trace", "rows": trace, "passed": True})
    return {
        "scenario": sc.name,
        "merge_points": merges,
        "checks": checks,
        "passed": all(c["passed"] for c in checks),
    }


def cmd_validate(args) -> int:
    sc = _load_scenario(args)
    report = _validate_scenario(sc)
    p = _out_path(args, "report.json")
    with open(p, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    for c in report["checks"]:
        t_part = f" t={c['t']:g}" if "t" in c else ""
        print(f"[{'PASS' if c['passed'] else 'FAIL'}] {c['name']}{t_part}")
    print(p)
    return 0


def cmd_scenario_list(args) -> int:
    for sc in builtin_scenarios():
        print(sc.name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pgd", description="Half-line pressureless gas flow solver")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, with_x=True):
        p.add_argument("--scenario", required=True, help="built-in name or JSON file path")
        p.add_argument("--t", default=None, help="time list 'a,b,c' or range 'a:b:n'")
        if with_x:
            p.add_argument("--x", default=None, help="space grid 'a:b:n'")
        p.add_argument("--tol-eq", dest="tol_eq", type=float, default=None)
        p.add_argument("--eps-floor", dest="eps_floor", type=float, default=None)
        p.add_argument("--out", default=None, help="output directory (default: cwd)")

    add_common(sub.add_parser("solve", help="emit field and atom tables"))
    add_common(sub.add_parser("shocks", help="emit atom table only"))
    add_common(sub.add_parser("trace", help="trace shock paths over --t slices"))
    add_common(sub.add_parser("validate", help="run built-in checks, emit report"), with_x=False)
    sub.add_parser("scenario-list", help="list built-in scenarios")
    return parser


_COMMANDS = {
    "solve": cmd_solve,
    "shocks": cmd_shocks,
    "trace": cmd_trace,
    "validate": cmd_validate,
    "scenario-list": cmd_scenario_list,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except DataError as exc:
        print(f"pgd: data error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except OSError as exc:
        print(f"pgd: i/o error: {exc}", file=sys.stderr)
        return DATA_EXIT
    except NumericError as exc:
        print(f"pgd: numeric error: {exc}", file=sys.stderr)
        return NUMERIC_EXIT


if __name__ == "__main__":
    sys.exit(main())
