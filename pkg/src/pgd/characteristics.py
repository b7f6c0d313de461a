"""Generalized characteristics, interface interval, and shock tracking.

The engine here is monotonicity, not ODE integration: minimizer feet move
monotonically with the query point, so forward characteristics come from
bisection on the minimizer maps, the interface interval from sign bisection on
the difference of the potential minima, and shock positions from bisection on
jumps of the mass potential.  Each time slice is solved exactly, so traced
paths accumulate no error; the displayed speed formulas act as cross-checks.

All functions take the solution field as explicit state and are read-only;
per-slice scans parallelize freely, path tracing is sequential in time by
construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import TYPE_CHECKING, Optional

import numpy as np

from .errors import (
    ExceptionalPoint,
    NegativeArgument,
    NumericError,
    PathLost,
    UndefinedAtRarefactionCenter,
    WindowTooCoarse,
)
from .potentials import RegimeTag

if TYPE_CHECKING:  # pragma: no cover
    from .fields import SolutionField

_BISECT_STEPS = 100


@dataclass(frozen=True)
class ShockPoint:
    """One located jump of the mass potential at a fixed time.

    ``eta_lo``/``eta_hi`` bracket the absorbed starting positions and
    ``tau_lo``/``tau_hi`` the absorbed emission times; ``source`` records which
    data manifold feeds the jump ("initial", "boundary", "mixed" for an
    interface shock, "wall" for the atom sitting at x=0).
    """

    x: float
    t: float
    mass: float
    u_left: float
    u_right: float
    u_shock: float
    source: str
    eta_lo: float = 0.0
    eta_hi: float = 0.0
    tau_lo: float = 0.0
    tau_hi: float = 0.0


@dataclass(frozen=True)
class InterfaceInterval:
    """The set where both potential minima agree at time t: [l, r] or empty."""

    t: float
    l: Optional[float]
    r: Optional[float]

    @property
    def empty(self) -> bool:
        return self.l is None

    @property
    def degenerate(self) -> bool:
        return (not self.empty) and (self.r - self.l) <= 1e-9 * (1.0 + abs(self.r))


def _bisect(pred, lo: float, hi: float, steps: int = _BISECT_STEPS) -> float:
    """Boundary of an upward-closed-in-False predicate: pred(lo) True, pred(hi) False."""
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if pred(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def locate_interface_interval(field: "SolutionField", t: float) -> InterfaceInterval:
    """Endpoints of the equal-potential set at time t by strict sign bisection."""
    if t <= 0.0:
        raise NegativeArgument("interface interval needs t > 0")
    pots = field.potentials

    def diff(x: float) -> float:
        return (
            pots.minimize_initial_potential(x, t).value
            - pots.minimize_boundary_potential(x, t).value
        )

    d0 = diff(0.0)
    if d0 < 0.0:
        return InterfaceInterval(t, None, None)
    hi = max(field.reach(t), 1.0)
    for _ in range(60):
        if diff(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NumericError("no sign change found for the potential difference")
    l = _bisect(lambda x: diff(x) > 0.0, 0.0, hi) if d0 > 0.0 else 0.0
    r = _bisect(lambda x: diff(x) >= 0.0, 0.0, hi)
    return InterfaceInterval(t, l, r)


def forward_characteristic_X(
    field: "SolutionField", eta: float, t: float, on_exceptional: str = "raise"
) -> float:
    """Position at time t of the characteristic started at (eta, 0).

    Found by bisection on the monotone minimizer map; inside a shock the
    position is the shock location, absorbed-at-the-wall positions return 0.
    At an exact fan center there is no single value: raises ExceptionalPoint
    unless ``on_exceptional="a_plus"``, which picks the rightmost admissible
    position.
    """
    if eta < 0.0:
        raise NegativeArgument("need eta >= 0")
    if t <= 0.0:
        raise UndefinedAtRarefactionCenter("need t > 0")
    pots = field.potentials
    hi = eta + t * max(abs(field.initial.vmin), abs(field.initial.vmax)) + 1.0
    itf = locate_interface_interval(field, t)
    x_itf = 0.0 if itf.empty else itf.l

    def y_lo(x: float) -> float:
        return pots.minimize_initial_potential(x, t).arg_lo

    # d = inf{x : y_*(x) > eta}, c = sup{x : y_*(x) < eta}
    if y_lo(0.0) > eta:
        d = 0.0
    elif y_lo(hi) <= eta:
        d = hi
    else:
        d = _bisect(lambda x: y_lo(x) <= eta, 0.0, hi)
    a_plus = max(x_itf, d)
    if y_lo(0.0) >= eta:
        c = 0.0
    elif y_lo(hi) < eta:
        c = hi
    else:
        c = _bisect(lambda x: y_lo(x) < eta, 0.0, hi)
    a_minus = c if c > x_itf else None
    if a_minus is not None and a_plus - a_minus > 1e-7 * (1.0 + a_plus):
        if on_exceptional != "a_plus":
            raise ExceptionalPoint(f"starting position {eta} is a fan center at t={t}")
    return a_plus


def forward_characteristic_Y(
    field: "SolutionField", xi: float, t: float, on_exceptional: str = "raise"
) -> float:
    """Position at time t of the characteristic emitted from the wall at time xi."""
    if xi < 0.0:
        raise NegativeArgument("need xi >= 0")
    if not xi < t:
        raise NegativeArgument("need xi < t")
    pots = field.potentials
    itf = locate_interface_interval(field, t)
    if itf.empty:
        return 0.0  # everything emitted so far sits in the wall atom
    r_edge = itf.r

    def tau_lo(x: float) -> float:
        return pots.minimize_boundary_potential(x, t).arg_lo

    hi = r_edge + 1.0
    if tau_lo(0.0) <= xi:
        e = 0.0
    elif tau_lo(hi) > xi:
        e = hi
    else:
        e = _bisect(lambda x: tau_lo(x) > xi, 0.0, hi)
    b_plus = min(e, r_edge)
    if tau_lo(0.0) < xi:
        f = 0.0
    elif tau_lo(hi) >= xi:
        f = hi
    else:
        f = _bisect(lambda x: tau_lo(x) >= xi, 0.0, hi)
    b_minus = min(f, r_edge)
    if b_minus - b_plus > 1e-7 * (1.0 + b_minus):
        if on_exceptional != "a_plus":
            raise ExceptionalPoint(f"emission time {xi} is a fan center at t={t}")
        return b_minus
    return b_plus


def characteristic_speed(field: "SolutionField", x: float, t: float) -> float:
    """Right derivative of the curve through (x, t), by the case-split formulas.

    Serves as an independent cross-check: it must equal the velocity field in
    every branch.
    """
    if t <= 0.0:
        raise UndefinedAtRarefactionCenter("need t > 0")
    pots = field.potentials
    rf = pots.minimize_initial_potential(x, t)
    rg = pots.minimize_boundary_potential(x, t)
    tol = pots.equality_tol(rf.value, rg.value)
    p0, pb = field.initial, field.boundary
    if x == 0.0 and rf.value < rg.value - tol:
        return 0.0
    if abs(rf.value - rg.value) <= tol:
        if rf.arg_hi <= 0.0 and rg.arg_hi <= 0.0:
            return x / t
        num = p0.moment_s(rf.arg_hi, 1) + pb.moment_s(rg.arg_hi, 2)
        den = p0.moment_s(rf.arg_hi, 0) + pb.moment_s(rg.arg_hi, 1)
        return num / den if den > 0.0 else x / t
    if rf.value < rg.value:
        if rf.tied:
            return (p0.moment_s(rf.arg_hi, 1) - p0.moment_s(rf.arg_lo, 1)) / (
                p0.moment_s(rf.arg_hi, 0) - p0.moment_s(rf.arg_lo, 0)
            )
        return (x - rf.arg_lo) / t
    if rg.tied:
        return (pb.moment_s(rg.arg_hi, 2) - pb.moment_s(rg.arg_lo, 2)) / (
            pb.moment_s(rg.arg_hi, 1) - pb.moment_s(rg.arg_lo, 1)
        )
    return x / (t - rg.arg_lo)


def locate_shocks(
    field: "SolutionField",
    t: float,
    x_window: tuple,
    scan_n: int = 1024,
    include_wall: bool = True,
    min_mass: float = 1e-7,
    refine_tol: float = None,
) -> list:
    """All atoms of the density measure inside the window at time t.

    Scans the mass potential, refines every jump cell by bisection, and reads
    exact masses and content brackets from the minimizer structure on both
    sides of each refined jump.
    """
    if t <= 0.0:
        raise NegativeArgument("shock location needs t > 0")
    a, b = float(x_window[0]), float(x_window[1])
    if a < 0.0 or b <= a:
        raise NegativeArgument("window bounds must satisfy 0 <= a < b")
    tol = refine_tol if refine_tol is not None else 1e-10 * max(1.0, b)
    grid = np.linspace(a, b, scan_n + 1)
    if a == 0.0:
        # keep the interior scan off x=0 so the wall atom is not re-detected
        grid[0] = min(1e-12, 0.5 * (grid[1] - grid[0]))
    mg = field.mass_potential_grid(grid, t)
    rho = field.max_ac_density
    h = (b - a) / scan_n
    dm = np.diff(mg)
    flagged = np.flatnonzero(dm > rho * h * 1.5 + 0.5 * min_mass)

    m_of = field.mass_potential
    cells = [(float(grid[i]), float(grid[i + 1]), float(mg[i]), float(mg[i + 1])) for i in flagged]
    done = []
    while cells:
        xl, xr, ml, mr = cells.pop()
        w = xr - xl
        if w <= tol:
            done.append((xl, xr, ml, mr))
            continue
        xm = 0.5 * (xl + xr)
        mm = m_of(xm, t)
        thresh = rho * 0.5 * w * 1.5 + 0.25 * min_mass
        if mm - ml > thresh:
            cells.append((xl, xm, ml, mm))
        if mr - mm > thresh:
            cells.append((xm, xr, mm, mr))
    done.sort()
    if any(d2[0] - d1[0] < 4.0 * h for d1, d2 in zip(done, done[1:])):
        warnings.warn("adjacent jumps closer than scan resolution", WindowTooCoarse)

    shocks = _assemble_shocks(field, t, done, min_mass)
    if include_wall and a == 0.0:
        wall_mass = field.boundary_atom_mass(t)
        if wall_mass > min_mass:
            u0 = field.velocity(0.0, t)
            rf0 = field.potentials.minimize_initial_potential(0.0, t)
            wall = ShockPoint(
                x=0.0,
                t=t,
                mass=wall_mass,
                u_left=u0,
                u_right=field.velocity_right_limit(0.0, t),
                u_shock=u0,
                source="wall",
                eta_lo=0.0,
                eta_hi=rf0.arg_hi,
                tau_lo=0.0,
                tau_hi=t,
            )
            shocks.insert(0, wall)
    return shocks


def _sided_velocity(field: "SolutionField", x: float, t: float, sign: float, rf, rg) -> float:
    """Velocity immediately beside a shock: branch forced by the strict sign
    of the potential difference so the atom's merged value cannot leak in."""
    if sign > 0.0:
        return field._boundary_branch_velocity(x, t, rg)
    if sign < 0.0:
        return field._initial_branch_velocity(x, t, rf)
    return field.velocity(x, t)  # exact-zero plateau: fan or contact


def _assemble_shocks(field: "SolutionField", t: float, cells, min_mass: float) -> list:
    """Cluster refined jump cells and read exact side data outside the tie fuzz.

    Cells are (xl, xr, ml, mr), sorted.  The minimizers' tie window around a
    jump has x-width about TIE_REL*scale/mass, so all side evaluations happen
    a pad away from the cell, with the pad capped by the neighbor distance.
    """
    merged = []
    for c in cells:
        if merged and c[0] - merged[-1][1] <= 1e-10 * (1.0 + c[0]):
            prev = merged[-1]
            merged[-1] = (prev[0], c[1], prev[2], c[3])
        else:
            merged.append(list(c))
    merged = [c for c in merged if c[3] - c[2] >= min_mass]
    shocks = []
    pots = field.potentials
    for k, (xl, xr, ml, mr) in enumerate(merged):
        mass_est = mr - ml
        mid = 0.5 * (xl + xr)
        rf = pots.minimize_initial_potential(mid, t)
        rg = pots.minimize_boundary_potential(mid, t)
        scale = 1.0 + abs(rf.value) + abs(rg.value)
        pad = max(8e-12 * scale / mass_est, xr - xl, 1e-12 * (1.0 + mid))
        pad = min(pad, 1e-5 * (1.0 + mid))
        if k > 0:
            pad = min(pad, 0.4 * (xl - merged[k - 1][1]))
        if k + 1 < len(merged):
            pad = min(pad, 0.4 * (merged[k + 1][0] - xr))
        a = max(xl - pad, 0.5 * xl)
        b = xr + pad
        shocks.append(_shock_at(field, t, a, b, x_s=mid))
    return shocks


def _shock_at(field: "SolutionField", t: float, xl: float, xr: float, x_s: float = None) -> ShockPoint:
    pots = field.potentials
    if x_s is None:
        x_s = 0.5 * (xl + xr)
    mass = field.mass_potential(xr, t) - field.mass_potential(xl, t)
    q_jump = field.momentum_potential(xr, t) - field.momentum_potential(xl, t)
    rfl = pots.minimize_initial_potential(xl, t)
    rfr = pots.minimize_initial_potential(xr, t)
    rgl = pots.minimize_boundary_potential(xl, t)
    rgr = pots.minimize_boundary_potential(xr, t)
    sl = rfl.value - rgl.value
    sr = rfr.value - rgr.value
    if sl < 0.0 and sr < 0.0:
        source = "initial"
    elif sl > 0.0 and sr > 0.0:
        source = "boundary"
    else:
        source = "mixed"
    return ShockPoint(
        x=x_s,
        t=t,
        mass=mass,
        u_left=_sided_velocity(field, xl, t, sl, rfl, rgl),
        u_right=_sided_velocity(field, xr, t, sr, rfr, rgr),
        u_shock=q_jump / mass,
        source=source,
        eta_lo=rfl.arg_lo,
        eta_hi=rfr.arg_lo,
        tau_lo=rgr.arg_lo,
        tau_hi=rgl.arg_lo,
    )


def locate_shocks_many(
    field: "SolutionField",
    ts,
    x_window: tuple,
    scan_n: int = 96,
    min_mass: float = 2e-6,
    refine_tol: float = None,
) -> list:
    """Interior shocks for many time slices at once (vectorized refinement).

    Same contract as ``locate_shocks`` with ``include_wall=False``, but the
    scan and the jump bisections for all slices run as flat array operations.
    The absolutely continuous slope never exceeds the largest data density, so
    any cell gaining more than that slope times its width holds an atom.
    """
    ts = np.atleast_1d(np.asarray(ts, dtype=float))
    a, b = float(x_window[0]), float(x_window[1])
    if a < 0.0 or b <= a or np.any(ts <= 0.0):
        raise NegativeArgument("need 0 <= a < b and all t > 0")
    tol = refine_tol if refine_tol is not None else 1e-12 * max(1.0, b)
    n_t = len(ts)
    base = np.linspace(a, b, scan_n + 1)
    if a == 0.0:
        base[0] = min(1e-12, 0.5 * (base[1] - base[0]))
    X = np.tile(base, n_t)
    T = np.repeat(ts, scan_n + 1)
    M = field.mass_potential_grid(X, T).reshape(n_t, scan_n + 1)
    rho = field.max_ac_density
    h = (b - a) / scan_n
    dm = np.diff(M, axis=1)
    rows, cols = np.nonzero(dm > rho * h * (1.0 + 1e-12) + 0.5 * min_mass)

    xl = base[cols].astype(float)
    xr = base[cols + 1].astype(float)
    ml = M[rows, cols]
    mr = M[rows, cols + 1]
    tid = rows.astype(np.int64)
    fxl, fxr, fml, fmr, ftid = [], [], [], [], []
    while xl.size:
        w = xr - xl
        done = w <= tol
        if done.any():
            fxl.append(xl[done]); fxr.append(xr[done])
            fml.append(ml[done]); fmr.append(mr[done]); ftid.append(tid[done])
            keep = ~done
            xl, xr, ml, mr, tid, w = xl[keep], xr[keep], ml[keep], mr[keep], tid[keep], w[keep]
            if not xl.size:
                break
        xm = 0.5 * (xl + xr)
        mm = field.mass_potential_grid(xm, ts[tid])
        thresh = rho * 0.5 * w * (1.0 + 1e-12) + 0.25 * min_mass
        keep_l = (mm - ml) > thresh
        keep_r = (mr - mm) > thresh
        xl = np.concatenate([xl[keep_l], xm[keep_r]])
        xr = np.concatenate([xm[keep_l], xr[keep_r]])
        ml = np.concatenate([ml[keep_l], mm[keep_r]])
        mr = np.concatenate([mm[keep_l], mr[keep_r]])
        tid = np.concatenate([tid[keep_l], tid[keep_r]])
    if ftid:
        xl = np.concatenate(fxl); xr = np.concatenate(fxr)
        ml = np.concatenate(fml); mr = np.concatenate(fmr)
        tid = np.concatenate(ftid)
    else:
        return [[] for _ in range(n_t)]
    order = np.lexsort((xl, tid))
    xl, xr, ml, mr, tid = xl[order], xr[order], ml[order], mr[order], tid[order]
    out = []
    for j in range(n_t):
        sel = tid == j
        cells = list(zip(xl[sel], xr[sel], ml[sel], mr[sel]))
        out.append(_assemble_shocks(field, float(ts[j]), cells, min_mass))
    return out


def boundary_absorption_time(field: "SolutionField", t_lo: float, t_hi: float) -> float:
    """Time at which the two potential minima cross at x=0 (atom lands on the wall)."""
    pots = field.potentials

    def d0(t: float) -> float:
        return (
            pots.minimize_initial_potential(0.0, t).value
            - pots.minimize_boundary_potential(0.0, t).value
        )

    if not (d0(t_lo) > 0.0 >= d0(t_hi)):
        raise NumericError("no wall crossing inside the bracket")
    return _bisect(lambda t: d0(t) > 0.0, t_lo, t_hi)


def trace_shock_path(
    field: "SolutionField",
    seed: ShockPoint,
    t_end: float,
    dt: float,
    window_factor: float = 10.0,
    scan_n: int = 64,
) -> list:
    """Continue a shock in time by per-slice relocation.

    Each step predicts the next position with the current shock speed, then
    relocates exactly inside a moving window.  The path ends at ``t_end`` or
    when the shock reaches the wall, in which case the terminal point reports
    the absorption time at x=0.
    """
    if dt <= 0.0:
        raise NegativeArgument("need dt > 0")
    pts = [seed]
    cur = seed
    w = max(window_factor * dt * field.hull_diameter, 16.0 * dt, 1e-3)
    while cur.t < t_end - 1e-12:
        t2 = min(cur.t + dt, t_end)
        x_pred = cur.x + cur.u_shock * (t2 - cur.t)
        found = []
        for widen in (1.0, 4.0):
            lo = max(0.0, x_pred - widen * w)
            hi = max(x_pred + widen * w, lo + 1e-6)
            found = [
                s
                for s in locate_shocks(
                    field, t2, (lo, hi), scan_n=scan_n, include_wall=False, min_mass=0.25 * cur.mass
                )
                if s.x > 0.0
            ]
            if found:
                break
        if not found:
            if x_pred - w <= 0.0:
                t_abs = boundary_absorption_time(field, cur.t, t2)
                pts.append(_wall_point(field, t_abs))
                return pts
            raise PathLost(f"no jump near x={x_pred:.6g} at t={t2:.6g}")
        nxt = min(found, key=lambda s: abs(s.x - x_pred))
        if nxt.x <= 1e-7:
            t_abs = boundary_absorption_time(field, cur.t, t2)
            pts.append(_wall_point(field, t_abs))
            return pts
        cur = nxt
        pts.append(cur)
    return pts


def _wall_point(field: "SolutionField", t_abs: float) -> ShockPoint:
    rf0 = field.potentials.minimize_initial_potential(0.0, t_abs)
    mass = field.initial.moment_s(rf0.arg_hi, 0) + field.boundary.moment_s(t_abs, 1)
    u0 = field.velocity(0.0, t_abs)
    return ShockPoint(
        x=0.0,
        t=t_abs,
        mass=mass,
        u_left=u0,
        u_right=field.velocity_right_limit(0.0, t_abs),
        u_shock=u0,
        source="wall",
        eta_lo=0.0,
        eta_hi=rf0.arg_hi,
        tau_lo=0.0,
        tau_hi=t_abs,
    )


def merge_event(
    field: "SolutionField", t_lo: float, t_hi: float, x_window: tuple, scan_n: int = 512
) -> tuple:
    """Refine the time and place where two shocks inside the window become one."""

    def count(t: float) -> int:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", WindowTooCoarse)
            return len(locate_shocks(field, t, x_window, scan_n=scan_n, include_wall=False))

    if count(t_lo) < 2 or count(t_hi) != 1:
        raise NumericError("bracket does not contain a two-into-one merge")
    t_m = _bisect(lambda t: count(t) >= 2, t_lo, t_hi, steps=60)
    after = locate_shocks(field, min(t_m + 1e-9, t_hi), x_window, scan_n=scan_n, include_wall=False)
    return t_m, after[0].x
