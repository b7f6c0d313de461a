"""Validation checks on the constructed solution.

Conservation budgets, the entropy condition at shocks, recovery of boundary
and initial traces, the second-potential identities, the min-potential
integral identities, and residuals of the weak formulation under compactly
supported test bumps.  Checks are read-only over the solution field and
independent per time, so they parallelize freely.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from . import characteristics as chars
from .errors import (NegativeArgument, NonCompactScenario, NumericError,
                     QuadratureNotConverged, WindowTooCoarse)
from .fields import SolutionField, _richardson
from .potentials import RegimeTag


@dataclass(frozen=True)
class BalanceReport:
    """Budget of a conserved quantity at one time."""

    t: float
    total: float
    expected: float
    residual: float
    relation: str  # "equality" | "geq"

    @property
    def holds(self) -> bool:
        if self.relation == "equality":
            return abs(self.residual) <= 1e-8 * (1.0 + abs(self.expected))
        return self.residual >= -1e-8 * (1.0 + abs(self.expected))


@dataclass(frozen=True)
class EntropyReport:
    t: float
    checked: int
    violations: list


def _compact_cutoff(field: SolutionField) -> float:
    """Largest breakpoint after which the initial density is at floor level."""
    p = field.initial
    thresh = 2.0 * p.eps_floor
    cutoff = None
    for i in range(p.nseg - 1, -1, -1):
        if p.density[i] > thresh:
            break
        cutoff = float(p.breaks[i])
    if cutoff is None:
        raise NonCompactScenario("initial density exceeds the floor on the last segment")
    return cutoff


def mass_balance(field: SolutionField, t: float, x_max: float) -> BalanceReport:
    """Total mass in (0, x_max] against initial mass plus wall influx."""
    if t < 0.0 or x_max <= 0.0:
        raise NegativeArgument("need t >= 0 and x_max > 0")
    if _compact_cutoff(field) >= x_max:
        raise NonCompactScenario("x_max does not cover the initial mass support")
    total = field.mass_potential(x_max, t) - field.mass_potential(0.0, t)
    expected = field.initial.moment_s(x_max, 0) + field.boundary.moment_s(t, 1)
    return BalanceReport(t, total, expected, total - expected, "equality")


def momentum_balance(field: SolutionField, t: float, x_max: float) -> BalanceReport:
    """Total momentum; an equality without wall influx, a lower bound with it."""
    if t <= 0.0 or x_max <= 0.0:
        raise NegativeArgument("need t > 0 and x_max > 0")
    if _compact_cutoff(field) >= x_max:
        raise NonCompactScenario("x_max does not cover the initial mass support")
    pots = field.potentials
    reg = pots.classify(0.0, t)
    p0_total = field.initial.moment_s(x_max, 1)
    pb_t = field.boundary.moment_s(t, 2)
    q_far = field.momentum_potential(x_max, t)
    if reg.tag is RegimeTag.BOUNDARY_DOMINATED:
        total = q_far - field.momentum_potential(0.0, t)
        expected = p0_total + pb_t
        relation = "equality"
    elif reg.tag is RegimeTag.INITIAL_DOMINATED:
        q0_plus = field.initial.moment_s(pots.minimize_initial_potential(0.0, t).arg_hi, 1)
        total = q_far - q0_plus
        expected = p0_total - pb_t
        relation = "geq"
    else:
        q0_plus = field.initial.moment_s(pots.minimize_initial_potential(0.0, t).arg_hi, 1)
        total = q_far - q0_plus + field.boundary_atom_mass(t) * field.velocity(0.0, t)
        expected = p0_total + pb_t
        relation = "equality"
    return BalanceReport(t, total, expected, total - expected, relation)


def entropy_report(
    field: SolutionField, t: float, x_window: tuple, n_samples: int = 1024
) -> EntropyReport:
    """Check the one-sided velocity decrease across every detected shock."""
    shocks = chars.locate_shocks(field, t, x_window, scan_n=n_samples)
    margin = 1e-7
    checked = 0
    violations = []
    for s in shocks:
        checked += 1
        if s.x == 0.0:
            reg = field.potentials.classify(0.0, t)
            u0 = field.velocity(0.0, t)
            u_r = field.velocity_right_limit(0.0, t)
            if reg.tag is RegimeTag.BOUNDARY_DOMINATED:
                ok = abs(u_r - field.boundary.velocity_at(t)) <= 1e-6
            else:
                ok = u0 > u_r - margin if u0 != u_r else True
            if not ok:
                violations.append((0.0, math.nan, u0, u_r))
            continue
        u_l = field.velocity_left_limit(s.x, t)
        u_r = field.velocity_right_limit(s.x, t)
        if not (u_l > s.u_shock + margin and s.u_shock > u_r + margin):
            violations.append((s.x, u_l, s.u_shock, u_r))
    return EntropyReport(t, checked, violations)


def boundary_trace(field: SolutionField, t_grid: Sequence) -> list:
    """(t, regime, u limit at 0+, prescribed inflow velocity, wall atom mass)."""
    rows = []
    for t in t_grid:
        if t <= 0.0:
            raise NegativeArgument("boundary trace needs t > 0")
        reg = field.potentials.classify(0.0, t)
        rows.append(
            (
                float(t),
                reg.tag.value,
                field.velocity_right_limit(0.0, t),
                field.boundary.velocity_at(t),
                field.boundary_atom_mass(t),
            )
        )
    return rows


def initial_trace(field: SolutionField, x_grid: Sequence, t_small: float = 1e-4) -> list:
    """(x, u, m) extrapolated to t -> 0; targets are the initial data and its mass."""
    if t_small <= 0.0:
        raise NegativeArgument("need t_small > 0")
    rows = []
    for x in x_grid:
        u = _richardson(lambda s: field.velocity(x, s), t_small)
        m = _richardson(lambda s: field.mass_potential(x, s), t_small)
        rows.append((float(x), u, m))
    return rows


def second_potential_H(field: SolutionField, x: float, t: float, shocks=None) -> float:
    """Second potential: x-derivative -q, t-derivative 2E in the weak sense."""
    return field.second_potential(x, t, shocks=shocks)


def mu_identity_space(field: SolutionField, t: float, x1: float, x2: float) -> tuple:
    """(integral of m over [x1,x2], min-potential difference) - equal in theory."""
    if not 0.0 <= x1 < x2:
        raise NegativeArgument("need 0 <= x1 < x2")
    shocks = chars.locate_shocks(field, t, (x1, x2 + 1e-9), include_wall=False)
    pts = [s.x for s in shocks if x1 < s.x < x2]
    val, err = integrate.quad(
        lambda x: field.mass_potential(x, t), x1, x2, points=pts or None, limit=200
    )
    if err > 1e-6 * (1.0 + abs(val)):
        raise QuadratureNotConverged(f"mass-potential integral error estimate {err:.3g}")
    mu_diff = field.potentials.min_potential(x1, t) - field.potentials.min_potential(x2, t)
    return val, mu_diff


def mu_identity_time(field: SolutionField, x: float, t1: float, t2: float) -> tuple:
    """(integral of q over [t1,t2], min-potential difference) - equal in theory."""
    if not 0.0 < t1 < t2:
        raise NegativeArgument("need 0 < t1 < t2")
    ts = np.linspace(t1, t2, 65)
    qs = np.array([field.momentum_potential(x, t) for t in ts])
    dq = np.abs(np.diff(qs))
    big = dq > 10.0 * (np.median(dq) + 1e-12) + 1e-9
    pts = [0.5 * (ts[i] + ts[i + 1]) for i in np.flatnonzero(big)]
    val, err = integrate.quad(
        lambda t: field.momentum_potential(x, t), t1, t2, points=pts or None, limit=200
    )
    if err > 1e-6 * (1.0 + abs(val)):
        raise QuadratureNotConverged(f"momentum-potential integral error estimate {err:.3g}")
    mu_diff = field.potentials.min_potential(x, t2) - field.potentials.min_potential(x, t1)
    return val, mu_diff


# -- weak formulation ------------------------------------------------------------


@dataclass(frozen=True)
class BumpSpec:
    """Tensor-product quintic bump supported on [x_lo,x_hi] x [t_lo,t_hi]."""

    x_lo: float
    x_hi: float
    t_lo: float
    t_hi: float

    def __post_init__(self):
        if not (0.0 < self.x_lo < self.x_hi and 0.0 < self.t_lo < self.t_hi):
            raise NegativeArgument("bump support must lie in the open quadrant")

    def value(self, x, t):
        return _tent(self.x_lo, self.x_hi, x) * _tent(self.t_lo, self.t_hi, t)

    def dx(self, x, t):
        return _tent_d(self.x_lo, self.x_hi, x) * _tent(self.t_lo, self.t_hi, t)

    def dt(self, x, t):
        return _tent(self.x_lo, self.x_hi, x) * _tent_d(self.t_lo, self.t_hi, t)


def _smooth(z):
    z = np.clip(z, 0.0, 1.0)
    return z**3 * (10.0 - 15.0 * z + 6.0 * z * z)


def _smooth_d(z):
    inside = (z > 0.0) & (z < 1.0)
    return np.where(inside, 30.0 * z**2 * (1.0 - z) ** 2, 0.0)


def _tent(lo, hi, s):
    s = np.asarray(s, dtype=float)
    z = (s - lo) / (hi - lo)
    up = _smooth(2.0 * z)
    down = _smooth(2.0 * (1.0 - z))
    out = np.where(z <= 0.5, up, down)
    return np.where((z > 0.0) & (z < 1.0), out, 0.0)


def _tent_d(lo, hi, s):
    s = np.asarray(s, dtype=float)
    z = (s - lo) / (hi - lo)
    scale = 2.0 / (hi - lo)
    up = scale * _smooth_d(2.0 * z)
    down = -scale * _smooth_d(2.0 * (1.0 - z))
    out = np.where(z <= 0.5, up, down)
    return np.where((z > 0.0) & (z < 1.0), out, 0.0)


def _image_curves(field: SolutionField) -> list:
    """Linear curves x = b + v t tracing every data breakpoint under free
    transport: all possible contact and fan-edge positions."""
    curves = set()
    p0, pb = field.initial, field.boundary
    for i, b in enumerate(p0.breaks):
        curves.add((float(b), float(p0.velocity[i])))
        if i > 0:
            curves.add((float(b), float(p0.velocity[i - 1])))
    for i, tau in enumerate(pb.breaks):
        w = float(pb.velocity[i])
        curves.add((-w * float(tau), w))
        if i > 0:
            w = float(pb.velocity[i - 1])
            curves.add((-w * float(tau), w))
    return sorted(curves)


def _structural_cuts(field: SolutionField, t: float) -> list:
    """Possible contact/fan-edge positions at time t (absorbed ones are
    harmless extras; boundary images only exist after their emission time)."""
    cuts = []
    for b, v in _image_curves(field):
        x = b + v * t
        if x > 0.0:
            cuts.append(x)
    return sorted(cuts)


def _structural_event_times(field: SolutionField, t_lo, t_hi, x_lo, x_hi) -> list:
    """Times where the smooth-piece layout can change: image curves crossing
    each other, crossing the window edges, or a new inflow segment starting."""
    curves = _image_curves(field)
    events = []

    def add(t):
        if t_lo + 1e-12 < t < t_hi - 1e-12:
            events.append(float(t))

    for i in range(len(curves)):
        b1, v1 = curves[i]
        for edge in (x_lo, x_hi):
            if v1 != 0.0:
                add((edge - b1) / v1)
        for b2, v2 in curves[i + 1 :]:
            if v1 != v2:
                add((b2 - b1) / (v1 - v2))
    for tau in field.boundary.breaks:
        add(float(tau))
    return events


def _shock_event_times(field, coarse_t, coarse_lists, curves, x_lo, x_hi) -> list:
    """Times where a tracked shock crosses an image curve or a window edge."""
    all_curves = list(curves) + [(x_lo, 0.0), (x_hi, 0.0)]
    events = []
    for j in range(len(coarse_t) - 1):
        t0, t1 = float(coarse_t[j]), float(coarse_t[j + 1])
        before, after = coarse_lists[j], coarse_lists[j + 1]
        if not before or not after:
            continue
        for s in before:
            s2 = min(after, key=lambda q: abs(q.x - s.x))
            if abs(s2.x - s.x) > 0.3 * (x_hi - x_lo) + 1e-6:
                continue
            for b, v in all_curves:
                g0 = s.x - (b + v * t0)
                g1 = s2.x - (b + v * t1)
                if g0 == 0.0 or g1 == 0.0 or (g0 > 0) == (g1 > 0):
                    continue
                t_c = _refine_shock_crossing(field, t0, t1, s.x, s2.x, b, v)
                if t_c is not None and t_lo_ok(t_c, coarse_t):
                    events.append(t_c)
    return events


def t_lo_ok(t_c, coarse_t):
    return coarse_t[0] + 1e-12 < t_c < coarse_t[-1] - 1e-12


def _refine_shock_crossing(field, t0, t1, x0, x1, b, v):
    pad = abs(x1 - x0) + 1e-4

    def gap(t):
        frac = (t - t0) / (t1 - t0)
        guess = x0 + (x1 - x0) * frac
        lo = max(0.0, min(guess, b + v * t) - pad)
        hi = max(guess, b + v * t) + pad
        found = chars.locate_shocks(
            field, t, (lo, hi), scan_n=48, include_wall=False, min_mass=1e-7
        )
        if not found:
            return None
        s = min(found, key=lambda q: abs(q.x - guess))
        return s.x - (b + v * t)

    g0 = gap(t0)
    g1 = gap(t1)
    if g0 is None or g1 is None or (g0 > 0) == (g1 > 0):
        return None
    lo, hi = t0, t1
    for _ in range(45):
        mid = 0.5 * (lo + hi)
        gm = gap(mid)
        if gm is None:
            return 0.5 * (lo + hi)
        if (gm > 0) == (g0 > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def _flow_event_times(field: SolutionField, t_lo: float, t_hi: float, scan_t: int = 160) -> list:
    """Instants where interior shocks coalesce or reach the wall.

    Detected over the full spatial reach (so no participant can be hidden by
    a window) by bisection on the interior shock count; the atoms' kinetic
    energy flux is discontinuous exactly at these instants.
    """
    ts = np.linspace(t_lo, t_hi, scan_t + 1)
    window = (0.0, field.reach(t_hi))

    def count(t: float) -> int:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return len(
                chars.locate_shocks(
                    field, float(t), window, scan_n=192, include_wall=False, min_mass=1e-6
                )
            )

    counts = [None] * len(ts)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        lists = chars.locate_shocks_many(field, ts, window, scan_n=192, min_mass=1e-6)
    counts = [len(l) for l in lists]
    events = []
    for j in range(len(ts) - 1):
        if counts[j + 1] >= counts[j]:
            continue
        lo, hi = float(ts[j]), float(ts[j + 1])
        n_before = counts[j]
        for _ in range(48):
            mid = 0.5 * (lo + hi)
            if count(mid) >= n_before:
                lo = mid
            else:
                hi = mid
        events.append(0.5 * (lo + hi))
    return events


def weak_residual(
    field: SolutionField, bump: BumpSpec, quad_n: int = 256, include_atoms: bool = True
) -> tuple:
    """Residuals (r1, r2) of the two weak-form integrals under one test bump.

    Second-order composite quadrature: the space integral splits at every atom
    and at every possible contact/fan-edge position, the time integral splits
    at shock-merge instants (where the atoms' kinetic energy dissipates).
    Both residuals then fall like 1/quad_n^2 down to roundoff.
    ``include_atoms=False`` drops the point-mass terms (negative control).
    """
    x_lo, x_hi = bump.x_lo, bump.x_hi
    coarse = np.linspace(bump.t_lo, bump.t_hi, min(quad_n, 128) + 1)
    coarse_lists = chars.locate_shocks_many(
        field, coarse, (x_lo, x_hi), scan_n=96, min_mass=2e-6,
        refine_tol=1e-13 * max(1.0, x_hi),
    )
    events = [e for e in _flow_event_times(field, bump.t_lo, bump.t_hi)
              if bump.t_lo < e < bump.t_hi]
    events += _structural_event_times(field, bump.t_lo, bump.t_hi, x_lo, x_hi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", WindowTooCoarse)
        events += _shock_event_times(field, coarse, coarse_lists, _image_curves(field), x_lo, x_hi)
    events.append(0.5 * (bump.t_lo + bump.t_hi))  # joint of the piecewise-quintic tent
    events = sorted(set(events))
    merged_events = []
    for e in events:
        if not merged_events or e - merged_events[-1] > 1e-9 * (1.0 + bump.t_hi):
            merged_events.append(e)
    t_edges = [bump.t_lo] + merged_events + [bump.t_hi]
    t_span = bump.t_hi - bump.t_lo
    t_nudge = 1e-8 * (1.0 + bump.t_hi)
    t_parts, t_eval_parts, tw_parts = [], [], []
    for lo, hi in zip(t_edges[:-1], t_edges[1:]):
        n_k = max(8, 2 * int(round(0.5 * quad_n * (hi - lo) / t_span)))
        tk = np.linspace(lo, hi, n_k + 1)
        te = tk.copy()
        te[0] = min(lo + t_nudge, tk[1])
        te[-1] = max(hi - t_nudge, tk[-2])
        t_parts.append(tk)
        t_eval_parts.append(te)
        tw_parts.append(_simpson_weights(n_k, (hi - lo) / n_k))
    t_nodes = np.concatenate(t_parts)
    t_evals = np.concatenate(t_eval_parts)
    t_weights = np.concatenate(tw_parts)
    total_len = x_hi - x_lo
    shock_lists = chars.locate_shocks_many(
        field, t_evals, (x_lo, x_hi), scan_n=96, min_mass=2e-6,
        refine_tol=1e-13 * max(1.0, x_hi),
    )
    # evaluation points sit this far inside each segment: past the bisection
    # fuzz of the split points and the velocity branches' roundoff band
    nudge = 1e-9 * (1.0 + x_hi)
    xs_parts, xw_parts, ts_parts, starts = [], [], [], []
    pos = 0
    for j, t in enumerate(t_evals):
        inner = [s.x for s in shock_lists[j] if x_lo < s.x < x_hi]
        inner += [c for c in _structural_cuts(field, t) if x_lo < c < x_hi]
        inner.append(0.5 * (x_lo + x_hi))  # joint of the piecewise-quintic tent
        inner.sort()
        cuts = [x_lo]
        for c in inner:
            if c - cuts[-1] > 1e-9 * (1.0 + x_hi):
                cuts.append(c)
        cuts.append(x_hi)
        starts.append(pos)
        for seg_lo, seg_hi in zip(cuts[:-1], cuts[1:]):
            n_seg = max(8, 2 * int(round(0.5 * quad_n * (seg_hi - seg_lo) / total_len)))
            xs = np.linspace(seg_lo, seg_hi, n_seg + 1)
            w = _simpson_weights(n_seg, (seg_hi - seg_lo) / n_seg)
            xs_eval = xs.copy()
            xs_eval[0] = min(seg_lo + nudge, xs[1])
            xs_eval[-1] = max(seg_hi - nudge, xs[-2])
            xs_parts.append((xs, xs_eval))
            xw_parts.append(w)
            ts_parts.append((np.full(n_seg + 1, t_nodes[j]), np.full(n_seg + 1, t)))
            pos += n_seg + 1
    xs_true = np.concatenate([p[0] for p in xs_parts])
    xs_eval = np.concatenate([p[1] for p in xs_parts])
    weights = np.concatenate(xw_parts)
    ts_true = np.concatenate([p[0] for p in ts_parts])
    ts_eval = np.concatenate([p[1] for p in ts_parts])
    u, m, _, rho = field.slice_fields(xs_eval, ts_eval)
    phi = bump.value(xs_true, ts_true)
    phi_t = bump.dt(xs_true, ts_true)
    phi_x = bump.dx(xs_true, ts_true)
    f1 = weights * (phi_t * m - phi * u * rho)
    f2 = weights * ((phi_t * u + phi_x * u * u) * rho)
    i1 = np.add.reduceat(f1, starts)
    i2 = np.add.reduceat(f2, starts)
    if include_atoms:
        for j, t in enumerate(t_nodes):
            for s in shock_lists[j]:
                if x_lo < s.x < x_hi:
                    w = float(bump.value(s.x, t))
                    wt = float(bump.dt(s.x, t))
                    wx = float(bump.dx(s.x, t))
                    i1[j] -= w * s.u_shock * s.mass
                    i2[j] += (wt * s.u_shock + wx * s.u_shock**2) * s.mass
    r1 = float(np.dot(t_weights, i1))
    r2 = float(np.dot(t_weights, i2))
    return r1, r2
