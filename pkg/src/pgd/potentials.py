"""Variational potentials of the flow and their exact pointwise minima.

The initial potential section is ``y -> t*P0(y) + A0(y) - x*M0(y)`` and the
inflow (boundary) potential section is ``tau -> x*B(tau) - t*Pb(tau) +
A_b(tau)``, both built from the exact data moments.  For piecewise-constant
data each section is piecewise quadratic and strictly convex per segment, so
the global minimum over the half line is found exactly from a finite candidate
set: the segment-interior critical points, the breakpoints, zero, and the
truncation cut beyond which the integrand has a fixed sign.

All operations here are pure functions of immutable profiles; concurrent use
is unrestricted.
"""

from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass

import numpy as np

from .errors import NegativeArgument
from .profiles import BOUNDARY, INITIAL, PiecewiseProfile

TIE_REL = 1e-12
DEFAULT_TOL_EQ_ABS = 1e-10
DEFAULT_TOL_EQ_REL = 1e-8


@dataclass(frozen=True)
class MinimizerResult:
    """Minimum of a potential section with its extreme argmins.

    ``arg_lo``/``arg_hi`` are the leftmost and rightmost arguments whose value
    lies within the tie tolerance of the minimum; they differ exactly where
    the transported state carries an atom.  ``arg_strict`` is the literal
    argmin without any tolerance, which pins the branch structure of the mass
    and momentum potentials sharply.
    """

    value: float
    arg_lo: float
    arg_hi: float
    arg_strict: float = None

    def __post_init__(self):
        if self.arg_strict is None:
            object.__setattr__(self, "arg_strict", self.arg_lo)

    @property
    def tied(self) -> bool:
        return self.arg_hi > self.arg_lo + 1e-13 * (1.0 + abs(self.arg_hi))


class RegimeTag(enum.Enum):
    INITIAL_DOMINATED = "initial"
    BOUNDARY_DOMINATED = "boundary"
    INTERFACE = "interface"


@dataclass(frozen=True)
class Regime:
    """Which potential governs a point, with both minimum values attached."""

    tag: RegimeTag
    f_value: float
    g_value: float

    @property
    def initial_side(self) -> bool:
        """True where the solution fields read off the initial potential."""
        return self.tag is not RegimeTag.BOUNDARY_DOMINATED


class Potentials:
    """Exact evaluation/minimization of both potentials for one data pair."""

    def __init__(
        self,
        initial: PiecewiseProfile,
        boundary: PiecewiseProfile,
        tol_eq_abs: float = DEFAULT_TOL_EQ_ABS,
        tol_eq_rel: float = DEFAULT_TOL_EQ_REL,
    ):
        if initial.kind != INITIAL or boundary.kind != BOUNDARY:
            raise ValueError("need one initial and one boundary profile")
        self.initial = initial
        self.boundary = boundary
        self.tol_eq_abs = float(tol_eq_abs)
        self.tol_eq_rel = float(tol_eq_rel)
        # F is nondecreasing beyond y = x + t*max(0, -min u0).
        self._back_speed = max(0.0, -initial.vmin)

    # -- section evaluation -------------------------------------------------

    def initial_potential(self, y, x, t):
        """Potential of starting position y seen from (x, t)."""
        if np.any(np.asarray(y) < 0) or np.any(np.asarray(x) < 0) or t < 0:
            raise NegativeArgument("initial potential needs y, x, t >= 0")
        p = self.initial
        return t * p.moment(y, 1) + p.eta_moment(y, 0) - x * p.moment(y, 0)

    def boundary_potential(self, tau, x, t):
        """Potential of emission time tau seen from (x, t)."""
        if np.any(np.asarray(tau) < 0) or np.any(np.asarray(x) < 0) or t < 0:
            raise NegativeArgument("boundary potential needs tau, x, t >= 0")
        p = self.boundary
        return x * p.moment(tau, 1) - t * p.moment(tau, 2) + p.eta_moment(tau, 2)

    # -- scalar minimization (hot path) --------------------------------------

    def minimize_initial_potential(self, x: float, t: float) -> MinimizerResult:
        """Global minimum of the initial potential section over [0, inf)."""
        if x < 0 or t < 0:
            raise NegativeArgument("need x, t >= 0")
        p = self.initial
        bk = p._bk
        m0, m1, e0 = p._pm[0], p._pm[1], p._pe[0]
        w0, w1 = p._w[0], p._w[1]
        ymax = x + t * self._back_speed
        cands = [0.0, ymax]
        nseg = len(bk)
        for i in range(nseg):
            lo = bk[i]
            if lo > ymax:
                break
            hi = bk[i + 1] if i + 1 < nseg else ymax
            hi = min(hi, ymax)
            if i + 1 < nseg and bk[i + 1] <= ymax:
                cands.append(bk[i + 1])
            c = x - t * p._vel[i]
            if c < lo:
                c = lo
            elif c > hi:
                c = hi
            cands.append(c)
        best = 0.0
        strict = 0.0
        vals = []
        for c in cands:
            i = _seg(bk, c)
            ds = c - bk[i]
            val = t * (m1[i] + w1[i] * ds) + e0[i] + w0[i] * (bk[i] * ds + 0.5 * ds * ds) - x * (m0[i] + w0[i] * ds)
            vals.append(val)
            if val < best:
                best = val
                strict = c
        tol = TIE_REL * (1.0 + abs(best))
        lo_arg = hi_arg = None
        for c, v in zip(cands, vals):
            if v <= best + tol:
                if lo_arg is None or c < lo_arg:
                    lo_arg = c
                if hi_arg is None or c > hi_arg:
                    hi_arg = c
        return MinimizerResult(best, lo_arg, hi_arg, strict)

    def minimize_boundary_potential(self, x: float, t: float) -> MinimizerResult:
        """Global minimum of the inflow potential section, attained in [0, t]."""
        if x < 0 or t < 0:
            raise NegativeArgument("need x, t >= 0")
        if t == 0.0:
            return MinimizerResult(0.0, 0.0, 0.0, 0.0)
        p = self.boundary
        bk = p._bk
        m1, m2, e2 = p._pm[1], p._pm[2], p._pe[2]
        w1, w2 = p._w[1], p._w[2]
        cands = [0.0, t]
        nseg = len(bk)
        for i in range(nseg):
            lo = bk[i]
            if lo > t:
                break
            hi = bk[i + 1] if i + 1 < nseg else t
            hi = min(hi, t)
            if i + 1 < nseg and bk[i + 1] <= t:
                cands.append(bk[i + 1])
            c = t - x / p._vel[i]
            if c < lo:
                c = lo
            elif c > hi:
                c = hi
            cands.append(c)
        best = 0.0
        strict = 0.0
        vals = []
        for c in cands:
            i = _seg(bk, c)
            ds = c - bk[i]
            val = x * (m1[i] + w1[i] * ds) - t * (m2[i] + w2[i] * ds) + e2[i] + w2[i] * (bk[i] * ds + 0.5 * ds * ds)
            vals.append(val)
            if val < best:
                best = val
                strict = c
        tol = TIE_REL * (1.0 + abs(best))
        lo_arg = hi_arg = None
        for c, v in zip(cands, vals):
            if v <= best + tol:
                if lo_arg is None or c < lo_arg:
                    lo_arg = c
                if hi_arg is None or c > hi_arg:
                    hi_arg = c
        return MinimizerResult(best, lo_arg, hi_arg, strict)

    # -- vectorized minimization ---------------------------------------------

    def minimize_initial_grid(self, x, t):
        """Vectorized minimum over grids of x (and optionally t): (value, arg_lo, arg_hi)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        if np.any(x < 0) or np.any(t < 0):
            raise NegativeArgument("need x, t >= 0")
        p = self.initial
        ymax = x + t * self._back_speed
        cols = [np.zeros_like(x), ymax]
        nseg = p.nseg
        for i in range(nseg):
            lo = p.breaks[i]
            hi = p.breaks[i + 1] if i + 1 < nseg else np.inf
            upper = np.minimum(hi, ymax)
            c = np.clip(x - t * p.velocity[i], np.minimum(lo, upper), upper)
            cols.append(np.where(lo <= ymax, c, 0.0))
            if i + 1 < nseg:
                cols.append(np.minimum(p.breaks[i + 1], ymax))
        C = np.vstack(cols)
        V = t[None, :] * p.moment(C, 1) + p.eta_moment(C, 0) - x[None, :] * p.moment(C, 0)
        return _extract(C, V)

    def minimize_boundary_grid(self, x, t):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        if np.any(x < 0) or np.any(t < 0):
            raise NegativeArgument("need x, t >= 0")
        p = self.boundary
        cols = [np.zeros_like(x), t.copy()]
        nseg = p.nseg
        for i in range(nseg):
            lo = p.breaks[i]
            hi = p.breaks[i + 1] if i + 1 < nseg else np.inf
            upper = np.minimum(hi, t)
            c = np.clip(t - x / p.velocity[i], np.minimum(lo, upper), upper)
            cols.append(np.where(lo <= t, c, 0.0))
            if i + 1 < nseg:
                cols.append(np.minimum(p.breaks[i + 1], t))
        C = np.vstack(cols)
        V = x[None, :] * p.moment(C, 1) - t[None, :] * p.moment(C, 2) + p.eta_moment(C, 2)
        return _extract(C, V)

    # -- combined quantities --------------------------------------------------

    def min_potential(self, x: float, t: float) -> float:
        """min of the two potential minima; locally Lipschitz in (x, t)."""
        return min(
            self.minimize_initial_potential(x, t).value,
            self.minimize_boundary_potential(x, t).value,
        )

    def equality_tol(self, f: float, g: float) -> float:
        return max(self.tol_eq_abs, self.tol_eq_rel * (1.0 + abs(f) + abs(g)))

    def classify(self, x: float, t: float) -> Regime:
        """Regime of a point: which potential is strictly smaller, if any."""
        f = self.minimize_initial_potential(x, t).value
        g = self.minimize_boundary_potential(x, t).value
        tol = self.equality_tol(f, g)
        if f < g - tol:
            tag = RegimeTag.INITIAL_DOMINATED
        elif f > g + tol:
            tag = RegimeTag.BOUNDARY_DOMINATED
        else:
            tag = RegimeTag.INTERFACE
        return Regime(tag, f, g)


def _seg(bk: tuple, s: float) -> int:
    i = bisect_right(bk, s) - 1
    if i < 0:
        return 0
    n = len(bk)
    return i if i < n else n - 1


def _extract(C: np.ndarray, V: np.ndarray):
    idx = V.argmin(axis=0)
    cols = np.arange(V.shape[1])
    vmin = V[idx, cols]
    arg_strict = C[idx, cols]
    tol = TIE_REL * (1.0 + np.abs(vmin))
    ok = V <= vmin + tol
    arg_lo = np.where(ok, C, np.inf).min(axis=0)
    arg_hi = np.where(ok, C, -np.inf).max(axis=0)
    return vmin, arg_lo, arg_hi, arg_strict
