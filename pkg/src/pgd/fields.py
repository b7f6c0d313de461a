"""Constructed solution fields: velocity, mass/momentum/energy potentials, density.

Everything is read off the potential minimizers.  Velocity uses the six-branch
case split (single minimizer, tied minimizers, interface, pure fan, and the
wall rules at x=0); the mass and momentum potentials are direct cumulant
lookups at the leftmost minimizer.  The energy and second potentials integrate
the transported velocity along starting positions, which for piecewise-constant
data reduces exactly to cumulant differences once the absorbed intervals
(shock and wall contents) are split off.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Iterable, Optional, Sequence

import numpy as np

from . import characteristics as chars
from .errors import NegativeArgument, UndefinedAtRarefactionCenter
from .potentials import MinimizerResult, Potentials, Regime, RegimeTag
from .profiles import PiecewiseProfile

_ARG_TIE = 1e-13
_TIE_BAND = 1e-12  # equality band for velocity branches: roundoff absorption only


@dataclass(frozen=True)
class SolutionSample:
    """All solution fields at one space-time point."""

    x: float
    t: float
    regime: Regime
    u: float
    m: float
    q: float
    E: float


@dataclass(frozen=True)
class AtomRecord:
    """One Dirac component of the density measure."""

    x_atom: float
    mass: float
    u_atom: float
    location_kind: str  # "interior" | "boundary"


@dataclass(frozen=True)
class DensityProfile:
    """Density measure at fixed time: absolutely continuous samples plus atoms."""

    t: float
    ac_samples: list
    atoms: list


class SolutionField:
    """Pointwise solution of the half-line problem for one data pair.

    Stateless over immutable inputs; safe for parallel grid sweeps.
    """

    def __init__(
        self,
        initial: PiecewiseProfile,
        boundary: PiecewiseProfile,
        tol_eq_abs: float = 1e-10,
        tol_eq_rel: float = 1e-8,
    ):
        self.initial = initial
        self.boundary = boundary
        self.potentials = Potentials(initial, boundary, tol_eq_abs, tol_eq_rel)

    # -- basic geometry --------------------------------------------------------

    @property
    def velocity_hull(self) -> tuple:
        lo = min(self.initial.vmin, self.boundary.vmin)
        hi = max(self.initial.vmax, self.boundary.vmax)
        return (lo, hi)

    @property
    def hull_diameter(self) -> float:
        lo, hi = self.velocity_hull
        return hi - lo

    @property
    def max_ac_density(self) -> float:
        return max(self.initial.max_density, self.boundary.max_density)

    def reach(self, t: float) -> float:
        """x beyond which nothing has moved or arrived by time t."""
        bmax = float(self.initial.breaks[-1])
        speed = max(self.initial.vmax, self.boundary.vmax, 0.0)
        return bmax + t * speed + 1.0

    # -- velocity ---------------------------------------------------------------

    def velocity(self, x: float, t: float) -> float:
        """Transport velocity at (x, t); at atoms this is the weighted mean.

        Branch equality uses the minimizers' tie tolerance (roundoff scale),
        not the looser regime-tagging tolerance, so side values next to a
        shock stay exact.
        """
        if t <= 0.0:
            raise UndefinedAtRarefactionCenter("velocity needs t > 0")
        if x < 0.0:
            raise NegativeArgument("velocity needs x >= 0")
        pots = self.potentials
        rf = pots.minimize_initial_potential(x, t)
        rg = pots.minimize_boundary_potential(x, t)
        tol = max(1e-13, _TIE_BAND * (1.0 + abs(rf.value) + abs(rg.value)))
        if x == 0.0:
            if rf.value > rg.value + tol:
                return self.boundary.velocity_at(t)
            if rf.value < rg.value - tol:
                return 0.0
            return self._interface_velocity(rf.arg_hi, rg.arg_hi, x, t)
        if abs(rf.value - rg.value) <= tol:
            if rf.arg_hi <= 0.0 and rg.arg_hi <= 0.0:
                return x / t
            return self._interface_velocity(rf.arg_hi, rg.arg_hi, x, t)
        if rf.value < rg.value:
            return self._initial_branch_velocity(x, t, rf)
        return self._boundary_branch_velocity(x, t, rg)

    def _initial_branch_velocity(self, x: float, t: float, rf: MinimizerResult) -> float:
        p0 = self.initial
        if rf.tied:
            dm = p0.moment_s(rf.arg_hi, 0) - p0.moment_s(rf.arg_lo, 0)
            dq = p0.moment_s(rf.arg_hi, 1) - p0.moment_s(rf.arg_lo, 1)
            return dq / dm
        return (x - rf.arg_lo) / t

    def _boundary_branch_velocity(self, x: float, t: float, rg: MinimizerResult) -> float:
        pb = self.boundary
        if rg.tied:
            dm = pb.moment_s(rg.arg_hi, 1) - pb.moment_s(rg.arg_lo, 1)
            dq = pb.moment_s(rg.arg_hi, 2) - pb.moment_s(rg.arg_lo, 2)
            return dq / dm
        return x / (t - rg.arg_lo)

    def _interface_velocity(self, y_hi: float, tau_hi: float, x: float, t: float) -> float:
        num = self.boundary.moment_s(tau_hi, 2) + self.initial.moment_s(y_hi, 1)
        den = self.boundary.moment_s(tau_hi, 1) + self.initial.moment_s(y_hi, 0)
        if den <= 0.0:
            return x / t
        return num / den

    def velocity_grid(self, x, t) -> np.ndarray:
        """Vectorized velocity over grids of x (and optionally t), all t > 0."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        if np.any(t <= 0.0):
            raise UndefinedAtRarefactionCenter("velocity needs t > 0")
        pots = self.potentials
        fv, flo, fhi, _ = pots.minimize_initial_grid(x, t)
        gv, glo, ghi, _ = pots.minimize_boundary_grid(x, t)
        tol = np.maximum(1e-13, _TIE_BAND * (1.0 + np.abs(fv) + np.abs(gv)))
        p0, pb = self.initial, self.boundary
        u = np.empty_like(x)

        inter = np.abs(fv - gv) <= tol
        init = (fv < gv - tol)
        bd = ~inter & ~init

        ftie = fhi > flo + _ARG_TIE * (1.0 + np.abs(fhi))
        gtie = ghi > glo + _ARG_TIE * (1.0 + np.abs(ghi))

        m = init & ~ftie
        u[m] = (x[m] - flo[m]) / t[m]
        m = init & ftie
        if m.any():
            u[m] = (p0.moment(fhi[m], 1) - p0.moment(flo[m], 1)) / (
                p0.moment(fhi[m], 0) - p0.moment(flo[m], 0)
            )
        m = bd & ~gtie
        u[m] = x[m] / (t[m] - glo[m])
        m = bd & gtie
        if m.any():
            u[m] = (pb.moment(ghi[m], 2) - pb.moment(glo[m], 2)) / (
                pb.moment(ghi[m], 1) - pb.moment(glo[m], 1)
            )
        fan = inter & (fhi <= 0.0) & (ghi <= 0.0)
        u[fan] = x[fan] / t[fan]
        m = inter & ~fan
        if m.any():
            num = pb.moment(ghi[m], 2) + p0.moment(fhi[m], 1)
            den = pb.moment(ghi[m], 1) + p0.moment(fhi[m], 0)
            u[m] = np.where(den > 0.0, num / np.where(den > 0.0, den, 1.0), x[m] / t[m])
        # wall rules override at x == 0
        for i in np.flatnonzero(x == 0.0):
            u[i] = self.velocity(0.0, float(t[i]))
        return u

    # -- mass / momentum potentials ----------------------------------------------

    def _initial_side(self, rf: MinimizerResult, rg: MinimizerResult) -> bool:
        # strict comparison: the branch switch is exactly where the minima cross
        return rf.value <= rg.value

    def mass_potential(self, x: float, t: float) -> float:
        """Mass potential; its x-derivative is the density measure."""
        if x < 0.0 or t < 0.0:
            raise NegativeArgument("mass potential needs x, t >= 0")
        pots = self.potentials
        rg = pots.minimize_boundary_potential(x, t)
        if x == 0.0:
            return -self.boundary.moment_s(rg.arg_strict, 1)
        rf = pots.minimize_initial_potential(x, t)
        if self._initial_side(rf, rg):
            return self.initial.moment_s(rf.arg_strict, 0)
        return -self.boundary.moment_s(rg.arg_strict, 1)

    def momentum_potential(self, x: float, t: float) -> float:
        if x < 0.0 or t < 0.0:
            raise NegativeArgument("momentum potential needs x, t >= 0")
        pots = self.potentials
        rg = pots.minimize_boundary_potential(x, t)
        if x == 0.0:
            return -self.boundary.moment_s(rg.arg_strict, 2)
        rf = pots.minimize_initial_potential(x, t)
        if self._initial_side(rf, rg):
            return self.initial.moment_s(rf.arg_strict, 1)
        return -self.boundary.moment_s(rg.arg_strict, 2)

    def mass_potential_grid(self, x, t) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pots = self.potentials
        fv, _, _, fs = pots.minimize_initial_grid(x, t)
        gv, _, _, gs = pots.minimize_boundary_grid(x, t)
        init_side = (fv <= gv) & (x > 0.0)
        return np.where(init_side, self.initial.moment(fs, 0), -self.boundary.moment(gs, 1))

    def momentum_potential_grid(self, x, t) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pots = self.potentials
        fv, _, _, fs = pots.minimize_initial_grid(x, t)
        gv, _, _, gs = pots.minimize_boundary_grid(x, t)
        init_side = (fv <= gv) & (x > 0.0)
        return np.where(init_side, self.initial.moment(fs, 1), -self.boundary.moment(gs, 2))

    def density_ac(self, x: float, t: float) -> float:
        """Absolutely continuous density away from atoms (exact, structural).

        The minimizer either tracks a segment-interior critical point, where
        dm/dx equals the data density there, or is pinned (at zero, a
        breakpoint, or the truncation cut), where m is locally constant.
        """
        pots = self.potentials
        rf = pots.minimize_initial_potential(x, t)
        rg = pots.minimize_boundary_potential(x, t)
        if x > 0.0 and self._initial_side(rf, rg):
            y = rf.arg_strict
            i = self.initial.segment_index(y)
            crit = x - t * self.initial.velocity[i]
            if abs(y - crit) <= 1e-9 * (1.0 + abs(y)):
                return float(self.initial.density[i])
            return 0.0
        tau = rg.arg_strict
        i = self.boundary.segment_index(tau)
        crit = t - x / self.boundary.velocity[i]
        if abs(tau - crit) <= 1e-9 * (1.0 + abs(tau)):
            return float(self.boundary.density[i])
        return 0.0

    def density_ac_grid(self, x, t) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return self.slice_fields(x, t)[3]

    def slice_fields(self, x, t):
        """One-pass (u, m, q, rho_ac) over grids of x (and optionally t)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape)
        if np.any(t <= 0.0):
            raise UndefinedAtRarefactionCenter("slice evaluation needs t > 0")
        pots = self.potentials
        fv, _, _, fs = pots.minimize_initial_grid(x, t)
        gv, _, _, gs = pots.minimize_boundary_grid(x, t)
        init_side = (fv <= gv) & (x > 0.0)
        p0, pb = self.initial, self.boundary

        m = np.where(init_side, p0.moment(fs, 0), -pb.moment(gs, 1))
        q = np.where(init_side, p0.moment(fs, 1), -pb.moment(gs, 2))

        u = self.velocity_grid(x, t)

        iseg = np.clip(np.searchsorted(p0.breaks, fs, side="right") - 1, 0, p0.nseg - 1)
        crit_i = x - t * p0.velocity[iseg]
        rho_i = np.where(np.abs(fs - crit_i) <= 1e-9 * (1.0 + np.abs(fs)), p0.density[iseg], 0.0)
        bseg = np.clip(np.searchsorted(pb.breaks, gs, side="right") - 1, 0, pb.nseg - 1)
        with np.errstate(divide="ignore"):
            crit_b = t - x / pb.velocity[bseg]
        rho_b = np.where(np.abs(gs - crit_b) <= 1e-9 * (1.0 + np.abs(gs)), pb.density[bseg], 0.0)
        rho = np.where(init_side, rho_i, rho_b)
        return u, m, q, rho

    # -- transported-state partitions (shared by energy and second potential) ----

    def _initial_partition(self, t: float, y_top: float, shocks, x_eval: float):
        """Split [0, y_top] into (a, b, u_const, pos_const) pieces.

        ``u_const is None`` marks free streaming; otherwise the interval sits
        inside the wall atom or a shock moving at ``u_const`` located at
        ``pos_const``.
        """
        pieces = []
        cursor = 0.0
        reg0 = self.potentials.classify(0.0, t)
        if reg0.tag is not RegimeTag.BOUNDARY_DOMINATED:
            y_wall = self.potentials.minimize_initial_potential(0.0, t).arg_hi
            b = min(y_wall, y_top)
            if b > cursor:
                pieces.append((cursor, b, self.velocity(0.0, t), 0.0))
                cursor = b
        for s in sorted((s for s in shocks if 0.0 < s.x), key=lambda s: s.x):
            if cursor >= y_top or s.x > x_eval * (1.0 + 1e-12) + 1e-300:
                break
            if s.source == "boundary":
                continue
            lo = cursor if s.source == "mixed" else max(s.eta_lo, cursor)
            hi = min(s.eta_hi, y_top)
            if hi <= cursor:
                continue
            if lo > cursor:
                pieces.append((cursor, lo, None, None))
                cursor = lo
            pieces.append((cursor, hi, s.u_shock, s.x))
            cursor = hi
        if cursor < y_top:
            pieces.append((cursor, y_top, None, None))
        return pieces

    def _boundary_partition(self, t: float, tau_top: float, shocks, x_eval: float):
        """Split [0, tau_top] by absorbed emission-time intervals (see above)."""
        pieces = []
        cursor = 0.0
        for s in sorted((s for s in shocks if s.x > x_eval), key=lambda s: -s.x):
            if cursor >= tau_top:
                break
            if s.source == "initial":
                continue
            lo = cursor if s.source == "mixed" else max(s.tau_lo, cursor)
            hi = min(s.tau_hi, tau_top)
            if hi <= cursor:
                continue
            if lo > cursor:
                pieces.append((cursor, lo, None, None))
                cursor = lo
            pieces.append((cursor, hi, s.u_shock, s.x))
            cursor = hi
        if cursor < tau_top:
            pieces.append((cursor, tau_top, None, None))
        return pieces

    def _shocks_for(self, t: float, shocks=None):
        if shocks is not None:
            return shocks
        return chars.locate_shocks(self, t, (0.0, self.reach(t)), include_wall=False)

    def energy_potential(self, x: float, t: float, shocks=None) -> float:
        """Kinetic-energy potential; its Stieltjes measure is (u^2/2) dm."""
        if t <= 0.0:
            raise UndefinedAtRarefactionCenter("energy potential needs t > 0")
        if x < 0.0:
            raise NegativeArgument("energy potential needs x >= 0")
        pots = self.potentials
        rf = pots.minimize_initial_potential(x, t)
        rg = pots.minimize_boundary_potential(x, t)
        shocks = self._shocks_for(t, shocks)
        p0, pb = self.initial, self.boundary
        if x > 0.0 and self._initial_side(rf, rg):
            acc = 0.0
            for a, b, u, _ in self._initial_partition(t, rf.arg_strict, shocks, x):
                if u is None:
                    acc += p0.moment_s(b, 2) - p0.moment_s(a, 2)
                else:
                    acc += u * (p0.moment_s(b, 1) - p0.moment_s(a, 1))
            return 0.5 * acc
        acc = 0.0
        for a, b, u, _ in self._boundary_partition(t, rg.arg_strict, shocks, x):
            if u is None:
                acc += pb.moment_s(b, 3) - pb.moment_s(a, 3)
            else:
                acc += u * (pb.moment_s(b, 2) - pb.moment_s(a, 2))
        return -0.5 * acc

    def second_potential(self, x: float, t: float, shocks=None) -> float:
        """Potential whose x-derivative is -q and t-derivative is 2E (weakly)."""
        if t <= 0.0:
            raise UndefinedAtRarefactionCenter("second potential needs t > 0")
        if x < 0.0:
            raise NegativeArgument("second potential needs x >= 0")
        pots = self.potentials
        rf = pots.minimize_initial_potential(x, t)
        rg = pots.minimize_boundary_potential(x, t)
        shocks = self._shocks_for(t, shocks)
        p0, pb = self.initial, self.boundary
        if x > 0.0 and self._initial_side(rf, rg):
            acc = 0.0
            for a, b, u, pos in self._initial_partition(t, rf.arg_strict, shocks, x):
                if u is None:
                    acc += (
                        (p0.eta_moment_s(b, 1) - p0.eta_moment_s(a, 1))
                        + t * (p0.moment_s(b, 2) - p0.moment_s(a, 2))
                        - x * (p0.moment_s(b, 1) - p0.moment_s(a, 1))
                    )
                else:
                    acc += (pos - x) * (p0.moment_s(b, 1) - p0.moment_s(a, 1))
            return acc
        acc = 0.0
        for a, b, u, pos in self._boundary_partition(t, rg.arg_strict, shocks, x):
            if u is None:
                acc += (
                    t * (pb.moment_s(b, 3) - pb.moment_s(a, 3))
                    - (pb.eta_moment_s(b, 3) - pb.eta_moment_s(a, 3))
                    - x * (pb.moment_s(b, 2) - pb.moment_s(a, 2))
                )
            else:
                acc += (pos - x) * (pb.moment_s(b, 2) - pb.moment_s(a, 2))
        return -acc

    # -- composite queries ---------------------------------------------------------

    def sample(self, x: float, t: float, shocks=None) -> SolutionSample:
        reg = self.potentials.classify(x, t)
        return SolutionSample(
            x=x,
            t=t,
            regime=reg,
            u=self.velocity(x, t),
            m=self.mass_potential(x, t),
            q=self.momentum_potential(x, t),
            E=self.energy_potential(x, t, shocks=shocks),
        )

    def boundary_atom_mass(self, t: float) -> float:
        """Mass of the Dirac atom sitting on the wall (0 if inflow is active)."""
        reg = self.potentials.classify(0.0, t)
        if reg.tag is RegimeTag.BOUNDARY_DOMINATED:
            return 0.0
        y_wall = self.potentials.minimize_initial_potential(0.0, t).arg_hi
        return self.initial.moment_s(y_wall, 0) + self.boundary.moment_s(t, 1)

    def density_profile(self, t: float, x_grid) -> DensityProfile:
        """Density measure on a grid: centered-difference ac part plus atoms."""
        if t <= 0.0:
            raise UndefinedAtRarefactionCenter("density profile needs t > 0")
        x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
        if np.any(np.diff(x_grid) <= 0):
            raise ValueError("x_grid must be increasing")
        shocks = chars.locate_shocks(
            self, t, (float(x_grid[0]), float(x_grid[-1])), include_wall=True
        )
        atoms = [
            AtomRecord(s.x, s.mass, s.u_shock, "boundary" if s.x == 0.0 else "interior")
            for s in shocks
        ]
        atom_x = np.array([a.x_atom for a in atoms]) if atoms else np.empty(0)
        dx = np.min(np.diff(x_grid)) if len(x_grid) > 1 else 1e-3
        samples = []
        for x in x_grid:
            if x <= 0.0:
                continue
            gap = np.min(np.abs(atom_x - x)) if atom_x.size else np.inf
            h = min(dx / 2, gap / 2, 1e-4 * (1.0 + x))
            if h <= 1e-12:
                continue  # grid point sits on an atom
            lo = max(x - h, 0.0)
            rho = (self.mass_potential(x + h, t) - self.mass_potential(lo, t)) / (x + h - lo)
            samples.append((float(x), float(rho)))
        return DensityProfile(t, samples, atoms)

    # -- one-sided limits -------------------------------------------------------

    def velocity_right_limit(self, x: float, t: float, h: float = None) -> float:
        h = h if h is not None else 1e-4 * (1.0 + abs(x))
        return _richardson(lambda s: self.velocity(x + s, t), h)

    def velocity_left_limit(self, x: float, t: float, h: float = None) -> float:
        h = h if h is not None else 1e-4 * (1.0 + abs(x))
        h = min(h, 0.5 * x)
        if h <= 0.0:
            raise NegativeArgument("left limit needs x > 0")
        return _richardson(lambda s: self.velocity(x - s, t), h)

    def mass_right_limit(self, x: float, t: float, h: float = None) -> float:
        h = h if h is not None else 1e-4 * (1.0 + abs(x))
        return _richardson(lambda s: self.mass_potential(x + s, t), h)


def _richardson(f, h: float) -> float:
    """Two-step Richardson extrapolation over offsets {h, h/2, h/4}."""
    f1, f2, f4 = f(h), f(0.5 * h), f(0.25 * h)
    r1 = 2.0 * f2 - f1
    r2 = 2.0 * f4 - f2
    return r2 + (r2 - r1) / 3.0
