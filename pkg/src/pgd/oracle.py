"""Independent ground truth: brute-force minimization and sticky particles.

Both routes avoid the exact solver's machinery on purpose.  The grid/golden
minimizer only evaluates the raw potential sections; the particle system is a
discrete momentum-conserving surrogate whose empirical mass potential must
converge to the solver's.  The one deliberate coupling is the wall-release
rule, which is keyed to the solver's regime switch at x=0: the particle system
is a consistency oracle for the construction, not an alternative theory.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import EventQueueOverflow, NegativeArgument
from .fields import SolutionField
from .potentials import MinimizerResult, Potentials, RegimeTag

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_min(fn, a: float, b: float, iters: int = 90) -> tuple:
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(iters):
        if b - a <= 1e-14 * (1.0 + abs(b)):
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _GOLD * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLD * (b - a)
            fd = fn(d)
    xm = 0.5 * (a + b)
    return xm, fn(xm)


def brute_force_minimize(
    pots: Potentials, which: str, x: float, t: float, n: int = 100_000
) -> MinimizerResult:
    """Grid scan plus golden-section refinement of the extreme basins."""
    if n < 1000:
        raise NegativeArgument("need n >= 1000")
    if which == "initial":
        hi = x + t * max(0.0, -pots.initial.vmin) + 1e-9
        fn = lambda y: float(pots.initial_potential(y, x, t))
    elif which == "boundary":
        hi = t
        fn = lambda tau: float(pots.boundary_potential(tau, x, t))
    else:
        raise ValueError("which must be 'initial' or 'boundary'")
    if hi <= 0.0:
        return MinimizerResult(0.0, 0.0, 0.0)
    grid = np.linspace(0.0, hi, n + 1)
    if which == "initial":
        vals = pots.initial_potential(grid, x, t)
    else:
        vals = pots.boundary_potential(grid, x, t)
    k = int(np.argmin(vals))
    vmin = float(vals[k])
    near = np.flatnonzero(vals <= vmin + 1e-9 * (1.0 + abs(vmin)) + 1e-12)
    i_lo, i_hi = int(near[0]), int(near[-1])
    x_lo, v_lo = _golden_min(fn, grid[max(i_lo - 1, 0)], grid[min(i_lo + 1, n)])
    x_hi, v_hi = _golden_min(fn, grid[max(i_hi - 1, 0)], grid[min(i_hi + 1, n)])
    value = min(vmin, v_lo, v_hi, 0.0)
    if x_lo > x_hi:
        x_lo, x_hi = x_hi, x_lo
    # zero is always admissible with value 0
    if value >= -1e-15:
        x_lo = 0.0 if fn(0.0) <= value + 1e-12 else x_lo
    return MinimizerResult(value, x_lo, x_hi)


@dataclass
class ParticleSystem:
    """Snapshot of the sticky-particle surrogate (positions sorted)."""

    positions: np.ndarray
    masses: np.ndarray
    momenta: np.ndarray
    wall_mass: float
    wall_momentum: float
    time: float

    @property
    def velocities(self) -> np.ndarray:
        return self.momenta / self.masses

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum() + self.wall_mass)


class _Sim:
    """Event-driven perfectly inelastic dynamics on the half line."""

    def __init__(self, field: SolutionField, n_particles: int, t_end: float, inject_dt: float, x_cut: float):
        self.field = field
        self.t_end = t_end
        self.inject_dt = inject_dt
        p0 = field.initial
        total = p0.moment_s(x_cut, 0)
        dm = total / n_particles
        targets = (np.arange(n_particles) + 0.5) * dm
        pos = _mass_quantiles(p0, targets)
        cap = n_particles + 2 * int(math.ceil(t_end / inject_dt)) + 8
        self.x = np.zeros(cap)
        self.m = np.zeros(cap)
        self.p = np.zeros(cap)
        self.tref = np.zeros(cap)  # time of each particle's current state
        self.alive = np.zeros(cap, dtype=bool)
        self.left = np.full(cap, -1, dtype=np.int64)
        self.right = np.full(cap, -1, dtype=np.int64)
        self.version = np.zeros(cap, dtype=np.int64)
        self.n_used = n_particles
        self.x[:n_particles] = pos
        self.m[:n_particles] = dm
        self.p[:n_particles] = dm * np.array([p0.velocity_at(s) for s in pos])
        self.alive[:n_particles] = True
        self.left[:n_particles] = np.arange(n_particles) - 1
        self.right[:n_particles] = np.arange(n_particles) + 1
        self.right[n_particles - 1] = -1
        self.head = 0 if n_particles else -1
        self.wall_mass = 0.0
        self.wall_momentum = 0.0
        self.time = 0.0
        self.heap = []
        self.budget = 400 * n_particles + 400 * int(t_end / inject_dt + 1) + 10_000
        self.wall_holding = self._influx_regime(max(inject_dt, 1e-9))

    def _influx_regime(self, t: float) -> bool:
        return self.field.potentials.classify(0.0, t).tag is RegimeTag.INITIAL_DOMINATED

    def _pos_at(self, i: int, t: float) -> float:
        return self.x[i] + (self.p[i] / self.m[i]) * (t - self.tref[i])

    def _schedule(self, i: int):
        """Push the next collision/wall event for particle i against its right side."""
        if not self.alive[i]:
            return
        vi = self.p[i] / self.m[i]
        j = self.right[i]
        if j >= 0:
            vj = self.p[j] / self.m[j]
            xi = self._pos_at(i, self.time)
            xj = self._pos_at(j, self.time)
            if vi > vj + 1e-15:
                tc = self.time + (xj - xi) / (vi - vj)
                heapq.heappush(self.heap, (tc, 0, i, j, self.version[i], self.version[j]))
        if vi < 0.0:
            tw = self.time + self._pos_at(i, self.time) / (-vi)
            heapq.heappush(self.heap, (tw, 1, i, -1, self.version[i], -1))

    def _advance_all(self, t: float):
        idx = self.alive
        self.x[idx] += (self.p[idx] / self.m[idx]) * (t - self.tref[idx])
        self.tref[idx] = t
        self.time = t

    def _merge(self, i: int, j: int):
        """Absorb j into i (neighbors, equal positions at self.time)."""
        self.m[i] += self.m[j]
        self.p[i] += self.p[j]
        self.alive[j] = False
        self.version[j] += 1
        rj = self.right[j]
        self.right[i] = rj
        if rj >= 0:
            self.left[rj] = i
        self.version[i] += 1
        self._schedule(i)
        li = self.left[i]
        if li >= 0:
            self.version[li] += 1
            self._schedule(li)

    def _hit_wall(self, i: int):
        self.wall_mass += self.m[i]
        self.wall_momentum += self.p[i]
        self.alive[i] = False
        self.version[i] += 1
        li, ri = self.left[i], self.right[i]
        if li >= 0:
            self.right[li] = ri
        else:
            self.head = ri
        if ri >= 0:
            self.left[ri] = li
        if li >= 0:
            self.version[li] += 1
            self._schedule(li)
        self.wall_holding = True

    def _insert_leftmost(self, mass: float, momentum: float, x0: float):
        k = self.n_used
        if k >= len(self.x):
            raise EventQueueOverflow("particle capacity exceeded")
        if self.head >= 0 and self.x[self.head] < x0:
            x0 = 0.5 * self.x[self.head]
        self.n_used += 1
        self.x[k] = x0
        self.m[k] = mass
        self.p[k] = momentum
        self.tref[k] = self.time
        self.alive[k] = True
        self.left[k] = -1
        self.right[k] = self.head
        if self.head >= 0:
            self.left[self.head] = k
        self.head = k
        self._schedule(k)
        return k

    def _inject(self, t0: float, t1: float):
        pb = self.field.boundary
        dm = pb.moment_s(t1, 1) - pb.moment_s(t0, 1)
        dp = pb.moment_s(t1, 2) - pb.moment_s(t0, 2)
        if dm <= 0.0:
            return
        if self.wall_holding and self._influx_regime(t1):
            self.wall_mass += dm
            self.wall_momentum += dp
            return
        self._insert_leftmost(dm, dp, 1e-12)

    def _maybe_release_wall(self, t: float):
        if self.wall_mass <= 0.0:
            return
        if self._influx_regime(t):
            return
        v = self.wall_momentum / self.wall_mass
        if v <= 0.0:
            return
        self._insert_leftmost(self.wall_mass, self.wall_momentum, 0.0)
        self.wall_mass = 0.0
        self.wall_momentum = 0.0
        self.wall_holding = False

    def run(self, snapshot_times) -> list:
        for i in range(self.n_used):
            self._schedule(i)
        snaps = set(float(s) for s in snapshot_times if 0.0 < s <= self.t_end)
        snaps.add(self.t_end)
        n_inj = int(math.floor(self.t_end / self.inject_dt + 1e-9))
        injections = set(self.inject_dt * (k + 1) for k in range(n_inj))
        agenda = sorted(snaps | injections)
        out = []
        pops = 0
        last_inject = 0.0
        for t_stop in agenda:
            while self.heap and self.heap[0][0] <= t_stop + 1e-15:
                tc, kind, i, j, vi, vj = heapq.heappop(self.heap)
                pops += 1
                if pops > self.budget:
                    raise EventQueueOverflow(f"more than {self.budget} events")
                if not self.alive[i] or self.version[i] != vi:
                    continue
                if kind == 0 and (
                    j < 0 or not self.alive[j] or self.version[j] != vj or self.right[i] != j
                ):
                    continue
                self._advance_all(max(tc, self.time))
                if kind == 0:
                    self.x[j] = self.x[i]
                    self._merge(i, j)
                else:
                    if self.x[i] > 1e-9:
                        self._schedule(i)
                        continue
                    self.x[i] = 0.0
                    self._hit_wall(i)
            self._advance_all(t_stop)
            if t_stop in injections:
                self._inject(last_inject, t_stop)
                last_inject = t_stop
                self._maybe_release_wall(t_stop)
            if t_stop in snaps:
                out.append(self.snapshot())
        return out

    def snapshot(self) -> ParticleSystem:
        idx = np.flatnonzero(self.alive)
        order = np.argsort(self.x[idx], kind="stable")
        idx = idx[order]
        return ParticleSystem(
            positions=self.x[idx].copy(),
            masses=self.m[idx].copy(),
            momenta=self.p[idx].copy(),
            wall_mass=self.wall_mass,
            wall_momentum=self.wall_momentum,
            time=self.time,
        )


def _mass_quantiles(profile, targets: np.ndarray) -> np.ndarray:
    """Invert the cumulative mass at the given mass levels."""
    pm = np.array(profile._pm[0])
    out = np.empty_like(targets)
    for k, tgt in enumerate(targets):
        i = int(np.searchsorted(pm, tgt, side="right") - 1)
        i = min(max(i, 0), profile.nseg - 1)
        out[k] = profile.breaks[i] + (tgt - pm[i]) / profile.density[i]
    return out


def sticky_particle_simulate(
    field: SolutionField,
    n_particles: int,
    t_end: float,
    inject_dt: float,
    x_cut: float = None,
    snapshot_times=(),
) -> list:
    """Run the particle surrogate; returns snapshots (always ending at t_end)."""
    if n_particles < 10:
        raise NegativeArgument("need n_particles >= 10")
    if inject_dt <= 0.0 or t_end <= 0.0:
        raise NegativeArgument("need positive t_end and inject_dt")
    if x_cut is None:
        x_cut = field.reach(t_end) + 1.0
    sim = _Sim(field, n_particles, t_end, inject_dt, x_cut)
    return sim.run(snapshot_times)


def compare_mass_potential(system: ParticleSystem, field: SolutionField, x_grid) -> float:
    """Sup-norm gap between the empirical and exact mass potentials."""
    x_grid = np.atleast_1d(np.asarray(x_grid, dtype=float))
    base = -field.boundary.moment_s(system.time, 1) + system.wall_mass
    cum = np.concatenate(([0.0], np.cumsum(system.masses)))
    idx = np.searchsorted(system.positions, x_grid, side="right")
    m_hat = base + cum[idx]
    m_exact = field.mass_potential_grid(x_grid, system.time)
    return float(np.max(np.abs(m_hat - m_exact)))
