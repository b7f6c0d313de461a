"""Piecewise-constant initial/inflow data with exact cumulative moments.

Every potential evaluation in the solver reduces to the moments
``int_0^s rho v^j`` and ``int_0^s eta rho v^j`` of the data.  For
piecewise-constant segments these are continuous piecewise quadratics, so they
are precomputed at the breakpoints and evaluated in closed form, which is what
keeps the downstream minimization exact.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import (
    NegativeArgument,
    NegativeDensity,
    NonIncreasingBreakpoints,
    NonPositiveBoundaryVelocity,
)

INITIAL = "initial"
BOUNDARY = "boundary"
DEFAULT_EPS_FLOOR = 1e-8

_MAX_MOMENT = 3


@dataclass(frozen=True)
class PiecewiseProfile:
    """Piecewise-constant density/velocity data on [0, inf).

    Segment ``i`` covers ``[breaks[i], breaks[i+1})`` with constant
    ``density[i]`` and ``velocity[i]``; the last segment extends to +inf.
    Velocity at a breakpoint takes the right-segment value.  Instances are
    immutable after construction and safe for unrestricted concurrent reads.
    """

    kind: str
    breaks: np.ndarray
    density: np.ndarray
    velocity: np.ndarray
    eps_floor: float = DEFAULT_EPS_FLOOR

    def __post_init__(self):
        breaks = np.array(self.breaks, dtype=float)
        dens = np.array(self.density, dtype=float)
        vel = np.array(self.velocity, dtype=float)
        if breaks.ndim != 1 or breaks[0] != 0.0:
            raise NonIncreasingBreakpoints("breakpoints must start at 0")
        if np.any(np.diff(breaks) <= 0):
            raise NonIncreasingBreakpoints("breakpoints must be strictly increasing")
        if not (np.all(np.isfinite(breaks)) and np.all(np.isfinite(dens)) and np.all(np.isfinite(vel))):
            raise ValueError("profile data must be finite")
        if len(dens) != len(breaks) or len(vel) != len(breaks):
            raise ValueError("need one (density, velocity) pair per segment")
        if np.any(dens < 0):
            raise NegativeDensity(f"segment {int(np.argmax(dens < 0))}")
        if self.kind not in (INITIAL, BOUNDARY):
            raise ValueError(f"unknown profile kind {self.kind!r}")
        if self.kind == BOUNDARY and np.any(vel <= 0):
            raise NonPositiveBoundaryVelocity(f"segment {int(np.argmax(vel <= 0))}")
        dens = np.maximum(dens, self.eps_floor)

        # Prefix moments at breakpoints: pm[j][i] = int_0^{breaks[i]} rho v^j,
        # pe[j][i] = int_0^{breaks[i]} eta rho v^j.
        widths = np.diff(breaks)
        pm, pe, w = [], [], []
        for j in range(_MAX_MOMENT + 1):
            wj = dens * vel**j
            incr = wj[:-1] * widths
            eincr = wj[:-1] * (breaks[:-1] * widths + 0.5 * widths**2)
            pm.append(np.concatenate(([0.0], np.cumsum(incr))))
            pe.append(np.concatenate(([0.0], np.cumsum(eincr))))
            w.append(wj)
        for arr in (breaks, dens, vel, *pm, *pe, *w):
            arr.flags.writeable = False
        object.__setattr__(self, "breaks", breaks)
        object.__setattr__(self, "density", dens)
        object.__setattr__(self, "velocity", vel)
        object.__setattr__(self, "_pm", tuple(tuple(float(v) for v in a) for a in pm))
        object.__setattr__(self, "_pe", tuple(tuple(float(v) for v in a) for a in pe))
        object.__setattr__(self, "_w", tuple(tuple(float(v) for v in a) for a in w))
        object.__setattr__(self, "_bk", tuple(float(v) for v in breaks))
        object.__setattr__(self, "_vel", tuple(float(v) for v in vel))
        object.__setattr__(self, "_pm_np", tuple(pm))
        object.__setattr__(self, "_pe_np", tuple(pe))
        object.__setattr__(self, "_w_np", tuple(w))

    @property
    def nseg(self) -> int:
        return len(self.breaks)

    @property
    def vmin(self) -> float:
        return float(self.velocity.min())

    @property
    def vmax(self) -> float:
        return float(self.velocity.max())

    @property
    def sup_speed(self) -> float:
        return max(abs(self.vmin), abs(self.vmax))

    @property
    def max_density(self) -> float:
        return float(self.density.max())

    def segment_index(self, s: float) -> int:
        i = bisect_right(self._bk, s) - 1
        return min(max(i, 0), self.nseg - 1)

    def velocity_at(self, s: float) -> float:
        """Pointwise velocity, right-continuous at breakpoints."""
        return float(self.velocity[self.segment_index(s)])

    def density_at(self, s: float) -> float:
        return float(self.density[self.segment_index(s)])

    def moment(self, s, j: int):
        """Exact int_0^s rho(eta) v(eta)^j d eta (vectorized)."""
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, s, side="right") - 1, 0, self.nseg - 1)
        ds = s - self.breaks[idx]
        return self._pm_np[j][idx] + self._w_np[j][idx] * ds

    def eta_moment(self, s, j: int):
        """Exact int_0^s eta rho(eta) v(eta)^j d eta (vectorized)."""
        s = np.asarray(s, dtype=float)
        idx = np.clip(np.searchsorted(self.breaks, s, side="right") - 1, 0, self.nseg - 1)
        ds = s - self.breaks[idx]
        return self._pe_np[j][idx] + self._w_np[j][idx] * (self.breaks[idx] * ds + 0.5 * ds * ds)

    # Scalar fast paths; the shock refinement loops live on these.
    def moment_s(self, s: float, j: int) -> float:
        bk = self._bk
        i = bisect_right(bk, s) - 1
        if i < 0:
            i = 0
        elif i >= len(bk):
            i = len(bk) - 1
        return self._pm[j][i] + self._w[j][i] * (s - bk[i])

    def eta_moment_s(self, s: float, j: int) -> float:
        bk = self._bk
        i = bisect_right(bk, s) - 1
        if i < 0:
            i = 0
        elif i >= len(bk):
            i = len(bk) - 1
        ds = s - bk[i]
        return self._pe[j][i] + self._w[j][i] * (bk[i] * ds + 0.5 * ds * ds)


def build_profile(kind: str, segments: Sequence[tuple], eps_floor: float = DEFAULT_EPS_FLOOR) -> PiecewiseProfile:
    """Build a profile from ``[(end, density, velocity), ...]`` segments.

    ``end`` is the right endpoint of each segment; the last may be ``None`` or
    +inf.  Zero densities are floored to ``eps_floor`` so that every potential
    section stays strictly convex per segment.
    """
    if not segments:
        raise NonIncreasingBreakpoints("need at least one segment")
    ends, dens, vels = [], [], []
    prev = 0.0
    for i, (end, d, v) in enumerate(segments):
        last = i == len(segments) - 1
        if end is None or (isinstance(end, float) and math.isinf(end)):
            if not last:
                raise NonIncreasingBreakpoints(f"segment {i}: only the last segment may be unbounded")
            end = math.inf
        else:
            end = float(end)
            if end <= prev:
                raise NonIncreasingBreakpoints(f"segment {i}: end {end} <= {prev}")
        if d < 0:
            raise NegativeDensity(f"segment {i}")
        if kind == BOUNDARY and v <= 0:
            raise NonPositiveBoundaryVelocity(f"segment {i}")
        ends.append(end)
        dens.append(float(d))
        vels.append(float(v))
        prev = end if math.isfinite(end) else prev
    breaks = [0.0] + [e for e in ends[:-1]]
    return PiecewiseProfile(kind, np.array(breaks), np.array(dens), np.array(vels), eps_floor)


def profile_from_samples(
    kind: str,
    rho: Callable[[float], float],
    vel: Callable[[float], float],
    s_max: float,
    n: int = 1000,
    eps_floor: float = DEFAULT_EPS_FLOOR,
) -> PiecewiseProfile:
    """Sample arbitrary data into fine piecewise-constant segments.

    Values are taken at segment midpoints over [0, s_max]; the last value is
    extended to +inf.  This is the entry point for non-piecewise-constant data.
    """
    edges = np.linspace(0.0, s_max, n + 1)
    mids = 0.5 * (edges[:-1] + edges[1:])
    segs = [(float(edges[i + 1]), float(rho(m)), float(vel(m))) for i, m in enumerate(mids)]
    segs.append((None, segs[-1][1], segs[-1][2]))
    return build_profile(kind, segs, eps_floor)


def eval_cumulants(profile: PiecewiseProfile, s: float) -> tuple:
    """Return the cumulative integrals (M, P, A, B) at s.

    For initial data: M=int rho, P=int rho v, A=int eta rho, B=0.
    For inflow data:  M=int rho, P=int rho v^2, A=int eta rho v^2, B=int rho v.
    """
    if np.any(np.asarray(s) < 0):
        raise NegativeArgument("cumulants need s >= 0")
    if profile.kind == INITIAL:
        return (
            float(profile.moment(s, 0)),
            float(profile.moment(s, 1)),
            float(profile.eta_moment(s, 0)),
            0.0,
        )
    return (
        float(profile.moment(s, 0)),
        float(profile.moment(s, 2)),
        float(profile.eta_moment(s, 2)),
        float(profile.moment(s, 1)),
    )
