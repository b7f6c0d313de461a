"""Scenario definitions: built-in cases, JSON parsing, validation."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from .errors import SchemaError
from .fields import SolutionField
from .profiles import BOUNDARY, DEFAULT_EPS_FLOOR, INITIAL, PiecewiseProfile, build_profile

DEFAULT_TOL_EQ = 1e-10
DEFAULT_QUAD_RTOL = 1e-6
DEFAULT_OUTPUTS = ("field", "atoms")


@dataclass(frozen=True)
class Scenario:
    """One fully-specified problem: data, grids, tolerances, output requests."""

    name: str
    initial: PiecewiseProfile
    boundary: PiecewiseProfile
    initial_segments: tuple
    boundary_segments: tuple
    x_grid: tuple  # (min, max, n)
    t_values: tuple
    tol_eq: float = DEFAULT_TOL_EQ
    quad_rtol: float = DEFAULT_QUAD_RTOL
    eps_floor: float = DEFAULT_EPS_FLOOR
    outputs: tuple = DEFAULT_OUTPUTS

    def field(self) -> SolutionField:
        return SolutionField(self.initial, self.boundary, tol_eq_abs=self.tol_eq)

    def with_eps_floor(self, eps: float) -> "Scenario":
        return make_scenario(
            self.name,
            self.initial_segments,
            self.boundary_segments,
            x_grid=self.x_grid,
            t_values=self.t_values,
            tol_eq=self.tol_eq,
            quad_rtol=self.quad_rtol,
            eps_floor=eps,
            outputs=self.outputs,
        )

    def with_tol_eq(self, tol: float) -> "Scenario":
        return replace(self, tol_eq=tol)


def make_scenario(
    name: str,
    initial_segments: Sequence[tuple],
    boundary_segments: Sequence[tuple],
    x_grid: tuple = (0.0, 4.0, 401),
    t_values: Sequence[float] = (0.5,),
    tol_eq: float = DEFAULT_TOL_EQ,
    quad_rtol: float = DEFAULT_QUAD_RTOL,
    eps_floor: float = DEFAULT_EPS_FLOOR,
    outputs: Sequence[str] = DEFAULT_OUTPUTS,
) -> Scenario:
    ini = build_profile(INITIAL, list(initial_segments), eps_floor)
    bd = build_profile(BOUNDARY, list(boundary_segments), eps_floor)
    return Scenario(
        name=name,
        initial=ini,
        boundary=bd,
        initial_segments=tuple(tuple(s) for s in initial_segments),
        boundary_segments=tuple(tuple(s) for s in boundary_segments),
        x_grid=(float(x_grid[0]), float(x_grid[1]), int(x_grid[2])),
        t_values=tuple(float(t) for t in t_values),
        tol_eq=float(tol_eq),
        quad_rtol=float(quad_rtol),
        eps_floor=float(eps_floor),
        outputs=tuple(outputs),
    )


def builtin_scenarios() -> list:
    """The three reference flows: fan + interior atom, wall takeoff, twin atoms."""
    return [
        make_scenario(
            "raref-delta",
            [(2.0, 1.0, 2.0), (None, 1.0, -2.0)],
            [(None, 1.0, 1.0)],
            x_grid=(0.0, 4.0, 401),
            t_values=(0.25, 0.5, 0.9, 1.5, 3.0),
        ),
        make_scenario(
            "boundary-takeoff",
            [(2.0, 1.0, -2.0), (None, 0.0, 0.0)],
            [(None, 1.0, 1.0)],
            x_grid=(0.0, 6.0, 301),
            t_values=(0.5, 2.0, 5.0, 8.0),
            eps_floor=1e-4,
        ),
        make_scenario(
            "two-deltas",
            [(2.0, 1.0, 1.0), (None, 1.0, -2.0)],
            [(1.0, 1.0, 1.0), (None, 1.0, 2.0)],
            x_grid=(0.0, 4.0, 401),
            t_values=(0.5, 1.2, 1.5, 2.0, 4.0),
        ),
    ]


def builtin_scenario(name: str) -> Scenario:
    for sc in builtin_scenarios():
        if sc.name == name:
            return sc
    raise SchemaError("scenario", f"unknown built-in scenario {name!r}")


def _require(cond: bool, path: str, msg: str):
    if not cond:
        raise SchemaError(path, msg)


def _parse_segments(raw, path: str) -> list:
    _require(isinstance(raw, list) and raw, path, "must be a nonempty list of segments")
    segs = []
    for i, seg in enumerate(raw):
        p = f"{path}[{i}]"
        _require(isinstance(seg, dict), p, "segment must be an object")
        for key in ("rho", "u"):
            _require(key in seg, f"{p}.{key}", "missing")
            _require(isinstance(seg[key], (int, float)), f"{p}.{key}", "must be a number")
        _require("end" in seg, f"{p}.end", "missing")
        end = seg["end"]
        _require(end is None or isinstance(end, (int, float)), f"{p}.end", "must be number or null")
        segs.append((end, float(seg["rho"]), float(seg["u"])))
    return segs


def scenario_from_dict(data: dict, name: str = "scenario") -> Scenario:
    _require(isinstance(data, dict), "$", "scenario must be a JSON object")
    for key in ("initial", "boundary"):
        _require(key in data, key, "missing")
    ini = _parse_segments(data["initial"], "initial")
    bd = _parse_segments(data["boundary"], "boundary")
    kwargs = {}
    if "eps_floor" in data:
        _require(isinstance(data["eps_floor"], (int, float)) and data["eps_floor"] >= 0,
                 "eps_floor", "must be a nonnegative number")
        kwargs["eps_floor"] = float(data["eps_floor"])
    if "tol_eq" in data:
        _require(isinstance(data["tol_eq"], (int, float)) and data["tol_eq"] > 0,
                 "tol_eq", "must be a positive number")
        kwargs["tol_eq"] = float(data["tol_eq"])
    if "quad_rtol" in data:
        _require(isinstance(data["quad_rtol"], (int, float)) and data["quad_rtol"] > 0,
                 "quad_rtol", "must be a positive number")
        kwargs["quad_rtol"] = float(data["quad_rtol"])
    if "t" in data:
        _require(
            isinstance(data["t"], list) and data["t"]
            and all(isinstance(v, (int, float)) for v in data["t"]),
            "t", "must be a nonempty list of numbers")
        kwargs["t_values"] = [float(v) for v in data["t"]]
    if "x" in data:
        x = data["x"]
        _require(isinstance(x, dict) and all(k in x for k in ("min", "max", "n")),
                 "x", "must be an object with min, max, n")
        _require(x["min"] >= 0 and x["max"] > x["min"] and int(x["n"]) >= 2,
                 "x", "need 0 <= min < max and n >= 2")
        kwargs["x_grid"] = (float(x["min"]), float(x["max"]), int(x["n"]))
    if "outputs" in data:
        _require(isinstance(data["outputs"], list), "outputs", "must be a list")
        kwargs["outputs"] = [str(v) for v in data["outputs"]]
    return make_scenario(str(data.get("name", name)), ini, bd, **kwargs)


def parse_scenario(path: str) -> Scenario:
    """Load and validate a scenario file (JSON)."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SchemaError("$", f"invalid JSON: {exc}") from exc
    stem = str(path).rsplit("/", 1)[-1]
    stem = stem[:-5] if stem.endswith(".json") else stem
    return scenario_from_dict(data, name=stem)
