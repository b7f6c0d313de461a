"""Measure-valued solver for 1D pressureless gas flow on the half line.

Constructs the solution of the initial-boundary value problem from variational
potentials of the data: velocity, mass/momentum/energy potentials, the density
measure including its Dirac atoms, generalized characteristics, shock paths,
and a validation suite (conservation, entropy, boundary assumption, weak-form
residuals).
"""

from .characteristics import (
    InterfaceInterval,
    ShockPoint,
    boundary_absorption_time,
    characteristic_speed,
    forward_characteristic_X,
    forward_characteristic_Y,
    locate_interface_interval,
    locate_shocks,
    merge_event,
    trace_shock_path,
)
from .diagnostics import (
    BalanceReport,
    BumpSpec,
    EntropyReport,
    boundary_trace,
    entropy_report,
    initial_trace,
    mass_balance,
    momentum_balance,
    mu_identity_space,
    mu_identity_time,
    second_potential_H,
    weak_residual,
)
from .fields import AtomRecord, DensityProfile, SolutionField, SolutionSample
from .oracle import (
    ParticleSystem,
    brute_force_minimize,
    compare_mass_potential,
    sticky_particle_simulate,
)
from .potentials import MinimizerResult, Potentials, Regime, RegimeTag
from .profiles import PiecewiseProfile, build_profile, eval_cumulants, profile_from_samples
from .scenarios import Scenario, builtin_scenario, builtin_scenarios, make_scenario, parse_scenario

__version__ = "0.1.0"

__all__ = [
    "AtomRecord",
    "BalanceReport",
    "BumpSpec",
    "DensityProfile",
    "EntropyReport",
    "InterfaceInterval",
    "MinimizerResult",
    "ParticleSystem",
    "PiecewiseProfile",
    "Potentials",
    "Regime",
    "RegimeTag",
    "Scenario",
    "ShockPoint",
    "SolutionField",
    "SolutionSample",
    "boundary_absorption_time",
    "boundary_trace",
    "brute_force_minimize",
    "build_profile",
    "builtin_scenario",
    "builtin_scenarios",
    "characteristic_speed",
    "compare_mass_potential",
    "entropy_report",
    "eval_cumulants",
    "forward_characteristic_X",
    "forward_characteristic_Y",
    "initial_trace",
    "locate_interface_interval",
    "locate_shocks",
    "make_scenario",
    "mass_balance",
    "merge_event",
    "momentum_balance",
    "mu_identity_space",
    "mu_identity_time",
    "parse_scenario",
    "profile_from_samples",
    "second_potential_H",
    "sticky_particle_simulate",
    "trace_shock_path",
    "weak_residual",
]
