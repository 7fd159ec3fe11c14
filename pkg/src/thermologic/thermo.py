"""Thermodynamic state data attached to logical states.

Each logical state carries a mean energy, an entropy (stored in units of
the Boltzmann constant) and a preparation temperature.  A
:class:`Scenario` bundles an input distribution, an operation, the
per-state thermodynamic tables and a reference temperature; it is the
unit of work for the cost and protocol machinery.

Four standard assumption sets are provided as constructors
(:func:`make_model`) and as report-only checks (:func:`validate`):

* ``uniform``: every state has the same energy, entropy and temperature.
* ``equilibrium``: states are canonical at the reference temperature with
  ``E - T_R * S + k T_R ln P`` constant, which makes the minimal mean
  work vanish.
* ``adiabatic``: ``S - k ln P`` constant, which makes the minimal mean
  heat vanish; temperatures are unconstrained.
* ``adiabatic_equilibrium``: both at once (constant energy plus the
  adiabatic entropy condition at the reference temperature), under which
  any operation can run with neither work nor heat.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .logic import (
    DiscreteDistribution,
    LogicalOperation,
    ArityMismatchError,
    propagate,
)

EPS_MODEL = 1e-9

MODEL_KINDS = ("uniform", "equilibrium", "adiabatic", "adiabatic_equilibrium")

__all__ = [
    "EPS_MODEL",
    "MODEL_KINDS",
    "ThermoError",
    "DegenerateBathError",
    "UnitSystem",
    "NATURAL_UNITS",
    "SI_UNITS",
    "StateThermo",
    "HeatBath",
    "Scenario",
    "ModelSkeleton",
    "make_model",
    "AssumptionCheck",
    "AssumptionReport",
    "validate",
    "aggregate_baths",
]


class ThermoError(ValueError):
    pass


class DegenerateBathError(ThermoError):
    """Heat deposits cancel in a way that leaves no effective temperature."""


@dataclass(frozen=True)
class UnitSystem:
    """Physical constants; defaults are natural units k_B = hbar = m = 1."""

    k_B: float = 1.0
    hbar: float = 1.0
    mass: float = 1.0

    def __post_init__(self):
        for name in ("k_B", "hbar", "mass"):
            if getattr(self, name) <= 0.0:
                raise ThermoError(f"{name} must be strictly positive")


NATURAL_UNITS = UnitSystem()
# SI constants with the particle mass set to a hydrogen atom.
SI_UNITS = UnitSystem(k_B=1.380649e-23, hbar=1.054571817e-34, mass=1.67262192369e-27)

_ENTROPY_SLACK = 1e-12


@dataclass(frozen=True)
class StateThermo:
    """Mean energy, entropy (units of k_B) and temperature of one state."""

    energy: float
    entropy: float
    temperature: float

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ThermoError(f"temperature must be positive, got {self.temperature!r}")
        if self.entropy < -_ENTROPY_SLACK:
            raise ThermoError(f"negative entropy is unphysical: {self.entropy!r}")
        if self.entropy < 0.0:
            object.__setattr__(self, "entropy", 0.0)


@dataclass(frozen=True)
class HeatBath:
    """Ideal heat bath: fixed temperature, signed running heat total."""

    temperature: float
    accumulated_heat: float = 0.0

    def __post_init__(self):
        if self.temperature <= 0.0:
            raise ThermoError("bath temperature must be positive")

    def deposit(self, heat: float) -> "HeatBath":
        return HeatBath(self.temperature, self.accumulated_heat + heat)


@dataclass(frozen=True, eq=False)
class Scenario:
    """A logical transformation of information with full thermodynamic data."""

    input_dist: DiscreteDistribution
    op: LogicalOperation
    input_thermo: tuple[StateThermo, ...]
    output_thermo: tuple[StateThermo, ...]
    reference_temperature: float
    units: UnitSystem = NATURAL_UNITS
    baths: tuple[HeatBath, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if self.reference_temperature <= 0.0:
            raise ThermoError("reference temperature must be positive")
        if len(self.input_dist) != self.op.n_inputs:
            raise ArityMismatchError("input distribution arity does not match operation")
        object.__setattr__(self, "input_thermo", tuple(self.input_thermo))
        object.__setattr__(self, "output_thermo", tuple(self.output_thermo))
        if len(self.input_thermo) != self.op.n_inputs:
            raise ArityMismatchError("input thermo table arity does not match operation")
        if len(self.output_thermo) != self.op.n_outputs:
            raise ArityMismatchError("output thermo table arity does not match operation")
        object.__setattr__(self, "baths", tuple(self.baths))

    @cached_property
    def output_dist(self) -> DiscreteDistribution:
        return propagate(self.op, self.input_dist)

    @property
    def kT(self) -> float:
        """Reference thermal energy k_B * T_R, the natural report unit."""
        return self.units.k_B * self.reference_temperature


@dataclass(frozen=True, eq=False)
class ModelSkeleton:
    """Free data for a model constructor.

    ``energy_offset`` plays the role of the common state energy (defaults
    to ``k T_R / 2``, the square-well value).  The constants fixing the
    equilibrium and adiabatic conditions default so that the smallest
    state entropy is exactly zero.  Per-state temperatures may be given
    for the adiabatic model, which leaves them free.
    """

    input_dist: DiscreteDistribution
    op: LogicalOperation
    reference_temperature: float = 1.0
    units: UnitSystem = NATURAL_UNITS
    energy_offset: float | None = None
    entropy_offset: float = 0.0
    equilibrium_constant: float | None = None
    adiabatic_constant: float | None = None
    state_energy: float | None = None
    input_temperatures: tuple[float, ...] | None = None
    output_temperatures: tuple[float, ...] | None = None


def _require_support(probs: np.ndarray, side: str, kind: str) -> None:
    if np.any(probs <= 0.0):
        raise ThermoError(
            f"{kind} model needs strictly positive {side} probabilities "
            "(zero-probability states must be pruned first)"
        )


def make_model(kind: str, skeleton: ModelSkeleton) -> Scenario:
    """Build a scenario satisfying one of the standard assumption sets."""
    if kind not in MODEL_KINDS:
        raise ThermoError(f"unknown model kind {kind!r}; expected one of {MODEL_KINDS}")
    k = skeleton.units.k_B
    t_ref = skeleton.reference_temperature
    e_ref = skeleton.energy_offset if skeleton.energy_offset is not None else 0.5 * k * t_ref
    p_in = skeleton.input_dist.probs
    p_out = propagate(skeleton.op, skeleton.input_dist).probs

    def temps(side_temps, n):
        if side_temps is None:
            return (t_ref,) * n
        if len(side_temps) != n:
            raise ArityMismatchError("temperature table arity mismatch")
        return tuple(float(t) for t in side_temps)

    if kind == "uniform":
        s_ref = skeleton.entropy_offset
        make = lambda _p, t: StateThermo(e_ref, s_ref, t)
        t_in = temps(None, len(p_in))
        t_out = temps(None, len(p_out))
    elif kind == "equilibrium":
        # E - T_R k S + k T_R ln P constant: solve for S at fixed state energy.
        _require_support(p_in, "input", kind)
        _require_support(p_out, "output", kind)
        e_state = skeleton.state_energy if skeleton.state_energy is not None else e_ref
        p_min = min(p_in.min(), p_out.min())
        c_a = (
            skeleton.equilibrium_constant
            if skeleton.equilibrium_constant is not None
            else e_state + k * t_ref * math.log(p_min)
        )
        make = lambda p, t: StateThermo(
            e_state, (e_state - c_a) / (k * t_ref) + math.log(p), t_ref
        )
        t_in = temps(None, len(p_in))
        t_out = temps(None, len(p_out))
    elif kind == "adiabatic":
        # S - k ln P constant; temperatures and the common energy stay free.
        _require_support(p_in, "input", kind)
        _require_support(p_out, "output", kind)
        p_min = min(p_in.min(), p_out.min())
        c_b = (
            skeleton.adiabatic_constant
            if skeleton.adiabatic_constant is not None
            else -math.log(p_min)
        )
        make = lambda p, t: StateThermo(e_ref, c_b + math.log(p), t)
        t_in = temps(skeleton.input_temperatures, len(p_in))
        t_out = temps(skeleton.output_temperatures, len(p_out))
    else:  # adiabatic_equilibrium
        _require_support(p_in, "input", kind)
        _require_support(p_out, "output", kind)
        p_min = min(p_in.min(), p_out.min())
        c_c = (
            skeleton.adiabatic_constant
            if skeleton.adiabatic_constant is not None
            else -math.log(p_min)
        )
        make = lambda p, t: StateThermo(e_ref, c_c + math.log(p), t_ref)
        t_in = temps(None, len(p_in))
        t_out = temps(None, len(p_out))

    try:
        input_thermo = tuple(make(p, t) for p, t in zip(p_in, t_in))
        output_thermo = tuple(make(p, t) for p, t in zip(p_out, t_out))
    except ThermoError as exc:
        raise ThermoError(f"{kind} model produced an invalid state: {exc}") from exc

    return Scenario(
        input_dist=skeleton.input_dist,
        op=skeleton.op,
        input_thermo=input_thermo,
        output_thermo=output_thermo,
        reference_temperature=t_ref,
        units=skeleton.units,
    )


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    satisfied: bool
    residual: float


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple[AssumptionCheck, ...]

    def __getitem__(self, name: str) -> AssumptionCheck:
        for check in self.checks:
            if check.name == name:
                return check
        raise KeyError(name)

    @property
    def violations(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if not c.satisfied)

    @property
    def satisfied(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.checks if c.satisfied)


def _spread(values) -> float:
    values = list(values)
    return max(values) - min(values) if values else 0.0


def validate(scenario: Scenario, atol: float = EPS_MODEL) -> AssumptionReport:
    """Report which standard assumption sets a scenario satisfies.

    Energy residuals are scaled by k T_R and entropy residuals are in
    units of k, so one tolerance covers both.  Purely diagnostic: nothing
    is raised and nothing is modified, enabling model auto-detection.
    """
    k = scenario.units.k_B
    t_ref = scenario.reference_temperature
    kt = k * t_ref
    p_in = scenario.input_dist.probs
    p_out = scenario.output_dist.probs
    thermo_in = scenario.input_thermo
    thermo_out = scenario.output_thermo
    every = list(thermo_in) + list(thermo_out)

    def mixture_log(probs, thermo, combine):
        # Sum of P * combine(state, ln P) over supported states.
        return math.fsum(
            p * combine(st, math.log(p)) for p, st in zip(probs, thermo) if p > 0.0
        )

    checks: list[AssumptionCheck] = []

    def add(name: str, residual: float):
        checks.append(AssumptionCheck(name, residual <= atol, residual))

    add("isothermal", _spread([st.temperature for st in every] + [t_ref]) / t_ref)
    add(
        "uniform_states",
        max(
            _spread(st.energy for st in every) / kt,
            _spread(st.entropy for st in every),
        ),
    )
    mean_e_in = math.fsum(p * st.energy for p, st in zip(p_in, thermo_in))
    mean_e_out = math.fsum(p * st.energy for p, st in zip(p_out, thermo_out))
    mean_s_in = math.fsum(p * st.entropy for p, st in zip(p_in, thermo_in))
    mean_s_out = math.fsum(p * st.entropy for p, st in zip(p_out, thermo_out))
    add(
        "uniform_computing",
        max(abs(mean_e_out - mean_e_in) / kt, abs(mean_s_out - mean_s_in)),
    )

    supported = all(p > 0.0 for p in p_in) and all(p > 0.0 for p in p_out)
    if supported:
        equilibrium_values = [
            (st.energy - kt * st.entropy + kt * math.log(p)) / kt
            for p, st in list(zip(p_in, thermo_in)) + list(zip(p_out, thermo_out))
        ]
        add("equilibrium", _spread(equilibrium_values))
        adiabatic_values = [
            st.entropy - math.log(p)
            for p, st in list(zip(p_in, thermo_in)) + list(zip(p_out, thermo_out))
        ]
        add("adiabatic", _spread(adiabatic_values))
        add(
            "adiabatic_equilibrium",
            max(_spread(st.energy for st in every) / kt, _spread(adiabatic_values)),
        )
    else:
        checks.append(AssumptionCheck("equilibrium", False, math.inf))
        checks.append(AssumptionCheck("adiabatic", False, math.inf))
        checks.append(AssumptionCheck("adiabatic_equilibrium", False, math.inf))

    free_in = mixture_log(p_in, thermo_in, lambda st, lnp: st.energy / kt - st.entropy + lnp)
    free_out = mixture_log(p_out, thermo_out, lambda st, lnp: st.energy / kt - st.entropy + lnp)
    add("zero_mean_work", abs(free_out - free_in))
    ent_in = mixture_log(p_in, thermo_in, lambda st, lnp: st.entropy - lnp)
    ent_out = mixture_log(p_out, thermo_out, lambda st, lnp: st.entropy - lnp)
    add("zero_mean_heat", abs(ent_out - ent_in))

    order = (
        "isothermal",
        "uniform_states",
        "uniform_computing",
        "equilibrium",
        "zero_mean_work",
        "zero_mean_heat",
        "adiabatic",
        "adiabatic_equilibrium",
    )
    by_name = {c.name: c for c in checks}
    return AssumptionReport(tuple(by_name[name] for name in order))


def aggregate_baths(deposits) -> tuple[float, float]:
    """Collapse several (heat, temperature) deposits into one.

    Returns the total heat and the effective temperature
    ``Q_total / sum(Q_i / T_i)``.  The pair can stand in for the single
    reference bath wherever mean heat and reference temperature appear.
    """
    pairs = [(float(q), float(t)) for q, t in deposits]
    if not pairs:
        raise ThermoError("no deposits given")
    for _, t in pairs:
        if t <= 0.0:
            raise ThermoError("bath temperatures must be positive")
    if len(pairs) == 1:
        return pairs[0]
    q_total = math.fsum(q for q, _ in pairs)
    denom = math.fsum(q / t for q, t in pairs)
    if denom == 0.0:
        raise DegenerateBathError("undefined effective temperature: deposits cancel")
    return q_total, q_total / denom
