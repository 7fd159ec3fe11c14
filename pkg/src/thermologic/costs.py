"""Work and heat accounting for physically implemented logical operations.

The physical implementation allots each input state a fraction of the
apparatus (its *partition weight* ``w``); outputs inherit the propagated
weights ``w_out = w @ matrix``.  Per-transition work and heat have the
closed form

    work  = (E_out - T_R k S_out) - (E_in - T_R k S_in) + k T_R ln(w_out / w_in)
    heat  = T_R k (S_in - S_out + ln(w_out / w_in))

and the expected cost over the joint transition distribution is minimised
by ``w = P(input)``, which attains the general lower bounds

    <W> >= <dE> - T_R dS        (work form)
    <Q> >= -T_R dS              (heat form)

with ``dS`` the full mixture entropy change (per-state entropies plus
mixing).  A mirror-descent minimiser over the weight simplex is included
purely as an independent numerical cross-check of the analytic optimum,
plus a minimax variant for worst-case rather than mean cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logic import ArityMismatchError, classify
from .thermo import Scenario

DEFAULT_SEED = 1729

__all__ = [
    "DEFAULT_SEED",
    "INFINITE_COST",
    "is_infinite",
    "CostError",
    "TransitionImpossibleError",
    "WeightVector",
    "make_weights",
    "optimal_weights",
    "TransitionCost",
    "CostReport",
    "transition_cost",
    "expected_cost",
    "glp_bounds",
    "OptimizationResult",
    "minimize_expected_work",
    "minimax_weights",
]


class CostError(ValueError):
    pass


class TransitionImpossibleError(CostError):
    """Requested a transition with zero conditional probability."""


class _InfiniteCost:
    """Tagged sentinel for unboundedly expensive outcomes.

    Kept distinct from float infinity so reports stay serialisable and
    comparisons stay explicit.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "INF"


INFINITE_COST = _InfiniteCost()


def is_infinite(value) -> bool:
    return value is INFINITE_COST


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Partition weights over input states plus the derived output weights.

    ``infinite_inputs`` lists inputs that were given zero weight while
    still occurring with positive probability; any expectation involving
    them is flagged as infinitely expensive rather than rejected.
    """

    weights: np.ndarray
    output_weights: np.ndarray
    infinite_inputs: tuple[int, ...] = ()
    weight_independent: bool = False

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        wo = np.asarray(self.output_weights, dtype=float)
        wo.setflags(write=False)
        object.__setattr__(self, "output_weights", wo)

    @property
    def flagged_infinite(self) -> bool:
        return bool(self.infinite_inputs)


def make_weights(scenario: Scenario, weights) -> WeightVector:
    """Validate raw weights against a scenario and derive output weights."""
    w = np.asarray(weights, dtype=float)
    if w.ndim != 1 or w.size != scenario.op.n_inputs:
        raise ArityMismatchError(
            f"expected {scenario.op.n_inputs} weights, got {w.size}"
        )
    if np.any(w < 0.0):
        raise CostError("weights must be non-negative")
    total = math.fsum(w.tolist())
    if abs(total - 1.0) > 1e-9:
        raise CostError(f"weights sum to {total!r}, expected 1")
    flagged = tuple(
        int(i)
        for i in np.flatnonzero((w == 0.0) & (scenario.input_dist.probs > 0.0))
    )
    return WeightVector(w, w @ scenario.op.matrix, infinite_inputs=flagged)


def optimal_weights(scenario: Scenario) -> WeightVector:
    """Cost-minimising weights: ``w = P(input)``.

    For logically reversible operations the expected cost does not depend
    on the weights at all, which is reported via ``weight_independent``.
    """
    w = scenario.input_dist.probs.copy()
    return WeightVector(
        w,
        w @ scenario.op.matrix,
        infinite_inputs=(),
        weight_independent=classify(scenario.op).reversible,
    )


@dataclass(frozen=True)
class TransitionCost:
    input_index: int
    output_index: int
    joint_probability: float
    work: object  # float or INFINITE_COST
    heat: object


@dataclass(frozen=True, eq=False)
class CostReport:
    """Per-transition costs, their expectations, and the attainable bounds.

    Entropy-like fields are in units of k_B; energies are in scenario
    energy units.  ``entropy_change`` is the full mixture change and
    decomposes as ``state_entropy_change + shannon_change_bits * ln 2``.
    Expectation fields are ``None`` in bounds-only reports and the
    infinite-cost sentinel when a zero weight covers a live input.
    """

    mean_energy_change: float
    entropy_change: float
    state_entropy_change: float
    shannon_change_bits: float
    work_bound: float
    heat_bound: float
    bath_entropy_bound: float
    nibdf_bound: float
    transitions: tuple[TransitionCost, ...] | None = None
    expected_work: object = None
    expected_heat: object = None


def _state_sums(scenario: Scenario):
    k = scenario.units.k_B
    t_ref = scenario.reference_temperature
    p_in = scenario.input_dist.probs
    p_out = scenario.output_dist.probs
    e_in = np.array([st.energy for st in scenario.input_thermo])
    e_out = np.array([st.energy for st in scenario.output_thermo])
    s_in = np.array([st.entropy for st in scenario.input_thermo])
    s_out = np.array([st.entropy for st in scenario.output_thermo])
    return k, t_ref, p_in, p_out, e_in, e_out, s_in, s_out


def _entropy_nats(probs: np.ndarray) -> float:
    return -math.fsum(p * math.log(p) for p in probs.tolist() if p > 0.0)


def _bounds(scenario: Scenario):
    k, t_ref, p_in, p_out, e_in, e_out, s_in, s_out = _state_sums(scenario)
    mean_e = math.fsum((p_out * e_out).tolist()) - math.fsum((p_in * e_in).tolist())
    state_entropy = math.fsum((p_out * s_out).tolist()) - math.fsum(
        (p_in * s_in).tolist()
    )
    h_in = _entropy_nats(p_in) / math.log(2.0)
    h_out = _entropy_nats(p_out) / math.log(2.0)
    shannon_bits = h_out - h_in
    entropy_change = state_entropy + shannon_bits * math.log(2.0)
    work_bound = mean_e - t_ref * k * entropy_change
    heat_bound = -t_ref * k * entropy_change
    return (
        mean_e,
        entropy_change,
        state_entropy,
        shannon_bits,
        work_bound,
        heat_bound,
        -entropy_change,
        -shannon_bits * math.log(2.0),
    )


def glp_bounds(scenario: Scenario) -> CostReport:
    """Bounds-only report: minimal work, heat, bath entropy and mixing cost."""
    return CostReport(*_bounds(scenario))


def transition_cost(scenario: Scenario, weights: WeightVector, input_index: int, output_index: int):
    """Work and heat along one realisable transition.

    Returns ``(work, heat)`` floats, or a sentinel pair when the input
    carries zero weight (compressing an occupied partition costs
    unbounded work).  Requesting a transition with zero conditional
    probability is an error: it never occurs.
    """
    i, j = input_index, output_index
    cond = scenario.op.matrix[i, j]
    if cond == 0.0:
        raise TransitionImpossibleError(
            f"transition {scenario.op.input_labels[i]!r} -> "
            f"{scenario.op.output_labels[j]!r} never occurs"
        )
    w_in = weights.weights[i]
    if w_in == 0.0:
        return INFINITE_COST, INFINITE_COST
    w_out = weights.output_weights[j]
    k = scenario.units.k_B
    t_ref = scenario.reference_temperature
    st_in = scenario.input_thermo[i]
    st_out = scenario.output_thermo[j]
    log_ratio = math.log(w_out / w_in)
    work = (
        (st_out.energy - t_ref * k * st_out.entropy)
        - (st_in.energy - t_ref * k * st_in.entropy)
        + k * t_ref * log_ratio
    )
    heat = t_ref * k * (st_in.entropy - st_out.entropy + log_ratio)
    return work, heat


def expected_cost(scenario: Scenario, weights: WeightVector) -> CostReport:
    """Full cost report for a scenario implemented with the given weights."""
    p_in = scenario.input_dist.probs
    matrix = scenario.op.matrix
    rows = []
    work_terms = []
    heat_terms = []
    infinite = False
    for i in range(scenario.op.n_inputs):
        for j in range(scenario.op.n_outputs):
            if matrix[i, j] == 0.0:
                continue
            joint = p_in[i] * matrix[i, j]
            work, heat = transition_cost(scenario, weights, i, j)
            rows.append(TransitionCost(i, j, joint, work, heat))
            if is_infinite(work):
                if joint > 0.0:
                    infinite = True
                continue
            work_terms.append(joint * work)
            heat_terms.append(joint * heat)
    if infinite:
        expected_work = expected_heat = INFINITE_COST
    else:
        expected_work = math.fsum(work_terms)
        expected_heat = math.fsum(heat_terms)
    return CostReport(
        *_bounds(scenario),
        transitions=tuple(rows),
        expected_work=expected_work,
        expected_heat=expected_heat,
    )


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    weights: np.ndarray
    value: float
    iterations: int
    converged: bool


def _log_cost_parts(scenario: Scenario):
    p_in = scenario.input_dist.probs
    matrix = scenario.op.matrix
    joint = p_in[:, None] * matrix
    p_out = joint.sum(axis=0)
    return joint, p_in, p_out, matrix


def _log_ratio_expectation(joint, w, w_out) -> float:
    mask = joint > 0.0
    logs = np.zeros_like(joint)
    ratio = np.divide(
        np.broadcast_to(w_out, joint.shape),
        np.broadcast_to(w[:, None], joint.shape),
        out=np.ones_like(joint),
        where=mask,
    )
    logs[mask] = np.log(ratio[mask])
    return float(np.sum(joint * logs))


def minimize_expected_work(
    scenario: Scenario,
    seed: int = DEFAULT_SEED,
    tol: float = 1e-10,
    max_iterations: int = 100_000,
    restarts: int = 4,
) -> OptimizationResult:
    """Numerically minimise the expected work over the weight simplex.

    Multiplicative (mirror-descent) updates with backtracking, run from a
    uniform start plus seeded random restarts.  This is a verification
    oracle for :func:`optimal_weights`; it never looks at the analytic
    answer.
    """
    joint, p_in, p_out, matrix = _log_cost_parts(scenario)
    n = matrix.shape[0]
    base = _base_cost(scenario)
    k_t = scenario.kT
    rng = np.random.default_rng(seed)

    def objective(w):
        return _log_ratio_expectation(joint, w, w @ matrix)

    def gradient(w):
        w_out = w @ matrix
        coeff = np.divide(p_out, w_out, out=np.zeros_like(p_out), where=p_out > 0.0)
        return matrix @ coeff - p_in / w

    starts = [np.full(n, 1.0 / n)]
    for _ in range(max(0, restarts)):
        starts.append(rng.dirichlet(np.ones(n)))

    best_w = None
    best_f = math.inf
    best_iters = 0
    converged = False
    for start in starts:
        w = np.clip(start, 1e-12, None)
        w = w / w.sum()
        f = objective(w)
        step = 0.5
        stalled = 0
        iteration = 0
        for iteration in range(1, max_iterations + 1):
            g = gradient(w)
            mean_g = float(w @ g)
            stationarity = float(np.max(np.abs(g - mean_g) * w))
            if stationarity < 1e-11:
                converged = True
                break
            trial_step = step
            for _ in range(60):
                exponent = np.clip(-trial_step * (g - mean_g), -50.0, 50.0)
                candidate = w * np.exp(exponent)
                candidate = candidate / candidate.sum()
                f_candidate = objective(candidate)
                if f_candidate <= f:
                    break
                trial_step *= 0.5
            if abs(f - f_candidate) < tol:
                stalled += 1
            else:
                stalled = 0
            w, f = candidate, f_candidate
            step = min(trial_step * 1.5, 2.0)
            if stalled >= 25:
                converged = True
                break
        if f < best_f:
            best_f, best_w, best_iters = f, w, iteration
    assert best_w is not None
    return OptimizationResult(
        weights=best_w,
        value=base + k_t * best_f,
        iterations=best_iters,
        converged=converged,
    )


def _base_cost(scenario: Scenario) -> float:
    k, t_ref, p_in, p_out, e_in, e_out, s_in, s_out = _state_sums(scenario)
    return math.fsum((p_out * (e_out - t_ref * k * s_out)).tolist()) - math.fsum(
        (p_in * (e_in - t_ref * k * s_in)).tolist()
    )


def minimax_weights(
    scenario: Scenario,
    seed: int = DEFAULT_SEED,
    max_iterations: int = 20_000,
) -> OptimizationResult:
    """Minimise the worst-case (rather than mean) transition work.

    Subgradient mirror descent on ``max`` over realisable transitions.
    No optimality is claimed beyond dominance: the returned worst case
    never exceeds the worst case at the mean-optimal weights.
    """
    joint, p_in, p_out, matrix = _log_cost_parts(scenario)
    k = scenario.units.k_B
    t_ref = scenario.reference_temperature
    k_t = k * t_ref
    realisable = np.argwhere(joint > 0.0)
    if realisable.size == 0:
        raise CostError("no realisable transitions")
    e_in = np.array([st.energy for st in scenario.input_thermo])
    e_out = np.array([st.energy for st in scenario.output_thermo])
    s_in = np.array([st.entropy for st in scenario.input_thermo])
    s_out = np.array([st.entropy for st in scenario.output_thermo])
    const = np.array(
        [
            (e_out[j] - t_ref * k * s_out[j]) - (e_in[i] - t_ref * k * s_in[i])
            for i, j in realisable
        ]
    )

    def worst(w):
        w_out = w @ matrix
        values = const + k_t * np.array(
            [math.log(w_out[j] / w[i]) for i, j in realisable]
        )
        idx = int(np.argmax(values))
        return float(values[idx]), idx

    rng = np.random.default_rng(seed)
    n = matrix.shape[0]
    starts = [np.full(n, 1.0 / n), rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))]
    best_w = starts[0]
    best_value, _ = worst(best_w)
    for w in starts:
        for iteration in range(1, max_iterations + 1):
            value, idx = worst(w)
            if value < best_value:
                best_value, best_w = value, w.copy()
            i_star, j_star = realisable[idx]
            w_out = w @ matrix
            g = k_t * (matrix[:, j_star] / w_out[j_star])
            g[i_star] -= k_t / w[i_star]
            step = 0.2 / math.sqrt(iteration)
            exponent = np.clip(-step * (g - float(w @ g)), -50.0, 50.0)
            w = w * np.exp(exponent)
            total = float(w.sum())
            if not math.isfinite(total) or total <= 0.0:
                w = np.full(n, 1.0 / n)
                continue
            w = np.clip(w / total, 1e-15, None)
            w = w / w.sum()
    return OptimizationResult(
        weights=best_w, value=best_value, iterations=max_iterations, converged=True
    )
