r"""Constrained-minimization engines over channel polytopes.

Three solvers compute ``min E[loss] subject to leakage(prior, channel) <= R``:

* :func:`grid_oracle` -- exhaustive enumeration of channels whose rows lie
  on a quantized simplex grid.  Slow but assumption-free; every other
  solver is validated against it.
* :func:`lagrangian_sweep` / :func:`solve_shannon_budget` -- alternating
  minimization of ``E[loss] + lambda * I(X;A)`` (closed-form updates exist
  only for Shannon information), swept or bisected over lambda.
* :func:`projected_descent` -- penalty method with numeric gradients and
  per-row simplex projection, for measures that are convex in the channel.

Every solver returns a :class:`SolveReport` carrying the channel, the
achieved objective and leakage, and a declared optimality-gap bound
(``slack``) so downstream inequality checks can budget their tolerances
explicitly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from ._kernels.fallback import _objective_batch
from .core import (
    SUPPORT_EPSILON,
    Alphabet,
    Channel,
    FiniteDistribution,
    JointModel,
    simplex_grid_array,
    simplex_grid_size,
)
from .decisions import LossSpec, prior_bayes_risk
from .errors import GridCapError, SolverError, ValidationError
from .measures import (
    GENERATORS,
    LeakageMeasure,
    _csiszar_value,
    _f_information_value,
    _f_leakage_value,
    _shannon_value,
    _sibson_value,
    evaluate_leakage,
    get_generator,
    upper_bound_K,
)

CHANNEL_CAP = 10**8
FEASIBILITY_TOL = 1e-9

# measure kinds that are convex in the channel for a fixed prior, and hence
# eligible for projected descent (alpha-parameterized kinds only up to 1)
_CONVEX_ANY = frozenset({"shannon_mi", "f_information", "f_leakage"})
_CONVEX_UP_TO_ONE = frozenset(
    {"sibson_mi", "csiszar_mi", "maximal_alpha_leakage", "arimoto_mi", "alpha_leakage"}
)


def measure_is_convex(measure: LeakageMeasure) -> bool:
    if measure.kind in _CONVEX_ANY:
        return True
    if measure.kind in _CONVEX_UP_TO_ONE:
        return measure.order is not None and measure.order <= 1.0
    return False


@dataclass(frozen=True)
class SolveReport:
    """Outcome of one constrained channel optimization."""

    channel: Channel
    objective: float
    leakage_at_solution: float
    method: str  # 'grid' | 'lagrangian_ba' | 'projected_descent'
    feasible: bool
    budget: float
    iterations: int = 0
    resolution: Optional[int] = None
    slack: float = 0.0  # declared bound on objective suboptimality
    n_feasible: int = 0
    flags: tuple = ()

    def __post_init__(self):
        if self.feasible and not (
            self.leakage_at_solution <= self.budget + 1e-6
        ):
            raise SolverError(
                f"feasible report violates its own budget: "
                f"{self.leakage_at_solution} > {self.budget} + 1e-6"
            )


def default_resolution(n_inputs: int, n_outputs: int) -> int:
    """Grid resolution keeping the enumeration at desk scale.

    Pinned to 50 for 2x2, 20 for 2x3 and 8 for 3x3 problems; other shapes
    get the largest resolution whose channel count stays below 200k.
    """
    pinned = {(2, 2): 50, (2, 3): 20, (3, 3): 8}
    if (n_inputs, n_outputs) in pinned:
        return pinned[(n_inputs, n_outputs)]
    res = 1
    for candidate in range(2, 200):
        if simplex_grid_size(n_outputs, candidate) ** n_inputs > 200_000:
            break
        res = candidate
    return res


def max_resolution_for_cap(n_inputs: int, n_outputs: int, cap: int = CHANNEL_CAP) -> int:
    res = 0
    for candidate in range(1, 10_000):
        if simplex_grid_size(n_outputs, candidate) ** n_inputs > cap:
            break
        res = candidate
    return res


# ---------------------------------------------------------------------------
# Scan driver
# ---------------------------------------------------------------------------


def _support_restrict(prior: FiniteDistribution):
    """Drop zero-probability inputs; scans operate on the support only."""
    keep = prior.probs > SUPPORT_EPSILON
    if np.all(keep):
        return prior, None
    labels = tuple(l for l, k in zip(prior.alphabet.labels, keep) if k)
    values = (
        tuple(v for v, k in zip(prior.alphabet.values, keep) if k)
        if prior.alphabet.values is not None
        else None
    )
    reduced = FiniteDistribution(
        Alphabet(labels, values), prior.probs[keep] / prior.probs[keep].sum()
    )
    return reduced, keep


def _scan_measure_codes(measure: LeakageMeasure, x_alphabet: Alphabet):
    """Map a measure to kernel codes; None when only the slow path applies."""
    kind, order = measure.kind, measure.order
    none = (None, 0.0, 0, np.zeros(0))
    dummy = np.zeros(0)
    if kind == "shannon_mi":
        return (K.M_SHANNON, 0.0, 0, dummy)
    if kind in ("arimoto_mi", "alpha_leakage"):
        if order == 1.0:
            return (K.M_SHANNON, 0.0, 0, dummy)
        if math.isinf(order):
            return (K.M_ARIMOTO_INF, 0.0, 0, dummy)
        return (K.M_ARIMOTO, order, 0, dummy)
    if kind == "sibson_mi":
        if order == 1.0:
            return (K.M_SHANNON, 0.0, 0, dummy)
        if math.isinf(order):
            return (K.M_SIBSON_INF, 0.0, 0, dummy)
        return (K.M_SIBSON, order, 0, dummy)
    if kind == "maximal_leakage":
        return (K.M_SIBSON_INF, 0.0, 0, dummy)
    if kind == "f_information":
        gen_code = {"kl": K.GEN_KL, "total_variation": K.GEN_TV,
                    "chi_squared": K.GEN_CHI2, "hellinger": K.GEN_HELLINGER}[measure.generator]
        return (K.M_F_INFO, 0.0, gen_code, dummy)
    if kind == "f_leakage":
        if measure.generator == "kl":
            return (K.M_SHANNON, 0.0, 0, dummy)
        if measure.generator == "chi_squared":
            return (K.M_F_LEAK_CHI2, 0.0, 0, dummy)
        if measure.generator == "hellinger":
            return (K.M_F_LEAK_HELLINGER, 0.0, 0, dummy)
        return none  # total variation needs the LP
    if kind == "mmse_leakage":
        return (K.M_MMSE, 0.0, 0, x_alphabet.numeric)
    if kind == "maximal_cost_leakage":
        return (K.M_MAXCOST, 0.0, 0, dummy)
    return none


def leakage_fn_for_scan(measure: LeakageMeasure, prior: FiniteDistribution) -> Callable:
    """Array-level leakage evaluator used by the slow scan path and by
    projected descent's numeric gradients.

    Order-1 members of the alpha families coincide with Shannon
    information exactly and are routed there; the identities themselves
    are exercised by the test suites through the honest evaluators.
    """
    p = prior.probs
    kind = measure.kind
    if measure.order == 1.0 and kind in (
        "arimoto_mi", "alpha_leakage", "sibson_mi", "csiszar_mi", "maximal_alpha_leakage"
    ):
        return lambda w: _shannon_value(p, w)
    if kind == "shannon_mi":
        return lambda w: _shannon_value(p, w)
    if kind == "sibson_mi":
        return lambda w: _sibson_value(p, w, measure.order)
    if kind == "maximal_leakage":
        return lambda w: _sibson_value(p, w, math.inf)
    if kind == "f_information":
        gen = get_generator(measure.generator)
        return lambda w: _f_information_value(p, w, gen)
    if kind == "f_leakage":
        return lambda w: _f_leakage_value(p, w, measure.generator)
    if kind == "csiszar_mi":
        return lambda w: _csiszar_value(p, w, measure.order)

    def general(w):
        out = Alphabet.of_size(w.shape[1], prefix="a")
        model = JointModel(prior, Channel(prior.alphabet, out, w))
        return evaluate_leakage(measure, model).value

    return general


@dataclass(frozen=True)
class ScanObjective:
    """What the scan minimizes per candidate channel.

    ``expected_loss`` treats the channel output as the action ("design an
    action channel"); ``posterior_risk`` treats it as an observation and
    scores the Bayes-optimal decision against each output.
    """

    code: int
    matrix: np.ndarray
    alpha: float = 0.0

    @staticmethod
    def expected_loss(loss: LossSpec) -> "ScanObjective":
        if loss.matrix is None:
            raise ValidationError(
                "direct action-channel objectives need a matrix loss"
            )
        return ScanObjective(code=K.O_EXPECTED, matrix=np.asarray(loss.matrix))

    @staticmethod
    def posterior_risk(loss: LossSpec) -> "ScanObjective":
        if loss.kind in ("classical_matrix", "squared"):
            return ScanObjective(code=K.O_POSTRISK, matrix=np.asarray(loss.matrix))
        if loss.kind == "alpha_loss":
            return ScanObjective(
                code=K.O_POSTRISK_ALPHA, matrix=np.zeros((0, 0)), alpha=loss.order
            )
        raise ValidationError(f"unsupported loss kind for scans: {loss.kind!r}")


@dataclass(frozen=True)
class ScanOutcome:
    best_index: int
    objective: float
    leakage: float
    n_feasible: int
    minleak_index: int
    minleak_value: float
    minleak_objective: float
    total: int


def _channel_rows_from_index(grid_rows: np.ndarray, flat: int, n_inputs: int) -> np.ndarray:
    g = grid_rows.shape[0]
    digits = []
    rem = flat
    for _ in range(n_inputs):
        digits.append(rem % g)
        rem //= g
    digits.reverse()
    return grid_rows[np.array(digits, dtype=np.int64)]


def scan_channel_grid(
    prior: FiniteDistribution,
    n_outputs: int,
    resolution: int,
    objective: ScanObjective,
    measure: LeakageMeasure,
    budget: float,
    feas_tol: float = FEASIBILITY_TOL,
    cap: int = CHANNEL_CAP,
    eve: Optional[tuple] = None,
) -> ScanOutcome:
    """Enumerate channels with grid rows, minimizing the objective under the
    leakage budget.

    ``eve=(matrix, prior_risk, maximal)`` replaces the leakage measure with
    an adversary's average or maximal gain under a matrix loss.
    """
    reduced, _ = _support_restrict(prior)
    nx = len(reduced)
    count = simplex_grid_size(n_outputs, resolution) ** nx
    if count > cap:
        best = max_resolution_for_cap(nx, n_outputs, cap)
        raise GridCapError(
            f"{count} channels exceed the cap {cap}; resolution {resolution} is "
            f"too fine for a {nx}x{n_outputs} scan (largest workable: {best})",
            required_cap=count,
        )
    grid_rows = simplex_grid_array(n_outputs, resolution)
    dummy_m = np.zeros((0, 0))

    if eve is not None:
        eve_matrix, eve_prior_risk, eve_maximal = eve
        code = K.M_GAIN_MAX if eve_maximal else K.M_GAIN_AVG
        out = K.scan_channels(
            grid_rows, nx, reduced.probs,
            objective.code, np.ascontiguousarray(objective.matrix, dtype=float)
            if objective.matrix.size else dummy_m, objective.alpha,
            code, 0.0, 0, np.zeros(0), np.ascontiguousarray(eve_matrix, dtype=float),
            eve_prior_risk, budget, feas_tol,
        )
        return ScanOutcome(*out)

    m_code, m_alpha, gen_code, x_values = _scan_measure_codes(measure, reduced.alphabet)
    if m_code is not None:
        out = K.scan_channels(
            grid_rows, nx, reduced.probs,
            objective.code, np.ascontiguousarray(objective.matrix, dtype=float)
            if objective.matrix.size else dummy_m, objective.alpha,
            m_code, m_alpha, gen_code, np.ascontiguousarray(x_values, dtype=float),
            dummy_m, 0.0, budget, feas_tol,
        )
        return ScanOutcome(*out)

    # slow path: python leakage per candidate, vectorized objective
    leak_fn = leakage_fn_for_scan(measure, reduced)
    best_idx, best_obj, best_leak = -1, math.inf, math.inf
    minleak_idx, minleak_val, minleak_obj = -1, math.inf, math.inf
    n_feasible = 0
    for flat, rows_idx in enumerate(itertools.product(range(grid_rows.shape[0]), repeat=nx)):
        w = grid_rows[np.array(rows_idx, dtype=np.int64)]
        leak = leak_fn(w)
        joint = reduced.probs[:, None] * w
        obj = float(
            _objective_batch(
                joint[None], joint.sum(axis=0)[None], objective.code,
                objective.matrix, objective.alpha,
            )[0]
        )
        if leak <= budget + feas_tol:
            n_feasible += 1
            if obj < best_obj:
                best_idx, best_obj, best_leak = flat, obj, leak
        if leak < minleak_val:
            minleak_idx, minleak_val, minleak_obj = flat, leak, obj
    return ScanOutcome(best_idx, best_obj, best_leak, n_feasible,
                       minleak_idx, minleak_val, minleak_obj, count)


def _scan_to_report(
    outcome: ScanOutcome,
    prior: FiniteDistribution,
    out_alphabet: Alphabet,
    resolution: int,
    budget: float,
    loss_max: float,
) -> SolveReport:
    reduced, keep = _support_restrict(prior)
    grid_rows = simplex_grid_array(len(out_alphabet), resolution)
    infeasible = outcome.best_index < 0
    flat = outcome.minleak_index if infeasible else outcome.best_index
    rows = _channel_rows_from_index(grid_rows, flat, len(reduced))
    if keep is not None:
        # re-inflate to the full alphabet; dropped inputs get uniform rows
        full = np.full((len(prior), len(out_alphabet)), 1.0 / len(out_alphabet))
        full[keep] = rows
        rows = full
    slack = loss_max * len(out_alphabet) / resolution if math.isfinite(loss_max) else math.inf
    return SolveReport(
        channel=Channel(prior.alphabet, out_alphabet, rows),
        objective=outcome.minleak_objective if infeasible else outcome.objective,
        leakage_at_solution=outcome.minleak_value if infeasible else outcome.leakage,
        method="grid",
        feasible=not infeasible,
        budget=budget,
        iterations=outcome.total,
        resolution=resolution,
        slack=slack,
        n_feasible=outcome.n_feasible,
        flags=("infeasible_everywhere",) if infeasible else (),
    )


def grid_oracle(
    loss: LossSpec,
    prior: FiniteDistribution,
    measure: LeakageMeasure,
    budget: float,
    resolution: Optional[int] = None,
    cap: int = CHANNEL_CAP,
) -> SolveReport:
    """Exhaustively minimize expected loss over action channels on the grid.

    The declared ``slack`` is ``max_loss * |A| / resolution``, the
    calibration under which the binary Hamming closed form is reproduced.
    Infeasible-everywhere scans return the minimum-leakage channel flagged
    ``infeasible_everywhere``.
    """
    reduced, _ = _support_restrict(prior)
    n_a = loss.n_actions
    if resolution is None:
        resolution = default_resolution(len(reduced), n_a)
    objective = ScanObjective.expected_loss(loss)
    outcome = scan_channel_grid(
        prior, n_a, resolution, objective, measure, budget, cap=cap
    )
    return _scan_to_report(
        outcome, prior, loss.action_alphabet, resolution, budget,
        loss.max_loss(len(prior)),
    )


# ---------------------------------------------------------------------------
# Lagrangian alternating minimization (Shannon information only)
# ---------------------------------------------------------------------------


def _ba_solve(matrix, prior, lam, start=None, tol=1e-12, max_iterations=20_000):
    """Minimize E[loss] + lam * I(X;A) by alternating closed-form updates."""
    nx, na = matrix.shape
    w = np.full((nx, na), 1.0 / na) if start is None else start.copy()
    scaled = -matrix / lam
    objective_prev = math.inf
    expected = mi = 0.0
    iterations = 0
    converged = False
    for iterations in range(1, max_iterations + 1):
        q = prior @ w
        z = scaled + np.log(np.maximum(q, 1e-300))[None, :]
        z -= z.max(axis=1, keepdims=True)
        w = np.exp(z)
        w /= w.sum(axis=1, keepdims=True)
        q = prior @ w
        joint = prior[:, None] * w
        mask = joint > 1e-300
        ratio = np.where(mask, w / np.maximum(q[None, :], 1e-300), 1.0)
        mi = float(np.sum(np.where(mask, joint * np.log(ratio), 0.0)))
        expected = float(np.sum(joint * matrix))
        objective = expected + lam * mi
        if abs(objective_prev - objective) < tol * max(1.0, abs(objective)):
            converged = True
            break
        objective_prev = objective
    return w, expected, max(mi, 0.0), iterations, converged


def _unconstrained_channel(matrix: np.ndarray) -> np.ndarray:
    """Deterministic argmin-per-row channel (lowest action index on ties)."""
    nx, na = matrix.shape
    rows = np.zeros((nx, na))
    rows[np.arange(nx), np.argmin(matrix, axis=1)] = 1.0
    return rows


def _independent_best_action(matrix: np.ndarray, prior: np.ndarray) -> np.ndarray:
    nx, na = matrix.shape
    best = int(np.argmin(prior @ matrix))
    rows = np.zeros((nx, na))
    rows[:, best] = 1.0
    return rows


def lagrangian_sweep(
    loss: LossSpec,
    prior: FiniteDistribution,
    lambda_grid=None,
    tol: float = 1e-12,
) -> list:
    """Sweep the Lagrangian trade-off; returns [(lambda, SolveReport)].

    Each report's (leakage, objective) pair sits on the lower convex
    envelope of the budget-to-risk curve.  Reports are ordered by
    increasing lambda, so leakage is non-increasing and the objective
    non-decreasing along the list.
    """
    if loss.matrix is None:
        raise ValidationError("lagrangian sweep requires a matrix loss")
    if lambda_grid is None:
        lambda_grid = np.geomspace(1e-3, 1e3, 40)
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if np.any(lambda_grid <= 0):
        raise ValidationError("lambda values must be positive")
    reduced, keep = _support_restrict(prior)
    matrix = np.asarray(loss.matrix)[keep] if keep is not None else np.asarray(loss.matrix)
    out = []
    w = None
    for lam in np.sort(lambda_grid):
        w, expected, mi, iterations, converged = _ba_solve(
            matrix, reduced.probs, lam, start=w, tol=tol
        )
        rows = w
        if keep is not None:
            full = np.full((len(prior), loss.n_actions), 1.0 / loss.n_actions)
            full[keep] = w
            rows = full
        report = SolveReport(
            channel=Channel(prior.alphabet, loss.action_alphabet, np.array(rows)),
            objective=expected,
            leakage_at_solution=mi,
            method="lagrangian_ba",
            feasible=True,
            budget=mi,  # each sweep point is exactly on its own budget
            iterations=iterations,
            slack=1e-8,
            flags=() if converged else ("not_converged",),
        )
        out.append((float(lam), report))
    return out


def solve_shannon_budget(
    loss: LossSpec,
    prior: FiniteDistribution,
    budget: float,
    tol_budget: float = 1e-9,
) -> SolveReport:
    """Minimize expected loss under a Shannon-information budget.

    Bisects the Lagrange multiplier until the achieved information matches
    the budget (from the feasible side), warm-starting each solve.  The
    declared slack accounts for the residual budget gap times the final
    multiplier plus the alternating-minimization tolerance.
    """
    if loss.matrix is None:
        raise ValidationError("the Lagrangian solver requires a matrix loss")
    if budget < -1e-12:
        raise ValidationError("budget must be nonnegative")
    reduced, keep = _support_restrict(prior)
    matrix = np.asarray(loss.matrix)[keep] if keep is not None else np.asarray(loss.matrix)

    def inflate(rows):
        if keep is None:
            return rows
        full = np.full((len(prior), loss.n_actions), 1.0 / loss.n_actions)
        full[keep] = rows
        return full

    def finish(rows, expected, mi, iterations, slack, flags=()):
        return SolveReport(
            channel=Channel(prior.alphabet, loss.action_alphabet, inflate(rows)),
            objective=expected,
            leakage_at_solution=mi,
            method="lagrangian_ba",
            feasible=True,
            budget=budget,
            iterations=iterations,
            slack=slack,
            flags=flags,
        )

    # unconstrained optimum already feasible?
    rows = _unconstrained_channel(matrix)
    mi_unc = _shannon_value(reduced.probs, rows)
    expected_unc = float(np.sum(reduced.probs[:, None] * rows * matrix))
    if mi_unc <= budget + tol_budget:
        return finish(rows, expected_unc, mi_unc, 0, 1e-12, ("unconstrained",))

    if budget <= tol_budget:
        rows = _independent_best_action(matrix, reduced.probs)
        expected = float(np.sum(reduced.probs[:, None] * rows * matrix))
        return finish(rows, expected, 0.0, 0, 1e-12, ("independent",))

    # bracket the budget: leakage decreases as lambda grows
    lam_lo, lam_hi = 1.0, 1.0
    w, expected, mi, _, _ = _ba_solve(matrix, reduced.probs, 1.0)
    total_iterations = 0
    if mi > budget:
        for _ in range(80):
            lam_hi *= 4.0
            w, expected, mi, its, _ = _ba_solve(matrix, reduced.probs, lam_hi, start=w)
            total_iterations += its
            if mi <= budget:
                break
        else:
            raise SolverError("could not bracket the budget from above")
    else:
        for _ in range(80):
            lam_lo /= 4.0
            w, expected, mi, its, _ = _ba_solve(matrix, reduced.probs, lam_lo, start=w)
            total_iterations += its
            if mi > budget:
                break
        else:
            # the whole curve sits below the budget
            return finish(w, expected, mi, total_iterations, 1e-8)

    best = None  # feasible side of the bracket
    for _ in range(200):
        lam_mid = math.sqrt(lam_lo * lam_hi)
        w, expected, mi, its, _ = _ba_solve(matrix, reduced.probs, lam_mid, start=w)
        total_iterations += its
        if mi <= budget:
            lam_hi = lam_mid
            best = (w.copy(), expected, mi, lam_mid)
        else:
            lam_lo = lam_mid
        if best is not None and budget - best[2] <= tol_budget:
            break
        if lam_hi / lam_lo < 1.0 + 1e-14:
            break
    if best is None:
        w, expected, mi, its, _ = _ba_solve(matrix, reduced.probs, lam_hi, start=w)
        total_iterations += its
        best = (w, expected, mi, lam_hi)
    w, expected, mi, lam = best
    slack = lam * max(tol_budget, budget - mi) + 1e-8
    return finish(w, expected, mi, total_iterations, slack)


# ---------------------------------------------------------------------------
# Projected descent for convex-in-channel measures
# ---------------------------------------------------------------------------


def _project_rows_to_simplex(w: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto the probability simplex."""
    out = np.empty_like(w)
    for i, v in enumerate(w):
        u = np.sort(v)[::-1]
        css = np.cumsum(u)
        rho = np.nonzero(u + (1.0 - css) / np.arange(1, v.size + 1) > 0)[0][-1]
        theta = (1.0 - css[rho]) / (rho + 1.0)
        out[i] = np.maximum(v + theta, 0.0)
    out /= out.sum(axis=1, keepdims=True)
    return out


def _pgd_smooth_minimize(value_fn, grad_fn, w0, max_iterations=3000, tol=1e-13):
    """Projected gradient descent with a persistent adaptive step size."""
    w = w0.copy()
    value = value_fn(w)
    step = 0.1
    iterations = 0
    while iterations < max_iterations:
        iterations += 1
        grad = grad_fn(w)
        norm = float(np.linalg.norm(grad))
        if norm < 1e-14:
            break
        improved = False
        trial = step
        for _ in range(50):
            w_new = _project_rows_to_simplex(w - trial / norm * grad)
            v_new = value_fn(w_new)
            if v_new < value - 1e-16:
                improved = True
                break
            trial *= 0.5
        if not improved:
            break
        delta = value - v_new
        moved = float(np.max(np.abs(w_new - w)))
        w, value = w_new, v_new
        step = min(trial * 1.6, 10.0)
        if delta < tol * max(1.0, abs(value)) and moved < 1e-11:
            break
    return w, value, iterations


def projected_descent(
    loss: LossSpec,
    prior: FiniteDistribution,
    measure: LeakageMeasure,
    budget: float,
    grad_step: float = 1e-6,
    cross_check: str = "auto",
) -> SolveReport:
    """Penalty method plus Lagrangian polish for convex-in-channel measures.

    Stage 1 minimizes ``E[loss] + rho * max(0, leakage - budget)^2`` with
    numeric central-difference gradients for the leakage term and per-row
    simplex projection, escalating ``rho`` until the constraint violation
    is below 1e-6.  Stage 2 polishes by bisecting the multiplier of the
    smooth Lagrangian ``E[loss] + lam * leakage`` until the solve lands on
    the budget (convexity gives strong duality, so the polished point sits
    on the exact lower envelope).  A final pull-back along the segment to
    an independent channel guarantees feasibility.

    ``cross_check='auto'`` compares against :func:`grid_oracle` whenever
    the instance is oracle-sized and folds the observed margin into the
    declared slack.
    """
    if not measure_is_convex(measure):
        raise ValidationError(
            f"{measure.describe()} is not declared convex in the channel; "
            "use grid_oracle"
        )
    if loss.matrix is None:
        raise ValidationError("projected descent requires a matrix loss")
    reduced, keep = _support_restrict(prior)
    matrix = np.asarray(loss.matrix)[keep] if keep is not None else np.asarray(loss.matrix)
    nx, na = matrix.shape
    raw_leak_fn = leakage_fn_for_scan(measure, reduced)

    def leak_fn(w):
        # the smooth extension is evaluated off the polytope during
        # finite differencing; fractional powers need the clip
        return raw_leak_fn(np.clip(w, 0.0, None))

    loss_grad = reduced.probs[:, None] * matrix

    def expected_loss(w):
        return float(np.sum(reduced.probs[:, None] * w * matrix))

    def leak_grad(w):
        g = np.zeros_like(w)
        for i in range(nx):
            for j in range(na):
                bump = np.zeros_like(w)
                bump[i, j] = grad_step
                g[i, j] = (leak_fn(w + bump) - leak_fn(w - bump)) / (2 * grad_step)
        return g

    def finish(w, objective, leak_w, iterations, slack, flags):
        if cross_check == "auto":
            res = default_resolution(nx, na)
            if simplex_grid_size(na, res) ** nx <= 200_000:
                oracle = grid_oracle(
                    loss,
                    FiniteDistribution(reduced.alphabet, reduced.probs),
                    measure,
                    budget,
                    resolution=res,
                )
                slack = max(0.0, objective - oracle.objective) + oracle.slack + 1e-8
                flags = flags + ("cross_checked",)
        rows = w
        if keep is not None:
            full = np.full((len(prior), na), 1.0 / na)
            full[keep] = w
            rows = full
        return SolveReport(
            channel=Channel(prior.alphabet, loss.action_alphabet, np.array(rows)),
            objective=objective,
            leakage_at_solution=leak_w,
            method="projected_descent",
            feasible=True,
            budget=budget,
            iterations=iterations,
            slack=slack,
            flags=flags,
        )

    # unconstrained optimum already feasible?
    w_unc = _unconstrained_channel(matrix)
    if leak_fn(w_unc) <= budget + FEASIBILITY_TOL:
        return finish(w_unc, expected_loss(w_unc), leak_fn(w_unc), 0, 1e-10, ("unconstrained",))

    independent = _independent_best_action(matrix, reduced.probs)
    iterations = 0

    # stage 1: escalating quadratic penalty
    w = _project_rows_to_simplex(0.5 * independent + 0.5 * np.full((nx, na), 1.0 / na))
    stalled = True
    for rho in 10.0 ** np.arange(2, 9):

        def value_fn(wc, rho=rho):
            return expected_loss(wc) + rho * max(0.0, leak_fn(wc) - budget) ** 2

        def grad_fn(wc, rho=rho):
            viol = max(0.0, leak_fn(wc) - budget)
            g = loss_grad.copy()
            if viol > 0.0:
                g = g + 2.0 * rho * viol * leak_grad(wc)
            return g

        w, _, its = _pgd_smooth_minimize(value_fn, grad_fn, w, max_iterations=600)
        iterations += its
        if leak_fn(w) <= budget + 1e-6:
            stalled = False
            break

    # stage 2: Lagrangian polish; leakage of the smooth solve decreases in lam
    def lagrangian_solve(lam, w0):
        def value_fn(wc):
            return expected_loss(wc) + lam * leak_fn(wc)

        def grad_fn(wc):
            return loss_grad + lam * leak_grad(wc)

        return _pgd_smooth_minimize(value_fn, grad_fn, w0)

    lam_lo, lam_hi = None, None
    lam = 1.0
    w_lam = w.copy()
    for _ in range(60):
        w_lam, _, its = lagrangian_solve(lam, w_lam)
        iterations += its
        if leak_fn(w_lam) > budget:
            lam_lo = lam
            lam *= 4.0
        else:
            lam_hi = lam
            lam_hi_w = w_lam.copy()
            break
    if lam_hi is None:
        lam_hi = lam
        lam_hi_w = w_lam.copy()
    if lam_lo is None:
        lam = lam_hi
        for _ in range(60):
            lam /= 4.0
            w_lam, _, its = lagrangian_solve(lam, w_lam)
            iterations += its
            if leak_fn(w_lam) > budget:
                lam_lo = lam
                break
        else:
            # even a vanishing price keeps the solve on budget
            w = lam_hi_w if leak_fn(lam_hi_w) <= budget + FEASIBILITY_TOL else w
            lam_lo = 0.0
    best = (expected_loss(lam_hi_w), lam_hi_w, leak_fn(lam_hi_w))
    if lam_lo and lam_lo > 0.0:
        for _ in range(90):
            lam_mid = math.sqrt(lam_lo * lam_hi)
            w_lam, _, its = lagrangian_solve(lam_mid, w_lam)
            iterations += its
            leak_mid = leak_fn(w_lam)
            if leak_mid <= budget:
                lam_hi = lam_mid
                cand = (expected_loss(w_lam), w_lam.copy(), leak_mid)
                if cand[0] < best[0]:
                    best = cand
                if budget - leak_mid <= 1e-9:
                    break
            else:
                lam_lo = lam_mid
            if lam_hi / max(lam_lo, 1e-300) < 1.0 + 1e-13:
                break
    objective, w, leak_w = best

    # pull back to exact feasibility if numerical noise left us outside
    if leak_w > budget:
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            cand = (1.0 - mid) * w + mid * independent
            if leak_fn(cand) <= budget:
                hi = mid
            else:
                lo = mid
        w = (1.0 - hi) * w + hi * independent
        leak_w = leak_fn(w)
        objective = expected_loss(w)

    flags = ("stalled",) if stalled else ()
    return finish(w, objective, leak_w, iterations, 1e-5, flags)
