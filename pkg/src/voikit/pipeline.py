r"""End-to-end privacy-mechanism design and its Monte-Carlo witness.

A data curator holds X, a legitimate user wants to act on a disclosure Y
under a known loss, and an adversary must be kept below a leakage (or
gain) budget.  The mechanism design runs in three steps:

1. solve for the optimal action channel X -> A under the budget;
2. merge actions by their posterior statistic, t(A);
3. disclose Y = t(A) through the merged channel.

The resulting mechanism is audited against the full catalogue of leakage
measures and can be simulated end to end with a seeded generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Union

import numpy as np

from .core import Alphabet, Channel, FiniteDistribution, JointModel
from .decisions import (
    DecisionRule,
    LossSpec,
    average_gain,
    bayes_rule,
    maximal_gain,
    min_bayes_risk,
    prior_bayes_risk,
)
from .errors import SolverError, ValidationError
from .measures import LeakageMeasure, evaluate_leakage, upper_bound_K
from .solvers import FEASIBILITY_TOL, ScanObjective, SolveReport, default_resolution, scan_channel_grid
from .sufficiency import StatisticMap, build_disclosure_channel, posterior_statistic
from .voi import VoiPoint, fundamental_voi

AUDIT_TOLERANCE = 1e-6


@dataclass(frozen=True)
class GainPrivacy:
    """Privacy constraint expressed as an adversary's inferential gain."""

    eve_loss: LossSpec
    kind: str = "average"  # 'average' | 'maximal'

    def __post_init__(self):
        if self.kind not in ("average", "maximal"):
            raise ValidationError("gain privacy kind must be 'average' or 'maximal'")
        if self.eve_loss.matrix is None:
            raise ValidationError("gain-based privacy needs a matrix adversary loss")


@dataclass(frozen=True)
class PutScenario:
    """One privacy-utility trade-off instance."""

    prior: FiniteDistribution
    bob_loss: LossSpec
    privacy: Union[LeakageMeasure, GainPrivacy]
    budget: float
    seed: int = 0
    sample_count: int = 100_000

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValidationError("sample_count must be at least 1")
        if self.budget < -1e-12:
            raise ValidationError("budget must be nonnegative")
        k = self.privacy_cap()
        if math.isfinite(k) and self.budget > k + 1e-9:
            raise ValidationError(
                f"budget {self.budget:g} exceeds the privacy measure's cap {k:g}"
            )

    def privacy_cap(self) -> float:
        if isinstance(self.privacy, GainPrivacy):
            return prior_bayes_risk(self.privacy.eve_loss, self.prior)
        return upper_bound_K(self.privacy, self.prior)


def default_audit_measures(numeric_x: bool) -> tuple:
    """The standard leakage catalogue audited on every designed mechanism."""
    out = [
        LeakageMeasure("shannon_mi"),
        LeakageMeasure("arimoto_mi", order=2.0),
        LeakageMeasure("arimoto_mi", order=math.inf),
        LeakageMeasure("sibson_mi", order=2.0),
        LeakageMeasure("sibson_mi", order=math.inf),
        LeakageMeasure("csiszar_mi", order=2.0),
        LeakageMeasure("f_information", generator="kl"),
        LeakageMeasure("f_leakage", generator="chi_squared"),
        LeakageMeasure("maximal_leakage"),
        LeakageMeasure("alpha_leakage", order=2.0),
        LeakageMeasure("maximal_alpha_leakage", order=2.0),
        LeakageMeasure("maximal_cost_leakage"),
        LeakageMeasure("variance_leakage"),
    ]
    if numeric_x:
        out += [
            LeakageMeasure("mmse_leakage"),
            LeakageMeasure("ms_leakage"),
        ]
    return tuple(out)


@dataclass(frozen=True)
class MechanismReport:
    """Everything the mechanism design produced, plus the leakage audit."""

    scenario: PutScenario
    action_channel: Channel
    statistic: StatisticMap
    disclosure_channel: Channel
    achieved_gain: float
    analytic_risk: float  # user's Bayes risk through the disclosure
    privacy_value: float  # audited value of the scenario's own constraint
    privacy_tolerance: float = AUDIT_TOLERANCE
    leakage_audit: dict = field(default_factory=dict)
    solver: Optional[SolveReport] = None
    simulation: Optional["SimulationSummary"] = None

    def to_dict(self) -> dict:
        return {
            "budget": self.scenario.budget,
            "privacy": (
                self.scenario.privacy.to_dict()
                if isinstance(self.scenario.privacy, LeakageMeasure)
                else {"gain": self.scenario.privacy.kind}
            ),
            "achieved_gain": self.achieved_gain,
            "analytic_risk": self.analytic_risk,
            "privacy_value": self.privacy_value,
            "action_channel": {
                "output_labels": list(self.action_channel.output.labels),
                "rows": [[float(v) for v in r] for r in self.action_channel.matrix],
            },
            "statistic": self.statistic.to_dict(),
            "disclosure_channel": {
                "output_labels": list(self.disclosure_channel.output.labels),
                "rows": [[float(v) for v in r] for r in self.disclosure_channel.matrix],
            },
            "leakage_audit": self.leakage_audit,
            "solver": None
            if self.solver is None
            else {
                "method": self.solver.method,
                "objective": self.solver.objective,
                "leakage": self.solver.leakage_at_solution,
                "slack": self.solver.slack,
                "resolution": self.solver.resolution,
            },
            "simulation": None if self.simulation is None else self.simulation.to_dict(),
        }


def _audit(disclosure_model: JointModel) -> dict:
    numeric = disclosure_model.x.values is not None
    audit = {}
    for measure in default_audit_measures(numeric):
        value = evaluate_leakage(measure, disclosure_model).value
        audit[measure.describe()] = value
    return audit


def _privacy_value(privacy, disclosure_model: JointModel) -> float:
    if isinstance(privacy, GainPrivacy):
        fn = average_gain if privacy.kind == "average" else maximal_gain
        return fn(privacy.eve_loss, disclosure_model)
    return evaluate_leakage(privacy, disclosure_model).value


def design_mechanism(
    scenario: PutScenario,
    resolution: Optional[int] = None,
    merge_epsilon: float = 0.0,
) -> MechanismReport:
    """Run the three-step design and audit the result.

    Gain-based privacy constraints route to the grid oracle (their
    convexity in the channel is not established); leakage-measure
    constraints reuse the value-of-information solver dispatch.
    """
    if isinstance(scenario.privacy, GainPrivacy):
        point = _solve_gain_constrained(scenario, resolution, merge_epsilon)
    else:
        point = fundamental_voi(
            scenario.bob_loss,
            scenario.prior,
            scenario.privacy,
            scenario.budget,
            resolution=resolution,
            merge_epsilon=merge_epsilon,
        )
    disclosure_model = JointModel(scenario.prior, point.mechanism)
    achieved = average_gain(scenario.bob_loss, disclosure_model)
    analytic = min_bayes_risk(scenario.bob_loss, disclosure_model)
    privacy_value = _privacy_value(scenario.privacy, disclosure_model)
    if privacy_value > scenario.budget + AUDIT_TOLERANCE:
        raise SolverError(
            f"designed mechanism violates its own privacy audit: "
            f"{privacy_value:g} > {scenario.budget:g} + {AUDIT_TOLERANCE:g}"
        )
    if achieved < -1e-10:
        raise SolverError(f"achieved gain is negative: {achieved!r}")
    return MechanismReport(
        scenario=scenario,
        action_channel=point.solver.channel,
        statistic=point.statistic,
        disclosure_channel=point.mechanism,
        achieved_gain=achieved,
        analytic_risk=analytic,
        privacy_value=privacy_value,
        leakage_audit=_audit(disclosure_model),
        solver=point.solver,
    )


def _solve_gain_constrained(scenario, resolution, merge_epsilon) -> VoiPoint:
    privacy: GainPrivacy = scenario.privacy
    loss = scenario.bob_loss
    if loss.matrix is None:
        raise ValidationError("gain-constrained design needs a matrix user loss")
    prior = scenario.prior
    n_a = loss.n_actions
    if resolution is None:
        resolution = default_resolution(len(prior), n_a)
    eve_matrix = np.asarray(privacy.eve_loss.matrix)
    eve_prior = prior_bayes_risk(privacy.eve_loss, prior)
    outcome = scan_channel_grid(
        prior,
        n_a,
        resolution,
        ScanObjective.expected_loss(loss),
        measure=None,
        budget=scenario.budget,
        eve=(eve_matrix, eve_prior, privacy.kind == "maximal"),
    )
    if outcome.best_index < 0:
        raise SolverError("no feasible action channel on the grid at this budget")
    from .core import simplex_grid_array
    from .solvers import _channel_rows_from_index, _support_restrict

    reduced, keep = _support_restrict(prior)
    grid_rows = simplex_grid_array(n_a, resolution)
    rows = _channel_rows_from_index(grid_rows, outcome.best_index, len(reduced))
    if keep is not None:
        full = np.full((len(prior), n_a), 1.0 / n_a)
        full[keep] = rows
        rows = full
    channel = Channel(prior.alphabet, loss.action_alphabet, rows)
    report = SolveReport(
        channel=channel,
        objective=outcome.objective,
        leakage_at_solution=outcome.leakage,
        method="grid",
        feasible=True,
        budget=scenario.budget,
        iterations=outcome.total,
        resolution=resolution,
        slack=loss.max_loss(len(prior)) * n_a / resolution,
        n_feasible=outcome.n_feasible,
    )
    statistic = posterior_statistic(prior, channel, merge_epsilon)
    mechanism = build_disclosure_channel(prior, channel, statistic)
    p_risk = prior_bayes_risk(loss, prior)
    return VoiPoint(
        budget=scenario.budget,
        u_value=outcome.objective,
        v_value=p_risk - outcome.objective,
        prior_risk=p_risk,
        solver=report,
        mechanism=mechanism,
        statistic=statistic,
        tolerance_budget=report.slack + merge_epsilon + 1e-8,
    )


@dataclass(frozen=True)
class SimulationSummary:
    """Monte-Carlo estimate of the user's risk through the mechanism."""

    samples: int
    seed: int
    empirical_loss: float
    stderr: float
    analytic_loss: float
    within_band: bool  # |empirical - analytic| <= 4 * stderr

    def to_dict(self) -> dict:
        return {
            "samples": self.samples,
            "seed": self.seed,
            "empirical_loss": float("%.12g" % self.empirical_loss),
            "stderr": float("%.12g" % self.stderr),
            "analytic_loss": float("%.12g" % self.analytic_loss),
            "within_band": self.within_band,
        }


def simulate_pipeline(report: MechanismReport, scenario: Optional[PutScenario] = None) -> SimulationSummary:
    """Draw the whole system once per sample and score the user's rule.

    X ~ prior, A ~ optimal action channel, Y = t(A); the user answers with
    the Bayes rule of the disclosure model.  The recorded loss for each
    sample is the rule row's conditional expected loss at (x, y), which
    has the same mean as drawing the action and strictly smaller variance.
    Deterministic for a fixed seed.
    """
    scenario = scenario or report.scenario
    rng = np.random.default_rng(scenario.seed)
    n = scenario.sample_count
    prior = scenario.prior.probs
    action_matrix = report.action_channel.matrix
    class_of = report.statistic.class_of()
    disclosure_model = JointModel(scenario.prior, report.disclosure_channel)
    rule = bayes_rule(scenario.bob_loss, disclosure_model)
    analytic = min_bayes_risk(scenario.bob_loss, disclosure_model)

    x_draw = rng.random(n)
    x = np.searchsorted(np.cumsum(prior), x_draw, side="right")
    x = np.minimum(x, len(prior) - 1)
    a_draw = rng.random(n)
    action_cum = np.cumsum(action_matrix, axis=1)
    a = (a_draw[:, None] > action_cum[x]).sum(axis=1)
    a = np.minimum(a, action_matrix.shape[1] - 1)
    y = class_of[a]

    loss = scenario.bob_loss
    if loss.kind in ("classical_matrix", "squared"):
        if rule.kind == "deterministic":
            act = np.asarray(rule.map, dtype=np.int64)[y]
            values = np.asarray(loss.matrix)[x, act]
        else:
            rows = rule.channel.matrix[y]
            values = np.einsum("na,na->n", rows, np.asarray(loss.matrix)[x])
    elif loss.kind == "alpha_loss":
        rows = np.vstack([rule.row(int(v)) for v in range(len(report.disclosure_channel.output))])
        order = loss.order
        picked = rows[y, x]
        if order == 1.0:
            values = -np.log(np.maximum(picked, 1e-300))
        elif math.isinf(order):
            values = 1.0 - picked
        else:
            values = order / (order - 1.0) * (1.0 - picked ** ((order - 1.0) / order))
    else:
        raise ValidationError("simulation supports matrix and alpha losses")

    empirical = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    within = abs(empirical - analytic) <= 4.0 * stderr if n > 1 else True
    return SimulationSummary(
        samples=n,
        seed=scenario.seed,
        empirical_loss=empirical,
        stderr=stderr,
        analytic_loss=analytic,
        within_band=within,
    )
