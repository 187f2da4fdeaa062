r"""Loss functions, Bayes decision rules and risks, and inferential gains.

A loss here is "standard": it may depend on the randomized rule only
through the probability the rule assigns to the chosen action,
``loss(x, a, rule_prob)``.  Four kinds are supported:

* ``classical_matrix`` -- a plain nonnegative table loss(x, a);
* ``squared``          -- (value(x) - value(a))^2 over numeric alphabets;
* ``alpha_loss``       -- the one-parameter family interpolating log-loss
                          (order 1) and MAP/zero-one behavior (order inf),
                          whose gain equals the Arimoto information of the
                          same order;
* ``custom_standard``  -- an arbitrary callable (x, a, p) -> loss, solved
                          by numeric minimization over the action simplex.

Three gains quantify the utility of an observation channel: the average
gain (prior Bayes risk minus posterior Bayes risk), the logarithmic gain
(log of the risk ratio), and the maximal gain (prior risk minus the risk
at the single most favorable outcome).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import (
    SUPPORT_EPSILON,
    Alphabet,
    Channel,
    FiniteDistribution,
    JointModel,
    posteriors,
)
from .errors import ValidationError

LOSS_KINDS = ("classical_matrix", "squared", "alpha_loss", "custom_standard")


@dataclass(frozen=True)
class LossSpec:
    """One decision problem's loss function plus its action alphabet."""

    kind: str
    action_alphabet: Alphabet
    matrix: Optional[np.ndarray] = None
    order: Optional[float] = None
    standard_fn: Optional[Callable[[int, int, float], float]] = None

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ValidationError(f"unknown loss kind {self.kind!r}")
        if self.kind in ("classical_matrix", "squared"):
            if self.matrix is None:
                raise ValidationError(f"{self.kind} requires a loss matrix")
            m = np.array(self.matrix, dtype=float)
            if m.ndim != 2 or m.shape[1] != len(self.action_alphabet):
                raise ValidationError(
                    f"loss matrix shape {m.shape} does not match "
                    f"{len(self.action_alphabet)} actions"
                )
            if np.any(m < 0):
                raise ValidationError("loss matrix entries must be nonnegative")
            m.flags.writeable = False
            object.__setattr__(self, "matrix", m)
        if self.kind == "alpha_loss":
            if self.order is None or not (float(self.order) > 0):
                raise ValidationError("alpha_loss requires an order in (0, inf]")
            object.__setattr__(self, "order", float(self.order))
        if self.kind == "custom_standard" and self.standard_fn is None:
            raise ValidationError("custom_standard requires standard_fn")

    @property
    def n_actions(self) -> int:
        return len(self.action_alphabet)

    def max_loss(self, n_states: int) -> float:
        """Upper bound on the loss value, used for grid-slack accounting."""
        if self.matrix is not None:
            return float(self.matrix.max())
        if self.kind == "alpha_loss":
            a = self.order
            if a == 1.0:
                return math.inf  # log-loss is unbounded
            if math.isinf(a):
                return 1.0
            return abs(a / (a - 1.0))
        return math.inf


def classical_loss(matrix, actions: Optional[Alphabet] = None) -> LossSpec:
    m = np.asarray(matrix, dtype=float)
    if actions is None:
        actions = Alphabet.of_size(m.shape[1], prefix="a")
    return LossSpec(kind="classical_matrix", action_alphabet=actions, matrix=m)


def zero_one_loss(x_alphabet: Alphabet) -> LossSpec:
    n = len(x_alphabet)
    return LossSpec(
        kind="classical_matrix",
        action_alphabet=x_alphabet,
        matrix=1.0 - np.eye(n),
    )


def squared_loss(x_alphabet: Alphabet, action_values=None) -> LossSpec:
    """Squared error between numeric state and numeric action.

    Actions default to the X alphabet itself; pass ``action_values`` for a
    denser action grid when the posterior mean may fall between symbols.
    """
    x_vals = x_alphabet.numeric
    if action_values is None:
        actions = x_alphabet
        a_vals = x_vals
    else:
        a_vals = np.asarray(action_values, dtype=float)
        actions = Alphabet(
            tuple(f"a={v:g}" for v in a_vals), tuple(float(v) for v in a_vals)
        )
    matrix = (x_vals[:, None] - a_vals[None, :]) ** 2
    return LossSpec(kind="squared", action_alphabet=actions, matrix=matrix)


def alpha_loss(x_alphabet: Alphabet, order: float) -> LossSpec:
    return LossSpec(kind="alpha_loss", action_alphabet=x_alphabet, order=float(order))


def loss_from_dict(data: dict, x_alphabet: Alphabet) -> LossSpec:
    """Parse the loss JSON schema against a given X alphabet."""
    kind = data.get("kind")
    if kind == "classical_matrix":
        matrix = np.asarray(data["matrix"], dtype=float)
        labels = data.get("actions")
        actions = (
            Alphabet(tuple(str(a) for a in labels))
            if labels is not None
            else Alphabet.of_size(matrix.shape[1], prefix="a")
        )
        if matrix.shape[0] != len(x_alphabet):
            raise ValidationError(
                f"loss matrix has {matrix.shape[0]} rows for {len(x_alphabet)} states"
            )
        return LossSpec(kind="classical_matrix", action_alphabet=actions, matrix=matrix)
    if kind == "squared":
        return squared_loss(x_alphabet, data.get("actions"))
    if kind == "alpha_loss":
        order = data.get("order")
        if isinstance(order, str):
            order = math.inf if order in ("inf", "infinity") else float(order)
        return alpha_loss(x_alphabet, order)
    raise ValidationError(f"unsupported loss kind in document: {kind!r}")


def loss_to_dict(loss: LossSpec) -> dict:
    if loss.kind in ("classical_matrix", "squared"):
        return {
            "kind": loss.kind,
            "matrix": [[float(v) for v in row] for row in loss.matrix],
            "actions": list(loss.action_alphabet.labels),
        }
    if loss.kind == "alpha_loss":
        return {
            "kind": "alpha_loss",
            "order": "inf" if math.isinf(loss.order) else loss.order,
        }
    raise ValidationError("custom_standard losses cannot be serialized")


@dataclass(frozen=True)
class DecisionRule:
    """A decision rule: deterministic (y -> action index) or randomized."""

    kind: str  # 'deterministic' | 'randomized'
    actions: Alphabet
    map: Optional[tuple] = None  # per-y action index
    channel: Optional[Channel] = None  # per-y action distribution

    def row(self, y_index: int) -> np.ndarray:
        if self.kind == "deterministic":
            out = np.zeros(len(self.actions))
            out[self.map[y_index]] = 1.0
            return out
        return self.channel.matrix[y_index]


# ---------------------------------------------------------------------------
# Posterior-level optimization
# ---------------------------------------------------------------------------


def _alpha_posterior_value_rule(post: np.ndarray, order: float):
    """Closed-form optimal rule row and risk for the alpha-family loss."""
    if order == 1.0:
        p = post[post > SUPPORT_EPSILON]
        return float(-np.sum(p * np.log(p))), post.copy()
    if math.isinf(order):
        idx = int(np.argmax(post))
        rule = np.zeros_like(post)
        rule[idx] = 1.0
        return float(1.0 - post[idx]), rule
    tilted = post**order
    tilted /= tilted.sum()
    attained = float(np.sum(post**order) ** (1.0 / order))
    value = order / (order - 1.0) * (1.0 - attained)
    return float(value), tilted


def _custom_standard_minimize(loss: LossSpec, post: np.ndarray, tol=1e-10, max_iterations=10_000):
    """Projected multiplicative updates over the action simplex."""
    n_a = loss.n_actions
    fn = loss.standard_fn

    def objective(q):
        total = 0.0
        for a in range(n_a):
            if q[a] <= 0:
                continue
            for x in range(post.size):
                if post[x] <= 0:
                    continue
                total += post[x] * q[a] * fn(x, a, q[a])
        return total

    q = np.full(n_a, 1.0 / n_a)
    value = objective(q)
    step = 0.5
    h = 1e-7
    for _ in range(max_iterations):
        grad = np.zeros(n_a)
        for a in range(n_a):
            bumped = q.copy()
            bumped[a] = min(1.0, bumped[a] + h)
            bumped /= bumped.sum()
            dipped = q.copy()
            dipped[a] = max(0.0, dipped[a] - h)
            dipped /= dipped.sum()
            grad[a] = (objective(bumped) - objective(dipped)) / (2 * h)
        improved = False
        trial = step
        for _ in range(30):
            z = -trial * (grad - grad.max())
            q_new = np.maximum(q, 1e-12) * np.exp(z - z.max())
            q_new /= q_new.sum()
            v_new = objective(q_new)
            if v_new < value - 1e-15:
                improved = True
                break
            trial *= 0.5
        if not improved:
            break
        delta = value - v_new
        q, value = q_new, v_new
        step = min(trial * 2.0, 10.0)
        if delta < tol * max(1.0, abs(value)):
            break
    return float(value), q


def min_posterior_risk(loss: LossSpec, posterior: FiniteDistribution):
    """Smallest expected loss achievable against one posterior.

    Returns
    -------
    value : float
    rule_row : ndarray
        The optimal action distribution.  For matrix losses this is a point
        mass on the lowest-index minimizer; for the alpha family it is the
        tilted posterior ``post^alpha`` (point mass at order infinity).
    """
    post = posterior.probs
    if loss.kind in ("classical_matrix", "squared"):
        expected = post @ loss.matrix
        idx = int(np.argmin(expected))
        row = np.zeros(loss.n_actions)
        row[idx] = 1.0
        return float(expected[idx]), row
    if loss.kind == "alpha_loss":
        if len(posterior.alphabet) != loss.n_actions:
            raise ValidationError("alpha_loss actions must match the X alphabet")
        return _alpha_posterior_value_rule(post, loss.order)
    return _custom_standard_minimize(loss, post)


def prior_bayes_risk(loss: LossSpec, prior: FiniteDistribution) -> float:
    """Bayes risk with no observation: one rule row against the prior."""
    return min_posterior_risk(loss, prior)[0]


def _posterior_risks(loss: LossSpec, model: JointModel):
    post_channel, unreachable = posteriors(model)
    p_y = model.prior.probs @ model.channel.matrix
    risks = np.zeros(len(model.y))
    rows = []
    for y in range(len(model.y)):
        if y in unreachable:
            rows.append(np.full(loss.n_actions, np.nan))
            continue
        value, row = min_posterior_risk(loss, post_channel.row(y))
        risks[y] = value
        rows.append(row)
    return p_y, risks, rows, unreachable


def min_bayes_risk(loss: LossSpec, model: JointModel) -> float:
    """Expected posterior Bayes risk over the channel output."""
    p_y, risks, _, unreachable = _posterior_risks(loss, model)
    keep = [y for y in range(len(p_y)) if y not in unreachable]
    return float(np.sum(p_y[keep] * risks[keep]))


def bayes_rule(loss: LossSpec, model: JointModel) -> DecisionRule:
    """The optimal decision rule against each reachable output symbol.

    Unreachable outputs get the prior-optimal row so the rule stays total.
    """
    _, _, rows, unreachable = _posterior_risks(loss, model)
    _, prior_row = min_posterior_risk(loss, model.prior)
    rows = [prior_row if y in unreachable else rows[y] for y in range(len(rows))]
    matrix = np.vstack(rows)
    deterministic = bool(np.all((matrix == 0) | (matrix == 1)))
    if deterministic:
        return DecisionRule(
            kind="deterministic",
            actions=loss.action_alphabet,
            map=tuple(int(np.argmax(r)) for r in matrix),
        )
    return DecisionRule(
        kind="randomized",
        actions=loss.action_alphabet,
        channel=Channel(model.channel.output, loss.action_alphabet, matrix),
    )


# ---------------------------------------------------------------------------
# Gains
# ---------------------------------------------------------------------------


def average_gain(loss: LossSpec, model: JointModel) -> float:
    """Prior Bayes risk minus observation-based Bayes risk (>= 0)."""
    return prior_bayes_risk(loss, model.prior) - min_bayes_risk(loss, model)


def logarithmic_gain(loss: LossSpec, model: JointModel) -> float:
    """log(prior risk / posterior risk); infinite when the posterior risk is zero."""
    prior_risk = prior_bayes_risk(loss, model.prior)
    if prior_risk <= 0.0:
        raise ValidationError("logarithmic gain needs a positive prior Bayes risk")
    post_risk = min_bayes_risk(loss, model)
    if post_risk <= 0.0:
        return math.inf
    return math.log(prior_risk / post_risk)


def maximal_gain(loss: LossSpec, model: JointModel) -> float:
    """Prior risk minus the posterior risk of the adversary's best single outcome."""
    p_y, risks, _, unreachable = _posterior_risks(loss, model)
    keep = [y for y in range(len(p_y)) if y not in unreachable]
    best = float(np.min(risks[keep]))
    return prior_bayes_risk(loss, model.prior) - best
