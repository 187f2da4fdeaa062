r"""Sufficient statistics of an action variable for the underlying state.

Given a prior on X and a channel X -> A, two canonical statistics of A
are computed:

* the posterior-vector statistic: a |-> (p(x|a))_x, grouping actions with
  identical posteriors;
* the likelihood-ratio statistic: a |-> (p(a|x_i)/p(a|x_1))_i, the minimal
  sufficient statistic when the likelihood family shares a common support.

Merging actions whose statistic values coincide yields the disclosure
channel X -> t(A) that attains the fundamental value-of-information limit;
:func:`build_disclosure_channel` performs the merge and
:func:`check_sufficiency` quantifies how much posterior information a
lossy (epsilon > 0) merge discards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .core import SUPPORT_EPSILON, Alphabet, Channel, FiniteDistribution, JointModel, posteriors
from .errors import CommonSupportError, ValidationError

MERGE_EPSILON_DEFAULT = 1e-9
# threshold multiplier in check_sufficiency: deviation up to
# merge_epsilon * (1 + CONDITION_SLACK) still counts as sufficient
CONDITION_SLACK = 0.5


@dataclass(frozen=True)
class StatisticMap:
    """A partition of an action alphabet by the value of a statistic.

    ``classes`` lists member indices per class (alphabet order);
    ``representatives`` holds one vector per class (the merged posterior
    for the posterior statistic).  Unreachable actions (zero marginal
    probability) form their own flagged classes with a ``None``
    representative and are excluded from gain computations.
    """

    source: Alphabet
    kind: str  # 'posterior' | 'likelihood_ratio' | 'identity'
    classes: tuple  # tuple of tuples of source indices
    representatives: tuple  # tuple of ndarray or None
    unreachable_classes: frozenset
    merge_epsilon: float

    def class_of(self) -> np.ndarray:
        out = np.empty(len(self.source), dtype=np.int64)
        for ci, members in enumerate(self.classes):
            for a in members:
                out[a] = ci
        return out

    def class_labels(self) -> tuple:
        return tuple("+".join(self.source.labels[a] for a in members) for members in self.classes)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "merge_epsilon": self.merge_epsilon,
            "classes": [
                {
                    "actions": [self.source.labels[a] for a in members],
                    "representative": None if rep is None else [float(v) for v in rep],
                    "unreachable": ci in self.unreachable_classes,
                }
                for ci, (members, rep) in enumerate(zip(self.classes, self.representatives))
            ],
        }


def _single_linkage_classes(vectors: dict, order, epsilon: float):
    """Connected components of the 'sup-norm distance <= epsilon' graph.

    Deterministic: scan in alphabet order, union-find with the smallest
    member as the class anchor.
    """
    order = list(order)
    parent = {a: a for a in order}

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            lo, hi = min(ra, rb), max(ra, rb)
            parent[hi] = lo

    for i, a in enumerate(order):
        for b in order[:i]:
            if np.max(np.abs(vectors[a] - vectors[b])) <= epsilon:
                union(a, b)
    groups = {}
    for a in order:
        groups.setdefault(find(a), []).append(a)
    return [tuple(groups[k]) for k in sorted(groups)]


def _reachability(prior: FiniteDistribution, channel: Channel):
    p_a = prior.probs @ channel.matrix
    return p_a, p_a > SUPPORT_EPSILON


def posterior_statistic(
    prior: FiniteDistribution,
    channel: Channel,
    merge_epsilon: float = MERGE_EPSILON_DEFAULT,
    kind: str = "posterior",
) -> StatisticMap:
    """Group actions by their posterior vector p(x | a).

    With ``kind='identity'`` every reachable action keeps its own class
    (the identity statistic); representatives are the posteriors either
    way, since they are what the merged symbol reveals about X.
    """
    if merge_epsilon < 0:
        raise ValidationError("merge_epsilon must be nonnegative")
    if kind not in ("posterior", "identity"):
        raise ValidationError("kind must be 'posterior' or 'identity'")
    model = JointModel(prior, channel)
    post, unreachable = posteriors(model)
    p_a, reachable = _reachability(prior, channel)
    reach_idx = [a for a in range(len(channel.output)) if reachable[a]]
    vectors = {a: post.matrix[a] for a in reach_idx}
    if kind == "identity":
        classes = [(a,) for a in reach_idx]
    else:
        classes = _single_linkage_classes(vectors, reach_idx, merge_epsilon)
    reps = []
    for members in classes:
        stack = np.vstack([vectors[a] for a in members])
        if len(members) == 1 or np.all(stack == stack[0]):
            # identical posteriors merge without any averaging error
            reps.append(stack[0].copy())
        else:
            weights = p_a[list(members)]
            rep = weights @ stack / weights.sum()
            reps.append(rep / rep.sum())
    # unreachable actions: one flagged singleton class each
    flagged = []
    for a in range(len(channel.output)):
        if not reachable[a]:
            classes.append((a,))
            reps.append(None)
            flagged.append(len(classes) - 1)
    return StatisticMap(
        source=channel.output,
        kind=kind,
        classes=tuple(classes),
        representatives=tuple(reps),
        unreachable_classes=frozenset(flagged),
        merge_epsilon=merge_epsilon,
    )


def identity_statistic(prior: FiniteDistribution, channel: Channel) -> StatisticMap:
    return posterior_statistic(prior, channel, merge_epsilon=0.0, kind="identity")


def likelihood_ratio_statistic(
    prior: FiniteDistribution,
    channel: Channel,
    merge_epsilon: float = MERGE_EPSILON_DEFAULT,
) -> StatisticMap:
    """Group actions by the likelihood-ratio vector, the minimal statistic.

    Requires the likelihood family {p(.|x)}_x to share a common support;
    the first violating (x, a) pair is reported otherwise.  The grouping
    is verified to coincide with the posterior-ratio grouping, which the
    common-support hypothesis guarantees.
    """
    if merge_epsilon < 0:
        raise ValidationError("merge_epsilon must be nonnegative")
    w = channel.matrix
    n_x, n_a = w.shape
    col_positive = w > SUPPORT_EPSILON
    for a in range(n_a):
        col = col_positive[:, a]
        if col.any() and not col.all():
            x_bad = int(np.flatnonzero(~col)[0])
            raise CommonSupportError(
                "likelihood family lacks common support: "
                f"p({channel.output.labels[a]} | {channel.input.labels[x_bad]}) = 0 "
                "while another input gives it positive probability",
                x_label=channel.input.labels[x_bad],
                a_label=channel.output.labels[a],
            )
    p_a, reachable = _reachability(prior, channel)
    reach_idx = [a for a in range(n_a) if reachable[a]]
    supp_x = np.flatnonzero(prior.probs > SUPPORT_EPSILON)
    ref = supp_x[0]

    def ratios(a):
        if not col_positive[:, a].any():  # all-zero column: never produced
            return np.zeros(len(supp_x))
        return w[supp_x, a] / w[ref, a]

    vectors = {a: ratios(a) for a in reach_idx}
    classes = _single_linkage_classes(vectors, reach_idx, merge_epsilon)

    # posterior-ratio grouping must agree (the two statistics determine
    # each other under common support)
    post, _ = posteriors(JointModel(prior, channel))
    post_ratio = {
        a: post.matrix[a, supp_x] / post.matrix[a, ref] for a in reach_idx
    }
    classes_e = _single_linkage_classes(post_ratio, reach_idx, merge_epsilon)
    if sorted(classes) != sorted(classes_e):
        raise ValidationError(
            "likelihood-ratio and posterior-ratio groupings disagree; "
            "ratio vectors are numerically ill-conditioned at this merge_epsilon"
        )
    reps = [np.vstack([vectors[a] for a in members]).mean(axis=0) for members in classes]
    flagged = []
    for a in range(n_a):
        if not reachable[a]:
            classes.append((a,))
            reps.append(None)
            flagged.append(len(classes) - 1)
    return StatisticMap(
        source=channel.output,
        kind="likelihood_ratio",
        classes=tuple(classes),
        representatives=tuple(reps),
        unreachable_classes=frozenset(flagged),
        merge_epsilon=merge_epsilon,
    )


def build_disclosure_channel(
    prior: FiniteDistribution, optimal_channel: Channel, statistic: StatisticMap
) -> Channel:
    """Merge action symbols by statistic class: p(y|x) = sum_{a in y} p(a|x).

    The output alphabet is the set of statistic classes; labels join the
    member action labels.  Rows remain stochastic because classes
    partition the action alphabet.
    """
    if statistic.source != optimal_channel.output:
        raise ValidationError("statistic was not built from this channel's actions")
    n_x = len(optimal_channel.input)
    cols = np.zeros((n_x, len(statistic.classes)))
    for ci, members in enumerate(statistic.classes):
        cols[:, ci] = optimal_channel.matrix[:, list(members)].sum(axis=1)
    out = Alphabet(statistic.class_labels())
    return Channel(optimal_channel.input, out, cols)


def check_sufficiency(
    prior: FiniteDistribution, channel: Channel, statistic: StatisticMap
):
    """Largest gap between an action's posterior and its merged symbol's posterior.

    Returns ``(sufficient, max_deviation)`` where sufficiency means the
    deviation stays within ``merge_epsilon * (1 + CONDITION_SLACK)``: the
    merged symbol then carries (numerically) the same posterior as each
    merged action, which is the conditional-independence form of
    sufficiency.  Classes whose members have bitwise-identical posteriors
    contribute exactly zero.
    """
    model = JointModel(prior, channel)
    post, _ = posteriors(model)
    p_a, reachable = _reachability(prior, channel)
    deviation = 0.0
    supp_x = prior.probs > SUPPORT_EPSILON
    for ci, members in enumerate(statistic.classes):
        if ci in statistic.unreachable_classes:
            continue
        live = [a for a in members if reachable[a]]
        if not live:
            continue
        rows = post.matrix[live]
        if np.all(rows == rows[0]):
            merged = rows[0]
        else:
            weights = p_a[live]
            merged = weights @ rows / weights.sum()
            merged = merged / merged.sum()
        gap = np.max(np.abs(rows[:, supp_x] - merged[supp_x][None, :]))
        deviation = max(deviation, float(gap))
    threshold = statistic.merge_epsilon * (1.0 + CONDITION_SLACK) + 1e-12
    return deviation <= threshold, deviation
