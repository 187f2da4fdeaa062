"""Finite-probability primitives: alphabets, distributions, channels, joints.

Everything downstream (leakage measures, Bayes risks, channel optimizers)
consumes the types defined here.  All values are immutable after
construction and all operations are pure functions, so they are safe to
evaluate in parallel without coordination.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import GridCapError, ValidationError

# Probabilities below this threshold are treated as outside the support.
SUPPORT_EPSILON = 1e-12

# Tolerance for "sums to one" checks on probability vectors.
SUM_TOLERANCE = 1e-12

# Refuse to enumerate more simplex grid points than this.
DEFAULT_POINT_CAP = 5_000_000


def _as_readonly(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class Alphabet:
    """An ordered finite set of symbols, optionally carrying numeric values.

    Numeric values are needed by losses and leakage measures that treat the
    symbols as points on the real line (squared loss, variance-based
    leakage).  Labels must be unique.
    """

    labels: tuple
    values: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(str(s) for s in self.labels))
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError("alphabet labels must be unique")
        if self.values is not None:
            vals = tuple(float(v) for v in self.values)
            if len(vals) != len(self.labels):
                raise ValidationError(
                    "alphabet values length %d != labels length %d"
                    % (len(vals), len(self.labels))
                )
            object.__setattr__(self, "values", vals)

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def numeric(self) -> np.ndarray:
        if self.values is None:
            raise ValidationError(
                "alphabet %r carries no numeric values" % (self.labels,)
            )
        return np.asarray(self.values, dtype=float)

    def index(self, label) -> int:
        return self.labels.index(str(label))

    @staticmethod
    def of_size(n: int, prefix: str = "x", values=None) -> "Alphabet":
        return Alphabet(tuple(f"{prefix}{i}" for i in range(n)), values)


@dataclass(frozen=True)
class FiniteDistribution:
    """A probability vector over a labeled alphabet."""

    alphabet: Alphabet
    probs: np.ndarray

    def __post_init__(self):
        p = _as_readonly(self.probs)
        object.__setattr__(self, "probs", p)
        problems = distribution_diagnostics(p, len(self.alphabet))
        if problems:
            raise ValidationError("; ".join(problems))

    def __len__(self) -> int:
        return len(self.alphabet)

    def support(self, epsilon: float = SUPPORT_EPSILON) -> np.ndarray:
        """Indices of symbols with probability above ``epsilon``."""
        return np.flatnonzero(self.probs > epsilon)

    def entropy(self) -> float:
        """Shannon entropy in nats."""
        p = self.probs[self.probs > SUPPORT_EPSILON]
        return float(-np.sum(p * np.log(p)))

    def mean(self) -> float:
        return float(self.probs @ self.alphabet.numeric)

    def variance(self) -> float:
        v = self.alphabet.numeric
        m = self.probs @ v
        return float(self.probs @ (v - m) ** 2)


@dataclass(frozen=True)
class Channel:
    """A row-stochastic conditional distribution between two alphabets.

    ``matrix[i, j]`` is the probability of output ``j`` given input ``i``.
    """

    input: Alphabet
    output: Alphabet
    matrix: np.ndarray

    def __post_init__(self):
        m = _as_readonly(self.matrix)
        if m.ndim != 2:
            raise ValidationError("channel matrix must be two-dimensional")
        object.__setattr__(self, "matrix", m)
        problems = channel_diagnostics(m, len(self.input), len(self.output))
        if problems:
            raise ValidationError("; ".join(problems))

    @property
    def shape(self) -> tuple:
        return self.matrix.shape

    def row(self, i: int) -> FiniteDistribution:
        return FiniteDistribution(self.output, self.matrix[i])

    @staticmethod
    def identity(alphabet: Alphabet) -> "Channel":
        return Channel(alphabet, alphabet, np.eye(len(alphabet)))

    @staticmethod
    def constant(input: Alphabet, output_dist: FiniteDistribution) -> "Channel":
        rows = np.tile(output_dist.probs, (len(input), 1))
        return Channel(input, output_dist.alphabet, rows)

    @staticmethod
    def from_rows(input: Alphabet, output: Alphabet, rows) -> "Channel":
        return Channel(input, output, np.asarray(rows, dtype=float))


@dataclass(frozen=True)
class JointModel:
    """A prior on X together with a channel X -> Y.

    This is the object every leakage measure and every Bayes risk consumes;
    the joint distribution is ``prior[x] * channel.matrix[x, y]``.
    """

    prior: FiniteDistribution
    channel: Channel

    def __post_init__(self):
        problems = model_diagnostics(self)
        if problems:
            raise ValidationError("; ".join(problems))

    @property
    def x(self) -> Alphabet:
        return self.prior.alphabet

    @property
    def y(self) -> Alphabet:
        return self.channel.output

    def joint(self) -> np.ndarray:
        return self.prior.probs[:, None] * self.channel.matrix


# ---------------------------------------------------------------------------
# Validation diagnostics.  These return human-readable findings instead of
# raising, so callers can report every violation at once.
# ---------------------------------------------------------------------------


def distribution_diagnostics(probs: np.ndarray, size: int, where: str = "") -> list:
    tag = f"{where}: " if where else ""
    out = []
    p = np.asarray(probs, dtype=float)
    if p.ndim != 1 or p.shape[0] != size:
        out.append(f"{tag}expected {size} probabilities, got shape {p.shape}")
        return out
    if not np.all(np.isfinite(p)):
        out.append(f"{tag}non-finite entry")
        return out
    neg = np.flatnonzero(p < 0)
    if neg.size:
        out.append(f"{tag}negative entry at index {int(neg[0])} ({p[neg[0]]:g})")
    s = float(p.sum())
    if abs(s - 1.0) > SUM_TOLERANCE:
        out.append(f"{tag}sum != 1 (got {s!r})")
    return out


def channel_diagnostics(matrix: np.ndarray, n_in: int, n_out: int, where: str = "channel") -> list:
    out = []
    m = np.asarray(matrix, dtype=float)
    if m.shape != (n_in, n_out):
        return [f"{where}: expected shape {(n_in, n_out)}, got {m.shape}"]
    for i in range(n_in):
        out.extend(distribution_diagnostics(m[i], n_out, where=f"{where} row {i}"))
    return out


def model_diagnostics(model: "JointModel") -> list:
    """Every invariant violation in the model, as human-readable strings."""
    out = []
    if model.prior.alphabet != model.channel.input:
        out.append("prior alphabet does not match channel input alphabet")
        return out
    joint = model.prior.probs[:, None] * model.channel.matrix
    s = float(joint.sum())
    if abs(s - 1.0) > SUM_TOLERANCE:
        out.append(f"joint sum != 1 (got {s!r})")
    return out


def validate_model(model: JointModel) -> list:
    """Diagnostics for a model; an empty list means every invariant holds.

    Construction already enforces the invariants, so for objects built
    through the public constructors this returns ``[]``.  It exists so that
    externally supplied raw data (see :func:`model_from_dict`) can be
    checked with the same rules.
    """
    return model_diagnostics(model)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------


def output_marginal(model: JointModel) -> FiniteDistribution:
    """Marginal distribution of the channel output under the prior."""
    p_y = model.prior.probs @ model.channel.matrix
    # guard against accumulated rounding in long rows
    p_y = np.clip(p_y, 0.0, None)
    p_y = p_y / p_y.sum()
    return FiniteDistribution(model.channel.output, p_y)


def posteriors(model: JointModel):
    """Bayes posteriors of X given each output symbol.

    Returns
    -------
    channel : Channel
        Channel from Y to X whose row y is ``p(x | y)``.
    unreachable : frozenset of int
        Output indices with marginal probability below the support
        threshold.  Their rows are filled with the prior as a placeholder
        and must be skipped by every consumer.
    """
    joint = model.joint()
    p_y = joint.sum(axis=0)
    rows = np.tile(model.prior.probs, (len(model.y), 1))
    reachable = p_y > SUPPORT_EPSILON
    rows[reachable] = (joint[:, reachable] / p_y[reachable]).T
    rows /= rows.sum(axis=1, keepdims=True)
    channel = Channel(model.channel.output, model.prior.alphabet, rows)
    unreachable = frozenset(np.flatnonzero(~reachable).tolist())
    return channel, unreachable


def compose_channels(first: Channel, second: Channel) -> Channel:
    """Markov composition: the channel from ``first.input`` to ``second.output``."""
    if first.output != second.input:
        raise ValidationError(
            "cannot compose: output alphabet %r != input alphabet %r"
            % (first.output.labels, second.input.labels)
        )
    product = first.matrix @ second.matrix
    product = np.clip(product, 0.0, None)
    product /= product.sum(axis=1, keepdims=True)
    return Channel(first.input, second.output, product)


def simplex_grid_size(dimension: int, resolution: int) -> int:
    """Number of probability vectors with entries on a 1/resolution grid."""
    return math.comb(resolution + dimension - 1, dimension - 1)


def simplex_grid_array(
    dimension: int, resolution: int, cap: int = DEFAULT_POINT_CAP
) -> np.ndarray:
    """All probability vectors whose entries are multiples of 1/resolution.

    Rows are sorted in ascending lexicographic order, which downstream
    channel scans rely on for deterministic tie-breaking.  Raises
    :class:`GridCapError` when the point count exceeds ``cap``.
    """
    if dimension < 1 or resolution < 1:
        raise ValidationError("dimension and resolution must be >= 1")
    count = simplex_grid_size(dimension, resolution)
    if count > cap:
        raise GridCapError(
            f"simplex grid needs {count} points but the cap is {cap}; "
            f"raise the cap to at least {count} or lower the resolution",
            required_cap=count,
        )
    if dimension == 1:
        return np.ones((1, 1))
    # integer compositions of `resolution` into `dimension` parts, lex order
    parts = np.zeros((count, dimension), dtype=np.int64)
    row = 0
    comp = [0] * (dimension - 1)

    def rec(pos: int, remaining: int):
        nonlocal row
        if pos == dimension - 1:
            parts[row, :-1] = comp
            parts[row, -1] = remaining
            row += 1
            return
        for k in range(remaining + 1):
            comp[pos] = k
            rec(pos + 1, remaining - k)
        comp[pos] = 0

    rec(0, resolution)
    return parts.astype(float) / float(resolution)


def enumerate_simplex_grid(
    dimension: int,
    resolution: int,
    alphabet: Optional[Alphabet] = None,
    cap: int = DEFAULT_POINT_CAP,
) -> Iterator[FiniteDistribution]:
    """Stream every quantized distribution on the simplex as a FiniteDistribution."""
    if alphabet is None:
        alphabet = Alphabet.of_size(dimension, prefix="s")
    elif len(alphabet) != dimension:
        raise ValidationError("alphabet size does not match dimension")
    for row in simplex_grid_array(dimension, resolution, cap=cap):
        yield FiniteDistribution(alphabet, row)


def erasure_channel(alphabet: Alphabet, keep: float, erased_label: str = "?") -> Channel:
    """Channel that reveals the input with probability ``keep`` and erases it otherwise.

    The output alphabet is the input alphabet plus one erasure symbol.
    Useful as an exactly-tunable disclosure family: most leakage measures
    respond linearly (Shannon information and mean-square gains both scale
    as ``keep`` times their value at full disclosure).
    """
    if not 0.0 <= keep <= 1.0:
        raise ValidationError("keep probability must lie in [0, 1]")
    n = len(alphabet)
    out = Alphabet(alphabet.labels + (erased_label,))
    rows = np.hstack([keep * np.eye(n), np.full((n, 1), 1.0 - keep)])
    return Channel(alphabet, out, rows)


# ---------------------------------------------------------------------------
# JSON model schema
# ---------------------------------------------------------------------------


def model_from_dict(data: dict) -> JointModel:
    """Parse the JSON model schema into a JointModel.

    Expected shape::

        {"x": {"labels": [...], "values": [...]?},
         "p_x": [...],
         "channel": {"output_labels": [...], "rows": [[...], ...]}}

    Any invariant violation raises :class:`ValidationError` carrying the
    full diagnostics.
    """
    try:
        x_spec = data["x"]
        labels = x_spec["labels"]
        values = x_spec.get("values")
        p_x = data["p_x"]
        ch = data["channel"]
        out_labels = ch["output_labels"]
        rows = np.asarray(ch["rows"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model document: missing {exc}") from exc

    problems = []
    problems += distribution_diagnostics(np.asarray(p_x, dtype=float), len(labels), "p_x")
    problems += channel_diagnostics(rows, len(labels), len(out_labels))
    if problems:
        raise ValidationError("; ".join(problems))
    x = Alphabet(tuple(labels), tuple(values) if values is not None else None)
    y = Alphabet(tuple(out_labels))
    return JointModel(FiniteDistribution(x, np.asarray(p_x, dtype=float)), Channel(x, y, rows))


def model_to_dict(model: JointModel) -> dict:
    doc = {
        "x": {"labels": list(model.x.labels)},
        "p_x": [float(v) for v in model.prior.probs],
        "channel": {
            "output_labels": list(model.y.labels),
            "rows": [[float(v) for v in row] for row in model.channel.matrix],
        },
    }
    if model.x.values is not None:
        doc["x"]["values"] = list(model.x.values)
    return doc


def load_model(path) -> JointModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def prior_from_dict(data: dict) -> FiniteDistribution:
    """Parse just the prior part of a model document (channel optional)."""
    try:
        x_spec = data["x"]
        labels = x_spec["labels"]
        values = x_spec.get("values")
        p_x = np.asarray(data["p_x"], dtype=float)
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed model document: missing {exc}") from exc
    problems = distribution_diagnostics(p_x, len(labels), "p_x")
    if problems:
        raise ValidationError("; ".join(problems))
    x = Alphabet(tuple(labels), tuple(values) if values is not None else None)
    return FiniteDistribution(x, p_x)


# Convenience constructors used throughout the test and verification suites.


def uniform(alphabet: Alphabet) -> FiniteDistribution:
    n = len(alphabet)
    return FiniteDistribution(alphabet, np.full(n, 1.0 / n))


def binary_symmetric_channel(alphabet: Alphabet, flip: float, output: Optional[Alphabet] = None) -> Channel:
    if len(alphabet) != 2:
        raise ValidationError("binary symmetric channel needs a binary alphabet")
    out = output if output is not None else alphabet
    m = np.array([[1.0 - flip, flip], [flip, 1.0 - flip]])
    return Channel(alphabet, out, m)
