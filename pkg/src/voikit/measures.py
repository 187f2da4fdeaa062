r"""Information-leakage measures over finite joint models.

Every measure is a functional of (prior, channel).  The catalogue:

==================== ===========================================================
shannon_mi            H(X) - H(X|Y)
arimoto_mi            H_a(X) - H_a(X|Y)   (Arimoto conditional entropy)
sibson_mi             min_q D_a(p_XY || p_X q)  -- evaluated in closed form
csiszar_mi            min_q E_X[D_a(p_{Y|X} || q)]  -- inner minimization
f_information         D_f(p_XY || p_X p_Y)
f_leakage             min_q D_f(p_XY || p_X q)
maximal_leakage       log sum_y max_x p(y|x)  (worst-case guessing advantage)
alpha_leakage         identical to arimoto_mi (same code path)
maximal_alpha_leakage sup over priors on supp(p_X) of sibson_mi
mmse_leakage          V(X) - E_Y[V(X|Y)]        (numeric X required)
ms_leakage            log V(X) / E_Y[V(X|Y)]    (numeric X required)
variance_leakage      -log(1 - rho_m) or -log(1 - rho_m^2), rho_m = maximal corr.
maximal_cost_leakage  -log sum_y min_{x in supp} p(y|x)
==================== ===========================================================

All values are in nats.  Alpha-parameterized kinds take an ``order`` in
(0, inf]; the order-1 and order-infinity cases are explicit code paths,
not numerical limits.  Infinite leakage is returned as ``math.inf`` and
propagates; it is never replaced by a large finite sentinel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
from scipy.optimize import linprog

from .core import (
    SUPPORT_EPSILON,
    Alphabet,
    Channel,
    FiniteDistribution,
    JointModel,
    simplex_grid_array,
)
from .errors import SolverError, ValidationError

KINDS = (
    "shannon_mi",
    "arimoto_mi",
    "sibson_mi",
    "csiszar_mi",
    "f_information",
    "f_leakage",
    "maximal_leakage",
    "alpha_leakage",
    "maximal_alpha_leakage",
    "mmse_leakage",
    "ms_leakage",
    "variance_leakage",
    "maximal_cost_leakage",
)

ALPHA_KINDS = frozenset(
    {"arimoto_mi", "sibson_mi", "csiszar_mi", "alpha_leakage", "maximal_alpha_leakage"}
)
F_KINDS = frozenset({"f_information", "f_leakage"})
NUMERIC_X_KINDS = frozenset({"mmse_leakage", "ms_leakage"})

_NEG_TOL = 1e-10


# ---------------------------------------------------------------------------
# Convex generators for f-divergences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConvexGenerator:
    """A convex function f with f(1) = 0, defining an f-divergence.

    Only whitelisted generators are available: the leakage axioms rest on
    convexity, which cannot be verified from an arbitrary callable.
    """

    name: str
    f: Callable[[np.ndarray], np.ndarray]
    fprime: Callable[[np.ndarray], np.ndarray]  # subgradient is fine


def _f_kl(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = t[pos] * np.log(t[pos])
    return out


def _f_kl_prime(t):
    t = np.asarray(t, dtype=float)
    return np.log(np.maximum(t, 1e-300)) + 1.0


GENERATORS = {
    "kl": ConvexGenerator("kl", _f_kl, _f_kl_prime),
    "total_variation": ConvexGenerator(
        "total_variation",
        lambda t: 0.5 * np.abs(np.asarray(t, dtype=float) - 1.0),
        lambda t: 0.5 * np.sign(np.asarray(t, dtype=float) - 1.0),
    ),
    "chi_squared": ConvexGenerator(
        "chi_squared",
        lambda t: (np.asarray(t, dtype=float) - 1.0) ** 2,
        lambda t: 2.0 * (np.asarray(t, dtype=float) - 1.0),
    ),
    "hellinger": ConvexGenerator(
        "hellinger",
        lambda t: (np.sqrt(np.asarray(t, dtype=float)) - 1.0) ** 2,
        lambda t: 1.0 - 1.0 / np.sqrt(np.maximum(np.asarray(t, dtype=float), 1e-300)),
    ),
}


def get_generator(name: str) -> ConvexGenerator:
    try:
        return GENERATORS[name]
    except KeyError:
        raise ValidationError(
            f"unknown generator {name!r}; available: {sorted(GENERATORS)}"
        ) from None


# ---------------------------------------------------------------------------
# Measure descriptor and result types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LeakageMeasure:
    """Selector for one leakage measure, with its order/generator parameters."""

    kind: str
    order: Optional[float] = None
    generator: Optional[str] = None
    variance_formula: str = "paper"

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown leakage kind {self.kind!r}")
        if self.kind in ALPHA_KINDS:
            if self.order is None:
                raise ValidationError(f"{self.kind} requires an order")
            order = float(self.order)
            if not (order > 0):
                raise ValidationError("order must lie in (0, inf]")
            if self.kind == "csiszar_mi" and math.isinf(order):
                raise ValidationError("csiszar_mi supports finite orders only")
            if self.kind == "maximal_alpha_leakage" and order < 1:
                raise ValidationError(
                    "maximal_alpha_leakage is defined for orders >= 1"
                )
            object.__setattr__(self, "order", order)
        elif self.order is not None:
            raise ValidationError(f"{self.kind} does not take an order")
        if self.kind in F_KINDS:
            if self.generator is None:
                raise ValidationError(f"{self.kind} requires a generator")
            gen = get_generator(self.generator)
            if abs(float(gen.f(np.array([1.0]))[0])) > 1e-12:
                raise ValidationError(f"generator {self.generator!r} has f(1) != 0")
        elif self.generator is not None:
            raise ValidationError(f"{self.kind} does not take a generator")
        if self.variance_formula not in ("paper", "squared"):
            raise ValidationError("variance_formula must be 'paper' or 'squared'")

    def describe(self) -> str:
        bits = [self.kind]
        if self.order is not None:
            bits.append("inf" if math.isinf(self.order) else f"{self.order:g}")
        if self.generator is not None:
            bits.append(self.generator)
        if self.kind == "variance_leakage" and self.variance_formula != "paper":
            bits.append(self.variance_formula)
        return ":".join(bits)

    @staticmethod
    def from_dict(data: dict) -> "LeakageMeasure":
        if "kind" not in data:
            raise ValidationError("measure descriptor needs a 'kind'")
        order = data.get("order")
        if isinstance(order, str):
            order = math.inf if order in ("inf", "infinity") else float(order)
        return LeakageMeasure(
            kind=data["kind"],
            order=order,
            generator=data.get("generator"),
            variance_formula=data.get("variance_formula", "paper"),
        )

    def to_dict(self) -> dict:
        out = {"kind": self.kind}
        if self.order is not None:
            out["order"] = "inf" if math.isinf(self.order) else self.order
        if self.generator is not None:
            out["generator"] = self.generator
        if self.kind == "variance_leakage":
            out["variance_formula"] = self.variance_formula
        return out


@dataclass(frozen=True)
class LeakageResult:
    """One evaluated leakage value plus solver provenance.

    ``upper_bound_K`` is the largest value the measure can take at this
    prior over all channels (infinite for the unbounded kinds).
    """

    value: float
    upper_bound_K: float
    method: str
    iterations: int = 0
    tolerance: float = 0.0
    flags: tuple = ()

    def __post_init__(self):
        v = float(self.value)
        if -_NEG_TOL <= v < 0.0:
            v = 0.0
        if v < 0.0:
            raise SolverError(
                f"leakage value {v!r} is negative beyond tolerance {_NEG_TOL}"
            )
        object.__setattr__(self, "value", v)
        if math.isfinite(self.upper_bound_K) and v > self.upper_bound_K + 1e-8:
            raise SolverError(
                f"leakage value {v!r} exceeds its upper bound "
                f"{self.upper_bound_K!r} beyond tolerance"
            )


# ---------------------------------------------------------------------------
# Entropies and divergences
# ---------------------------------------------------------------------------


def renyi_entropy(dist: FiniteDistribution, order: float) -> float:
    """Renyi entropy of the given order, in nats.

    Order 1 is Shannon entropy and order infinity is min-entropy, both as
    explicit continuity extensions.
    """
    return _renyi_entropy_arr(dist.probs, order)


def _renyi_entropy_arr(p: np.ndarray, order: float) -> float:
    order = float(order)
    if order <= 0:
        raise ValidationError("order must lie in (0, inf]")
    p = p[p > SUPPORT_EPSILON]
    if order == 1.0:
        return float(-np.sum(p * np.log(p)))
    if math.isinf(order):
        return float(-np.log(p.max()))
    return float(np.log(np.sum(p**order)) / (1.0 - order))


def arimoto_conditional_entropy(model: JointModel, order: float) -> float:
    """Arimoto's conditional entropy of X given the channel output."""
    order = float(order)
    if order <= 0:
        raise ValidationError("order must lie in (0, inf]")
    joint = model.joint()
    if order == 1.0:
        p_y = joint.sum(axis=0)
        mask = joint > SUPPORT_EPSILON
        cond = joint / np.where(p_y[None, :] > SUPPORT_EPSILON, p_y[None, :], 1.0)
        return float(-np.sum(joint[mask] * np.log(cond[mask])))
    if math.isinf(order):
        return float(-np.log(joint.max(axis=0).sum()))
    inner = np.sum(joint**order, axis=0) ** (1.0 / order)
    return float(order / (1.0 - order) * np.log(inner.sum()))


def renyi_divergence(p: np.ndarray, q: np.ndarray, order: float) -> float:
    """Renyi divergence D_a(p || q) between two finite distributions."""
    order = float(order)
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if order == 1.0:
        mask = p > SUPPORT_EPSILON
        if np.any(q[mask] <= 0):
            return math.inf
        return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))
    if math.isinf(order):
        mask = p > SUPPORT_EPSILON
        if np.any(q[mask] <= 0):
            return math.inf
        return float(np.log(np.max(p[mask] / q[mask])))
    if order > 1 and np.any((p > SUPPORT_EPSILON) & (q <= 0)):
        return math.inf
    mask = p > SUPPORT_EPSILON
    s = float(np.sum(p[mask] ** order * q[mask] ** (1.0 - order)))
    return np.log(s) / (order - 1.0)


# ---------------------------------------------------------------------------
# Closed-form measures
# ---------------------------------------------------------------------------


def shannon_mi(model: JointModel) -> float:
    return _shannon_value(model.prior.probs, model.channel.matrix)


def _shannon_value(prior: np.ndarray, matrix: np.ndarray) -> float:
    h_x = _renyi_entropy_arr(prior, 1.0)
    joint = prior[:, None] * matrix
    p_y = joint.sum(axis=0)
    mask = joint > SUPPORT_EPSILON
    h_xy = -float(np.sum(joint[mask] * np.log(joint[mask])))
    h_y = -float(np.sum(p_y[p_y > SUPPORT_EPSILON] * np.log(p_y[p_y > SUPPORT_EPSILON])))
    # H(X) - H(X|Y) with H(X|Y) = H(X,Y) - H(Y)
    return h_x - (h_xy - h_y)


def arimoto_mi(model: JointModel, order: float) -> float:
    order = float(order)
    if order == 1.0:
        return shannon_mi(model)
    return renyi_entropy(model.prior, order) - arimoto_conditional_entropy(model, order)


def sibson_mi(model: JointModel, order: float) -> float:
    return _sibson_value(model.prior.probs, model.channel.matrix, order)


def _sibson_value(prior: np.ndarray, matrix: np.ndarray, order: float) -> float:
    order = float(order)
    if order <= 0:
        raise ValidationError("order must lie in (0, inf]")
    if order == 1.0:
        return _shannon_value(prior, matrix)
    supp = prior > SUPPORT_EPSILON
    if math.isinf(order):
        return float(np.log(matrix[supp].max(axis=0).sum()))
    mixed = prior[supp] @ (matrix[supp] ** order)
    return float(order / (order - 1.0) * np.log(np.sum(mixed ** (1.0 / order))))


def maximal_leakage(model: JointModel) -> float:
    """Worst-case log guessing advantage; the order-infinity Sibson value."""
    return _sibson_value(model.prior.probs, model.channel.matrix, math.inf)


def maximal_cost_leakage(model: JointModel) -> float:
    supp = model.prior.probs > SUPPORT_EPSILON
    total = float(model.channel.matrix[supp].min(axis=0).sum())
    if total <= 0.0:
        return math.inf
    return -math.log(total)


def f_information(model: JointModel, generator: str) -> float:
    gen = get_generator(generator)
    return _f_information_value(model.prior.probs, model.channel.matrix, gen)


def _f_information_value(prior: np.ndarray, matrix: np.ndarray, gen: ConvexGenerator) -> float:
    joint = prior[:, None] * matrix
    p_y = joint.sum(axis=0)
    ref = prior[:, None] * p_y[None, :]
    mask = ref > 0
    ratio = np.zeros_like(joint)
    ratio[mask] = joint[mask] / ref[mask]
    return float(np.sum(ref[mask] * gen.f(ratio[mask])))


# ---------------------------------------------------------------------------
# Inner minimizations over the output simplex
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InnerMinResult:
    q: np.ndarray
    value: float
    iterations: int
    converged: bool
    method: str


def _eg_minimize(value_and_grad, q0, tol=1e-13, max_iterations=4000):
    """Exponentiated-gradient descent on the simplex with step halving.

    Returns (q, value, iterations, converged).  Only improving steps are
    accepted, so the value sequence is non-increasing from the start point.
    """
    q = np.asarray(q0, dtype=float)
    q = np.maximum(q, 1e-15)
    q = q / q.sum()
    value, grad = value_and_grad(q)
    step = 1.0
    iterations = 0
    converged = False
    while iterations < max_iterations:
        iterations += 1
        centered = grad - grad @ q  # remove the component along the constraint
        scale = np.max(np.abs(centered)) or 1.0
        improved = False
        trial_step = step
        for _ in range(40):
            z = -trial_step * centered / scale
            z -= z.max()
            q_new = q * np.exp(z)
            q_new /= q_new.sum()
            v_new, g_new = value_and_grad(q_new)
            if v_new < value:
                improved = True
                break
            trial_step *= 0.5
        if not improved:
            converged = True
            break
        delta = value - v_new
        q, value, grad = q_new, v_new, g_new
        step = min(trial_step * 2.0, 1e6)
        if delta < tol * max(1.0, abs(value)):
            converged = True
            break
    return q, float(value), iterations, converged


def _inner_objective_arrays(prior: np.ndarray, matrix: np.ndarray, objective) -> Callable:
    """Build value-and-gradient callable for one of the two inner problems."""
    kind = objective[0]
    supp = prior > SUPPORT_EPSILON
    p = prior[supp]
    w = matrix[supp]

    if kind == "csiszar":
        order = float(objective[1])
        if not (0 < order < math.inf):
            raise ValidationError("csiszar inner minimization needs order in (0, inf)")
        if order == 1.0:

            def value_and_grad(q):
                qs = np.maximum(q, 1e-300)
                mask = w > SUPPORT_EPSILON
                val = float(np.sum((p[:, None] * w)[mask] * np.log((w / qs[None, :])[mask])))
                grad = -(p @ (w / qs[None, :]))
                return val, grad

        else:
            w_a = w**order

            def value_and_grad(q):
                qs = np.maximum(q, 1e-300)
                s = w_a @ (qs ** (1.0 - order))
                val = float(np.sum(p * np.log(s)) / (order - 1.0))
                grad = -((p / s) @ w_a) * qs ** (-order)
                return val, grad

        return value_and_grad

    if kind == "f_leakage":
        gen = get_generator(objective[1])

        def value_and_grad(q):
            qs = np.maximum(q, 1e-300)
            ref = p[:, None] * qs[None, :]
            ratio = (p[:, None] * w) / ref
            val = float(np.sum(ref * gen.f(ratio)))
            grad = p @ (gen.f(ratio) - ratio * gen.fprime(ratio))
            return val, grad

        return value_and_grad

    raise ValidationError(f"unknown inner objective {kind!r}")


def inner_min_reference(model: JointModel, objective, tol=1e-13, max_iterations=4000) -> InnerMinResult:
    """Reference solver for the inner minimization over output distributions.

    ``objective`` is ``("csiszar", order)`` or ``("f_leakage", generator)``.
    Multiplicative updates start from the output marginal, so the returned
    value never exceeds the objective at q = p_Y.  When the updates fail to
    converge and the output alphabet is small (|Y| <= 4), a quantized grid
    sweep re-seeds the search; otherwise the best iterate is returned with
    ``converged=False``.
    """
    return _inner_min_arrays(
        model.prior.probs, model.channel.matrix, objective, tol=tol, max_iterations=max_iterations
    )


def _inner_min_arrays(prior, matrix, objective, tol=1e-13, max_iterations=4000) -> InnerMinResult:
    value_and_grad = _inner_objective_arrays(prior, matrix, objective)
    p_y = prior @ matrix
    q, value, iterations, converged = _eg_minimize(
        value_and_grad, p_y, tol=tol, max_iterations=max_iterations
    )
    method = "inner_minimization"
    n_y = matrix.shape[1]
    if not converged and n_y <= 4:
        grid = simplex_grid_array(n_y, 160)
        vals = np.array([value_and_grad(row)[0] for row in grid])
        best = int(np.argmin(vals))
        q2, v2, it2, conv2 = _eg_minimize(
            value_and_grad, np.maximum(grid[best], 1e-9), tol=tol, max_iterations=max_iterations
        )
        iterations += it2 + len(grid)
        method = "grid"
        if v2 < value:
            q, value, converged = q2, v2, conv2
    return InnerMinResult(q=q, value=float(value), iterations=iterations, converged=converged, method=method)


def csiszar_mi(model: JointModel, order: float) -> float:
    # solved numerically even at order 1; equality with Shannon MI there is
    # checked by the test suites rather than wired in
    return inner_min_reference(model, ("csiszar", float(order))).value


def _csiszar_value(prior: np.ndarray, matrix: np.ndarray, order: float) -> float:
    return _inner_min_arrays(prior, matrix, ("csiszar", float(order))).value


def _f_leakage_tv_lp(prior: np.ndarray, matrix: np.ndarray):
    """Exact total-variation inner minimization as a linear program."""
    supp = prior > SUPPORT_EPSILON
    p = prior[supp]
    joint = p[:, None] * matrix[supp]
    nx, ny = joint.shape
    n_var = ny + nx * ny  # q then t
    c = np.zeros(n_var)
    c[ny:] = 0.5
    rows = []
    rhs = []
    for i in range(nx):
        for j in range(ny):
            t_idx = ny + i * ny + j
            row = np.zeros(n_var)
            row[j] = -p[i]
            row[t_idx] = -1.0
            rows.append(row)
            rhs.append(-joint[i, j])  # J - p q <= t
            row = np.zeros(n_var)
            row[j] = p[i]
            row[t_idx] = -1.0
            rows.append(row)
            rhs.append(joint[i, j])  # p q - J <= t
    a_eq = np.zeros((1, n_var))
    a_eq[0, :ny] = 1.0
    res = linprog(
        c,
        A_ub=np.array(rows),
        b_ub=np.array(rhs),
        A_eq=a_eq,
        b_eq=np.array([1.0]),
        bounds=[(0, None)] * n_var,
        method="highs",
    )
    if not res.success:
        raise SolverError(f"total-variation inner LP failed: {res.message}")
    return res.x[:ny], float(res.fun)


def f_leakage(model: JointModel, generator: str) -> float:
    return _f_leakage_value(model.prior.probs, model.channel.matrix, generator, model)


def _f_leakage_value(prior, matrix, generator, model=None) -> float:
    supp = prior > SUPPORT_EPSILON
    p = prior[supp]
    joint = p[:, None] * matrix[supp]
    if generator == "kl":
        # the minimizing q is the output marginal, collapsing to Shannon MI
        return _shannon_value(prior, matrix)
    if generator == "chi_squared":
        c = (joint**2 / p[:, None]).sum(axis=0)
        return max(0.0, float(np.sum(np.sqrt(c)) ** 2 - 1.0))
    if generator == "hellinger":
        b = np.sqrt(joint * p[:, None]).sum(axis=0)
        return max(0.0, float(2.0 - 2.0 * math.sqrt(float(np.sum(b**2)))))
    if generator == "total_variation":
        _, value = _f_leakage_tv_lp(prior, matrix)
        return max(0.0, value)
    raise ValidationError(f"unknown generator {generator!r}")


# ---------------------------------------------------------------------------
# Correlation- and variance-based measures
# ---------------------------------------------------------------------------


def _maximal_correlation_info(model: JointModel):
    joint = model.joint()
    p_x = model.prior.probs
    p_y = joint.sum(axis=0)
    sx = np.flatnonzero(p_x > SUPPORT_EPSILON)
    sy = np.flatnonzero(p_y > SUPPORT_EPSILON)
    if sx.size <= 1 or sy.size <= 1:
        return 0.0, True
    q = joint[np.ix_(sx, sy)] / np.sqrt(np.outer(p_x[sx], p_y[sy]))
    singular = np.linalg.svd(q, compute_uv=False)
    rho = float(singular[1]) if singular.size > 1 else 0.0
    return float(np.clip(rho, 0.0, 1.0)), False


def maximal_correlation(model: JointModel) -> float:
    """Hirschfeld-Gebelein-Renyi maximal correlation, via the SVD of
    joint(x,y)/sqrt(p(x)p(y)) restricted to the support."""
    rho, _ = _maximal_correlation_info(model)
    return rho


def variance_leakage(model: JointModel, formula: str = "paper") -> float:
    rho, degenerate = _maximal_correlation_info(model)
    if degenerate:
        return 0.0
    r = rho if formula == "paper" else rho**2
    if r >= 1.0:
        return math.inf
    return -math.log1p(-r)


def _posterior_variance_terms(model: JointModel):
    values = model.x.numeric
    joint = model.joint()
    p_y = joint.sum(axis=0)
    reachable = p_y > SUPPORT_EPSILON
    means = np.zeros_like(p_y)
    seconds = np.zeros_like(p_y)
    means[reachable] = (values @ joint[:, reachable]) / p_y[reachable]
    seconds[reachable] = (values**2 @ joint[:, reachable]) / p_y[reachable]
    cond_var = np.clip(seconds - means**2, 0.0, None)
    return p_y, reachable, means, cond_var


def mmse_leakage(model: JointModel) -> float:
    """Reduction in minimum mean squared estimation error from observing Y."""
    var_x = model.prior.variance()
    p_y, reachable, _, cond_var = _posterior_variance_terms(model)
    expected = float(p_y[reachable] @ cond_var[reachable])
    return max(0.0, var_x - expected)


def ms_leakage(model: JointModel) -> float:
    var_x = model.prior.variance()
    p_y, reachable, _, cond_var = _posterior_variance_terms(model)
    expected = float(p_y[reachable] @ cond_var[reachable])
    if expected <= 0.0:
        return math.inf
    if var_x <= 0.0:
        return 0.0
    return max(0.0, math.log(var_x / expected))


# ---------------------------------------------------------------------------
# Maximal alpha-leakage (grid supremum over priors on the support)
# ---------------------------------------------------------------------------


def maximal_alpha_leakage(model: JointModel, order: float, resolution: int = 120):
    """Supremum over priors on supp(p_X) of the Sibson value of the channel.

    Order 1 collapses to Shannon MI and order infinity to maximal leakage,
    both exact; intermediate orders are maximized on a quantized prior grid
    and flagged grid-resolution-limited.
    """
    order = float(order)
    if order < 1:
        raise ValidationError("maximal_alpha_leakage is defined for orders >= 1")
    if order == 1.0:
        return shannon_mi(model), "closed_form", ()
    if math.isinf(order):
        return maximal_leakage(model), "closed_form", ()
    supp = model.prior.probs > SUPPORT_EPSILON
    w = model.channel.matrix[supp]
    grid = simplex_grid_array(int(supp.sum()), resolution)
    mixed = grid @ (w**order)  # (n_grid, ny)
    vals = order / (order - 1.0) * np.log(np.sum(mixed ** (1.0 / order), axis=1))
    return float(vals.max()), "grid", ("grid_resolution_limited",)


# ---------------------------------------------------------------------------
# Upper bounds K(X) and the dispatcher
# ---------------------------------------------------------------------------


def upper_bound_K(measure: LeakageMeasure, prior: FiniteDistribution) -> float:
    """Largest value the measure can reach at this prior, over all channels.

    Channels factor through the identity, so the data-processing property
    makes the identity channel the extremal one; each bound below is the
    measure evaluated there.  The logarithmic-ratio kinds diverge at the
    identity channel and are unbounded.
    """
    p = prior.probs[prior.probs > SUPPORT_EPSILON]
    kind = measure.kind
    if kind == "shannon_mi":
        return float(-np.sum(p * np.log(p)))
    if kind in ("arimoto_mi", "alpha_leakage"):
        return _renyi_entropy_arr(prior.probs, measure.order)
    if kind == "sibson_mi":
        inv = math.inf if measure.order == 0 else 1.0 / measure.order
        if math.isinf(measure.order):
            return math.log(p.size)
        return _renyi_entropy_arr(prior.probs, inv)
    if kind == "csiszar_mi":
        return float(-np.sum(p * np.log(p)))
    if kind in ("f_information", "f_leakage"):
        gen = get_generator(measure.generator)
        f0 = float(gen.f(np.array([0.0]))[0])
        diag = p * gen.f(1.0 / p)
        return float(np.sum(p * (diag + (1.0 - p) * f0)))
    if kind == "maximal_leakage":
        return math.log(p.size)
    if kind == "maximal_alpha_leakage":
        if measure.order == 1.0:
            return float(-np.sum(p * np.log(p)))
        return math.log(p.size)
    if kind == "mmse_leakage":
        return prior.variance()
    return math.inf


def evaluate_leakage(
    measure: LeakageMeasure, model: JointModel, resolution: int = 120
) -> LeakageResult:
    """Evaluate one leakage measure on a model, with provenance metadata.

    Closed forms are used wherever they exist; the Csiszar and f-leakage
    kinds run inner minimizations (the total-variation generator is solved
    exactly as a linear program).
    """
    kind = measure.kind
    if kind in NUMERIC_X_KINDS and model.x.values is None:
        raise ValidationError(f"{kind} requires numeric values on the X alphabet")
    k_bound = upper_bound_K(measure, model.prior)
    method = "closed_form"
    iterations = 0
    tolerance = 0.0
    flags = ()

    if kind == "shannon_mi":
        value = shannon_mi(model)
    elif kind in ("arimoto_mi", "alpha_leakage"):
        value = arimoto_mi(model, measure.order)
    elif kind == "sibson_mi":
        value = sibson_mi(model, measure.order)
    elif kind == "csiszar_mi":
        res = inner_min_reference(model, ("csiszar", measure.order))
        value = res.value
        method = "inner_minimization"
        iterations = res.iterations
        tolerance = 1e-10
        if not res.converged:
            flags = ("not_converged",)
    elif kind == "f_information":
        value = f_information(model, measure.generator)
    elif kind == "f_leakage":
        value = f_leakage(model, measure.generator)
        method = (
            "inner_minimization" if measure.generator == "total_variation" else "closed_form"
        )
        tolerance = 1e-9 if measure.generator == "total_variation" else 0.0
    elif kind == "maximal_leakage":
        value = maximal_leakage(model)
    elif kind == "maximal_alpha_leakage":
        value, method, flags = maximal_alpha_leakage(model, measure.order, resolution)
    elif kind == "mmse_leakage":
        value = mmse_leakage(model)
    elif kind == "ms_leakage":
        value = ms_leakage(model)
    elif kind == "variance_leakage":
        rho, degenerate = _maximal_correlation_info(model)
        r = rho if measure.variance_formula == "paper" else rho**2
        value = math.inf if r >= 1.0 else -math.log1p(-r)
        method = "svd"
        if degenerate:
            flags = ("degenerate_marginal",)
    elif kind == "maximal_cost_leakage":
        value = maximal_cost_leakage(model)
    else:  # pragma: no cover - guarded by LeakageMeasure validation
        raise ValidationError(f"unknown kind {kind!r}")

    if math.isinf(value):
        flags = flags + ("infinite",)
    return LeakageResult(
        value=value,
        upper_bound_K=k_bound,
        method=method,
        iterations=iterations,
        tolerance=tolerance,
        flags=flags,
    )


def leakage_value(measure: LeakageMeasure, model: JointModel, resolution: int = 120) -> float:
    """Just the number, for callers that do not need provenance."""
    return evaluate_leakage(measure, model, resolution=resolution).value
