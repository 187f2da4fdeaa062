"""Pure-numpy channel-scan kernel.

The hot loop of the package enumerates every channel whose rows lie on a
quantized simplex grid and tracks the feasible candidate with the smallest
objective.  This module is the fallback backend: it processes the
enumeration in vectorized chunks.  The compiled backend in ``_scan.pyx``
implements the identical contract; ``tests/test_kernels.py`` pins the two
to each other.

Conventions shared by both backends:

* ``grid_rows`` is (G, ny), rows sorted ascending-lexicographically; the
  channel with flat index k has row ``digits of k base G`` (most
  significant digit = input 0), so flat-index order is lexicographic order
  of the flattened channel and "first strict improvement wins" yields the
  lexicographically smallest tie-break.
* ``prior`` has strictly positive entries (callers restrict to the support
  first).
* infeasible-everywhere scans report index -1 and the minimum-leakage
  candidate instead.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND_NAME = "python"

# measure codes
M_SHANNON = 0
M_SIBSON = 1
M_SIBSON_INF = 2
M_ARIMOTO = 3
M_ARIMOTO_INF = 4
M_F_INFO = 5
M_F_LEAK_CHI2 = 6
M_F_LEAK_HELLINGER = 7
M_MMSE = 8
M_MAXCOST = 9
M_GAIN_AVG = 10
M_GAIN_MAX = 11

# generator codes for M_F_INFO
GEN_KL = 0
GEN_TV = 1
GEN_CHI2 = 2
GEN_HELLINGER = 3

# objective codes
O_EXPECTED = 0
O_POSTRISK = 1
O_POSTRISK_ALPHA = 2

_EPS = 1e-12
_CHUNK = 4096


def _digits(flat: np.ndarray, base: int, width: int) -> np.ndarray:
    out = np.empty((flat.size, width), dtype=np.int64)
    rem = flat.copy()
    for pos in range(width - 1, -1, -1):
        out[:, pos] = rem % base
        rem //= base
    return out


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    masked = np.where(p > _EPS, p, 1.0)
    return -np.sum(p * np.log(masked), axis=-1)


def _leakage_batch(joint, channels, prior, code, alpha, gen_code, x_values):
    """Leakage of each candidate channel in the batch, by measure code."""
    p_y = joint.sum(axis=1)  # (B, ny)
    if code == M_SHANNON:
        ref = prior[None, :, None] * p_y[:, None, :]
        mask = joint > _EPS
        ratio = np.where(mask, joint / np.where(mask, ref, 1.0), 1.0)
        return np.sum(np.where(mask, joint * np.log(ratio), 0.0), axis=(1, 2))
    if code == M_SIBSON:
        mixed = np.einsum("x,bxy->by", prior, channels**alpha)
        return alpha / (alpha - 1.0) * np.log(np.sum(mixed ** (1.0 / alpha), axis=1))
    if code == M_SIBSON_INF:
        return np.log(channels.max(axis=1).sum(axis=1))
    if code == M_ARIMOTO:
        h_prior = float(np.log(np.sum(prior**alpha)) / (1.0 - alpha))
        inner = np.sum(joint**alpha, axis=1) ** (1.0 / alpha)
        h_cond = alpha / (1.0 - alpha) * np.log(inner.sum(axis=1))
        return h_prior - h_cond
    if code == M_ARIMOTO_INF:
        return np.log(joint.max(axis=1).sum(axis=1) / prior.max())
    if code == M_F_INFO:
        ref = prior[None, :, None] * p_y[:, None, :]
        mask = ref > 0
        ratio = np.where(mask, joint / np.where(mask, ref, 1.0), 0.0)
        if gen_code == GEN_KL:
            vals = np.where(ratio > 0, ratio * np.log(np.where(ratio > 0, ratio, 1.0)), 0.0)
        elif gen_code == GEN_TV:
            vals = 0.5 * np.abs(ratio - 1.0)
        elif gen_code == GEN_CHI2:
            vals = (ratio - 1.0) ** 2
        else:
            vals = (np.sqrt(ratio) - 1.0) ** 2
        return np.sum(np.where(mask, ref * vals, 0.0), axis=(1, 2))
    if code == M_F_LEAK_CHI2:
        c = np.sum(joint**2 / prior[None, :, None], axis=1)
        return np.maximum(np.sum(np.sqrt(c), axis=1) ** 2 - 1.0, 0.0)
    if code == M_F_LEAK_HELLINGER:
        b = np.sum(np.sqrt(joint * prior[None, :, None]), axis=1)
        inner = np.sqrt(np.sum(b**2, axis=1))
        return np.maximum(2.0 - 2.0 * inner, 0.0)
    if code == M_MMSE:
        v = x_values
        var_x = float(prior @ v**2 - (prior @ v) ** 2)
        second = np.einsum("x,bxy->by", v**2, joint).sum(axis=1)
        first = np.einsum("x,bxy->by", v, joint)
        with np.errstate(divide="ignore", invalid="ignore"):
            mean_sq = np.where(p_y > _EPS, first**2 / np.where(p_y > _EPS, p_y, 1.0), 0.0)
        expected_cond_var = second - mean_sq.sum(axis=1)
        return np.maximum(var_x - expected_cond_var, 0.0)
    if code == M_MAXCOST:
        s = channels.min(axis=1).sum(axis=1)
        with np.errstate(divide="ignore"):
            return np.where(s > 0, -np.log(np.where(s > 0, s, 1.0)), np.inf)
    raise ValueError(f"unknown measure code {code}")


def _gain_leakage_batch(joint, p_y, eve_matrix, eve_prior_risk, maximal):
    risks = np.einsum("bxy,xa->bya", joint, eve_matrix).min(axis=2)  # (B, ny)
    if not maximal:
        return eve_prior_risk - risks.sum(axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        per_y = np.where(p_y > _EPS, risks / np.where(p_y > _EPS, p_y, 1.0), np.inf)
    return eve_prior_risk - per_y.min(axis=1)


def _objective_batch(joint, p_y, code, matrix, alpha):
    if code == O_EXPECTED:
        return np.einsum("bxy,xy->b", joint, matrix)
    if code == O_POSTRISK:
        return np.einsum("bxy,xa->bya", joint, matrix).min(axis=2).sum(axis=1)
    if code == O_POSTRISK_ALPHA:
        if alpha == 1.0:
            mask = joint > _EPS
            cond = np.where(mask, joint / np.where(p_y[:, None, :] > _EPS, p_y[:, None, :], 1.0), 1.0)
            return -np.sum(np.where(mask, joint * np.log(cond), 0.0), axis=(1, 2))
        if math.isinf(alpha):
            return 1.0 - joint.max(axis=1).sum(axis=1)
        attained = np.sum(np.sum(joint**alpha, axis=1) ** (1.0 / alpha), axis=1)
        return alpha / (alpha - 1.0) * (1.0 - attained)
    raise ValueError(f"unknown objective code {code}")


def scan_channels(
    grid_rows: np.ndarray,
    n_inputs: int,
    prior: np.ndarray,
    objective_code: int,
    obj_matrix: np.ndarray,
    obj_alpha: float,
    measure_code: int,
    m_alpha: float,
    gen_code: int,
    x_values: np.ndarray,
    eve_matrix: np.ndarray,
    eve_prior_risk: float,
    budget: float,
    feas_tol: float,
):
    """Scan every candidate channel; see the module docstring for the contract.

    Returns a tuple ``(best_index, best_objective, best_leakage,
    n_feasible, minleak_index, minleak_value, minleak_objective, total)``.
    """
    grid_rows = np.ascontiguousarray(grid_rows, dtype=float)
    prior = np.ascontiguousarray(prior, dtype=float)
    g = grid_rows.shape[0]
    total = g**n_inputs

    best_idx = -1
    best_obj = math.inf
    best_leak = math.inf
    n_feasible = 0
    minleak_idx = -1
    minleak_val = math.inf
    minleak_obj = math.inf

    for start in range(0, total, _CHUNK):
        flat = np.arange(start, min(start + _CHUNK, total), dtype=np.int64)
        rows_idx = _digits(flat, g, n_inputs)
        channels = grid_rows[rows_idx]  # (B, nx, ny)
        joint = prior[None, :, None] * channels
        p_y = joint.sum(axis=1)
        if measure_code in (M_GAIN_AVG, M_GAIN_MAX):
            leak = _gain_leakage_batch(
                joint, p_y, eve_matrix, eve_prior_risk, measure_code == M_GAIN_MAX
            )
        else:
            leak = _leakage_batch(joint, channels, prior, measure_code, m_alpha, gen_code, x_values)
        obj = _objective_batch(joint, p_y, objective_code, obj_matrix, obj_alpha)

        feasible = leak <= budget + feas_tol
        n_feasible += int(feasible.sum())
        if np.any(feasible):
            objs = np.where(feasible, obj, math.inf)
            local = int(np.argmin(objs))
            if objs[local] < best_obj:
                best_obj = float(objs[local])
                best_leak = float(leak[local])
                best_idx = int(flat[local])
        local_min = int(np.argmin(leak))
        if leak[local_min] < minleak_val:
            minleak_val = float(leak[local_min])
            minleak_obj = float(obj[local_min])
            minleak_idx = int(flat[local_min])

    return (
        best_idx,
        best_obj,
        best_leak,
        n_feasible,
        minleak_idx,
        minleak_val,
        minleak_obj,
        total,
    )
