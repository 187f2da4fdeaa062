# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled channel-scan kernel.

Implements the exact contract of ``fallback.scan_channels`` (see that
module for the conventions) with the enumeration loop in C.  Per-row
transcendentals (powers, logs, roots) are precomputed once per grid row,
so the inner loop touches each candidate channel with additions,
multiplications and at most a handful of log calls.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, fabs, log, pow, sqrt

cnp.import_array()

BACKEND_NAME = "cython"

cdef double EPS = 1e-12

cdef int M_SHANNON = 0
cdef int M_SIBSON = 1
cdef int M_SIBSON_INF = 2
cdef int M_ARIMOTO = 3
cdef int M_ARIMOTO_INF = 4
cdef int M_F_INFO = 5
cdef int M_F_LEAK_CHI2 = 6
cdef int M_F_LEAK_HELLINGER = 7
cdef int M_MMSE = 8
cdef int M_MAXCOST = 9
cdef int M_GAIN_AVG = 10
cdef int M_GAIN_MAX = 11

cdef int GEN_KL = 0
cdef int GEN_TV = 1
cdef int GEN_CHI2 = 2
cdef int GEN_HELLINGER = 3

cdef int O_EXPECTED = 0
cdef int O_POSTRISK = 1
cdef int O_POSTRISK_ALPHA = 2


cdef inline double _gen_f(int gen_code, double t) nogil:
    if gen_code == GEN_KL:
        return t * log(t) if t > 0 else 0.0
    if gen_code == GEN_TV:
        return 0.5 * fabs(t - 1.0)
    if gen_code == GEN_CHI2:
        return (t - 1.0) * (t - 1.0)
    return (sqrt(t) - 1.0) * (sqrt(t) - 1.0)


def scan_channels(
    const double[:, ::1] grid_rows,
    int n_inputs,
    const double[::1] prior,
    int objective_code,
    const double[:, ::1] obj_matrix,
    double obj_alpha,
    int measure_code,
    double m_alpha,
    int gen_code,
    const double[::1] x_values,
    const double[:, ::1] eve_matrix,
    double eve_prior_risk,
    double budget,
    double feas_tol,
):
    cdef Py_ssize_t g = grid_rows.shape[0]
    cdef Py_ssize_t ny = grid_rows.shape[1]
    cdef Py_ssize_t nx = n_inputs
    cdef Py_ssize_t x, y, a, pos
    cdef long long total = 1
    for x in range(nx):
        total *= g

    cdef Py_ssize_t n_act_obj = obj_matrix.shape[1]
    cdef Py_ssize_t n_act_eve = eve_matrix.shape[1]

    # per-grid-row transcendental tables
    rows_arr = np.asarray(grid_rows)
    cdef double[:, ::1] pw_m = np.ones((1, 1))
    cdef double[:, ::1] pw_o = np.ones((1, 1))
    cdef double[:, ::1] lg = np.zeros((1, 1))
    cdef double[:, ::1] sq = np.zeros((1, 1))
    cdef double[:, ::1] sr = np.zeros((1, 1))
    cdef bint need_lg = (
        measure_code == M_SHANNON
        or measure_code == M_F_INFO
        or (objective_code == O_POSTRISK_ALPHA and obj_alpha == 1.0)
    )
    if measure_code == M_SIBSON or measure_code == M_ARIMOTO:
        pw_m = np.power(rows_arr, m_alpha)
    if objective_code == O_POSTRISK_ALPHA and obj_alpha != 1.0 and obj_alpha != INFINITY:
        pw_o = np.power(rows_arr, obj_alpha)
    if need_lg:
        with np.errstate(divide="ignore"):
            lg = np.where(rows_arr > EPS, np.log(np.maximum(rows_arr, 1e-300)), 0.0)
    if measure_code == M_F_LEAK_CHI2:
        sq = rows_arr * rows_arr
    if measure_code == M_F_LEAK_HELLINGER:
        sr = np.sqrt(rows_arr)

    # measure-specific constants
    cdef double h_prior_alpha = 0.0
    cdef double prior_max = 0.0
    cdef double var_x = 0.0
    cdef double mean_x = 0.0
    if measure_code == M_ARIMOTO:
        h_prior_alpha = log(np.sum(np.asarray(prior) ** m_alpha)) / (1.0 - m_alpha)
    if measure_code == M_ARIMOTO_INF:
        prior_max = np.max(np.asarray(prior))
    if measure_code == M_MMSE:
        mean_x = float(np.dot(np.asarray(prior), np.asarray(x_values)))
        var_x = float(np.dot(np.asarray(prior), np.asarray(x_values) ** 2)) - mean_x * mean_x

    idx_arr = np.zeros(nx, dtype=np.int64)
    cdef long long[::1] idx = idx_arr
    py_arr = np.zeros(ny, dtype=float)
    cdef double[::1] p_y = py_arr

    cdef long long k
    cdef long long best_idx = -1
    cdef double best_obj = INFINITY
    cdef double best_leak = INFINITY
    cdef long long n_feasible = 0
    cdef long long minleak_idx = -1
    cdef double minleak_val = INFINITY
    cdef double minleak_obj = INFINITY

    cdef double leak, obj, acc, s, m, r, first, second, ref, w, jv, c_a, best_a, inv
    cdef Py_ssize_t ri

    with nogil:
        for k in range(total):
            # output marginal
            for y in range(ny):
                p_y[y] = 0.0
            for x in range(nx):
                ri = idx[x]
                for y in range(ny):
                    p_y[y] += prior[x] * grid_rows[ri, y]

            # ---------------- leakage ----------------
            if measure_code == M_SHANNON or (measure_code == M_F_INFO and gen_code == GEN_KL):
                leak = 0.0
                for x in range(nx):
                    ri = idx[x]
                    for y in range(ny):
                        jv = prior[x] * grid_rows[ri, y]
                        if jv > EPS:
                            leak += jv * (lg[ri, y] - log(p_y[y]))
            elif measure_code == M_SIBSON:
                acc = 0.0
                for y in range(ny):
                    s = 0.0
                    for x in range(nx):
                        s += prior[x] * pw_m[idx[x], y]
                    acc += pow(s, 1.0 / m_alpha)
                leak = m_alpha / (m_alpha - 1.0) * log(acc)
            elif measure_code == M_SIBSON_INF:
                acc = 0.0
                for y in range(ny):
                    m = 0.0
                    for x in range(nx):
                        w = grid_rows[idx[x], y]
                        if w > m:
                            m = w
                    acc += m
                leak = log(acc)
            elif measure_code == M_ARIMOTO:
                acc = 0.0
                for y in range(ny):
                    s = 0.0
                    for x in range(nx):
                        s += pow(prior[x], m_alpha) * pw_m[idx[x], y]
                    acc += pow(s, 1.0 / m_alpha)
                leak = h_prior_alpha - m_alpha / (1.0 - m_alpha) * log(acc)
            elif measure_code == M_ARIMOTO_INF:
                acc = 0.0
                for y in range(ny):
                    m = 0.0
                    for x in range(nx):
                        jv = prior[x] * grid_rows[idx[x], y]
                        if jv > m:
                            m = jv
                    acc += m
                leak = log(acc / prior_max)
            elif measure_code == M_F_INFO:
                leak = 0.0
                for x in range(nx):
                    ri = idx[x]
                    for y in range(ny):
                        ref = prior[x] * p_y[y]
                        if ref > 0:
                            leak += ref * _gen_f(gen_code, grid_rows[ri, y] / p_y[y])
            elif measure_code == M_F_LEAK_CHI2:
                acc = 0.0
                for y in range(ny):
                    s = 0.0
                    for x in range(nx):
                        s += prior[x] * sq[idx[x], y]
                    acc += sqrt(s)
                leak = acc * acc - 1.0
                if leak < 0.0:
                    leak = 0.0
            elif measure_code == M_F_LEAK_HELLINGER:
                acc = 0.0
                for y in range(ny):
                    s = 0.0
                    for x in range(nx):
                        s += prior[x] * sr[idx[x], y]
                    acc += s * s
                leak = 2.0 - 2.0 * sqrt(acc)
                if leak < 0.0:
                    leak = 0.0
            elif measure_code == M_MMSE:
                acc = 0.0
                for y in range(ny):
                    first = 0.0
                    second = 0.0
                    for x in range(nx):
                        jv = prior[x] * grid_rows[idx[x], y]
                        first += x_values[x] * jv
                        second += x_values[x] * x_values[x] * jv
                    acc += second
                    if p_y[y] > EPS:
                        acc -= first * first / p_y[y]
                leak = var_x - acc
                if leak < 0.0:
                    leak = 0.0
            elif measure_code == M_MAXCOST:
                acc = 0.0
                for y in range(ny):
                    m = INFINITY
                    for x in range(nx):
                        w = grid_rows[idx[x], y]
                        if w < m:
                            m = w
                    acc += m
                leak = -log(acc) if acc > 0.0 else INFINITY
            elif measure_code == M_GAIN_AVG or measure_code == M_GAIN_MAX:
                if measure_code == M_GAIN_AVG:
                    acc = 0.0
                else:
                    acc = INFINITY
                for y in range(ny):
                    best_a = INFINITY
                    for a in range(n_act_eve):
                        c_a = 0.0
                        for x in range(nx):
                            c_a += prior[x] * grid_rows[idx[x], y] * eve_matrix[x, a]
                        if c_a < best_a:
                            best_a = c_a
                    if measure_code == M_GAIN_AVG:
                        acc += best_a
                    elif p_y[y] > EPS:
                        r = best_a / p_y[y]
                        if r < acc:
                            acc = r
                leak = eve_prior_risk - acc
            else:
                leak = INFINITY

            # ---------------- objective ----------------
            if objective_code == O_EXPECTED:
                obj = 0.0
                for x in range(nx):
                    ri = idx[x]
                    for y in range(ny):
                        obj += prior[x] * grid_rows[ri, y] * obj_matrix[x, y]
            elif objective_code == O_POSTRISK:
                obj = 0.0
                for y in range(ny):
                    best_a = INFINITY
                    for a in range(n_act_obj):
                        c_a = 0.0
                        for x in range(nx):
                            c_a += prior[x] * grid_rows[idx[x], y] * obj_matrix[x, a]
                        if c_a < best_a:
                            best_a = c_a
                    obj += best_a
            else:  # O_POSTRISK_ALPHA
                if obj_alpha == 1.0:
                    obj = 0.0
                    for x in range(nx):
                        ri = idx[x]
                        for y in range(ny):
                            jv = prior[x] * grid_rows[ri, y]
                            if jv > EPS and p_y[y] > EPS:
                                obj -= jv * (log(jv) - log(p_y[y]))
                elif obj_alpha == INFINITY:
                    acc = 0.0
                    for y in range(ny):
                        m = 0.0
                        for x in range(nx):
                            jv = prior[x] * grid_rows[idx[x], y]
                            if jv > m:
                                m = jv
                        acc += m
                    obj = 1.0 - acc
                else:
                    acc = 0.0
                    for y in range(ny):
                        s = 0.0
                        for x in range(nx):
                            s += pow(prior[x], obj_alpha) * pw_o[idx[x], y]
                        acc += pow(s, 1.0 / obj_alpha)
                    obj = obj_alpha / (obj_alpha - 1.0) * (1.0 - acc)

            # ---------------- reductions ----------------
            if leak <= budget + feas_tol:
                n_feasible += 1
                if obj < best_obj:
                    best_obj = obj
                    best_leak = leak
                    best_idx = k
            if leak < minleak_val:
                minleak_val = leak
                minleak_obj = obj
                minleak_idx = k

            # odometer increment (least significant digit = last input)
            pos = nx - 1
            while pos >= 0:
                idx[pos] += 1
                if idx[pos] < g:
                    break
                idx[pos] = 0
                pos -= 1

    return (
        int(best_idx),
        float(best_obj),
        float(best_leak),
        int(n_feasible),
        int(minleak_idx),
        float(minleak_val),
        float(minleak_obj),
        int(total),
    )
