# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled twins of the hot sampler kernels.

Semantics mirror ``mssar.kernels.pure`` exactly: same edge visiting order,
same update formulas, same consumption of pre-drawn uniforms. LAPACK
(via scipy's Cython bindings) supplies the periodic full refactorizations.
"""

import numpy as np

from libc.math cimport exp, log, INFINITY

from scipy.linalg.cython_lapack cimport dgetrf, dgetri

from mssar.errors import NumericalDegeneracyError, UnderflowCollapseError

DEF NEAR_SINGULAR = 1e-12


cdef inline double _sigmoid(double x) noexcept:
    cdef double e
    if x >= 0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


cdef inline Py_ssize_t _draw_index(double[::1] weights, Py_ssize_t K, double u) noexcept:
    cdef double total = 0.0, cum = 0.0
    cdef Py_ssize_t k
    for k in range(K):
        total += weights[k]
    total *= u
    for k in range(K):
        cum += weights[k]
        if cum > total:
            return k
    return K - 1


def ffbs(double[:, ::1] loglik, double[:, ::1] xi, double[::1] pi0, uniforms):
    """See ``mssar.kernels.pure.ffbs``."""
    cdef Py_ssize_t T = loglik.shape[0]
    cdef Py_ssize_t K = loglik.shape[1]
    filtered_arr = np.empty((T, K))
    pred_arr = np.empty((T, K))
    smoothed_arr = np.empty((T, K))
    work_arr = np.empty(K)
    cdef double[:, ::1] f = filtered_arr
    cdef double[:, ::1] pred = pred_arr
    cdef double[:, ::1] sm = smoothed_arr
    cdef double[::1] work = work_arr
    cdef Py_ssize_t t, k, l
    cdef double acc, m, tot, lp

    for k in range(K):
        pred[0, k] = pi0[k]
    for t in range(T):
        if t > 0:
            for k in range(K):
                acc = 0.0
                for l in range(K):
                    acc += f[t - 1, l] * xi[l, k]
                pred[t, k] = acc
        m = -INFINITY
        for k in range(K):
            if pred[t, k] > 0.0:
                lp = log(pred[t, k]) + loglik[t, k]
            else:
                lp = -INFINITY
            work[k] = lp
            if lp > m:
                m = lp
        if m == -INFINITY:
            raise UnderflowCollapseError(f"all regimes impossible at period {t}")
        tot = 0.0
        for k in range(K):
            acc = exp(work[k] - m)
            f[t, k] = acc
            tot += acc
        for k in range(K):
            f[t, k] /= tot

    for k in range(K):
        sm[T - 1, k] = f[T - 1, k]
    for t in range(T - 2, -1, -1):
        for l in range(K):
            if pred[t + 1, l] > 0.0:
                work[l] = sm[t + 1, l] / pred[t + 1, l]
            else:
                work[l] = 0.0
        tot = 0.0
        for k in range(K):
            acc = 0.0
            for l in range(K):
                acc += xi[k, l] * work[l]
            acc *= f[t, k]
            sm[t, k] = acc
            tot += acc
        for k in range(K):
            sm[t, k] /= tot

    if uniforms is None:
        return None, filtered_arr, smoothed_arr

    cdef double[::1] u = uniforms
    s_arr = np.empty(T, dtype=np.int64)
    cdef long[::1] s = s_arr
    for k in range(K):
        work[k] = f[T - 1, k]
    s[T - 1] = _draw_index(work, K, u[T - 1])
    for t in range(T - 2, -1, -1):
        for k in range(K):
            work[k] = f[t, k] * xi[k, s[t + 1]]
        s[t] = _draw_index(work, K, u[t])
    return s_arr, filtered_arr, smoothed_arr


cdef double _refresh(double[:, ::1] W, double rho, double[:, ::1] yk,
                     double[:, ::1] zb, double[:, ::1] sinv,
                     double[:, ::1] resid, double[::1] a, int[::1] ipiv,
                     double[::1] lwork_buf) except? -1.0:
    """Rebuild sinv, resid and the log-determinant from S = I - rho*W."""
    cdef Py_ssize_t N = W.shape[0]
    cdef Py_ssize_t tk = yk.shape[1]
    cdef Py_ssize_t i, j, t
    cdef int n = <int> N, info = 0, lwork = <int> lwork_buf.shape[0]
    cdef double logdet = 0.0, acc
    cdef int sign = 1

    for i in range(N):
        for j in range(N):
            a[i * N + j] = (1.0 if i == j else 0.0) - rho * W[i, j]
    # Row-major S passed as column-major is S^T: same determinant, and the
    # inverse read back row-major is exactly S^{-1}.
    dgetrf(&n, &n, &a[0], &n, &ipiv[0], &info)
    if info != 0:
        raise NumericalDegeneracyError(f"LU factorization failed (info={info})")
    for i in range(N):
        if ipiv[i] != i + 1:
            sign = -sign
        acc = a[i * N + i]
        if acc < 0:
            sign = -sign
            acc = -acc
        if acc == 0.0:
            raise NumericalDegeneracyError("singular filter in refresh")
        logdet += log(acc)
    if sign <= 0:
        raise NumericalDegeneracyError("filter determinant nonpositive in refresh")
    dgetri(&n, &a[0], &n, &ipiv[0], &lwork_buf[0], &lwork, &info)
    if info != 0:
        raise NumericalDegeneracyError(f"matrix inversion failed (info={info})")
    for i in range(N):
        for j in range(N):
            sinv[i, j] = a[i * N + j]
    for i in range(N):
        for t in range(tk):
            acc = yk[i, t] - zb[i, t]
            for j in range(N):
                acc -= rho * W[i, j] * yk[j, t]
            resid[i, t] = acc
    return logdet


def omega_sweep(signed char[:, ::1] omega, double[:, ::1] W, double[:, ::1] sinv,
                double logdet, double[:, ::1] resid, double[:, ::1] yk,
                double[:, ::1] zb, double rho, double sigma2,
                double[:, ::1] log_q, double[:, ::1] log_1mq,
                double[::1] uniforms, int refresh_every):
    """See ``mssar.kernels.pure.omega_sweep``."""
    cdef Py_ssize_t N = omega.shape[0]
    cdef Py_ssize_t tk = yk.shape[1]
    w_new_arr = np.empty(N)
    ds_arr = np.empty(N)
    d_arr = np.empty(max(tk, 1))
    ucol_arr = np.empty(N)
    vrow_arr = np.empty(N)
    a_arr = np.empty(N * N)
    ipiv_arr = np.empty(N, dtype=np.intc)
    lwork_arr = np.empty(N * 64)
    cdef double[::1] w_new = w_new_arr
    cdef double[::1] ds = ds_arr
    cdef double[::1] d = d_arr
    cdef double[::1] ucol = ucol_arr
    cdef double[::1] vrow = vrow_arr
    cdef double[::1] a = a_arr
    cdef int[::1] ipiv = ipiv_arr
    cdef double[::1] lwork_buf = lwork_arr

    cdef double inv2s2 = 0.5 / sigma2
    cdef int n_flips = 0, since_refresh = 0
    cdef Py_ssize_t i, j, l, m, t, edge = 0
    cdef int rs, new_rs, b, new_bit, obit
    cdef double u, inv_rs, ratio, dlogdet, dssr, dt, lq, l1, lr, qbar, acc, invr

    for i in range(N):
        rs = 0
        for j in range(N):
            rs += omega[i, j]
        for j in range(N):
            if j == i:
                continue
            u = uniforms[edge]
            edge += 1
            b = omega[i, j]
            new_rs = rs + (1 - 2 * b)
            if new_rs > 0:
                inv_rs = 1.0 / new_rs
                for l in range(N):
                    obit = omega[i, l]
                    if l == j:
                        obit = 1 - b
                    w_new[l] = obit * inv_rs
            else:
                for l in range(N):
                    w_new[l] = 0.0
            ratio = 1.0
            for l in range(N):
                ds[l] = -rho * (w_new[l] - W[i, l])
                ratio += ds[l] * sinv[l, i]
            if ratio < NEAR_SINGULAR:
                logdet = _refresh(W, rho, yk, zb, sinv, resid, a, ipiv, lwork_buf)
                since_refresh = 0
                ratio = 1.0
                for l in range(N):
                    ratio += ds[l] * sinv[l, i]
                if ratio <= 0.0:
                    raise NumericalDegeneracyError(
                        f"determinant ratio nonpositive at edge ({i}, {j})"
                    )
            dlogdet = log(ratio)
            dssr = 0.0
            for t in range(tk):
                dt = 0.0
                for l in range(N):
                    dt += ds[l] * yk[l, t]
                d[t] = dt
                dssr += dt * (2.0 * resid[i, t] + dt)

            lq = log_q[i, j]
            l1 = log_1mq[i, j]
            if lq == -INFINITY:
                qbar = 0.0
            elif l1 == -INFINITY:
                qbar = 1.0
            else:
                if b == 0:
                    lr = lq - l1 + tk * dlogdet - inv2s2 * dssr
                else:
                    lr = lq - l1 - tk * dlogdet + inv2s2 * dssr
                qbar = _sigmoid(lr)

            new_bit = 1 if u < qbar else 0
            if new_bit != b:
                omega[i, j] = <signed char> new_bit
                rs = new_rs
                for t in range(tk):
                    resid[i, t] += d[t]
                logdet += dlogdet
                for l in range(N):
                    ucol[l] = sinv[l, i]
                for l in range(N):
                    acc = 0.0
                    for m in range(N):
                        acc += ds[m] * sinv[m, l]
                    vrow[l] = acc
                invr = 1.0 / ratio
                for l in range(N):
                    for m in range(N):
                        sinv[l, m] -= ucol[l] * vrow[m] * invr
                for l in range(N):
                    W[i, l] = w_new[l]
                n_flips += 1
                since_refresh += 1
                if since_refresh >= refresh_every:
                    logdet = _refresh(W, rho, yk, zb, sinv, resid, a, ipiv, lwork_buf)
                    since_refresh = 0
    return logdet, n_flips
