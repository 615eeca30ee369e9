# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled per-path simulation kernels.

Same functions and sampling semantics as the pure-numpy module (see
``pure.py`` for the contract); loops run without the GIL, with QR steps
delegated to LAPACK (zgeqrf/zungqr) on small column-major scratch buffers.
"""

import numpy as np

from libc.math cimport log
from scipy.linalg.cython_lapack cimport zgeqrf, zungqr

from ..errors import DegenerateStepError, NotStochasticError

cdef extern from "complex.h" nogil:
    double complex conj(double complex)
    double cabs(double complex)

ctypedef double complex zdouble

PROB_TOL = 1e-8
MIN_PROB = 1e-14
COLLAPSE_REL_TOL = 1e-13

cdef double C_PROB_TOL = 1e-8
cdef double C_MIN_PROB = 1e-14
cdef double C_COLLAPSE_REL_TOL = 1e-13

# status codes returned by the nogil loops
cdef enum:
    OK = 0
    ERR_DEGENERATE = -1
    ERR_NOT_STOCHASTIC = -2
    ERR_LAPACK = -3
    ERR_ANNIHILATED = -4


cdef inline double _total(double* probs, int m) nogil:
    cdef double s = 0.0
    cdef int a
    for a in range(m):
        s += probs[a]
    return s


cdef inline int _select(double* probs, int m, double total, double u) nogil:
    cdef double target = u * total
    cdef double acc = 0.0
    cdef int a, last = -1
    for a in range(m):
        if probs[a] > 0.0:
            last = a
            acc += probs[a]
            if target < acc:
                return a
    return last


cdef inline int _state_probs(zdouble* mats, double* weights, zdouble* rho,
                             double* probs, int m, int k) nogil:
    """probs[a] = w_a Re tr(L_a rho L_a†), clamped at MIN_PROB; returns status."""
    cdef int a, i, j, l
    cdef zdouble s, t
    cdef zdouble* L
    cdef double total = 0.0
    for a in range(m):
        L = mats + a * k * k
        t = 0
        for i in range(k):
            for l in range(k):
                s = 0
                for j in range(k):
                    s = s + L[i * k + j] * rho[j * k + l]
                t = t + s * conj(L[i * k + l])
        probs[a] = t.real * weights[a]
        if probs[a] < C_MIN_PROB:
            probs[a] = 0.0
        total += probs[a]
    if total < C_MIN_PROB:
        return ERR_DEGENERATE
    if total - 1.0 > C_PROB_TOL or 1.0 - total > C_PROB_TOL:
        return ERR_NOT_STOCHASTIC
    return OK


cdef inline void _conjugate_update(zdouble* L, zdouble* rho, zdouble* tmp, int k) nogil:
    """rho <- L rho L† / tr(L rho L†) using tmp as a k*k scratch."""
    cdef int i, j, l
    cdef zdouble s
    cdef double tr = 0.0
    for i in range(k):
        for l in range(k):
            s = 0
            for j in range(k):
                s = s + L[i * k + j] * rho[j * k + l]
            tmp[i * k + l] = s
    for i in range(k):
        for j in range(k):
            s = 0
            for l in range(k):
                s = s + tmp[i * k + l] * conj(L[j * k + l])
            rho[i * k + j] = s
    for i in range(k):
        tr += rho[i * k + i].real
    for i in range(k * k):
        rho[i] = rho[i] / tr


cdef inline int _qr_step(zdouble* b_row, zdouble* fbuf, zdouble* tau, zdouble* work,
                         int lwork, zdouble* q_row, double* diag, double* bnorm,
                         int k) nogil:
    """QR of the row-major k x k matrix b_row; writes |diag R|, ||B||_F and Q."""
    cdef int i, j, info = 0
    cdef double nrm = 0.0
    for j in range(k):
        for i in range(k):
            fbuf[j * k + i] = b_row[i * k + j]
            nrm += b_row[i * k + j].real * b_row[i * k + j].real \
                + b_row[i * k + j].imag * b_row[i * k + j].imag
    bnorm[0] = nrm ** 0.5
    zgeqrf(&k, &k, fbuf, &k, tau, work, &lwork, &info)
    if info != 0:
        return ERR_LAPACK
    for j in range(k):
        diag[j] = cabs(fbuf[j * k + j])
    zungqr(&k, &k, &k, fbuf, &k, tau, work, &lwork, &info)
    if info != 0:
        return ERR_LAPACK
    for i in range(k):
        for j in range(k):
            q_row[i * k + j] = fbuf[j * k + i]
    return 0


cdef inline void _matmul(zdouble* A, zdouble* B, zdouble* out, int k) nogil:
    cdef int i, j, l
    cdef zdouble s
    for i in range(k):
        for j in range(k):
            s = 0
            for l in range(k):
                s = s + A[i * k + l] * B[l * k + j]
            out[i * k + j] = s


cdef inline void _canonicalize(zdouble* x, int k) nogil:
    """Phase-rotate so the largest-modulus entry (lowest index on ties) is real >= 0."""
    cdef int i, j = 0
    cdef double best = cabs(x[0]), cur, mod
    cdef zdouble pivot, phase
    for i in range(1, k):
        cur = cabs(x[i])
        if cur > best:
            best = cur
            j = i
    pivot = x[j]
    if pivot.imag != 0.0 or pivot.real < 0.0:
        mod = cabs(pivot)
        phase = conj(pivot) / mod
        for i in range(k):
            x[i] = x[i] * phase
        x[j] = mod


def _raise_for(int status, int step):
    if status == ERR_DEGENERATE:
        raise DegenerateStepError(f"all selection probabilities vanished at step {step}")
    if status == ERR_NOT_STOCHASTIC:
        raise NotStochasticError(
            f"step probabilities do not sum to 1 at step {step}; the family is not stochastic"
        )
    if status == ERR_LAPACK:
        raise RuntimeError("LAPACK QR factorization failed")
    if status == ERR_ANNIHILATED:
        raise DegenerateStepError(
            f"norm-tracking vector annihilated at step {step}; rerun with a different seed"
        )


cdef int _query_lwork(int k):
    cdef zdouble a_dummy, tau_dummy, work_q
    cdef int info = 0, lwork = -1, kk = k
    cdef int best = 1
    zgeqrf(&kk, &kk, &a_dummy, &kk, &tau_dummy, &work_q, &lwork, &info)
    if info == 0 and <int>work_q.real > best:
        best = <int>work_q.real
    info = 0
    lwork = -1
    zungqr(&kk, &kk, &kk, &a_dummy, &kk, &tau_dummy, &work_q, &lwork, &info)
    if info == 0 and <int>work_q.real > best:
        best = <int>work_q.real
    return best


def trajectory_path(mats, weights, rho0, uniforms, store_states=False):
    cdef zdouble[:, :, ::1] M = np.array(mats, dtype=np.complex128, order="C")
    cdef double[::1] W = np.array(weights, dtype=np.float64)
    cdef double[::1] U = np.array(uniforms, dtype=np.float64)
    cdef int m = M.shape[0], k = M.shape[1], n = U.shape[0]
    cdef bint keep = bool(store_states)

    word_arr = np.empty(n, dtype=np.int32)
    rho_arr = np.array(rho0, dtype=np.complex128, order="C")
    probs_arr = np.empty(m, dtype=np.float64)
    tmp_arr = np.empty((k, k), dtype=np.complex128)
    states_arr = np.empty((n, k, k), dtype=np.complex128) if keep else None

    cdef int[::1] word = word_arr
    cdef zdouble[:, ::1] rho = rho_arr
    cdef double[::1] probs = probs_arr
    cdef zdouble[:, ::1] tmp = tmp_arr
    cdef zdouble[:, :, ::1] states = states_arr if keep else np.empty((1, k, k), dtype=np.complex128)

    cdef double log_weight = 0.0
    cdef int t, a, status = OK, failstep = 0
    cdef int i
    with nogil:
        for t in range(n):
            status = _state_probs(&M[0, 0, 0], &W[0], &rho[0, 0], &probs[0], m, k)
            if status != OK:
                failstep = t
                break
            a = _select(&probs[0], m, _total(&probs[0], m), U[t])
            if a < 0:
                status = ERR_DEGENERATE
                failstep = t
                break
            word[t] = a
            log_weight += log(probs[a])
            _conjugate_update(&M[a, 0, 0], &rho[0, 0], &tmp[0, 0], k)
            if keep:
                for i in range(k * k):
                    (&states[t, 0, 0])[i] = (&rho[0, 0])[i]
    if status != OK:
        _raise_for(status, failstep)
    return word_arr, (states_arr if keep else None), log_weight


def x_process_path(mats, weights, x0, uniforms, store_states=False):
    cdef zdouble[:, :, ::1] M = np.array(mats, dtype=np.complex128, order="C")
    cdef double[::1] W = np.array(weights, dtype=np.float64)
    cdef double[::1] U = np.array(uniforms, dtype=np.float64)
    cdef int m = M.shape[0], k = M.shape[1], n = U.shape[0]
    cdef bint keep = bool(store_states)

    word_arr = np.empty(n, dtype=np.int32)
    x_arr = np.array(x0, dtype=np.complex128).reshape(k)
    imgs_arr = np.empty((m, k), dtype=np.complex128)
    probs_arr = np.empty(m, dtype=np.float64)
    states_arr = np.empty((n, k), dtype=np.complex128) if keep else None

    cdef int[::1] word = word_arr
    cdef zdouble[::1] x = x_arr
    cdef zdouble[:, ::1] imgs = imgs_arr
    cdef double[::1] probs = probs_arr
    cdef zdouble[:, ::1] states = states_arr if keep else np.empty((1, k), dtype=np.complex128)

    cdef double log_weight = 0.0, total, ny
    cdef int t, a, i, j, status = OK, failstep = 0
    cdef zdouble s
    with nogil:
        for t in range(n):
            total = 0.0
            for a in range(m):
                ny = 0.0
                for i in range(k):
                    s = 0
                    for j in range(k):
                        s = s + M[a, i, j] * x[j]
                    imgs[a, i] = s
                    ny += s.real * s.real + s.imag * s.imag
                probs[a] = ny * W[a]
                if probs[a] < C_MIN_PROB:
                    probs[a] = 0.0
                total += probs[a]
            if total < C_MIN_PROB:
                status = ERR_DEGENERATE
                failstep = t
                break
            if total - 1.0 > C_PROB_TOL or 1.0 - total > C_PROB_TOL:
                status = ERR_NOT_STOCHASTIC
                failstep = t
                break
            a = _select(&probs[0], m, total, U[t])
            if a < 0:
                status = ERR_DEGENERATE
                failstep = t
                break
            word[t] = a
            log_weight += log(probs[a])
            ny = 0.0
            for i in range(k):
                ny += imgs[a, i].real * imgs[a, i].real + imgs[a, i].imag * imgs[a, i].imag
            ny = ny ** 0.5
            for i in range(k):
                x[i] = imgs[a, i] / ny
            _canonicalize(&x[0], k)
            if keep:
                for i in range(k):
                    states[t, i] = x[i]
    if status != OK:
        _raise_for(status, failstep)
    return word_arr, (states_arr if keep else None), log_weight


def lyapunov_path(mats, weights, rho0, q0, uniforms, collapse_tol=1e-150, skip_steps=0):
    cdef zdouble[:, :, ::1] M = np.array(mats, dtype=np.complex128, order="C")
    cdef double[::1] W = np.array(weights, dtype=np.float64)
    cdef double[::1] U = np.array(uniforms, dtype=np.float64)
    cdef int m = M.shape[0], k = M.shape[1], n = U.shape[0]
    cdef double ctol = float(collapse_tol)

    word_arr = np.empty(n, dtype=np.int32)
    sums_arr = np.zeros(k, dtype=np.float64)
    collapse_arr = np.full(k, -1, dtype=np.int64)
    rho_arr = np.array(rho0, dtype=np.complex128, order="C")
    q_arr = np.array(q0, dtype=np.complex128, order="C")
    atom_logdet_arr = np.array([np.linalg.slogdet(mat)[1] for mat in np.asarray(mats)])

    probs_arr = np.empty(m, dtype=np.float64)
    tmp_arr = np.empty((k, k), dtype=np.complex128)
    b_arr = np.empty((k, k), dtype=np.complex128)
    fbuf_arr = np.empty(k * k, dtype=np.complex128)
    tau_arr = np.empty(k, dtype=np.complex128)
    cdef int lwork = _query_lwork(k)
    work_arr = np.empty(lwork, dtype=np.complex128)
    diag_arr = np.empty(k, dtype=np.float64)

    cdef int[::1] word = word_arr
    cdef double[::1] sums = sums_arr
    cdef long long[::1] collapse = collapse_arr
    cdef zdouble[:, ::1] rho = rho_arr
    cdef zdouble[:, ::1] q = q_arr
    cdef double[::1] atom_logdet = atom_logdet_arr
    cdef double[::1] probs = probs_arr
    cdef zdouble[:, ::1] tmp = tmp_arr
    cdef zdouble[:, ::1] b = b_arr
    cdef zdouble[::1] fbuf = fbuf_arr
    cdef zdouble[::1] tau = tau_arr
    cdef zdouble[::1] work = work_arr
    cdef double[::1] diag = diag_arr

    cdef double log_weight = 0.0, logdet_sum = 0.0, bnorm = 0.0, thresh
    cdef int t, a, j, status = OK, failstep = 0
    cdef int skip = int(skip_steps)
    with nogil:
        for t in range(n):
            status = _state_probs(&M[0, 0, 0], &W[0], &rho[0, 0], &probs[0], m, k)
            if status != OK:
                failstep = t
                break
            a = _select(&probs[0], m, _total(&probs[0], m), U[t])
            if a < 0:
                status = ERR_DEGENERATE
                failstep = t
                break
            word[t] = a
            log_weight += log(probs[a])
            if t >= skip:
                logdet_sum += atom_logdet[a]
            _conjugate_update(&M[a, 0, 0], &rho[0, 0], &tmp[0, 0], k)
            _matmul(&M[a, 0, 0], &q[0, 0], &b[0, 0], k)
            status = _qr_step(&b[0, 0], &fbuf[0], &tau[0], &work[0], lwork,
                              &q[0, 0], &diag[0], &bnorm, k)
            if status != OK:
                failstep = t
                break
            thresh = C_COLLAPSE_REL_TOL * bnorm
            if ctol > thresh:
                thresh = ctol
            for j in range(k):
                if collapse[j] < 0:
                    if diag[j] <= thresh:
                        collapse[j] = t + 1
                    elif t >= skip:
                        sums[j] += log(diag[j])
    if status != OK:
        _raise_for(status, failstep)
    return word_arr, sums_arr, collapse_arr, log_weight, logdet_sum


def qr_accumulate(mats, word, q0, collapse_tol=1e-150):
    cdef zdouble[:, :, ::1] M = np.array(mats, dtype=np.complex128, order="C")
    cdef int[::1] word_v = np.array(word, dtype=np.int32)
    cdef int k = M.shape[1], n = word_v.shape[0]
    cdef double ctol = float(collapse_tol)

    sums_arr = np.zeros(k, dtype=np.float64)
    collapse_arr = np.full(k, -1, dtype=np.int64)
    q_arr = np.array(q0, dtype=np.complex128, order="C")
    b_arr = np.empty((k, k), dtype=np.complex128)
    fbuf_arr = np.empty(k * k, dtype=np.complex128)
    tau_arr = np.empty(k, dtype=np.complex128)
    cdef int lwork = _query_lwork(k)
    work_arr = np.empty(lwork, dtype=np.complex128)
    diag_arr = np.empty(k, dtype=np.float64)

    cdef double[::1] sums = sums_arr
    cdef long long[::1] collapse = collapse_arr
    cdef zdouble[:, ::1] q = q_arr
    cdef zdouble[:, ::1] b = b_arr
    cdef zdouble[::1] fbuf = fbuf_arr
    cdef zdouble[::1] tau = tau_arr
    cdef zdouble[::1] work = work_arr
    cdef double[::1] diag = diag_arr

    cdef double bnorm = 0.0, thresh
    cdef int t, j, a, status = OK
    with nogil:
        for t in range(n):
            a = word_v[t]
            _matmul(&M[a, 0, 0], &q[0, 0], &b[0, 0], k)
            status = _qr_step(&b[0, 0], &fbuf[0], &tau[0], &work[0], lwork,
                              &q[0, 0], &diag[0], &bnorm, k)
            if status != OK:
                break
            thresh = C_COLLAPSE_REL_TOL * bnorm
            if ctol > thresh:
                thresh = ctol
            for j in range(k):
                if collapse[j] < 0:
                    if diag[j] <= thresh:
                        collapse[j] = t + 1
                    else:
                        sums[j] += log(diag[j])
    if status != OK:
        _raise_for(status, 0)
    return sums_arr, collapse_arr


def theorem_b_path(mats, weights, x0, q0_vec, uniforms):
    cdef zdouble[:, :, ::1] M = np.array(mats, dtype=np.complex128, order="C")
    cdef double[::1] W = np.array(weights, dtype=np.float64)
    cdef double[::1] U = np.array(uniforms, dtype=np.float64)
    cdef int m = M.shape[0], k = M.shape[1], n = U.shape[0]

    word_arr = np.empty(n, dtype=np.int32)
    curve_arr = np.empty(n, dtype=np.float64)
    x_arr = np.array(x0, dtype=np.complex128).reshape(k)
    qv = np.array(q0_vec, dtype=np.complex128).reshape(k)
    qv = qv / np.linalg.norm(qv)
    q_arr = qv
    imgs_arr = np.empty((m, k), dtype=np.complex128)
    probs_arr = np.empty(m, dtype=np.float64)
    z_arr = np.empty(k, dtype=np.complex128)

    cdef int[::1] word = word_arr
    cdef double[::1] curve = curve_arr
    cdef zdouble[::1] x = x_arr
    cdef zdouble[::1] qvec = q_arr
    cdef zdouble[:, ::1] imgs = imgs_arr
    cdef double[::1] probs = probs_arr
    cdef zdouble[::1] z = z_arr

    cdef double log_wx = 0.0, log_wq = 0.0, total, ny, nz
    cdef int t, a, i, j, status = OK, failstep = 0
    cdef zdouble s
    with nogil:
        for t in range(n):
            total = 0.0
            for a in range(m):
                ny = 0.0
                for i in range(k):
                    s = 0
                    for j in range(k):
                        s = s + M[a, i, j] * x[j]
                    imgs[a, i] = s
                    ny += s.real * s.real + s.imag * s.imag
                probs[a] = ny * W[a]
                if probs[a] < C_MIN_PROB:
                    probs[a] = 0.0
                total += probs[a]
            if total < C_MIN_PROB:
                status = ERR_DEGENERATE
                failstep = t
                break
            if total - 1.0 > C_PROB_TOL or 1.0 - total > C_PROB_TOL:
                status = ERR_NOT_STOCHASTIC
                failstep = t
                break
            a = _select(&probs[0], m, total, U[t])
            if a < 0:
                status = ERR_DEGENERATE
                failstep = t
                break
            word[t] = a
            ny = 0.0
            for i in range(k):
                ny += imgs[a, i].real * imgs[a, i].real + imgs[a, i].imag * imgs[a, i].imag
            ny = ny ** 0.5
            log_wx += log(ny)
            for i in range(k):
                x[i] = imgs[a, i] / ny
            nz = 0.0
            for i in range(k):
                s = 0
                for j in range(k):
                    s = s + M[a, i, j] * qvec[j]
                z[i] = s
                nz += s.real * s.real + s.imag * s.imag
            nz = nz ** 0.5
            if nz < 1e-300:
                status = ERR_ANNIHILATED
                failstep = t
                break
            log_wq += log(nz)
            for i in range(k):
                qvec[i] = z[i] / nz
            curve[t] = (log_wx - log_wq) / (t + 1)
    if status != OK:
        _raise_for(status, failstep)
    return word_arr, curve_arr
