# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled multiplicative-update factorization loop.

Mirrors ``_mu_numpy.mu_factorize`` exactly (update order, convergence rule);
exists because the model-order scan runs this loop millions of times on
small matrices where per-call NumPy overhead dominates.
"""

from libc.math cimport sqrt, fabs

import numpy as np


def mu_factorize(double[:, ::1] V, double[:, ::1] W, double[:, ::1] H,
                 int max_iter, double tol, double eps=1e-12):
    """Run multiplicative updates in place; returns the error trajectory."""
    cdef Py_ssize_t m = V.shape[0]
    cdef Py_ssize_t p = V.shape[1]
    cdef Py_ssize_t n = W.shape[1]
    cdef Py_ssize_t i, j, k, it
    cdef double acc, e, prev

    err_buf = np.empty(max_iter + 1)
    cdef double[::1] err = err_buf

    gram_buf = np.empty((n, n))
    num_h_buf = np.empty((n, p))
    num_w_buf = np.empty((m, n))
    tmp_h_buf = np.empty((n, p))
    tmp_w_buf = np.empty((m, n))
    cdef double[:, ::1] gram = gram_buf
    cdef double[:, ::1] num_h = num_h_buf
    cdef double[:, ::1] num_w = num_w_buf
    cdef double[:, ::1] tmp_h = tmp_h_buf
    cdef double[:, ::1] tmp_w = tmp_w_buf

    # initial reconstruction error
    acc = 0.0
    for i in range(m):
        for j in range(p):
            e = V[i, j]
            for k in range(n):
                e -= W[i, k] * H[k, j]
            acc += e * e
    err[0] = sqrt(acc)

    cdef Py_ssize_t n_done = 0
    for it in range(max_iter):
        # H <- H * (W^T V) / (W^T W H + eps)
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for k in range(m):
                    acc += W[k, i] * W[k, j]
                gram[i, j] = acc
        for i in range(n):
            for j in range(p):
                acc = 0.0
                for k in range(m):
                    acc += W[k, i] * V[k, j]
                num_h[i, j] = acc
        for i in range(n):
            for j in range(p):
                acc = 0.0
                for k in range(n):
                    acc += gram[i, k] * H[k, j]
                tmp_h[i, j] = acc
        for i in range(n):
            for j in range(p):
                H[i, j] *= num_h[i, j] / (tmp_h[i, j] + eps)

        # W <- W * (V H^T) / (W (H H^T) + eps)
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for k in range(p):
                    acc += H[i, k] * H[j, k]
                gram[i, j] = acc
        for i in range(m):
            for j in range(n):
                acc = 0.0
                for k in range(p):
                    acc += V[i, k] * H[j, k]
                num_w[i, j] = acc
        for i in range(m):
            for j in range(n):
                acc = 0.0
                for k in range(n):
                    acc += W[i, k] * gram[k, j]
                tmp_w[i, j] = acc
        for i in range(m):
            for j in range(n):
                W[i, j] *= num_w[i, j] / (tmp_w[i, j] + eps)

        acc = 0.0
        for i in range(m):
            for j in range(p):
                e = V[i, j]
                for k in range(n):
                    e -= W[i, k] * H[k, j]
                acc += e * e
        e = sqrt(acc)
        prev = err[it]
        err[it + 1] = e
        n_done = it + 1
        if fabs(prev - e) <= tol * max(prev, 1e-300):
            break

    return err_buf[: n_done + 1]
