# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled implementation of the hot kernels (see _ref.py for semantics)."""

import numpy as np

cimport numpy as cnp
from libc.math cimport INFINITY, exp, fabs, log


def poisson_value(double[::1] g, long long[::1] counts, double t, double hd,
                  double sigma):
    cdef Py_ssize_t i, n = g.shape[0]
    cdef double acc_g = 0.0, acc_c = 0.0, acc_s = 0.0, s
    for i in range(n):
        s = g[i] + sigma
        acc_g += g[i]
        if counts[i] > 0:
            if s == 0.0:
                return INFINITY
            acc_c += counts[i] * log(s)
        if sigma > 0.0:
            acc_s += log(s)
    return hd * acc_g - acc_c / t - sigma * hd * acc_s


def poisson_grad(double[::1] g, double[::1] dens, double sigma,
                 double[::1] out):
    cdef Py_ssize_t i, n = g.shape[0]
    for i in range(n):
        out[i] = 1.0 - (dens[i] + sigma) / (g[i] + sigma)
    return np.asarray(out)


def kl_value(double[::1] g, double[::1] gdag, double sigma, double hd):
    cdef Py_ssize_t i, n = g.shape[0]
    cdef double acc = 0.0, a, b
    for i in range(n):
        b = gdag[i] + sigma
        if b <= 0.0:
            continue
        a = g[i] + sigma
        if a == 0.0:
            return INFINITY
        acc += a - b - b * (log(a) - log(b))
    return hd * acc


def entropy_prox(double[::1] v, double step, double lo, double hi,
                 double[::1] out):
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double x, ex, f, dx, u
    cdef int it
    for i in range(n):
        u = v[i] if v[i] > step else step
        x = log(u)
        for it in range(60):
            ex = exp(x)
            f = ex + step * x + (step - v[i])
            dx = f / (ex + step)
            x -= dx
            if fabs(dx) <= 1e-15 * (1.0 + fabs(x)):
                break
        u = exp(x)
        if u < lo:
            u = lo
        elif u > hi:
            u = hi
        out[i] = u
    return np.asarray(out)
