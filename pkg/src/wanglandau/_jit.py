"""Compiled scalar helpers and chain loops.

Everything that touches the random stream or the weight vector inside the
iteration lives here, so the pure-Python reference loop and the compiled
engine share the exact same floating-point operations.  Each MH step consumes
three uniforms: component choice, proposal location, accept/reject.
"""

import math

import numpy as np
from numba import njit

LINEARIZED = 0
STANDARD = 1
FROZEN = 2

RENORM_EVERY = 1_000_000


@njit(cache=True)
def decode_discrete(x, K, radius, eps, u_mix, u_loc):
    if u_mix < eps:
        y = int(u_loc * K)
        if y >= K:
            y = K - 1
        return y
    j = int(u_loc * (2 * radius))
    if j >= 2 * radius:
        j = 2 * radius - 1
    off = j - radius if j < radius else j - radius + 1
    return (x + off) % K


@njit(cache=True)
def decode_torus(x, delta, eps, u_mix, u_loc):
    if u_mix < eps:
        return u_loc
    y = x + delta * (2.0 * u_loc - 1.0)
    y = y - math.floor(y)
    if y >= 1.0:
        y = 0.0
    return y


@njit(cache=True)
def trig_log_weight(x, beta, a, b):
    # -beta * sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x)
    u = 0.0
    for k in range(a.shape[0]):
        w = 2.0 * math.pi * (k + 1) * x
        u += a[k] * math.cos(w) + b[k] * math.sin(w)
    return -beta * u


@njit(cache=True)
def bin_index(x, edges):
    d = edges.shape[0] - 1
    for i in range(d - 1):
        if x < edges[i + 1]:
            return i
    return d - 1


@njit(cache=True)
def log_accept_ratio(lw_x, lw_y, theta_x, theta_y):
    return (lw_y - lw_x) + (math.log(theta_x) - math.log(theta_y))


@njit(cache=True)
def accept(log_ratio, u):
    if log_ratio >= 0.0:
        return True
    return u < math.exp(log_ratio)


@njit(cache=True)
def schedule_gamma(n, gamma_star, alpha, cap):
    g = gamma_star / float(n) ** alpha
    if cap > 0.0 and g > cap:
        g = cap
    return g


@njit(cache=True)
def update_inplace(theta, i, g, rule):
    ti = theta[i]
    if rule == LINEARIZED:
        for k in range(theta.shape[0]):
            ind = 1.0 if k == i else 0.0
            theta[k] = theta[k] + g * (theta[k] * (ind - ti))
    elif rule == STANDARD:
        den = 1.0 + g * ti
        for k in range(theta.shape[0]):
            ind = 1.0 if k == i else 0.0
            theta[k] = theta[k] * (1.0 + g * ind) / den


@njit(cache=True)
def renormalize(theta):
    s = 0.0
    for k in range(theta.shape[0]):
        s += theta[k]
    for k in range(theta.shape[0]):
        theta[k] = theta[k] / s


@njit(cache=True)
def _bookkeeping(n, rel, rel_total, stride, x_val, i, g, theta, counts,
                 polyak, floor_from, floor_min, tr_n, tr_x, tr_i, tr_theta,
                 tr_gamma, tr_pos):
    counts[i] += 1
    m = theta[0]
    for k in range(theta.shape[0]):
        polyak[k] += theta[k]
        if theta[k] < m:
            m = theta[k]
    if n >= floor_from and m < floor_min[0]:
        floor_min[0] = m
    if tr_n.shape[0] > 0 and (rel % stride == 0 or rel == rel_total):
        p = tr_pos[0]
        tr_n[p] = n
        tr_x[p] = x_val
        tr_i[p] = i
        for k in range(theta.shape[0]):
            tr_theta[p, k] = theta[k]
        tr_gamma[p] = g
        tr_pos[0] = p + 1


@njit(cache=True, nogil=True)
def discrete_chunk(u, n_start, rel_start, rel_total, x, theta, logw, labels,
                   radius, eps, gamma_star, alpha, cap, rule, stride,
                   floor_from, counts, polyak, floor_min,
                   tr_n, tr_x, tr_i, tr_theta, tr_gamma, tr_pos):
    K = logw.shape[0]
    for j in range(u.shape[0]):
        n = n_start + j + 1
        y = decode_discrete(x, K, radius, eps, u[j, 0], u[j, 1])
        if y != x:
            lr = log_accept_ratio(logw[x], logw[y], theta[labels[x]],
                                  theta[labels[y]])
            if accept(lr, u[j, 2]):
                x = y
        i = labels[x]
        g = 0.0
        if rule != FROZEN:
            g = schedule_gamma(n, gamma_star, alpha, cap)
            update_inplace(theta, i, g, rule)
            if n % RENORM_EVERY == 0:
                renormalize(theta)
        _bookkeeping(n, rel_start + j + 1, rel_total, stride, float(x), i, g,
                     theta, counts, polyak, floor_from, floor_min,
                     tr_n, tr_x, tr_i, tr_theta, tr_gamma, tr_pos)
    return x


@njit(cache=True, nogil=True)
def torus_chunk(u, n_start, rel_start, rel_total, x, theta, beta, ca, sb,
                edges, delta, eps, gamma_star, alpha, cap, rule, stride,
                floor_from, counts, polyak, floor_min,
                tr_n, tr_x, tr_i, tr_theta, tr_gamma, tr_pos):
    lw_x = trig_log_weight(x, beta, ca, sb)
    i_x = bin_index(x, edges)
    for j in range(u.shape[0]):
        n = n_start + j + 1
        y = decode_torus(x, delta, eps, u[j, 0], u[j, 1])
        lw_y = trig_log_weight(y, beta, ca, sb)
        i_y = bin_index(y, edges)
        lr = log_accept_ratio(lw_x, lw_y, theta[i_x], theta[i_y])
        if accept(lr, u[j, 2]):
            x = y
            lw_x = lw_y
            i_x = i_y
        g = 0.0
        if rule != FROZEN:
            g = schedule_gamma(n, gamma_star, alpha, cap)
            update_inplace(theta, i_x, g, rule)
            if n % RENORM_EVERY == 0:
                renormalize(theta)
        _bookkeeping(n, rel_start + j + 1, rel_total, stride, x, i_x, g,
                     theta, counts, polyak, floor_from, floor_min,
                     tr_n, tr_x, tr_i, tr_theta, tr_gamma, tr_pos)
    return x


@njit(cache=True)
def decode_discrete_many(x, K, radius, eps, u):
    out = np.empty(u.shape[0], dtype=np.int64)
    for j in range(u.shape[0]):
        out[j] = decode_discrete(x[j], K, radius, eps, u[j, 0], u[j, 1])
    return out


@njit(cache=True)
def decode_torus_many(x, delta, eps, u):
    out = np.empty(u.shape[0])
    for j in range(u.shape[0]):
        out[j] = decode_torus(x[j], delta, eps, u[j, 0], u[j, 1])
    return out
