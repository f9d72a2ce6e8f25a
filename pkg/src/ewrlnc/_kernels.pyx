# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels. Same signatures and results as ``_kernels_py``."""
import numpy as np
cimport numpy as cnp
from libc.stdlib cimport malloc, free

cnp.import_array()

TIE_EPS = 1e-12
cdef double _TIE_EPS = 1e-12


cdef inline Py_ssize_t _lmax(const cnp.int64_t[::1] k, const cnp.int64_t* nr, Py_ssize_t L) nogil:
    cdef Py_ssize_t layer, best = 0
    cdef cnp.int64_t need = 0, have = 0
    for layer in range(L):
        need += k[layer]
        have += nr[layer]
        if have >= need:
            best = layer + 1
            need = 0
            have = 0
    return best


def lmax_many(k, nr):
    cdef const cnp.int64_t[::1] kv = np.ascontiguousarray(k, dtype=np.int64)
    cdef const cnp.int64_t[:, ::1] nv = np.ascontiguousarray(nr, dtype=np.int64)
    cdef Py_ssize_t n = nv.shape[0], L = nv.shape[1], i
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    with nogil:
        for i in range(n):
            ov[i] = _lmax(kv, &nv[i, 0], L)
    return out


def layer_probs(k, nt, pmf):
    cdef const cnp.int64_t[::1] kv = np.ascontiguousarray(k, dtype=np.int64)
    cdef const cnp.int64_t[::1] tv = np.ascontiguousarray(nt, dtype=np.int64)
    cdef const double[:, ::1] pv = np.ascontiguousarray(pmf, dtype=np.float64)
    cdef Py_ssize_t L = kv.shape[0], i, top
    out = np.zeros(L + 1, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double p
    cdef cnp.int64_t* r = <cnp.int64_t*> malloc(L * sizeof(cnp.int64_t))
    if r == NULL:
        raise MemoryError()
    try:
        with nogil:
            for i in range(L):
                r[i] = 0
            while True:
                p = pv[0, r[0]]
                for i in range(1, L):
                    p = p * pv[i, r[i]]
                top = _lmax(kv, r, L)
                ov[top] += p
                # odometer: last window fastest
                i = L - 1
                while i >= 0:
                    r[i] += 1
                    if r[i] <= tv[i]:
                        break
                    r[i] = 0
                    i -= 1
                if i < 0:
                    break
    finally:
        free(r)
    return out[1:]


def replay_open_loop(k, nt, delivered):
    cdef const cnp.int64_t[::1] kv = np.ascontiguousarray(k, dtype=np.int64)
    cdef const cnp.int64_t[::1] tv = np.ascontiguousarray(nt, dtype=np.int64)
    cdef const cnp.uint8_t[:, ::1] dv = np.ascontiguousarray(delivered, dtype=np.uint8)
    cdef Py_ssize_t n = dv.shape[0], L = kv.shape[0], row, w, j, slot
    out = np.empty(n, dtype=np.int64)
    cdef cnp.int64_t[::1] ov = out
    cdef cnp.int64_t* cnt = <cnp.int64_t*> malloc(L * sizeof(cnp.int64_t))
    if cnt == NULL:
        raise MemoryError()
    try:
        with nogil:
            for row in range(n):
                slot = 0
                for w in range(L):
                    cnt[w] = 0
                    for j in range(tv[w]):
                        cnt[w] += dv[row, slot]
                        slot += 1
                ov[row] = _lmax(kv, cnt, L)
    finally:
        free(cnt)
    return out


def backward_single(succ, double pe, terminal, Py_ssize_t horizon):
    cdef const cnp.int64_t[:, ::1] sv = np.ascontiguousarray(succ, dtype=np.int64)
    cdef Py_ssize_t S = sv.shape[0], A = sv.shape[1], t, s, a, choice
    values = np.empty((horizon + 1, S), dtype=np.float64)
    policy = np.zeros((horizon + 1, S), dtype=np.int8)
    cdef double[:, ::1] V = values
    cdef cnp.int8_t[:, ::1] P = policy
    cdef double q = 1.0 - pe, best, cand
    values[0] = np.ascontiguousarray(terminal, dtype=np.float64)
    with nogil:
        for t in range(1, horizon + 1):
            for s in range(S):
                best = q * V[t - 1, sv[s, 0]] + pe * V[t - 1, s]
                for a in range(1, A):
                    cand = q * V[t - 1, sv[s, a]] + pe * V[t - 1, s]
                    if cand > best:
                        best = cand
                choice = 0
                for a in range(A):
                    cand = q * V[t - 1, sv[s, a]] + pe * V[t - 1, s]
                    if cand >= best - _TIE_EPS:
                        choice = a
                        break
                V[t, s] = best
                P[t, s] = choice + 1
    return values, policy


def replay_feedback(succ, policy, Py_ssize_t start, levels, delivered):
    cdef const cnp.int64_t[:, ::1] sv = np.ascontiguousarray(succ, dtype=np.int64)
    cdef const cnp.int8_t[:, ::1] pv = np.ascontiguousarray(policy, dtype=np.int8)
    cdef const cnp.int64_t[::1] lv = np.ascontiguousarray(levels, dtype=np.int64)
    cdef const cnp.uint8_t[:, :, ::1] dv = np.ascontiguousarray(delivered, dtype=np.uint8)
    cdef Py_ssize_t n_u = dv.shape[0], n = dv.shape[1], horizon = dv.shape[2]
    cdef Py_ssize_t S = sv.shape[0], row, step, u, t, joint, a
    out = np.empty((n_u, n), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] ov = out
    cdef cnp.int64_t* st = <cnp.int64_t*> malloc(n_u * sizeof(cnp.int64_t))
    if st == NULL:
        raise MemoryError()
    try:
        with nogil:
            for row in range(n):
                for u in range(n_u):
                    st[u] = start
                for step in range(horizon):
                    t = horizon - step
                    joint = 0
                    for u in range(n_u):
                        joint = joint * S + st[u]
                    a = pv[t, joint] - 1
                    for u in range(n_u):
                        if dv[u, row, step]:
                            st[u] = sv[st[u], a]
                for u in range(n_u):
                    ov[u, row] = lv[st[u]]
    finally:
        free(st)
    return out
