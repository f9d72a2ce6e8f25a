"""Pure-Python/numpy implementations of the hot kernels.

Signatures mirror the compiled ``_kernels`` extension exactly; see
``ewrlnc._backend`` for how one is picked at import time.
"""
import numpy as np

TIE_EPS = 1e-12


def lmax_many(k, nr):
    """Vectorised highest-decodable-layer over the rows of ``nr`` (n, L)."""
    k = np.asarray(k, dtype=np.int64)
    nr = np.asarray(nr, dtype=np.int64)
    n, L = nr.shape
    kcum = np.concatenate(([0], np.cumsum(k)))
    ncum = np.zeros((n, L + 1), dtype=np.int64)
    np.cumsum(nr, axis=1, out=ncum[:, 1:])
    rows = np.arange(n)
    b = np.zeros(n, dtype=np.int64)
    for layer in range(1, L + 1):
        ok = (ncum[:, layer] - ncum[rows, b]) >= (kcum[layer] - kcum[b])
        b = np.where(ok, layer, b)
    return b


def layer_probs(k, nt, pmf):
    """P(highest decodable layer == l) for l = 1..L.

    ``pmf[l, r]`` is the probability of receiving ``r`` of the ``nt[l]``
    packets sent from window ``l``.  Rather than visiting every reception
    vector this tracks, window by window, the joint law of the last decoded
    window ``b`` and the packets still missing since ``b``; each window is
    one convolution with its reception pmf.
    """
    k = [int(v) for v in k]
    nt = [int(v) for v in nt]
    L = len(k)
    width = sum(k) + 1  # deficit 0..M
    q = np.zeros((L + 1, width))
    q[0, 0] = 1.0
    for i in range(L):
        rev = np.ascontiguousarray(pmf[i, :nt[i] + 1][::-1])
        nxt = np.zeros_like(q)
        for b in range(i + 1):
            row = q[b]
            if not row.any():
                continue
            # index j of the convolution is a deficit of j - nt[i]
            conv = np.convolve(np.concatenate((np.zeros(k[i]), row)), rev)
            nxt[i + 1, 0] += conv[:nt[i] + 1].sum()
            tail = conv[nt[i] + 1:nt[i] + width]
            nxt[b, 1:1 + tail.size] += tail
        q = nxt
    return q[1:].sum(axis=1)


def replay_open_loop(k, nt, delivered):
    """Decoded layer count per row of ``delivered`` (n, N_t) under an open-loop
    schedule sending ``nt[0]`` packets of W_1 first, then W_2, and so on."""
    delivered = np.asarray(delivered, dtype=np.int64)
    cs = np.zeros((delivered.shape[0], delivered.shape[1] + 1), dtype=np.int64)
    np.cumsum(delivered, axis=1, out=cs[:, 1:])
    bounds = np.concatenate(([0], np.cumsum(nt)))
    nr = cs[:, bounds[1:]] - cs[:, bounds[:-1]]
    return lmax_many(k, nr)


def backward_single(succ, pe, terminal, horizon):
    """Finite-horizon backward induction for one user.

    ``succ[s, a]`` is the state reached from ``s`` when a packet of window
    ``a+1`` arrives.  Returns ``(values, policy)`` shaped (horizon+1, S); the
    policy holds 1-based window indices, row 0 is unused (zeros).
    """
    succ = np.asarray(succ, dtype=np.int64)
    S, A = succ.shape
    values = np.empty((horizon + 1, S))
    policy = np.zeros((horizon + 1, S), dtype=np.int8)
    values[0] = terminal
    q = 1.0 - pe
    for t in range(1, horizon + 1):
        prev = values[t - 1]
        cand = q * prev[succ] + pe * prev[:, None]
        best = cand.max(axis=1)
        choice = np.argmax(cand >= (best - TIE_EPS)[:, None], axis=1)
        values[t] = best
        policy[t] = choice + 1
    return values, policy


def replay_feedback(succ, policy, start, levels, delivered):
    """Replay a closed-loop policy for ``n_u`` users jointly.

    ``delivered`` is (n_u, n, horizon); the joint state index is mixed radix
    with user 0 most significant.  Returns the decoded layer count (n_u, n).
    """
    succ = np.asarray(succ, dtype=np.int64)
    delivered = np.asarray(delivered, dtype=bool)
    n_u, n, horizon = delivered.shape
    S = succ.shape[0]
    states = np.full((n_u, n), start, dtype=np.int64)
    for step in range(horizon):
        t = horizon - step
        joint = np.zeros(n, dtype=np.int64)
        for u in range(n_u):
            joint = joint * S + states[u]
        action = policy[t, joint].astype(np.int64) - 1
        for u in range(n_u):
            nxt = succ[states[u], action]
            states[u] = np.where(delivered[u, :, step], nxt, states[u])
    return np.asarray(levels)[states]
