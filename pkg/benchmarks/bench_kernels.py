"""Time the compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from ewrlnc import _kernels_py
from ewrlnc.analytic import _pmf_table
from ewrlnc.core import GopLayout
from ewrlnc.mdp import StateSpace

try:
    from ewrlnc import _kernels as compiled
except ImportError:
    compiled = None


def cases():
    rng = np.random.default_rng(0)
    k = np.array([4, 2, 2, 2], dtype=np.int64)
    nt = np.array([6, 4, 5, 9], dtype=np.int64)
    pmf = _pmf_table(tuple(int(v) for v in nt), 0.2)
    nr = rng.integers(0, 6, size=(200_000, 4)).astype(np.int64)
    delivered = (rng.random((100_000, int(nt.sum()))) > 0.2).astype(np.uint8)
    lay = GopLayout((4, 3, 3, 4))
    sp = StateSpace(lay)
    term = sp.terminal(lay.weights)
    _, pol = _kernels_py.backward_single(sp.succ, 0.2, term, 30)
    fb = (rng.random((1, 20_000, 30)) > 0.2).astype(np.uint8)
    return {
        "layer_probs (K=4,2,2,2; N^T=6,4,5,9)": lambda m: m.layer_probs(k, nt, pmf),
        "lmax_many (200k vectors)": lambda m: m.lmax_many(k, nr),
        "replay_open_loop (100k GOPs)": lambda m: m.replay_open_loop(k, nt, delivered),
        "backward_single (400 states, 30 stages)": lambda m: m.backward_single(sp.succ, 0.2, term, 30),
        "replay_feedback (20k GOPs, 30 slots)": lambda m: m.replay_feedback(sp.succ, pol, sp.start,
                                                                            sp.levels, fb),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if compiled is None:
        print("compiled kernels not built; only the fallback is timed")
    print(f"{'kernel':44s} {'numpy ms':>10s} {'cython ms':>10s} {'speedup':>8s}")
    for name, fn in cases().items():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if compiled is None:
            print(f"{name:44s} {t_py:10.2f} {'-':>10s} {'-':>8s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat)) * 1e3
        print(f"{name:44s} {t_py:10.2f} {t_c:10.2f} {t_py / t_c:7.1f}x")


if __name__ == "__main__":
    main()
