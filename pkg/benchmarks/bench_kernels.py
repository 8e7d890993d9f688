#!/usr/bin/env python3
"""Benchmark the numba kernels against the pure-numpy fallbacks.

Runs the slot-vector kernels both ways in-process, then times one full
leveled training iteration in subprocesses with HENN_NO_NUMBA toggled.

    python benchmarks/bench_kernels.py [--slots 32768] [--iters 2000] [--full]

--full uses the flower-classification batch at production scale
(hidden width 120, 32768 slots) for the end-to-end comparison; the default
uses a reduced hidden width so the whole script stays under a minute.
"""

import argparse
import os
import subprocess
import sys
import time
import textwrap

import numpy as np

from henn import _kernels

SCALE = float(2**30)


def time_fn(fn, *args, iters=2000):
    fn(*args)  # warm up / trigger JIT
    t0 = time.perf_counter()
    for _ in range(iters):
        fn(*args)
    return (time.perf_counter() - t0) / iters * 1e6  # microseconds


def bench_kernels(slots, iters):
    rng = np.random.default_rng(0)
    a = rng.uniform(-1, 1, slots)
    b = rng.uniform(-1, 1, slots)
    pairs = [
        ("rotate", (_kernels.np_rotate, (a, 129))),
        ("rotate_add", (_kernels.np_rotate_add, (a, 129))),
        ("quantize", (_kernels.np_quantize, (a, SCALE))),
        ("mult_rescale", (_kernels.np_mult_rescale, (a, b, SCALE))),
        ("cmult_rescale", (_kernels.np_cmult_rescale, (a, b, SCALE))),
    ]
    numba_fns = {}
    if _kernels.HAS_NUMBA:
        numba_fns = {
            "rotate": (_kernels.nb_rotate, (a, 129)),
            "rotate_add": (_kernels.nb_rotate_add, (a, 129)),
            "quantize": (_kernels.nb_quantize, (a, SCALE)),
            "mult_rescale": (_kernels.nb_mult_rescale, (a, b, SCALE)),
            "cmult_rescale": (_kernels.nb_cmult_rescale, (a, b, SCALE)),
        }
    print(f"\nkernels at {slots} slots, {iters} calls each")
    print(f"{'kernel':<14} {'numpy us':>10} {'numba us':>10} {'speedup':>8}")
    for name, (np_fn, args) in pairs:
        t_np = time_fn(np_fn, *args, iters=iters)
        if numba_fns:
            nb_fn, nb_args = numba_fns[name]
            t_nb = time_fn(nb_fn, *nb_args, iters=iters)
            print(f"{name:<14} {t_np:>10.1f} {t_nb:>10.1f} {t_np / t_nb:>7.2f}x")
        else:
            print(f"{name:<14} {t_np:>10.1f} {'n/a':>10} {'n/a':>8}")


END_TO_END = textwrap.dedent("""
    import time
    import numpy as np
    from henn import _kernels
    from henn.data import load_iris, preprocess
    from henn.train import train
    from henn.engine import EngineConfig

    batch = preprocess(load_iris(), "minmax")
    hidden = {hidden}
    slots = {slots}
    _kernels.warmup()
    t0 = time.perf_counter()
    rep = train(batch, loss="sle2", hidden=hidden, eta=0.01, iterations=1,
                backend="leveled", seed=0,
                engine_config=EngineConfig(slots=slots, backend="leveled"))
    dt = time.perf_counter() - t0
    print(f"numba={{_kernels.HAS_NUMBA}} hidden={{hidden}} slots={{slots}}: "
          f"{{dt:.2f}}s per iteration (loss {{rep.iterations[0]['loss']:.4f}})")
""")


def bench_end_to_end(full):
    hidden = 120 if full else 16
    slots = 32768 if full else 4096
    code = END_TO_END.format(hidden=hidden, slots=slots)
    print("\nend-to-end leveled training iteration (subprocess per backend):")
    for disable in ("0", "1"):
        env = dict(os.environ, HENN_NO_NUMBA=disable)
        subprocess.run([sys.executable, "-c", code], env=env, check=True)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--slots", type=int, default=32768)
    ap.add_argument("--iters", type=int, default=2000)
    ap.add_argument("--full", action="store_true")
    args = ap.parse_args()
    print(f"numba available and enabled: {_kernels.HAS_NUMBA}")
    bench_kernels(args.slots, args.iters)
    bench_end_to_end(args.full)


if __name__ == "__main__":
    main()
