"""Benchmark the compiled lookup-table kernels against the numpy fallback.

Run from the repository root after an editable install:

    python benchmarks/bench_kernels.py

The same workloads are timed against both implementations, plus one
end-to-end SGD epoch per backend (backend selection happens at import time,
so the epoch comparison re-executes this script in a subprocess with
NNALIGN_PURE_PYTHON=1).
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from nnalign.kernels import _numpy_impl

try:
    from nnalign.kernels import _core
except ImportError:
    _core = None


def _time(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def bench_kernels(repeats=20):
    rng = np.random.default_rng(0)
    impls = [("numpy", _numpy_impl)] + ([("cython", _core)] if _core else [])
    for rows, width, n_ids in ((30000, 128, 4096), (500, 16, 256)):
        table = rng.normal(size=(rows, width))
        ids = rng.integers(0, rows, size=n_ids)
        grad_rows = rng.normal(size=(n_ids, width))
        out = np.zeros_like(table)
        print(f"table {rows}x{width}, {n_ids} ids:")
        for name, impl in impls:
            g = _time(lambda: impl.gather_rows(table, ids), repeats)
            s = _time(lambda: impl.scatter_add_rows(out, ids, grad_rows),
                      repeats)
            print(f"  {name:>6}: gather {g * 1e6:8.1f} us   "
                  f"scatter-add {s * 1e6:8.1f} us")


def bench_epoch():
    from nnalign import kernels
    from nnalign.corpus import ParallelCorpus, build_vocab, encode
    from nnalign.model import AlignmentModel, EncoderConfig
    from nnalign.training import AggregationOp, TrainConfig, sgd_epoch

    rng = np.random.default_rng(1)
    words = [f"w{k}" for k in range(200)]
    lines = [[words[int(rng.integers(200))] for _ in range(10)]
             for _ in range(200)]
    vocab = build_vocab((w for line in lines for w in line), 200)
    corpus = ParallelCorpus([(encode(line, vocab), encode(line, vocab))
                             for line in lines])
    cfg = EncoderConfig(k1=3, k2=3, d_emb_word=64, d_hu=64, d_emb=64)
    model = AlignmentModel(cfg, EncoderConfig(
        k1=3, k2=3, d_emb_word=64, d_hu=64, d_emb=64), vocab, vocab, seed=0)
    config = TrainConfig(learning_rate=1e-4, epochs=1,
                         aggregation=AggregationOp("lse", 1.0))
    start = time.perf_counter()
    sgd_epoch(corpus, model, config, np.random.default_rng(0))
    wall = time.perf_counter() - start
    print(f"  {kernels.BACKEND:>6}: one epoch, 200 pairs: {wall:.2f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--epoch-only", action="store_true",
                        help=argparse.SUPPRESS)  # subprocess entry point
    args = parser.parse_args()
    if args.epoch_only:
        bench_epoch()
        return
    print(f"compiled extension available: {_core is not None}\n")
    bench_kernels()
    print("\nend-to-end SGD epoch:")
    bench_epoch()
    if _core is not None:
        env = dict(os.environ, NNALIGN_PURE_PYTHON="1")
        subprocess.run([sys.executable, __file__, "--epoch-only"], env=env,
                       check=True)


if __name__ == "__main__":
    main()
