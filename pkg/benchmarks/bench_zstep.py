"""Compare the compiled and pure-Python z-step kernels.

Usage: python benchmarks/bench_zstep.py [--repeats N]
"""
import argparse
import time

import numpy as np

from coarray_doa import _backend
from coarray_doa.coarray import interpolate_init, lag_statistics, reference_matrix
from coarray_doa.geometry import ArrayGeometry
from coarray_doa.recovery import RecoveryConfig, cyclic_minimize, random_psd_init
from coarray_doa.signal_sim import SourceScene, generate_snapshots, sample_covariance
from coarray_doa.subproblem import ZStepProblem, solve_z_step


def scene_reference(snr):
    geom = ArrayGeometry(3, 5)
    sc = SourceScene.equal_power(np.linspace(-40, 40, 9), snr, 500, seed=1)
    return reference_matrix(interpolate_init(lag_statistics(sample_covariance(generate_snapshots(geom, sc)), geom)))


def timeit(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args()
    backends = _backend.available()
    print(f"available backends: {backends} (default {_backend.BACKEND})")
    ref = scene_reference(30.0)
    W = random_psd_init(ref.U, 0.05, np.random.default_rng(0))
    prob = ZStepProblem(W, ref, 40.0, tolerance=1e-12, max_iters=2000)
    print(f"{'case':<32}{'backend':<10}{'time [ms]':>12}{'iters':>8}{'us/iter':>10}")
    results = {}
    for be in backends:
        t, res = timeit(lambda: solve_z_step(prob, backend=be), args.repeats)
        results[be] = res
        print(f"{'single z-step, U=13':<32}{be:<10}{t * 1e3:>12.2f}{res.iterations:>8}"
              f"{t / res.iterations * 1e6:>10.1f}")
    for snr in (30.0, 0.0):
        ref = scene_reference(snr)
        for be in backends:
            cfg = RecoveryConfig(backend=be)
            t, st = timeit(lambda: cyclic_minimize(ref, cfg, seed=0), max(1, args.repeats // 2))
            print(f"{f'full recovery, 9 sources {snr:g} dB':<32}{be:<10}{t * 1e3:>12.2f}"
                  f"{sum(st.inner_iters):>8}{t / sum(st.inner_iters) * 1e6:>10.1f}")
    if len(results) == 2:
        a, b = results["compiled"].z, results["python"].z
        print(f"max |z_compiled - z_python| = {np.abs(a - b).max():.2e}")


if __name__ == "__main__":
    main()
