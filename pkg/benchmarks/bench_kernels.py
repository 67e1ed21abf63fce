#!/usr/bin/env python3
"""Benchmark the compiled kernels against the pure-numpy fallback.

Times the gate primitives, a full ansatz state preparation, and one
statistical cost evaluation on representative instances.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from hubbardopt import _kernels_py
from hubbardopt.model import GridSpec, HubbardParams, HubbardInstance, half_filling

try:
    from hubbardopt import _kernels_cy
except ImportError:
    _kernels_cy = None


def timeit(fn, repeats):
    fn()  # warm up
    t0 = time.perf_counter()
    for _ in range(repeats):
        fn()
    return (time.perf_counter() - t0) / repeats


def random_amps(nqubits, seed=0):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=1 << nqubits) + 1j * rng.normal(size=1 << nqubits)
    amps /= np.linalg.norm(amps)
    return np.ascontiguousarray(amps, dtype=np.complex128)


def bench_primitives(impl, nqubits, repeats):
    amps = random_amps(nqubits)
    j, k = 1, nqubits - 2
    smask = ((1 << k) - 1) & ~((1 << (j + 1)) - 1)
    rows = {}
    rows["hopping_rotation"] = timeit(
        lambda: impl.hopping_rotation(amps, j, k, smask, 0.921, 0.389), repeats)
    rows["onsite_phase"] = timeit(
        lambda: impl.onsite_phase(amps, (1 << j) | (1 << k), 0.921, 0.389), repeats)
    rows["pair_hadamard"] = timeit(lambda: impl.pair_hadamard(amps, j, k), repeats)
    rows["fswap"] = timeit(lambda: impl.fswap(amps, j, k), repeats)
    rows["expect_hopping"] = timeit(
        lambda: impl.expect_hopping(amps, j, k, smask), repeats)
    return rows


def bench_cost(backend_name, instance, repeats):
    import importlib
    import os

    os.environ["HUBBARDOPT_KERNELS"] = backend_name
    import hubbardopt.kernels

    importlib.reload(hubbardopt.kernels)
    import hubbardopt.ansatz
    import hubbardopt.statevector

    importlib.reload(hubbardopt.statevector)
    importlib.reload(hubbardopt.ansatz)
    import hubbardopt.costfn

    importlib.reload(hubbardopt.costfn)
    from hubbardopt.ansatz import initial_parameters, spec_for
    from hubbardopt.costfn import statistical_cost

    theta = initial_parameters(spec_for(instance))
    rng = np.random.default_rng(1)
    return timeit(lambda: statistical_cost(instance, theta, rng), repeats)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=200)
    args = parser.parse_args()

    impls = [("python", _kernels_py)]
    if _kernels_cy is not None:
        impls.insert(0, ("cython", _kernels_cy))
    else:
        print("compiled extension not available; timing the fallback only\n")

    for nq in (12, 16, 18):
        print(f"== primitives on {nq} qubits ({1 << nq} amplitudes) ==")
        reps = max(5, args.repeats >> max(0, nq - 12))
        results = {name: bench_primitives(impl, nq, reps) for name, impl in impls}
        ops = next(iter(results.values()))
        header = f"{'kernel':18s}" + "".join(f"{name:>12s}" for name, _ in impls)
        if len(impls) == 2:
            header += f"{'speedup':>10s}"
        print(header)
        for op in ops:
            line = f"{op:18s}"
            for name, _ in impls:
                line += f"{results[name][op] * 1e6:10.1f}us"
            if len(impls) == 2:
                line += f"{results['python'][op] / results['cython'][op]:9.1f}x"
            print(line)
        print()

    grid = GridSpec(3, 2)
    inst = HubbardInstance(grid, HubbardParams(u=4.0), half_filling(grid), 5, 1000)
    print("== statistical cost, 3x2 half filling, 5 layers, 1000 shots ==")
    for name, _ in impls:
        t = bench_cost(name, inst, max(20, args.repeats // 4))
        print(f"{name:10s} {t * 1e3:8.3f} ms/call")


if __name__ == "__main__":
    main()
