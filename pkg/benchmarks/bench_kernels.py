#!/usr/bin/env python3
"""Benchmark the compiled kernels against the numpy fallback.

Both backends produce bit-identical outcome arrays (asserted here), so this
is purely a throughput comparison.  Run from the repo root:

    python benchmarks/bench_kernels.py [--shots N]
"""

import argparse
import math
import time

import numpy as np

from evlg.kernels import RamseyKernelParams, available_backends
from evlg.protocols import RamseyConfig, zeno_block_probability
from evlg.qubit import Branch, CoherenceModel, DecayShape


def bench(fn, out, repeats=3):
    best = math.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(out)
        best = min(best, time.perf_counter() - t0)
    return best


def workloads(shots):
    params = RamseyKernelParams.from_config(
        RamseyConfig(
            wait_us=80.0,
            coherence=CoherenceModel(DecayShape.EXPONENTIAL, 130.0),
            intercept=Branch.UP,
        ),
        prep_error=0.01,
        readout_error=0.01,
    )

    def ramsey(mod):
        return lambda out: mod.ramsey_fill(
            out, 7, 0, 1, 0,
            params.c1, params.s1, params.cp1, params.sp1,
            params.c2, params.s2, params.cp2, params.sp2,
            params.coh, params.keep, params.half_flip,
            params.intercept_code, params.prep_error, params.readout_error,
        )

    def mz(mod):
        return lambda out: mod.mz_fill(out, 7, 101, 0, 0, 1, 0.5, 0.0)

    def repeated(mod):
        return lambda out: mod.repeated_fill(out, 7, 102, 0, 0, 0.5, 1000)

    def zeno(mod):
        return lambda out: mod.zeno_fill(out, 7, 103, 0, 0, 25, zeno_block_probability(25))

    return [
        ("ramsey (intercept arm)", ramsey, shots),
        ("mz single round", mz, shots * 4),
        ("repeated rescue eps=0.5", repeated, shots),
        ("zeno 25 cycles", zeno, shots),
    ]


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--shots", type=int, default=500_000)
    args = parser.parse_args()

    impls = available_backends()
    print(f"backends: {', '.join(impls)}")
    print(f"{'workload':<26}" + "".join(f"{name + ' Mshot/s':>20}" for name in impls)
          + ("{:>12}".format("speedup") if len(impls) == 2 else ""))
    for label, make, n in workloads(args.shots):
        rates = {}
        outputs = {}
        for name, mod in impls.items():
            out = np.empty(n, dtype=np.uint8)
            dt = bench(make(mod), out)
            rates[name] = n / dt / 1e6
            outputs[name] = out.copy()
        row = f"{label:<26}" + "".join(f"{rates[name]:>20.2f}" for name in impls)
        if len(outputs) == 2:
            a, b = outputs.values()
            assert np.array_equal(a, b), f"backend outputs differ for {label}"
            names = list(impls)
            row += f"{rates[names[1]] / rates[names[0]]:>12.2f}"
        print(row)


if __name__ == "__main__":
    main()
