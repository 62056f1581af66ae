"""Compare the compiled and numpy kernel backends.

Usage::

    python3 benchmarks/bench_kernels.py [--trajectories N] [--repeat R]
"""
import argparse
import time

import numpy as np

from qinstrument import _kernels_py, randmat, seqsim

try:
    from qinstrument import _kernels
except ImportError:
    _kernels = None


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def sampling_case(rng, dim, steps):
    ins = [randmat.instrument(rng, dim, 3, 2) for _ in range(steps)]
    times = np.cumsum(rng.uniform(0.1, 1.0, size=steps))
    sc = seqsim.Scenario(
        randmat.density(rng, dim),
        randmat.observable(rng, dim),
        tuple(seqsim.MeasurementStep(i, t) for i, t in zip(ins, times)),
    )
    return sc, seqsim._kernel_arrays(sc)[:5], np.ascontiguousarray(sc.initial_state.matrix)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--trajectories", type=int, default=20000)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    backends = [("python", _kernels_py)]
    if _kernels is not None:
        backends.append(("cython", _kernels))
    else:
        print("compiled kernels not built; timing the numpy fallback only")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'backend':<10}{'seconds':>12}{'speedup':>10}")

    for dim in (2, 4, 8):
        ins = randmat.instrument(rng, dim, 1, 3)
        kraus = next(iter(ins))[1].kraus
        rho = np.ascontiguousarray(randmat.density(rng, dim).matrix)
        base = None
        for name, mod in backends:
            t = best_of(lambda: [mod.kraus_apply(kraus, rho) for _ in range(5000)], args.repeat)
            base = base or t
            print(f"{f'kraus_apply d={dim} x5000':<28}{name:<10}{t:>12.4f}{base / t:>9.1f}x")

    for dim, steps in ((2, 2), (3, 4), (4, 6)):
        _, arrays, rho0 = sampling_case(rng, dim, steps)
        u = seqsim.trajectory_uniforms(1, args.trajectories, steps)
        base, ref = None, None
        for name, mod in backends:
            t = best_of(lambda: mod.sample_outcomes(*arrays, rho0, u), args.repeat)
            out = mod.sample_outcomes(*arrays, rho0, u)
            ref = out if ref is None else ref
            assert np.array_equal(out, ref), "backends disagree"
            base = base or t
            label = f"sample d={dim} steps={steps}"
            print(f"{label:<28}{name:<10}{t:>12.4f}{base / t:>9.1f}x")


if __name__ == "__main__":
    main()
