"""Compare the numba and numpy backends of the Langevin inner loop.

Times the affine recursion on its own and one full trajectory at the
certification point, then checks that both backends produce the same record.

    python3 benchmarks/bench_kernels.py [--steps N] [--repeat R]
"""

import argparse
import time

import numpy as np

from lockedlaser import langevin
from lockedlaser.kernels import Propagator
from lockedlaser.spectra import TransferModel


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench_recursion(steps, repeat, stride=63):
    op, cfg = langevin.certification_setup()
    model = TransferModel.from_operating_point(op)
    M, B = langevin._step_operators(model.drift, model.noise_cov.matrix, cfg, stride)
    z = np.random.default_rng(0).standard_normal((steps, 3))
    out = {}
    for backend in ("numba", "numpy"):
        prop = Propagator(M, B, backend)
        rec = np.empty((steps // stride, 3))
        prop.advance(z[:stride * 10], np.zeros(3), stride, rec)  # compile / warm up
        x = np.zeros(3)

        def run():
            x[:] = 0.0
            prop.advance(z, x, stride, rec)

        t = best_of(run, repeat)
        out[backend] = (t, rec.copy())
        print(f"recursion  {backend:6s} {steps:>10d} steps  {t:8.4f} s  "
              f"{steps / t / 1e6:7.2f} Msteps/s")
    diff = np.max(np.abs(out["numba"][1] - out["numpy"][1])) / np.max(np.abs(out["numba"][1]))
    print(f"recursion  speed-up {out['numpy'][0] / out['numba'][0]:.2f}x, "
          f"max relative difference {diff:.2e}")


def bench_trajectory(duration, repeat):
    op, cfg = langevin.certification_setup()
    cfg = langevin.SimConfig(**{**cfg.to_dict(), "duration": duration})
    model = TransferModel.from_operating_point(op)
    A, Q = model.drift, model.noise_cov.matrix
    stride = langevin.resolve_stride(A, cfg)
    n = int(duration / (stride * cfg.dt))
    for backend in ("numba", "numpy"):
        def run():
            rng = langevin.trajectory_streams(cfg.seed, 1)[0]
            langevin.run_trajectory(A, Q, cfg, rng, n, stride, backend=backend)

        run()
        t = best_of(run, repeat)
        print(f"trajectory {backend:6s} duration {duration:g}/kappa  {t:8.4f} s")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=2_000_000)
    parser.add_argument("--duration", type=float, default=2000.0)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    bench_recursion(args.steps, args.repeat)
    bench_trajectory(args.duration, args.repeat)


if __name__ == "__main__":
    main()
