"""Compare the compiled and pure-Python kernels.

    python benchmarks/bench_kernels.py [--batch 200] [--repeat 3]

Times one full trajectory (10,000 RK4 steps, every step recorded) and a
batch of final-state runs, and checks the backends agree bit for bit.
"""
import argparse
import time

import numpy as np

from hetmix import _kernels
from hetmix.experiments import n2_grid
from hetmix.integrator import IntegrationConfig, final_states, simulate
from hetmix.model import ModelParams


def best_of(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--batch", type=int, default=200, help="runs in the batch benchmark")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    backends = _kernels.available()
    params = ModelParams(r0=(2.5, 3.5), h=0.5)
    cfg = IntegrationConfig(record_every=0.05)
    batch = [params.replace(n2=float(x)) for x in n2_grid(args.batch)]

    rows = {}
    for name, kern in sorted(backends.items()):
        t_single, traj = best_of(lambda: simulate(params, cfg, backend=kern), args.repeat)
        t_batch, (finals, _) = best_of(
            lambda: final_states(batch, IntegrationConfig(), backend=kern), args.repeat
        )
        rows[name] = (t_single, t_batch, traj.states, finals)
        print(f"{name:>7}: single run {t_single * 1e3:9.2f} ms   "
              f"batch of {args.batch} {t_batch:8.3f} s   ({t_batch / args.batch * 1e3:.2f} ms/run)")

    if len(rows) == 2:
        c, p = rows["cython"], rows["python"]
        same = np.array_equal(c[2], p[2]) and np.array_equal(c[3], p[3])
        print(f"speedup: single {p[0] / c[0]:.0f}x, batch {p[1] / c[1]:.0f}x; "
              f"bitwise identical: {'yes' if same else 'NO'}")
    else:
        print("compiled extension not available; only the fallback was timed")


if __name__ == "__main__":
    main()
