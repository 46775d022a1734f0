"""Compiled vs NumPy RK4 kernel on the one-period propagator of the oracle.

    python3 benchmarks/bench_rk4.py [--n 4] [--margin 20] [--repeat 3]
"""

import argparse
import math
import time

import numpy as np

from cavity_xy._kernels import rk4_evolve_compiled, rk4_evolve_py
from cavity_xy.couplings import margin_scaled_system
from cavity_xy.oracle import DEFAULT_STEP, OracleSystem, _frame, frame_period


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=4)
    ap.add_argument("--margin", type=float, default=20.0)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    frame = _frame(OracleSystem(*margin_scaled_system(args.n, args.margin)))
    period = frame_period(frame.nus)
    steps = math.ceil(period * frame.fastest / DEFAULT_STEP)
    h = period / steps
    eye = np.eye(frame.h0.shape[0], dtype=complex)
    y0 = eye[:, 0].copy()
    print(f"states {eye.shape[0]}, steps per period {steps}")

    cases = [("propagator", eye), ("vector", y0)]
    for label, y in cases:
        t_py, u_py = best_of(lambda: rk4_evolve_py(frame.h0, frame.drives, frame.nus, y, 0.0, h, steps), args.repeat)
        line = f"{label:<11} python {t_py * 1e3:9.2f} ms"
        if rk4_evolve_compiled is not None:
            t_c, u_c = best_of(
                lambda: rk4_evolve_compiled(frame.h0, frame.drives, frame.nus, y, 0.0, h, steps), args.repeat
            )
            line += f"  compiled {t_c * 1e3:9.2f} ms  speedup {t_py / t_c:5.1f}x  max diff {np.abs(u_py - u_c).max():.1e}"
        else:
            line += "  compiled extension not built"
        print(line)


if __name__ == "__main__":
    main()
