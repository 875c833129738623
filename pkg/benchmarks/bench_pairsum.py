"""Time the compiled pair-sum kernel against the numpy fallback.

    python3 benchmarks/bench_pairsum.py [--n 64 128] [--repeat 3]

Prints one row per grid size with the best wall time of each backend,
the speedup and the largest absolute difference between the two results.
"""
from __future__ import annotations

import argparse
import math
import time

import numpy as np

from nlteleport import _pairsum_py
from nlteleport.channel import GAUSS_CUT, OpticalConfig
from nlteleport.modes import LG, MomentumGrid, mode_spectrum

try:
    from nlteleport._pairsum import contract_pair as compiled
except ImportError:  # extension not built
    compiled = None


def _inputs(n: int):
    # narrow pump relative to the mode: the window radius grows with w_0 / w_D
    cfg = OpticalConfig.default(L_p=1e-6, L_D=1e-6, w_p=200e-6, w_D=200e-6, w_0=100e-6)
    grid = MomentumGrid.for_waist(cfg.w_0, n=n)
    w = mode_spectrum(LG(1, 0, cfg.w_0), grid).samples * grid.dq**2
    radius = int(math.ceil(2.0 * math.sqrt(GAUSS_CUT) / (cfg.w_D * grid.dq)))
    args = (
        np.ascontiguousarray(w, dtype=np.complex128),
        np.ascontiguousarray(grid.q),
        cfg.w_D**2 / 4.0,
        cfg.coeff("p"),
        cfg.coeff("A"),
        cfg.coeff("C"),
        0.5 * cfg.L_D,
        0,
        cfg.gamma_sinc,
        radius,
    )
    return args


def _best(fn, args, repeat: int) -> tuple[float, np.ndarray]:
    best, out = math.inf, None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = np.asarray(fn(*args))
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--n", type=int, nargs="+", default=[32, 64, 128])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if compiled is None:
        print("compiled extension not available; only the fallback can run")
    print(f"{'n':>5} {'radius':>7} {'python_s':>10} {'cython_s':>10} {'speedup':>8} {'max_diff':>10}")
    for n in args.n:
        inputs = _inputs(n)
        tp, op = _best(_pairsum_py.contract_pair, inputs, args.repeat)
        if compiled is None:
            print(f"{n:>5} {inputs[-1]:>7} {tp:>10.4f} {'-':>10} {'-':>8} {'-':>10}")
            continue
        tc, oc = _best(compiled, inputs, args.repeat)
        diff = float(np.max(np.abs(op - oc)))
        print(f"{n:>5} {inputs[-1]:>7} {tp:>10.4f} {tc:>10.4f} {tp / tc:>8.1f} {diff:>10.2e}")


if __name__ == "__main__":
    main()
