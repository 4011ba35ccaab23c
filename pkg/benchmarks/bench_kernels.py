#!/usr/bin/env python3
"""Benchmark the jitted kernels against the pure-Python fallback.

Runs the same workloads twice in subprocesses (NOZZLEFLOW_NUMBA=1 / =0) and
prints a comparison table.  Pass --child <mode> to run one side in-process
(used internally), --quick for a smaller workload.
"""

import argparse
import json
import os
import subprocess
import sys
import time


def workload(quick):
    import numpy as np

    import nozzleflow as nf
    from nozzleflow import initialdata, nozzle, scheme

    c = nf.GasConstants.for_gamma(1.4)
    rng = np.random.default_rng(7)
    n_riemann = 2000 if quick else 20000

    # warm up the compile path before timing
    _ = nf.solve_riemann(nf.GasState.from_primitive(1.0, 0.1),
                         nf.GasState.from_primitive(0.7, -0.1), c)
    t0 = time.perf_counter()
    for _ in range(n_riemann):
        ul = nf.GasState.from_primitive(rng.uniform(0.1, 4.0),
                                        rng.uniform(-2, 2))
        ur = nf.GasState.from_primitive(rng.uniform(0.1, 4.0),
                                        rng.uniform(-2, 2))
        nf.solve_riemann(ul, ur, c)
    t_riemann = time.perf_counter() - t0

    geom = nozzle.NozzleGeometry.bump(0.15, X=1.0)
    ad = nozzle.admissibility_constants(c)
    dx = 0.02 if quick else 0.01
    b = nozzle.BoundFunction.auto_for(geom, ad, dx)
    u0 = initialdata.GaussianBumpData(rho_inf=1.0, rho_amp=0.25, width=0.3)
    M = scheme.select_M(u0, b, c)
    params = scheme.SchemeParameters.create(dx=dx, M=M, b=b, T=0.0, c=c)
    st, mesh = scheme.initialize(u0, params, geom, b, c)
    st, _ = scheme.advance(st, params, geom, b, c, mesh)   # warm-up step
    steps = 20 if quick else 80
    cells = 0
    t0 = time.perf_counter()
    for _ in range(steps):
        st, rec = scheme.advance(st, params, geom, b, c, mesh)
        cells += rec.jcells.size
    t_scheme = time.perf_counter() - t0
    return {"numba": nf.NUMBA_ENABLED,
            "riemann_solves": n_riemann, "riemann_s": t_riemann,
            "scheme_cells": cells, "scheme_s": t_scheme}


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--quick", action="store_true")
    ap.add_argument("--child", choices=["0", "1"], default=None)
    args = ap.parse_args()

    if args.child is not None:
        out = workload(args.quick)
        print(json.dumps(out))
        return

    results = {}
    for mode in ("1", "0"):
        env = dict(os.environ, NOZZLEFLOW_NUMBA=mode)
        cmd = [sys.executable, os.path.abspath(__file__), "--child", mode]
        if args.quick:
            cmd.append("--quick")
        proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            sys.stderr.write(proc.stderr)
            raise SystemExit(f"child run (numba={mode}) failed")
        results[mode] = json.loads(proc.stdout.strip().splitlines()[-1])

    jit, plain = results["1"], results["0"]
    print(f"{'workload':<28}{'numba':>12}{'fallback':>12}{'speedup':>10}")
    r = jit["riemann_solves"]
    print(f"{r} riemann solves{'':<8}{jit['riemann_s']:>11.3f}s"
          f"{plain['riemann_s']:>11.3f}s"
          f"{plain['riemann_s'] / jit['riemann_s']:>9.1f}x")
    cells = jit["scheme_cells"]
    print(f"scheme step ({cells} cells){'':<2}{jit['scheme_s']:>11.3f}s"
          f"{plain['scheme_s']:>11.3f}s"
          f"{plain['scheme_s'] / jit['scheme_s']:>9.1f}x")


if __name__ == "__main__":
    main()
