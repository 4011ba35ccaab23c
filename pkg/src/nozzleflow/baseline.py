"""Plain staggered Lax-Friedrichs scheme with pointwise source evaluation.

Comparison baseline only: no steady profiles, no rarefaction fans, no
invariant projection.  This is NOT the modified scheme; it ignores the
well-balancing machinery entirely.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .diagnostics import _AreaCache
from .gas import GasConstants
from .nozzle import BoundFunction, NozzleGeometry, get_bundle
from .scheme import Mesh, SchemeParameters, _window_bounds


@dataclass
class BaselineSeries:
    ns: np.ndarray
    ts: np.ndarray
    energy: np.ndarray
    mass: np.ndarray
    negative_density_events: int


def run_baseline(u0, params: SchemeParameters, geom: NozzleGeometry,
                 b: BoundFunction, c: GasConstants, cutoff=True,
                 snapshot_cb=None):
    """March the baseline scheme; returns (xs, rho, m, BaselineSeries)."""
    dx, dt = params.dx, params.dt
    g = c.gamma
    bundle = get_bundle(geom, b)
    cache = _AreaCache(bundle, dx)
    X = geom.X
    extent = max(X, getattr(u0, "extent", X))
    W0 = int(np.ceil(extent / dx))
    neg = 0

    def avg_state(j):
        a_edge, b_edge = (j - 1) * dx, (j + 1) * dx
        cut = X if cutoff else np.inf
        hi = min(b_edge, cut)
        if hi <= a_edge:
            return 0.0, 0.0
        er, em = u0.average(a_edge, hi)
        f = (hi - a_edge) / (b_edge - a_edge)
        return er * f, em * f

    j_lo, j_hi = _window_bounds(0, W0)
    js = np.arange(j_lo, j_hi + 1, 2)
    rho = np.empty(js.size)
    m = np.empty(js.size)
    for i, j in enumerate(js):
        rho[i], m[i] = avg_state(int(j))
    amb_l = u0.ambient_left
    amb_r_rho, amb_r_m = (0.0, 0.0) if cutoff else (u0.ambient_right.rho,
                                                    u0.ambient_right.m)
    mesh = Mesh(W0=W0, ambient_left=amb_l,
                ambient_right=type(amb_l)(amb_r_rho, amb_r_m))

    def totals(js_, rho_, m_):
        e = 0.0
        ms = 0.0
        for i, j in enumerate(js_):
            eta, _ = _k.eta_q_k(max(rho_[i], 0.0), m_[i], g)
            ai = cache(int(j))
            e += eta * ai
            ms += max(rho_[i], 0.0) * ai
        return e, ms

    N = params.n_steps
    ns = [0]
    ts = [0.0]
    e0, m0 = totals(js, rho, m)
    energy = [e0]
    mass = [m0]
    if snapshot_cb is not None:
        snapshot_cb(0, js * dx, rho, m)
    for n in range(N):
        j_lo, j_hi = _window_bounds(n + 1, W0)
        njs = np.arange(j_lo, j_hi + 1, 2)
        nrho = np.empty(njs.size)
        nm = np.empty(njs.size)
        for i, j in enumerate(njs):
            il = (j - 1 - js[0]) // 2
            if 0 <= il < js.size:
                rl, ml = rho[il], m[il]
            else:
                rl, ml = amb_l.rho, amb_l.m
            ir = (j + 1 - js[0]) // 2
            if 0 <= ir < js.size:
                rr, mr = rho[ir], m[ir]
            else:
                rr, mr = amb_r_rho, amb_r_m
            f1l, f2l = _k.flux_k(rl, ml, g)
            f1r, f2r = _k.flux_k(rr, mr, g)
            al = float(geom.a((j - 1) * dx))
            ar = float(geom.a((j + 1) * dx))
            s1l, s2l = (al * ml, al * ml * ml / rl) if rl > 0 else (0.0, 0.0)
            s1r, s2r = (ar * mr, ar * mr * mr / rr) if rr > 0 else (0.0, 0.0)
            r_new = 0.5 * (rl + rr) - 0.5 * dt / dx * (f1r - f1l) \
                + 0.5 * dt * (s1l + s1r)
            m_new = 0.5 * (ml + mr) - 0.5 * dt / dx * (f2r - f2l) \
                + 0.5 * dt * (s2l + s2r)
            if r_new <= _k.RHO_FLOOR:
                if r_new < 0.0:
                    neg += 1
                r_new, m_new = 0.0, 0.0
            nrho[i] = r_new
            nm[i] = m_new
        js, rho, m = njs, nrho, nm
        e, ms = totals(js, rho, m)
        ns.append(n + 1)
        ts.append((n + 1) * dt)
        energy.append(e)
        mass.append(ms)
        if snapshot_cb is not None:
            snapshot_cb(n + 1, js * dx, rho, m)
    series = BaselineSeries(np.array(ns), np.array(ts), np.array(energy),
                            np.array(mass), neg)
    return js * dx, rho, m, series
