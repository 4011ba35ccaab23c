"""Numeric verification of the invariant-region bounds, the energy
inequality, and the discrete energy recurrence.

The monitored quantities are the weighted totals int A(x) eta*(u) dx and
int A(x) rho dx (node and trace variants), the per-node recurrence

    eta*(u_j^{n+1}) <= (eta*(u_{j+1}^n)+eta*(u_{j-1}^n))/2
                       - dt/(2 dx) (q(u_{j+1}^n) - q(u_{j-1}^n))
                       + R(x_{j+1}, u_{j+1}^n) dt - R(x_{j-1}, u_{j-1}^n) dt
                       + (1/(2 dx)) iint (A'/A) q dx dt + o(dx),

and bookkeeping counters (projection clamps, vacuum-threshold events,
half-time Rankine-Hugoniot residuals, the accumulated squared time jumps
of the traces).
"""

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels as _k
from .gas import GasConstants, GasState
from .nozzle import BoundFunction, NozzleGeometry, get_bundle
from .scheme import (Mesh, SchemeParameters, StaggeredState, StepRecord,
                     gather_neighbors)


@dataclass
class EnergyReport:
    """Per-step totals and bound/consistency monitors."""

    n: int
    t: float
    total_energy: float        # node variant: sum eta*(u_j) int_Ij A
    total_mass: float          # node variant: sum rho_j int_Ij A
    energy_bound: float        # total energy of the step-0 node states
    slack: float               # bound - total
    clamp_count: int
    vacuum_count: int
    max_rh_residual: float
    max_envelope_violation: float
    max_pre_violation: float
    jump_sum: float            # accumulated int |u(t_k-0) - u(t_k+0)|^2 dx
    jump_ceiling: float
    jump_flag: bool

    @property
    def energy_ok(self):
        return self.slack >= -1e-10


@dataclass
class RecurrenceAudit:
    """Per-node violations of the discrete energy recurrence for one step."""

    n: int
    js: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    worst_raw: float           # max(0, LHS - RHS)
    worst_slacked: float       # max(0, LHS - RHS - c dx^{3/2})
    worst_j: int
    slack_coeff: float


def correction_R(x, u: GasState, params: SchemeParameters,
                 geom: NozzleGeometry, b: BoundFunction, c: GasConstants):
    """The three-term correction entering the energy recurrence.

    Vacuum states contribute zero; every b-term is odd in m, the a-term is
    even (it cancels pairwise in the straight-duct recurrence).
    """
    if u.is_vacuum:
        return 0.0
    g = c.gamma
    th = c.theta
    rho, m = u.rho, u.m
    bx = float(b.b(x))
    ax = float(geom.a(x))
    rt = _k.pow_g(rho, th)
    t1 = -(params.dx / (4.0 * params.dt)) * bx * (
        3.0 / (g - 1.0) * rt * m + m ** 3 / (2.0 * _k.pow_g(rho, th + 2.0)))
    t2 = (params.dt / (4.0 * params.dx)) * ax * (
        g / (g - 1.0) * _k.pow_g(rho, 2.0 * th) * m * m / rho
        + 0.5 * m ** 4 / rho ** 3)
    t3 = -(params.dt / (4.0 * params.dx)) * bx * (
        (g + th + 1.0) / ((g - 1.0) * th) * m * _k.pow_g(rho, 3.0 * th)
        + (g + 3.0 * th + 4.0) / (2.0 * th) * m ** 3 * rt / rho ** 2
        + m ** 5 / (2.0 * _k.pow_g(rho, th + 4.0)))
    return t1 + t2 + t3


class _AreaCache:
    """Memoized integrals of A over the staggered intervals I_j."""

    def __init__(self, bundle, dx):
        self.bundle = bundle
        self.dx = dx
        self._vals = {}

    def __call__(self, j):
        got = self._vals.get(j)
        if got is None:
            got = float(_k.int_A_k(self.bundle.geo, (j - 1) * self.dx,
                                   (j + 1) * self.dx))
            self._vals[j] = got
        return got


def total_energy_nodes(state: StaggeredState, geom: NozzleGeometry,
                       b: BoundFunction, c: GasConstants,
                       params: SchemeParameters, _cache=None):
    """sum_j eta*(u_j^n) int_{I_j} A dx over the window (node variant)."""
    bundle = get_bundle(geom, b)
    cache = _cache or _AreaCache(bundle, params.dx)
    total = 0.0
    for i, j in enumerate(state.js):
        if state.rho[i] <= 0.0:
            continue
        eta, _q = _k.eta_q_k(state.rho[i], state.m[i], c.gamma)
        total += eta * cache(int(j))
    return total


def total_mass_nodes(state: StaggeredState, geom: NozzleGeometry,
                     b: BoundFunction, c: GasConstants,
                     params: SchemeParameters, j_range=None, _cache=None):
    """sum_j rho_j^n int_{I_j} A dx, optionally over a fixed index range."""
    bundle = get_bundle(geom, b)
    cache = _cache or _AreaCache(bundle, params.dx)
    total = 0.0
    for i, j in enumerate(state.js):
        if j_range is not None and not (j_range[0] <= j <= j_range[1]):
            continue
        total += state.rho[i] * cache(int(j))
    return total


def total_energy_trace(record: StepRecord, t_offset):
    """int A eta*(u^Delta(x, t)) dx from the cell traces (trace variant)."""
    return float(_k.energy_trace_step(
        record.jcells, record.offs, record.ncount, record.kinds, record.pars,
        record.spds, record.par, record.bundle.geo, float(t_offset)))


def envelope_violation(state: StaggeredState, params: SchemeParameters,
                       bundle, c: GasConstants):
    """Worst post-projection envelope violation over the stored invariants."""
    worst = 0.0
    M = params.M
    for i, j in enumerate(state.js):
        if state.rho[i] <= 0.0:
            continue
        Bx = _k.geo_B(bundle.geo, j * params.dx)
        lo = -M * math.exp(-Bx)
        up = M * math.exp(Bx)
        worst = max(worst, lo - state.z[i], state.w[i] - up)
    return max(worst, 0.0)


def audit_recurrence(record: StepRecord, state_n: StaggeredState,
                     state_np1: StaggeredState, geom: NozzleGeometry,
                     b: BoundFunction, c: GasConstants, mesh: Mesh,
                     slack_coeff=1.0) -> RecurrenceAudit:
    """Evaluate both sides of the energy recurrence at every new node."""
    params = record.params
    dx, dt = params.dx, params.dt
    jc = record.jcells
    lrho, lm, rrho, rm = gather_neighbors(state_n, jc, mesh)
    aq = np.empty(jc.size)
    _k.cell_aq_integral_step(jc, record.offs, record.ncount, record.kinds,
                             record.pars, record.spds, record.par,
                             record.bundle.geo, aq)
    lhs = np.empty(jc.size)
    rhs = np.empty(jc.size)
    for ci, j in enumerate(jc):
        i_new = state_np1.index_of(int(j))
        eta_new, _ = _k.eta_q_k(state_np1.rho[i_new], state_np1.m[i_new],
                                c.gamma)
        lhs[ci] = eta_new
        eta_l, q_l = _k.eta_q_k(lrho[ci], lm[ci], c.gamma)
        eta_r, q_r = _k.eta_q_k(rrho[ci], rm[ci], c.gamma)
        r_l = correction_R((j - 1) * dx, GasState(lrho[ci], lm[ci]),
                           params, geom, b, c)
        r_r = correction_R((j + 1) * dx, GasState(rrho[ci], rm[ci]),
                           params, geom, b, c)
        rhs[ci] = (0.5 * (eta_l + eta_r)
                   - 0.5 * dt / dx * (q_r - q_l)
                   + (r_r - r_l) * dt
                   - aq[ci] / (2.0 * dx))
    raw = np.maximum(lhs - rhs, 0.0)
    slacked = np.maximum(lhs - rhs - slack_coeff * dx ** 1.5, 0.0)
    worst_i = int(np.argmax(raw))
    return RecurrenceAudit(
        n=record.n, js=jc.copy(), lhs=lhs, rhs=rhs,
        worst_raw=float(raw[worst_i]), worst_slacked=float(np.max(slacked)),
        worst_j=int(jc[worst_i]), slack_coeff=slack_coeff)


class EnergyMonitor:
    """Observer producing an EnergyReport after every step."""

    def __init__(self, ceiling_factor=10.0):
        self.ceiling_factor = ceiling_factor
        self.reports = []
        self._cache = None
        self._jump_sum = 0.0
        self._j5 = None

    def on_start(self, state, ctx):
        params = ctx["params"]
        geom, b, c = ctx["geom"], ctx["bound"], ctx["constants"]
        bundle = get_bundle(geom, b)
        self._ctx = ctx
        self._cache = _AreaCache(bundle, params.dx)
        e0 = total_energy_nodes(state, geom, b, c, params, self._cache)
        m0 = total_mass_nodes(state, geom, b, c, params, _cache=self._cache)
        self.energy_bound = e0
        self.reports.append(EnergyReport(
            n=0, t=0.0, total_energy=e0, total_mass=m0, energy_bound=e0,
            slack=0.0, clamp_count=0, vacuum_count=0, max_rh_residual=0.0,
            max_envelope_violation=envelope_violation(state, params, bundle, c),
            max_pre_violation=0.0, jump_sum=0.0, jump_ceiling=math.inf,
            jump_flag=False))

    def on_step(self, prev, new, record: StepRecord):
        ctx = self._ctx
        params, geom, b, c = (ctx["params"], ctx["geom"], ctx["bound"],
                              ctx["constants"])
        bundle = record.bundle
        e = total_energy_nodes(new, geom, b, c, params, self._cache)
        mass = total_mass_nodes(new, geom, b, c, params, _cache=self._cache)
        jump = float(_k.jump_integral_step(
            record.jcells, record.offs, record.ncount, record.kinds,
            record.pars, record.spds, record.par, bundle.geo, new.z, new.w))
        self._jump_sum += jump
        n = new.n
        if n == 5:
            self._j5 = self._jump_sum
        if self._j5 is not None and n > 5 and self._j5 > 0.0:
            ceiling = self.ceiling_factor * (self._j5 / 5.0) * n
        else:
            ceiling = math.inf
        self.reports.append(EnergyReport(
            n=n, t=n * params.dt, total_energy=e, total_mass=mass,
            energy_bound=self.energy_bound, slack=self.energy_bound - e,
            clamp_count=record.clamp_count, vacuum_count=record.vacuum_count,
            max_rh_residual=record.max_rh_residual(),
            max_envelope_violation=envelope_violation(new, params, bundle, c),
            max_pre_violation=record.max_pre_violation,
            jump_sum=self._jump_sum, jump_ceiling=ceiling,
            jump_flag=self._jump_sum > ceiling))

    @property
    def min_slack(self):
        return min(r.slack for r in self.reports)


class RecurrenceAuditor:
    """Observer accumulating recurrence audits (never aborts a run)."""

    def __init__(self, slack_coeff=1.0):
        self.slack_coeff = slack_coeff
        self.audits = []

    def on_start(self, state, ctx):
        self._ctx = ctx

    def on_step(self, prev, new, record):
        ctx = self._ctx
        self.audits.append(audit_recurrence(
            record, prev, new, ctx["geom"], ctx["bound"], ctx["constants"],
            ctx["mesh"], self.slack_coeff))

    @property
    def worst_raw(self):
        return max((a.worst_raw for a in self.audits), default=0.0)

    @property
    def worst_slacked(self):
        return max((a.worst_slacked for a in self.audits), default=0.0)


def monitor(state: StaggeredState, record, geom, b, c, params, energy0,
            jump_sum=0.0, jump_ceiling=math.inf) -> EnergyReport:
    """One-shot report for a state/step pair (observer-free variant)."""
    bundle = get_bundle(geom, b)
    e = total_energy_nodes(state, geom, b, c, params)
    mass = total_mass_nodes(state, geom, b, c, params)
    return EnergyReport(
        n=state.n, t=state.n * params.dt, total_energy=e, total_mass=mass,
        energy_bound=energy0, slack=energy0 - e,
        clamp_count=record.clamp_count if record is not None else 0,
        vacuum_count=record.vacuum_count if record is not None else 0,
        max_rh_residual=record.max_rh_residual() if record is not None else 0.0,
        max_envelope_violation=envelope_violation(state, params, bundle, c),
        max_pre_violation=record.max_pre_violation if record is not None else 0.0,
        jump_sum=jump_sum, jump_ceiling=jump_ceiling,
        jump_flag=jump_sum > jump_ceiling)
