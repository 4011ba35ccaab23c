import math

import numpy as np
import pytest
from scipy.optimize import brentq

from nozzleflow import (GasConstants, GasState, characteristic_speeds,
                        entropy_admissible, lax_speed, rh_speed, sample,
                        shock_velocity_jump, solve_riemann, to_invariants)
from nozzleflow.riemann import HugoniotError, wave_breakpoints

C14 = GasConstants.for_gamma(1.4)


def _p(rho, g):
    return rho ** g / g


def _hjump_oracle(rho, rho0, g):
    # fresh transcription of the shock-curve velocity increment
    if rho == rho0:
        return 0.0
    return math.sqrt((_p(rho, g) - _p(rho0, g))
                     / (rho * rho0 * (rho - rho0))) * (rho - rho0)


class TestShockVelocityJump:
    def test_zero_strength(self):
        assert shock_velocity_jump(1.0, 1.0, C14) == 0.0

    def test_dual_implementation_oracle(self):
        got = shock_velocity_jump(2.0, 1.0, C14)
        assert got == pytest.approx(_hjump_oracle(2.0, 1.0, 1.4), rel=1e-13)
        got = shock_velocity_jump(0.37, 1.21, C14)
        assert got == pytest.approx(_hjump_oracle(0.37, 1.21, 1.4), rel=1e-13)

    def test_weak_limit_slope(self):
        # d(jump)/d(rho) -> sqrt(p'(rho0)) / rho0-ish scaling: the ratio
        # jump/(rho-rho0) tends to sqrt(p'(rho0))/rho0 ... verified through
        # the lax_speed second branch instead: S(rho0, rho0) = sqrt(p'(rho0))
        for rho0 in (0.5, 1.0, 2.0):
            for eps in (1e-8, -1e-8):
                rho = rho0 * (1 + eps)
                s = lax_speed(rho, rho0, C14)
                assert s == pytest.approx(math.sqrt(1.4 * rho0 ** 0.4 / 1.4),
                                          abs=1e-6)

    def test_both_vacuum_rejected(self):
        with pytest.raises(ValueError):
            shock_velocity_jump(0.0, 0.0, C14)


class TestLaxSpeed:
    def test_sonic_at_equal_density(self):
        assert lax_speed(1.0, 1.0, C14) == pytest.approx(1.0, rel=1e-14)
        c53 = GasConstants.for_gamma(5 / 3)
        assert lax_speed(1.0, 1.0, c53) == pytest.approx(1.0, rel=1e-14)

    def test_direct_oracle(self):
        want = math.sqrt(2.0 * (_p(2.0, 1.4) - _p(1.0, 1.4)) / (1.0 * 1.0))
        assert lax_speed(2.0, 1.0, C14) == pytest.approx(want, rel=1e-13)

    def test_vacuum_upstream_rejected(self):
        with pytest.raises(ValueError):
            lax_speed(1.0, 0.0, C14)

    def test_positive(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            r0 = rng.uniform(0.05, 5.0)
            r = rng.uniform(0.01, 5.0)
            assert lax_speed(r, r0, C14) > 0.0


def _shock_pair(rho0, v0, rho, g, family):
    """(left, right) states across a genuine shock of the given family."""
    c = GasConstants.for_gamma(g)
    if family == 1:
        # left upstream (rho0, v0), downstream density rho > rho0
        v = v0 - _hjump_oracle(rho, rho0, g)
        return GasState.from_primitive(rho0, v0), GasState.from_primitive(rho, v)
    # 2-shock: right upstream (rho0, v0), left (downstream) density rho > rho0
    v = v0 + _hjump_oracle(rho, rho0, g)
    return GasState.from_primitive(rho, v), GasState.from_primitive(rho0, v0)


class TestRHSpeed:
    def test_weak_shock_tends_to_characteristic(self):
        u0 = GasState.from_primitive(1.0, 0.3)
        lam2 = characteristic_speeds(u0, C14)[1]
        errs = []
        for eps in (1e-2, 1e-3, 1e-4):
            ul, ur = _shock_pair(1.0, 0.3, 1.0 * (1 + eps), 1.4, 2)
            # ur is the upstream here; speed tends to lam2(upstream)
            errs.append(abs(rh_speed(ul, ur, C14) - lam2))
        assert errs[2] < errs[1] < errs[0]
        assert errs[2] < 1e-3

    def test_reflection_antisymmetry(self):
        ul, ur = _shock_pair(1.0, 0.4, 1.7, 1.4, 1)
        lam = rh_speed(ul, ur, C14)
        # reflect: x -> -x, m -> -m swaps sides and negates the speed
        ul_r = GasState(ur.rho, -ur.m)
        ur_r = GasState(ul.rho, -ul.m)
        assert rh_speed(ul_r, ur_r, C14) == pytest.approx(-lam, rel=1e-12)

    def test_mass_equation_oracle(self):
        # left (1, 0), right on the 2-family locus with rho = 2
        ul = GasState.from_primitive(1.0, 0.0)
        vr = 0.0 + _hjump_oracle(2.0, 1.0, 1.4)
        ur = GasState.from_primitive(2.0, vr)
        lam = rh_speed(ul, ur, C14)
        assert lam == pytest.approx((ur.m - ul.m) / (ur.rho - ul.rho),
                                    rel=1e-12)

    def test_off_locus_rejected(self):
        with pytest.raises(HugoniotError):
            rh_speed(GasState.from_primitive(1.0, 0.0),
                     GasState.from_primitive(2.0, 5.0), C14)

    def test_equal_states_rejected(self):
        u = GasState.from_primitive(1.0, 0.0)
        with pytest.raises(ValueError):
            rh_speed(u, u, C14)


def _oracle_middle(ul, ur, c):
    """Independent brute-force bisection for the middle state."""
    g, th = c.gamma, c.theta

    def K(r):
        return r ** th / th

    def phi_l(r):
        if r <= ul.rho:
            return ul.v + K(ul.rho) - K(r)
        return ul.v - _hjump_oracle(r, ul.rho, g)

    def phi_r(r):
        if r <= ur.rho:
            return ur.v - K(ur.rho) + K(r)
        return ur.v + _hjump_oracle(r, ur.rho, g)

    w_l = ul.v + K(ul.rho)
    z_r = ur.v - K(ur.rho)
    if w_l <= z_r:
        return 0.0, 0.5 * (w_l + z_r)
    lo, hi = 1e-12, max(ul.rho, ur.rho)
    while phi_l(hi) > phi_r(hi):
        hi *= 2
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if phi_l(mid) >= phi_r(mid):
            lo = mid
        else:
            hi = mid
    rm = 0.5 * (lo + hi)
    return rm, 0.5 * (phi_l(rm) + phi_r(rm))


def _oracle_region(ul, ur, c):
    """Region by sign analysis of the curve intersection."""
    g, th = c.gamma, c.theta

    def K(r):
        return r ** th / th
    # 1-wave is a shock iff the 2-curve lies below the 1-curve at rho_L
    phi_r_at_l = (ur.v - K(ur.rho) + K(ul.rho) if ul.rho <= ur.rho
                  else ur.v + _hjump_oracle(ul.rho, ur.rho, g))
    kind1 = "shock" if phi_r_at_l < ul.v else "rarefaction"
    phi_l_at_r = (ul.v + K(ul.rho) - K(ur.rho) if ur.rho <= ul.rho
                  else ul.v - _hjump_oracle(ur.rho, ul.rho, g))
    kind2 = "shock" if phi_l_at_r > ur.v else "rarefaction"
    return {("rarefaction", "rarefaction"): "I", ("shock", "rarefaction"): "II",
            ("shock", "shock"): "III", ("rarefaction", "shock"): "IV"}[
        (kind1, kind2)]


class TestSolveRiemann:
    def test_region_one_exact(self):
        sol = solve_riemann(GasState.from_primitive(1.0, 0.0),
                            GasState.from_primitive(1.0, 2.0), C14)
        assert sol.region == "I"
        iv = to_invariants(sol.middle, C14)
        assert iv.z == pytest.approx(-3.0, abs=1e-11)
        assert iv.w == pytest.approx(5.0, abs=1e-11)
        assert sol.middle.rho == pytest.approx(0.8 ** 5, rel=1e-10)
        assert sol.middle.v == pytest.approx(1.0, abs=1e-11)

    def test_identity(self):
        u = GasState.from_primitive(1.3, 0.4)
        sol = solve_riemann(u, u, C14)
        assert sol.middle.rho == pytest.approx(u.rho, rel=1e-12)
        assert sol.wave1.speed_lo == sol.wave1.speed_hi
        assert sol.wave2.speed_lo == sol.wave2.speed_hi

    def test_region_three_bisection_oracle(self):
        ul = GasState.from_primitive(1.0, 1.0)
        ur = GasState.from_primitive(1.0, -1.0)
        sol = solve_riemann(ul, ur, C14)
        assert sol.region == "III"
        assert sol.middle.rho > 1.0
        # independent: symmetric problem has v_M = 0, h(rho_M) = 1
        rho_m = brentq(lambda r: _hjump_oracle(r, 1.0, 1.4) - 1.0, 1.0, 10.0,
                       xtol=1e-13)
        assert sol.middle.rho == pytest.approx(rho_m, rel=1e-11)
        assert sol.middle.v == pytest.approx(0.0, abs=1e-11)

    def test_vacuum_middle(self):
        ul = GasState.from_primitive(0.1, -4.0)
        ur = GasState.from_primitive(0.1, 4.0)
        iv_l = to_invariants(ul, C14)
        iv_r = to_invariants(ur, C14)
        assert iv_l.w <= iv_r.z
        sol = solve_riemann(ul, ur, C14)
        assert sol.has_vacuum_middle
        assert sol.wave1.kind.kind == "rarefaction"
        assert sol.wave2.kind.kind == "rarefaction"

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            solve_riemann(GasState.from_primitive(1.0, math.nan),
                          GasState.from_primitive(1.0, 0.0), C14)

    def test_oracle_equivalence_random(self):
        rng = np.random.default_rng(99)
        for g in (1.2, 1.4, 5 / 3):
            c = GasConstants.for_gamma(g)
            for _ in range(60):
                ul = GasState.from_primitive(rng.uniform(0.01, 10),
                                             rng.uniform(-5, 5))
                ur = GasState.from_primitive(rng.uniform(0.01, 10),
                                             rng.uniform(-5, 5))
                sol = solve_riemann(ul, ur, c)
                rm, vm = _oracle_middle(ul, ur, c)
                assert sol.middle.rho == pytest.approx(rm, rel=1e-9, abs=1e-9)
                if rm > 1e-9:
                    assert sol.middle.v == pytest.approx(vm, rel=1e-8,
                                                         abs=1e-9)
                    assert sol.region == _oracle_region(ul, ur, c)

    def test_middle_on_both_curves(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            ul = GasState.from_primitive(rng.uniform(0.1, 5),
                                         rng.uniform(-2, 2))
            ur = GasState.from_primitive(rng.uniform(0.1, 5),
                                         rng.uniform(-2, 2))
            sol = solve_riemann(ul, ur, C14)
            if sol.middle.rho < 1e-10:
                continue
            rm = sol.middle.rho
            v1 = (ul.v + (ul.rho ** 0.2 - rm ** 0.2) / 0.2 if rm <= ul.rho
                  else ul.v - _hjump_oracle(rm, ul.rho, 1.4))
            v2 = (ur.v - (ur.rho ** 0.2 - rm ** 0.2) / 0.2 if rm <= ur.rho
                  else ur.v + _hjump_oracle(rm, ur.rho, 1.4))
            assert abs(v1 - sol.middle.v) < 1e-10 * (1 + abs(v1))
            assert abs(v2 - sol.middle.v) < 1e-10 * (1 + abs(v2))

    def test_wave_ordering(self):
        rng = np.random.default_rng(8)
        for _ in range(100):
            sol = solve_riemann(
                GasState.from_primitive(rng.uniform(0.1, 5), rng.uniform(-2, 2)),
                GasState.from_primitive(rng.uniform(0.1, 5), rng.uniform(-2, 2)),
                C14)
            if sol.middle.rho > 0:
                assert sol.wave1.speed_hi <= sol.wave2.speed_lo + 1e-12

    def test_weak_wave_speeds_converge(self):
        ul = GasState.from_primitive(1.0, 0.2)
        l1, l2 = characteristic_speeds(ul, C14)
        prev = None
        for eps in (1e-2, 1e-3, 1e-4):
            ur = GasState.from_primitive(1.0 + eps, 0.2 + eps / 3)
            sol = solve_riemann(ul, ur, C14)
            err = max(abs(sol.wave1.speed_lo - l1), abs(sol.wave2.speed_hi - l2))
            if prev is not None:
                assert err < prev
            prev = err
        assert err < 1e-3


class TestSample:
    def test_endpoints(self):
        ul = GasState.from_primitive(1.0, 1.0)
        ur = GasState.from_primitive(1.0, -1.0)
        sol = solve_riemann(ul, ur, C14)
        lo = min(wave_breakpoints(sol)) - 0.5
        hi = max(wave_breakpoints(sol)) + 0.5
        assert sample(sol, lo).rho == ul.rho and sample(sol, lo).m == ul.m
        assert sample(sol, hi).rho == ur.rho and sample(sol, hi).m == ur.m

    def test_fan_self_consistency(self):
        # inside a 1-rarefaction: lam1(u(xi)) == xi and w(u) == w_L
        sol = solve_riemann(GasState.from_primitive(1.0, 0.0),
                            GasState.from_primitive(1.0, 2.0), C14)
        lo, hi = sol.wave1.speed_lo, sol.wave1.speed_hi
        for xi in np.linspace(lo + 1e-6, hi - 1e-6, 15):
            u = sample(sol, xi)
            l1, _ = characteristic_speeds(u, C14)
            assert l1 == pytest.approx(xi, abs=1e-10)
            assert to_invariants(u, C14).w == pytest.approx(5.0, abs=1e-10)

    def test_downstream_at_exact_shock_speed(self):
        ul, ur = _shock_pair(1.0, 0.5, 2.0, 1.4, 1)
        sol = solve_riemann(ul, ur, C14)
        # wave2 is zero-strength; wave1 is the shock
        s = sol.wave1.speed_lo
        u = sample(sol, s)
        assert u.rho == pytest.approx(sol.middle.rho, rel=1e-12)


class TestEntropyCondition:
    def test_compressive_shock_admissible(self):
        for fam in (1, 2):
            ul, ur = _shock_pair(1.0, 0.0, 2.0, 1.4, fam)
            lam = rh_speed(ul, ur, C14)
            assert entropy_admissible(ul, ur, lam, C14)

    def test_rarefaction_shock_inadmissible(self):
        # pairs on the inverse shock curves with nonzero strength
        rng = np.random.default_rng(21)
        for _ in range(50):
            rho0 = rng.uniform(0.3, 3.0)
            v0 = rng.uniform(-1, 1)
            drop = rng.uniform(0.05, 0.9)
            # 1-family rarefaction shock: left denser than right
            ul = GasState.from_primitive(rho0, v0)
            rr = rho0 * (1 - drop)
            vr = v0 - _hjump_oracle(rr, rho0, 1.4)
            ur = GasState.from_primitive(rr, vr)
            lam = rh_speed(ul, ur, C14)
            assert not entropy_admissible(ul, ur, lam, C14)
            # 2-family mirror
            ul2 = GasState(ur.rho, -ur.m)
            ur2 = GasState(ul.rho, -ul.m)
            assert not entropy_admissible(ul2, ur2, -lam, C14)

    def test_zero_strength_admissible(self):
        u = GasState.from_primitive(1.0, 0.3)
        assert entropy_admissible(u, u, 1.0, C14)
