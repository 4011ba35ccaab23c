import numpy as np
import pytest

from nozzleflow import (GasConstants, GasState, InvariantPair,
                        characteristic_speeds, flux, from_invariants,
                        mechanical_pair, pressure, source, to_invariants)

C14 = GasConstants.for_gamma(1.4)


class TestGasConstants:
    def test_theta_definition(self):
        assert C14.theta == (1.4 - 1.0) / 2.0
        assert GasConstants.for_gamma(5 / 3).theta == (5 / 3 - 1) / 2

    @pytest.mark.parametrize("gamma", [1.0, 0.9, 5 / 3 + 1e-6, 2.0, 3.0])
    def test_gamma_range_rejected(self, gamma):
        with pytest.raises(ValueError):
            GasConstants.for_gamma(gamma)

    def test_inconsistent_theta_rejected(self):
        with pytest.raises(ValueError):
            GasConstants(gamma=1.4, theta=0.3)


class TestStateTypes:
    def test_negative_density_rejected(self):
        with pytest.raises(ValueError):
            GasState(-1.0, 0.0)

    def test_vacuum_normalization(self):
        u = GasState(1e-16, 3.0)
        assert u.rho == 0.0 and u.m == 0.0 and u.is_vacuum

    def test_invariant_pair_ordering(self):
        with pytest.raises(ValueError):
            InvariantPair(z=1.0, w=0.5)


class TestPressure:
    def test_vacuum(self):
        assert pressure(0.0, C14) == 0.0

    def test_unit_density(self):
        assert pressure(1.0, C14) == pytest.approx(1 / 1.4, rel=1e-15)

    def test_exponentiation_oracle(self):
        # independent pow evaluation
        assert pressure(2.0, C14) == pytest.approx(2.0 ** 1.4 / 1.4, rel=1e-14)

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            pressure(-0.5, C14)


class TestInvariants:
    def test_rest_state(self):
        iv = to_invariants(GasState.from_primitive(1.0, 0.0), C14)
        assert iv.z == pytest.approx(-5.0, rel=1e-14)
        assert iv.w == pytest.approx(5.0, rel=1e-14)

    def test_moving_state(self):
        iv = to_invariants(GasState.from_primitive(1.0, 1.0), C14)
        assert iv.z == pytest.approx(-4.0, rel=1e-14)
        assert iv.w == pytest.approx(6.0, rel=1e-14)

    def test_power_oracle(self):
        # 0.8^5 = 0.32768, so rho^theta = 0.8 and K = 4
        iv = to_invariants(GasState.from_primitive(0.32768, 1.0), C14)
        assert iv.z == pytest.approx(-3.0, rel=1e-13)
        assert iv.w == pytest.approx(5.0, rel=1e-13)

    def test_vacuum_signal(self):
        iv = to_invariants(GasState(0.0, 0.0), C14)
        assert iv.z == 0.0 and iv.w == 0.0

    def test_from_invariants_examples(self):
        u = from_invariants(InvariantPair(-5.0, 5.0), C14)
        assert u.rho == pytest.approx(1.0, rel=1e-14)
        assert u.m == pytest.approx(0.0, abs=1e-14)
        assert from_invariants(InvariantPair(0.0, 0.0), C14).is_vacuum
        u = from_invariants(InvariantPair(-3.0, 5.0), C14)
        assert u.rho == pytest.approx(0.8 ** 5, rel=1e-13)
        assert u.m == pytest.approx(0.8 ** 5, rel=1e-13)

    def test_round_trip_random(self):
        rng = np.random.default_rng(42)
        n = 10000
        rho = 10.0 ** rng.uniform(-6, 3, n)
        v = rng.uniform(-50, 50, n)
        for g in (1.2, 1.4, 5 / 3):
            c = GasConstants.for_gamma(g)
            for i in range(0, n, 7):
                u = GasState.from_primitive(rho[i], v[i])
                u2 = from_invariants(to_invariants(u, c), c)
                assert u2.rho == pytest.approx(u.rho, rel=1e-12)
                assert u2.m == pytest.approx(u.m, rel=1e-12, abs=1e-12 * u.rho)

    def test_ordering_property(self):
        # |w| >= |z|, w >= 0 when v >= 0; mirrored for v <= 0
        rng = np.random.default_rng(3)
        for _ in range(300):
            u = GasState.from_primitive(10 ** rng.uniform(-3, 2),
                                        rng.uniform(-10, 10))
            iv = to_invariants(u, C14)
            if u.v >= 0:
                assert abs(iv.w) >= abs(iv.z) and iv.w >= 0
            else:
                assert abs(iv.w) <= abs(iv.z) and iv.z <= 0


class TestFluxSource:
    def test_flux_examples(self):
        f = flux(GasState.from_primitive(1.0, 0.0), C14)
        assert f[0] == 0.0 and f[1] == pytest.approx(1 / 1.4, rel=1e-14)
        assert np.all(flux(GasState(0.0, 0.0), C14) == 0.0)
        f = flux(GasState.from_primitive(1.0, 2.0), C14)
        assert f[0] == pytest.approx(2.0) and f[1] == pytest.approx(4 + 1 / 1.4)

    def test_source_examples(self):
        u = GasState.from_primitive(1.0, 1.0)
        assert np.all(source(0.3, u, lambda x: 0.0) == 0.0)
        s = source(0.0, u, lambda x: 0.3)
        assert s[0] == pytest.approx(0.3) and s[1] == pytest.approx(0.3)
        s = source(0.0, GasState.from_primitive(2.0, -0.5), lambda x: 0.5)
        assert s[0] == pytest.approx(-0.5) and s[1] == pytest.approx(0.25)


class TestMechanicalPair:
    def test_rest(self):
        p = mechanical_pair(GasState.from_primitive(1.0, 0.0), C14)
        assert p.eta == pytest.approx(1 / (1.4 * 0.4), rel=1e-14)
        assert p.q == 0.0

    def test_vacuum(self):
        p = mechanical_pair(GasState(0.0, 0.0), C14)
        assert p.eta == 0.0 and p.q == 0.0

    def test_moving(self):
        p = mechanical_pair(GasState.from_primitive(1.0, 1.0), C14)
        assert p.eta == pytest.approx(0.5 + 1 / (1.4 * 0.4), rel=1e-14)
        assert p.q == pytest.approx(3.0, rel=1e-14)

    def test_compatibility_identity(self):
        # grad q = grad eta * grad f by central differences, O(h^2)
        rng = np.random.default_rng(11)
        h = 1e-4

        def pair(rho, m, c):
            p = mechanical_pair(GasState(rho, m), c)
            return p.eta, p.q

        for g in (1.2, 1.4, 5 / 3):
            c = GasConstants.for_gamma(g)
            for _ in range(40):
                rho = rng.uniform(0.2, 3.0)
                m = rng.uniform(-2.0, 2.0) * rho
                de_dr = (pair(rho + h, m, c)[0] - pair(rho - h, m, c)[0]) / (2 * h)
                de_dm = (pair(rho, m + h, c)[0] - pair(rho, m - h, c)[0]) / (2 * h)
                dq_dr = (pair(rho + h, m, c)[1] - pair(rho - h, m, c)[1]) / (2 * h)
                dq_dm = (pair(rho, m + h, c)[1] - pair(rho, m - h, c)[1]) / (2 * h)

                def f(rr, mm):
                    return np.array(
                        [mm, mm * mm / rr + rr ** g / g])
                df_dr = (f(rho + h, m) - f(rho - h, m)) / (2 * h)
                df_dm = (f(rho, m + h) - f(rho, m - h)) / (2 * h)
                res1 = dq_dr - (de_dr * df_dr[0] + de_dm * df_dr[1])
                res2 = dq_dm - (de_dr * df_dm[0] + de_dm * df_dm[1])
                assert abs(res1) < 1e-6 and abs(res2) < 1e-6

    def test_convexity(self):
        rng = np.random.default_rng(12)
        h = 1e-5
        for _ in range(60):
            rho = rng.uniform(0.2, 3.0)
            m = rng.uniform(-2.0, 2.0) * rho

            def eta(rr, mm):
                return mechanical_pair(GasState(rr, mm), C14).eta
            e_rr = (eta(rho + h, m) - 2 * eta(rho, m) + eta(rho - h, m)) / h ** 2
            e_mm = (eta(rho, m + h) - 2 * eta(rho, m) + eta(rho, m - h)) / h ** 2
            e_rm = (eta(rho + h, m + h) - eta(rho + h, m - h)
                    - eta(rho - h, m + h) + eta(rho - h, m - h)) / (4 * h ** 2)
            assert e_rr > 0 and e_mm > 0
            assert e_rr * e_mm - e_rm ** 2 > 0


class TestCharacteristicSpeeds:
    def test_examples(self):
        l1, l2 = characteristic_speeds(GasState.from_primitive(1.0, 0.0), C14)
        assert l1 == pytest.approx(-1.0) and l2 == pytest.approx(1.0)
        l1, l2 = characteristic_speeds(GasState.from_primitive(1.0, 1.0), C14)
        assert l1 == pytest.approx(0.0, abs=1e-14) and l2 == pytest.approx(2.0)
        l1, l2 = characteristic_speeds(GasState.from_primitive(0.32768, 0.0), C14)
        assert l1 == pytest.approx(-0.8, rel=1e-13)
        assert l2 == pytest.approx(0.8, rel=1e-13)

    def test_vacuum_convention(self):
        assert characteristic_speeds(GasState(0.0, 0.0), C14) == (0.0, 0.0)
