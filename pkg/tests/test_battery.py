"""Battery model: interpolation, single-step oracle, aging, conservation laws."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from safecharge import battery
from safecharge.config import BatteryParams


PARAMS = BatteryParams()


@pytest.fixture
def params():
    return PARAMS


class TestOcv:
    def test_knot_identity(self, params):
        for soc, volts in params.ocv_knots:
            assert battery.ocv(soc, params) == pytest.approx(volts, abs=1e-12)

    def test_endpoint(self, params):
        assert battery.ocv(0.0, params) == 3.00

    def test_hand_interpolation(self, params):
        # midpoint of the (0.4, 3.50) - (0.6, 3.70) segment
        assert battery.ocv(0.5, params) == pytest.approx(3.60, abs=1e-12)

    def test_out_of_range_clamped(self, params):
        assert battery.ocv(-0.5, params) == battery.ocv(0.0, params)
        assert battery.ocv(1.5, params) == battery.ocv(1.0, params)

    @settings(max_examples=200, deadline=None)
    @given(a=st.floats(0.0, 1.0), b=st.floats(0.0, 1.0))
    def test_monotone(self, a, b):
        lo, hi = min(a, b), max(a, b)
        assert battery.ocv(lo, PARAMS) <= battery.ocv(hi, PARAMS) + 1e-12

    def test_inverse(self, params):
        for soc in (0.0, 0.13, 0.5, 0.77, 1.0):
            v = battery.ocv(soc, params)
            assert battery.soc_from_ocv(v, params) == pytest.approx(soc, abs=1e-12)


class TestStep:
    def test_zero_current_at_ambient(self, params):
        s = battery.reset(params, 0.4, 25.0)
        nxt = battery.step(s, 0.0, 10.0, 25.0, params)
        assert nxt.soc == s.soc
        assert nxt.temperature == pytest.approx(s.temperature, abs=1e-12)
        assert nxt.rc_voltage == 0.0

    def test_rc_relaxation_factor(self, params):
        s = battery.reset(params, 0.4, 25.0)
        charged = battery.step(s, 2.0, 10.0, 25.0, params)
        relaxed = battery.step(charged, 0.0, 10.0, 25.0, params)
        factor = math.exp(-10.0 / (params.r1 * params.c1))
        assert relaxed.rc_voltage == pytest.approx(charged.rc_voltage * factor, rel=1e-12)

    def test_newton_cooling_sign(self, params):
        s = battery.reset(params, 0.4, 25.0)
        s = battery.BatteryState(soc=s.soc, voltage=s.voltage, temperature=50.0,
                                 rc_voltage=0.0, throughput_ah=0.0, r0=s.r0)
        nxt = battery.step(s, 0.0, 10.0, 25.0, params)
        assert nxt.temperature < 50.0

    def test_single_step_hand_oracle(self):
        # Spec-sheet parameter set, one hand-computed Euler/exponential step.
        p = BatteryParams(capacity_ah=5.0, r0_initial=0.01, r1=0.015, c1=2000.0,
                          thermal_mass=75.0, heat_transfer=0.8, coulombic_eff=1.0)
        s = battery.reset(p, 0.1, 25.0)
        amps = 4.5 * 5.0  # 22.5 A
        nxt = battery.step(s, 4.5, 10.0, 25.0, p)

        soc_expect = 0.1 + amps * 10.0 / (3600.0 * 5.0)
        decay = math.exp(-10.0 / (0.015 * 2000.0))
        rc_expect = 0.015 * (1.0 - decay) * amps
        v_expect = battery.ocv(soc_expect, p) + 0.01 * amps + rc_expect
        heat = amps ** 2 * 0.01 + rc_expect ** 2 / 0.015
        t_expect = 25.0 + (10.0 / 75.0) * heat  # no cooling at ambient

        assert nxt.soc == pytest.approx(soc_expect, abs=1e-15)
        assert nxt.rc_voltage == pytest.approx(rc_expect, rel=1e-14)
        assert nxt.voltage == pytest.approx(v_expect, rel=1e-14)
        assert nxt.temperature == pytest.approx(t_expect, rel=1e-14)
        assert nxt.throughput_ah == pytest.approx(amps * 10.0 / 3600.0, rel=1e-14)

    def test_non_finite_rejected(self, params):
        s = battery.reset(params, 0.1, 25.0)
        with pytest.raises(ValueError):
            battery.step(s, float("nan"), 10.0, 25.0, params)
        with pytest.raises(ValueError):
            battery.step(s, -1.0, 10.0, 25.0, params)

    @settings(max_examples=100, deadline=None)
    @given(current=st.floats(0.01, 4.5), soc=st.floats(0.0, 1.0))
    def test_monotone_heating_from_ambient(self, current, soc):
        s = battery.reset(PARAMS, soc, 25.0)
        nxt = battery.step(s, current, 10.0, 25.0, PARAMS)
        assert nxt.temperature >= s.temperature

    @settings(max_examples=100, deadline=None)
    @given(i1=st.floats(0.05, 4.4), delta=st.floats(0.01, 2.0))
    def test_voltage_monotone_in_current(self, i1, delta):
        s = battery.reset(PARAMS, 0.4, 25.0)
        lo = battery.step(s, i1, 10.0, 25.0, PARAMS)
        hi = battery.step(s, min(i1 + delta, 4.5), 10.0, 25.0, PARAMS)
        assert hi.voltage > lo.voltage

    def test_charge_conservation(self, params):
        from safecharge.rng import Rng
        rng = Rng(11)
        s = battery.reset(params, 0.1, 25.0)
        total = 0.0
        for _ in range(200):
            a = rng.uniform_range(0.05, 3.0)
            amps = a * params.capacity_ah
            total += amps * 10.0
            s = battery.step(s, a, 10.0, 25.0, params)
            if s.soc >= 1.0:  # clamp would break the ledger
                break
        else:
            expected = 0.1 + params.coulombic_eff * total / (3600.0 * params.capacity_ah)
            assert s.soc == pytest.approx(expected, abs=1e-10)

    def test_temperature_geometric_convergence(self, params):
        s = battery.reset(params, 0.5, 25.0)
        s = battery.BatteryState(soc=s.soc, voltage=s.voltage, temperature=45.0,
                                 rc_voltage=0.0, throughput_ah=0.0, r0=s.r0)
        ratio = 1.0 - 10.0 * params.heat_transfer / params.thermal_mass
        gap = 20.0
        for _ in range(5):
            s = battery.step(s, 0.0, 10.0, 25.0, params)
            gap *= ratio
            assert s.temperature - 25.0 == pytest.approx(gap, rel=1e-12)


class TestAging:
    def test_fresh_cell(self, params):
        assert battery.apply_aging(params, 0.0) == params.r0_initial

    def test_disabled_alpha(self):
        p = BatteryParams(aging_alpha=0.0)
        assert battery.apply_aging(p, 1e4) == p.r0_initial

    def test_hand_arithmetic(self):
        p = BatteryParams(r0_initial=0.01, aging_alpha=0.02)
        assert battery.apply_aging(p, 100.0) == pytest.approx(0.012, rel=1e-12)

    def test_negative_throughput_rejected(self, params):
        with pytest.raises(ValueError):
            battery.apply_aging(params, -1.0)


class TestReset:
    def test_fresh_reset(self, params):
        s = battery.reset(params, 0.1, 25.0)
        assert s.voltage == battery.ocv(0.1, params)
        assert s.temperature == 25.0
        assert s.rc_voltage == 0.0 and s.throughput_ah == 0.0
        assert s.r0 == params.r0_initial

    def test_aged_reset_carries_state(self, params):
        r0 = battery.apply_aging(params, 500.0)
        s = battery.reset(params, 0.1, 25.0, throughput_ah=500.0, r0=r0)
        assert s.r0 > params.r0_initial
        assert s.throughput_ah == 500.0

    def test_reset_deterministic(self, params):
        assert battery.reset(params, 0.1, 25.0) == battery.reset(params, 0.1, 25.0)

    def test_bad_soc_rejected(self, params):
        with pytest.raises(ValueError):
            battery.reset(params, 1.5, 25.0)


class TestCalibration:
    """The default parameters must support the study's qualitative regimes."""

    def test_max_current_crosses_thermal_limit_in_15_to_30_steps(self, params):
        s = battery.reset(params, 0.1, 25.0)
        crossing = None
        for t in range(1, 60):
            s = battery.step(s, 4.5, 10.0, 25.0, params)
            if s.temperature > 45.0:
                crossing = t
                break
        assert crossing is not None and 15 <= crossing <= 30

    def test_max_current_crosses_voltage_limit_well_before_target(self, params):
        s = battery.reset(params, 0.1, 25.0)
        soc_at_crossing = None
        while s.soc < 0.8:
            s = battery.step(s, 4.5, 10.0, 25.0, params)
            if soc_at_crossing is None and s.voltage > 4.3:
                soc_at_crossing = s.soc
        assert soc_at_crossing is not None and soc_at_crossing < 0.7
