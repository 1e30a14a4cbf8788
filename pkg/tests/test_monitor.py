"""Shunt-monitor emulation: timing, registers, noise statistics, power modes."""

import numpy as np
import pytest

from shuntsim import (BusConfig, BusLink, BusyError, ContractError, LoadProfile,
                      MonitorConfig, NoiseModel, ParameterError, ShuntMonitor,
                      SupplyModel)

REF = MonitorConfig(332, 332, 16, "continuous", True)


def quiet_monitor(cfg=REF, r=2.0, seed=0):
    return ShuntMonitor(cfg, r_shunt_ohm=r, noise=NoiseModel.none(), seed=seed)


def brute_force_mean(load, a_ns, b_ns, step_ns=1000):
    """Independent trapezoidal reference used to check window integration."""
    n = (b_ns - a_ns) // step_ns
    t = a_ns + np.arange(n + 1) * step_ns
    y = load.current_at(t)
    return float(np.trapezoid(y, t) / (b_ns - a_ns))


class TestConfig:
    def test_sample_period(self):
        assert REF.sample_period_ns == (332 + 332) * 16 * 1000
        assert MonitorConfig(140, 140, 1).sample_period_ns == 280_000

    def test_out_of_set_values_rejected(self):
        with pytest.raises(ParameterError):
            MonitorConfig(shunt_conv_us=333)
        with pytest.raises(ParameterError):
            MonitorConfig(bus_conv_us=100)
        with pytest.raises(ParameterError):
            MonitorConfig(averaging=8)
        with pytest.raises(ParameterError):
            MonitorConfig(mode="standby")

    def test_config_word_encoding(self):
        word = REF.encode()
        assert word & 0b111 == 0b111              # continuous
        assert (word >> 3) & 0b111 == 2           # 332 us shunt
        assert (word >> 6) & 0b111 == 2           # 332 us bus
        assert (word >> 9) & 0b111 == 2           # avg 16
        assert MonitorConfig(mode="power_down").encode() & 0b111 == 0


class TestNoiseModel:
    def test_bounds(self):
        with pytest.raises(ParameterError):
            NoiseModel(sigma_shunt_v=-1e-6)
        with pytest.raises(ParameterError):
            NoiseModel(gain_error=0.02)


class TestAdvance:
    def test_one_event_per_period(self):
        mon = quiet_monitor()
        load = LoadProfile.constant(0.02, 2.7)
        events = mon.advance(load, 10_624_000)
        assert len(events) == 1
        assert events[0].t_ns == 10_624_000
        # not quite two periods yet
        assert mon.advance(load, 21_000_000) == []
        assert len(mon.advance(load, 21_248_000)) == 1

    def test_power_down_produces_nothing(self):
        mon = quiet_monitor(MonitorConfig(332, 332, 16, "power_down", True))
        load = LoadProfile.constant(0.02, 2.7)
        assert mon.advance(load, 1_000_000_000) == []
        assert mon.registers["current"] == 0

    def test_constant_load_exact_code(self):
        mon = quiet_monitor()
        load = LoadProfile.constant(0.02, 2.7)
        ev = mon.advance(load, REF.sample_period_ns)[0]
        assert ev.current_code == 16000
        assert ev.current_a == 0.02
        assert ev.bus_code == 2160
        # cross-check window integration against the independent reference
        ref = brute_force_mean(load, 0, 332_000)
        assert ref * 2.0 / 2.5e-6 == pytest.approx(16000, abs=1e-6)

    def test_step_load_matches_brute_force(self):
        mon = quiet_monitor(MonitorConfig(332, 332, 1, "continuous", True))
        load = LoadProfile.steps([(0.0, 0.005), (0.0001, 0.019)], 3.0)
        ev = mon.advance(load, mon.sample_period_ns)[0]
        ref = brute_force_mean(load, 0, 332_000)
        assert ev.current_a == pytest.approx(ref, abs=1.25e-6)

    def test_time_backwards_rejected(self):
        mon = quiet_monitor()
        mon.advance(LoadProfile.constant(0.01), 1_000_000)
        with pytest.raises(ContractError):
            mon.advance(LoadProfile.constant(0.01), 999_999)

    def test_power_register_consistent(self):
        mon = quiet_monitor()
        ev = mon.advance(LoadProfile.constant(0.02, 2.7),
                         REF.sample_period_ns)[0]
        assert ev.power_w == pytest.approx(0.054, abs=mon.power_lsb_w)
        assert ev.power_w == pytest.approx(ev.bus_v * ev.current_a,
                                           abs=mon.power_lsb_w)

    def test_saturation_sticky(self):
        mon = quiet_monitor()
        ev = mon.advance(LoadProfile.constant(0.05, 2.7),
                         REF.sample_period_ns)[0]
        assert ev.saturated
        assert ev.current_code == 32768
        assert mon.out_of_range
        mon.advance(LoadProfile.constant(0.01, 2.7), 2 * REF.sample_period_ns)
        assert mon.out_of_range  # latches

    def test_negative_current_measured_signed(self):
        mon = quiet_monitor()
        ev = mon.advance(LoadProfile.constant(-0.01, 2.7),
                         REF.sample_period_ns)[0]
        assert ev.current_code == -8000
        assert ev.power_w < 0


class TestTrigger:
    def test_completion_time(self):
        mon = quiet_monitor(MonitorConfig(1100, 1100, 64, "triggered", True))
        done = mon.trigger_single(0)
        assert done == 140_800_000
        evs = mon.advance(LoadProfile.constant(0.01), done)
        assert len(evs) == 1 and evs[0].t_ns == done
        assert evs[0].alert

    def test_busy_rejected(self):
        mon = quiet_monitor(MonitorConfig(1100, 1100, 64, "triggered", True))
        mon.trigger_single(0)
        with pytest.raises(BusyError):
            mon.trigger_single(1000)

    def test_mode_errors(self):
        with pytest.raises(ContractError):
            quiet_monitor(MonitorConfig(mode="power_down")).trigger_single(0)
        with pytest.raises(ContractError):
            quiet_monitor().trigger_single(0)  # continuous


class TestReadRegister:
    def test_cost_over_high_speed_link(self):
        mon = quiet_monitor()
        mon.advance(LoadProfile.constant(0.02, 2.7), REF.sample_period_ns)
        link = BusLink(BusConfig("high", 2200.0))
        code, cost = mon.read_register("current", link)
        assert code == 16000
        assert cost.time_s == pytest.approx(33e-6, rel=1e-9)
        assert link.reads == 1

    def test_registers_latch_between_conversions(self):
        mon = quiet_monitor()
        mon.advance(LoadProfile.constant(0.02, 2.7), REF.sample_period_ns)
        a, _ = mon.read_register("current")
        b, _ = mon.read_register("current")
        assert a == b == 16000

    def test_alert_read_clears_ready(self):
        mon = quiet_monitor()
        mon.advance(LoadProfile.constant(0.02, 2.7), REF.sample_period_ns)
        assert mon.conversion_ready
        code, _ = mon.read_register("alert")
        assert code == 1
        assert not mon.conversion_ready
        assert mon.read_register("alert")[0] == 0

    def test_unknown_register(self):
        with pytest.raises(ParameterError):
            quiet_monitor().read_register("bogus")


class TestAccuracyStatistics:
    def median_rel_err(self, i_load, n=400, config=REF):
        load = LoadProfile.constant(i_load, 2.7)
        errs = []
        for seed in range(n):
            mon = ShuntMonitor(config, 2.0, noise=NoiseModel(), seed=seed)
            ev = mon.advance(load, config.sample_period_ns)[0]
            errs.append(abs(ev.current_a - i_load) / i_load)
        return float(np.median(errs))

    def test_median_error_200ua(self):
        assert self.median_rel_err(200e-6) <= 0.015

    def test_median_error_1800ua(self):
        assert self.median_rel_err(1.8e-3) <= 0.001

    def test_zero_noise_error_bounded_by_half_lsb(self):
        mon_lsb = 1.25e-6
        cfg = MonitorConfig(140, 140, 1, "continuous", True)
        for k, i in enumerate(np.linspace(1e-6, 0.04096, 60)):
            mon = quiet_monitor(cfg, seed=k)
            ev = mon.advance(LoadProfile.constant(float(i), 2.7),
                             cfg.sample_period_ns)[0]
            assert abs(ev.current_a - i) <= mon_lsb / 2 + 1e-15

    def test_averaging_reduces_noise_sqrt_n(self):
        sigma = 25e-6
        load = LoadProfile.constant(0.01, 2.7)

        def measured_std(avg, n=400):
            cfg = MonitorConfig(140, 140, avg, "continuous", True)
            vals = []
            for seed in range(n):
                mon = ShuntMonitor(cfg, 2.0,
                                   noise=NoiseModel(sigma_shunt_v=sigma,
                                                    gain_error=0.0),
                                   seed=seed)
                ev = mon.advance(load, cfg.sample_period_ns)[0]
                vals.append(ev.shunt_v)
            return float(np.std(vals))

        ratio = measured_std(1) / measured_std(16)
        assert ratio == pytest.approx(4.0, rel=0.10)


class TestSupplyAndDeterminism:
    def test_supply_energy_split(self):
        mon = quiet_monitor(MonitorConfig(1100, 1100, 64, "triggered", True))
        load = LoadProfile.constant(0.01, 2.7)
        mon.trigger_single(0)
        mon.advance(load, 500_000_000)  # 140.8 ms active, rest sleeping
        active_s = 140.8e-3
        sleep_s = 0.5 - active_s
        expect = (mon.supply.active_power_w * active_s
                  + mon.supply.sleep_current_a * 2.7 * sleep_s)
        assert mon.supply_energy_j(2.7) == pytest.approx(expect, rel=1e-9)

    def test_sleep_current_capped(self):
        assert SupplyModel().sleep_current_a <= 2e-6
        with pytest.raises(ParameterError):
            SupplyModel(sleep_current_a=3e-6)

    def test_same_seed_bit_identical(self):
        load = LoadProfile.constant(200e-6, 2.7)

        def run(seed):
            mon = ShuntMonitor(REF, 2.0, noise=NoiseModel(), seed=seed)
            return mon.advance(load, 5 * REF.sample_period_ns)

        a, b = run(123), run(123)
        assert a == b
        assert [e.t_ns for e in a] == [(k + 1) * REF.sample_period_ns
                                       for k in range(5)]
        c = run(124)
        assert any(x.shunt_code != y.shunt_code for x, y in zip(a, c))

    def test_reconfigure_reanchors(self):
        mon = quiet_monitor()
        load = LoadProfile.constant(0.02, 2.7)
        mon.advance(load, 15_000_000)
        mon.reconfigure(MonitorConfig(140, 140, 1, "continuous", True))
        evs = mon.advance(load, 15_000_000 + 280_000)
        assert len(evs) == 1
        assert evs[0].t_ns == 15_000_000 + 280_000
