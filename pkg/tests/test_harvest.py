"""Harvesting subsystem: storage bookkeeping, charging measurement, duty control."""

import math

import numpy as np
import pytest

from shuntsim import (Activity, BusConfig, BusLink, BusyError, DutyCycleState,
                      HarvestSim, MonitorConfig, NoiseModel, ParameterError,
                      ShuntMonitor, SolarProfile, SuperCap, adapt_interval,
                      cap_step, day_bins, isolated_consumption,
                      measure_charging)
from shuntsim.harvest import cap_extract
from shuntsim.sched import TraceRecord

TRIG = MonitorConfig(1100, 1100, 16, "triggered", True)


def quiet_trig(seed=0, r=2.0):
    return ShuntMonitor(TRIG, r_shunt_ohm=r, noise=NoiseModel.none(), seed=seed)


class TestSuperCap:
    def test_extract_example(self):
        cap = cap_step(SuperCap(100.0, 2.0), -20.0, 1.0)
        assert cap.v_now == pytest.approx(math.sqrt(3.6), rel=1e-12)

    def test_zero_power_unchanged(self):
        cap = cap_step(SuperCap(100.0, 2.0), 0.0, 5.0)
        assert cap.v_now == 2.0

    def test_clamp_accrues_unharvested(self):
        cap = cap_step(SuperCap(100.0, 2.7), 0.5, 10.0)
        assert cap.v_now == 2.7
        assert cap.unharvested_j == pytest.approx(5.0, rel=1e-12)

    def test_floor_at_zero_records_deficit(self):
        cap = cap_step(SuperCap(100.0, 0.1), -10.0, 1.0)
        assert cap.v_now == 0.0
        assert cap.deficit_j == pytest.approx(10.0 - 0.5 * 100 * 0.01, rel=1e-9)

    def test_voltage_stays_in_bounds(self):
        rng = np.random.default_rng(8)
        cap = SuperCap(50.0, 1.5, v_max=2.7)
        for _ in range(500):
            cap = cap_step(cap, float(rng.uniform(-5, 5)), float(rng.uniform(0.1, 20)))
            assert 0.0 <= cap.v_now <= 2.7

    def test_extract_energy(self):
        cap = SuperCap(100.0, 2.0)
        out = cap_extract(cap, 1.0)
        assert out.energy_j == pytest.approx(cap.energy_j - 1.0, rel=1e-12)

    def test_validation(self):
        with pytest.raises(ParameterError):
            SuperCap(0.0, 1.0)
        with pytest.raises(ParameterError):
            SuperCap(100.0, 3.0, v_max=2.7)
        with pytest.raises(ParameterError):
            cap_step(SuperCap(100.0, 1.0), 1.0, 0.0)


class TestSolarProfile:
    def test_sine_day_shape(self):
        sol = SolarProfile.sine_day(0.1, 21600.0, 72000.0)
        assert sol.power_scalar(0.0) == 0.0
        assert sol.power_scalar(3600.0) == 0.0
        peak = sol.power_scalar((21600 + 72000) / 2)
        assert peak == pytest.approx(0.1, rel=1e-3)
        assert sol.power_scalar(80000.0) == 0.0
        # periodic wrap
        assert sol.power_scalar(86400.0 + 46800.0) == pytest.approx(peak, rel=1e-9)

    def test_negative_power_rejected(self):
        with pytest.raises(ParameterError):
            SolarProfile([0.0, 1.0], [0.1, -0.1])

    def test_mean_power(self):
        sol = SolarProfile.constant(0.025)
        assert sol.mean_power(0.0, 100.0) == pytest.approx(0.025, rel=1e-12)


class TestAdaptInterval:
    def fresh(self, **kw):
        args = dict(interval_s=10.0, interval_min_s=10.0,
                    interval_max_s=3600.0, headroom=0.8)
        args.update(kw)
        return DutyCycleState(**args)

    def trace(self, joules):
        return TraceRecord("task", 0, 1_000_000_000, (), joules)

    def test_examples(self):
        st = adapt_interval(self.fresh(), self.trace(0.5), 0.025)
        assert st.interval_s == pytest.approx(25.0, rel=1e-9)
        st = adapt_interval(self.fresh(), self.trace(0.5), 0.0)
        assert st.interval_s == 3600.0
        st = adapt_interval(self.fresh(), self.trace(0.5), 10.0)
        assert st.interval_s == 10.0

    def test_ewma_smoothing(self):
        st = adapt_interval(self.fresh(), self.trace(0.5), 0.025)
        st2 = adapt_interval(st, self.trace(1.0), 0.025)
        assert st2.task_energy_j == pytest.approx(0.8 * 0.5 + 0.2 * 1.0, rel=1e-12)
        assert st2.harvest_power_w == pytest.approx(0.025, rel=1e-12)

    def test_monotone_in_charging_and_task(self):
        base = adapt_interval(self.fresh(interval_max_s=10000.0),
                              self.trace(0.5), 0.02)
        more_charge = adapt_interval(self.fresh(interval_max_s=10000.0),
                                     self.trace(0.5), 0.04)
        assert more_charge.interval_s <= base.interval_s
        bigger_task = adapt_interval(self.fresh(interval_max_s=10000.0),
                                     self.trace(1.0), 0.02)
        assert bigger_task.interval_s >= base.interval_s

    def test_validation(self):
        with pytest.raises(ParameterError):
            DutyCycleState(interval_s=5.0, interval_min_s=10.0,
                           interval_max_s=100.0)
        with pytest.raises(ParameterError):
            DutyCycleState(alpha=0.0)


class TestMeasureCharging:
    def test_oracle_subtraction(self):
        cap = SuperCap(100.0, 2.0, 2.7)
        m = measure_charging(quiet_trig(), cap, SolarProfile.constant(0.025),
                             at_s=0.0, sleep_current_a=30e-6 / 2.0)
        assert m.power_w == pytest.approx(0.025 - 30e-6, rel=0.002)

    def test_night_reads_sleep_draw(self):
        cap = SuperCap(100.0, 2.0, 2.7)
        m = measure_charging(quiet_trig(), cap, SolarProfile.dark(),
                             at_s=0.0, sleep_current_a=30e-6 / 2.0)
        assert m.power_w == pytest.approx(-30e-6, abs=35e-6)

    def test_full_store_underreports_and_wastes(self):
        cap = SuperCap(100.0, 2.7, 2.7)  # already full
        solar = SolarProfile.constant(0.120)
        m = measure_charging(quiet_trig(), cap, solar, at_s=0.0,
                             sleep_current_a=40e-6)
        assert m.power_w < 0.120 * 0.5   # far below availability
        assert m.cap.unharvested_j > 0.0

    def test_busy_error(self):
        mon = quiet_trig()
        mon.trigger_single(0)
        with pytest.raises(BusyError):
            measure_charging(mon, SuperCap(100.0, 2.0), SolarProfile.dark(),
                             at_s=0.0)


class TestIsolatedConsumption:
    def test_constant_load(self):
        cap = SuperCap(100.0, 2.0, 2.7)
        got = isolated_consumption(quiet_trig(), cap, 0.0135, at_s=0.0)
        assert got == pytest.approx(0.027, rel=0.001)

    def test_independent_of_solar(self):
        cap = SuperCap(100.0, 2.0, 2.7)
        vals = []
        for solar in (SolarProfile.dark(), SolarProfile.constant(0.2),
                      SolarProfile.sine_day(0.5, 0.0, 43200.0)):
            vals.append(isolated_consumption(quiet_trig(seed=3), cap, 0.0135,
                                             at_s=3600.0, solar=solar))
        assert vals[0] == vals[1] == vals[2]

    def test_sleep_only(self):
        cap = SuperCap(100.0, 2.0, 2.7)
        got = isolated_consumption(quiet_trig(), cap, 20e-6, at_s=0.0)
        assert got == pytest.approx(2.0 * 20e-6, abs=2.0 * 1.3e-6)

    def test_store_drains(self):
        cap = SuperCap(1.0, 2.0, 2.7)
        mon = ShuntMonitor(MonitorConfig(8244, 8244, 64, "triggered", True),
                           2.0, noise=NoiseModel.none(), seed=0)
        sim_window = (8244 + 8244) * 64 * 1e-6
        isolated_consumption(mon, cap, 0.05, at_s=0.0)
        # the one-shot helper returns only power; drain shows via deficit-free
        # energy balance: E = v^2/2 dropped by roughly p*t
        # (captured through a fresh run below)
        from shuntsim.harvest import _one_shot_sim
        mon2 = ShuntMonitor(MonitorConfig(8244, 8244, 64, "triggered", True),
                            2.0, noise=NoiseModel.none(), seed=0)
        sim = _one_shot_sim(mon2, cap, SolarProfile.dark(), 0.0, 0.05, None,
                            1.0, None)
        sim.measure_isolated()
        drop = cap.energy_j - sim.cap.energy_j
        assert drop == pytest.approx(2.0 * 0.05 * sim_window, rel=0.15)


def small_harvest_sim(seed=0, v_start=2.0, solar=None, duration=120.0,
                      interval_max=60.0):
    cap = SuperCap(50.0, v_start, 2.7, 1.0)
    solar = solar or SolarProfile.constant(0.03)
    mon = ShuntMonitor(MonitorConfig(588, 588, 4, "triggered", True), 0.75,
                       noise=NoiseModel(), seed=seed)
    link = BusLink(BusConfig("high", 2200.0))
    task = (Activity("io", 0.1, 0.03),
            Activity("io", 0.2, 0.05, current_end_a=0.04))
    duty = DutyCycleState(interval_s=10.0, interval_min_s=10.0,
                          interval_max_s=interval_max, headroom=0.8)
    sim = HarvestSim(cap, solar, mon, link, task, duty,
                     meas_config=MonitorConfig(588, 588, 4, "triggered", True),
                     task_config=MonitorConfig(332, 332, 4, "continuous", False),
                     sleep_current_a=40e-6)
    sim.run(duration)
    return sim


class TestHarvestSim:
    def test_energy_conservation(self):
        for seed in (0, 1, 2):
            sim = small_harvest_sim(seed=seed)
            assert abs(sim.ledger.residual_rel()) < 1e-6

    def test_cycles_and_samples_produced(self):
        sim = small_harvest_sim()
        assert len(sim.cycles) >= 2
        assert any(c.task_energy_j > 0 for c in sim.cycles)
        assert len(sim.samples) > len(sim.cycles)

    def test_charging_estimates_track_solar(self):
        sim = small_harvest_sim(solar=SolarProfile.constant(0.03))
        mid = [c.charging_w for c in sim.cycles[1:]]
        assert np.median(mid) == pytest.approx(0.03, rel=0.1)

    def test_voltage_bounds_hold(self):
        sim = small_harvest_sim(v_start=2.65,
                                solar=SolarProfile.constant(0.25))
        assert max(sim.cap_knots_v) <= 2.7 + 1e-12
        assert sim.ledger.e_unharvested_j > 0

    def test_brownout_skips_task(self):
        sim = small_harvest_sim(v_start=1.0, solar=SolarProfile.dark(),
                                duration=60.0)
        assert any(kind == "brownout_skip" for kind, _ in sim.diagnostics)

    def test_interval_lengthens_in_the_dark(self):
        sim = small_harvest_sim(solar=SolarProfile.dark(), v_start=2.5,
                                duration=240.0, interval_max=60.0)
        assert sim.cycles[-1].interval_s == 60.0

    def test_day_bins_structure(self):
        sim = small_harvest_sim(duration=120.0)
        bins = day_bins(sim, 120.0, bin_s=30.0)
        assert len(bins) == 4
        assert all(b.p_use_w <= 0.0 for b in bins)
        assert all(b.p_charge_w >= 0.0 for b in bins)
        # energy split in bins roughly reflects the ledger magnitudes
        use_j = -sum(b.p_use_w * (b.bin_end_s - b.bin_start_s) for b in bins)
        assert use_j == pytest.approx(
            sum(c.task_energy_j for c in sim.cycles), rel=1e-6)
