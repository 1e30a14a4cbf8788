"""Bus transaction cost model: calibration table, scaling, optimum selection."""

import pytest

from shuntsim import (BusConfig, BusLink, CalibrationTable, PAPER_GRID,
                      ParameterError, optimal_config, transaction_cost)
from shuntsim.bus import DEFAULT_TABLE_ROWS


def test_measured_endpoints():
    worst = transaction_cost(BusConfig("fast", 330.0), 1)
    assert worst.bus_energy_j == pytest.approx(4.5e-6, rel=1e-9)
    best = transaction_cost(BusConfig("high", 4700.0), 1)
    assert best.bus_energy_j == pytest.approx(100e-9, rel=1e-9)


def test_read_time_at_operating_point():
    cost = transaction_cost(BusConfig("high", 2200.0), 1)
    assert cost.time_s == pytest.approx(33e-6, rel=1e-9)


def test_linear_scaling_by_read_count():
    cfg = BusConfig("fast_plus", 900.0)
    one = transaction_cost(cfg, 1)
    two = transaction_cost(cfg, 2)
    assert two.time_s == pytest.approx(2 * one.time_s, rel=1e-12)
    assert two.bus_energy_j == pytest.approx(2 * one.bus_energy_j, rel=1e-12)
    with pytest.raises(ParameterError):
        transaction_cost(cfg, 0)


def test_interpolation_in_inverse_pullup():
    lo = transaction_cost(BusConfig("high", 2200.0), 1)
    hi = transaction_cost(BusConfig("high", 4700.0), 1)
    mid_r = 3000.0
    mid = transaction_cost(BusConfig("high", mid_r), 1)
    f = (1 / mid_r - 1 / 2200.0) / (1 / 4700.0 - 1 / 2200.0)
    expect = lo.bus_energy_j + f * (hi.bus_energy_j - lo.bus_energy_j)
    assert mid.bus_energy_j == pytest.approx(expect, rel=1e-12)
    assert lo.bus_energy_j > mid.bus_energy_j > hi.bus_energy_j
    assert not mid.warning


def test_out_of_range_pullup_clamps_with_warning():
    cost = transaction_cost(BusConfig("high", 50000.0), 1)
    ref = transaction_cost(BusConfig("high", 4700.0), 1)
    assert cost.bus_energy_j == ref.bus_energy_j
    assert cost.warning


def test_missing_mode_falls_back_to_nearest():
    table = CalibrationTable([r for r in DEFAULT_TABLE_ROWS
                              if r[0] != "fast_plus"])
    cost = transaction_cost(BusConfig("fast_plus", 900.0), 1, table)
    assert cost.warning


def test_table_csv_round_trip(tmp_path):
    p = tmp_path / "cal.csv"
    p.write_text("speed_mode,pullup_ohms,time_us,energy_nWs\n"
                 "high,1000,20,700\nhigh,3000,25,250\n")
    table = CalibrationTable.from_csv(p)
    cost = transaction_cost(BusConfig("high", 1000.0), 1, table)
    assert cost.time_s == pytest.approx(20e-6)
    assert cost.bus_energy_j == pytest.approx(700e-9)


def test_optimal_config_matches_published_choice():
    # 12 mA average MCU draw on the default 3.3 V rail
    p_mcu = 0.012 * 3.3
    winner = optimal_config(PAPER_GRID, p_mcu)
    assert winner.speed_mode == "high"
    assert winner.pullup_ohm == 2200.0


def test_optimal_config_zero_mcu_power_minimizes_bus_energy():
    winner = optimal_config(PAPER_GRID, 0.0)
    # exhaustive check against plain bus-energy ranking
    by_energy = min(PAPER_GRID,
                    key=lambda c: transaction_cost(c, 1).bus_energy_j)
    assert winner == by_energy
    assert winner.speed_mode == "high" and winner.pullup_ohm == 4700.0


def test_optimal_config_singleton_and_empty():
    only = BusConfig("fast", 330.0)
    assert optimal_config([only], 0.05) == only
    with pytest.raises(ParameterError):
        optimal_config([], 0.05)


def test_optimal_config_scaling_invariance():
    p_mcu = 0.012 * 3.3
    base = optimal_config(PAPER_GRID, p_mcu)
    for k in (1e-3, 1.0, 1e3):
        rows = [(m, r, t, e * k) for m, r, t, e in DEFAULT_TABLE_ROWS]
        winner = optimal_config(PAPER_GRID, p_mcu * k, CalibrationTable(rows))
        assert (winner.speed_mode, winner.pullup_ohm) == \
            (base.speed_mode, base.pullup_ohm)


def test_optimal_config_converges_to_min_time_as_mcu_power_grows():
    min_time = min(transaction_cost(c, 1).time_s for c in PAPER_GRID)
    prev_time = None
    for p_mcu in (0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0):
        t = transaction_cost(optimal_config(PAPER_GRID, p_mcu), 1).time_s
        if prev_time is not None:
            assert t <= prev_time + 1e-15
        prev_time = t
    assert prev_time == pytest.approx(min_time, rel=1e-12)


def test_spec_compliance_flag_matches_wiring_rule():
    assert BusConfig("fast", 2200.0).spec_compliant
    assert not BusConfig("fast", 2300.0).spec_compliant
    assert BusConfig("high", 298.0).spec_compliant
    assert not BusConfig("high", 2200.0).spec_compliant
    assert BusConfig("fast_plus", 896.0).spec_compliant
    assert not BusConfig("fast_plus", 900.0).spec_compliant


def test_read_cost_total_energy():
    cost = transaction_cost(BusConfig("high", 2200.0), 1)
    p_mcu = 0.012 * 3.3
    assert cost.total_energy(p_mcu) == pytest.approx(
        p_mcu * cost.time_s + cost.bus_energy_j, rel=1e-12)


def test_bus_link_accumulates():
    link = BusLink(BusConfig("high", 2200.0))
    link.charge(2)
    link.charge(1)
    assert link.reads == 3
    assert link.energy_j == pytest.approx(3 * 450e-9, rel=1e-9)
    assert link.time_s == pytest.approx(3 * 33e-6, rel=1e-9)
