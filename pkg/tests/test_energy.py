"""Energy audit checks against closed-form RC losses and the balance
identity."""

import numpy as np
import pytest

from mtjsim.energy import (
    ElementEnergy,
    EnergyReport,
    compare_designs,
    energy_per_operation,
    integrate_energy,
)
from mtjsim.engine import transient_run
from mtjsim.netlist import parse_netlist


def run_rc_step():
    net = parse_netlist("V1 in 0 DC 1.0\nR1 in out 1k\nC1 out 0 1p IC=0\n"
                        ".tran 10p 10n\n")
    return net, transient_run(net)


def run_rc_ramp(t_ramp, tstop=None, dt="10p"):
    tstop = tstop if tstop is not None else t_ramp + 10e-9
    net = parse_netlist(
        f"V1 in 0 PWL(0 0 {t_ramp} 1.0)\nR1 in out 1k\nC1 out 0 1p IC=0\n"
        f".tran {dt} {tstop}\n")
    return net, transient_run(net)


def test_step_charge_dissipates_half_cv2():
    net, res = run_rc_step()
    rep = integrate_energy(res, net, (0.0, 10e-9))
    assert rep.elements["R1"].dissipated == pytest.approx(0.5e-12, rel=0.02)


def test_ramp_charge_dissipates_rc_over_t():
    # T = 100 RC: loss ~ (RC/T) C V^2 = 10 fJ
    net, res = run_rc_ramp(100e-9)
    rep = integrate_energy(res, net, (0.0, 110e-9))
    assert rep.elements["R1"].dissipated == pytest.approx(10e-15, rel=0.2)


def test_ramp_loss_halves_when_ramp_doubles():
    net1, res1 = run_rc_ramp(20e-9, tstop=30e-9)
    net2, res2 = run_rc_ramp(40e-9, tstop=50e-9)
    d1 = integrate_energy(res1, net1, (0.0, 30e-9)).elements["R1"].dissipated
    d2 = integrate_energy(res2, net2, (0.0, 50e-9)).elements["R1"].dissipated
    assert 1.8 <= d1 / d2 <= 2.2


def test_zero_source_circuit_all_zero():
    net = parse_netlist("R1 a 0 1k\nC1 a 0 1p\nV1 b 0 DC 0\nR2 b a 1k\n"
                        ".tran 100p 10n\n")
    res = transient_run(net)
    rep = integrate_energy(res, net, (0.0, 10e-9))
    assert rep.total_supplied == 0.0
    assert rep.total_dissipated == pytest.approx(0.0, abs=1e-21)
    assert rep.total_stored_delta == 0.0


def test_balance_residual_under_one_percent():
    net, res = run_rc_step()
    rep = integrate_energy(res, net, (0.0, 10e-9))
    assert abs(rep.residual) <= 0.01 * rep.total_supplied


def test_stored_delta_exact_from_endpoints():
    net, res = run_rc_step()
    rep = integrate_energy(res, net, (2e-9, 8e-9))
    v = res.node_voltages["out"]
    dt = res.times[1] - res.times[0]
    i0, i1 = int(round(2e-9 / dt)), int(round(8e-9 / dt))
    expect = 0.5 * 1e-12 * (v[i1] ** 2 - v[i0] ** 2)
    assert rep.elements["C1"].stored_delta == expect


def test_supplied_recovered_split_signs():
    # discharge an initially charged capacitor back into the source:
    # the source must book recovered energy
    net = parse_netlist("V1 in 0 DC 0\nR1 in out 1k\nC1 out 0 1p IC=1\n"
                        ".tran 10p 10n\n")
    res = transient_run(net)
    rep = integrate_energy(res, net, (0.0, 10e-9))
    e = rep.elements["V1"]
    assert e.recovered == pytest.approx(0.0, abs=1e-20)
    assert e.supplied == pytest.approx(0.0, abs=1e-20)
    # all the stored energy turns into R1 heat instead
    assert rep.elements["R1"].dissipated == pytest.approx(0.5e-12, rel=0.02)
    assert rep.elements["C1"].stored_delta == pytest.approx(-0.5e-12, rel=0.02)


def test_dissipation_traces_nonnegative():
    net, res = run_rc_step()
    assert np.all(res.element_power_trace["R1"] >= -1e-15)


def test_window_errors():
    net, res = run_rc_step()
    with pytest.raises(ValueError, match="outside"):
        integrate_energy(res, net, (0.0, 20e-9))
    with pytest.raises(ValueError, match="aligned"):
        integrate_energy(res, net, (0.0, 5.0001e-9))
    with pytest.raises(ValueError, match="empty"):
        integrate_energy(res, net, (5e-9, 5e-9))


def _report(supplied, recovered, window=(0.0, 2e-8)):
    elements = {"VS": ElementEnergy(supplied=supplied, recovered=recovered)}
    rep = EnergyReport(window=window, elements=elements,
                       total_supplied=supplied, total_recovered=recovered)
    rep.residual = rep.net_supplied
    return rep


def test_energy_per_operation_examples():
    rep = _report(100e-15, 80e-15)
    assert energy_per_operation(rep, 2) == pytest.approx(10e-15)
    # lossless limit
    assert energy_per_operation(_report(5e-15, 5e-15), 4) == 0.0
    # no recovery: supplied / n
    assert energy_per_operation(_report(70e-15, 0.0), 7) == pytest.approx(10e-15)


def test_energy_per_operation_window_check():
    rep = _report(1e-15, 0.0, window=(0.0, 2e-8))
    assert energy_per_operation(rep, 2, period=1e-8) == pytest.approx(0.5e-15)
    with pytest.raises(ValueError, match="exactly"):
        energy_per_operation(rep, 3, period=1e-8)
    with pytest.raises(ValueError):
        energy_per_operation(rep, 0)


def test_energy_per_operation_exclude():
    rep = _report(100e-15, 0.0)
    rep.elements["IW"] = ElementEnergy(supplied=40e-15)
    rep.total_supplied += 40e-15
    rep.residual = rep.net_supplied
    assert energy_per_operation(rep, 2) == pytest.approx(70e-15)
    assert energy_per_operation(rep, 2, exclude=("IW",)) == pytest.approx(50e-15)


def test_compare_designs_math():
    row = compare_designs(_report(10e-15, 0.0), _report(70e-15, 0.0),
                          n_cycles=1, kind="fulladder")
    assert row.ratio == pytest.approx(7.0)
    row = compare_designs(_report(10e-15, 0.0), _report(10e-15, 0.0), n_cycles=1)
    assert row.ratio == pytest.approx(1.0)
    with pytest.raises(ValueError, match="degenerate"):
        compare_designs(_report(5e-15, 5e-15), _report(10e-15, 0.0), n_cycles=1)
