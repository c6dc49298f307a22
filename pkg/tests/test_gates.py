"""Gate builders, oracles, readout, and end-to-end truth tables."""

import dataclasses

import numpy as np
import pytest

from mtjsim.devices import Dc
from mtjsim.engine import TransientResult, transient_run
from mtjsim.gates import TestbenchSpec as BenchSpec
from mtjsim.gates import (
    DesignStyle,
    GateKind,
    all_patterns,
    build_gate,
    full_adder_oracle,
    gate_oracle,
    logic_readout,
    mtj_write_errors,
    rails_recovered,
    verify_truth_table,
)
from mtjsim.netlist import ISource, Mtj, Netlist, validate_netlist


# -- oracles ---------------------------------------------------------------

def test_full_adder_oracle_is_parity_and_majority():
    for a in (0, 1):
        for b in (0, 1):
            for c in (0, 1):
                s, sb, co, cob = full_adder_oracle(a, b, c)
                assert s == a ^ b ^ c
                assert co == int(a + b + c >= 2)
                assert sb == 1 - s
                assert cob == 1 - co


def test_full_adder_oracle_example_001():
    s, sb, co, cob = full_adder_oracle(0, 0, 1)
    assert (s, sb, co, cob) == (1, 0, 0, 1)


def test_gate_oracle_values():
    assert gate_oracle(GateKind.AND_NAND, (0, 1)) == (0, 1)
    assert gate_oracle(GateKind.AND_NAND, (1, 1)) == (1, 0)
    assert gate_oracle(GateKind.XOR_XNOR, (0, 0)) == (0, 1)
    assert gate_oracle(GateKind.XOR_XNOR, (0, 1)) == (1, 0)
    assert gate_oracle(GateKind.FULL_ADDER, (0, 0, 1)) == (1, 0, 0, 1)


def test_gate_oracle_arity_and_bits():
    with pytest.raises(ValueError):
        gate_oracle(GateKind.AND_NAND, (0, 1, 1))
    with pytest.raises(ValueError):
        gate_oracle(GateKind.FULL_ADDER, (0, 1))
    with pytest.raises(ValueError):
        gate_oracle(GateKind.AND_NAND, (0, 2))
    with pytest.raises(ValueError):
        full_adder_oracle(0, 1, 2)


def test_all_patterns():
    assert all_patterns(GateKind.AND_NAND) == [(0, 0), (0, 1), (1, 0), (1, 1)]
    assert len(all_patterns(GateKind.FULL_ADDER)) == 8


# -- template structure ----------------------------------------------------

def test_and_template_has_two_mtjs():
    net = build_gate(GateKind.AND_NAND, DesignStyle.ADIABATIC_MTJ).netlist
    assert len(net.mtjs()) == 2


def test_full_adder_template_mtj_states():
    tpl = build_gate(GateKind.FULL_ADDER, DesignStyle.ADIABATIC_MTJ)
    mtjs = tpl.netlist.mtjs()
    assert len(mtjs) == 4
    assert [m.initial_state for m in mtjs] == ["AP", "P", "AP", "P"]
    assert set(tpl.mtj_roles) == {"MTJ1", "MTJ2", "MTJ3", "MTJ4"}


@pytest.mark.parametrize("kind", list(GateKind))
@pytest.mark.parametrize("style", list(DesignStyle))
def test_templates_validate_clean(kind, style):
    tpl = build_gate(kind, style)
    assert validate_netlist(tpl.netlist) == []
    # dual-rail output pairs and a write source per junction
    assert len(tpl.rail_pairs) == (2 if kind is GateKind.FULL_ADDER else 1)
    assert len(tpl.write_sources) == len(tpl.netlist.mtjs())


def test_bad_pattern_arity_rejected():
    with pytest.raises(ValueError, match="arity"):
        build_gate(GateKind.AND_NAND, DesignStyle.ADIABATIC_MTJ,
                   BenchSpec(patterns=[(0, 1, 1)]))


def test_bad_kind_and_style_rejected():
    with pytest.raises(ValueError):
        build_gate("nor", DesignStyle.ADIABATIC_MTJ)
    with pytest.raises(ValueError):
        build_gate(GateKind.AND_NAND, "efficient")


# -- readout ---------------------------------------------------------------

def _fake_result(template, levels):
    tp = template.clock.t_phase
    n = len(template.sequence) * 4 * 10 + 1
    dt = tp / 10.0
    times = np.arange(n) * dt
    volts = {r: np.full(n, levels[i]) for i, r in enumerate(template.rails)}
    for name in template.netlist.nodes:
        volts.setdefault(name, np.zeros(n))
    volts.pop("0", None)
    return TransientResult(times=times, node_voltages=volts,
                           vsource_currents={}, mtj_state_trace={},
                           element_power_trace={})


def test_logic_readout_thresholds():
    tpl = build_gate(GateKind.AND_NAND, DesignStyle.ADIABATIC_MTJ)
    ro = logic_readout(_fake_result(tpl, (0.98, 0.03)), tpl, 1)
    assert ro.bits == (1, 0)
    ro = logic_readout(_fake_result(tpl, (0.5, 0.91)), tpl, 1)
    assert ro.bits == (None, 1)
    assert ro.volts[0] == pytest.approx(0.5)


def test_logic_readout_out_of_span():
    tpl = build_gate(GateKind.AND_NAND, DesignStyle.ADIABATIC_MTJ)
    with pytest.raises(ValueError, match="outside"):
        logic_readout(_fake_result(tpl, (0.0, 1.0)), tpl, 99)


# -- end-to-end truth tables -----------------------------------------------

@pytest.mark.parametrize("kind", list(GateKind))
@pytest.mark.parametrize("style", list(DesignStyle))
def test_truth_tables(gate_runs, kind, style):
    verdicts, template, result = gate_runs.get(kind, style)
    n_expected = len(all_patterns(kind))
    assert len(verdicts) == n_expected
    for v in verdicts:
        assert v.passed, (
            f"{kind.value}/{style.value} pattern {v.pattern}: "
            f"expected {v.expected}, observed {v.observed} at {v.volts}")


@pytest.mark.parametrize("kind", list(GateKind))
@pytest.mark.parametrize("style", list(DesignStyle))
def test_dual_rail_exclusive_every_cycle(gate_runs, kind, style):
    verdicts, template, result = gate_runs.get(kind, style)
    for v in verdicts:
        bits = v.observed
        for k in range(0, len(bits), 2):
            assert bits[k] is not None and bits[k + 1] is not None
            assert bits[k] + bits[k + 1] == 1


@pytest.mark.parametrize("kind", list(GateKind))
def test_adiabatic_rails_recover(gate_runs, kind):
    verdicts, template, result = gate_runs.get(kind, DesignStyle.ADIABATIC_MTJ)
    assert rails_recovered(result, template) <= 0.1 * template.tb.vdd


@pytest.mark.parametrize("kind", list(GateKind))
@pytest.mark.parametrize("style", list(DesignStyle))
def test_mtj_states_follow_writes(gate_runs, kind, style):
    verdicts, template, result = gate_runs.get(kind, style)
    assert mtj_write_errors(result, template) == []


def test_xor_reprogramming_narrative(gate_runs):
    # pattern order 00 -> 01 flips both junctions; 01 -> 11 leaves them
    verdicts, template, result = gate_runs.get(
        GateKind.XOR_XNOR, DesignStyle.ADIABATIC_MTJ)
    assert [v.pattern for v in verdicts] == [(0, 0), (0, 1), (1, 0), (1, 1)]
    tp = template.clock.t_phase
    dt = result.times[1] - result.times[0]
    j1 = result.mtj_state_trace[template.mtj_roles["MTJ1"][0]]
    j2 = result.mtj_state_trace[template.mtj_roles["MTJ2"][0]]

    def state_at_end_of_wait(cycle):
        k = int(round((cycle * 4 * tp + tp) / dt))
        return str(j1[k]), str(j2[k])

    assert state_at_end_of_wait(1) == ("AP", "P")    # B=0 re-written
    assert state_at_end_of_wait(2) == ("P", "AP")    # 00 -> 01 flips both
    assert state_at_end_of_wait(4) == ("P", "AP")    # B=1 re-written, no-op


def test_negative_control_stale_states_fail(gate_runs):
    # disable the write drivers and invert the initial states: the
    # stored operand is then wrong for at least one pattern and the
    # verdicts must notice
    tpl = build_gate(GateKind.XOR_XNOR, DesignStyle.ADIABATIC_MTJ)
    broken = []
    for e in tpl.netlist.elements:
        if isinstance(e, ISource) and e.name in tpl.write_sources:
            broken.append(dataclasses.replace(e, spec=Dc(0.0)))
        elif isinstance(e, Mtj):
            flip = "AP" if e.initial_state == "P" else "P"
            broken.append(dataclasses.replace(e, initial_state=flip))
        else:
            broken.append(e)
    net = Netlist(title=tpl.netlist.title, nodes=tpl.netlist.nodes,
                  elements=broken, directives=tpl.netlist.directives)
    result = transient_run(net)
    tpl.netlist = net
    verdicts, _, _ = verify_truth_table(
        GateKind.XOR_XNOR, DesignStyle.ADIABATIC_MTJ,
        template=tpl, result=result)
    assert any(not v.passed for v in verdicts)


def test_warmup_sequence_prepends_first_pattern():
    tpl = build_gate(GateKind.AND_NAND, DesignStyle.ADIABATIC_MTJ)
    assert tpl.sequence[0] == tpl.sequence[1] == (0, 0)
    assert len(tpl.sequence) == 5


def test_write_current_must_exceed_threshold():
    with pytest.raises(ValueError, match="threshold"):
        build_gate(GateKind.AND_NAND, DesignStyle.ADIABATIC_MTJ,
                   BenchSpec(write_current=40e-6))


@pytest.mark.parametrize("style", list(DesignStyle))
def test_dissipation_traces_nonnegative_on_gate_bench(gate_runs, style):
    # resistive and channel dissipation must never go meaningfully
    # negative, even through the latch resolution transients
    verdicts, template, result = gate_runs.get(GateKind.AND_NAND, style)
    for e in template.netlist.elements:
        name = e.name
        if name.startswith("M") or name.startswith("J"):
            trace = result.element_power_trace[name]
            assert trace.min() >= -1e-15, (name, trace.min())
