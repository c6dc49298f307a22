"""Parser, serializer, and validation checks for the netlist dialect."""

import numpy as np
import pytest

from mtjsim.devices import Dc, MtjParams, PowerClock, Pulse, Pwl
from mtjsim.gates import DesignStyle, GateKind, build_gate
from mtjsim.netlist import (
    Capacitor,
    ISource,
    Mosfet,
    Mtj,
    Netlist,
    NetlistBuilder,
    NetlistError,
    Resistor,
    VSource,
    parse_netlist,
    parse_value,
    serialize_netlist,
    validate_netlist,
)


def parse_one(line):
    net = parse_netlist(line + "\n")
    return net.elements[0]


def test_resistor_with_suffix():
    r = parse_one("R1 a 0 2k")
    assert isinstance(r, Resistor)
    assert r.ohms == 2000.0
    assert (r.n1, r.n2) == ("a", "0")


def test_mtj_line_and_rap():
    net = parse_netlist(
        "J1 x y RP=2k TMR=1.5 IC=50u TSW=5n STATE=AP\nR1 y 0 1k\n")
    j = net.elements[0]
    assert isinstance(j, Mtj)
    assert j.initial_state == "AP"
    assert j.params.rp == 2000.0
    assert j.params.rap == pytest.approx(5000.0)
    assert j.params.ic == pytest.approx(50e-6)
    assert j.params.tsw == pytest.approx(5e-9)


def test_power_clock_source():
    v = parse_one("V1 clk 0 PCLK(1.0 10n 0)")
    assert isinstance(v, VSource)
    assert v.spec == PowerClock(vdd=1.0, t_phase=10e-9, t0=0.0)
    v2 = parse_one("V1 clk 0 PCLK(1.0 10n)")
    assert v2.spec.t0 == 0.0


@pytest.mark.parametrize("text,expected", [
    ("1f", 1e-15), ("1p", 1e-12), ("1n", 1e-9), ("1u", 1e-6),
    ("1m", 1e-3), ("1k", 1e3), ("1meg", 1e6), ("1g", 1e9),
    ("2K", 2e3), ("3MEG", 3e6), ("4.5n", 4.5e-9),
    ("1e-12", 1e-12), ("-2.5", -2.5), (".5k", 500.0),
])
def test_unit_suffixes_exact(text, expected):
    assert parse_value(text) == expected


def test_bad_values_rejected():
    for bad in ("", "k", "1x", "meg", "1kk", "1 k"):
        with pytest.raises(ValueError):
            parse_value(bad)


def test_sources_parse():
    v = parse_one("V1 a 0 DC 1.5")
    assert v.spec == Dc(1.5)
    v = parse_one("V1 a 0 2.5")
    assert v.spec == Dc(2.5)
    v = parse_one("V1 a 0 PWL(0 0 1n 1 2n 0.5)")
    assert v.spec == Pwl(((0.0, 0.0), (1e-9, 1.0), (2e-9, 0.5)))
    v = parse_one("V1 a 0 PULSE(0 1 1n 2n 2n 5n 20n)")
    assert v.spec == Pulse(0.0, 1.0, 1e-9, 2e-9, 2e-9, 5e-9, 20e-9)
    i = parse_one("IX a 0 DC 1m")
    assert isinstance(i, ISource)
    assert i.spec == Dc(1e-3)


def test_mosfet_defaults_and_overrides():
    m = parse_one("M1 d g 0 N")
    assert isinstance(m, Mosfet)
    assert m.kind == "N"
    assert m.params.kp == 4e-4 and m.params.w == 64e-9
    p = parse_one("M1 d g 0 P")
    assert p.params.kp == 2e-4 and p.params.w == 128e-9
    m2 = parse_one("M1 d g 0 N VT=0.3 KP=1m W=100n L=50n LAMBDA=0")
    assert m2.params.vt0 == pytest.approx(0.3)
    assert m2.params.kp == pytest.approx(1e-3)
    assert m2.params.w == pytest.approx(100e-9)
    assert m2.params.l == pytest.approx(50e-9)
    assert m2.params.lam == 0.0


def test_rejection_of_unknown_leading_letter():
    with pytest.raises(NetlistError):
        parse_netlist("X1 a b 0 foo\n")
    with pytest.raises(NetlistError):
        parse_netlist("Q1 a b 0\n")


def test_syntax_error_carries_line_number():
    with pytest.raises(NetlistError) as ei:
        parse_netlist("R1 a 0 1k\nR2 b 0\n")
    assert ei.value.line == 2
    assert "line 2" in str(ei.value)


def test_duplicate_element_name_case_insensitive():
    with pytest.raises(NetlistError, match="duplicate"):
        parse_netlist("R1 a 0 1k\nr1 b 0 2k\n")


def test_missing_ground_is_an_error():
    with pytest.raises(NetlistError, match="ground"):
        parse_netlist("R1 a b 1k\n")


def test_unknown_parameter_key():
    with pytest.raises(NetlistError, match="unknown parameter"):
        parse_netlist("M1 d g 0 N FOO=1\n")
    with pytest.raises(NetlistError, match="unknown parameter"):
        parse_netlist("J1 a 0 RX=2k\n")


def test_unknown_directive_rejected():
    with pytest.raises(NetlistError):
        parse_netlist("R1 a 0 1k\n.model foo bar\n")


def test_pwl_must_increase():
    with pytest.raises(NetlistError, match="increase"):
        parse_netlist("V1 a 0 PWL(0 0 1n 1 1n 2)\n")


def test_duplicate_tran_rejected():
    with pytest.raises(NetlistError, match="duplicate .tran"):
        parse_netlist("R1 a 0 1k\n.tran 1n 10n\n.tran 1n 20n\n")


def test_node_order_ground_first():
    net = parse_netlist("R1 b a 1k\nR2 a 0 1k\n")
    assert net.nodes == ["0", "b", "a"]


def test_title_and_comments():
    net = parse_netlist("* my circuit\n* another comment\nR1 a 0 1k\n")
    assert net.title == "my circuit"
    assert len(net.elements) == 1
    again = parse_netlist(serialize_netlist(net))
    assert again.title == "my circuit"


def test_roundtrip_rc(rc_netlist_text):
    net = parse_netlist(rc_netlist_text)
    assert parse_netlist(serialize_netlist(net)) == net


def test_roundtrip_empty_with_directives():
    net = parse_netlist("R1 a 0 1k\n.tran 1n 10n\n.record a\n")
    text = serialize_netlist(net)
    assert ".tran" in text and ".record a" in text
    assert parse_netlist(text) == net


def test_serialize_elementless_netlist():
    from mtjsim.netlist import SimDirectives
    net = Netlist(title="empty", directives=SimDirectives(tstop=1e-8, dt=1e-11))
    text = serialize_netlist(net)
    assert text.splitlines() == ["* empty", ".tran 1e-11 1e-08"]


@pytest.mark.parametrize("kind", list(GateKind))
@pytest.mark.parametrize("style", list(DesignStyle))
def test_roundtrip_gate_templates(kind, style):
    net = build_gate(kind, style).netlist
    assert parse_netlist(serialize_netlist(net)) == net


def test_roundtrip_random_netlists():
    rng = np.random.RandomState(7)
    nodes = ["0", "a", "b", "c", "d", "out"]
    for trial in range(25):
        nb = NetlistBuilder(f"random {trial}")
        n_el = rng.randint(2, 9)
        for k in range(n_el):
            n1, n2 = rng.choice(nodes, 2, replace=False)
            pick = rng.randint(6)
            if pick == 0:
                nb.resistor(f"R{k}", n1, n2, float(abs(rng.randn()) + 0.1) * 1e3)
            elif pick == 1:
                ic = float(rng.randn()) if rng.rand() < 0.5 else None
                nb.capacitor(f"C{k}", n1, n2, float(abs(rng.randn()) + 0.1) * 1e-12, ic)
            elif pick == 2:
                nb.vsource(f"V{k}", n1, n2, Dc(float(rng.randn())))
            elif pick == 3:
                pts = np.sort(rng.rand(4) * 1e-8)
                while len(set(pts)) < 4:
                    pts = np.sort(rng.rand(4) * 1e-8)
                nb.isource(f"I{k}", n1, n2,
                           Pwl(tuple((float(t), float(v))
                               for t, v in zip(pts, rng.randn(4)))))
            elif pick == 4:
                n3 = rng.choice(nodes)
                nb.mosfet(f"M{k}", n1, str(n3), n2, "N" if rng.rand() < 0.5 else "P")
            else:
                nb.mtj(f"J{k}", n1, n2,
                       MtjParams(rp=float(abs(rng.randn()) + 0.5) * 1e3),
                       "P" if rng.rand() < 0.5 else "AP")
        nb.resistor("RG", "a", "0", 1e3)
        nb.tran(1e-11, 1e-9)
        net = nb.build()
        assert parse_netlist(serialize_netlist(net)) == net


def test_validate_no_ground():
    nb = NetlistBuilder()
    nb.resistor("R1", "a", "b", 1e3)
    diags = validate_netlist(nb.build())
    assert any("no ground" in d for d in diags)


def test_validate_bad_capacitor():
    net = Netlist(nodes=["0", "a"],
                  elements=[Capacitor("C1", "a", "0", 0.0, None)])
    diags = validate_netlist(net)
    assert len(diags) == 1 and "C1" in diags[0]


def test_validate_mtj_terminals():
    net = Netlist(nodes=["0", "a"],
                  elements=[Mtj("J1", "a", "a", MtjParams(), "P"),
                            Resistor("R1", "a", "0", 1e3)])
    assert any("J1" in d for d in validate_netlist(net))


def test_validate_undeclared_node():
    net = Netlist(nodes=["0", "a"],
                  elements=[Resistor("R1", "a", "zz", 1e3),
                            Resistor("R2", "a", "0", 1e3)])
    assert any("zz" in d for d in validate_netlist(net))


def test_validate_record_names():
    net = parse_netlist("R1 a 0 1k\n.record a nope\n")
    assert any("nope" in d for d in validate_netlist(net))
    net2 = parse_netlist("V1 a 0 DC 1\nR1 a 0 1k\n.record a V1\n")
    assert validate_netlist(net2) == []


@pytest.mark.parametrize("kind", list(GateKind))
@pytest.mark.parametrize("style", list(DesignStyle))
def test_validate_gate_templates_clean(kind, style):
    assert validate_netlist(build_gate(kind, style).netlist) == []


def test_validate_tran_bounds():
    net = parse_netlist("R1 a 0 1k\n.tran 10n 1n\n")
    assert any(".tran" in d for d in validate_netlist(net))
