"""Command-line front end.

Subcommands:
    run      transient-simulate a netlist file, write a CSV waveform
    gate     build + verify one gate testbench, report verdicts/energy
    compare  adiabatic vs. baseline energy per operation for one gate
    sweep    energy per operation across clock phase times

Exit codes are script-friendly and distinct per failure class:
    0 success, 1 I/O error, 2 usage error, 3 netlist parse error,
    4 simulation non-convergence, 5 logic verification failure.

Waveforms are CSV (fixed column order, full-precision scientific
notation, locale-independent); reports are key = value documents.
Unless --no-plot is given, a PNG figure is rendered next to each file
written. Identical invocations produce byte-identical data files.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .energy import EnergyReport, compare_designs, energy_per_operation, integrate_energy
from .engine import ConvergenceError, SingularMatrixError, TransientResult, transient_run
from .gates import (
    DesignStyle,
    GateKind,
    TestbenchSpec,
    build_gate,
    verify_truth_table,
)
from .netlist import Netlist, NetlistError, VSource, parse_netlist, parse_value

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_CONVERGENCE = 4
EXIT_VERIFY = 5

# Published single-point comparison ratios for the original designs
# (XOR, AND, full adder); recorded in reports next to measured values.
REFERENCE_RATIOS = {"xor": 13.0, "and": 6.0, "fulladder": 7.0}

_KIND = {k.value: k for k in GateKind}
_STYLE = {s.value: s for s in DesignStyle}


def _fmt(x: float) -> str:
    return f"{x:.17e}"


def waveform_columns(result: TransientResult, netlist: Netlist) -> dict:
    """Recorded signals in directive order: v(node) and i(vsource)."""
    names = list(netlist.directives.record)
    if not names:
        names = [n for n in netlist.nodes if n != "0"]
        names += [e.name for e in netlist.elements if isinstance(e, VSource)]
    vsrc = {e.name.lower(): e.name for e in netlist.elements if isinstance(e, VSource)}
    cols = {}
    for name in names:
        if name in result.node_voltages:
            cols[f"v({name})"] = result.node_voltages[name]
        elif name.lower() in vsrc:
            cols[f"i({name})"] = result.vsource_currents[vsrc[name.lower()]]
        else:
            raise KeyError(name)
    return cols


def write_waveform_csv(path, result: TransientResult, netlist: Netlist) -> dict:
    cols = waveform_columns(result, netlist)
    with open(path, "w", newline="\n") as fh:
        fh.write("time," + ",".join(cols) + "\n")
        mat = np.column_stack([result.times] + list(cols.values()))
        for row in mat:
            fh.write(",".join(_fmt(x) for x in row) + "\n")
    return cols


def write_report(path, lines: list):
    text = "\n".join(f"{k} = {v}" for k, v in lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="\n") as fh:
            fh.write(text)


def _energy_lines(report: EnergyReport, write_sources=()) -> list:
    lines = [
        ("energy_window_start", _fmt(report.window[0])),
        ("energy_window_end", _fmt(report.window[1])),
    ]
    for name, e in report.elements.items():
        if e.supplied or e.recovered:
            lines.append((f"element_{name}_supplied", _fmt(e.supplied)))
            lines.append((f"element_{name}_recovered", _fmt(e.recovered)))
        if e.dissipated:
            lines.append((f"element_{name}_dissipated", _fmt(e.dissipated)))
        if e.stored_delta:
            lines.append((f"element_{name}_stored_delta", _fmt(e.stored_delta)))
    lines += [
        ("total_supplied", _fmt(report.total_supplied)),
        ("total_recovered", _fmt(report.total_recovered)),
        ("total_dissipated", _fmt(report.total_dissipated)),
        ("total_stored_delta", _fmt(report.total_stored_delta)),
        ("energy_balance_residual", _fmt(report.residual)),
        ("write_energy", _fmt(report.source_net(write_sources))),
    ]
    return lines


def _png_path(path) -> str:
    return str(Path(path).with_suffix(".png"))


def _gate_run(kind: GateKind, style: DesignStyle, args):
    tb = TestbenchSpec(
        vdd=args.vdd,
        t_phase=args.tphase,
        c_load=args.cload,
        dt=args.dt,
    )
    verdicts, template, result = verify_truth_table(kind, style, tb)
    t4 = 4.0 * template.clock.t_phase
    n_ops = len(template.sequence) - 1
    window = (t4, (1 + n_ops) * t4)
    report = integrate_energy(result, template.netlist, window)
    e_op = energy_per_operation(report, n_ops, period=t4, exclude=template.write_sources)
    e_op_with_writes = energy_per_operation(report, n_ops, period=t4)
    return verdicts, template, result, report, e_op, e_op_with_writes


def _verdict_lines(verdicts) -> list:
    lines = []
    for v in verdicts:
        pat = "".join(str(b) for b in v.pattern)
        exp = "".join(str(b) for b in v.expected)
        obs = "".join("x" if b is None else str(b) for b in v.observed)
        volts = "/".join(f"{x:.4f}" for x in v.volts)
        lines.append((f"pattern_{pat}",
                      f"expected={exp} observed={obs} rails={volts} "
                      f"{'pass' if v.passed else 'FAIL'}"))
    npass = sum(v.passed for v in verdicts)
    lines.append(("patterns_passed", f"{npass}/{len(verdicts)}"))
    return lines


# --------------------------------------------------------------------------
# Subcommands
# --------------------------------------------------------------------------

def cmd_run(args) -> int:
    path = Path(args.netlist)
    try:
        text = path.read_text()
    except OSError as exc:
        print(f"error: cannot read {path}: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        netlist = parse_netlist(text)
    except NetlistError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.dt is not None:
        netlist.directives.dt = args.dt
    try:
        result = transient_run(netlist)
    except (ConvergenceError, SingularMatrixError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    out = args.out or str(path.with_suffix(".csv"))
    try:
        cols = write_waveform_csv(out, result, netlist)
    except OSError as exc:
        print(f"error: cannot write {out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote {out} ({len(result.times)} points, {len(cols)} signals)")
    if args.plot:
        from .plotting import save_waveform_figure
        fig = save_waveform_figure(result.times, cols,
                                   str(Path(out).with_suffix(".png")),
                                   title=netlist.title or path.name)
        print(f"wrote {fig}")
    return EXIT_OK


def cmd_gate(args) -> int:
    kind, style = _KIND[args.kind], _STYLE[args.style]
    try:
        verdicts, template, result, report, e_op, e_op_w = _gate_run(kind, style, args)
    except (ConvergenceError, SingularMatrixError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    lines = [
        ("kind", kind.value),
        ("style", style.value),
        ("vdd", args.vdd),
        ("t_phase", args.tphase),
        ("c_load", args.cload),
        ("dt", template.tb.timestep()),
    ]
    lines += _verdict_lines(verdicts)
    lines += _energy_lines(report, template.write_sources)
    lines += [
        ("energy_per_op", _fmt(e_op)),
        ("energy_per_op_with_writes", _fmt(e_op_w)),
    ]
    write_report(args.report, lines)
    if args.waves:
        cols = write_waveform_csv(args.waves, result, template.netlist)
        print(f"wrote {args.waves}")
        if args.plot:
            from .plotting import save_waveform_figure
            save_waveform_figure(result.times, cols, _png_path(args.waves),
                                 title=template.netlist.title)
    npass = sum(v.passed for v in verdicts)
    print(f"{kind.value} {style.value}: {npass}/{len(verdicts)} patterns pass, "
          f"energy/op = {e_op:.3e} J")
    return EXIT_OK if npass == len(verdicts) else EXIT_VERIFY


def cmd_compare(args) -> int:
    kind = _KIND[args.kind]
    rows = []
    lines = [("kind", kind.value)]
    try:
        results = {}
        for style in (DesignStyle.ADIABATIC_MTJ, DesignStyle.BASELINE_MTJ):
            verdicts, template, result, report, e_op, _ = _gate_run(kind, style, args)
            npass = sum(v.passed for v in verdicts)
            results[style] = (verdicts, template, report, e_op)
            lines.append((f"{style.value}_patterns_passed", f"{npass}/{len(verdicts)}"))
            if npass != len(verdicts):
                print(f"error: {style.value} failed logic verification", file=sys.stderr)
                return EXIT_VERIFY
        t4 = 4.0 * args.tphase
        n_ops = len(results[DesignStyle.ADIABATIC_MTJ][0])
        row = compare_designs(
            results[DesignStyle.ADIABATIC_MTJ][2],
            results[DesignStyle.BASELINE_MTJ][2],
            n_cycles=n_ops,
            kind=kind.value,
            period=t4,
            exclude_adiabatic=results[DesignStyle.ADIABATIC_MTJ][1].write_sources,
            exclude_baseline=results[DesignStyle.BASELINE_MTJ][1].write_sources,
        )
        rows.append(row)
    except (ConvergenceError, SingularMatrixError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(f"{'gate':10s} {'adiabatic J/op':>15s} {'baseline J/op':>15s} "
          f"{'ratio':>7s} {'reference':>10s}")
    ref = REFERENCE_RATIOS.get(kind.value)
    print(f"{row.kind:10s} {row.adiabatic_j_per_op:15.4e} "
          f"{row.baseline_j_per_op:15.4e} {row.ratio:7.2f} {ref:10.1f}")
    lines += [
        ("adiabatic_energy_per_op", _fmt(row.adiabatic_j_per_op)),
        ("baseline_energy_per_op", _fmt(row.baseline_j_per_op)),
        ("ratio", f"{row.ratio:.6f}"),
        ("reference_ratio", f"{ref:.1f}"),
    ]
    if args.report:
        write_report(args.report, lines)
        print(f"wrote {args.report}")
        if args.plot:
            from .plotting import save_comparison_figure
            save_comparison_figure(rows, _png_path(args.report), REFERENCE_RATIOS)
    return EXIT_OK


def cmd_sweep(args) -> int:
    kind, style = _KIND[args.kind], _STYLE[args.style]
    try:
        t_phases = [parse_value(tok) for tok in args.tphase_list.split(",") if tok]
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if len(t_phases) < 2:
        print("error: sweep needs at least two t_phase points", file=sys.stderr)
        return EXIT_USAGE
    energies = []
    try:
        for tp in t_phases:
            tb = TestbenchSpec(vdd=args.vdd, t_phase=tp, c_load=args.cload, dt=args.dt)
            template = build_gate(kind, style, tb)
            result = transient_run(template.netlist)
            t4 = 4.0 * tp
            n_ops = len(template.sequence) - 1
            report = integrate_energy(result, template.netlist, (t4, (1 + n_ops) * t4))
            energies.append(energy_per_operation(
                report, n_ops, period=t4, exclude=template.write_sources))
    except (ConvergenceError, SingularMatrixError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    print(f"{'t_phase':>12s} {'energy/op (J)':>16s}")
    for tp, e in zip(t_phases, energies):
        print(f"{tp:12.4e} {e:16.6e}")
    non_increasing = all(b <= a * 1.05 for a, b in zip(energies, energies[1:]))
    print(f"non-increasing within 5%: {'yes' if non_increasing else 'no'}")
    if args.out:
        with open(args.out, "w", newline="\n") as fh:
            fh.write("t_phase,energy_per_op\n")
            for tp, e in zip(t_phases, energies):
                fh.write(f"{_fmt(tp)},{_fmt(e)}\n")
        print(f"wrote {args.out}")
        if args.plot:
            from .plotting import save_sweep_figure
            save_sweep_figure(t_phases, {style.value: energies},
                              _png_path(args.out), kind.value)
    return EXIT_OK


# --------------------------------------------------------------------------
# Parser
# --------------------------------------------------------------------------

def _add_tb_options(p: argparse.ArgumentParser):
    p.add_argument("--vdd", type=float, default=1.0, help="supply voltage (V)")
    p.add_argument("--tphase", type=parse_value, default=10e-9,
                   help="clock phase time (s), accepts unit suffixes")
    p.add_argument("--cload", type=parse_value, default=1e-15,
                   help="load capacitance per output rail (F)")
    p.add_argument("--dt", type=parse_value, default=None,
                   help="timestep override (s)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mtjsim",
        description="Transient simulation and energy benchmarking of "
                    "hybrid MTJ/CMOS adiabatic logic.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a netlist file to CSV")
    p.add_argument("netlist")
    p.add_argument("--dt", type=parse_value, default=None, help="timestep override (s)")
    p.add_argument("--out", default=None, help="waveform CSV path")
    p.add_argument("--no-plot", dest="plot", action="store_false",
                   help="skip the PNG figure next to the CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("gate", help="verify one gate testbench and audit energy")
    p.add_argument("--kind", required=True, choices=sorted(_KIND))
    p.add_argument("--style", required=True, choices=sorted(_STYLE))
    _add_tb_options(p)
    p.add_argument("--waves", default=None, help="waveform CSV path")
    p.add_argument("--report", default=None,
                   help="report path (default: print to stdout)")
    p.add_argument("--no-plot", dest="plot", action="store_false")
    p.set_defaults(func=cmd_gate)

    p = sub.add_parser("compare", help="adiabatic vs. baseline energy per op")
    p.add_argument("--kind", required=True, choices=sorted(_KIND))
    _add_tb_options(p)
    p.add_argument("--report", default=None, help="report path")
    p.add_argument("--no-plot", dest="plot", action="store_false")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="energy per op across clock phase times")
    p.add_argument("--kind", required=True, choices=sorted(_KIND))
    p.add_argument("--style", default="adiabatic", choices=sorted(_STYLE))
    p.add_argument("--tphase-list", required=True,
                   help="comma-separated phase times, e.g. 10n,20n,40n")
    p.add_argument("--vdd", type=float, default=1.0)
    p.add_argument("--cload", type=parse_value, default=1e-15)
    p.add_argument("--dt", type=parse_value, default=None)
    p.add_argument("--out", default=None, help="sweep table CSV path")
    p.add_argument("--no-plot", dest="plot", action="store_false")
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
