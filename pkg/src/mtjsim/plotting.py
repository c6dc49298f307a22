"""Figure rendering for waveforms, design comparisons, and clock sweeps.

Matplotlib is imported lazily with the Agg backend so headless runs and
plain library use never touch a display. Every function writes a PNG
next to the data file it illustrates and returns the path.
"""

from __future__ import annotations

from typing import Optional


def _plt():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def save_waveform_figure(times, columns: dict, path: str, title: str = "") -> str:
    """Stacked traces (one axis, labeled lines) of the recorded signals."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(9, 4.2))
    ns = times * 1e9
    for label, values in columns.items():
        ax.plot(ns, values, label=label, linewidth=1.0)
    ax.set_xlabel("time (ns)")
    ax.set_ylabel("signal")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8, ncol=2)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_comparison_figure(rows, path: str, reference: Optional[dict] = None) -> str:
    """Grouped bars of energy per operation, adiabatic vs. baseline,
    annotated with the measured ratio (and the published reference
    ratio when one is known)."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    kinds = [r.kind for r in rows]
    xs = range(len(rows))
    width = 0.38
    adia = [r.adiabatic_j_per_op * 1e15 for r in rows]
    base = [r.baseline_j_per_op * 1e15 for r in rows]
    ax.bar([x - width / 2 for x in xs], adia, width, label="adiabatic")
    ax.bar([x + width / 2 for x in xs], base, width, label="baseline")
    for x, r in zip(xs, rows):
        note = f"{r.ratio:.1f}x"
        if reference and r.kind in reference:
            note += f" (ref {reference[r.kind]:.0f}x)"
        top = max(r.adiabatic_j_per_op, r.baseline_j_per_op) * 1e15
        ax.annotate(note, (x, top), ha="center", va="bottom", fontsize=8)
    ax.set_xticks(list(xs))
    ax.set_xticklabels(kinds)
    ax.set_ylabel("energy per operation (fJ)")
    ax.set_title("energy per operation: adiabatic vs. baseline")
    ax.legend()
    ax.grid(True, axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path


def save_sweep_figure(t_phases, series: dict, path: str, kind: str = "") -> str:
    """Energy per operation versus clock phase time, log-x."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(6.5, 4.2))
    xs = [tp * 1e9 for tp in t_phases]
    for label, energies in series.items():
        ax.plot(xs, [e * 1e15 for e in energies], marker="o", label=label)
    ax.set_xscale("log")
    ax.set_xticks(xs)
    ax.set_xticklabels([f"{x:g}" for x in xs])
    ax.minorticks_off()
    ax.set_xlabel("clock phase time (ns)")
    ax.set_ylabel("energy per operation (fJ)")
    title = "energy per operation vs. clock phase time"
    if kind:
        title += f" ({kind})"
    ax.set_title(title)
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return path
