"""Shared fixtures: expensive gate simulations run once per session."""

import time

import pytest

from mtjsim.energy import integrate_energy
from mtjsim.gates import TestbenchSpec, verify_truth_table


class GateRuns:
    """Lazy cache of verified gate testbench runs keyed by
    (kind, style, t_phase). Tracks wall time of each fresh run."""

    def __init__(self):
        self._cache = {}
        self.timings = {}

    def get(self, kind, style, t_phase=10e-9):
        key = (kind, style, t_phase)
        if key not in self._cache:
            tb = TestbenchSpec(t_phase=t_phase)
            t0 = time.perf_counter()
            verdicts, template, result = verify_truth_table(kind, style, tb)
            self.timings[key] = time.perf_counter() - t0
            self._cache[key] = (verdicts, template, result)
        return self._cache[key]

    def energy(self, kind, style, t_phase=10e-9):
        """Energy report over the measurement window (cycles after the
        warmup period), plus per-op context."""
        verdicts, template, result = self.get(kind, style, t_phase)
        t4 = 4.0 * t_phase
        n_ops = len(template.sequence) - 1
        report = integrate_energy(result, template.netlist, (t4, (1 + n_ops) * t4))
        return report, template, n_ops, t4


@pytest.fixture(scope="session")
def gate_runs():
    return GateRuns()


RC_NETLIST = """* rc step testbench
V1 in 0 DC 1.0
R1 in out 1k
C1 out 0 1p IC=0
.tran 10p 10n
.record out V1
"""


@pytest.fixture()
def rc_netlist_text():
    return RC_NETLIST
