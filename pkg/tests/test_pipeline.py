import csv
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qpgate.beam import Quadrupole, RoundLens, beam_properties
from qpgate.gates import GateSchedule, compile_unitary, gate_to_target, state_from_angles
from qpgate.pipeline import (
    ZSCAN_COLUMNS,
    SimulationConfig,
    build_line,
    run_analytic,
    schedule_for_design,
    simulate,
    waist_of,
    worker_count,
    write_zscan,
)
from qpgate.shifter import design, design_edge

CONFIG = SimulationConfig()
CTX = CONFIG.ctx
D = 0.12


def test_waist_of_keeps_width():
    q = complex(-0.08, 0.0566)
    w = waist_of(q)
    assert w.real == 0
    assert beam_properties(w, CTX).width == pytest.approx(beam_properties(q, CTX).width)


def test_block_structure():
    line = build_line(schedule_for_design(design(D, math.pi / 2)), CONFIG)
    kinds = [type(el).__name__ for el in line.elements]
    assert kinds == ["RoundLens", "Quadrupole", "Drift", "Quadrupole", "RoundLens"]
    # transfer lens of focal length d puts the curvature -d on QP1
    assert line.elements[0].f == pytest.approx(D)


def test_surrogate_for_switched_off_quadrupoles():
    dsg = design_edge(D, 0.0, 1e-6, CTX)
    line = build_line(schedule_for_design(dsg), SimulationConfig(off_surrogate=1000.0))
    quads = [el for el in line.elements if isinstance(el, Quadrupole)]
    assert [q.f for q in quads] == [1000.0, 1000.0]
    plain = build_line(schedule_for_design(dsg), CONFIG)
    assert all(q.f is None for q in plain.elements if isinstance(q, Quadrupole))


@settings(max_examples=50)
@given(st.floats(0.0, math.pi), st.floats(0.0, 2 * math.pi, exclude_max=True))
def test_analytic_engine_reaches_targets(theta, phi):
    sched = compile_unitary(gate_to_target(theta, phi), D)
    psi = state_from_angles(0.0, 0.0)
    rep = simulate(sched, psi, CONFIG, engine="analytic")
    assert rep["analytic"]["fidelity"] == pytest.approx(1.0, abs=1e-9)
    assert rep["analytic"]["mode_match_residual"] < 1e-9


def test_geometric_block_is_projected():
    dsg = design_edge(D, math.pi, 1e-6, CTX)
    line = build_line(schedule_for_design(dsg), CONFIG)
    state, notes = run_analytic(line, state_from_angles(math.pi / 2, 0.0))
    assert state.stigmatic
    assert notes and "projected" in notes[0]


def test_empty_schedule_uses_default_waist():
    line = build_line(GateSchedule(), CONFIG)
    assert beam_properties(line.q0, CTX).width == pytest.approx(CONFIG.default_waist)
    assert line.elements == []


def test_unknown_engine():
    with pytest.raises(ValueError):
        simulate(GateSchedule(), state_from_angles(0, 0), CONFIG, engine="quantum")


def test_zscan(tmp_path):
    line = build_line(schedule_for_design(design(D, math.pi / 2)), CONFIG)
    path = tmp_path / "z.csv"
    write_zscan(path, line, CTX, samples_per_drift=10)
    rows = list(csv.reader(path.read_text().splitlines()))
    assert tuple(rows[0]) == ZSCAN_COLUMNS
    last = [float(v) for v in rows[-1]]
    assert last[0] == pytest.approx(D)
    assert last[-1] == pytest.approx(math.pi / 2, abs=1e-12)
    assert last[1] == pytest.approx(last[2], rel=1e-9)


def test_worker_count(monkeypatch):
    monkeypatch.setenv("QPGATE_THREADS", "2")
    assert worker_count(8) == 2
    monkeypatch.setenv("QPGATE_THREADS", "junk")
    with pytest.raises(ValueError):
        worker_count(8)
    monkeypatch.delenv("QPGATE_THREADS")
    assert worker_count(3) == 3


def test_transfer_lens_elements_are_round():
    sched = compile_unitary(gate_to_target(math.pi / 2, math.pi / 4), D)
    line = build_line(sched, CONFIG)
    lenses = [el for el in line.elements if isinstance(el, RoundLens)]
    assert len(lenses) == 2
