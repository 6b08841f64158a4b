"""Turn gate schedules into optics lines and run the analytic and wave engines.

Every shifter block is entered at a beam waist: a round transfer lens gives
the converging beam the design needs at QP1, and a round lens after QP2
flattens the wavefront again.  Consecutive blocks are joined by relays.
"""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass, field
from typing import Callable

from .beam import (
    ElectronContext,
    Element,
    ModeState,
    Rotator,
    apply_element,
    beam_properties,
    max_width,
    trace_line,
    wavenumber_from_energy,
)
from .gates import (
    GateSchedule,
    QubitState,
    Rotate,
    Shift,
    amplitudes_to_angles,
    fidelity,
    simulate_schedule,
)
from .shifter import Mode, PhaseShifterDesign, relay_elements, wrap_phase
from .wave import FieldGrid, modal_overlap, oam_expectation, run_line, state_field


@dataclass
class SimulationConfig:
    energy_kev: float = 200.0
    grid: int = 1024
    extent_factor: float = 6.0
    rescale: bool = False
    # focal length [m] standing in for switched-off quadrupoles in wave runs (1 km is typical)
    off_surrogate: float | None = None
    default_waist: float = 500e-9

    @property
    def ctx(self) -> ElectronContext:
        return wavenumber_from_energy(self.energy_kev)


def waist_of(q: complex) -> complex:
    """Waist beam with the same width as ``q``."""
    return 1 / complex(0.0, (1 / q).imag)


@dataclass
class Segment:
    elements: list[Element]
    geometric: bool = False


@dataclass
class PhysicalLine:
    q0: complex
    segments: list[Segment] = field(default_factory=list)

    @property
    def elements(self) -> list[Element]:
        return [el for seg in self.segments for el in seg.elements]


def _block(dsg: PhaseShifterDesign, q_now: complex, off_focal) -> tuple[list[Element], complex]:
    lead = relay_elements(q_now, dsg.q_in, dsg.stages[0].d if dsg.stages else dsg.d)
    tail_q = waist_of(dsg.q_out)
    tail = relay_elements(dsg.q_out, tail_q, 0.0)
    return lead + dsg.elements(off_focal) + tail, tail_q


def build_line(schedule: GateSchedule, config: SimulationConfig) -> PhysicalLine:
    shifts = [st for st in schedule.stages if isinstance(st, Shift)]
    if shifts:
        q = waist_of(shifts[0].design.q_in)
    else:
        q = complex(0.0, config.ctx.k * config.default_waist**2 / 2)
    line = PhysicalLine(q)
    for st in schedule.stages:
        if isinstance(st, Rotate):
            line.segments.append(Segment([Rotator(st.angle)]))
        else:
            if st.design is None:
                raise ValueError("shift stage has no attached design")
            els, q = _block(st.design, q, config.off_surrogate)
            geometric = st.design.mode is Mode.LINE_FOCUS or any(
                s.mode is Mode.LINE_FOCUS for s in st.design.stages
            )
            line.segments.append(Segment(els, geometric))
    return line


def schedule_for_design(dsg: PhaseShifterDesign) -> GateSchedule:
    return GateSchedule((Shift(dsg.delta_phi, dsg),))


# --- engines ---------------------------------------------------------------


def _round_off(state: ModeState) -> ModeState:
    """Project a nearly round beam on the round beam with mean ``1/q``."""
    q = 2 / (1 / state.q_h + 1 / state.q_v)
    return ModeState(q, q, state.a, state.b, state.frame_angle, state.gouy_h, state.gouy_v, state.z)


def run_analytic(line: PhysicalLine, psi: QubitState) -> tuple[ModeState, list[str]]:
    state = ModeState.round(line.q0, psi.a, psi.b)
    notes = []
    for seg in line.segments:
        for el in seg.elements:
            state = apply_element(state, el)
        if seg.geometric and not state.stigmatic:
            notes.append(
                f"geometric block left h/v mismatch {state.mismatch():.3g}; "
                "analytic state projected on the mean round beam"
            )
            state = _round_off(state)
    return state, notes


def wave_extent(line: PhysicalLine, config: SimulationConfig) -> float:
    return config.extent_factor * max_width(ModeState.round(line.q0), line.elements, config.ctx)


def run_wave(
    line: PhysicalLine,
    psi: QubitState,
    config: SimulationConfig,
    on_element: Callable[[int, Element | None, FieldGrid], None] | None = None,
) -> FieldGrid:
    """Wave run of ``line``; ``on_element`` also sees the input field as index -1."""
    ctx = config.ctx
    extent = wave_extent(line, config)
    field_in = state_field(psi, line.q0, ctx, config.grid, extent)
    state = ModeState.round(line.q0, psi.a, psi.b) if config.rescale else None
    if on_element is not None:
        on_element(-1, None, field_in)
    return run_line(
        field_in, line.elements, state=state, rescale=config.rescale, on_element=on_element
    )


def simulate(
    schedule: GateSchedule,
    psi: QubitState,
    config: SimulationConfig,
    engine: str = "both",
    on_element: Callable[[int, Element, FieldGrid], None] | None = None,
) -> dict:
    """Run a schedule on an input state and compare to the gate-level target."""
    if engine not in ("analytic", "wave", "both"):
        raise ValueError(f"unknown engine {engine!r}")
    target = simulate_schedule(schedule, psi)
    line = build_line(schedule, config)
    t_theta, t_phi, _ = target.angles
    report: dict = {
        "energy_keV": config.energy_kev,
        "input": dict(zip(("theta_rad", "phi_rad"), psi.angles[:2])),
        "target": {"theta_rad": t_theta, "phi_rad": t_phi},
    }
    state, notes = run_analytic(line, psi)
    analytic = None
    if engine in ("analytic", "both"):
        out = QubitState.normalized(state.a, state.b)
        theta, phi, chi = amplitudes_to_angles(out.a, out.b)
        analytic = {
            "theta_rad": theta,
            "phi_rad": phi,
            "chi_rad": chi,
            "fidelity": fidelity(out, target),
            "relative_phase_rad": wrap_phase(state.relative_phase),
            "common_phase_rad": state.common_phase,
            "mode_match_residual": state.mismatch(),
            "notes": notes,
        }
        report["analytic"] = analytic
    if engine in ("wave", "both"):
        out_field = run_wave(line, psi, config, on_element)
        ov = modal_overlap(out_field, state.q_h, target=target)
        wave = {
            "theta_rad": ov.theta,
            "phi_rad": ov.phi,
            "chi_rad": ov.chi,
            "fidelity": ov.fidelity,
            "residual_power": ov.residual_power,
            "lz_hbar": oam_expectation(out_field),
            "grid": config.grid,
            "extent_m": out_field.extent,
        }
        report["wave"] = wave
        if analytic is not None:
            report["delta"] = {
                "theta_rad": wave["theta_rad"] - analytic["theta_rad"],
                "phi_rad": wrap_phase(wave["phi_rad"] - analytic["phi_rad"]),
                "chi_rad": wrap_phase(wave["chi_rad"] - analytic["chi_rad"]),
            }
    return report


def worker_count(default: int | None = None) -> int:
    """Worker processes for batch runs, capped by ``QPGATE_THREADS``."""
    n = default or os.cpu_count() or 1
    cap = os.environ.get("QPGATE_THREADS")
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise ValueError(f"QPGATE_THREADS must be a positive integer, got {cap!r}") from None
    return n


# --- z scan ----------------------------------------------------------------

ZSCAN_COLUMNS = (
    "z_m", "w_h_m", "w_v_m", "R_h_m", "R_v_m", "gamma_h_rad", "gamma_v_rad", "delta_phi_accum_rad",
)


def zscan_rows(line: PhysicalLine, ctx: ElectronContext, samples_per_drift: int = 50):
    state = ModeState.round(line.q0)
    for st in trace_line(state, line.elements, samples_per_drift):
        ph, pv = beam_properties(st.q_h, ctx), beam_properties(st.q_v, ctx)
        yield (st.z, ph.width, pv.width, ph.curvature_radius, pv.curvature_radius,
               ph.gouy, pv.gouy, st.relative_phase)


def write_zscan(path, line: PhysicalLine, ctx: ElectronContext, samples_per_drift: int = 50) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(ZSCAN_COLUMNS)
        for row in zscan_rows(line, ctx, samples_per_drift):
            w.writerow([format(v, ".17g") for v in row])
