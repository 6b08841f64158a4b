"""Two-quadrupole relative phase shifter design.

Quadrupole QP1 (focal length ``f1`` on the horizontal axis) and QP2 (``f2``)
sit a distance ``d`` apart.  With ``u = sign(f1) * sqrt(f1*f2/d^2 - 1)`` the
incident beam

    q_in = (-d f1^2 + i d^2 f1 u) / (f1^2 + d^2 u^2)

leaves QP2 round, and the HG_01 mode gains ``-2*arctan(1/u)`` of Gouy phase
relative to HG_10.  One of ``f1``, ``f2`` and the input beam stays free.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence, Union

from .beam import (
    BeamError,
    Drift,
    ElectronContext,
    Element,
    ModeState,
    Quadrupole,
    RoundLens,
    beam_properties,
    check_q,
    propagate_line,
    q_from_width_curvature,
    width,
)

EDGE_WARN = 1e-6
MATCH_RTOL = 1e-9
# phase error giving fidelity 0.95 on an equatorial state: 2*arccos(sqrt(0.95))
GEOMETRIC_PHASE_TOL = 2 * math.acos(math.sqrt(0.95))
GEOMETRIC_MATCH_TOL = 0.05
GEOMETRIC_RATIO_WARN = 0.2


class DesignError(ValueError):
    pass


class Mode(str, enum.Enum):
    NORMAL = "normal"
    QPS_OFF = "qps_off"
    LINE_FOCUS = "line_focus"
    CHAINED = "chained"


def wrap_phase(phi: float) -> float:
    """Map an angle to (-pi, pi]."""
    x = math.remainder(phi, 2 * math.pi)
    return math.pi if x == -math.pi else x


def phase_from_u(u: float) -> float:
    """Relative phase of a mode-matched shifter with parameter ``u``.

    Continuous for ``u != 0``; ``u -> 0`` is the pi line-focus limit and
    ``|u| -> inf`` the switched-off limit.
    """
    if u == 0:
        return math.pi
    return -2 * math.atan(1 / u)


def u_from_phase(delta_phi: float) -> float:
    """Inverse of :func:`phase_from_u`, ``u = -cot(delta_phi / 2)``."""
    phi = wrap_phase(delta_phi)
    if phi == 0 or phi == math.pi:
        raise DesignError(
            f"delta_phi={phi} is degenerate for a mode-matched shifter; "
            "use design_edge() (QPs off / line focus) or chain() instead"
        )
    if abs(phi) < EDGE_WARN or math.pi - abs(phi) < EDGE_WARN:
        warnings.warn(
            f"delta_phi={phi} is within {EDGE_WARN} of an edge case; the design is extreme",
            RuntimeWarning,
            stacklevel=2,
        )
    return -1 / math.tan(phi / 2)


def u_from_phase_eq6(delta_phi: float) -> float:
    """Same root from ``(1 +- sqrt(1 + tan^2)) / tan``, quadrant picked explicitly.

    Singular at ``delta_phi = +-pi/2``; kept as a cross-check of the
    half-angle form.
    """
    t = math.tan(delta_phi)
    root = math.sqrt(1 + t * t)
    cands = [(1 + root) / t, (1 - root) / t]
    return min((-c for c in cands), key=lambda u: abs(wrap_phase(phase_from_u(u) - delta_phi)))


# --- free parameter choices ------------------------------------------------


@dataclass(frozen=True)
class F1:
    f1: float


@dataclass(frozen=True)
class Symmetric:
    pass


@dataclass(frozen=True)
class InputRayleigh:
    """Fix ``Im[q_in]``.  ``branch="far"`` keeps ``|f1| >= d|u|`` (contains the symmetric design)."""

    zr: float
    branch: str = "far"


@dataclass(frozen=True)
class InputWidth:
    w: float
    ctx: ElectronContext


@dataclass(frozen=True)
class OutputWidth:
    w: float
    ctx: ElectronContext


FreeParameter = Union[F1, Symmetric, InputRayleigh, InputWidth, OutputWidth]


# --- designs ---------------------------------------------------------------


@dataclass(frozen=True)
class PhaseShifterDesign:
    d: float
    delta_phi: float
    u: float | None
    f1: float | None
    f2: float | None
    q_in: complex
    q_out: complex
    mode: Mode = Mode.NORMAL
    stages: tuple["PhaseShifterDesign", ...] = ()
    relays: tuple[tuple[Element, ...], ...] = ()
    w_geom: float | None = None

    def elements(self, off_focal: float | None = None) -> list[Element]:
        """QP1, drift, QP2 (chains interleave their relays).

        ``off_focal`` replaces switched-off quadrupoles by a long but finite
        focal length, as a wave simulation may want.
        """
        if self.mode is Mode.CHAINED:
            out: list[Element] = []
            for i, stage in enumerate(self.stages):
                if i:
                    out.extend(self.relays[i - 1])
                out.extend(stage.elements(off_focal))
            return out
        f1 = self.f1 if self.f1 is not None else off_focal
        f2 = self.f2 if self.f2 is not None else off_focal
        return [Quadrupole(f1), Drift(self.d), Quadrupole(f2)]

    @property
    def length(self) -> float:
        return sum(el.length for el in self.elements() if isinstance(el, Drift))

    def w_in(self, ctx: ElectronContext) -> float:
        return width(self.q_in, ctx)

    def w_out(self, ctx: ElectronContext) -> float:
        return width(self.q_out, ctx)


def _q_in(d: float, f1: float, u: float) -> complex:
    den = f1 * f1 + d * d * u * u
    return complex(-d * f1 * f1 / den, d * d * f1 * u / den)


def _f1_for(d: float, u: float, free: FreeParameter) -> float:
    sign = math.copysign(1.0, u)
    if isinstance(free, Symmetric):
        return sign * d * math.sqrt(1 + u * u)
    if isinstance(free, F1):
        if free.f1 == 0 or math.copysign(1.0, free.f1) != sign:
            raise DesignError(
                f"f1={free.f1} must have the sign of u={u:.6g} for this phase"
            )
        return free.f1
    if isinstance(free, InputRayleigh):
        # Im[q_in](f1) peaks at d/2 for |f1| = d|u|
        x = 2 * free.zr / d
        if not 0 < x <= 1:
            raise DesignError(
                f"input Rayleigh range {free.zr} outside attainable (0, d/2 = {d / 2}]"
            )
        root = math.sqrt(1 - x * x)
        pick = {"far": 1 + root, "near": 1 - root}.get(free.branch)
        if pick is None:
            raise DesignError(f"unknown branch {free.branch!r}")
        return d * d * u * pick / (2 * free.zr)
    if isinstance(free, InputWidth):
        # |q_in|^2 / Im[q_in] = f1 / u
        return free.ctx.k * u * free.w**2 / 2
    if isinstance(free, OutputWidth):
        f2 = free.ctx.k * u * free.w**2 / 2
        return d * d * (1 + u * u) / f2
    if isinstance(free, (tuple, list)):
        raise DesignError(
            "a shifter has one free parameter for given d and delta_phi; "
            f"got {len(free)} constraints (input and output size cannot both be chosen)"
        )
    raise DesignError(f"unsupported free parameter {free!r}")


def design(d: float, delta_phi: float, free: FreeParameter = Symmetric()) -> PhaseShifterDesign:
    """Mode-matched shifter for spacing ``d`` and relative phase ``delta_phi``."""
    if not d > 0:
        raise DesignError(f"spacing d must be positive, got {d}")
    phi = wrap_phase(delta_phi)
    u = u_from_phase(phi)
    f1 = _f1_for(d, u, free)
    f2 = d * d * (1 + u * u) / f1
    q_in = check_q(_q_in(d, f1, u))
    shell = PhaseShifterDesign(d, phi, u, f1, f2, q_in, q_in)
    out = propagate_line(ModeState.round(q_in), shell.elements())
    return PhaseShifterDesign(d, phi, u, f1, f2, q_in, out.q_h)


def design_edge(
    d: float, delta_phi: float, w_geom: float, ctx: ElectronContext
) -> PhaseShifterDesign:
    """Geometric-limit shifter for ``delta_phi`` in {0, pi}.

    0: quadrupoles off, incident beam converging to a focus at ``d/2``.
    pi: ``f1 = f2 = -d`` with the beam converging on QP2, so the vertical
    component passes a (horizontal) line focus.
    """
    if not d > 0:
        raise DesignError(f"spacing d must be positive, got {d}")
    phi = wrap_phase(delta_phi)
    if phi == 0:
        mode, R, f = Mode.QPS_OFF, -d / 2, None
    elif phi == math.pi:
        mode, R, f = Mode.LINE_FOCUS, -d, -d
    else:
        raise DesignError(f"design_edge handles delta_phi in {{0, pi}}, got {phi}")
    ratio = 2 * abs(R) / (ctx.k * w_geom**2)
    if ratio > GEOMETRIC_RATIO_WARN:
        warnings.warn(
            f"w_geom={w_geom:.3g} m is too small for the geometric limit "
            f"(diffraction/curvature ratio {ratio:.3g} > {GEOMETRIC_RATIO_WARN})",
            RuntimeWarning,
            stacklevel=2,
        )
    q_in = q_from_width_curvature(w_geom, R, ctx)
    shell = PhaseShifterDesign(d, phi, None, f, f, q_in, q_in, mode, w_geom=w_geom)
    out = propagate_line(ModeState.round(q_in), shell.elements())
    # line focus leaves a small h/v mismatch; report the mean output beam
    q_out = 2 / (1 / out.q_h + 1 / out.q_v)
    return PhaseShifterDesign(d, phi, None, f, f, q_in, q_out, mode, w_geom=w_geom)


def relay_elements(q_from: complex, q_to: complex, length: float, rtol: float = MATCH_RTOL) -> list[Element]:
    """Round-lens relay turning ``q_from`` into ``q_to``.

    Equal widths need only one lens; otherwise lens, drift ``length``, lens.
    """
    s_from, s_to = (1 / q_from).imag, (1 / q_to).imag
    if abs(s_from - s_to) <= rtol * abs(s_to):
        p = (1 / q_from).real - (1 / q_to).real
        return [] if abs(p) <= rtol * abs(1 / q_to) else [RoundLens(1 / p)]
    if not length > 0:
        raise DesignError("changing the beam width needs a relay of positive length")
    # |q|^2/Im q after the drift is quadratic in x = Re(1/q) just after lens a
    s = s_from
    W = -1 / s_to
    disc = -s * (length * length * s + W)
    if disc < 0:
        raise DesignError(
            f"relay of length {length} cannot reach the target width; the drift may be at most "
            f"{1 / math.sqrt(s_from * s_to):.6g} (k w_from w_to / 2)"
        )
    r = (1 / q_from).real
    roots = [(-1 + sg * math.sqrt(disc)) / length for sg in (1.0, -1.0)]
    x = min(roots, key=lambda x: abs(r - x))
    p_a = r - x
    q_b = 1 / complex(x, s) + length
    p_b = (1 / q_b).real - (1 / q_to).real
    return [
        RoundLens(1 / p_a if p_a else None),
        Drift(length),
        RoundLens(1 / p_b if p_b else None),
    ]


def chain(
    designs: Sequence[PhaseShifterDesign],
    relay: bool = False,
    relay_length: float | None = None,
) -> PhaseShifterDesign:
    """Cascade shifters; their phases add.

    Stage interfaces must already match unless ``relay`` asks for round-lens
    relays to be inserted.
    """
    designs = list(designs)
    if not designs:
        raise DesignError("nothing to chain")
    if len(designs) == 1:
        return designs[0]
    relays: list[tuple[Element, ...]] = []
    for prev, nxt in zip(designs, designs[1:]):
        if abs(prev.q_out - nxt.q_in) <= MATCH_RTOL * abs(nxt.q_in):
            relays.append(())
        elif relay:
            L = relay_length if relay_length is not None else nxt.d
            relays.append(tuple(relay_elements(prev.q_out, nxt.q_in, L)))
        else:
            raise DesignError(
                f"stage interface mismatch: q_out={prev.q_out} vs next q_in={nxt.q_in}; "
                "pass relay=True to insert a lens relay"
            )
    total = wrap_phase(sum(s.delta_phi for s in designs))
    shell = PhaseShifterDesign(
        0.0, total, None, None, None, designs[0].q_in, designs[-1].q_out,
        Mode.CHAINED, tuple(designs), tuple(relays),
    )
    out = propagate_line(ModeState.round(shell.q_in), shell.elements())
    return PhaseShifterDesign(
        shell.length, total, None, None, None, shell.q_in, out.q_h,
        Mode.CHAINED, tuple(designs), tuple(relays),
    )


def design_edge_chained(
    d: float, delta_phi: float, free: FreeParameter = Symmetric()
) -> PhaseShifterDesign:
    """Edge phases from two regular stages: pi = pi/2 + pi/2, 0 = pi/2 - pi/2."""
    phi = wrap_phase(delta_phi)
    if phi not in (0.0, math.pi):
        raise DesignError(f"chained edge designs handle delta_phi in {{0, pi}}, got {phi}")
    first = design(d, math.pi / 2, free)
    second = design(d, math.pi / 2 if phi else -math.pi / 2, free)
    return chain([first, second], relay=True)


def design_pi_chained(d: float, free: FreeParameter = Symmetric()) -> PhaseShifterDesign:
    return design_edge_chained(d, math.pi, free)


# --- verification ----------------------------------------------------------


@dataclass(frozen=True)
class VerifyReport:
    mode_match_residual: float
    achieved_phase: float
    phase_error: float
    curvature_residual: float
    w_in: float
    w_out: float
    phase_tol: float
    match_tol: float
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.mode_match_residual < self.match_tol
            and self.phase_error < self.phase_tol
            and self.curvature_residual < MATCH_RTOL
        )


def _is_geometric(dsg: PhaseShifterDesign) -> bool:
    if dsg.mode is Mode.CHAINED:
        return any(_is_geometric(s) for s in dsg.stages)
    return dsg.mode is not Mode.NORMAL


def _target_curvature(dsg: PhaseShifterDesign) -> float:
    return -dsg.d / 2 if dsg.mode is Mode.QPS_OFF else -dsg.d


def _curvature_residual(dsg: PhaseShifterDesign, ctx: ElectronContext) -> float:
    if dsg.mode is Mode.CHAINED:
        return max(_curvature_residual(s, ctx) for s in dsg.stages)
    R = beam_properties(dsg.q_in, ctx).curvature_radius
    target = _target_curvature(dsg)
    return abs(R - target) / abs(target)


def verify(dsg: PhaseShifterDesign, ctx: ElectronContext) -> VerifyReport:
    """Propagate the design analytically and report its residuals."""
    out = propagate_line(ModeState.round(dsg.q_in), dsg.elements())
    achieved = wrap_phase(out.relative_phase)
    notes = []
    if _is_geometric(dsg):
        phase_tol, match_tol = GEOMETRIC_PHASE_TOL, GEOMETRIC_MATCH_TOL
        notes.append("geometric-limit design; tolerances relaxed to fidelity 0.95")
    else:
        phase_tol, match_tol = MATCH_RTOL, MATCH_RTOL
    try:
        w_out = width(out.q_h, ctx)
    except BeamError:
        w_out = math.nan
    return VerifyReport(
        mode_match_residual=out.mismatch(),
        achieved_phase=achieved,
        phase_error=abs(wrap_phase(achieved - dsg.delta_phi)),
        curvature_residual=_curvature_residual(dsg, ctx),
        w_in=width(dsg.q_in, ctx),
        w_out=w_out,
        phase_tol=phase_tol,
        match_tol=match_tol,
        notes=notes,
    )
