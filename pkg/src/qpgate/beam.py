"""Complex beam parameter algebra and analytic propagation of first-order modes.

A beam component is described by ``q = z - z0 + i*zR`` (plain Python complex,
SI units).  Fields follow the ``exp(-ikz)`` paraxial convention, so a mode
carries ``exp(-i k r^2 / 2q)`` and a thin lens multiplies by
``exp(+i k r^2 / 2f)``.

The two-state system lives on the first-order Hermite-Gaussian modes
``|0> = HG_10`` (horizontal) and ``|1> = HG_01`` (vertical) of a beam whose
horizontal and vertical components may have different ``q``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Iterator, Sequence, Union

from scipy import constants

ELECTRON_REST_ENERGY_KEV = (
    constants.physical_constants["electron mass energy equivalent in MeV"][0] * 1e3
)
STIGMATIC_RTOL = 1e-9
AXIS_TOL = 1e-9


class BeamError(ValueError):
    """Invalid beam parameter or element."""


class AstigmatismError(BeamError):
    """Operation needs a round beam or aligned principal axes."""


@dataclass(frozen=True)
class ElectronContext:
    kinetic_energy_kev: float
    wavelength: float

    @property
    def k(self) -> float:
        return 2 * math.pi / self.wavelength


def wavenumber_from_energy(energy_kev: float) -> ElectronContext:
    """Relativistic de Broglie wavelength for an electron of kinetic energy E (keV)."""
    if not energy_kev > 0:
        raise BeamError(f"kinetic energy must be positive, got {energy_kev}")
    e_j = energy_kev * 1e3 * constants.e
    rest_j = ELECTRON_REST_ENERGY_KEV * 1e3 * constants.e
    pc = math.sqrt(e_j**2 + 2 * e_j * rest_j)
    return ElectronContext(energy_kev, constants.h * constants.c / pc)


@dataclass(frozen=True)
class BeamProperties:
    width: float
    curvature_radius: float
    gouy: float


def check_q(q: complex) -> complex:
    q = complex(q)
    if not q.imag > 0:
        raise BeamError(f"Im[q] must be positive for a physical beam, got q={q}")
    return q


def gouy(q: complex) -> float:
    """Gouy phase ``arctan(Re q / Im q)``, in (-pi/2, pi/2)."""
    return math.atan(q.real / q.imag) + 0.0


def beam_properties(q: complex, ctx: ElectronContext) -> BeamProperties:
    q = check_q(q)
    mag2 = q.real**2 + q.imag**2
    w = math.sqrt(2 * mag2 / (ctx.k * q.imag))
    R = math.inf if q.real == 0 else mag2 / q.real
    return BeamProperties(w, R, gouy(q))


def width(q: complex, ctx: ElectronContext) -> float:
    return beam_properties(q, ctx).width


def q_from_waist(w0: float, ctx: ElectronContext, z: float = 0.0) -> complex:
    """q at distance ``z`` past a waist of 1/e field radius ``w0``."""
    if not w0 > 0:
        raise BeamError("waist must be positive")
    return complex(z, ctx.k * w0**2 / 2)


def q_from_width_curvature(w: float, R: float, ctx: ElectronContext) -> complex:
    """q from local width and signed curvature radius (``inf`` for a flat front)."""
    if not w > 0:
        raise BeamError("width must be positive")
    inv_q = complex(0.0 if math.isinf(R) else 1 / R, -2 / (ctx.k * w**2))
    return 1 / inv_q


def propagate(q: complex, dz: float) -> complex:
    return complex(q) + dz


def apply_lens(q: complex, f: float | None) -> complex:
    """Thin lens of focal length ``f``; ``None`` means the lens is off."""
    if f is None:
        return complex(q)
    if f == 0:
        raise BeamError("focal length must be non-zero")
    return 1 / (1 / complex(q) - 1 / f)


# --- optics line -----------------------------------------------------------


@dataclass(frozen=True)
class Drift:
    length: float

    def __post_init__(self):
        if self.length < 0:
            raise BeamError(f"drift length must be >= 0, got {self.length}")


@dataclass(frozen=True)
class RoundLens:
    f: float | None

    def __post_init__(self):
        if self.f == 0:
            raise BeamError("focal length must be non-zero (use None for off)")


@dataclass(frozen=True)
class Quadrupole:
    """Focal length ``+f`` along the axis at ``axis_angle``, ``-f`` across it."""

    f: float | None
    axis_angle: float = 0.0

    def __post_init__(self):
        if self.f == 0:
            raise BeamError("focal length must be non-zero (use None for off)")


@dataclass(frozen=True)
class Rotator:
    """Ideal rotation of the transverse frame by ``angle`` (e.g. Larmor rotation)."""

    angle: float


Element = Union[Drift, RoundLens, Quadrupole, Rotator]
OpticsLine = Sequence[Element]


def line_length(line: OpticsLine) -> float:
    return sum(el.length for el in line if isinstance(el, Drift))


def rotate_line(line: OpticsLine, angle: float) -> list[Element]:
    """Same line with every quadrupole axis turned by ``angle``."""
    return [
        replace(el, axis_angle=el.axis_angle + angle) if isinstance(el, Quadrupole) else el
        for el in line
    ]


# --- mode state ------------------------------------------------------------


@dataclass(frozen=True)
class ModeState:
    """Beam parameters and qubit amplitudes at one plane.

    ``a``/``b`` are coefficients on Gouy-free basis modes (the sampled mode
    with its ``exp(i(n+1/2)gamma)`` factor removed), so drifts write the mode
    weighted Gouy phase into the amplitudes while lenses leave them alone.
    """

    q_h: complex
    q_v: complex
    a: complex = 1.0
    b: complex = 0.0
    frame_angle: float = 0.0
    gouy_h: float = 0.0
    gouy_v: float = 0.0
    z: float = 0.0

    @classmethod
    def round(cls, q: complex, a: complex = 1.0, b: complex = 0.0, **kw) -> "ModeState":
        q = check_q(q)
        norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        return cls(q, q, complex(a) / norm, complex(b) / norm, **kw)

    @property
    def relative_phase(self) -> float:
        """Accumulated phase of ``|1>`` relative to ``|0>``."""
        return self.gouy_v - self.gouy_h

    @property
    def common_phase(self) -> float:
        return self.gouy_h + self.gouy_v

    @property
    def stigmatic(self) -> bool:
        return is_stigmatic(self.q_h, self.q_v)

    def mismatch(self) -> float:
        return abs(self.q_h - self.q_v) / abs(self.q_h)


def is_stigmatic(q_h: complex, q_v: complex, rtol: float = STIGMATIC_RTOL) -> bool:
    return abs(q_h - q_v) <= rtol * abs(q_h)


def _wrap_half_turn(angle: float) -> float:
    """Map to (-pi/2, pi/2]."""
    x = math.fmod(angle, math.pi)
    if x <= -math.pi / 2:
        x += math.pi
    elif x > math.pi / 2:
        x -= math.pi
    return x


def reframe(state: ModeState, frame_angle: float) -> ModeState:
    """Express a round beam's amplitudes on HG modes aligned with ``frame_angle``."""
    if not state.stigmatic:
        raise AstigmatismError("cannot change the frame of an astigmatic beam")
    beta = frame_angle - state.frame_angle
    c, s = math.cos(beta), math.sin(beta)
    return replace(
        state,
        a=c * state.a + s * state.b,
        b=-s * state.a + c * state.b,
        frame_angle=frame_angle,
    )


def apply_quadrupole(state: ModeState, f: float | None, axis_angle: float = 0.0) -> ModeState:
    if f is None:
        return state
    check_q(state.q_h), check_q(state.q_v)
    delta = _wrap_half_turn(axis_angle - state.frame_angle)
    if abs(delta) <= AXIS_TOL:
        f_h = f
    elif abs(abs(delta) - math.pi / 2) <= AXIS_TOL:
        f_h = -f
    elif state.stigmatic:
        state = reframe(state, axis_angle)
        f_h = f
    else:
        raise AstigmatismError(
            f"quadrupole axis {axis_angle:.6g} rad is not aligned with the astigmatic "
            f"beam frame {state.frame_angle:.6g} rad"
        )
    return replace(state, q_h=apply_lens(state.q_h, f_h), q_v=apply_lens(state.q_v, -f_h))


def apply_round_lens(state: ModeState, f: float | None) -> ModeState:
    return replace(state, q_h=apply_lens(state.q_h, f), q_v=apply_lens(state.q_v, f))


def apply_rotator(state: ModeState, alpha: float) -> ModeState:
    """Rotate the beam by ``alpha``: ``(a, b) -> [[cos, -sin], [sin, cos]] (a, b)``."""
    if not state.stigmatic:
        raise AstigmatismError("rotators need a round beam (q_h == q_v)")
    c, s = math.cos(alpha), math.sin(alpha)
    return replace(state, a=c * state.a - s * state.b, b=s * state.a + c * state.b)


def apply_drift(state: ModeState, length: float) -> ModeState:
    q_h, q_v = propagate(state.q_h, length), propagate(state.q_v, length)
    dg_h = gouy(q_h) - gouy(state.q_h)
    dg_v = gouy(q_v) - gouy(state.q_v)
    # HG_10 weights (3/2, 1/2) on (gamma_h, gamma_v); HG_01 the reverse
    pa = complex(math.cos(1.5 * dg_h + 0.5 * dg_v), math.sin(1.5 * dg_h + 0.5 * dg_v))
    pb = complex(math.cos(0.5 * dg_h + 1.5 * dg_v), math.sin(0.5 * dg_h + 1.5 * dg_v))
    return replace(
        state,
        q_h=q_h,
        q_v=q_v,
        a=state.a * pa,
        b=state.b * pb,
        gouy_h=state.gouy_h + dg_h,
        gouy_v=state.gouy_v + dg_v,
        z=state.z + length,
    )


def apply_element(state: ModeState, el: Element) -> ModeState:
    if isinstance(el, Drift):
        return apply_drift(state, el.length)
    if isinstance(el, RoundLens):
        return apply_round_lens(state, el.f)
    if isinstance(el, Quadrupole):
        return apply_quadrupole(state, el.f, el.axis_angle)
    if isinstance(el, Rotator):
        return apply_rotator(state, el.angle)
    raise TypeError(f"unknown element {el!r}")


def propagate_line(state: ModeState, line: Iterable[Element]) -> ModeState:
    for el in line:
        state = apply_element(state, el)
    return state


def trace_line(
    state: ModeState, line: Iterable[Element], samples_per_drift: int = 50
) -> Iterator[ModeState]:
    """Yield the state at every element boundary and at points inside drifts."""
    yield state
    for el in line:
        if isinstance(el, Drift) and el.length > 0 and samples_per_drift > 1:
            step = el.length / samples_per_drift
            start = state
            for i in range(1, samples_per_drift + 1):
                state = apply_drift(start, step * i)
                yield state
        else:
            state = apply_element(state, el)
            yield state


def max_width(state: ModeState, line: Iterable[Element], ctx: ElectronContext) -> float:
    """Largest h or v width along the line; widths are convex in a drift."""
    widest = max(width(state.q_h, ctx), width(state.q_v, ctx))
    for el in line:
        state = apply_element(state, el)
        widest = max(widest, width(state.q_h, ctx), width(state.q_v, ctx))
    return widest
