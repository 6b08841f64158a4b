"""Numerical wave-optics check of the analytic engine.

Fields are sampled on an N x N grid (``samples[iy, ix]``), propagated with the
paraxial Fresnel transfer function and hit by thin quadratic phase masks.
Conventions match :mod:`qpgate.beam`: ``exp(-ikz)`` carrier removed, modes
carry ``exp(-ik r^2 / 2q)``, a lens multiplies by ``exp(+ik r^2 / 2f)``, and
free space by ``exp(+i pi lambda dz (fx^2 + fy^2))`` in the Fourier domain.

Rotators are not resampled.  A field keeps a ``frame_angle``: the lab-frame
field is ``samples`` turned by that angle, and later elements and overlaps
are rotated to match.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable, Iterable

import numpy as np
from scipy.special import eval_hermite

from .beam import (
    Drift,
    ElectronContext,
    Element,
    ModeState,
    Quadrupole,
    Rotator,
    RoundLens,
    apply_element,
    beam_properties,
    check_q,
    q_from_width_curvature,
)
from .gates import QubitState, amplitudes_to_angles

EDGE_POWER_LIMIT = 1e-5
MIN_PIXELS_ACROSS = 16
MIN_EXTENT_WIDTHS = 6.0


class SamplingError(RuntimeError):
    """Grid too coarse or too small for the field or element."""


@dataclass(frozen=True)
class FieldGrid:
    samples: np.ndarray
    extent: float
    z: float
    ctx: ElectronContext
    frame_angle: float = 0.0

    def __post_init__(self):
        n = self.samples.shape[0]
        if self.samples.shape != (n, n) or n < 2 or n & (n - 1):
            raise SamplingError(f"samples must be N x N with N a power of two, got {self.samples.shape}")
        if not self.extent > 0:
            raise SamplingError("extent must be positive")

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dx(self) -> float:
        return self.extent / self.n

    def axis(self) -> np.ndarray:
        return (np.arange(self.n) - self.n // 2) * self.dx

    def coords(self) -> tuple[np.ndarray, np.ndarray]:
        x = self.axis()
        return np.meshgrid(x, x, indexing="xy")

    def power(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dx**2)

    def inner(self, other: "FieldGrid") -> complex:
        """``<self|other>`` on a shared grid."""
        return complex(np.vdot(self.samples, other.samples) * self.dx**2)

    def normalized(self) -> "FieldGrid":
        return replace(self, samples=self.samples / math.sqrt(self.power()))

    def __add__(self, other: "FieldGrid") -> "FieldGrid":
        return replace(self, samples=self.samples + other.samples)

    def scaled(self, c: complex) -> "FieldGrid":
        return replace(self, samples=self.samples * c)


def _rotated(X, Y, angle):
    c, s = math.cos(angle), math.sin(angle)
    return X * c + Y * s, -X * s + Y * c


def sample_hg(
    n: int,
    m: int,
    q_h: complex,
    q_v: complex,
    ctx: ElectronContext,
    grid: int,
    extent: float,
    rotation: float = 0.0,
    *,
    gouy: bool = True,
    z: float = 0.0,
    check: bool = True,
) -> FieldGrid:
    """Normalized astigmatic HG_nm mode with its axes turned by ``rotation``.

    ``gouy=False`` drops the ``exp(i(n+1/2)gamma_h + i(m+1/2)gamma_v)`` factor,
    giving the basis in which :class:`qpgate.beam.ModeState` amplitudes live.
    """
    q_h, q_v = check_q(q_h), check_q(q_v)
    ph, pv = beam_properties(q_h, ctx), beam_properties(q_v, ctx)
    dx = extent / grid
    if check:
        w_min, w_max = min(ph.width, pv.width), max(ph.width, pv.width)
        if 2 * w_min < MIN_PIXELS_ACROSS * dx:
            raise SamplingError(
                f"beam width {w_min:.3g} m spans fewer than {MIN_PIXELS_ACROSS} pixels "
                f"(dx = {dx:.3g} m); increase the grid size"
            )
        if extent < MIN_EXTENT_WIDTHS * w_max:
            raise SamplingError(
                f"extent {extent:.3g} m is below {MIN_EXTENT_WIDTHS:g} beam widths ({w_max:.3g} m)"
            )
    x = (np.arange(grid) - grid // 2) * dx
    X, Y = np.meshgrid(x, x, indexing="xy")
    xr, yr = _rotated(X, Y, rotation)
    k = ctx.k
    u = (
        eval_hermite(n, math.sqrt(2) * xr / ph.width)
        * eval_hermite(m, math.sqrt(2) * yr / pv.width)
        * np.exp(-0.5j * k * (xr**2 / q_h + yr**2 / q_v))
    )
    if gouy:
        u = u * np.exp(1j * ((n + 0.5) * ph.gouy + (m + 0.5) * pv.gouy))
    u /= math.sqrt(np.sum(np.abs(u) ** 2) * dx**2)
    return FieldGrid(u, extent, z, ctx)


def state_field(
    psi: QubitState, q: complex, ctx: ElectronContext, grid: int, extent: float, z: float = 0.0
) -> FieldGrid:
    """``a HG_10 + b HG_01`` of a round beam, on the Gouy-free basis."""
    f10 = sample_hg(1, 0, q, q, ctx, grid, extent, gouy=False, z=z)
    f01 = sample_hg(0, 1, q, q, ctx, grid, extent, gouy=False, z=z)
    return f10.scaled(psi.a) + f01.scaled(psi.b)


# --- validators ------------------------------------------------------------


def _ring_fraction(power: np.ndarray) -> float:
    """Share of power in the outer 2% frame of a (centered) array."""
    n = power.shape[0]
    m = max(2, n // 50)
    total = power.sum()
    inner = power[m:-m, m:-m].sum()
    return float((total - inner) / total) if total > 0 else 0.0


def check_edges(field: FieldGrid, limit: float = EDGE_POWER_LIMIT) -> None:
    frac = _ring_fraction(np.abs(field.samples) ** 2)
    if frac > limit:
        raise SamplingError(
            f"{frac:.2e} of the power sits at the grid edge (limit {limit:g}); "
            "enlarge the extent"
        )


def _check_spectrum(spectrum: np.ndarray, limit: float = EDGE_POWER_LIMIT) -> None:
    frac = _ring_fraction(np.fft.fftshift(np.abs(spectrum) ** 2))
    if frac > limit:
        raise SamplingError(
            f"{frac:.2e} of the spectral power is near the Nyquist frequency (limit {limit:g}); "
            "increase the grid size"
        )


# --- propagation and masks -------------------------------------------------


def fresnel_propagate(field: FieldGrid, dz: float, validate: bool = True) -> FieldGrid:
    """Paraxial transfer-function propagation by ``dz`` (carrier phase excluded)."""
    if dz == 0:
        return field
    spectrum = np.fft.fft2(field.samples)
    if validate:
        _check_spectrum(spectrum)
    f = np.fft.fftfreq(field.n, field.dx)
    fx2 = f[np.newaxis, :] ** 2
    fy2 = f[:, np.newaxis] ** 2
    transfer = np.exp(1j * math.pi * field.ctx.wavelength * dz * (fx2 + fy2))
    out = replace(field, samples=np.fft.ifft2(spectrum * transfer), z=field.z + dz)
    if validate:
        check_edges(out)
    return out


def fresnel_propagate_scaled(field: FieldGrid, dz: float, curvature: float, validate: bool = True) -> FieldGrid:
    """Propagate by ``dz`` on a grid stretched by ``M = (R + dz) / R``.

    The spherical phase of radius ``curvature`` is taken out, the remainder
    propagates by ``dz / M`` on the pixel grid, and the phase of the moved
    sphere is put back.  Exact for any ``R``; a good choice keeps the beam
    filling the grid through strong convergence or divergence.
    """
    R = curvature
    M = (R + dz) / R
    if not M > 0:
        raise SamplingError(f"scaled propagation through a focus (M = {M:.3g}) is not supported")
    k = field.ctx.k
    X, Y = field.coords()
    g = replace(field, samples=field.samples * np.exp(0.5j * k * (X**2 + Y**2) / R))
    g = fresnel_propagate(g, dz / M, validate=validate)
    out = FieldGrid(g.samples / M, field.extent * M, field.z + dz, field.ctx, field.frame_angle)
    X2, Y2 = out.coords()
    return replace(out, samples=out.samples * np.exp(-0.5j * k * (X2**2 + Y2**2) / (R + dz)))


def apply_phase_mask(
    field: FieldGrid,
    f_x: float | None,
    f_y: float | None,
    angle: float = 0.0,
    validate: bool = True,
) -> FieldGrid:
    """Thin lens with focal lengths ``f_x``/``f_y`` along axes turned by ``angle`` (lab frame).

    ``None`` or infinite focal lengths contribute nothing.
    """
    powers = [0.0 if (f is None or math.isinf(f)) else 1 / f for f in (f_x, f_y)]
    if powers == [0.0, 0.0]:
        return field
    k = field.ctx.k
    if validate:
        half = field.extent / 2 * math.sqrt(2)
        step = k * half * field.dx * max(abs(p) for p in powers)
        if step >= math.pi:
            raise SamplingError(
                f"lens phase changes by {step:.3g} rad per pixel at the grid edge; "
                "increase the grid size or reduce the extent"
            )
    X, Y = field.coords()
    xr, yr = _rotated(X, Y, angle - field.frame_angle)
    phase = 0.5 * k * (powers[0] * xr**2 + powers[1] * yr**2)
    return replace(field, samples=field.samples * np.exp(1j * phase))


def rotate_frame(field: FieldGrid, angle: float) -> FieldGrid:
    return replace(field, frame_angle=field.frame_angle + angle)


def apply_element_wave(field: FieldGrid, el: Element, validate: bool = True) -> FieldGrid:
    if isinstance(el, Drift):
        return fresnel_propagate(field, el.length, validate)
    if isinstance(el, RoundLens):
        return apply_phase_mask(field, el.f, el.f, 0.0, validate)
    if isinstance(el, Quadrupole):
        if el.f is None:
            return field
        return apply_phase_mask(field, el.f, -el.f, el.axis_angle, validate)
    if isinstance(el, Rotator):
        return rotate_frame(field, el.angle)
    raise TypeError(f"unknown element {el!r}")


def _mean_width(state: ModeState, ctx: ElectronContext) -> float:
    return 0.5 * (
        beam_properties(state.q_h, ctx).width + beam_properties(state.q_v, ctx).width
    )


def run_line(
    field: FieldGrid,
    line: Iterable[Element],
    *,
    state: ModeState | None = None,
    rescale: bool = False,
    validate: bool = True,
    on_element: Callable[[int, Element, FieldGrid], None] | None = None,
) -> FieldGrid:
    """Send a field through an optics line.

    With ``rescale`` (needs the analytic ``state`` at the input) every drift
    uses scaled propagation with the grid following the analytic beam width.
    """
    if rescale and state is None:
        raise ValueError("rescaled propagation needs the analytic input state")
    for i, el in enumerate(line):
        if rescale and isinstance(el, Drift) and el.length > 0:
            nxt = apply_element(state, el)
            M = _mean_width(nxt, field.ctx) / _mean_width(state, field.ctx)
            M = min(max(M, 0.125), 8.0)
            if abs(M - 1) > 0.05:
                field = fresnel_propagate_scaled(field, el.length, el.length / (M - 1), validate)
            else:
                field = fresnel_propagate(field, el.length, validate)
            state = nxt
        else:
            field = apply_element_wave(field, el, validate)
            if state is not None:
                state = apply_element(state, el)
        if on_element is not None:
            on_element(i, el, field)
    return field


# --- analysis --------------------------------------------------------------


@dataclass(frozen=True)
class OverlapResult:
    a: complex
    b: complex
    residual_power: float
    theta: float
    phi: float
    chi: float
    fidelity: float | None = None

    @property
    def reference_ok(self) -> bool:
        return self.residual_power <= 0.5


def modal_overlap(
    field: FieldGrid,
    q_ref: complex,
    target: QubitState | None = None,
    rotation: float = 0.0,
) -> OverlapResult:
    """Project onto the Gouy-free HG_10 / HG_01 modes of a round reference beam."""
    args = (q_ref, q_ref, field.ctx, field.n, field.extent, rotation - field.frame_angle)
    ref10 = sample_hg(1, 0, *args, gouy=False, check=False)
    ref01 = sample_hg(0, 1, *args, gouy=False, check=False)
    a = ref10.inner(field)
    b = ref01.inner(field)
    power = field.power()
    residual = max(0.0, 1 - (abs(a) ** 2 + abs(b) ** 2) / power)
    theta, phi, chi = amplitudes_to_angles(a, b)
    fid = None
    if target is not None:
        fid = abs(np.conj(target.a) * a + np.conj(target.b) * b) ** 2 / power
    return OverlapResult(a, b, residual, theta, phi, chi, fid)


def _gradient(field: FieldGrid) -> tuple[np.ndarray, np.ndarray]:
    """Spectral ``(d/dx, d/dy)`` of the samples (exact for band-limited fields)."""
    spectrum = np.fft.fft2(field.samples)
    f = 2j * math.pi * np.fft.fftfreq(field.n, field.dx)
    du_dx = np.fft.ifft2(spectrum * f[np.newaxis, :])
    du_dy = np.fft.ifft2(spectrum * f[:, np.newaxis])
    return du_dx, du_dy


def oam_expectation(field: FieldGrid) -> float:
    """``<L_z>`` in units of hbar."""
    u = field.samples
    X, Y = field.coords()
    du_dx, du_dy = _gradient(field)
    lz = np.sum(np.conj(u) * (X * du_dy - Y * du_dx))
    return float(lz.imag / np.sum(np.abs(u) ** 2))


def second_moment_widths(field: FieldGrid) -> tuple[float, float]:
    """``2 sqrt(<x^2>)``, ``2 sqrt(<y^2>)`` (the 1/e field radius for a Gaussian)."""
    p = np.abs(field.samples) ** 2
    X, Y = field.coords()
    tot = p.sum()
    return 2 * math.sqrt((p * X**2).sum() / tot), 2 * math.sqrt((p * Y**2).sum() / tot)


def curvature_radii(field: FieldGrid) -> tuple[float, float]:
    """Wavefront radii from ``Im <x d/dx> = -(k/R) <x^2>`` per axis."""
    u = field.samples
    p = np.abs(u) ** 2
    X, Y = field.coords()
    du_dx, du_dy = _gradient(field)
    out = []
    for c, d in ((X, du_dx), (Y, du_dy)):
        im = np.sum(np.conj(u) * c * d).imag
        out.append(math.inf if im == 0 else -field.ctx.k * np.sum(p * c**2) / im)
    return out[0], out[1]


def estimate_reference_q(field: FieldGrid) -> complex:
    """Round first-order beam parameter from the field moments.

    Any first-order state has ``<x^2> + <y^2> = w^2`` and carries its
    curvature in ``Im <x d/dx + y d/dy>``.
    """
    u = field.samples
    p = np.abs(u) ** 2
    X, Y = field.coords()
    du_dx, du_dy = _gradient(field)
    r2 = np.sum(p * (X**2 + Y**2))
    w = math.sqrt(r2 / p.sum())
    im = np.sum(np.conj(u) * (X * du_dx + Y * du_dy)).imag
    R = math.inf if im == 0 else -field.ctx.k * r2 / im
    return q_from_width_curvature(w, R, field.ctx)
