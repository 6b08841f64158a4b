"""Binary field dumps (``.qpgf``) and color-wheel rendering.

Layout, little-endian::

    0   4s   magic b"QPGF"
    4   u32  version (1)
    8   u32  N
    12  f64  extent [m], full width
    20  f64  z [m]
    28  f64  kinetic energy [keV]
    36  f64  frame angle [rad] (0 for lab-frame samples)
    44  20x  reserved, zero
    64  N*N complex128 (re, im f64 pairs), row-major samples[iy, ix]
"""

from __future__ import annotations

import os
import struct

import numpy as np

from .beam import wavenumber_from_energy
from .wave import FieldGrid

MAGIC = b"QPGF"
VERSION = 1
HEADER = struct.Struct("<4sIIdddd20x")
assert HEADER.size == 64


class FieldFormatError(ValueError):
    pass


def write_field(path: str | os.PathLike, field: FieldGrid) -> None:
    header = HEADER.pack(
        MAGIC, VERSION, field.n, field.extent, field.z,
        field.ctx.kinetic_energy_kev, field.frame_angle,
    )
    data = np.ascontiguousarray(field.samples, dtype="<c16")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(data.tobytes())


def read_field(path: str | os.PathLike) -> FieldGrid:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < HEADER.size:
        raise FieldFormatError(
            f"truncated header: file ends at byte {len(raw)}, header needs {HEADER.size} bytes"
        )
    magic, version, n, extent, z, energy, frame = HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise FieldFormatError(f"bad magic {magic!r} at byte 0 (expected {MAGIC!r})")
    if version != VERSION:
        raise FieldFormatError(f"unsupported version {version} at byte 4")
    if n < 2 or n & (n - 1):
        raise FieldFormatError(f"N = {n} at byte 8 is not a power of two")
    expected = HEADER.size + n * n * 16
    if len(raw) < expected:
        pixel = (len(raw) - HEADER.size) // 16
        raise FieldFormatError(
            f"truncated data: file ends at byte {len(raw)} (inside pixel {pixel}), "
            f"expected {expected} bytes"
        )
    if len(raw) > expected:
        raise FieldFormatError(f"{len(raw) - expected} unexpected trailing bytes after byte {expected}")
    samples = np.frombuffer(raw, dtype="<c16", count=n * n, offset=HEADER.size)
    samples = samples.reshape(n, n).astype(complex)
    return FieldGrid(samples, extent, z, wavenumber_from_energy(energy), frame)


def field_to_rgb(field: FieldGrid) -> np.ndarray:
    """Brightness from amplitude, hue from phase; uint8 RGB."""
    from matplotlib.colors import hsv_to_rgb

    u = field.samples
    amp = np.abs(u)
    hsv = np.empty(u.shape + (3,))
    hsv[..., 0] = (np.angle(u) + np.pi) / (2 * np.pi) % 1.0
    hsv[..., 1] = 1.0
    hsv[..., 2] = amp / amp.max() if amp.max() > 0 else 0.0
    # rows are y; flip so +y points up in the image
    return np.round(hsv_to_rgb(hsv)[::-1] * 255).astype(np.uint8)


def render_field(path: str | os.PathLike, field: FieldGrid) -> None:
    from matplotlib.image import imsave

    imsave(path, field_to_rgb(field))
