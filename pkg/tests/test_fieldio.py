import struct

import numpy as np
import pytest

from qpgate.beam import q_from_waist, wavenumber_from_energy
from qpgate.fieldio import (
    HEADER,
    FieldFormatError,
    field_to_rgb,
    read_field,
    render_field,
    write_field,
)
from qpgate.gates import QubitState
from qpgate.wave import FieldGrid, state_field

CTX = wavenumber_from_energy(200.0)
Q0 = q_from_waist(500e-9, CTX)


def vortex(n=64):
    psi = QubitState.normalized(1.0, 1j)
    f = state_field(psi, Q0, CTX, n, 3.2e-6)
    return FieldGrid(f.samples, f.extent, 0.0123, CTX, 0.4)


def test_header_layout(tmp_path):
    f = vortex()
    path = tmp_path / "v.qpgf"
    write_field(path, f)
    raw = path.read_bytes()
    assert len(raw) == 64 + 64 * 64 * 16
    assert raw[:4] == b"QPGF"
    assert struct.unpack_from("<II", raw, 4) == (1, 64)
    extent, z, energy, frame = struct.unpack_from("<dddd", raw, 12)
    assert (extent, z, energy, frame) == (3.2e-6, 0.0123, 200.0, 0.4)
    assert raw[44:64] == bytes(20)
    re0, im0 = struct.unpack_from("<dd", raw, 64)
    assert complex(re0, im0) == f.samples[0, 0]


def test_round_trip_is_bit_exact(tmp_path):
    f = vortex()
    path = tmp_path / "v.qpgf"
    write_field(path, f)
    g = read_field(path)
    assert np.array_equal(g.samples, f.samples)
    assert (g.extent, g.z, g.frame_angle) == (f.extent, f.z, f.frame_angle)
    assert g.ctx == f.ctx


def _write(tmp_path, raw):
    path = tmp_path / "bad.qpgf"
    path.write_bytes(raw)
    return path


def test_bad_magic(tmp_path):
    raw = HEADER.pack(b"NOPE", 1, 64, 1e-6, 0.0, 200.0, 0.0)
    with pytest.raises(FieldFormatError, match="magic"):
        read_field(_write(tmp_path, raw))


def test_bad_version(tmp_path):
    raw = HEADER.pack(b"QPGF", 7, 64, 1e-6, 0.0, 200.0, 0.0)
    with pytest.raises(FieldFormatError, match="version"):
        read_field(_write(tmp_path, raw))


def test_bad_size(tmp_path):
    raw = HEADER.pack(b"QPGF", 1, 48, 1e-6, 0.0, 200.0, 0.0)
    with pytest.raises(FieldFormatError, match="power of two"):
        read_field(_write(tmp_path, raw))


@pytest.mark.parametrize("cut", [10, 64 + 16 * 5 + 3])
def test_truncation_reports_offset(tmp_path, cut):
    path = tmp_path / "v.qpgf"
    write_field(path, vortex())
    raw = path.read_bytes()[:cut]
    with pytest.raises(FieldFormatError, match=f"byte {cut}"):
        read_field(_write(tmp_path, raw))


def test_trailing_bytes(tmp_path):
    path = tmp_path / "v.qpgf"
    write_field(path, vortex())
    with pytest.raises(FieldFormatError, match="trailing"):
        read_field(_write(tmp_path, path.read_bytes() + b"x"))


def test_color_wheel():
    f = vortex()
    rgb = field_to_rgb(f)
    assert rgb.shape == (64, 64, 3) and rgb.dtype == np.uint8
    # dark center of the vortex, bright ring
    assert rgb[32, 32].max() < rgb.max()
    # hue runs once around the ring: opposite sides differ in color
    ring = [tuple(rgb[32 + dy, 32 + dx]) for dx, dy in ((8, 0), (-8, 0), (0, 8), (0, -8))]
    assert len(set(ring)) == 4


def test_render_writes_png(tmp_path):
    path = tmp_path / "v.png"
    render_field(path, vortex())
    assert path.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
