"""Command-line front end: ``qpgate design | decompose | simulate | analyze``.

Exit codes: 0 success, 2 input or contract error, 3 numerical-validity error
(including a requested verification that fails).
"""

from __future__ import annotations

import argparse
import json
import math
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from .beam import BeamError, ElectronContext, wavenumber_from_energy
from .documents import (
    DesignDocument,
    DocumentError,
    ScheduleDocument,
    dumps,
    verification_doc,
)
from .fieldio import FieldFormatError, read_field, render_field, write_field
from .gates import (
    UnitaryError,
    check_unitary,
    compile_unitary,
    gate_to_target,
    state_from_angles,
)
from .pipeline import (
    SimulationConfig,
    build_line,
    schedule_for_design,
    simulate,
    write_zscan,
)
from .shifter import (
    F1,
    DesignError,
    InputRayleigh,
    InputWidth,
    OutputWidth,
    Symmetric,
    design,
    design_edge,
    design_edge_chained,
    verify,
    wrap_phase,
)
from .wave import SamplingError, estimate_reference_q, modal_overlap, oam_expectation

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3
CLI_UNITARY_TOL = 1e-8

LENGTH_UNITS = {"km": 1e3, "m": 1.0, "mm": 1e-3, "um": 1e-6, "µm": 1e-6, "nm": 1e-9}
ANGLE_UNITS = {"rad": 1.0, "deg": math.pi / 180}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zµ]*)\s*$")


class InputError(ValueError):
    pass


def _quantity(text: str, units: dict, kind: str, bare_unit: str | None = None) -> float:
    m = _QUANTITY.match(text)
    if not m:
        raise argparse.ArgumentTypeError(f"cannot parse {kind} {text!r}")
    value, unit = float(m.group(1)), m.group(2)
    if not unit:
        if bare_unit is None:
            raise argparse.ArgumentTypeError(
                f"{kind} {text!r} needs a unit ({', '.join(units)})"
            )
        unit = bare_unit
    if unit not in units:
        raise argparse.ArgumentTypeError(f"unknown {kind} unit {unit!r} in {text!r}")
    return value * units[unit]


def parse_length(text: str) -> float:
    return _quantity(text, LENGTH_UNITS, "length")


def parse_angle(text: str) -> float:
    return _quantity(text, ANGLE_UNITS, "angle")


def parse_energy(text: str) -> float:
    """Kinetic energy in keV; a bare number is read as keV."""
    return _quantity(text.lower(), {"kev": 1.0}, "energy", bare_unit="kev")


def _energy_arg(text: str) -> float:
    value = parse_energy(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"energy must be positive, got {text!r}")
    return value


def parse_angle_pair(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected theta,phi with units, got {text!r}")
    return parse_angle(parts[0]), parse_angle(parts[1])


def _complex_entry(text: str) -> complex:
    s = text.strip().replace(" ", "").replace("i", "j")
    s = re.sub(r"(?<![0-9.])j", "1j", s)
    try:
        return complex(s)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse complex entry {text!r}") from None


def parse_unitary(text: str) -> np.ndarray:
    """``"a,b;c,d"`` row-major; entries like ``0.5+0.5i`` or ``-1j``."""
    rows = [r.split(",") for r in text.split(";")]
    if len(rows) != 2 or any(len(r) != 2 for r in rows):
        raise argparse.ArgumentTypeError(f"expected four entries 'a,b;c,d', got {text!r}")
    return np.array([[_complex_entry(v) for v in r] for r in rows], dtype=complex)


def parse_reference(text: str, ctx: ElectronContext) -> complex:
    """``zr=<len>[,z=<len>]`` or ``waist=<len>[,z=<len>]``; q = z + i zR."""
    fields = {}
    for part in text.split(","):
        key, sep, val = part.partition("=")
        if not sep:
            raise InputError(f"reference item {part!r} must look like key=value")
        fields[key.strip().lower()] = parse_length(val)
    z = fields.pop("z", 0.0)
    if set(fields) == {"zr"}:
        zr = fields["zr"]
    elif set(fields) == {"waist"}:
        zr = ctx.k * fields["waist"] ** 2 / 2
    else:
        raise InputError("reference needs exactly one of zr=... or waist=... (plus optional z=...)")
    if not zr > 0:
        raise InputError("reference Rayleigh range must be positive")
    return complex(z, zr)


# --- shared option groups ----------------------------------------------------


def _add_free_group(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group()
    g.add_argument("--symmetric", action="store_true", help="f1 = f2 (default)")
    g.add_argument("--f1", type=parse_length, help="focal length of QP1")
    g.add_argument("--rayleigh", type=parse_length, help="input Rayleigh range Im q_in")
    g.add_argument("--w-in", type=parse_length, help="beam width at QP1")
    g.add_argument("--w-out", type=parse_length, help="beam width at QP2")


def _free_from(args, ctx: ElectronContext):
    if args.f1 is not None:
        return F1(args.f1), True
    if args.rayleigh is not None:
        return InputRayleigh(args.rayleigh), True
    if args.w_in is not None:
        return InputWidth(args.w_in, ctx), True
    if args.w_out is not None:
        return OutputWidth(args.w_out, ctx), True
    return Symmetric(), bool(args.symmetric)


def _emit(text: str, output: str | None) -> None:
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _is_edge(phi: float) -> bool:
    return phi in (0.0, math.pi)


# --- commands ----------------------------------------------------------------


def cmd_design(args) -> int:
    ctx = wavenumber_from_energy(args.energy)
    free, explicit = _free_from(args, ctx)
    phi = wrap_phase(args.phase)
    if _is_edge(phi):
        if args.edge == "geometric":
            if explicit:
                raise InputError(
                    f"delta_phi = {phi:g} rad has no mode-matched design with a free parameter; "
                    "use the geometric-limit design (drop the free-parameter flag, set --w-geom) "
                    "or --edge chain for two chained regular stages"
                )
            dsg = design_edge(args.d, phi, args.w_geom, ctx)
        else:
            dsg = design_edge_chained(args.d, phi, free)
    else:
        dsg = design(args.d, phi, free)
    ver = None
    passed = True
    if args.verify:
        rep = verify(dsg, ctx)
        ver = verification_doc(rep)
        passed = rep.passed
    doc = DesignDocument(dsg, args.energy, ver).to_dict(ctx)
    _emit(dumps(doc), args.output)
    if not passed:
        print("verification failed", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def cmd_decompose(args) -> int:
    ctx = wavenumber_from_energy(args.energy)
    if args.unitary is not None:
        U = args.unitary
        try:
            check_unitary(U, tol=CLI_UNITARY_TOL)
        except UnitaryError as exc:
            raise InputError(str(exc)) from None
        # project on the nearest unitary so downstream checks see exact input
        u_, _, vh = np.linalg.svd(U)
        U = u_ @ vh
    else:
        theta, phi = args.target
        U = gate_to_target(theta, phi)
    free, _ = _free_from(args, ctx)
    sched = compile_unitary(U, args.d, free, edge=args.edge, ctx=ctx, w_geom=args.w_geom)
    doc = ScheduleDocument(sched, args.energy, U).to_dict(ctx)
    _emit(dumps(doc), args.output)
    return EXIT_OK


def _load_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: not valid JSON ({exc})") from None


def cmd_simulate(args) -> int:
    if args.schedule:
        sdoc = ScheduleDocument.from_dict(_load_json(args.schedule))
        schedule, energy = sdoc.schedule, sdoc.energy_kev
    else:
        ddoc = DesignDocument.from_dict(_load_json(args.design))
        schedule, energy = schedule_for_design(ddoc.design), ddoc.energy_kev
    if args.energy is not None:
        energy = args.energy
    theta, phi = args.input
    psi = state_from_angles(theta, phi % (2 * math.pi))
    config = SimulationConfig(
        energy_kev=energy,
        grid=args.grid,
        extent_factor=args.extent_factor,
        rescale=args.rescale,
        off_surrogate=args.off_surrogate,
        default_waist=args.waist,
    )
    hook = None
    if args.dump_fields:
        out_dir = Path(args.dump_fields)
        out_dir.mkdir(parents=True, exist_ok=True)

        def hook(i, el, field):
            name = "input" if el is None else type(el).__name__.lower()
            write_field(out_dir / f"field_{i + 1:03d}_{name}.qpgf", field)

    if args.zscan:
        write_zscan(args.zscan, build_line(schedule, config), config.ctx)
    report = simulate(schedule, psi, config, engine=args.engine, on_element=hook)
    _emit(dumps(report), args.output)
    return EXIT_OK


def cmd_analyze(args) -> int:
    field = read_field(args.field)
    if args.reference:
        q_ref, source = parse_reference(args.reference, field.ctx), "given"
    else:
        q_ref, source = estimate_reference_q(field), "moments"
    target = None
    if args.target is not None:
        theta, phi = args.target
        target = state_from_angles(theta, phi % (2 * math.pi))
    ov = modal_overlap(field, q_ref, target=target)
    doc = {
        "field": {
            "n": field.n,
            "extent_m": field.extent,
            "z_m": field.z,
            "energy_keV": field.ctx.kinetic_energy_kev,
            "frame_angle_rad": field.frame_angle,
        },
        "reference": {"re_m": q_ref.real, "im_m": q_ref.imag, "source": source},
        "a": {"re": ov.a.real, "im": ov.a.imag},
        "b": {"re": ov.b.real, "im": ov.b.imag},
        "theta_rad": ov.theta,
        "phi_rad": ov.phi,
        "chi_rad": ov.chi,
        "residual_power": ov.residual_power,
        "fidelity": ov.fidelity,
        "lz_hbar": oam_expectation(field),
    }
    if not ov.reference_ok:
        doc["note"] = "more than half the power lies outside the reference modes; check --reference"
    if args.render:
        render_field(args.render, field)
    _emit(dumps(doc), args.output)
    return EXIT_OK


# --- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="qpgate",
        description="Quadrupole phase shifters and two-state gates for HG electron beams.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("design", help="design a two-quadrupole phase shifter")
    d.add_argument("--d", type=parse_length, required=True, help="quadrupole spacing, e.g. 120mm")
    d.add_argument("--phase", type=parse_angle, required=True, help="relative phase, e.g. 90deg")
    _add_free_group(d)
    d.add_argument("--energy", type=_energy_arg, default=200.0, help="kinetic energy (keV)")
    d.add_argument("--verify", action="store_true", help="propagate and report residuals")
    d.add_argument("--w-geom", type=parse_length, default=1e-6,
                   help="beam width at QP1 for geometric-limit designs (default 1000nm)")
    d.add_argument("--edge", choices=("geometric", "chain"), default="geometric",
                   help="construction for phases 0 and pi")
    d.add_argument("-o", "--output")
    d.set_defaults(func=cmd_design)

    c = sub.add_parser("decompose", help="compile a unitary into rotators and shifters")
    g = c.add_mutually_exclusive_group(required=True)
    g.add_argument("--unitary", type=parse_unitary, help="'a,b;c,d' row-major, complex entries")
    g.add_argument("--target", type=parse_angle_pair, help="theta,phi reached from |0>")
    c.add_argument("--d", type=parse_length, default=0.12, help="quadrupole spacing (default 120mm)")
    _add_free_group(c)
    c.add_argument("--energy", type=_energy_arg, default=200.0)
    c.add_argument("--edge", choices=("chain", "geometric"), default="chain",
                   help="construction for a phase of exactly pi")
    c.add_argument("--w-geom", type=parse_length, default=1e-6)
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_decompose)

    s = sub.add_parser("simulate", help="run a schedule or design on an input state")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--schedule")
    g.add_argument("--design")
    s.add_argument("--input", type=parse_angle_pair, default=(math.pi / 2, 0.0),
                   help="input Bloch angles theta,phi (default 90deg,0deg)")
    s.add_argument("--engine", choices=("analytic", "wave", "both"), default="both")
    s.add_argument("--grid", type=int, default=1024)
    s.add_argument("--extent-factor", type=float, default=6.0)
    s.add_argument("--rescale", action="store_true", help="scaled-grid propagation through foci")
    s.add_argument("--off-surrogate", type=parse_length,
                   help="finite focal length standing in for switched-off quadrupoles")
    s.add_argument("--waist", type=parse_length, default=500e-9,
                   help="input waist for schedules without shifters")
    s.add_argument("--energy", type=_energy_arg, help="override the document energy")
    s.add_argument("--dump-fields", metavar="DIR")
    s.add_argument("--zscan", metavar="CSV")
    s.add_argument("-o", "--output")
    s.set_defaults(func=cmd_simulate)

    a = sub.add_parser("analyze", help="modal overlap and OAM of a field dump")
    a.add_argument("--field", required=True)
    a.add_argument("--reference", help="zr=<len>[,z=<len>] or waist=<len>[,z=<len>]")
    a.add_argument("--target", type=parse_angle_pair)
    a.add_argument("--render", help="write a color-wheel image")
    a.add_argument("-o", "--output")
    a.set_defaults(func=cmd_analyze)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            try:
                return args.func(args)
            finally:
                for w in caught:
                    print(f"warning: {w.message}", file=sys.stderr)
    except SamplingError as exc:
        print(f"error: {exc}\nhint: increase --grid or --extent-factor (or try --rescale)",
              file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, DesignError, BeamError, UnitaryError, DocumentError,
            FieldFormatError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
