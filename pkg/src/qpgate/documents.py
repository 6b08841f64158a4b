"""JSON documents for designs, schedules and reports.

Output is deterministic: keys keep insertion order, floats are written with
17 significant digits, non-finite floats become ``null``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any

import numpy as np

from .beam import Drift, ElectronContext, Element, Quadrupole, Rotator, RoundLens, width
from .gates import GateSchedule, Rotate, Shift
from .shifter import Mode, PhaseShifterDesign, VerifyReport


class DocumentError(ValueError):
    pass


def _fmt(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None or isinstance(obj, bool):
        return json.dumps(obj)
    if isinstance(obj, (int, np.integer)) and not isinstance(obj, bool):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj) + 0.0  # no negative zero: "-0" would re-parse as int 0
        return "null" if not math.isfinite(x) else format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_fmt(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [pad + _fmt(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj: Any, indent: int = 2) -> str:
    return _fmt(obj, indent, 0) + "\n"


def _complex_doc(q: complex) -> dict:
    return {"re_m": q.real, "im_m": q.imag}


def _complex_from(doc: dict) -> complex:
    return complex(float(doc["re_m"]), float(doc["im_m"]))


def element_doc(el: Element) -> dict:
    if isinstance(el, Drift):
        return {"type": "drift", "length_m": el.length}
    if isinstance(el, RoundLens):
        return {"type": "lens", "f_m": el.f}
    if isinstance(el, Quadrupole):
        return {"type": "quadrupole", "f_m": el.f, "axis_angle_rad": el.axis_angle}
    if isinstance(el, Rotator):
        return {"type": "rotator", "angle_rad": el.angle}
    raise TypeError(el)


def element_from(doc: dict) -> Element:
    kind = doc.get("type")
    if kind == "drift":
        return Drift(float(doc["length_m"]))
    if kind == "lens":
        return RoundLens(doc["f_m"])
    if kind == "quadrupole":
        return Quadrupole(doc["f_m"], float(doc.get("axis_angle_rad", 0.0)))
    if kind == "rotator":
        return Rotator(float(doc["angle_rad"]))
    raise DocumentError(f"unknown element type {kind!r}")


def verification_doc(rep: VerifyReport) -> dict:
    return {
        "mode_match_residual": rep.mode_match_residual,
        "achieved_phase_rad": rep.achieved_phase,
        "curvature_residual": rep.curvature_residual,
        "phase_error_rad": rep.phase_error,
        "w_in_m": rep.w_in,
        "w_out_m": rep.w_out,
        "passed": rep.passed,
    }


def _note(dsg: PhaseShifterDesign) -> str | None:
    if dsg.mode is Mode.QPS_OFF:
        return (
            f"quadrupoles off; incident beam converges to a geometric focus at "
            f"d/2 = {dsg.d / 2 * 1e3:.6g} mm"
        )
    if dsg.mode is Mode.LINE_FOCUS:
        return "f1 = f2 = -d; the beam passes a horizontal line focus (geometric limit)"
    return None


@dataclass
class DesignDocument:
    design: PhaseShifterDesign
    energy_kev: float
    verification: dict | None = None

    def to_dict(self, ctx: ElectronContext) -> dict:
        dsg = self.design
        out: dict = {
            "energy_keV": self.energy_kev,
            "d_m": dsg.d,
            "delta_phi_rad": dsg.delta_phi,
            "mode": dsg.mode.value,
            "u": dsg.u,
            "f1_m": dsg.f1,
            "f2_m": dsg.f2,
            "q_in": _complex_doc(dsg.q_in),
            "q_out": _complex_doc(dsg.q_out),
            "w_in_m": width(dsg.q_in, ctx),
            "w_out_m": width(dsg.q_out, ctx),
        }
        if dsg.w_geom is not None:
            out["w_geom_m"] = dsg.w_geom
        note = _note(dsg)
        if note:
            out["note"] = note
        if dsg.mode is Mode.CHAINED:
            out["stages"] = [DesignDocument(s, self.energy_kev).to_dict(ctx) for s in dsg.stages]
            out["relays"] = [[element_doc(el) for el in r] for r in dsg.relays]
        if self.verification is not None:
            out["verification"] = self.verification
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "DesignDocument":
        try:
            mode = Mode(doc["mode"])
            stages = tuple(cls.from_dict(s).design for s in doc.get("stages", ()))
            relays = tuple(tuple(element_from(e) for e in r) for r in doc.get("relays", ()))
            dsg = PhaseShifterDesign(
                d=float(doc["d_m"]),
                delta_phi=float(doc["delta_phi_rad"]),
                u=doc["u"],
                f1=doc["f1_m"],
                f2=doc["f2_m"],
                q_in=_complex_from(doc["q_in"]),
                q_out=_complex_from(doc["q_out"]),
                mode=mode,
                stages=stages,
                relays=relays,
                w_geom=doc.get("w_geom_m"),
            )
            return cls(dsg, float(doc["energy_keV"]), doc.get("verification"))
        except (KeyError, TypeError, ValueError) as exc:
            raise DocumentError(f"invalid design document: {exc!r}") from exc


def unitary_doc(U) -> list:
    return [[{"re": complex(v).real, "im": complex(v).imag} for v in row] for row in np.asarray(U)]


def unitary_from(doc) -> np.ndarray:
    return np.array([[complex(v["re"], v["im"]) for v in row] for row in doc], dtype=complex)


@dataclass
class ScheduleDocument:
    schedule: GateSchedule
    energy_kev: float
    source_unitary: np.ndarray | None = None

    def to_dict(self, ctx: ElectronContext) -> dict:
        stages = []
        for st in self.schedule.stages:
            if isinstance(st, Rotate):
                stages.append({"type": "rotate", "angle_rad": st.angle})
            else:
                stages.append({
                    "type": "shift",
                    "delta_phi_rad": st.delta_phi,
                    "design": DesignDocument(st.design, self.energy_kev).to_dict(ctx),
                })
        out: dict = {"energy_keV": self.energy_kev, "stages": stages}
        if self.source_unitary is not None:
            out["source_unitary"] = unitary_doc(self.source_unitary)
        out["global_phase_rad"] = self.schedule.global_phase
        return out

    @classmethod
    def from_dict(cls, doc: dict) -> "ScheduleDocument":
        try:
            stages = []
            for st in doc["stages"]:
                if st["type"] == "rotate":
                    stages.append(Rotate(float(st["angle_rad"])))
                elif st["type"] == "shift":
                    stages.append(Shift(float(st["delta_phi_rad"]), DesignDocument.from_dict(st["design"]).design))
                else:
                    raise DocumentError(f"unknown stage type {st['type']!r}")
            src = doc.get("source_unitary")
            return cls(
                GateSchedule(tuple(stages), float(doc.get("global_phase_rad", 0.0))),
                float(doc["energy_keV"]),
                None if src is None else unitary_from(src),
            )
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DocumentError):
                raise
            raise DocumentError(f"invalid schedule document: {exc!r}") from exc
