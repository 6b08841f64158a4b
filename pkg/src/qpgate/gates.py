"""Bloch states, 2x2 unitaries and their compilation into rotators and shifters.

Rotation conventions (half-angle, spin-1/2 style):

* ``rx(t)`` is the Bloch rotation produced by turning the transverse frame by
  ``t/2``.  On ``(HG_10, HG_01)`` amplitudes it is the real matrix
  ``[[cos t/2, -sin t/2], [sin t/2, cos t/2]]``, i.e. ``exp(-i t sigma_y / 2)``
  in standard Pauli labels.  It changes ``theta`` at ``phi = 0``.
* ``rz(t) = diag(exp(-i t/2), exp(i t/2))`` advances ``phi`` by ``t``.

:func:`bloch_vector` uses axes in which these are rotations about x and z.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

from .beam import ElectronContext
from .shifter import (
    FreeParameter,
    PhaseShifterDesign,
    Symmetric,
    design,
    design_edge,
    design_pi_chained,
    wrap_phase,
)

UNITARY_TOL = 1e-10
ANGLE_EPS = 1e-12
# shifter phases this close to pi are built as exact pi (the regular design diverges there)
EDGE_SNAP = 1e-9
# below this sin/cos(beta/2) the Euler angles are degenerate (gimbal lock)
DEGENERATE_EPS = 1e-13
TWO_PI = 2 * math.pi


class UnitaryError(ValueError):
    pass


def rx(t: float) -> np.ndarray:
    c, s = math.cos(t / 2), math.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def so3_x(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[1, 0, 0], [0, c, -s], [0, s, c]])


def so3_z(t: float) -> np.ndarray:
    c, s = math.cos(t), math.sin(t)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1]])


def check_unitary(U, tol: float = UNITARY_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.shape != (2, 2):
        raise UnitaryError(f"expected a 2x2 matrix, got shape {U.shape}")
    err = np.linalg.norm(U @ U.conj().T - np.eye(2))
    if not err < tol:
        raise UnitaryError(f"matrix is not unitary (|UU^+ - I|_F = {err:.3g} >= {tol:g})")
    return U


def global_phase_between(U, V) -> float:
    """Angle ``chi`` minimising ``|U - exp(i chi) V|``."""
    return float(np.angle(np.trace(np.asarray(V).conj().T @ np.asarray(U))))


def phase_distance(U, V) -> float:
    """Frobenius distance between U and V after removing the best global phase."""
    chi = global_phase_between(U, V)
    return float(np.linalg.norm(np.asarray(U) - np.exp(1j * chi) * np.asarray(V)))


# --- states ----------------------------------------------------------------


@dataclass(frozen=True)
class QubitState:
    a: complex
    b: complex

    def __post_init__(self):
        n = abs(self.a) ** 2 + abs(self.b) ** 2
        if abs(n - 1) > 1e-12:
            raise ValueError(f"state is not normalized (|a|^2 + |b|^2 = {n!r})")

    @classmethod
    def normalized(cls, a: complex, b: complex) -> "QubitState":
        n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        return cls(complex(a) / n, complex(b) / n)

    @property
    def vector(self) -> np.ndarray:
        return np.array([self.a, self.b], dtype=complex)

    @property
    def angles(self) -> tuple[float, float, float]:
        return angles_from_state(self)


def state_from_angles(theta: float, phi: float, chi: float = 0.0) -> QubitState:
    if not 0 <= theta <= math.pi:
        raise ValueError(f"theta must lie in [0, pi], got {theta}")
    if not 0 <= phi < TWO_PI:
        raise ValueError(f"phi must lie in [0, 2pi), got {phi}")
    return QubitState(
        math.cos(theta / 2) * complex(math.cos(chi), math.sin(chi)),
        math.sin(theta / 2) * complex(math.cos(phi + chi), math.sin(phi + chi)),
    )


def amplitudes_to_angles(a: complex, b: complex) -> tuple[float, float, float]:
    """(theta, phi, chi) of an unnormalized amplitude pair; poles get phi = 0."""
    ma, mb = abs(a), abs(b)
    theta = 2 * math.atan2(mb, ma)
    if mb <= ANGLE_EPS * max(ma, mb):
        return 0.0, 0.0, math.atan2(a.imag, a.real)
    if ma <= ANGLE_EPS * max(ma, mb):
        return math.pi, 0.0, math.atan2(b.imag, b.real)
    chi = math.atan2(a.imag, a.real)
    phi = (math.atan2(b.imag, b.real) - chi) % TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return theta, phi, chi


def angles_from_state(psi: QubitState) -> tuple[float, float, float]:
    return amplitudes_to_angles(psi.a, psi.b)


def bloch_vector(psi: QubitState) -> np.ndarray:
    """Bloch vector in axes where :func:`rx` turns about x and :func:`rz` about z."""
    a, b = psi.a, psi.b
    sx = 2 * (a.conjugate() * b).real
    sy = 2 * (a.conjugate() * b).imag
    sz = abs(a) ** 2 - abs(b) ** 2
    return np.array([sy, -sx, sz])


def apply_unitary(U, psi: QubitState) -> QubitState:
    U = check_unitary(U)
    a, b = U @ psi.vector
    return QubitState.normalized(a, b)


def fidelity(psi: QubitState, target: QubitState) -> float:
    return float(abs(np.vdot(target.vector, psi.vector)) ** 2)


# --- Euler decomposition ---------------------------------------------------

_S = rz(math.pi / 2)
_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)


def _canon(alpha: float) -> float:
    x = alpha % TWO_PI
    return 0.0 if x >= TWO_PI - ANGLE_EPS or x < ANGLE_EPS else x


def _cost(alpha: float) -> float:
    return min(alpha, TWO_PI - alpha)


def euler_compose(alpha1: float, beta: float, alpha2: float, chi: float = 0.0) -> np.ndarray:
    return np.exp(1j * chi) * (rx(alpha2) @ rz(beta) @ rx(alpha1))


def euler_xzx_decompose(U) -> tuple[float, float, float, float]:
    """``U = exp(i chi) rx(alpha2) rz(beta) rx(alpha1)``.

    Returns ``(alpha1, beta, alpha2, chi)`` with alphas in [0, 2pi) and beta in
    (-pi, pi].  Of the equivalent solutions the one with the smallest outer
    rotations is returned; ``beta = 0`` folds everything into ``alpha1``.
    """
    U = check_unitary(U)
    # rx = S Rx_std S^+, and Hadamard swaps Rx_std <-> Rz: V = e^{i chi} Rz(a2) Rx_std(b) Rz(a1)
    V = _H @ _S.conj().T @ U @ _S @ _H
    b = 2 * math.atan2(abs(V[1, 0]), abs(V[0, 0]))
    sin_ok = math.sin(b / 2) > DEGENERATE_EPS
    cos_ok = math.cos(b / 2) > DEGENERATE_EPS
    total = float(np.angle(V[1, 1]) - np.angle(V[0, 0])) if cos_ok else 0.0
    diff = float(np.angle(V[1, 0]) - np.angle(V[0, 1])) if sin_ok else 0.0
    if not sin_ok:
        base = [(total, 0.0)]
    elif not cos_ok:
        base = [(0.0, diff)]
    else:
        base = [((total - diff) / 2, (total + diff) / 2)]

    candidates = []
    for a1, a2 in base:
        for shift in (0.0, math.pi):
            for sb in (b, -b):
                for extra in (0.0, math.pi):
                    al1, al2 = _canon(a1 + shift), _canon(a2 + shift + extra)
                    be = wrap_phase(sb)
                    if not sin_ok:
                        # gimbal lock: all outer rotation on alpha1
                        al1, al2, be = _canon(al1 + al2), 0.0, 0.0
                    # Frobenius distance is linear in a wrong sign of a small beta
                    err = phase_distance(U, euler_compose(al1, be, al2))
                    candidates.append((err, al1, be, al2))
    best_err = min(c[0] for c in candidates)
    valid = [c for c in candidates if c[0] <= best_err + 1e-12]
    _, al1, be, al2 = min(
        valid, key=lambda c: (round(_cost(c[1]) + _cost(c[3]), 9), c[2] < 0, c[2])
    )
    chi = global_phase_between(U, euler_compose(al1, be, al2))
    return al1, be, al2, chi


# --- schedules -------------------------------------------------------------


@dataclass(frozen=True)
class Rotate:
    """Physical frame rotation; realizes ``rx(2 * angle)``."""

    angle: float


@dataclass(frozen=True)
class Shift:
    delta_phi: float
    design: PhaseShifterDesign | None = None


Stage = Union[Rotate, Shift]


@dataclass(frozen=True)
class GateSchedule:
    stages: tuple[Stage, ...] = ()
    global_phase: float = 0.0

    def unitary(self) -> np.ndarray:
        """Composite gate of the stages, applied first to last (global phase excluded)."""
        M = np.eye(2, dtype=complex)
        for st in self.stages:
            M = stage_matrix(st) @ M
        return M

    def __len__(self):
        return len(self.stages)


def stage_matrix(stage: Stage) -> np.ndarray:
    if isinstance(stage, Rotate):
        return rx(2 * stage.angle)
    return rz(stage.delta_phi)


def _wrap_rotation(angle: float) -> float:
    """Frame rotations by angle and angle + pi differ by a global sign; use (-pi/2, pi/2]."""
    x = math.remainder(angle, math.pi)
    return math.pi / 2 if x == -math.pi / 2 else x


def compile_unitary(
    U,
    d: float,
    free: FreeParameter = Symmetric(),
    *,
    edge: str = "chain",
    ctx: ElectronContext | None = None,
    w_geom: float = 1e-6,
) -> GateSchedule:
    """Rotator / phase shifter / rotator schedule realizing ``U`` up to global phase.

    ``edge`` picks how a phase of exactly pi is built: ``"chain"`` (two pi/2
    shifters) or ``"geometric"`` (line-focus design, needs ``ctx``).
    """
    alpha1, beta, alpha2, _ = euler_xzx_decompose(U)
    stages: list[Stage] = []

    def push_rotation(angle):
        angle = _wrap_rotation(angle)
        if stages and isinstance(stages[-1], Rotate):
            angle = _wrap_rotation(stages.pop().angle + angle)
        if abs(angle) > ANGLE_EPS:
            stages.append(Rotate(angle))

    push_rotation(alpha1 / 2)
    if abs(beta) > ANGLE_EPS:
        if abs(beta - math.pi) < EDGE_SNAP:
            beta = math.pi
            if edge == "geometric":
                if ctx is None:
                    raise ValueError("geometric pi shifter needs an electron context")
                dsg = design_edge(d, beta, w_geom, ctx)
            elif edge == "chain":
                dsg = design_pi_chained(d, free)
            else:
                raise ValueError(f"unknown edge strategy {edge!r}")
        else:
            dsg = design(d, beta, free)
        stages.append(Shift(beta, dsg))
    push_rotation(alpha2 / 2)
    sched = GateSchedule(tuple(stages))
    chi = global_phase_between(check_unitary(U), sched.unitary())
    return GateSchedule(tuple(stages), chi)


def simulate_schedule(schedule: GateSchedule, psi: QubitState) -> QubitState:
    v = psi.vector
    for st in schedule.stages:
        v = stage_matrix(st) @ v
    return QubitState.normalized(v[0], v[1])


def gate_to_target(theta: float, phi: float) -> np.ndarray:
    """A unitary taking ``|0>`` to the Bloch state (theta, phi)."""
    return rz(phi) @ rx(theta)
