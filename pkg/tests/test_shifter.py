import math
import warnings

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from oracles import brute_force_symmetric, shifter_output
from qpgate.beam import ModeState, beam_properties, propagate_line, wavenumber_from_energy
from qpgate.shifter import (
    F1,
    DesignError,
    InputRayleigh,
    InputWidth,
    Mode,
    OutputWidth,
    chain,
    design,
    design_edge,
    design_edge_chained,
    phase_from_u,
    relay_elements,
    u_from_phase,
    u_from_phase_eq6,
    verify,
    wrap_phase,
)

CTX = wavenumber_from_energy(200.0)
D = 0.12

# symmetric designs at d = 120 mm found by brute-force root finding (oracles.py)
ORACLE_SYMMETRIC = {
    math.pi / 4: (-0.31357511157033047, complex(-0.0647405144135563, 0.059812436190936624)),
    math.pi / 2: (-0.16970562748477142, complex(-0.08, 0.05656854249492381)),
    3 * math.pi / 4: (-0.12988706403508732, complex(-0.10467125029232599, 0.04005595333181281)),
}

regular_phases = st.floats(-math.pi + 0.05, math.pi - 0.05).filter(lambda p: abs(p) > 0.05)
spacings = st.floats(0.05, 0.5)


def achieved(dsg):
    out = propagate_line(ModeState.round(dsg.q_in), dsg.elements())
    return out


def test_oracle_reproduces_frozen_values():
    f, q = brute_force_symmetric(D, math.pi / 2)
    assert f == pytest.approx(ORACLE_SYMMETRIC[math.pi / 2][0], rel=1e-10)
    assert q == pytest.approx(ORACLE_SYMMETRIC[math.pi / 2][1], rel=1e-10)


@pytest.mark.parametrize("phase", sorted(ORACLE_SYMMETRIC))
def test_symmetric_design_matches_oracle(phase):
    f, q = ORACLE_SYMMETRIC[phase]
    dsg = design(D, phase)
    assert dsg.f1 == pytest.approx(f, rel=1e-9)
    assert dsg.f2 == pytest.approx(f, rel=1e-9)
    assert dsg.q_in == pytest.approx(q, rel=1e-9)


def test_example_quarter_wave():
    dsg = design(D, math.pi / 2)
    assert dsg.u == pytest.approx(-1.0)
    assert dsg.f1 * 1e3 == pytest.approx(-169.706, abs=1e-3)
    assert dsg.q_in.real * 1e3 == pytest.approx(-80.0, abs=1e-9)
    assert dsg.q_in.imag * 1e3 == pytest.approx(56.569, abs=1e-3)
    assert dsg.q_out.real * 1e3 == pytest.approx(80.0, abs=1e-9)
    assert dsg.w_in(CTX) * 1e9 == pytest.approx(368.07, abs=0.01)


@given(st.floats(-50.0, 50.0).filter(lambda u: abs(u) > 1e-3))
def test_u_phase_inverse(u):
    assert u_from_phase(phase_from_u(u)) == pytest.approx(u, rel=1e-9)


@given(regular_phases)
def test_half_angle_and_tangent_forms_agree(phase):
    assume(abs(abs(phase) - math.pi / 2) > 1e-3)
    assert u_from_phase_eq6(phase) == pytest.approx(u_from_phase(phase), rel=1e-9)


def test_edge_limits_of_u():
    assert phase_from_u(0.0) == math.pi
    assert phase_from_u(1e12) == pytest.approx(0.0, abs=1e-11)
    for edge in (0.0, math.pi, -math.pi):
        with pytest.raises(DesignError, match="design_edge"):
            u_from_phase(edge)
    with pytest.warns(RuntimeWarning):
        u_from_phase(1e-8)


@given(spacings, regular_phases)
def test_design_against_matrix_oracle(d, phase):
    dsg = design(d, phase)
    qh, qv, dphi = shifter_output(dsg.q_in, dsg.f1, dsg.f2, d)
    assert abs(qh - qv) / abs(qh) < 1e-9
    assert abs(wrap_phase(dphi - phase)) < 1e-9
    assert dsg.q_out == pytest.approx(qh, rel=1e-9)


@given(spacings, regular_phases)
def test_curvature_at_qp1_is_minus_d(d, phase):
    R = beam_properties(design(d, phase).q_in, CTX).curvature_radius
    assert R == pytest.approx(-d, rel=1e-9)


@given(spacings, regular_phases, st.floats(0.2, 5.0))
def test_f1_choice(d, phase, scale):
    u = u_from_phase(phase)
    f1 = math.copysign(scale * d, u)
    dsg = design(d, phase, F1(f1))
    out = achieved(dsg)
    assert dsg.f1 == f1
    assert dsg.f1 * dsg.f2 == pytest.approx(d * d * (1 + u * u), rel=1e-12)
    assert out.mismatch() < 1e-9
    assert abs(wrap_phase(out.relative_phase - phase)) < 1e-9


def test_f1_with_wrong_sign_rejected():
    with pytest.raises(DesignError, match="sign"):
        design(D, math.pi / 2, F1(0.1))


@pytest.mark.parametrize("branch", ["far", "near"])
@given(zr_frac=st.floats(0.05, 0.999))
def test_input_rayleigh(branch, zr_frac):
    zr = zr_frac * D / 2
    dsg = design(D, math.pi / 3, InputRayleigh(zr, branch))
    assert dsg.q_in.imag == pytest.approx(zr, rel=1e-9)
    assert achieved(dsg).mismatch() < 1e-9


def test_far_branch_contains_symmetric_design():
    sym = design(D, math.pi / 3)
    far = design(D, math.pi / 3, InputRayleigh(sym.q_in.imag))
    assert far.f1 == pytest.approx(sym.f1, rel=1e-9)


def test_input_rayleigh_out_of_range():
    with pytest.raises(DesignError, match="attainable"):
        design(D, math.pi / 2, InputRayleigh(0.07))


@given(st.floats(100e-9, 2e-6))
def test_width_choices(w):
    a = design(D, math.pi / 2, InputWidth(w, CTX))
    b = design(D, math.pi / 2, OutputWidth(w, CTX))
    assert a.w_in(CTX) == pytest.approx(w, rel=1e-9)
    assert b.w_out(CTX) == pytest.approx(w, rel=1e-9)
    assert achieved(b).mismatch() < 1e-9


def test_one_free_parameter_only():
    with pytest.raises(DesignError, match="one free parameter"):
        design(D, math.pi / 2, (InputWidth(3e-7, CTX), OutputWidth(3e-7, CTX)))


def test_bad_spacing():
    with pytest.raises(DesignError):
        design(0.0, math.pi / 2)


def test_design_at_edge_points_to_alternatives():
    with pytest.raises(DesignError, match="design_edge"):
        design(D, math.pi)


def test_qps_off_edge():
    dsg = design_edge(D, 0.0, 1e-6, CTX)
    assert dsg.mode is Mode.QPS_OFF
    assert dsg.f1 is None and dsg.f2 is None
    assert beam_properties(dsg.q_in, CTX).curvature_radius == pytest.approx(-D / 2)
    rep = verify(dsg, CTX)
    assert rep.passed
    assert rep.phase_error < 0.01


def test_line_focus_edge():
    dsg = design_edge(D, math.pi, 1e-6, CTX)
    assert dsg.mode is Mode.LINE_FOCUS
    assert dsg.f1 == pytest.approx(-D) and dsg.f2 == pytest.approx(-D)
    rep = verify(dsg, CTX)
    assert rep.passed
    assert rep.phase_error < rep.phase_tol
    assert rep.mode_match_residual < 0.05


def test_edge_warns_for_narrow_beam():
    with pytest.warns(RuntimeWarning, match="geometric limit"):
        design_edge(D, math.pi, 100e-9, CTX)


def test_edge_rejects_regular_phase():
    with pytest.raises(DesignError):
        design_edge(D, 1.0, 1e-6, CTX)


@pytest.mark.parametrize("phase", [0.0, math.pi])
def test_chained_edges_are_exact(phase):
    dsg = design_edge_chained(D, phase)
    out = achieved(dsg)
    assert dsg.mode is Mode.CHAINED
    assert out.mismatch() < 1e-9
    assert abs(wrap_phase(out.relative_phase - phase)) < 1e-9
    assert verify(dsg, CTX).passed


@given(regular_phases, regular_phases)
def test_chain_phases_add(p1, p2):
    total = wrap_phase(p1 + p2)
    dsg = chain([design(D, p1), design(D, p2)], relay=True)
    out = achieved(dsg)
    assert dsg.delta_phi == pytest.approx(total)
    assert out.mismatch() < 1e-9
    assert abs(wrap_phase(out.relative_phase - total)) < 1e-8


def test_chain_without_relay_needs_matching_interfaces():
    with pytest.raises(DesignError, match="relay"):
        chain([design(D, 0.5), design(D, 1.0)])


@given(st.floats(0.3, 3.0), st.floats(-0.5, 0.5))
def test_relay_reaches_target(ratio, re_frac):
    q_from = complex(0.08, 0.0566)
    q_to = complex(re_frac * 0.1, 0.0566 * ratio)
    L = 0.02
    els = relay_elements(q_from, q_to, L)
    out = propagate_line(ModeState.round(q_from), els)
    assert out.q_h == pytest.approx(q_to, rel=1e-9)


def test_relay_too_long():
    # a drift longer than k w_from w_to / 2 cannot join the two widths
    with pytest.raises(DesignError, match="at most"):
        relay_elements(complex(0, 1e-3), complex(0, 1.0), 0.1)
    relay_elements(complex(0, 1e-3), complex(0, 1.0), 0.03)


@given(spacings, regular_phases)
def test_verify_normal_designs(d, phase):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rep = verify(design(d, phase), CTX)
    assert rep.passed
    assert rep.curvature_residual < 1e-9
