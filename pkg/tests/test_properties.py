import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from extinction_lab.asymptotics import classify_decay
from extinction_lab.core import (
    Field,
    Interval,
    Rectangle,
    assemble_weighted_stiffness,
    build_mesh,
    validate_params,
    weighted_inner,
)
from extinction_lab.evolution import Trajectory, rescale_maps
from extinction_lab.merlezaag import (
    ModeSeries,
    ModeSystemSpec,
    check_choi_sun,
    check_conclusion_mz,
    check_hypotheses_mz,
    decays_to_floor,
    derivative_slack,
    simulate_mode_system,
)
from extinction_lab.pipeline import split_trajectory
from extinction_lab.spectrum import assemble_pencil, solve_eigens

MESH1 = build_mesh(Interval(0.0, 1.0), 24)
MESH2 = build_mesh(Rectangle(1.0, 1.5), 8)

finite = st.floats(-1e3, 1e3, allow_nan=False)
positive = st.floats(1e-3, 1e3, allow_nan=False)


@settings(max_examples=50, deadline=None)
@given(f=arrays(float, 24, elements=finite), g=arrays(float, 24, elements=finite),
       v=arrays(float, 24, elements=positive), sigma=st.floats(0, 4))
def test_weighted_inner_symmetric(f, g, v, sigma):
    F, G, V = Field(MESH1, f), Field(MESH1, g), Field(MESH1, v)
    assert weighted_inner(F, G, V, sigma) == weighted_inner(G, F, V, sigma)


@settings(max_examples=50, deadline=None)
@given(v=arrays(float, MESH2.ncells, elements=positive), f=arrays(float, MESH2.ncells, elements=finite),
       c=finite)
def test_stiffness_psd_and_kills_constants(v, f, c):
    A = assemble_weighted_stiffness(Field(MESH2, v), 2.0)
    assert np.array_equal(A @ MESH2.constant(c), np.zeros(MESH2.ncells))
    q = float(f @ (A @ Field(MESH2, f)))
    assert q >= -1e-12 * max(1.0, float(np.abs(A.matrix).sum()) * float(f @ f))


@settings(max_examples=50, deadline=None)
@given(rate=st.floats(0.05, 5.0), scale=st.floats(1e-8, 1e8), amp=st.floats(0.0, 0.2))
def test_classify_decay_scale_invariant(rate, scale, amp):
    t = np.linspace(0.0, 20.0, 400)
    v = np.exp(-rate * t) * (1 + amp / (1 + t))
    a, b = classify_decay(t, v), classify_decay(t, scale * v)
    assert a.tag == b.tag
    if a.rate is not None:
        assert abs(a.rate - b.rate) <= 1e-9 * a.rate


@settings(max_examples=50, deadline=None)
@given(m=st.floats(0.1, 0.9), T=st.floats(0.1, 10.0), frac=st.floats(0.0, 0.999))
def test_rescale_time_roundtrip(m, T, frac):
    rm = rescale_maps(validate_params(m, 1), T)
    tau = frac * T
    assert abs(rm.tau(rm.time(tau)) - tau) <= 1e-9 * T


@st.composite
def mz_specs(draw):
    eps = draw(st.floats(1e-4, 0.0099))
    y0 = draw(st.floats(0.05, 1.0))
    return ModeSystemSpec(
        eps=eps,
        x0=draw(st.floats(0.0, 0.5)) * eps * y0 * 0.2,
        y0=y0,
        z0=draw(st.floats(0.01, 1.0)),
        a_x=draw(st.floats(-1.0, -0.2)),
        b_y=draw(st.floats(-0.3, 0.3)),
        d_y=draw(st.floats(0.0, 0.4)),
        q_y=draw(st.floats(0.0, 0.3)) * eps / y0,
        c_z=draw(st.floats(0.0, 1.0)),
    )


@settings(max_examples=25, deadline=None)
@given(spec=mz_specs())
def test_mz_hypotheses_imply_an_alternative(spec):
    ser = simulate_mode_system(spec, (0.0, 30.0), 0.01)
    ok, _ = check_hypotheses_mz(ser, spec.eps, 0.0)
    if ok and decays_to_floor(ser, 0.0):
        assert check_conclusion_mz(ser, spec.eps, 0.0).tag in ("NeutralDominates", "StableDominates")


@settings(max_examples=25, deadline=None)
@given(spec=mz_specs(), c=st.floats(1e-3, 1e3))
def test_mz_verifiers_scale_covariant(spec, c):
    ser = simulate_mode_system(spec, (0.0, 20.0), 0.01)
    ok1, _ = check_hypotheses_mz(ser, spec.eps, 0.0)
    ok2, _ = check_hypotheses_mz(ser.scaled(c), spec.eps, 0.0)
    assert ok1 == ok2
    if ok1 and decays_to_floor(ser, 0.0):
        a = check_conclusion_mz(ser, spec.eps, 0.0)
        b = check_conclusion_mz(ser.scaled(c), spec.eps, 0.0)
        assert (a.tag, a.gate_ok) == (b.tag, b.gate_ok)


@settings(max_examples=25, deadline=None)
@given(y=st.floats(1e-3, 0.05), c=st.floats(1e-2, 1e2))
def test_choi_sun_scale_covariant(y, c):
    s = np.linspace(-4.0, 4.0, 801)
    ser = ModeSeries(s, 1e-4 * np.exp(s - 4.0), np.full_like(s, y), 1e-4 * np.exp(-s - 4.0))
    a = check_choi_sun(ser, 0.05, 1.0, 0.1)
    b = check_choi_sun(ser.scaled(c), 0.05, 1.0, 0.1 * c)
    assert a.ok == b.ok


def test_derivative_slack_second_order():
    slacks = []
    for n in (100, 200, 400):
        s = np.linspace(0.0, 2.0, n + 1)
        slacks.append(derivative_slack(np.sin(3 * s) + np.exp(-s)))
    slopes = np.log2(np.array(slacks[:-1]) / np.array(slacks[1:]))
    assert np.all(np.abs(slopes - 2.0) <= 0.1)


def test_bessel_with_all_modes(profile100, p2, rng):
    dec = solve_eigens(assemble_pencil(profile100, p2), 100)
    t = np.arange(5.0)
    H = rng.standard_normal((5, 100))
    z = np.zeros(5)
    tr = Trajectory("relative", profile100.V.mesh, p2, t, z, z, z, z, t, H)
    sp = split_trajectory(tr, dec)
    assert sp.bessel_excess < 1e-8 * float(np.max(sp.norm_total ** 2))
    assert np.allclose(sp.norm_u ** 2 + sp.norm_c ** 2 + sp.norm_s ** 2, sp.norm_total ** 2, rtol=1e-10)
