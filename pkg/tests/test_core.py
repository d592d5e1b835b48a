import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from extinction_lab.core import (
    Annulus,
    Field,
    Interval,
    RadialBall,
    Rectangle,
    assemble_weighted_stiffness,
    build_mesh,
    critical_exponent,
    integrate,
    validate_params,
    weighted_inner,
)
from extinction_lab.errors import (
    MeshMismatch,
    NegativeWeight,
    NonPositive,
    NotFastDiffusion,
    ResolutionTooCoarse,
    SubcriticalityViolated,
    UnsupportedDimension,
    ValidationError,
)

from .oracles import V3_P2


def test_params_interval_p2():
    prm = validate_params(0.5, 1)
    assert prm.p == 2.0
    assert_allclose(prm.m_crit, -1.0 / 3.0, rtol=0, atol=1e-15)


def test_params_critical_formula():
    for n in (1, 2):
        assert_allclose(critical_exponent(n), (n - 2) / (n + 2), atol=1e-15)


@pytest.mark.parametrize("m,n,exc", [
    (1.0, 2, NotFastDiffusion),
    (1.5, 1, NotFastDiffusion),
    (0.0, 1, NonPositive),
    (-0.2, 1, NonPositive),
    (0.2, 3, UnsupportedDimension),
    (float("nan"), 1, ValidationError),
])
def test_params_rejections(m, n, exc):
    with pytest.raises(exc):
        validate_params(m, n)


def test_params_subcritical_gate():
    # for n=2 the threshold is 0, which the positivity check already covers
    with pytest.raises((SubcriticalityViolated, NonPositive)):
        validate_params(0.0, 2)
    assert validate_params(1e-3, 2).p == pytest.approx(1e3)


def test_interval_mesh_topology():
    mesh = build_mesh(Interval(0, 1), 100)
    assert mesh.ncells == 100
    assert_allclose(mesh.measures, 0.01, rtol=1e-13)
    assert mesh.faces.shape == (99, 2)
    assert mesh.bnd_cells.size == 2
    assert_allclose(mesh.measures.sum(), 1.0, rtol=1e-12)


def test_annulus_mesh_wraps():
    mesh = build_mesh(Annulus(1, 2), 32)
    nr, nt = mesh.shape
    assert nr == 32 and mesh.ncells == nr * nt
    ids = np.arange(nr * nt).reshape(nr, nt)
    pairs = {tuple(f) for f in mesh.faces.tolist()}
    assert (ids[0, nt - 1], ids[0, 0]) in pairs
    assert_allclose(mesh.measures.sum(), Annulus(1, 2).measure, rtol=1e-12)
    # every interior face joins two distinct cells, boundary faces one cell each
    assert np.all(mesh.faces[:, 0] != mesh.faces[:, 1])
    assert mesh.bnd_cells.size == 2 * nt


@pytest.mark.parametrize("spec", [Interval(-1, 2), RadialBall(1.5, 2), RadialBall(1.0, 1), Rectangle(1, 2), Annulus(1, 1.5)])
def test_mesh_measure_matches_domain(spec):
    mesh = build_mesh(spec, 24)
    assert_allclose(mesh.measures.sum(), spec.measure, rtol=1e-12)


def test_too_coarse():
    with pytest.raises(ResolutionTooCoarse):
        build_mesh(Interval(0, 1), 4)


@pytest.mark.parametrize("bad", [lambda: Interval(1, 0), lambda: RadialBall(-1, 2), lambda: Rectangle(0, 1), lambda: Annulus(2, 1)])
def test_domain_invariants(bad):
    with pytest.raises(ValidationError):
        bad()


def test_weighted_inner_unit():
    mesh = build_mesh(Interval(0, 1), 50)
    one = mesh.constant()
    for sigma in (0.0, 1.5, 3.0):
        assert_allclose(weighted_inner(one, one, one, sigma), 1.0, rtol=1e-14)


def test_weighted_inner_mesh_mismatch():
    a = build_mesh(Interval(0, 1), 50).constant()
    b = build_mesh(Interval(0, 1), 60).constant()
    with pytest.raises(MeshMismatch):
        weighted_inner(a, b, a, 1.0)


def test_weighted_p_plus_one_norm_against_quadrature_oracle(p2):
    # Richardson extrapolation of midpoint sums against the exact quadrature value
    from extinction_lab.pipeline import stationary_profile

    vals = []
    for N in (400, 800):
        prof = stationary_profile(build_mesh(Interval(0, 1), N), p2)
        one = prof.V.mesh.constant()
        vals.append(weighted_inner(one, one, prof.V, p2.p + 1))
    rich = (4 * vals[1] - vals[0]) / 3
    assert abs(rich - V3_P2) / V3_P2 < 1e-6
    assert abs(vals[0] - V3_P2) / V3_P2 < 1e-4


def test_stiffness_kills_constants():
    mesh = build_mesh(Annulus(1, 1.2), 10)
    V = Field(mesh, 1.0 + np.random.default_rng(0).random(mesh.ncells))
    A = assemble_weighted_stiffness(V, 2.0)
    assert_array_equal(A @ mesh.constant(3.7), np.zeros(mesh.ncells))


def test_stiffness_classical_stencil():
    mesh = build_mesh(Interval(0, 1), 10)
    A = assemble_weighted_stiffness(mesh.constant(), 0.0).matrix.toarray() * mesh.measures[0]
    expected = 2 * np.eye(10) - np.eye(10, k=1) - np.eye(10, k=-1)
    expected[0, 0] = expected[-1, -1] = 1.0  # Neumann closure
    assert_allclose(A, expected, atol=1e-12)


def test_stiffness_quadratic_consistency():
    mesh = build_mesh(Interval(0, 1), 64)
    x = mesh.centers[:, 0]
    A = assemble_weighted_stiffness(mesh.constant(), 0.0)
    out = A @ Field(mesh, x * x)
    assert_allclose(out[1:-1], -2 * mesh.measures[1:-1], rtol=1e-10)


def test_stiffness_rejects_negative_weight():
    mesh = build_mesh(Interval(0, 1), 10)
    with pytest.raises(NegativeWeight):
        assemble_weighted_stiffness(mesh.constant(-1.0), 2.0)


def test_quadrature_order():
    errs, hs = [], []
    for N in (20, 40, 80):
        mesh = build_mesh(RadialBall(1.0, 2), N)
        r = mesh.centers[:, 0]
        errs.append(abs(integrate(Field(mesh, np.cos(r))) - 2 * math.pi * (math.sin(1) + math.cos(1) - 1)))
        hs.append(1.0 / N)
    order = np.polyfit(np.log(hs), np.log(errs), 1)[0]
    assert 1.8 <= order <= 2.5
