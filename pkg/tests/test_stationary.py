import numpy as np
import pytest
from numpy.testing import assert_allclose

from extinction_lab.core import Field, Interval, RadialBall, Rectangle, build_mesh, validate_params
from extinction_lab.errors import ConvergedToZero, EmptyBand, InvalidExponent
from extinction_lab.stationary import (
    check_boundary_growth,
    energy,
    growth_ratios,
    relative_residual,
    shoot_first_zero,
    solve_newton,
    solve_radial_shooting,
)

from .oracles import R_STAR_P2


def test_first_zero_matches_quadrature_oracle():
    sol = shoot_first_zero(1, 2.0)
    assert_allclose(sol.r_star, R_STAR_P2, rtol=1e-12)


def test_shooting_profile_reproduces_r_star(mesh400, p2):
    prof = solve_radial_shooting(p2, mesh400)
    beta = prof.info["beta"]
    assert_allclose(beta, 2 * R_STAR_P2, rtol=1e-12)
    assert_allclose(prof.info["alpha"], beta ** 2, rtol=1e-14)
    assert prof.residual_norm <= 1e-12


def test_shooting_scaling_symmetry():
    prm = validate_params(0.5, 2)
    a = solve_radial_shooting(prm, build_mesh(RadialBall(1.0, 2), 64))
    b = solve_radial_shooting(prm, build_mesh(RadialBall(2.0, 2), 64))
    # same relative positions: V_2R = 2^{-2/(p-1)} V_R
    assert_allclose(b.V.values, 2.0 ** (-2.0 / (prm.p - 1)) * a.V.values, rtol=1e-13)
    assert_allclose(b.info["beta"], 0.5 * a.info["beta"], rtol=1e-14)


def test_center_value_scaling_invariant():
    prm = validate_params(0.5, 2)
    vals = []
    for R in (0.5, 1.0, 3.0):
        for N in (50, 200):
            prof = solve_radial_shooting(prm, build_mesh(RadialBall(R, 2), N))
            vals.append(prof.info["alpha"] * prof.info["solution"](0.0)[0] * R ** (2.0 / (prm.p - 1)))
    assert_allclose(vals, vals[0], rtol=1e-6)


def test_invalid_exponent():
    with pytest.raises(InvalidExponent):
        shoot_first_zero(1, 1.0)


def test_newton_from_eigenfunction(mesh400, p2):
    prof = solve_newton(mesh400, p2)
    assert prof.residual_norm <= 1e-10
    assert np.all(prof.V.values > 0)
    assert prof.energy > 0


def test_newton_zero_init(mesh100, p2):
    with pytest.raises(ConvergedToZero):
        solve_newton(mesh100, p2, init=Field(mesh100, np.zeros(mesh100.ncells)))


def test_newton_rectangle_two_resolutions():
    prm = validate_params(0.5, 2)
    tops = []
    for N in (32, 64):
        prof = solve_newton(build_mesh(Rectangle(1, 1), N), prm)
        assert prof.residual_norm <= 1e-10
        assert np.all(prof.V.values > 0)
        tops.append(prof.V.values.max())
    assert abs(tops[1] - tops[0]) / tops[1] < 0.01


@pytest.mark.xfail(reason="O(dx^2) discretization gap is ~6e-5 at 400 cells; see the decisions ledger", strict=True)
def test_newton_matches_shooting_to_1e6_at_400(mesh400, p2):
    a = solve_radial_shooting(p2, mesh400)
    b = solve_newton(mesh400, p2)
    assert np.max(np.abs(a.V.values - b.V.values)) <= 1e-6


def test_newton_shooting_second_order(p2):
    errs = []
    for N in (100, 200, 400):
        mesh = build_mesh(Interval(0, 1), N)
        errs.append(np.max(np.abs(solve_radial_shooting(p2, mesh).V.values - solve_newton(mesh, p2).V.values)))
    slopes = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(slopes - 2.0) <= 0.3)


def test_boundary_growth_band(profile400):
    lo, hi = check_boundary_growth(profile400, 0.1)
    assert 0 < lo <= hi
    assert hi / lo <= 1.5


def test_boundary_growth_detects_quadratic_vanishing(p2):
    los = []
    for N in (100, 400):
        prof = solve_radial_shooting(p2, build_mesh(Interval(0, 1), N))
        los.append(growth_ratios(Field(prof.V.mesh, prof.V.values ** 2), 0.1)[0])
    assert los[1] < 0.5 * los[0]


def test_empty_band(profile100):
    with pytest.raises(EmptyBand):
        check_boundary_growth(profile100, 0.6)


def test_energy_zero(mesh100, p2):
    assert energy(Field(mesh100, np.zeros(mesh100.ncells)), p2) == 0.0


def test_energy_at_stationary_profile(profile400, p2):
    V = profile400.V
    norm = float(np.sum(V.values ** (p2.p + 1) * V.mesh.measures))
    assert_allclose(energy(V, p2), (0.5 - 1 / (p2.p + 1)) * norm, rtol=1e-6)


def test_energy_scaled_by_two(profile400, p2):
    from extinction_lab.core import dirichlet_gradient_energy

    V = profile400.V
    grad = dirichlet_gradient_energy(V)
    norm = float(np.sum(V.values ** 3 * V.mesh.measures))
    assert_allclose(energy(Field(V.mesh, 2 * V.values), p2), 2 * grad - 8.0 / 3.0 * norm, rtol=1e-12)


def test_relative_residual_small(profile400, p2):
    assert relative_residual(profile400.V, p2) <= 1e-10
