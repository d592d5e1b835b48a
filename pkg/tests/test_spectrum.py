import numpy as np
import pytest
from numpy.testing import assert_allclose

from extinction_lab.core import Field, Interval, RadialBall, Rectangle, build_mesh, validate_params
from extinction_lab.errors import DegenerateMass, NoPositiveGap, ValidationError
from extinction_lab.pipeline import stationary_profile
from extinction_lab.spectrum import (
    assemble_pencil,
    classify_spectrum,
    ground_state_residual,
    hardy_ratio,
    project_modes,
    solve_eigens,
)
from extinction_lab.stationary import solve_newton

from .oracles import LAMBDA_K_1600


def _cv(x):
    return float(np.std(x) / abs(np.mean(x)))


@pytest.mark.parametrize("domain,m,res", [
    (Interval(0, 1), 0.5, 200),
    (Interval(0, 1), 0.7, 200),
    (RadialBall(1.0, 2), 0.5, 80),
    (Rectangle(1, 1), 0.5, 24),
])
def test_ground_state(domain, m, res):
    n = 1 if isinstance(domain, Interval) else 2
    prm = validate_params(m, n)
    prof = stationary_profile(build_mesh(domain, res), prm)
    dec = solve_eigens(assemble_pencil(prof, prm), 4)
    assert abs(dec.eigenvalues[0] - (1 - prm.p)) <= max(1e-8, 10 * prof.residual_norm)
    assert dec.eigenvalues[1] > dec.eigenvalues[0] + 0.1
    assert _cv(dec.eigenfields[:, 0]) < 1e-6
    assert dec.I >= 1


def test_pencil_construction(profile100, p2):
    pen = assemble_pencil(profile100, p2)
    V = profile100.V
    assert np.array_equal(pen.A @ V.mesh.constant(), np.zeros(V.mesh.ncells))
    assert_allclose(pen.B, V.values ** 3 * V.mesh.measures, rtol=1e-15)


def test_degenerate_mass(profile100, p2):
    v = profile100.V.values.copy()
    v[50] = 0.0
    with pytest.raises(DegenerateMass):
        assemble_pencil(Field(profile100.V.mesh, v), p2)


def test_lambda_K_against_fine_grid_oracle(dec400):
    assert abs(dec400.lambda_K - LAMBDA_K_1600) / LAMBDA_K_1600 < 5e-3
    assert dec400.I == 1 and dec400.K == 0


def test_orthonormality(dec400):
    assert dec400.orthonormality_error < 1e-10


def test_k_too_large(profile100, p2):
    with pytest.raises(ValidationError):
        solve_eigens(assemble_pencil(profile100, p2), 101)


def test_eigenvalue_refinement_order(p2):
    lam = []
    for N in (100, 200, 400):
        prof = stationary_profile(build_mesh(Interval(0, 1), N), p2)
        lam.append(solve_eigens(assemble_pencil(prof, p2), 3).eigenvalues[1:3])
    lam = np.array(lam)
    slopes = np.log2(np.abs(lam[0] - lam[1]) / np.abs(lam[1] - lam[2]))
    assert np.all((slopes >= 1.7) & (slopes <= 2.5))


def test_dense_and_sparse_agree(profile400, p2):
    pen = assemble_pencil(profile400, p2)
    a = solve_eigens(pen, 6, method="dense")
    b = solve_eigens(pen, 6, method="sparse")
    assert_allclose(a.eigenvalues, b.eigenvalues, rtol=1e-9, atol=1e-9)
    overlap = np.abs(np.sum(a.eigenfields * b.eigenfields * pen.B[:, None], axis=0))
    assert_allclose(overlap, 1.0, atol=1e-8)


def test_unknown_method(profile100, p2):
    with pytest.raises(ValidationError):
        solve_eigens(assemble_pencil(profile100, p2), 3, method="lobpcg")


@pytest.mark.parametrize("lam,I,K,gap", [
    ([-1.0, 0.5, 2.0], 1, 0, 0.5),
    ([-1.0, -1e-9, 0.7], 1, 1, 0.7),
])
def test_classify(lam, I, K, gap):
    assert classify_spectrum(lam, 1e-6) == (I, K, gap)


def test_classify_no_gap():
    with pytest.raises(NoPositiveGap):
        classify_spectrum([-1.0, -0.5], 1e-6)


def test_interval_kernel_empty(p2):
    for N in (100, 200, 400):
        prof = stationary_profile(build_mesh(Interval(0, 1), N), p2)
        dec = solve_eigens(assemble_pencil(prof, p2), 4, zero_tol=1e-6)
        assert dec.K == 0


def test_projection_delta(dec400):
    for j in (0, 1, 4):
        y = project_modes(dec400.mode(j), dec400)
        e = np.zeros(y.size)
        e[j] = 1.0
        assert_allclose(y, e, atol=1e-10)


def test_projection_linear(dec400):
    h = Field(dec400.mesh, 2 * dec400.eigenfields[:, 0] + 3 * dec400.eigenfields[:, 1])
    y = project_modes(h, dec400)
    assert_allclose(y[:2], [2, 3], atol=1e-10)
    assert_allclose(y[2:], 0, atol=1e-10)


def test_parseval_gap_shrinks(profile100, p2, rng):
    pen = assemble_pencil(profile100, p2)
    h = Field(profile100.V.mesh, rng.standard_normal(100))
    norm2 = float(np.sum(h.values ** 2 * pen.B))
    gaps = []
    for k in (10, 50, 100):
        y = project_modes(h, solve_eigens(pen, k))
        assert np.sum(y ** 2) <= norm2 * (1 + 1e-12)
        gaps.append(norm2 - np.sum(y ** 2))
    assert gaps[0] > gaps[1] > abs(gaps[2])
    assert abs(gaps[2]) < 1e-9 * norm2


def test_ground_state_residual_small(profile400, p2):
    assert ground_state_residual(profile400, p2) <= 10 * profile400.residual_norm


def test_ground_state_residual_tracks_perturbation(profile400, p2, rng):
    noise = rng.standard_normal(profile400.V.mesh.ncells)
    amps = np.array([1e-4, 1e-3, 1e-2])
    res = [ground_state_residual(Field(profile400.V.mesh, profile400.V.values * (1 + a * noise)), p2) for a in amps]
    slope = np.polyfit(np.log(amps), np.log(res), 1)[0]
    assert abs(slope - 1.0) < 0.1


def test_ground_state_residual_constant_profile(mesh100, p2):
    assert ground_state_residual(mesh100.constant(1.0), p2) > 1.0


def _smooth_fields(x, count, rng):
    k = np.arange(1, 6)
    coef = rng.standard_normal((count, k.size)) / k
    phase = rng.uniform(0, 2 * np.pi, (count, k.size))
    return np.sum(coef[:, :, None] * np.cos(np.pi * k[None, :, None] * x[None, None, :] + phase[:, :, None]), axis=1)


def test_hardy_constant_stable_under_refinement(p2):
    consts = []
    for N in (100, 200, 400):
        mesh = build_mesh(Interval(0, 1), N)
        prof = solve_newton(mesh, p2)
        fields = _smooth_fields(mesh.centers[:, 0], 200, np.random.default_rng(7))
        consts.append(max(hardy_ratio(Field(mesh, f), prof.V, p2) for f in fields))
    fine = consts[-1]
    assert all(abs(c - fine) / fine <= 0.2 for c in consts)


def test_auto_avoids_dense_on_wide_mass_range():
    # p = 5 on the square: B spans ~1e21 and the B^{-1/2} congruence scrambles the spectrum
    prm = validate_params(0.2, 2)
    prof = stationary_profile(build_mesh(Rectangle(1, 1), 60), prm)
    dec = solve_eigens(assemble_pencil(prof, prm), 5)
    assert abs(dec.eigenvalues[0] - (1 - prm.p)) <= 1e-6
    assert np.all(np.diff(dec.eigenvalues) >= -1e-10)
