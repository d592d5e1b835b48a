"""Spectrum of the linearised operator in the weighted space ``L^2(V^{p+1})``.

The weak eigenvalue equation

    int grad(phi) . grad(f) V^2 = (lambda + p - 1) int phi f V^{p+1}

becomes the symmetric pencil ``A x = nu B x`` with ``A`` the V^2-weighted
stiffness (no boundary flux) and ``B = diag(V^{p+1} |cell|)``; then
``lambda = nu - (p - 1)``. Since ``A 1 = 0`` the constant field is an exact
discrete eigenvector with ``lambda = 1 - p``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .core import Field, assemble_weighted_stiffness, check_same_mesh, weighted_inner
from .errors import DegenerateMass, EigensolverFailure, NoPositiveGap, ValidationError
from .stationary import StationaryProfile, residual

DENSE_LIMIT = 4000
DENSE_MASS_RANGE = 1e14   # max(B)/min(B) beyond which B^{-1/2} scaling loses the spectrum
ZERO_TOL_CALIBRATION = 1.0


@dataclass(frozen=True, eq=False)
class Pencil:
    A: object          # WeightedStiffness
    B: np.ndarray      # diagonal of the mass matrix
    V: Field
    params: object

    @property
    def mesh(self):
        return self.V.mesh


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    eigenvalues: np.ndarray
    eigenfields: np.ndarray    # one B-orthonormal column per eigenvalue
    I: int
    K: int
    lambda_K: float
    zero_tol: float
    V: Field
    params: object
    orthonormality_error: float

    @property
    def mesh(self):
        return self.V.mesh

    def mode(self, i):
        return Field(self.mesh, self.eigenfields[:, i])

    def classes(self):
        lam = self.eigenvalues
        return np.where(lam < -self.zero_tol, "u", np.where(lam <= self.zero_tol, "c", "s"))

    @property
    def index_K(self):
        """Column index of the first stable mode."""
        return self.I + self.K


def _profile_field(V):
    return V.V if isinstance(V, StationaryProfile) else V


def assemble_pencil(V, params):
    V = _profile_field(V)
    mesh = V.mesh
    B = V.values ** (params.p + 1) * mesh.measures
    if np.any(~(B > 0)):
        raise DegenerateMass("mass matrix has non-positive diagonal entries (V vanishes or is negative)")
    A = assemble_weighted_stiffness(V, 2.0)
    return Pencil(A=A, B=B, V=V, params=params)


def default_zero_tol(mesh, params):
    """``1e-6 max(1, |1-p|)`` plus a term tracking the ``O(h^2)`` discretisation error."""
    return 1e-6 * max(1.0, abs(1.0 - params.p)) + ZERO_TOL_CALIBRATION * mesh.spacing ** 2


def solve_eigens(pencil, k, zero_tol=None, method="auto"):
    """The ``k`` smallest eigenpairs, reported as eigenvalues of ``L_V``.

    ``method="auto"`` uses a dense congruence solve up to ``DENSE_LIMIT``
    cells and shift-invert Lanczos above that; ``"dense"`` and ``"sparse"``
    force one path. The sparse path never forms ``B^{-1/2}``, so ``auto``
    also takes it when ``max(B)/min(B)`` exceeds ``DENSE_MASS_RANGE``.
    """
    if method not in ("auto", "dense", "sparse"):
        raise ValidationError(f"unknown method {method!r}")
    mesh = pencil.mesh
    N = mesh.ncells
    k = int(k)
    if not 1 <= k <= N:
        raise ValidationError(f"k must lie in [1, {N}], got {k}")
    if zero_tol is None:
        zero_tol = default_zero_tol(mesh, pencil.params)
    if zero_tol <= 0:
        raise ValidationError("zero_tol must be positive")
    shift = pencil.params.p - 1.0
    B = pencil.B
    dense_ok = N <= DENSE_LIMIT and B.max() <= DENSE_MASS_RANGE * B.min()
    if method == "dense" or (method == "auto" and dense_ok):
        s = 1.0 / np.sqrt(B)
        C = pencil.A.matrix.toarray()
        C = (C * s[:, None]) * s[None, :]
        try:
            nu, Y = sla.eigh(C, subset_by_index=[0, k - 1])
        except (sla.LinAlgError, ValueError) as exc:
            raise EigensolverFailure(str(exc)) from exc
        X = Y * s[:, None]
    else:
        if k >= N - 1:
            raise ValidationError("sparse path needs k < N - 1")
        # shift at lambda = 1 - p - 1, i.e. nu = -1, keeps A - sigma B definite
        try:
            nu, X = spla.eigsh(pencil.A.matrix.tocsc(), k=k, M=sp.diags(B).tocsc(), sigma=-1.0, which="LM")
        except (spla.ArpackNoConvergence, spla.ArpackError) as exc:
            raise EigensolverFailure(str(exc)) from exc
        order = np.argsort(nu)
        nu, X = nu[order], X[:, order]
        X = _b_orthonormalize(X, B)
    # Rayleigh quotients from face differences: exact zero on constants and
    # free of the O(eps ||B^-1/2 A B^-1/2||) error of the dense solve
    nu = np.array([pencil.A.quadratic(X[:, i]) / float(np.sum(B * X[:, i] ** 2)) for i in range(k)])
    lam = nu - shift
    X = _fix_signs(X)
    G = X.T @ (B[:, None] * X)
    ortho = float(np.max(np.abs(G - np.eye(k))))
    I, K, lam_K = classify_spectrum(lam, zero_tol, allow_missing=True)
    return SpectralDecomposition(
        eigenvalues=lam,
        eigenfields=X,
        I=I,
        K=K,
        lambda_K=lam_K,
        zero_tol=float(zero_tol),
        V=pencil.V,
        params=pencil.params,
        orthonormality_error=ortho,
    )


def _b_orthonormalize(X, B):
    G = X.T @ (B[:, None] * X)
    L = np.linalg.cholesky(G)
    return np.linalg.solve(L, X.T).T


def _fix_signs(X):
    # deterministic orientation: largest-magnitude entry positive
    idx = np.argmax(np.abs(X), axis=0)
    sgn = np.sign(X[idx, np.arange(X.shape[1])])
    sgn[sgn == 0] = 1.0
    return X * sgn


def classify_spectrum(eigenvalues, zero_tol, allow_missing=False):
    """Counts ``(I, K)`` of unstable and neutral eigenvalues and the gap ``lambda_K``."""
    lam = np.asarray(eigenvalues, dtype=float)
    I = int(np.sum(lam < -zero_tol))
    K = int(np.sum(np.abs(lam) <= zero_tol))
    pos = lam[lam > zero_tol]
    if pos.size == 0:
        if allow_missing:
            return I, K, math.nan
        raise NoPositiveGap("no eigenvalue above zero_tol among those computed")
    return I, K, float(pos.min())


def project_modes(h, dec, V=None, params=None):
    """Coefficients ``y_i = <h, phi_i>_{p+1}`` for every computed mode."""
    V = dec.V if V is None else _profile_field(V)
    params = dec.params if params is None else params
    check_same_mesh(h, V, dec.V)
    w = h.values * V.values ** (params.p + 1) * V.mesh.measures
    return dec.eigenfields.T @ w


def reconstruct(coeffs, dec):
    return Field(dec.mesh, dec.eigenfields @ np.asarray(coeffs, dtype=float))


def weighted_l2(h, V, params):
    return math.sqrt(max(weighted_inner(h, h, V, params.p + 1), 0.0))


def ground_state_residual(V, params):
    """Relative residual of ``L_V 1 = (1 - p) 1``.

    Uses ``L_V h = -V^{-p} Laplace_h(h V) - p h``; with h = 1 the defect is
    ``-V^{-p} (Laplace_h V + V^p)`` measured in ``L^2_{p+1}`` and divided by
    ``||(1 - p) 1||_{p+1}``.
    """
    V = _profile_field(V)
    p = params.p
    v = V.values
    defect = residual(V, params) / v ** p
    num = math.sqrt(float(np.sum(defect ** 2 * v ** (p + 1) * V.mesh.measures)))
    den = abs(1.0 - p) * math.sqrt(float(np.sum(v ** (p + 1) * V.mesh.measures)))
    return num / den


def weighted_gradient_sq(h, V):
    """``||grad h||^2_{L^2_2}`` (V^2-weighted, interior faces only)."""
    return assemble_weighted_stiffness(V, 2.0).quadratic(h.values)


def hardy_ratio(h, V, params):
    """``||h||_{L^2} / (||h||_{L^2_{p+1}} + ||grad h||_{L^2_2})`` for one field."""
    l2 = math.sqrt(float(np.sum(h.values ** 2 * h.mesh.measures)))
    den = weighted_l2(h, V, params) + math.sqrt(weighted_gradient_sq(h, V))
    return l2 / den
