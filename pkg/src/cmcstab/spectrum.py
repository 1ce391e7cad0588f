"""Discrete Jacobi operator and its lowest eigenpairs.

P1 finite elements with cotangent stiffness ``L`` (discretizing ``-Delta``),
lumped barycentric mass ``M`` and vertex-sampled potential
``Q = diag(M_i q_i)``, ``q = |A|^2 + Ric(N, N)``.  Eigenvalues follow the
convention ``J f + lambda f = 0``, i.e. ``(L - Q) x = lambda M x``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sps
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import splu

from . import kernels
from .config import CONVENTION
from .errors import (
    DisconnectedMesh,
    IndefiniteFirstEigenfunction,
    NegativeMassEntry,
    NonConstantH,
    NonPositiveEigenfunction,
    SolverNoConvergence,
    ZeroFunction,
)


@dataclass(frozen=True, eq=False)
class DiscreteJacobi:
    L: sps.csr_matrix
    M: np.ndarray  # lumped mass diagonal
    q: np.ndarray
    mesh: object = field(repr=False, default=None)

    @property
    def n(self):
        return len(self.M)

    @property
    def Q(self):
        return sps.diags(self.M * self.q)

    @property
    def A(self):
        """Matrix of the quadratic form -int f J f, i.e. L - Q."""
        return (self.L - self.Q).tocsr()

    @property
    def Mmat(self):
        return sps.diags(self.M)


def assemble_jacobi(mesh, potential_offset=0.0):
    """Assemble L, M and Q on a closed connected mesh.

    ``potential_offset`` shifts q by a constant; it exists only as a test hook for
    exercising the verification failure path.
    """
    nv = mesh.nv
    rows, cols, vals, mass, areas = kernels.assemble_cotan(mesh.triangles, mesh.lengths, nv)
    if np.any(~(areas > 0)) or np.any(~(mass > 0)):
        raise NegativeMassEntry("degenerate triangle produces a non-positive mass entry")
    L = sps.coo_matrix((vals, (rows, cols)), shape=(nv, nv)).tocsr()
    L.sum_duplicates()
    ncomp, _ = connected_components(L, directed=False)
    if ncomp != 1:
        raise DisconnectedMesh(f"mesh has {ncomp} connected components")
    q = np.asarray(mesh.q, dtype=float) + potential_offset
    return DiscreteJacobi(L, mass, q, mesh)


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # columns, M-orthonormal
    residuals: np.ndarray
    alpha: float
    rho_positive: bool
    iterations: int = 0
    sigma: float = float("nan")

    @property
    def lambda1(self):
        return float(self.eigenvalues[0])

    @property
    def rho(self):
        return self.eigenvectors[:, 0]

    def to_dict(self):
        return {
            "lambda": [float(x) for x in self.eigenvalues],
            "alpha": float(self.alpha),
            "rho_positive": bool(self.rho_positive),
            "residuals": [float(x) for x in self.residuals],
            "convention": CONVENTION,
        }

    def to_json(self, **extra):
        d = self.to_dict()
        d.update(extra)
        return json.dumps(d, indent=2, sort_keys=True)


def default_shift(op, bound=None):
    """One unit below min(bound, -max q); -max q is a certified lower limit for lambda_1."""
    floor = -float(np.max(op.q))
    if bound is not None:
        floor = min(floor, float(bound))
    return floor - 1.0


def _m_orthonormalize(Y, sqrtM):
    Qm, _ = np.linalg.qr(sqrtM[:, None] * Y)
    return Qm / sqrtM[:, None]


def _residuals(op, A, X, lam):
    R = A @ X - (op.M[:, None] * X) * lam[None, :]
    return np.sqrt(np.sum(R * R / op.M[:, None], axis=0))


def lowest_eigenpairs(op, k=5, tol=1e-9, max_iter=500, sigma=None, seed=0, block=None):
    """k smallest eigenpairs of (L - Q) x = lambda M x by shift-invert subspace iteration.

    Residuals are ``||(L - Q) x - lambda M x||_{M^-1}`` for M-normalized ``x``.
    """
    n = op.n
    k = int(min(k, n - 1))
    if k < 1 or not tol > 0:
        raise ValueError("need k >= 1 and tol > 0")
    A = op.A
    if sigma is None:
        sigma = default_shift(op)
    p = int(min(n, block or max(2 * k, k + 8)))
    lu = splu((A - sigma * op.Mmat).tocsc())
    sqrtM = np.sqrt(op.M)
    X = _m_orthonormalize(np.random.default_rng(seed).standard_normal((n, p)), sqrtM)
    best = np.inf
    for it in range(1, max_iter + 1):
        Y = _m_orthonormalize(lu.solve(op.M[:, None] * X), sqrtM)
        Ah = Y.T @ (A @ Y)
        theta, C = la.eigh(0.5 * (Ah + Ah.T))
        X = Y @ C
        res = _residuals(op, A, X[:, :k], theta[:k])
        best = min(best, float(res.max()))
        if np.all(res < tol):
            break
    else:
        raise SolverNoConvergence(
            f"no convergence after {max_iter} iterations (best residual {best:.3e})",
            iterations=max_iter,
            best_residual=best,
        )
    vecs = X[:, :k].copy()
    lam = theta[:k].copy()
    rho = vecs[:, 0]
    if rho[np.argmax(np.abs(rho))] < 0:
        vecs[:, 0] = rho = -rho
    positive = bool(np.all(rho > 0))
    if not positive:
        raise IndefiniteFirstEigenfunction(
            "first eigenfunction changes sign; the discretization is too coarse"
        )
    alpha = alpha_invariant(op.mesh, rho) if op.mesh is not None else float("nan")
    return SpectrumResult(lam, vecs, res, alpha, positive, it, float(sigma))


def dense_eigenpairs(op, k=5):
    """Dense generalized eigendecomposition (LAPACK) used as an independent oracle."""
    A = op.A.toarray()
    w, V = la.eigh(A, np.diag(op.M), subset_by_index=[0, min(k, op.n) - 1])
    return w, V


def rayleigh_quotient(op, f):
    f = np.asarray(f, dtype=float)
    den = float(f @ (op.M * f))
    if not den > 0:
        raise ZeroFunction("the test function vanishes")
    return float(f @ (op.A @ f)) / den


def alpha_invariant(mesh, rho):
    """Face sum of rho^-2 |grad rho|^2 with P1 gradients and face-averaged rho."""
    rho = np.asarray(rho, dtype=float)
    if not np.all(rho > 0):
        raise NonPositiveEigenfunction("rho must be strictly positive")
    return kernels.alpha_sum(mesh.triangles, mesh.lengths, rho)


def identity_terms(mesh, result):
    """Both right-hand sides of the first-eigenvalue identity (general and E(kappa, tau) form)."""
    if not mesh.is_cmc:
        raise NonConstantH("mean curvature is not constant on this mesh")
    space = mesh.space
    H = mesh.H_mean
    area = float(np.sum(mesh.mass))
    g = mesh.genus
    integral = float(np.sum(mesh.mass * (2 * mesh.kbar + mesh.ric)))
    base = result.alpha + 8 * math.pi * (g - 1)
    out = {"general": -4 * H * H - (base + integral) / area}
    if space.is_homogeneous:
        k, t = space.kappa, space.tau
        nxi2 = float(np.sum(mesh.mass * mesh.nxi**2))
        out["homogeneous"] = -4 * H * H - k - (base + (k - 4 * t * t) * nxi2) / area
    return out


def lambda1_identity_residual(mesh, result):
    terms = identity_terms(mesh, result)
    rhs = terms.get("homogeneous", terms["general"])
    return abs(result.lambda1 - rhs)


def is_strongly_stable(result, tol=1e-6):
    lam = result.lambda1 if isinstance(result, SpectrumResult) else float(result)
    if lam > tol:
        return "stable"
    if lam < -tol:
        return "unstable"
    return "marginal"


def solve(mesh, k=5, tol=1e-9, max_iter=500, shift_policy="bound", seed=0, potential_offset=0.0):
    """Assemble and solve in one step; returns (operator, result)."""
    op = assemble_jacobi(mesh, potential_offset=potential_offset)
    bound = None
    if shift_policy == "bound":
        from .bounds import sharpest_bound

        bound = sharpest_bound(mesh)
    sigma = default_shift(op, bound)
    return op, lowest_eigenpairs(op, k=k, tol=tol, max_iter=max_iter, sigma=sigma, seed=seed)
