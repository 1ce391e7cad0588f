"""Closed CMC model surfaces, their triangulations and per-vertex geometry.

An immersion maps a parameter domain into the chart of an ambient space.  Tori
use a doubly periodic rectangle ``[0, U) x [0, V)``; spheres use the unit sphere
of R^3 and are triangulated by icosahedral subdivision.  All first and second
derivatives are symbolic (sympy, lambdified once per surface).

Normal orientation: ``N`` follows the orientation of the parameter frame, so
that round spheres carry the inner normal and ``H >= 0`` for every built-in
constructor.  Theorems only involve ``H^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from . import kernels
from .ambient import (
    _EPS3,
    BERGER,
    PRODUCT_S2R,
    PRODUCT_S2S1,
    SPACE_FORM,
    AmbientPoint,
    AmbientSpace,
    AmbientVector,
)
from .errors import (
    ChartGuardViolation,
    DegenerateImmersion,
    NonClosedMesh,
    PointOutsideChart,
    UnsupportedSpace,
)

CMC_TOL = 1e-8
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(4)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def _stack(fn, args, n, shape):
    vals = fn(*args)
    flat = np.stack([np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in vals], axis=-1)
    return flat.reshape((n,) + shape)


class Immersion:
    """Base class: ``derivatives(params)`` returns ``(psi, J, D2)`` with shapes
    (n, 3), (n, 3, 2), (n, 3, 2, 2)."""

    topology = None

    def __init__(self, space, name, info=None, cmc=True, umbilic=False, normal_sign=1.0):
        self.space = space
        self.name = name
        self.info = dict(info or {})
        self.cmc = cmc
        self.umbilic = umbilic
        self.normal_sign = normal_sign

    def derivatives(self, params):
        raise NotImplementedError

    def eval(self, params):
        return self.derivatives(params)[0]


class TorusImmersion(Immersion):
    topology = "torus"

    def __init__(self, space, exprs, u, v, period_u, period_v, name, **kw):
        super().__init__(space, name, **kw)
        self.exprs = tuple(exprs)
        self.symbols = (u, v)
        self.period = (float(period_u), float(period_v))
        jac = [sp.diff(e, w) for e in exprs for w in (u, v)]
        hess = [sp.diff(e, a, b) for e in exprs for a in (u, v) for b in (u, v)]
        self._fns = tuple(sp.lambdify((u, v), list(x), modules="numpy", cse=True) for x in (exprs, jac, hess))

    def derivatives(self, params):
        params = np.atleast_2d(np.asarray(params, dtype=float))
        n = len(params)
        args = (params[:, 0], params[:, 1])
        psi = _stack(self._fns[0], args, n, (3,))
        J = _stack(self._fns[1], args, n, (3, 2))
        D2 = _stack(self._fns[2], args, n, (3, 2, 2))
        return psi, J, D2

    def jacobian(self, params):
        params = np.atleast_2d(params)
        return _stack(self._fns[1], (params[:, 0], params[:, 1]), len(params), (3, 2))

    def edge_speed_points(self, start, delta):
        """Quadrature points and velocity vectors along straight parameter segments."""
        pts = start[:, None, :] + _GL_NODES[None, :, None] * delta[:, None, :]
        vel = np.broadcast_to(delta[:, None, :], pts.shape)
        return pts.reshape(-1, 2), vel.reshape(-1, 2)


class SphereImmersion(Immersion):
    """Surface parametrized by the unit sphere through ``F: R^3 -> chart``."""

    topology = "sphere"

    def __init__(self, space, exprs, X, name, **kw):
        super().__init__(space, name, **kw)
        self.exprs = tuple(exprs)
        jac = [sp.diff(e, w) for e in exprs for w in X]
        hess = [sp.diff(e, a, b) for e in exprs for a in X for b in X]
        self._fns = tuple(sp.lambdify(X, list(x), modules="numpy", cse=True) for x in (exprs, jac, hess))

    def _F(self, p):
        n = len(p)
        args = (p[:, 0], p[:, 1], p[:, 2])
        return (
            _stack(self._fns[0], args, n, (3,)),
            _stack(self._fns[1], args, n, (3, 3)),
            _stack(self._fns[2], args, n, (3, 3, 3)),
        )

    @staticmethod
    def tangent_frame(p):
        """Orthonormal tangent frame (e1, e2) at unit vectors p with e1 x e2 = -p."""
        p = np.atleast_2d(p)
        axis = np.where(np.abs(p[:, [0]]) < 0.9, [[1.0, 0.0, 0.0]], [[0.0, 1.0, 0.0]])
        e1 = np.cross(axis, p)
        e1 /= np.linalg.norm(e1, axis=1, keepdims=True)
        e2 = np.cross(e1, p)
        return e1, e2

    def derivatives(self, params):
        p = np.atleast_2d(np.asarray(params, dtype=float))
        p = p / np.linalg.norm(p, axis=1, keepdims=True)
        psi, DF, D2F = self._F(p)
        e = np.stack(self.tangent_frame(p), axis=-1)  # (n, 3, 2)
        J = np.einsum("nij,nja->nia", DF, e)
        D2 = np.einsum("nijk,nja,nkb->niab", D2F, e, e)
        radial = np.einsum("nij,nj->ni", DF, p)
        D2 = D2 - radial[:, :, None, None] * np.eye(2)[None, None]
        return psi, J, D2

    def edge_speed_points(self, start, end):
        """Quadrature points (on R^3) and velocities along great-circle arcs."""
        cos_t = np.clip(np.sum(start * end, axis=1), -1.0, 1.0)
        theta = np.arccos(cos_t)
        sin_t = np.sin(theta)
        s = _GL_NODES[None, :, None]
        th = theta[:, None, None]
        a, b = start[:, None, :], end[:, None, :]
        pts = (np.sin((1 - s) * th) * a + np.sin(s * th) * b) / sin_t[:, None, None]
        vel = th * (-np.cos((1 - s) * th) * a + np.cos(s * th) * b) / sin_t[:, None, None]
        return pts.reshape(-1, 3), vel.reshape(-1, 3)

    def chart_jacobian(self, pts):
        return _stack(self._fns[1], (pts[:, 0], pts[:, 1], pts[:, 2]), len(pts), (3, 3))


# -- local differential geometry -------------------------------------------------


def local_geometry(imm, params):
    """Per-point extrinsic and intrinsic data of the immersion at ``params``."""
    space = imm.space
    psi, J, D2 = imm.derivatives(params)
    try:
        g, dg = space.metric_derivatives(psi, order=1)
    except PointOutsideChart as exc:
        raise ChartGuardViolation(str(exc)) from None
    ginv = np.linalg.inv(g)
    from .ambient import _first_kind

    gam = np.einsum("nad,ndbc->nabc", ginv, _first_kind(dg))
    first = np.einsum("nia,nij,njb->nab", J, g, J)
    det = np.linalg.det(first)
    scale = np.einsum("naa->n", first) ** 2
    if np.any(det <= 1e-14 * scale):
        raise DegenerateImmersion("tangent vectors are linearly dependent")
    ncov = np.einsum("kij,ni,nj->nk", _EPS3, J[:, :, 0], J[:, :, 1])
    N = np.einsum("nab,nb->na", ginv, ncov)
    N = imm.normal_sign * N / np.sqrt(np.einsum("na,na->n", ncov, N))[:, None]
    V = D2 + np.einsum("ncde,nda,neb->ncab", gam, J, J)
    second = np.einsum("ncab,ncf,nf->nab", V, g, N)
    A = np.linalg.solve(first, second)
    H = 0.5 * np.einsum("naa->n", A)
    A2 = np.einsum("nab,nba->n", A, A)
    if space.is_homogeneous:
        xi = space.killing(psi)
        nxi = np.einsum("nij,ni,nj->n", g, N, xi)
    else:
        nxi = np.full(len(psi), np.nan)
    kbar = space.sectional_from_nxi(nxi)
    ric = space.ricci_from_nxi(nxi)
    K = 2 * H**2 + kbar - 0.5 * A2
    return {
        "points": psi,
        "N": N,
        "first": first,
        "second": second,
        "A": A,
        "H": H,
        "A_norm2": A2,
        "phi_norm2": A2 - 2 * H**2,
        "nxi": nxi,
        "kbar": kbar,
        "ric": ric,
        "K": K,
        "q": A2 + ric,
    }


def _param_array(imm, params):
    return np.atleast_2d(np.asarray(params, dtype=float))


def shape_operator(imm, *param):
    """Shape operator (as a 2x2 matrix in the parameter frame) and unit normal."""
    p = _param_array(imm, param if len(param) > 1 else param[0])
    geo = local_geometry(imm, p)
    base = AmbientPoint(geo["points"][0])
    return geo["A"][0], AmbientVector(base, geo["N"][0])


def gauss_curvature(imm, *param):
    p = _param_array(imm, param if len(param) > 1 else param[0])
    return float(local_geometry(imm, p)["K"][0])


# -- meshes -------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class GeometryMesh:
    space: AmbientSpace
    immersion: Immersion
    params: np.ndarray
    triangles: np.ndarray
    lengths: np.ndarray  # (m, 3), edge opposite each corner
    data: dict = field(repr=False)
    tri_areas: np.ndarray = field(repr=False, default=None)
    mass: np.ndarray = field(repr=False, default=None)

    def __post_init__(self):
        areas = kernels.triangle_areas(self.lengths)
        mass = np.bincount(self.triangles.ravel(), weights=np.repeat(areas / 3.0, 3), minlength=self.nv)
        object.__setattr__(self, "tri_areas", areas)
        object.__setattr__(self, "mass", mass)

    def __getattr__(self, name):
        data = self.__dict__.get("data")
        if data is not None and name in data:
            return data[name]
        raise AttributeError(name)

    @property
    def nv(self):
        return len(self.params)

    @property
    def nf(self):
        return len(self.triangles)

    @property
    def area(self):
        return float(np.sum(self.tri_areas))

    def edges(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return e

    @property
    def euler_characteristic(self):
        e = np.sort(self.edges(), axis=1)
        n_edges = len(np.unique(e, axis=0))
        return self.nv - n_edges + self.nf

    @property
    def genus(self):
        return 1 - self.euler_characteristic // 2

    @property
    def H_mean(self):
        return float(np.mean(self.H))

    @property
    def is_cmc(self):
        if not self.immersion.cmc:
            return False
        Hbar = self.H_mean
        return bool(np.max(np.abs(self.H - Hbar)) / (1 + abs(Hbar)) < CMC_TOL)

    def min_angle(self):
        l2 = self.lengths**2
        out = np.inf
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            c = (l2[:, i] + l2[:, j] - l2[:, k]) / (2 * self.lengths[:, i] * self.lengths[:, j])
            out = min(out, float(np.min(np.arccos(np.clip(c, -1, 1)))))
        return out

    def check_closed(self):
        """Every directed edge must be matched by exactly one opposite edge."""
        e = self.edges()
        keys = e[:, 0].astype(np.int64) * self.nv + e[:, 1]
        rev = e[:, 1].astype(np.int64) * self.nv + e[:, 0]
        if len(np.unique(keys)) != len(keys):
            raise NonClosedMesh("an oriented edge appears twice (inconsistent orientation)")
        if not np.array_equal(np.sort(keys), np.sort(rev)):
            raise NonClosedMesh("some edges are not shared by exactly two triangles")

    def angle_defect_curvature(self):
        sums = kernels.angle_sums(self.triangles, self.lengths, self.nv)
        return (2 * math.pi - sums) / self.mass


def _edge_lengths_torus(imm, params, tri):
    U, V = imm.period
    starts, deltas = [], []
    for k in range(3):
        i, j = tri[:, (k + 1) % 3], tri[:, (k + 2) % 3]
        d = params[j] - params[i]
        d[:, 0] -= U * np.round(d[:, 0] / U)
        d[:, 1] -= V * np.round(d[:, 1] / V)
        starts.append(params[i])
        deltas.append(d)
    start = np.concatenate(starts)
    delta = np.concatenate(deltas)
    pts, vel = imm.edge_speed_points(start, delta)
    J = imm.jacobian(pts)
    tangent = np.einsum("nia,na->ni", J, vel)
    return _integrate_speed(imm.space, imm.eval(pts), tangent, len(start)).reshape(3, -1).T


def _edge_lengths_sphere(imm, params, tri):
    starts, ends = [], []
    for k in range(3):
        starts.append(params[tri[:, (k + 1) % 3]])
        ends.append(params[tri[:, (k + 2) % 3]])
    start, end = np.concatenate(starts), np.concatenate(ends)
    pts, vel = imm.edge_speed_points(start, end)
    tangent = np.einsum("nij,nj->ni", imm.chart_jacobian(pts), vel)
    return _integrate_speed(imm.space, imm.eval(pts), tangent, len(start)).reshape(3, -1).T


def _integrate_speed(space, chart_pts, tangent, n_edges):
    try:
        g = space.metric(chart_pts)
    except PointOutsideChart as exc:
        raise ChartGuardViolation(str(exc)) from None
    speed = np.sqrt(np.einsum("nij,ni,nj->n", g, tangent, tangent)).reshape(n_edges, -1)
    return speed @ _GL_WEIGHTS


def torus_grid(nu, nv, period_u, period_v, first_fundamental=None):
    """Periodic grid on ``[0, U) x [0, V)`` split along the shorter quad diagonal."""
    uu, vv = np.meshgrid(np.arange(nu) * (period_u / nu), np.arange(nv) * (period_v / nv), indexing="ij")
    params = np.column_stack([uu.ravel(), vv.ravel()])
    i, j = np.meshgrid(np.arange(nu), np.arange(nv), indexing="ij")
    i, j = i.ravel(), j.ravel()

    def vid(a, b):
        return (a % nu) * nv + (b % nv)

    a, b, c, d = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
    du, dv = period_u / nu, period_v / nv
    use_ac = np.ones(len(a), dtype=bool)
    if first_fundamental is not None:
        centers = params + 0.5 * np.array([du, dv])
        I = first_fundamental(centers)
        d1 = np.array([du, dv])
        d2 = np.array([-du, dv])
        use_ac = np.einsum("nab,a,b->n", I, d1, d1) <= np.einsum("nab,a,b->n", I, d2, d2)
    tri = np.where(
        use_ac[:, None, None],
        np.stack([np.column_stack([a, b, c]), np.column_stack([a, c, d])], axis=1),
        np.stack([np.column_stack([a, b, d]), np.column_stack([b, c, d])], axis=1),
    ).reshape(-1, 3)
    return params, tri


def icosphere(level):
    """Unit icosphere by midpoint subdivision, outward-oriented triangles."""
    t = (1.0 + math.sqrt(5.0)) / 2.0
    verts = [
        (-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0),
        (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
        (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    V = np.array(verts, dtype=float)
    V /= np.linalg.norm(V, axis=1, keepdims=True)
    F = np.array(faces, dtype=np.int64)
    for _ in range(level):
        e = np.concatenate([F[:, [0, 1]], F[:, [1, 2]], F[:, [2, 0]]])
        e_sorted = np.sort(e, axis=1)
        uniq, inv = np.unique(e_sorted, axis=0, return_inverse=True)
        inv = inv.ravel()
        mid = V[uniq[:, 0]] + V[uniq[:, 1]]
        mid /= np.linalg.norm(mid, axis=1, keepdims=True)
        m = len(F)
        m01, m12, m20 = (inv[:m] + len(V), inv[m : 2 * m] + len(V), inv[2 * m :] + len(V))
        V = np.vstack([V, mid])
        a, b, c = F[:, 0], F[:, 1], F[:, 2]
        F = np.concatenate(
            [
                np.column_stack([a, m01, m20]),
                np.column_stack([b, m12, m01]),
                np.column_stack([c, m20, m12]),
                np.column_stack([m01, m12, m20]),
            ]
        )
    # rotate so the centroid of a face sits at the south pole (stereographic chart pole)
    target = V[F[0]].mean(axis=0)
    target /= np.linalg.norm(target)
    R = _rotation_onto(target, np.array([0.0, 0.0, -1.0]))
    return V @ R.T, F


def _rotation_onto(a, b):
    v = np.cross(a, b)
    c = float(a @ b)
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1.0 + c)


def _finish(imm, params, tri, lengths):
    geo = local_geometry(imm, params)
    mesh = GeometryMesh(imm.space, imm, params, tri, lengths, geo)
    mesh.check_closed()
    return mesh


def tessellate(imm, nu, nv):
    """Uniform periodic triangulation of a torus immersion."""
    if not isinstance(imm, TorusImmersion):
        raise TypeError("tessellate expects a torus immersion; use tessellate_sphere for spheres")
    if nu < 8 or nv < 8:
        raise ValueError("torus grids need at least 8 samples per direction")

    def first_fundamental(params):
        psi, J, _ = imm.derivatives(params)
        g = imm.space.metric(psi)
        return np.einsum("nia,nij,njb->nab", J, g, J)

    params, tri = torus_grid(nu, nv, *imm.period, first_fundamental=first_fundamental)
    lengths = _edge_lengths_torus(imm, params, tri)
    return _finish(imm, params, tri, lengths)


def tessellate_sphere(imm, level):
    if not isinstance(imm, SphereImmersion):
        raise TypeError("tessellate_sphere expects a sphere immersion")
    params, tri = icosphere(level)
    tri = tri[:, ::-1].copy()  # parameter frame has e1 x e2 = -p
    lengths = _edge_lengths_sphere(imm, params, tri)
    return _finish(imm, params, tri, lengths)


def build_mesh(imm, resolution):
    """Dispatch on topology: ``(nu, nv)`` for tori, ``(level,)`` for spheres."""
    resolution = tuple(resolution) if np.iterable(resolution) else (int(resolution),)
    if imm.topology == "torus":
        if len(resolution) == 1:
            resolution = resolution * 2
        return tessellate(imm, *resolution[:2])
    return tessellate_sphere(imm, resolution[0])


def area_and_genus(mesh):
    mesh.check_closed()
    return mesh.area, int(mesh.genus)


def gauss_bonnet_residual(mesh):
    mesh.check_closed()
    return float(abs(np.sum(mesh.mass * mesh.K) - 2 * math.pi * mesh.euler_characteristic))


# -- constructors -----------------------------------------------------------------


def _conformal_radius(c, rho):
    if c > 0:
        return 2 / math.sqrt(c) * math.tan(math.sqrt(c) * rho / 2)
    if c < 0:
        return 2 / math.sqrt(-c) * math.tanh(math.sqrt(-c) * rho / 2)
    return rho


def sphere_mean_curvature(c, rho):
    """H of the geodesic sphere of radius rho in M^3(c), inner normal."""
    if c > 0:
        return math.sqrt(c) / math.tan(math.sqrt(c) * rho)
    if c < 0:
        return math.sqrt(-c) / math.tanh(math.sqrt(-c) * rho)
    return 1.0 / rho


def sphere_radius_for_H(c, H):
    if c > 0:
        return (math.pi / 2 - math.atan(H / math.sqrt(c))) / math.sqrt(c)
    if c < 0:
        if H <= math.sqrt(-c):
            raise ValueError("geodesic spheres in hyperbolic space have H > sqrt(-c)")
        return math.atanh(math.sqrt(-c) / H) / math.sqrt(-c)
    if H <= 0:
        raise ValueError("round spheres in R^3 have H > 0")
    return 1.0 / H


def round_sphere(space, radius=None, H=None):
    """Geodesic sphere of geodesic radius ``radius`` (or mean curvature ``H``) in a space form."""
    if space.kind != SPACE_FORM:
        raise UnsupportedSpace("round_sphere lives in a space form")
    c = space.c
    if radius is None:
        if H is not None:
            radius = sphere_radius_for_H(c, H)
        else:
            radius = math.pi / (2 * math.sqrt(c)) if c > 0 else 1.0
    if c > 0 and not 0 < radius < math.pi / math.sqrt(c):
        raise ValueError("radius must lie in (0, pi/sqrt(c))")
    if radius <= 0:
        raise ValueError("radius must be positive")
    r = _conformal_radius(c, radius)
    lam = 1.0 / (1.0 + c * r * r / 4.0)
    if c > 0 and lam < 1e-6:
        raise ChartGuardViolation("sphere passes too close to the chart pole")
    X = sp.symbols("X Y Z", real=True)
    exprs = [r * w for w in X]
    info = {"radius": radius, "H": sphere_mean_curvature(c, radius)}
    return SphereImmersion(space, exprs, X, "round_sphere", info=info, umbilic=True)


def great_sphere(c=1.0):
    return round_sphere(AmbientSpace.space_form(c))


def clifford_torus(c, H=0.0):
    """CMC product torus S^1(r) x S^1(s) in S^3(c), r^2 + s^2 = 1/c, with mean curvature H."""
    if not c > 0:
        raise UnsupportedSpace("Clifford tori live in S^3(c), c > 0")
    space = AmbientSpace.space_form(c)
    R = 1 / math.sqrt(c)
    theta = 0.5 * (math.pi / 2 - math.atan(H * R))
    r, s = R * math.cos(theta), R * math.sin(theta)
    u, v = sp.symbols("u v", real=True)
    den = R - s * sp.sin(v)
    exprs = [2 * R * r * sp.cos(u) / den, 2 * R * r * sp.sin(u) / den, 2 * R * s * sp.cos(v) / den]
    info = {"c": c, "H": H, "r": r, "s": s}
    imm = TorusImmersion(space, exprs, u, v, 2 * math.pi, 2 * math.pi, "clifford_torus", info=info)
    _orient(imm, H, (0.3, 0.7))
    return imm


@dataclass(frozen=True)
class HopfTorusSpec:
    space: AmbientSpace
    c_gamma: float

    def __post_init__(self):
        if self.space.kind not in (BERGER, PRODUCT_S2S1):
            raise UnsupportedSpace("Hopf tori need a circle fibration (BergerSphere or ProductS2S1)")


def base_circle_radius(kappa, c_gamma):
    """Stereographic radius of the circle of geodesic curvature c_gamma in S^2(kappa)."""
    theta = math.pi / 2 - math.atan(c_gamma / math.sqrt(kappa))
    return 2 / math.sqrt(kappa) * math.tan(theta / 2)


def hopf_torus(spec, c_gamma=None):
    """Preimage of a base circle of geodesic curvature ``c_gamma`` under the fibration."""
    if not isinstance(spec, HopfTorusSpec):
        spec = HopfTorusSpec(spec, float(c_gamma))
    space = spec.space
    r0 = base_circle_radius(space.kappa, spec.c_gamma)
    u, v = sp.symbols("u v", real=True)
    exprs = [r0 * sp.cos(u), r0 * sp.sin(u), v]
    kappa = space.kappa
    length = 2 * math.pi * r0 / (1 + kappa * r0 * r0 / 4)
    info = {"c_gamma": spec.c_gamma, "base_radius": r0, "base_length": length, "fiber_length": space.fiber_period}
    imm = TorusImmersion(space, exprs, u, v, 2 * math.pi, space.fiber_period, "hopf_torus", info=info)
    _orient(imm, spec.c_gamma / 2, (0.1, 0.2))
    return imm


def slice_sphere(space, t=0.0):
    """Horizontal slice S^2(kappa) x {t}."""
    if space.kind not in (PRODUCT_S2R, PRODUCT_S2S1):
        raise UnsupportedSpace("horizontal slices live in S^2 x R or S^2 x S^1")
    R = 1 / math.sqrt(space.kappa)
    X = sp.symbols("X Y Z", real=True)
    exprs = [2 * R * X[0] / (1 + X[2]), 2 * R * X[1] / (1 + X[2]), sp.Float(t) + 0 * X[0]]
    return SphereImmersion(space, exprs, X, "slice_sphere", info={"t": t}, umbilic=True)


def perturbed(imm, eps, modes=(1, 2)):
    """Non-CMC stress surface: the model surface pushed by ``eps * f`` along its
    chart-Euclidean normal (the metric normal in conformal charts)."""
    if isinstance(imm, SphereImmersion):
        if imm.space.kind != SPACE_FORM:
            raise UnsupportedSpace("sphere perturbations are provided for space forms")
        X = sp.symbols("X Y Z", real=True)
        f = X[0] * X[1] + sp.Rational(1, 2) * X[2] ** modes[0]
        base = [sp.sympify(e) for e in imm.exprs]
        exprs = [e * (1 + eps * f) for e in base]
        return SphereImmersion(imm.space, exprs, X, imm.name + "_perturbed", info=dict(imm.info, eps=eps), cmc=False)
    u, v = imm.symbols
    base = sp.Matrix(imm.exprs)
    n = base.diff(u).cross(base.diff(v))
    n = n / sp.sqrt(n.dot(n))
    f = sp.cos(modes[0] * u) * sp.sin(modes[1] * v)
    exprs = list(base + eps * f * n)
    out = TorusImmersion(
        imm.space, exprs, u, v, *imm.period, imm.name + "_perturbed", info=dict(imm.info, eps=eps), cmc=False
    )
    out.normal_sign = imm.normal_sign
    return out


def _orient(imm, H_target, sample):
    H = local_geometry(imm, np.array([sample]))["H"][0]
    if H_target != 0 and np.sign(H) != np.sign(H_target) or H_target == 0 and H < -1e-12:
        imm.normal_sign = -imm.normal_sign


# -- export ----------------------------------------------------------------------

SIDECAR_COLUMNS = ("H", "A_norm2", "nxi", "K", "q")


def write_off(mesh, path, header=None):
    """OFF file with chart coordinates as the report frame."""
    lines = ["OFF"]
    for h in header or ():
        lines.append(f"# {h}")
    lines.append(f"{mesh.nv} {mesh.nf} 0")
    lines += [f"{x:.17g} {y:.17g} {z:.17g}" for x, y, z in mesh.points]
    lines += [f"3 {a} {b} {c}" for a, b, c in mesh.triangles]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sidecar(mesh, path, extra=None, header=None):
    """Per-vertex CSV with the geometric columns (plus optional extra columns)."""
    cols = {name: np.asarray(getattr(mesh, name)) for name in SIDECAR_COLUMNS}
    cols.update(extra or {})
    names = list(cols)
    with open(path, "w") as fh:
        fh.writelines(f"# {h}\n" for h in header or ())
        fh.write("vertex," + ",".join(names) + "\n")
        fh.writelines(f"{i}," + ",".join(f"{cols[n][i]:.17g}" for n in names) + "\n" for i in range(mesh.nv))
