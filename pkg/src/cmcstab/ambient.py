"""Ambient 3-manifolds: simply connected space forms and the E(kappa, tau) family.

Every space is realized on a single coordinate chart ``(x, y, z)``:

* E(kappa, tau) kinds use the fibration chart
  ``g = lam^2 (dx^2 + dy^2) + (dz + tau*lam*(y dx - x dy))^2`` with
  ``lam = 1 / (1 + kappa (x^2 + y^2) / 4)``.  The base is a stereographic
  (kappa > 0), Euclidean (kappa = 0) or Poincare disk (kappa < 0) chart of
  B^2(kappa) and ``xi = d/dz`` is the unit Killing field.  For compact fibres
  (Berger sphere, S^2 x S^1) the ``z`` coordinate is periodic.
* Space forms use the conformal chart ``g = (1 + c |x|^2 / 4)^-2 delta``.

Metric derivatives up to second order are generated symbolically once per
chart family and evaluated with numpy, so curvature is computed from exact
derivatives rather than finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields
from functools import cache

import numpy as np
import sympy as sp

from .errors import (
    InvalidSpace,
    MismatchedBasePoints,
    NoKillingField,
    NotUnitVector,
    PointOutsideChart,
)

EPS_CHART = 1e-6
UNIT_TOL = 1e-10

SPACE_FORM = "SpaceForm"
PRODUCT_S2R = "ProductS2R"
PRODUCT_S2S1 = "ProductS2S1"
PRODUCT_H2R = "ProductH2R"
BERGER = "BergerSphere"
HEISENBERG = "Heisenberg"
SL2 = "Sl2Universal"

KINDS = (SPACE_FORM, PRODUCT_S2R, PRODUCT_S2S1, PRODUCT_H2R, BERGER, HEISENBERG, SL2)
HOMOGENEOUS_KINDS = KINDS[1:]

# Levi-Civita symbol
_EPS3 = np.zeros((3, 3, 3))
for _i, _j, _k in ((0, 1, 2), (1, 2, 0), (2, 0, 1)):
    _EPS3[_i, _j, _k] = 1.0
    _EPS3[_i, _k, _j] = -1.0


@dataclass(frozen=True)
class AmbientSpace:
    kind: str
    c: float = 0.0
    kappa: float = 0.0
    tau: float = 0.0
    circle_length: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpace(f"unknown space kind {self.kind!r}; expected one of {KINDS}")
        for name in ("c", "kappa", "tau"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidSpace(f"{name} must be finite")
        k, t = self.kappa, self.tau
        kind = self.kind
        if kind == SPACE_FORM:
            if k != 0.0 or t != 0.0:
                raise InvalidSpace("SpaceForm takes only the curvature c")
        else:
            if self.c != 0.0:
                raise InvalidSpace(f"{kind} does not take c")
            if kind == BERGER and not (k > 0 and t != 0):
                raise InvalidSpace("BergerSphere requires kappa > 0 and tau != 0")
            if kind == HEISENBERG and not (k == 0 and t != 0):
                raise InvalidSpace("Heisenberg requires kappa = 0 and tau != 0")
            if kind == SL2 and not (k < 0 and t != 0):
                raise InvalidSpace("Sl2Universal requires kappa < 0 and tau != 0")
            if kind in (PRODUCT_S2R, PRODUCT_S2S1) and not (k > 0 and t == 0):
                raise InvalidSpace(f"{kind} requires kappa > 0 and tau = 0")
            if kind == PRODUCT_H2R and not (k < 0 and t == 0):
                raise InvalidSpace("ProductH2R requires kappa < 0 and tau = 0")
            if k - 4 * t * t == 0:
                raise InvalidSpace("kappa - 4 tau^2 must be nonzero")
        if kind == PRODUCT_S2S1:
            if self.circle_length is None or not self.circle_length > 0:
                raise InvalidSpace("ProductS2S1 requires circle_length > 0")
        elif self.circle_length is not None:
            raise InvalidSpace(f"{kind} does not take circle_length")

    # -- constructors -------------------------------------------------
    @classmethod
    def space_form(cls, c):
        return cls(SPACE_FORM, c=float(c))

    @classmethod
    def homogeneous(cls, kappa, tau, circle_length=None):
        """Pick the E(kappa, tau) kind from the parameters (products default to x R)."""
        kappa, tau = float(kappa), float(tau)
        if tau == 0:
            if kappa > 0:
                kind = PRODUCT_S2R if circle_length is None else PRODUCT_S2S1
            else:
                kind = PRODUCT_H2R
        elif kappa > 0:
            kind = BERGER
        elif kappa == 0:
            kind = HEISENBERG
        else:
            kind = SL2
        return cls(kind, kappa=kappa, tau=tau, circle_length=circle_length)

    # -- descriptors --------------------------------------------------
    @property
    def is_homogeneous(self):
        return self.kind != SPACE_FORM

    @property
    def fiber_period(self):
        """Length of the closed fibre (z-period of the chart), or None for line fibres."""
        if self.kind == PRODUCT_S2S1:
            return float(self.circle_length)
        if self.kind == BERGER:
            return 8 * math.pi * abs(self.tau) / self.kappa
        return None

    def to_dict(self):
        d = {"kind": self.kind}
        if self.kind == SPACE_FORM:
            d["c"] = self.c
        else:
            d["kappa"] = self.kappa
            d["tau"] = self.tau
        if self.circle_length is not None:
            d["circle_length"] = self.circle_length
        return d

    @classmethod
    def from_dict(cls, d):
        allowed = {f.name for f in fields(cls)}
        unknown = set(d) - allowed
        if unknown:
            raise InvalidSpace(f"unknown space keys: {sorted(unknown)}")
        if "kind" not in d:
            raise InvalidSpace("space block requires 'kind'")
        kw = {k: float(v) for k, v in d.items() if k not in ("kind", "circle_length")}
        if d.get("circle_length") is not None:
            kw["circle_length"] = float(d["circle_length"])
        return cls(str(d["kind"]), **kw)

    # -- chart evaluation (vectorized over rows of coords) ---------------
    def _params(self):
        if self.kind == SPACE_FORM:
            return "conformal", self.c, 0.0
        return "fibration", self.kappa, self.tau

    def check_coords(self, coords):
        coords = np.atleast_2d(np.asarray(coords, dtype=float))
        if coords.shape[-1] != 3:
            raise PointOutsideChart("chart coordinates must have 3 components")
        if not np.all(np.isfinite(coords)):
            raise PointOutsideChart("non-finite chart coordinates")
        model, a, _ = self._params()
        r2 = np.sum(coords[:, :2] ** 2, axis=1) if model == "fibration" else np.sum(coords**2, axis=1)
        if a < 0:
            rmax = 2.0 / math.sqrt(-a)
            if np.any(np.sqrt(r2) >= rmax - EPS_CHART):
                raise PointOutsideChart(f"point within {EPS_CHART} of the chart boundary |x| = {rmax}")
        elif a > 0:
            # the pole of the stereographic chart sits at infinity; guard on the conformal factor
            lam = 1.0 / (1.0 + a * r2 / 4.0)
            if np.any(lam < EPS_CHART):
                raise PointOutsideChart("point too close to the stereographic pole")
        return coords

    def metric_derivatives(self, coords, order=2):
        """Return ``(g, dg, d2g)`` with ``dg[..., i, j, k] = d_k g_ij`` and
        ``d2g[..., i, j, k, l] = d_k d_l g_ij``."""
        coords = self.check_coords(coords)
        model, a, b = self._params()
        fns = _chart_functions(model)
        args = (coords[:, 0], coords[:, 1], coords[:, 2], a, b)
        n = coords.shape[0]
        out = [_evaluate(fns[0], args, n).reshape(n, 3, 3)]
        if order >= 1:
            out.append(_evaluate(fns[1], args, n).reshape(n, 3, 3, 3))
        if order >= 2:
            out.append(_evaluate(fns[2], args, n).reshape(n, 3, 3, 3, 3))
        return tuple(out)

    def metric(self, coords):
        return self.metric_derivatives(coords, order=0)[0]

    def christoffel(self, coords):
        """Gamma[..., a, b, c] = Gamma^a_{bc}."""
        g, dg = self.metric_derivatives(coords, order=1)
        ginv = np.linalg.inv(g)
        first = _first_kind(dg)
        return np.einsum("nad,ndbc->nabc", ginv, first)

    def riemann(self, coords):
        """Fully covariant tensor R[..., e, b, c, d] with
        <R(X, Y)Z, W> = R[e, b, c, d] W^e Z^b X^c Y^d."""
        g, dg, d2g = self.metric_derivatives(coords, order=2)
        ginv = np.linalg.inv(g)
        first = _first_kind(dg)  # Gamma_{dbc}
        # d_e Gamma_{dbc}
        dfirst = 0.5 * (
            np.einsum("ndcbe->ndbce", d2g)
            + np.einsum("ndbce->ndbce", d2g)
            - np.einsum("nbcde->ndbce", d2g)
        )
        dginv = -np.einsum("nam,nmpe,npd->nade", ginv, dg, ginv)
        gam = np.einsum("nad,ndbc->nabc", ginv, first)
        dgam = np.einsum("nade,ndbc->nabce", dginv, first) + np.einsum("nad,ndbce->nabce", ginv, dfirst)
        # R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb} + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
        rup = (
            np.einsum("nadbc->nabcd", dgam)
            - np.einsum("nacbd->nabcd", dgam)
            + np.einsum("nace,nedb->nabcd", gam, gam)
            - np.einsum("nade,necb->nabcd", gam, gam)
        )
        return np.einsum("nea,nabcd->nebcd", g, rup)

    def killing(self, coords):
        if not self.is_homogeneous:
            raise NoKillingField("space forms carry no distinguished unit Killing field")
        coords = self.check_coords(coords)
        xi = np.zeros_like(coords)
        xi[:, 2] = 1.0
        return xi

    def inner(self, coords, X, Y, g=None):
        if g is None:
            g = self.metric(coords)
        return np.einsum("nij,ni,nj->n", g, np.atleast_2d(X), np.atleast_2d(Y))

    def cross(self, coords, X, Y, g=None):
        """Metric vector product, oriented so that d/dx, d/dy, d/dz is positive."""
        if g is None:
            g = self.metric(coords)
        vol = np.sqrt(np.linalg.det(g))
        low = vol[:, None] * np.einsum("dbc,nb,nc->nd", _EPS3, np.atleast_2d(X), np.atleast_2d(Y))
        return np.einsum("nad,nd->na", np.linalg.inv(g), low)

    # -- closed-form curvature quantities ----------------------------------
    def ricci_from_nxi(self, nxi):
        """Ric(X, X) for unit X with <X, xi> = nxi."""
        if self.kind == SPACE_FORM:
            return np.full_like(np.asarray(nxi, dtype=float), 2 * self.c)
        k, t = self.kappa, self.tau
        return k - 2 * t * t + np.asarray(nxi) ** 2 * (4 * t * t - k)

    def sectional_from_nxi(self, nxi):
        """Sectional curvature of the plane with unit normal nu, <nu, xi> = nxi."""
        if self.kind == SPACE_FORM:
            return np.full_like(np.asarray(nxi, dtype=float), self.c)
        k, t = self.kappa, self.tau
        return t * t + np.asarray(nxi) ** 2 * (k - 4 * t * t)

    def sectional_range(self):
        if self.kind == SPACE_FORM:
            return self.c, self.c
        t2 = self.tau**2
        ends = (t2, self.kappa - 3 * t2)
        return min(ends), max(ends)


def _first_kind(dg):
    # Gamma_{dbc} = (d_b g_dc + d_c g_db - d_d g_bc) / 2
    return 0.5 * (
        np.einsum("ndcb->ndbc", dg) + np.einsum("ndbc->ndbc", dg) - np.einsum("nbcd->ndbc", dg)
    )


def _evaluate(fn, args, n):
    vals = fn(*args)
    return np.stack([np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in vals], axis=-1)


@cache
def _chart_functions(model):
    x, y, z, a, b = sp.symbols("x y z a b", real=True)
    X = (x, y, z)
    if model == "fibration":
        lam = 1 / (1 + a * (x**2 + y**2) / 4)
        w = (b * lam * y, -b * lam * x, sp.Integer(1))
        g = sp.Matrix(3, 3, lambda i, j: (lam**2 if (i == j and i < 2) else 0) + w[i] * w[j])
    elif model == "conformal":
        lam = 1 / (1 + a * (x**2 + y**2 + z**2) / 4)
        g = lam**2 * sp.eye(3)
    else:
        raise ValueError(model)
    g0 = [g[i, j] for i in range(3) for j in range(3)]
    g1 = [sp.diff(g[i, j], X[k]) for i in range(3) for j in range(3) for k in range(3)]
    g2 = [
        sp.diff(g[i, j], X[k], X[m]) for i in range(3) for j in range(3) for k in range(3) for m in range(3)
    ]
    syms = (x, y, z, a, b)
    return tuple(sp.lambdify(syms, exprs, modules="numpy", cse=True) for exprs in (g0, g1, g2))


# -- point and vector types ------------------------------------------------


@dataclass(frozen=True)
class AmbientPoint:
    coords: tuple
    chart_id: int = 0

    def __post_init__(self):
        object.__setattr__(self, "coords", tuple(float(c) for c in self.coords))
        if len(self.coords) != 3:
            raise PointOutsideChart("a chart point has three coordinates")
        if self.chart_id != 0:
            raise PointOutsideChart(f"unknown chart id {self.chart_id}")

    @property
    def array(self):
        return np.asarray(self.coords)[None, :]


@dataclass(frozen=True)
class AmbientVector:
    base: AmbientPoint
    components: np.ndarray = field(compare=False)

    def __post_init__(self):
        comp = np.asarray(self.components, dtype=float).reshape(3)
        if not np.all(np.isfinite(comp)):
            raise ValueError("vector components must be finite")
        object.__setattr__(self, "components", comp)

    def __neg__(self):
        return AmbientVector(self.base, -self.components)


def _same_base(*vectors):
    base = vectors[0].base
    for v in vectors[1:]:
        if v.base != base:
            raise MismatchedBasePoints("vectors are based at different points")
    return base


def norm(space, X):
    p = X.base.array
    return float(np.sqrt(space.inner(p, X.components, X.components)[0]))


def _require_unit(space, X):
    if abs(norm(space, X) - 1.0) > UNIT_TOL:
        raise NotUnitVector(f"|X| = {norm(space, X)!r} is not 1")


def metric_at(space, p):
    return space.metric(p.array)[0]


def christoffel_at(space, p):
    return space.christoffel(p.array)[0]


def curvature_4tensor(space, p, X, Y, Z, W):
    """<R(X, Y)Z, W> from the chart Christoffel symbols."""
    base = _same_base(X, Y, Z, W)
    if base != p:
        raise MismatchedBasePoints("vectors are not based at p")
    R = space.riemann(p.array)[0]
    return float(np.einsum("ebcd,e,b,c,d->", R, W.components, Z.components, X.components, Y.components))


def curvature_closed_form(space, X, Y, Z, W):
    """<R(X, Y)Z, W> from the invariant formula for E(kappa, tau) or a space form."""
    base = _same_base(X, Y, Z, W)
    p = base.array
    g = space.metric(p)[0]

    def ip(u, v):
        return float(u @ g @ v)

    x, y, z, w = (v.components for v in (X, Y, Z, W))
    if space.kind == SPACE_FORM:
        return space.c * (ip(y, z) * ip(x, w) - ip(x, z) * ip(y, w))
    k, t = space.kappa, space.tau
    xi = space.killing(p)[0]
    xx, yx, zx, wx = ip(x, xi), ip(y, xi), ip(z, xi), ip(w, xi)
    return (k - 3 * t * t) * (ip(y, z) * ip(x, w) - ip(x, z) * ip(y, w)) + (k - 4 * t * t) * (
        xx * zx * ip(y, w) - yx * zx * ip(x, w) + ip(x, z) * yx * wx - ip(y, z) * xx * wx
    )


def ricci_quadratic(space, X):
    _require_unit(space, X)
    if space.kind == SPACE_FORM:
        return 2.0 * space.c
    p = X.base.array
    nxi = space.inner(p, X.components, space.killing(p)[0])[0]
    return float(space.ricci_from_nxi(nxi))


def sectional(space, nu):
    _require_unit(space, nu)
    if space.kind == SPACE_FORM:
        return float(space.c)
    p = nu.base.array
    nxi = space.inner(p, nu.components, space.killing(p)[0])[0]
    return float(space.sectional_from_nxi(nxi))


def killing_at(space, p):
    return AmbientVector(p, space.killing(p.array)[0])


def vector_product(space, X, Y):
    base = _same_base(X, Y)
    return AmbientVector(base, space.cross(base.array, X.components, Y.components)[0])


def sectional_lower_bound(space):
    return float(space.sectional_range()[0])


def orthonormal_frame(space, p, seed_vectors):
    """Gram-Schmidt in the chart metric; returns an (3, 3) array of row vectors."""
    g = space.metric(np.asarray(p).reshape(1, 3))[0]
    out = []
    for v in np.asarray(seed_vectors, dtype=float):
        for e in out:
            v = v - (e @ g @ v) * e
        out.append(v / math.sqrt(v @ g @ v))
    return np.array(out)


# -- text serialization of space blocks ------------------------------------


def dumps_space(space):
    lines = ["[space]"]
    for key, value in space.to_dict().items():
        lines.append(f"{key} = {value!r}" if not isinstance(value, str) else f'{key} = "{value}"')
    return "\n".join(lines) + "\n"


def loads_space(text):
    from .config import load_toml_text

    data = load_toml_text(text)
    if set(data) != {"space"}:
        raise InvalidSpace("expected a single [space] block")
    return AmbientSpace.from_dict(data["space"])
