"""Cauchy-type integrals, principal values and Plemelj boundary operators.

Conventions.  The kernel is E(y) = bar(Y)/|y|^{n+1} for y in R^{n+1}
identified with the paravector Y, and integrals carry the normalization
1/V_n with V_n = unit_sphere_area(n) the area of S^n.  Left integrals
are (1/V_n) int E(x-w) dsigma f(x); right integrals put the density on
the left of the measure.  dsigma at a node is nu_i w_i.

Principal values default to the regularized form: the desingularized
sum over x != t of E(x-t) nu w [f(x) - f(t)] plus f(t)/2, plus a local
correction for the singular node's cell computed from the tangential
gradient of f (the subtracted integrand has a finite, direction-
dependent limit at x = t; dropping the cell outright costs an O(h)
term with a computable coefficient).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from . import _accel
from .clifford_core import (
    Multivector,
    Paravector,
    SingularInputError,
    get_context,
)
from .surface import CapExclusion, SurfaceMesh, exclude_cap

RICHARDSON_RATIO = 2.0   # step shrinks by 1/2 per term
RICHARDSON_TERMS = 4
NEAR_BAND_FACTOR = 3.0   # dist < 3h => unreliable direct quadrature


class InconclusiveSpanError(ValueError):
    """Raw span value too far from every admissible value {0, 1/2, 1}."""


def unit_sphere_area(n: int) -> float:
    """Area of the unit sphere S^n in R^{n+1}: 2 pi^{(n+1)/2} / Gamma((n+1)/2)."""
    if n < 1:
        raise ValueError("n must be >= 1")
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0)


def kernel_E(x, w) -> Paravector:
    """Cauchy kernel E(x - w) = bar(X - W) / |x - w|^{n+1}."""
    x = np.asarray(x, dtype=np.float64)
    w = np.asarray(w, dtype=np.float64)
    d = x - w
    r2 = float(d @ d)
    if r2 == 0.0:
        raise SingularInputError("Cauchy kernel evaluated at coincident points")
    n = d.shape[0] - 1
    scale = r2 ** (-0.5 * (n + 1))
    return Paravector(d[0] * scale, -d[1:] * scale)


def kernel_E_rows(points, w):
    """E(x_j - w) paravector component rows for an (N, n+1) point array."""
    points = np.asarray(points, dtype=np.float64)
    n = points.shape[1] - 1
    return _accel._kernel_E_block(np.atleast_2d(np.asarray(w, float)),
                                  points, n)[0]


# -- densities and tagged points ------------------------------------------------


def _as_coeff_rows(ctx, values, count):
    """Normalize evaluator output to an (N, 2^n) coefficient array."""
    if isinstance(values, Multivector):
        return np.tile(values.coeffs, (count, 1))
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim == 0:
        out = np.zeros((count, ctx.dim))
        out[:, 0] = float(arr)
        return out
    if arr.ndim == 1 and arr.shape[0] == ctx.dim:
        return np.tile(arr, (count, 1))
    if arr.shape == (count, ctx.dim):
        return arr
    raise ValueError("cannot interpret density values of shape %s" % (arr.shape,))


@dataclass(frozen=True)
class BoundaryDensity:
    """Node-aligned boundary density with an optional exact evaluator.

    Attributes
    ----------
    mesh : SurfaceMesh
        The mesh whose nodes the samples align with.
    samples : (N, 2^n) float array
        Multivector coefficients at each node.
    evaluator : callable or None
        Exact map point -> Multivector/coefficients, when known.
    regularity : tuple
        ("holder", mu, M) with 0 < mu <= 1 (M may be None when unknown),
        or ("continuous",).
    """

    mesh: SurfaceMesh
    samples: np.ndarray
    evaluator: object = None
    regularity: tuple = ("holder", 1.0, None)

    def __post_init__(self):
        samples = np.ascontiguousarray(self.samples, dtype=np.float64)
        ctx = self.mesh.context
        if samples.shape != (self.mesh.node_count, ctx.dim):
            raise ValueError("samples must have shape (N, 2^n) = %s"
                             % ((self.mesh.node_count, ctx.dim),))
        tag = self.regularity[0]
        if tag == "holder":
            mu = self.regularity[1]
            if not 0.0 < mu <= 1.0:
                raise ValueError("Holder exponent must lie in (0, 1]")
        elif tag != "continuous":
            raise ValueError("regularity tag must be 'holder' or 'continuous'")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_function(cls, mesh, fn, regularity=("holder", 1.0, None)):
        ctx = mesh.context
        vals = fn(mesh.nodes)
        if isinstance(vals, Multivector) or np.asarray(vals).ndim <= 1:
            # not vectorized over nodes; evaluate per node
            rows = [_as_coeff_rows(ctx, fn(x), 1)[0] for x in mesh.nodes]
            samples = np.array(rows)
        else:
            samples = _as_coeff_rows(ctx, vals, mesh.node_count)
        return cls(mesh, samples, evaluator=fn, regularity=regularity)

    @classmethod
    def constant(cls, mesh, value=1.0):
        ctx = mesh.context
        samples = _as_coeff_rows(ctx, value, mesh.node_count)
        ev = samples[0].copy()
        return cls(mesh, samples, evaluator=lambda x, _c=ev: _c,
                   regularity=("holder", 1.0, 0.0))

    @property
    def is_holder(self):
        return self.regularity[0] == "holder"

    def value_at(self, i: int) -> Multivector:
        return Multivector(self.mesh.context, self.samples[i].copy())

    def spot_check(self, rng=None, pairs=64, slack=1.05):
        """Spot-check the declared regularity on random node pairs.

        For a ("holder", mu, M) tag with M given, verifies
        |f(x) - f(y)| <= slack * M * |x - y|^mu; returns the max quotient
        |f(x)-f(y)| / |x-y|^mu seen.  Raises on violation; also verifies
        samples match the evaluator on a few nodes when one is present.
        """
        rng = np.random.default_rng(0) if rng is None else rng
        N = self.mesh.node_count
        ii = rng.integers(0, N, size=pairs)
        jj = rng.integers(0, N, size=pairs)
        keep = ii != jj
        ii, jj = ii[keep], jj[keep]
        dx = np.linalg.norm(self.mesh.nodes[ii] - self.mesh.nodes[jj], axis=1)
        df = np.linalg.norm(self.samples[ii] - self.samples[jj], axis=1)
        if self.is_holder:
            mu, M = self.regularity[1], self.regularity[2]
            quot = df / dx**mu
            top = float(quot.max()) if quot.size else 0.0
            if M is not None and top > slack * M:
                raise ValueError("Holder spot check failed: quotient %.3g > "
                                 "M = %.3g" % (top, M))
        else:
            top = float((df / dx**0.5).max()) if dx.size else 0.0
        if self.evaluator is not None:
            ctx = self.mesh.context
            for i in ii[:4]:
                want = _as_coeff_rows(ctx, self.evaluator(self.mesh.nodes[i]), 1)[0]
                if not np.allclose(want, self.samples[i], atol=1e-10):
                    raise ValueError("samples disagree with evaluator at node %d"
                                     % i)
        return top


def side_of(spec, w, boundary_tol=1e-9):
    """Membership side of point w for a sphere/circle spec."""
    w = np.asarray(w, dtype=np.float64)
    r = np.linalg.norm(w - spec.center_array)
    if abs(r - spec.radius) <= boundary_tol * max(1.0, spec.radius):
        return "boundary"
    return "interior" if r < spec.radius else "exterior"


@dataclass(frozen=True)
class SideTaggedPoint:
    """Evaluation point with its declared side of Gamma."""

    w: tuple
    side: str

    def __post_init__(self):
        if self.side not in ("interior", "exterior", "boundary"):
            raise ValueError("side must be interior/exterior/boundary")
        object.__setattr__(self, "w", tuple(float(v) for v in self.w))

    @classmethod
    def tag(cls, spec, w, boundary_tol=1e-9):
        return cls(tuple(np.asarray(w, float)), side_of(spec, w, boundary_tol))

    @property
    def point(self):
        return np.asarray(self.w, dtype=np.float64)


@dataclass(frozen=True)
class CauchyValue:
    """Cauchy-type integral value with a near-boundary reliability report."""

    value: Multivector
    reliable: bool
    distance: float
    side: str = "unknown"


# -- paravector-times-multivector row products ----------------------------------

def _para_mul_left(ctx, P, F):
    """Row products P_j F_j with P (N, n+1) paravector comps, F (N, 2^n)."""
    N = F.shape[0]
    out = np.zeros((N, ctx.dim))
    pidx, psign = ctx.para_idx, ctx.para_sign
    for k in range(ctx.n + 1):
        col = P[:, k]
        for b in range(ctx.dim):
            out[:, pidx[k, b]] += psign[k, b] * col * F[:, b]
    return out


def _para_mul_right(ctx, F, P):
    """Row products F_j P_j with the paravector on the right."""
    N = F.shape[0]
    out = np.zeros((N, ctx.dim))
    ridx, rsign = ctx.para_idx_right, ctx.para_sign_right
    for b in range(ctx.dim):
        col = F[:, b]
        for k in range(ctx.n + 1):
            out[:, ridx[b, k]] += rsign[b, k] * col * P[:, k]
    return out


def _mv_rows_product(ctx, A, B):
    return _accel._mv_products_np(np.atleast_2d(A), np.atleast_2d(B),
                                  _accel._sign_full(ctx), ctx.dim)


def _measure_density(mesh, f, side):
    """(nu w f)_j for left integrals, (f nu w)_j for right ones."""
    ctx = mesh.context
    nuw = mesh.measure_coeffs()
    if side == "left":
        return _para_mul_left(ctx, nuw, f.samples)
    if side == "right":
        return _para_mul_right(ctx, f.samples, nuw)
    raise ValueError("side must be 'left' or 'right'")


def _boundary_distance(mesh, w):
    if mesh.spec is not None:
        return abs(np.linalg.norm(w - mesh.spec.center_array) - mesh.spec.radius)
    return float(np.linalg.norm(mesh.nodes - w[None, :], axis=1).min())


def _accum(mesh, targets, g, side, excl=None):
    ctx = mesh.context
    if side == "left":
        return _accel.accum_left(ctx, targets, mesh.nodes, g, excl)
    return _accel.accum_right(ctx, targets, mesh.nodes, g, excl)


# -- Cauchy-type integral off the surface ---------------------------------------

def cauchy_integral(mesh, f: BoundaryDensity, w, side="left",
                    method="raw") -> CauchyValue:
    """Cauchy-type integral C[f](w) for w off Gamma.

    Parameters
    ----------
    w : point, or SideTaggedPoint
        Evaluation point.  Plain points are tagged automatically when the
        mesh carries a builder spec.
    side : 'left' | 'right'
        Kernel position: E dsigma f (left) or f dsigma E (right).
    method : 'raw' | 'subtract'
        'subtract' evaluates C[f - f(t*)](w) + f(t*) X(w) with t* the
        nearest node and X the exact span (1 interior / 0 exterior),
        which stays accurate close to the surface; it requires a
        non-boundary side tag.

    Returns
    -------
    CauchyValue
        value, reliability flag (distance >= 3h for raw evaluation) and
        the distance to Gamma.
    """
    ctx = mesh.context
    if isinstance(w, SideTaggedPoint):
        tagged = w
        point = w.point
    else:
        point = np.asarray(w, dtype=np.float64)
        tagged = (SideTaggedPoint.tag(mesh.spec, point)
                  if mesh.spec is not None else None)
    dist = _boundary_distance(mesh, point)
    band = NEAR_BAND_FACTOR * mesh.h
    vol = unit_sphere_area(mesh.n)
    side_name = tagged.side if tagged is not None else "unknown"
    if method == "raw":
        g = _measure_density(mesh, f, side)
        total = _accum(mesh, [point], g, side)[0] / vol
        return CauchyValue(Multivector(ctx, total), dist >= band, dist, side_name)
    if method != "subtract":
        raise ValueError("method must be 'raw' or 'subtract'")
    if side_name not in ("interior", "exterior"):
        raise ValueError("subtract method needs an interior/exterior side tag")
    i_star = int(np.linalg.norm(mesh.nodes - point[None, :], axis=1).argmin())
    f0 = f.samples[i_star]
    shifted = BoundaryDensity(mesh, f.samples - f0[None, :],
                              regularity=f.regularity)
    g = _measure_density(mesh, shifted, side)
    total = _accum(mesh, [point], g, side)[0] / vol
    if side_name == "interior":
        total = total + f0
    return CauchyValue(Multivector(ctx, total), True, dist, side_name)


# -- tangential gradients on the mesh -------------------------------------------

_GRAD_CACHE: dict = {}


def _tangent_frame(mesh):
    """Orthonormal tangent vectors per node, shape (N, d, n+1), d = n."""
    nu = mesh.normals
    N, p = nu.shape
    A = np.zeros((N, p, p))
    A[:, :, 0] = nu
    A[:, :, 1:] = np.broadcast_to(np.eye(p)[:, : p - 1], (N, p, p - 1))
    Q, _ = np.linalg.qr(A)
    # first column of Q is +-nu; remaining columns span the tangent space
    return np.swapaxes(Q[:, :, 1:], 1, 2)


def _circle_uniform_order(mesh):
    """Sorted order and validation for a uniform circle grid, else None."""
    if mesh.n != 1:
        return None
    center = (mesh.spec.center_array if mesh.spec is not None
              else mesh.nodes.mean(axis=0))
    rel = mesh.nodes - center[None, :]
    radii = np.linalg.norm(rel, axis=1)
    R = radii.mean()
    if radii.size < 8 or np.abs(radii - R).max() > 1e-9 * R:
        return None
    theta = np.arctan2(rel[:, 1], rel[:, 0])
    order = np.argsort(theta)
    ts = theta[order]
    gaps = np.diff(np.concatenate([ts, [ts[0] + 2 * np.pi]]))
    if np.abs(gaps - gaps.mean()).max() > 1e-9:
        return None
    return order, R, center


def _build_gradient_stencil(mesh):
    """Per-node derivative stencils: (nb, wts, frame).

    nb is (N, k) neighbor indices, wts is (d, N, k) weights such that the
    tangential derivative of samples along frame[:, a, :] at node i is
    sum_m wts[a, i, m] * samples[nb[i, m]].  Uniform circle grids get a
    periodic 4th-order central-difference stencil; other meshes a local
    quadratic least-squares fit over nearest neighbors.
    """
    circ = _circle_uniform_order(mesh)
    if circ is not None:
        order, R, center = circ
        N = mesh.node_count
        pos = np.empty(N, dtype=np.int64)
        pos[order] = np.arange(N)
        # neighbors at sorted offsets -2,-1,+1,+2; d/ds = (1/R) d/dtheta
        offs = np.array([-2, -1, 1, 2])
        nb = order[(pos[:, None] + offs[None, :]) % N]
        hstep = (2.0 * np.pi / N) * R
        wts = np.tile(np.array([1.0, -8.0, 8.0, -1.0]) / (12.0 * hstep),
                      (1, N, 1))
        return nb, wts, _tangent_frame_circle(mesh, center)

    frame = _tangent_frame(mesh)
    d = mesh.n
    nterms = 1 + d + d * (d + 1) // 2
    k = max(nterms + 4, {2: 12, 3: 20}.get(d, 4 * nterms))
    k = min(k, mesh.node_count)
    _, nb = cKDTree(mesh.nodes).query(mesh.nodes, k=k)
    rel = mesh.nodes[nb] - mesh.nodes[:, None, :]          # (N, k, p)
    u = np.einsum("nkp,ndp->nkd", rel, frame)              # tangent coords
    cols = [np.ones(u.shape[:2])]
    cols += [u[:, :, a] for a in range(d)]
    for a in range(d):
        for b in range(a, d):
            cols.append(u[:, :, a] * u[:, :, b])
    design = np.stack(cols, axis=2)                         # (N, k, nterms)
    pinv = np.linalg.pinv(design)                           # (N, nterms, k)
    wts = np.swapaxes(pinv[:, 1 : 1 + d, :], 0, 1)          # (d, N, k)
    return nb, wts, frame


def _tangent_frame_circle(mesh, center):
    rel = mesh.nodes - center[None, :]
    radii = np.linalg.norm(rel, axis=1)[:, None]
    unit = rel / radii
    tangent = np.stack([-unit[:, 1], unit[:, 0]], axis=1)
    return tangent[:, None, :]


def gradient_stencil(mesh):
    """Cached per-node tangential-derivative stencil (nb, wts, frame)."""
    key = id(mesh)
    entry = _GRAD_CACHE.get(key)
    if entry is None or entry[0]() is None:
        import weakref

        op = _build_gradient_stencil(mesh)
        _GRAD_CACHE[key] = (weakref.ref(mesh), op)
        entry = _GRAD_CACHE[key]
    return entry[1]


def tangential_gradient(mesh, samples):
    """Tangential derivatives of node samples along the cached frame.

    Returns (derivs, frame): derivs[a] is the (N, m) array of directional
    derivatives along frame[:, a, :].
    """
    nb, wts, frame = gradient_stencil(mesh)
    samples = np.asarray(samples, dtype=np.float64)
    vals = samples[nb]                                      # (N, k, m)
    return np.einsum("ank,nkm->anm", wts, vals), frame


# -- principal values ------------------------------------------------------------

def _singular_cell_corrections(mesh, f, side):
    """Per-node corrections for the dropped singular cell, shape (N, dim).

    The subtracted integrand E(x-t) nu [f(x)-f(t)] tends to
    sum_k bar(T_k) nu(t) d_k f(t) as x -> t along tangent direction T_k;
    integrating it over a flat d-ball cell of the node's weight gives
    (d w / sigma_d)^{1/d} (sigma_d / d) sum_k bar(T_k) nu(t) d_k f(t),
    where d = n and sigma_d = area(S^{d-1}).
    """
    ctx = mesh.context
    d = mesh.n
    sigma_d = 2.0 if d == 1 else unit_sphere_area(d - 1)
    derivs, frame = tangential_gradient(mesh, f.samples)
    prefac = (d * mesh.weights / sigma_d) ** (1.0 / d) * (sigma_d / d)
    nu = mesh.normals
    out = np.zeros((mesh.node_count, ctx.dim))
    for a in range(d):
        Tbar = frame[:, a, :].copy()
        Tbar[:, 1:] *= -1.0
        if side == "left":
            TbarNu = _accel._pp_products_np(Tbar, nu, _accel._sign_full(ctx),
                                            _accel._pblades(ctx), ctx.dim)
            out += _mv_rows_product(ctx, TbarNu, derivs[a])
        else:
            NuTbar = _accel._pp_products_np(nu, Tbar, _accel._sign_full(ctx),
                                            _accel._pblades(ctx), ctx.dim)
            out += _mv_rows_product(ctx, derivs[a], NuTbar)
    return out * prefac[:, None]


def principal_value_nodes(mesh, f: BoundaryDensity, side="left",
                          indices=None, correction=True):
    """Regularized principal values at mesh nodes, shape (len(indices), dim).

    Computes (S1 - S2 f_t + c_t)/V_n + f_t/2 where S1, S2 are the
    desingularized kernel sums and c_t the singular-cell correction.
    """
    ctx = mesh.context
    N = mesh.node_count
    if indices is None:
        idx = np.arange(N, dtype=np.int64)
    else:
        idx = np.asarray(indices, dtype=np.int64)
    nuw = mesh.measure_coeffs()
    vol = unit_sphere_area(mesh.n)
    targets = mesh.nodes[idx]
    ft = f.samples[idx]
    if side == "left":
        g1 = _para_mul_left(ctx, nuw, f.samples)
        S1 = _accel.accum_left(ctx, targets, mesh.nodes, g1, idx)
        S2 = _accel.accum_left(ctx, targets, mesh.nodes, nuw_to_coeffs(ctx, nuw),
                               idx)
        S2f = _mv_rows_product(ctx, S2, ft)
    elif side == "right":
        g1 = _para_mul_right(ctx, f.samples, nuw)
        S1 = _accel.accum_right(ctx, targets, mesh.nodes, g1, idx)
        S2 = _accel.accum_right(ctx, targets, mesh.nodes,
                                nuw_to_coeffs(ctx, nuw), idx)
        S2f = _mv_rows_product(ctx, ft, S2)
    else:
        raise ValueError("side must be 'left' or 'right'")
    core = S1 - S2f
    if correction:
        core = core + _singular_cell_corrections(mesh, f, side)[idx]
    return core / vol + 0.5 * ft


def nuw_to_coeffs(ctx, nuw):
    """Paravector component rows (N, n+1) -> dense coefficients (N, 2^n)."""
    N = nuw.shape[0]
    out = np.zeros((N, ctx.dim))
    out[:, 0] = nuw[:, 0]
    for i in range(ctx.n):
        out[:, 1 << i] = nuw[:, i + 1]
    return out


def _snap_node(mesh, t):
    if isinstance(t, (int, np.integer)):
        i = int(t)
        if not 0 <= i < mesh.node_count:
            raise IndexError("node index out of range")
        return i
    t = np.asarray(t, dtype=np.float64)
    dist = np.linalg.norm(mesh.nodes - t[None, :], axis=1)
    i = int(dist.argmin())
    if dist[i] > 0.5 * mesh.h + 1e-12:
        raise ValueError("point is not a mesh node (nearest is %.3g away, "
                         "snap tolerance h/2 = %.3g)" % (dist[i], 0.5 * mesh.h))
    return i


def _warn_if_continuous(f):
    if not f.is_holder:
        warnings.warn("principal value of a continuous-only density: "
                      "convergence is not guaranteed", stacklevel=3)


def principal_value(mesh, f: BoundaryDensity, t, side="left",
                    method="regularized") -> Multivector:
    """Cauchy principal value PV C[f](t) at a boundary node.

    Parameters
    ----------
    t : node index or point
        Boundary point; plain points snap to the nearest node within h/2.
    method : 'regularized' | 'delta_limit'
        Regularized desingularized form (accurate path), or extrapolated
        shrinking-cap exclusion (cross-validation path).
    """
    _warn_if_continuous(f)
    i = _snap_node(mesh, t)
    ctx = mesh.context
    if method == "regularized":
        row = principal_value_nodes(mesh, f, side=side, indices=[i])[0]
        return Multivector(ctx, row)
    if method != "delta_limit":
        raise ValueError("method must be 'regularized' or 'delta_limit'")
    vol = unit_sphere_area(mesh.n)
    g = _measure_density(mesh, f, side)
    t_point = mesh.nodes[i]
    dist = np.linalg.norm(mesh.nodes - t_point[None, :], axis=1)
    delta0 = 16.0 * mesh.h
    vals = []
    for k in range(RICHARDSON_TERMS):
        delta = delta0 / RICHARDSON_RATIO**k
        exclude_cap(mesh, CapExclusion(tuple(t_point), delta))  # validates
        keep = dist > delta
        vals.append(_partial_sum(mesh, g, keep, t_point, side) / vol)
    return Multivector(ctx, richardson_limit(RICHARDSON_RATIO, vals))


def _partial_sum(mesh, g, keep, t_point, side):
    ctx = mesh.context
    nodes = mesh.nodes[keep]
    gk = g[keep]
    if side == "left":
        return _accel.accum_left(ctx, [t_point], nodes, gk)[0]
    return _accel.accum_right(ctx, [t_point], nodes, gk)[0]


def plemelj_values(mesh, f: BoundaryDensity, t, side="left"):
    """Plemelj boundary values (plus, minus) at node t.

    plus = f(t)/2 + PV C[f](t), minus = -f(t)/2 + PV C[f](t); their
    difference is f(t) exactly by construction.
    """
    i = _snap_node(mesh, t)
    pv = principal_value(mesh, f, i, side=side)
    ctx = mesh.context
    half = Multivector(ctx, 0.5 * f.samples[i])
    return half + pv, (-half) + pv


def richardson_limit(step_ratio, values):
    """Limit of a sequence computed at steps shrinking by step_ratio.

    values[i] corresponds to step h0 / step_ratio^i; standard Richardson
    table assuming an error expansion in integer powers of the step.
    """
    last = [np.asarray(v, dtype=np.float64) for v in values]
    order = 1
    while len(last) > 1:
        next_vals = []
        for i in range(len(last) - 1):
            fact = step_ratio**order
            next_vals.append((fact * last[i + 1] - last[i]) / (fact - 1.0))
        last = next_vals
        order += 1
    return last[0]


def extrapolate_to_zero(lams, rows, max_points=4):
    """Polynomial-in-lambda extrapolation of rows (k, dim) to lambda = 0."""
    lams = np.asarray(lams, dtype=np.float64)
    rows = np.asarray(rows, dtype=np.float64)
    m = min(max_points, len(lams))
    lam = lams[-m:]
    V = np.vander(lam, m, increasing=True)
    coef = np.linalg.solve(V, rows[-m:])
    return coef[0]


def boundary_limit(mesh, f: BoundaryDensity, t, sign="+", side="left",
                   lam0=None, terms=RICHARDSON_TERMS, method=None):
    """Richardson limit of C[f] along the normal through node t.

    sign '+' approaches from the interior (against the outward normal),
    '-' from the exterior.  Used as the independent oracle for the
    Plemelj formulas.
    """
    i = _snap_node(mesh, t)
    t_point = mesh.nodes[i]
    nu = mesh.normals[i]
    if lam0 is None:
        lam0 = 0.35 * _scale(mesh)
    if method is None:
        method = "subtract" if mesh.spec is not None else "raw"
    direction = -nu if sign == "+" else nu
    tag = "interior" if sign == "+" else "exterior"
    vals = []
    for k in range(terms):
        lam = lam0 / RICHARDSON_RATIO**k
        w = SideTaggedPoint(tuple(t_point + lam * direction), tag)
        vals.append(cauchy_integral(mesh, f, w, side=side,
                                    method=method).value.coeffs)
    return Multivector(mesh.context, richardson_limit(RICHARDSON_RATIO, vals))


def _scale(mesh):
    if mesh.spec is not None:
        return mesh.spec.radius
    span = mesh.nodes.max(axis=0) - mesh.nodes.min(axis=0)
    return 0.5 * float(span.max())


def symmetric_difference_limit(mesh, f: BoundaryDensity, p, lambdas,
                               side="left") -> Multivector:
    """Limit of S[f](p + lam M) - S[f](p - lam M) over decreasing lam.

    M is the inner normal field (quasi-normal with c = 1 on spheres:
    M = -nu).  Converges to f(p) for merely continuous densities; the
    lambda sequence must be strictly decreasing and positive.
    """
    lams = np.asarray(lambdas, dtype=np.float64)
    if lams.ndim != 1 or lams.size < 2:
        raise ValueError("need at least two lambda values")
    if np.any(lams <= 0) or np.any(np.diff(lams) >= 0):
        raise ValueError("lambda sequence must be positive and strictly "
                         "decreasing")
    i = _snap_node(mesh, p)
    t_point = mesh.nodes[i]
    M = -mesh.normals[i]
    use_subtract = mesh.spec is not None
    rows = []
    for lam in lams:
        wp = SideTaggedPoint(tuple(t_point + lam * M), "interior")
        wm = SideTaggedPoint(tuple(t_point - lam * M), "exterior")
        meth = "subtract" if use_subtract else "raw"
        a = cauchy_integral(mesh, f, wp, side=side, method=meth).value.coeffs
        b = cauchy_integral(mesh, f, wm, side=side, method=meth).value.coeffs
        rows.append(a - b)
    ratios = lams[:-1] / lams[1:]
    if np.allclose(ratios, ratios[0], rtol=1e-9):
        out = richardson_limit(float(ratios[0]), rows)
    else:
        out = extrapolate_to_zero(lams, np.asarray(rows))
    return Multivector(mesh.context, out)


@dataclass(frozen=True)
class SpanResult:
    value: float          # one of 0, 1/2, 1
    raw: Multivector


def span_indicator(mesh, w, boundary_tol=None) -> SpanResult:
    """Span of the surface at w: C[1](w) rounded to {0, 1/2, 1}.

    Off-surface points use the Cauchy integral of the constant density;
    points that coincide with a mesh node (within h/2) use the principal
    value.  A raw value farther than 0.25 from every admissible value
    raises InconclusiveSpanError.
    """
    ctx = mesh.context
    point = np.asarray(w, dtype=np.float64)
    ones = BoundaryDensity.constant(mesh, 1.0)
    node_dist = np.linalg.norm(mesh.nodes - point[None, :], axis=1).min()
    if node_dist <= 1e-9 * max(_scale(mesh), 1.0):
        raw = principal_value(mesh, ones, point)
    else:
        raw = cauchy_integral(mesh, ones, point, method="raw").value
    coeffs = raw.coeffs
    best, best_dist = None, np.inf
    for cand in (0.0, 0.5, 1.0):
        ref = np.zeros(ctx.dim)
        ref[0] = cand
        dist = float(np.linalg.norm(coeffs - ref))
        if dist < best_dist:
            best, best_dist = cand, dist
    if best_dist > 0.25:
        raise InconclusiveSpanError(
            "raw span value %r is %.3g away from the nearest admissible "
            "value %g" % (raw, best_dist, best))
    return SpanResult(best, raw)


def cauchy_derivative(mesh, f: BoundaryDensity, w, alpha, side="left"):
    """d^alpha of C[f] at an off-surface point via closed-form kernel
    derivatives (alpha differentiates the x_1..x_n coordinates; |alpha| <= 4).
    """
    from .fueter import kernel_derivative

    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != mesh.n or any(a < 0 for a in alpha):
        raise ValueError("alpha must be %d nonnegative integers" % mesh.n)
    k = sum(alpha)
    if k > 4:
        raise ValueError("|alpha| <= 4 supported")
    ctx = mesh.context
    point = np.asarray(w, dtype=np.float64)
    dist = _boundary_distance(mesh, point)
    if dist < 1e-12:
        raise SingularInputError("derivative target lies on the surface")
    kd = kernel_derivative(ctx, alpha)
    comps = kd.evaluate_components(mesh.nodes - point[None, :])  # (N, n+1)
    # d^alpha_w E(x - w) = (-1)^{|alpha|} [d^alpha E](x - w)
    signf = (-1.0) ** k / unit_sphere_area(mesh.n)
    if side == "left":
        g = _measure_density(mesh, f, "left")
        T = np.einsum("jk,jb->kb", comps, g)
        out = np.zeros(ctx.dim)
        for kk in range(ctx.n + 1):
            for b in range(ctx.dim):
                out[ctx.para_idx[kk, b]] += ctx.para_sign[kk, b] * T[kk, b]
    else:
        g = _measure_density(mesh, f, "right")
        T = np.einsum("jb,jk->bk", g, comps)
        out = np.zeros(ctx.dim)
        for b in range(ctx.dim):
            for kk in range(ctx.n + 1):
                out[ctx.para_idx_right[b, kk]] += \
                    ctx.para_sign_right[b, kk] * T[b, kk]
    return Multivector(ctx, signf * out)
