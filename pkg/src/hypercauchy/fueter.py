"""Hypercomplex polynomials, kernel derivatives, Taylor/Laurent machinery.

The hypercomplex variables z_j(x) = x_j e_0 - x_0 e_j (j = 1..n) generate
the symmetric powers Z^alpha; multi-index derivatives d^alpha act on the
coordinates x_1..x_n only.  Kernel derivatives d^alpha E are kept in the
exact rational form P(x)/|x|^s with polynomial numerators per paravector
component and s = n+1+2|alpha|, built by the quotient-rule recurrence

    d_k [P / |x|^s] = (|x|^2 d_k P - s x_k P) / |x|^{s+2}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import _accel
from .clifford_core import Multivector, Paravector, get_context
from .cauchy import (
    BoundaryDensity,
    _measure_density,
    _mv_rows_product,
    _para_mul_left,
    _para_mul_right,
    cauchy_integral,
    unit_sphere_area,
)

MAX_DEGREE = 6


class DegreeOverflowError(ValueError):
    """Multi-index degree exceeds the configured maximum."""


class QuadratureDegeneracyError(ValueError):
    """Mesh too coarse for the requested expansion degree."""


@dataclass(frozen=True)
class MultiIndex:
    """alpha = [alpha_1, ..., alpha_n] of nonnegative integers, |alpha| <= 6."""

    alpha: tuple

    def __post_init__(self):
        alpha = tuple(int(a) for a in self.alpha)
        if any(a < 0 for a in alpha):
            raise ValueError("multi-index entries must be nonnegative")
        if sum(alpha) > MAX_DEGREE:
            raise DegreeOverflowError("|alpha| = %d exceeds max degree %d"
                                      % (sum(alpha), MAX_DEGREE))
        object.__setattr__(self, "alpha", alpha)

    @property
    def degree(self):
        return sum(self.alpha)

    @property
    def factorial(self):
        out = 1
        for a in self.alpha:
            out *= math.factorial(a)
        return out

    def __iter__(self):
        return iter(self.alpha)

    def __len__(self):
        return len(self.alpha)


def _as_alpha(alpha, n):
    if isinstance(alpha, MultiIndex):
        tup = alpha.alpha
    else:
        tup = tuple(int(a) for a in alpha)
        MultiIndex(tup)  # validates
    if len(tup) != n:
        raise ValueError("multi-index must have n = %d entries" % n)
    return tup


def multi_indices(n, degree):
    """All multi-indices of n entries with |alpha| = degree, lexicographic."""
    if n == 1:
        yield (degree,)
        return
    for first in range(degree, -1, -1):
        for rest in multi_indices(n - 1, degree - first):
            yield (first,) + rest


def hyper_variable(ctx, j, x) -> Multivector:
    """z_j(x) = x_j e_0 - x_0 e_j for j in 1..n."""
    if not 1 <= j <= ctx.n:
        raise ValueError("j must be in 1..n")
    x = np.asarray(x, dtype=np.float64)
    c = np.zeros(ctx.dim)
    c[0] = x[j]
    c[1 << (j - 1)] = -x[0]
    return Multivector(ctx, c)


def _hyper_variable_rows(ctx, j, points):
    out = np.zeros((points.shape[0], ctx.dim))
    out[:, 0] = points[:, j]
    out[:, 1 << (j - 1)] = -points[:, 0]
    return out


@lru_cache(maxsize=None)
def _arrangements(alpha):
    """Distinct orderings of the multiset {j repeated alpha_j times}."""
    letters = []
    for j, a in enumerate(alpha, start=1):
        letters.extend([j] * a)
    return tuple(sorted(set(itertools.permutations(letters))))


def symmetric_power_rows(ctx, alpha, points):
    """Z^alpha at each point row, as (N, 2^n) coefficients.

    Z^alpha is the sum over all |alpha|!/prod(alpha_j!) distinct
    arrangements of the product of z_j factors; Z^0 = 1.
    """
    points = np.atleast_2d(np.asarray(points, dtype=np.float64))
    alpha = _as_alpha(alpha, ctx.n)
    N = points.shape[0]
    out = np.zeros((N, ctx.dim))
    if sum(alpha) == 0:
        out[:, 0] = 1.0
        return out
    zrows = {j: _hyper_variable_rows(ctx, j, points)
             for j, a in enumerate(alpha, start=1) if a > 0}
    for word in _arrangements(alpha):
        acc = zrows[word[0]]
        for j in word[1:]:
            acc = _mv_rows_product(ctx, acc, zrows[j])
        out += acc
    return out


def symmetric_power(ctx, alpha, x) -> Multivector:
    """Z^alpha(x) as a Multivector."""
    return Multivector(ctx, symmetric_power_rows(ctx, alpha, [np.asarray(x)])[0])


# -- exact kernel derivatives ----------------------------------------------------

def _poly_mul_r2(poly, p):
    out = {}
    for exps, c in poly.items():
        for i in range(p):
            e = list(exps)
            e[i] += 2
            key = tuple(e)
            out[key] = out.get(key, 0.0) + c
    return out


def _poly_mul_xk(poly, k):
    out = {}
    for exps, c in poly.items():
        e = list(exps)
        e[k] += 1
        out[tuple(e)] = out.get(tuple(e), 0.0) + c
    return out


def _poly_diff(poly, k):
    out = {}
    for exps, c in poly.items():
        if exps[k] == 0:
            continue
        e = list(exps)
        e[k] -= 1
        out[tuple(e)] = out.get(tuple(e), 0.0) + c * exps[k]
    return out


def _poly_add(a, b, bscale=1.0):
    out = dict(a)
    for exps, c in b.items():
        out[exps] = out.get(exps, 0.0) + bscale * c
    return {e: c for e, c in out.items() if c != 0.0}


def _poly_eval_rows(poly, points):
    vals = np.zeros(points.shape[0])
    for exps, c in poly.items():
        term = np.full(points.shape[0], c)
        for i, e in enumerate(exps):
            if e:
                term = term * points[:, i] ** e
        vals += term
    return vals


@dataclass(frozen=True)
class KernelDerivative:
    """d^alpha E in the rational form P_c(x)/|x|^s per paravector component."""

    n: int
    alpha: tuple
    numerators: tuple   # one polynomial dict per component 0..n
    s: int

    def evaluate_components(self, points):
        """Paravector components of d^alpha E at each point row, (N, n+1)."""
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        r2 = np.einsum("ij,ij->i", points, points)
        scale = r2 ** (-0.5 * self.s)
        out = np.empty((points.shape[0], self.n + 1))
        for c, poly in enumerate(self.numerators):
            out[:, c] = _poly_eval_rows(poly, points) * scale
        return out

    def evaluate(self, x) -> Paravector:
        row = self.evaluate_components([np.asarray(x, dtype=np.float64)])[0]
        return Paravector(row[0], row[1:])


@lru_cache(maxsize=None)
def _kernel_derivative_cached(n, alpha):
    p = n + 1
    zero = (0,) * p
    nums = []
    for c in range(p):
        e = list(zero)
        e[c] = 1
        nums.append({tuple(e): 1.0 if c == 0 else -1.0})
    s = n + 1
    for k, times in enumerate(alpha, start=1):
        for _ in range(times):
            new = []
            for poly in nums:
                term = _poly_add(_poly_mul_r2(_poly_diff(poly, k), p),
                                 _poly_mul_xk(poly, k), bscale=-float(s))
                new.append(term)
            nums = new
            s += 2
    return KernelDerivative(n, tuple(alpha), tuple(nums), s)


def kernel_derivative(ctx, alpha) -> KernelDerivative:
    """Closed form d^alpha E for the algebra context (|alpha| <= 6)."""
    alpha = _as_alpha(alpha, ctx.n)
    return _kernel_derivative_cached(ctx.n, alpha)


def _kd_mul_left_rows(ctx, comps, rows):
    """Products kd_j rows_j with kd (N, n+1) paravector comps on the left."""
    return _para_mul_left(ctx, comps, rows)


# -- boundary moments -------------------------------------------------------------

def boundary_moment(mesh, g: BoundaryDensity, alpha, side="left") -> Multivector:
    """Moment integral int Z^alpha dsigma g (left) or int g dsigma Z^alpha."""
    ctx = mesh.context
    alpha = _as_alpha(alpha, ctx.n)
    Z = symmetric_power_rows(ctx, alpha, mesh.nodes)
    nuw = mesh.measure_coeffs()
    if side == "left":
        t = _para_mul_left(ctx, nuw, g.samples)
        rows = _mv_rows_product(ctx, Z, t)
    elif side == "right":
        t = _para_mul_right(ctx, g.samples, nuw)
        rows = _mv_rows_product(ctx, t, Z)
    else:
        raise ValueError("side must be 'left' or 'right'")
    return Multivector(ctx, rows.sum(axis=0))


@dataclass(frozen=True)
class MomentTable:
    """Moments int Z^alpha dsigma g (or the right variant) up to max degree."""

    side: str
    max_degree: int
    entries: dict   # alpha tuple -> coefficient array

    def moment(self, alpha) -> np.ndarray:
        return self.entries[tuple(alpha)]


def build_moment_table(mesh, g: BoundaryDensity, max_degree, side="left"):
    if max_degree > MAX_DEGREE:
        raise DegreeOverflowError("max degree %d exceeds %d"
                                  % (max_degree, MAX_DEGREE))
    entries = {}
    for k in range(max_degree + 1):
        for alpha in multi_indices(mesh.n, k):
            entries[alpha] = boundary_moment(mesh, g, alpha, side).coeffs
    return MomentTable(side, max_degree, entries)


# -- Taylor components -------------------------------------------------------------

def derivative_at_origin(mesh, f: BoundaryDensity, alpha, side="left"):
    """[d^alpha f](0) via the boundary integral over a sphere about 0.

    ((-1)^{|alpha|}/V_n) int_dB [d^alpha E](x) dsigma f(x) for the left
    case; the right case mirrors the product order.
    """
    ctx = mesh.context
    alpha = _as_alpha(alpha, ctx.n)
    k = sum(alpha)
    kd = kernel_derivative(ctx, alpha)
    comps = kd.evaluate_components(mesh.nodes)
    nuw = mesh.measure_coeffs()
    vol = unit_sphere_area(ctx.n)
    if side == "left":
        t = _para_mul_left(ctx, nuw, f.samples)
        rows = _para_mul_left(ctx, comps, t)
    else:
        t = _para_mul_right(ctx, f.samples, nuw)
        rows = _para_mul_right(ctx, t, comps)
    return (-1.0) ** k / vol * rows.sum(axis=0)


def taylor_component(f, k, R, mesh, side="left"):
    """Degree-k Taylor component of an entire regular function.

    Parameters
    ----------
    f : callable or BoundaryDensity
        The function (regular in a ball of radius > R); callables are
        sampled on the mesh nodes.
    mesh : SurfaceMesh
        Sphere of radius R about the origin carrying the quadrature.

    Returns
    -------
    evaluator
        P_k[f](x) = (1/k!) sum_{|alpha|=k} Z^alpha(x) [d^alpha f](0)
        (left case; the right case puts the coefficients on the left).
        The returned callable also exposes .coefficients, a dict
        alpha -> coefficient array.
    """
    ctx = mesh.context
    if k > MAX_DEGREE:
        raise DegreeOverflowError("degree %d exceeds max %d" % (k, MAX_DEGREE))
    if mesh.h * (k + 1) > R:
        raise QuadratureDegeneracyError(
            "mesh h = %.3g too coarse for degree %d on radius %.3g"
            % (mesh.h, k, R))
    if not isinstance(f, BoundaryDensity):
        f = BoundaryDensity.from_function(mesh, f)
    coeffs = {alpha: derivative_at_origin(mesh, f, alpha, side)
              for alpha in multi_indices(ctx.n, k)}
    inv_kfact = 1.0 / math.factorial(k)

    def evaluator(x):
        pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
        out = np.zeros((pts.shape[0], ctx.dim))
        for alpha, c in coeffs.items():
            Z = symmetric_power_rows(ctx, alpha, pts)
            if side == "left":
                out += _mv_rows_product(ctx, Z, c[None, :])
            else:
                out += _mv_rows_product(ctx, c[None, :], Z)
        out *= inv_kfact
        if np.asarray(x).ndim == 1:
            return Multivector(ctx, out[0])
        return out

    evaluator.coefficients = coeffs
    evaluator.degree = k
    return evaluator


# -- Laurent terms ------------------------------------------------------------------

def surface_hull_radius(mesh):
    return float(np.linalg.norm(mesh.nodes, axis=1).max())


def laurent_term(mesh, g: BoundaryDensity, k, side="left"):
    """Degree-k Laurent term of the Cauchy-type integral near infinity.

    Q_k(w) = ((-1)^k / (V_n k!)) sum_{|alpha|=k} [d^alpha E](w) m_alpha
    with m_alpha the left moment table entries (right case mirrored);
    -sum_k Q_k reproduces C[g](w) for |w| > rho = max|x| on Gamma.
    The returned evaluator raises on |w| <= rho.
    """
    ctx = mesh.context
    if k > MAX_DEGREE:
        raise DegreeOverflowError("degree %d exceeds max %d" % (k, MAX_DEGREE))
    rho = surface_hull_radius(mesh)
    moments = {alpha: boundary_moment(mesh, g, alpha, side).coeffs
               for alpha in multi_indices(ctx.n, k)}
    vol = unit_sphere_area(ctx.n)
    scale = (-1.0) ** k / (vol * math.factorial(k))
    kds = {alpha: kernel_derivative(ctx, alpha) for alpha in moments}

    def evaluator(w):
        pts = np.atleast_2d(np.asarray(w, dtype=np.float64))
        if np.any(np.linalg.norm(pts, axis=1) <= rho):
            raise ValueError("Laurent evaluation requires |w| > rho = %.6g"
                             % rho)
        out = np.zeros((pts.shape[0], ctx.dim))
        for alpha, m in moments.items():
            comps = kds[alpha].evaluate_components(pts)
            if side == "left":
                out += _para_mul_left(ctx, comps,
                                      np.broadcast_to(m, (pts.shape[0],
                                                          ctx.dim)))
            else:
                out += _para_mul_right(ctx,
                                       np.broadcast_to(m, (pts.shape[0],
                                                           ctx.dim)), comps)
        out *= scale
        if np.asarray(w).ndim == 1:
            return Multivector(ctx, out[0])
        return out

    evaluator.degree = k
    evaluator.rho = rho
    evaluator.moments = moments
    return evaluator


# -- order at infinity ---------------------------------------------------------------

@dataclass(frozen=True)
class OrderReport:
    """Order at infinity with both determination routes reported."""

    order: float            # integer, or -inf, or nan when undetermined
    moment_route: float
    slope_route: float
    slope_raw: float        # unrounded log-log fit slope
    first_moment_degree: int    # N^l, or -1 when no moment clears threshold
    threshold: float
    moment_norms: dict
    undetermined: bool


def _moment_norms(mesh, g, max_degree, side):
    out = {}
    for k in range(max_degree + 1):
        total = 0.0
        for alpha in multi_indices(mesh.n, k):
            m = boundary_moment(mesh, g, alpha, side).coeffs
            total = max(total, float(np.linalg.norm(m)))
        out[k] = total
    return out


def order_at_infinity(mesh=None, g=None, side="left", evaluator=None,
                      max_degree=MAX_DEGREE, rays=3, seed=7) -> OrderReport:
    """Order at infinity of a Cauchy-type integral or a sampled evaluator.

    Moment route (needs mesh+g): Ord = -n - N^l with N^l the smallest
    |alpha| whose moment norm clears max(10 * quadrature error estimate,
    1e-8 * density scale); the error estimate comes from one mesh
    refinement when the density carries an evaluator.  Empirical route:
    least-squares slope of log|Phi| against log|w| on rays with radii in
    [5 rho, 50 rho], rounded to the nearest integer.  Both are reported;
    `order` is the moment route when available, else the slope fit.
    """
    if evaluator is None and (mesh is None or g is None):
        raise ValueError("need a (mesh, g) pair or an evaluator")
    moment_order = math.nan
    first_deg = -1
    threshold = math.nan
    norms = {}
    undetermined = False
    n = mesh.n if mesh is not None else None
    if mesh is not None and g is not None:
        scale = max(float(np.abs(g.samples).max()), 1e-300)
        norms = _moment_norms(mesh, g, max_degree, side)
        quad_est = 0.0
        if g.evaluator is not None and mesh.spec is not None:
            from .surface import refine

            fine = refine(mesh)
            gf = BoundaryDensity.from_function(fine, g.evaluator,
                                               regularity=g.regularity)
            fine_norms = _moment_norms(fine, gf, max_degree, side)
            quad_est = max(abs(fine_norms[k] - norms[k]) for k in norms)
            norms = fine_norms
        threshold = max(10.0 * quad_est, 1e-8 * scale)
        for k in sorted(norms):
            if norms[k] > threshold:
                first_deg = k
                break
        if first_deg >= 0:
            moment_order = -mesh.n - first_deg
        else:
            undetermined = True

    slope_order = math.nan
    rng = np.random.default_rng(seed)
    if evaluator is not None or (mesh is not None and g is not None):
        if mesh is not None:
            rho = surface_hull_radius(mesh)
        else:
            rho = 1.0
        radii = np.geomspace(5.0 * rho, 50.0 * rho, 8)
        if n is None:
            # evaluator-only route: probe dimension from a trial call
            raise ValueError("evaluator-only route requires a mesh for "
                             "dimension and scale; pass mesh too")
        logs = []
        mags = []
        for _ in range(rays):
            v = rng.standard_normal(n + 1)
            v /= np.linalg.norm(v)
            for r in radii:
                w = r * v
                if evaluator is not None:
                    val = evaluator(w)
                    row = val.coeffs if isinstance(val, Multivector) \
                        else np.asarray(val, dtype=np.float64)
                else:
                    row = cauchy_integral(mesh, g, w, side=side,
                                          method="raw").value.coeffs
                mag = float(np.linalg.norm(row))
                mags.append(mag)
                if mag > 0:
                    logs.append((math.log(r), math.log(mag)))
        floor = 1e-13 * (float(np.abs(g.samples).max()) if g is not None
                         else 1.0)
        if max(mags, default=0.0) <= floor:
            return OrderReport(-math.inf, -math.inf, -math.inf, -math.inf,
                               first_deg, threshold, norms, False)
        A = np.array(logs)
        slope_raw = float(np.polyfit(A[:, 0], A[:, 1], 1)[0])
        slope_order = float(np.round(slope_raw))

    order = moment_order if not math.isnan(moment_order) else slope_order
    if undetermined:
        order = math.nan
    return OrderReport(order, moment_order, slope_order, slope_raw,
                       first_deg, threshold, norms, undetermined)


# -- numerical Dirac oracle -----------------------------------------------------------

def dirac_apply(ctx, f, x, step=1e-4, side="left") -> Multivector:
    """Central-difference Dirac operator D[f] = sum_k e_k d_k f at x.

    side 'left' applies e_k from the left (left regularity oracle),
    'right' from the right.  Near 0 for (bi)regular f.
    """
    x = np.asarray(x, dtype=np.float64)
    out = Multivector.zero(ctx)
    for k in range(ctx.n + 1):
        xp = x.copy()
        xm = x.copy()
        xp[k] += step
        xm[k] -= step
        fp = _to_mv(ctx, f(xp))
        fm = _to_mv(ctx, f(xm))
        d = (fp - fm) / (2.0 * step)
        e_k = ctx.scalar(1.0) if k == 0 else ctx.basis_blade(1 << (k - 1))
        out = out + (e_k * d if side == "left" else d * e_k)
    return out


def _to_mv(ctx, val):
    if isinstance(val, Multivector):
        return val
    if isinstance(val, Paravector):
        return val.as_multivector(ctx)
    arr = np.asarray(val, dtype=np.float64)
    if arr.ndim == 0:
        return ctx.scalar(float(arr))
    return Multivector(ctx, arr)
