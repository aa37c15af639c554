"""Boundary value problem solvers built on the Cauchy-type machinery.

Covers the linear conjugation problems on a closed surface Gamma (jump
problems R_m with a prescribed order bound at infinity, the constant-gap
variant Phi+ = Phi- G + g, and the interior Dirichlet problem) together
with the characteristic singular integral equation with constant
right-quotient coefficients, the inversion of the singular Cauchy
operator, and a numerical experiment probing the commutation of iterated
principal-value integrals.

Sectionally regular solutions are represented by quadrature-backed
evaluators; solvability is decided by moment residuals measured against
refinement-based quadrature error estimates, never by exact arithmetic.
"""

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from . import _accel
from .clifford_core import Multivector, SingularInputError
from .cauchy import (BoundaryDensity, SideTaggedPoint, boundary_limit,
                     cauchy_integral, gradient_stencil, kernel_E_rows,
                     nuw_to_coeffs, principal_value_nodes,
                     symmetric_difference_limit, unit_sphere_area,
                     _as_coeff_rows, _mv_rows_product, _para_mul_left,
                     _para_mul_right, _scale, _warn_if_continuous)
from .fueter import (MAX_DEGREE, DegreeOverflowError, boundary_moment,
                     multi_indices, symmetric_power_rows)
from .surface import refine

# Full-matrix kernels (N x N densities) are refused above this many bytes.
KERNEL_MATRIX_BYTE_CAP = 1_200_000_000

# Auto-thresholded Dirichlet verdicts never accept residuals above this
# fraction of the data magnitude, however favorable the refinement trend.
DIRICHLET_SIGNIFICANCE = 0.02


# -- sectionally regular solutions ----------------------------------------------

@dataclass(frozen=True)
class SectionalSolution:
    """Sectionally regular function Phi = (S[g] + P) X on Omega+ / Omega-.

    Attributes
    ----------
    mesh : SurfaceMesh
    density : BoundaryDensity
        The density g of the Cauchy-type part S[g].
    side : 'left' | 'right'
        Regularity side; also fixes which side polynomial coefficients
        multiply on.
    order_bound : int
        Declared bound on the order at infinity of the exterior part.
    polynomial : tuple
        ((alpha, coeffs), ...) entries of the additive polynomial part
        P = sum Z^alpha c_alpha; empty when no free part exists.
    gap_inverse : ndarray or None
        Coefficients of G^{-1} for constant-gap problems; the exterior
        factor X is G^{-1} when set, 1 otherwise.
    interior_only : bool
        True for Dirichlet solutions; exterior evaluation then raises.
    """

    mesh: object
    density: BoundaryDensity
    side: str
    order_bound: int
    polynomial: tuple = ()
    gap_inverse: object = None
    interior_only: bool = False

    def _poly_rows(self, pts):
        ctx = self.mesh.context
        out = np.zeros((pts.shape[0], ctx.dim))
        for alpha, c in self.polynomial:
            c = np.asarray(c, dtype=np.float64)
            if not c.any():
                continue
            Z = symmetric_power_rows(ctx, alpha, pts)
            C = np.broadcast_to(c, Z.shape)
            if self.side == "left":
                out += _mv_rows_product(ctx, Z, C)
            else:
                out += _mv_rows_product(ctx, C, Z)
        return out

    def _evaluate(self, w, tag, method):
        ctx = self.mesh.context
        point = np.asarray(w, dtype=np.float64)
        tagged = SideTaggedPoint(tuple(point), tag)
        val = cauchy_integral(self.mesh, self.density, tagged,
                              side=self.side, method=method)
        total = val.value.coeffs + self._poly_rows(point[None, :])[0]
        if tag == "exterior" and self.gap_inverse is not None:
            total = _mv_rows_product(ctx, total[None, :],
                                     np.asarray(self.gap_inverse)[None, :])[0]
        return Multivector(ctx, total)

    def interior(self, w, method="raw") -> Multivector:
        """Evaluate Phi on Omega+ (method as in cauchy_integral)."""
        return self._evaluate(w, "interior", method)

    def exterior(self, w, method="raw") -> Multivector:
        """Evaluate Phi on Omega-."""
        if self.interior_only:
            raise ValueError("solution is defined on the interior domain only")
        return self._evaluate(w, "exterior", method)

    def with_polynomial(self, coefficients) -> "SectionalSolution":
        """Copy with polynomial coefficients set from {alpha: coeffs}."""
        ctx = self.mesh.context
        table = {tuple(a): _as_coeff_rows(ctx, c, 1)[0]
                 for a, c in coefficients.items()}
        slots = []
        for alpha, c in self.polynomial:
            slots.append((alpha, table.pop(alpha, c)))
        if table:
            raise KeyError("no free coefficient slot for indices %s"
                           % sorted(table))
        return replace(self, polynomial=tuple(slots))


@dataclass(frozen=True)
class SolvabilityReport:
    """Moment-condition verdict for a jump-type problem.

    verdict is 'unconditional' (m >= -n: no conditions), 'solvable'
    (all moment residuals below threshold) or 'unsolvable'.  residuals
    maps each required multi-index to the norm of its moment integral;
    threshold is 10x a refinement-based quadrature error estimate with
    an absolute floor.
    """

    verdict: str
    condition_count: int
    freedom_count: int
    residuals: dict
    threshold: float


def _moment_residuals(mesh, g, max_deg, side):
    out = {}
    for k in range(max_deg + 1):
        for alpha in multi_indices(mesh.n, k):
            out[alpha] = float(np.linalg.norm(
                boundary_moment(mesh, g, alpha, side).coeffs))
    return out


def _moment_threshold(mesh, g, max_deg, side, residuals):
    scale = max(float(np.abs(g.samples).max()), 1e-300)
    quad_est = 0.0
    fine_res = None
    if g.evaluator is not None and mesh.spec is not None:
        fine = refine(mesh)
        gf = BoundaryDensity.from_function(fine, g.evaluator,
                                           regularity=g.regularity)
        fine_res = _moment_residuals(fine, gf, max_deg, side)
        quad_est = max(abs(fine_res[a] - residuals[a]) for a in residuals)
    else:
        warnings.warn("no evaluator/spec for refinement; using the absolute "
                      "moment floor only", stacklevel=3)
    return max(10.0 * quad_est, 1e-8 * scale), fine_res


def _zero_poly_slots(ctx, m):
    slots = []
    for k in range(m + 1):
        for alpha in multi_indices(ctx.n, k):
            slots.append((alpha, np.zeros(ctx.dim)))
    return tuple(slots)


def solve_jump_rm(mesh, g: BoundaryDensity, m: int, side="left"):
    """Solve the jump problem Phi+ - Phi- = g in the class R_m.

    Parameters
    ----------
    m : int
        Admissible order at infinity of the exterior part.

    Returns
    -------
    (SectionalSolution or None, SolvabilityReport)
        For m >= -n the problem is unconditionally solvable; m >= 0 adds
        C(n+m, n) free polynomial coefficient slots (zero by default).
        For m < -n the moments int Z^alpha dsigma g must vanish for all
        |alpha| <= -(n+m)-1 (C(-m-1, n) conditions); when a residual
        exceeds the threshold the verdict is 'unsolvable' and no
        evaluator is returned.
    """
    _warn_if_continuous(g)
    ctx = mesh.context
    n = ctx.n
    if m >= -n:
        freedom = math.comb(n + m, n) if m >= 0 else 0
        poly = _zero_poly_slots(ctx, m) if m >= 0 else ()
        sol = SectionalSolution(mesh, g, side, m, poly)
        return sol, SolvabilityReport("unconditional", 0, freedom, {}, 0.0)
    K = -(n + m) - 1
    if K > MAX_DEGREE:
        raise DegreeOverflowError(
            "order bound m = %d needs moment degree %d > max %d"
            % (m, K, MAX_DEGREE))
    residuals = _moment_residuals(mesh, g, K, side)
    threshold, fine_res = _moment_threshold(mesh, g, K, side, residuals)
    if fine_res is not None:
        residuals = fine_res
    solvable = all(v <= threshold for v in residuals.values())
    report = SolvabilityReport("solvable" if solvable else "unsolvable",
                               math.comb(-m - 1, n), 0, residuals, threshold)
    if not solvable:
        return None, report
    return SectionalSolution(mesh, g, side, m, ()), report


def jump_residual(mesh, sol: SectionalSolution, g: BoundaryDensity,
                  sample_nodes=8, seed=0, limit_kw=None):
    """Max-norm of Phi+ - Phi- - g at sampled nodes via approach limits.

    Independent of the Plemelj identities: both one-sided values come
    from Richardson limits along the normal; limit_kw tunes them.
    """
    kw = dict(limit_kw or {})
    rng = np.random.default_rng(seed)
    idx = rng.choice(mesh.node_count, size=min(sample_nodes,
                                               mesh.node_count),
                     replace=False)
    worst = 0.0
    for i in idx:
        plus = boundary_limit(mesh, sol.density, int(i), "+", side=sol.side,
                              **kw)
        minus = boundary_limit(mesh, sol.density, int(i), "-", side=sol.side,
                               **kw)
        diff = plus.coeffs - minus.coeffs - g.samples[i]
        worst = max(worst, float(np.linalg.norm(diff)))
    return worst


# -- general multivector row inversion --------------------------------------------

def _left_mult_matrices(ctx, rows):
    """Batched matrices L with (x y)_c = (L[x] y)_c for each row x."""
    N = rows.shape[0]
    L = np.zeros((N, ctx.dim, ctx.dim))
    sign = ctx.sign_table
    for a in range(ctx.dim):
        col = rows[:, a]
        if not np.any(col):
            continue
        for b in range(ctx.dim):
            L[:, a ^ b, b] += sign[a, b] * col
    return L


def invert_rows(ctx, rows, rtol=1e-10):
    """Two-sided inverses of multivector coefficient rows (N, dim).

    Solves the left-multiplication systems L[x] y = e0 and verifies
    y x = x y = 1; raises SingularInputError when a row is singular or
    only one-sided invertible.
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=np.float64))
    e0 = np.zeros(ctx.dim)
    e0[0] = 1.0
    L = _left_mult_matrices(ctx, rows)
    try:
        rhs = np.broadcast_to(e0, rows.shape)[..., None].copy()
        inv = np.linalg.solve(L, rhs)[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularInputError("non-invertible coefficient row") from exc
    scale = np.linalg.norm(rows, axis=1) * np.linalg.norm(inv, axis=1)
    for prod in (_mv_rows_product(ctx, rows, inv),
                 _mv_rows_product(ctx, inv, rows)):
        err = np.linalg.norm(prod - e0[None, :], axis=1)
        bad = err > rtol * np.maximum(scale, 1.0)
        if np.any(bad):
            j = int(np.argmax(err))
            raise SingularInputError(
                "row %d is not two-sided invertible (residual %.3g)"
                % (j, float(err[j])))
    return inv


# -- constant-gap conjugation ------------------------------------------------------

def solve_constant_gap(mesh, g: BoundaryDensity, G, m: int, side="left",
                       G_inverse=None):
    """Solve Phi+ = Phi- G + g with a constant invertible gap factor G.

    The transform Phi = (S[g] + P) X with X = 1 on Omega+ and X = G^{-1}
    on Omega- reduces the problem to the jump problem for g, so the
    solvability conditions and free polynomial slots are those of
    solve_jump_rm.  G may be any invertible constant multivector; pass
    G_inverse to skip the generic inversion.
    """
    ctx = mesh.context
    Gc = _as_coeff_rows(ctx, G, 1)[0]
    if G_inverse is not None:
        Ginv = _as_coeff_rows(ctx, G_inverse, 1)[0]
        e0 = np.zeros(ctx.dim)
        e0[0] = 1.0
        for prod in (_mv_rows_product(ctx, Gc[None, :], Ginv[None, :]),
                     _mv_rows_product(ctx, Ginv[None, :], Gc[None, :])):
            if not np.allclose(prod[0], e0, atol=1e-9 * max(
                    1.0, float(np.abs(Gc).max()))):
                raise SingularInputError("supplied G_inverse does not invert G")
    else:
        Ginv = invert_rows(ctx, Gc[None, :])[0]
    sol, report = solve_jump_rm(mesh, g, m, side=side)
    if sol is None:
        return None, report
    return replace(sol, gap_inverse=Ginv), report


def constant_gap_residual(mesh, sol: SectionalSolution, g: BoundaryDensity,
                          G, sample_nodes=8, seed=0, limit_kw=None):
    """Max-norm of Phi+ - Phi- G - g at sampled nodes via approach limits."""
    ctx = mesh.context
    kw = dict(limit_kw or {})
    Gc = _as_coeff_rows(ctx, G, 1)[0]
    rng = np.random.default_rng(seed)
    idx = rng.choice(mesh.node_count, size=min(sample_nodes,
                                               mesh.node_count),
                     replace=False)
    worst = 0.0
    for i in idx:
        pl = boundary_limit(mesh, sol.density, int(i), "+", side=sol.side,
                            **kw)
        mi = boundary_limit(mesh, sol.density, int(i), "-", side=sol.side,
                            **kw)
        poly = sol._poly_rows(mesh.nodes[int(i)][None, :])[0]
        plus = pl.coeffs + poly
        minus = mi.coeffs + poly
        if sol.gap_inverse is not None:
            minus = _mv_rows_product(ctx, minus[None, :],
                                     np.asarray(sol.gap_inverse)[None, :])[0]
        recomposed = _mv_rows_product(ctx, minus[None, :], Gc[None, :])[0]
        diff = plus - recomposed - g.samples[int(i)]
        worst = max(worst, float(np.linalg.norm(diff)))
    return worst


# -- interior Dirichlet-type problem ----------------------------------------------

@dataclass(frozen=True)
class DirichletReport:
    """Outcome of the interior boundary-reproduction problem.

    solvable is decided from a refinement trend: the criterion residual
    must drop under one refinement (quadrature-dominated) instead of
    stabilizing at a nonzero limit.  residual_exterior is the probe
    max-norm of C[g] outside, residual_pv the node max-norm of
    PV C[g] - g/2; attainment_error (continuous mode) is the symmetric-
    difference reconstruction error.  The failing residual field is
    reported instead of raising.
    """

    solvable: bool
    mode: str
    criterion: str
    residual_exterior: float
    residual_pv: float
    residual_fine: float
    threshold: float
    attainment_error: float
    residual_field: np.ndarray
    solution: object


def _dirichlet_residuals(mesh, g, criterion, sample_idx, probe_dirs):
    vol_probe = math.nan
    pv_res = math.nan
    field = np.zeros(0)
    if criterion in ("exterior", "both"):
        R = mesh.spec.radius if mesh.spec is not None else _scale(mesh)
        center = (mesh.spec.center_array if mesh.spec is not None
                  else mesh.nodes.mean(axis=0))
        vals = []
        for v in probe_dirs:
            w = center + 2.0 * R * v
            val = cauchy_integral(mesh, g, w, method="raw").value
            vals.append(float(np.linalg.norm(val.coeffs)))
        vol_probe = max(vals)
        field = np.asarray(vals)
    if criterion in ("pv", "both"):
        pv = principal_value_nodes(mesh, g, indices=sample_idx)
        res = pv - 0.5 * g.samples[sample_idx]
        pv_res = float(np.linalg.norm(res, axis=1).max())
        field = np.linalg.norm(res, axis=1)
    return vol_probe, pv_res, field


def solve_dirichlet(mesh, g: BoundaryDensity, mode=None, criterion=None,
                    threshold=None, sample_nodes=64, probes=8, seed=0):
    """Decide and solve the interior problem Phi+ regular, Phi+|Gamma = g.

    Solvability criteria: the exterior integral C[g] vanishes off the
    closure ('exterior'), or equivalently PV C[g] = g/2 at the nodes
    ('pv').  Holder mode may use either (default 'both' cross-checks);
    continuous mode uses 'exterior' plus a symmetric-difference
    attainment check.  Without an explicit threshold the verdict comes
    from a refinement trend, which needs the density to carry an exact
    evaluator.
    """
    if mode is None:
        mode = "holder" if g.is_holder else "continuous"
    if mode == "continuous" and criterion == "pv":
        raise ValueError("the principal-value criterion requires Holder data")
    if criterion is None:
        criterion = "both" if mode == "holder" else "exterior"
    ctx = mesh.context
    rng = np.random.default_rng(seed)
    sample_idx = np.unique(np.linspace(0, mesh.node_count - 1,
                                       min(sample_nodes, mesh.node_count)
                                       ).astype(np.int64))
    probe_dirs = rng.standard_normal((probes, ctx.n + 1))
    probe_dirs /= np.linalg.norm(probe_dirs, axis=1, keepdims=True)

    ext_res, pv_res, field = _dirichlet_residuals(mesh, g, criterion,
                                                  sample_idx, probe_dirs)
    coarse = np.nanmax([ext_res, pv_res])
    gmax = max(float(np.abs(g.samples).max()), 1e-300)

    fine_val = math.nan
    if threshold is None:
        if g.evaluator is None or mesh.spec is None:
            raise ValueError("automatic threshold needs an evaluator-backed "
                             "density on a spec-built mesh; pass threshold=")
        fine = refine(mesh)
        gf = BoundaryDensity.from_function(fine, g.evaluator,
                                           regularity=g.regularity)
        idx_f = np.unique(np.linspace(0, fine.node_count - 1,
                                      min(sample_nodes, fine.node_count)
                                      ).astype(np.int64))
        ef, pf, _ = _dirichlet_residuals(fine, gf, criterion, idx_f,
                                         probe_dirs)
        fine_val = np.nanmax([ef, pf])
        threshold = max(10.0 * max(coarse - fine_val, 0.0), 1e-10 * gmax)
        decided = fine_val
        # a residual that stays at a macroscopic fraction of the data can
        # pass the trend test while the quadrature is still pre-asymptotic;
        # never judge such data solvable
        solvable = bool(decided <= threshold and
                        decided <= DIRICHLET_SIGNIFICANCE * gmax)
    else:
        decided = coarse
        solvable = bool(decided <= threshold)

    attain = math.nan
    if mode == "continuous" and solvable:
        lam0 = 0.35 * _scale(mesh)
        lams = lam0 / 2.0 ** np.arange(4)
        errs = []
        for i in rng.choice(mesh.node_count, size=3, replace=False):
            rec = symmetric_difference_limit(mesh, g, int(i), lams)
            errs.append(float(np.linalg.norm(rec.coeffs - g.samples[i])))
        attain = max(errs)
        solvable = solvable and attain <= 0.05 * gmax

    sol = None
    if solvable:
        sol = SectionalSolution(mesh, g, "left", -mesh.n, (),
                                interior_only=True)
    return DirichletReport(solvable, mode, criterion, ext_res, pv_res,
                           fine_val, threshold, attain, field, sol)


# -- singular operator inversion ---------------------------------------------------

def invert_cauchy_pv(mesh, f: BoundaryDensity, side="left") -> BoundaryDensity:
    """Solve S[phi] = f where S = (2/V_n) PV int E dsigma (.).

    The operator is involutive (S^2 = I), so the solution is phi = S[f],
    returned as node samples.
    """
    rows = 2.0 * principal_value_nodes(mesh, f, side=side)
    return BoundaryDensity(mesh, rows, regularity=f.regularity)


# -- characteristic singular integral equation --------------------------------------

@dataclass(frozen=True)
class CharacteristicCoefficients:
    """Validated coefficient pair (a, b) of the characteristic equation.

    Requires a +/- b invertible at every node and the right quotient
    G = (a - b)(a + b)^{-1} constant across nodes (relative spread below
    spread_tol); the closed-form solution is only valid in that class.
    """

    a: BoundaryDensity
    b: BoundaryDensity
    quotient: np.ndarray
    quotient_spread: float
    sum_inverse: np.ndarray
    diff_inverse: np.ndarray

    @classmethod
    def from_ab(cls, mesh, a: BoundaryDensity, b: BoundaryDensity,
                spread_tol=1e-8):
        ctx = mesh.context
        sum_inv = invert_rows(ctx, a.samples + b.samples)
        diff_inv = invert_rows(ctx, a.samples - b.samples)
        Grows = _mv_rows_product(ctx, a.samples - b.samples, sum_inv)
        Gmean = Grows.mean(axis=0)
        spread = float(np.linalg.norm(Grows - Gmean[None, :], axis=1).max())
        spread /= max(float(np.linalg.norm(Gmean)), 1e-300)
        if spread > spread_tol:
            raise ValueError(
                "right quotient (a-b)(a+b)^{-1} varies across nodes "
                "(relative spread %.3g > %.3g)" % (spread, spread_tol))
        return cls(a, b, Gmean, spread, sum_inv, diff_inv)


@dataclass(frozen=True)
class SIESolution:
    """Solution of the characteristic equation with its residual."""

    phi: BoundaryDensity
    residual: float
    coefficients: CharacteristicCoefficients


def apply_characteristic_lhs(mesh, a: BoundaryDensity, b: BoundaryDensity,
                             phi: BoundaryDensity):
    """Rows of phi a + (2/V_n) [PV int E dsigma phi] b at the nodes."""
    ctx = mesh.context
    pv = principal_value_nodes(mesh, phi)
    return (_mv_rows_product(ctx, phi.samples, a.samples)
            + 2.0 * _mv_rows_product(ctx, pv, b.samples))


def solve_characteristic_sie(mesh, coefficients, f: BoundaryDensity,
                             regularity=None) -> SIESolution:
    """Solve phi a + (2/V_n)[PV int E dsigma phi] b = f in closed form.

    phi = (1/2)[f (a+b)^{-1} + f (a-b)^{-1}] - 2 PV C[psi] with
    psi = f (a-b)^{-1} b (a+b)^{-1}; valid when the right quotient
    (a-b)(a+b)^{-1} is constant.  coefficients may be a
    CharacteristicCoefficients or an (a, b) pair of densities.  The
    residual of the equation at the nodes is computed and reported.
    """
    if isinstance(coefficients, CharacteristicCoefficients):
        co = coefficients
    else:
        a, b = coefficients
        co = CharacteristicCoefficients.from_ab(mesh, a, b)
    ctx = mesh.context
    reg = regularity if regularity is not None else f.regularity
    half = 0.5 * (_mv_rows_product(ctx, f.samples, co.sum_inverse)
                  + _mv_rows_product(ctx, f.samples, co.diff_inverse))
    psi = _mv_rows_product(
        ctx, _mv_rows_product(ctx, _mv_rows_product(
            ctx, f.samples, co.diff_inverse), co.b.samples), co.sum_inverse)
    pv_psi = principal_value_nodes(mesh, BoundaryDensity(mesh, psi,
                                                         regularity=reg))
    phi = BoundaryDensity(mesh, half - 2.0 * pv_psi, regularity=reg)
    lhs = apply_characteristic_lhs(mesh, co.a, co.b, phi)
    residual = float(np.linalg.norm(lhs - f.samples, axis=1).max())
    return SIESolution(phi, residual, co)


# -- full equation left-hand side ----------------------------------------------------

def _kernel_matrix(mesh, k):
    """Sample k into kmat[j, i] = coefficients of k(x_j, t_i)."""
    ctx = mesh.context
    N = mesh.node_count
    nbytes = N * N * ctx.dim * 8
    if nbytes > KERNEL_MATRIX_BYTE_CAP:
        raise ValueError("kernel matrix would need %.2g GB; use a coarser "
                         "mesh level" % (nbytes / 1e9))
    if isinstance(k, np.ndarray):
        if k.shape != (N, N, ctx.dim):
            raise ValueError("kernel matrix must have shape (N, N, 2^n)")
        return np.ascontiguousarray(k, dtype=np.float64)
    kmat = np.empty((N, N, ctx.dim))
    for i in range(N):
        kmat[:, i, :] = _as_coeff_rows(ctx, k(mesh.nodes, mesh.nodes[i]), N)
    return kmat


def _matrix_pv_rows(mesh, dmat, correction=True):
    """Raw PV int E dsigma d_i(.) at every node i for per-target densities.

    dmat[j, i] holds the density of target i sampled at node j; returns
    (N, dim) rows of the unnormalized principal values, with the
    singular-cell gradient correction (optional) and the (V_n/2)
    diagonal term.
    """
    ctx = mesh.context
    nuw = mesh.measure_coeffs()
    core = _accel.pv_matrix(ctx, mesh.nodes, nuw, dmat)
    N = mesh.node_count
    vol = unit_sphere_area(mesh.n)
    diag = dmat[np.arange(N), np.arange(N), :]
    out = core + 0.5 * vol * diag
    if not correction:
        return out
    d = mesh.n
    nb, wts, frame = gradient_stencil(mesh)
    cols = dmat[nb, np.arange(N)[:, None], :]
    derivs = np.einsum("ank,nkm->anm", wts, cols)
    sigma_d = 2.0 if d == 1 else unit_sphere_area(d - 1)
    prefac = (d * mesh.weights / sigma_d) ** (1.0 / d) * (sigma_d / d)
    nu = mesh.normals
    corr = np.zeros((N, ctx.dim))
    for a in range(d):
        Tbar = frame[:, a, :].copy()
        Tbar[:, 1:] *= -1.0
        TbarNu = _accel._pp_products_np(Tbar, nu, _accel._sign_full(ctx),
                                        _accel._pblades(ctx), ctx.dim)
        corr += _mv_rows_product(ctx, TbarNu, derivs[a])
    return out + corr * prefac[:, None]


def apply_full_sie_lhs(mesh, a: BoundaryDensity, k, phi: BoundaryDensity):
    """Rows of phi a + (2/V_n) PV int E dsigma phi(x) k(x, t) at the nodes.

    k is a callable k(x_rows, t) -> (N, dim) coefficient rows for fixed
    t, or a presampled (N, N, dim) array kmat[j, i] = k(x_j, t_i).
    Evaluation-only: no inversion theory is attached to the full kernel.
    """
    ctx = mesh.context
    kmat = _kernel_matrix(mesh, k)
    N = mesh.node_count
    dmat = np.empty_like(kmat)
    for i in range(N):
        dmat[:, i, :] = _mv_rows_product(ctx, phi.samples, kmat[:, i, :])
    vol = unit_sphere_area(mesh.n)
    pv = _matrix_pv_rows(mesh, dmat) / vol
    return _mv_rows_product(ctx, phi.samples, a.samples) + 2.0 * pv


# -- iterated principal values -------------------------------------------------------

@dataclass(frozen=True)
class PoincareBertrandReport:
    """Numerical comparison of iterated vs exchanged singular integrals.

    For sampled nodes t: lhs = PV_x int E(x-t) dsigma_x
    [PV_tau int E(tau-x) dsigma_tau k(tau, x)], rhs = (V_n/2)^2 k(t, t)
    plus the exchanged-order double sum.  No pass/fail is attached; the
    discrepancy and the two special-case cross-checks are reported as
    data.  separable_error applies when k(tau, x) = f(tau): the lhs must
    then equal (V_n/2)^2 f(t).  orthogonality_max samples the pair
    integral PV_x int E(x-t) dsigma E(tau-x) at tau != t, which must
    vanish in the limit.
    """

    sample_indices: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    discrepancy: np.ndarray
    discrepancy_max: float
    orthogonality_max: float
    separable_error: float


def _pair_orthogonality(mesh, it, jt):
    """Regularized PV_x of E(tau_j - x) at node t_i, both nodes dropped."""
    ctx = mesh.context
    nodes = mesh.nodes
    t = nodes[it]
    tau = nodes[jt]
    # density rows d(x_l) = E(tau - x_l) = -E(x_l - tau)
    comps = -kernel_E_rows(nodes, tau)
    dens = nuw_to_coeffs(ctx, comps)
    Ecomp = _accel._kernel_E_block(t[None, :], nodes, mesh.n)[0]
    Erows = nuw_to_coeffs(ctx, Ecomp)
    nuw_rows = nuw_to_coeffs(ctx, mesh.measure_coeffs())
    A = _mv_rows_product(ctx, Erows, nuw_rows)
    diff = dens - dens[it][None, :]
    terms = _mv_rows_product(ctx, A, diff)
    terms[it] = 0.0
    terms[jt] = 0.0
    vol = unit_sphere_area(mesh.n)
    return terms.sum(axis=0) + 0.5 * vol * dens[it]


def poincare_bertrand_discrepancy(mesh, k=None, f: BoundaryDensity = None,
                                  sample_nodes=8, seed=0):
    """Probe the commutation defect of iterated principal values.

    Pass a two-point kernel k (callable or presampled matrix) for the
    general experiment, or a density f for the separable case
    k(tau, x) = f(tau) whose iterated integral collapses to
    (V_n/2)^2 f(t).  Returns a PoincareBertrandReport; interpretation
    (convergence trends under refinement) is left to the caller.
    """
    if (k is None) == (f is None):
        raise ValueError("pass exactly one of k or f")
    ctx = mesh.context
    N = mesh.node_count
    vol = unit_sphere_area(mesh.n)
    rng = np.random.default_rng(seed)
    idx = np.sort(rng.choice(N, size=min(sample_nodes, N), replace=False))

    if f is not None:
        inner = vol * principal_value_nodes(mesh, f)
        inner_d = BoundaryDensity(mesh, inner, regularity=f.regularity)
        lhs = vol * principal_value_nodes(mesh, inner_d, indices=idx)
        rhs = (0.5 * vol) ** 2 * f.samples[idx]
        disc = lhs - rhs
        sep_err = float(np.linalg.norm(disc, axis=1).max())
    else:
        kmat = _kernel_matrix(mesh, k)
        inner = _matrix_pv_rows(mesh, kmat)
        inner_d = BoundaryDensity(mesh, inner,
                                  regularity=("holder", 1.0, None))
        lhs = vol * principal_value_nodes(mesh, inner_d, indices=idx)
        nuw = mesh.measure_coeffs()
        diag = kmat[np.arange(N), np.arange(N), :]
        rhs = np.empty((idx.size, ctx.dim))
        for row, it in enumerate(idx):
            exchanged = _accel.pb_rhs(ctx, mesh.nodes, nuw, kmat, int(it))
            rhs[row] = (0.5 * vol) ** 2 * diag[it] + exchanged
        disc = lhs - rhs
        sep_err = math.nan

    orth = 0.0
    for it in idx[: min(4, idx.size)]:
        jt = int((it + N // 3) % N)
        if jt == it:
            continue
        orth = max(orth, float(np.linalg.norm(
            _pair_orthogonality(mesh, int(it), jt))))
    return PoincareBertrandReport(idx, lhs, np.asarray(rhs), disc,
                                  float(np.linalg.norm(disc, axis=1).max()),
                                  orth, sep_err)
