"""Fueter polynomials, moments, Taylor/Laurent machinery, order at infinity."""

import math

import numpy as np
import pytest

from hypercauchy.cauchy import BoundaryDensity, cauchy_integral, unit_sphere_area
from hypercauchy.clifford_core import batch_product, get_context
from hypercauchy.fueter import (
    DegreeOverflowError,
    MAX_DEGREE,
    MultiIndex,
    QuadratureDegeneracyError,
    boundary_moment,
    build_moment_table,
    derivative_at_origin,
    dirac_apply,
    hyper_variable,
    kernel_derivative,
    laurent_term,
    multi_indices,
    order_at_infinity,
    surface_hull_radius,
    symmetric_power,
    symmetric_power_rows,
    taylor_component,
)
from hypercauchy.surface import DomainSpec, build_mesh
from hypercauchy._corpus import interior_pole, kernel_trace

MONOGENIC_TOL = 1e-6        # central-difference truncation at step 1e-4
MONOGENIC_TOL_KERNEL = 1e-6  # kernel has large higher derivatives
MOMENT_TOL = 1e-14
LAURENT_TOL = 1e-5
SLOPE_DEV = 0.2


def _sym_density(mesh, alpha, coeff=None):
    ctx = mesh.context
    coeff = np.eye(ctx.dim)[0] if coeff is None else coeff

    def fn(pts):
        p = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        rows = symmetric_power_rows(ctx, alpha, p)
        out = batch_product(ctx, rows, np.broadcast_to(coeff, rows.shape).copy())
        return out if np.asarray(pts).ndim == 2 else out[0]

    return BoundaryDensity.from_function(mesh, fn)


def test_multi_index_validation():
    assert MultiIndex((2, 1)).degree == 3
    assert MultiIndex((2, 1)).factorial == 2
    with pytest.raises(ValueError):
        MultiIndex((-1, 2))
    with pytest.raises(DegreeOverflowError):
        MultiIndex((MAX_DEGREE, 1))


def test_multi_indices_enumeration():
    got = list(multi_indices(2, 2))
    assert got == [(2, 0), (1, 1), (0, 2)]
    # count is C(k + n - 1, n - 1)
    assert len(list(multi_indices(3, 4))) == math.comb(4 + 2, 2)


def test_hyper_variable_components():
    ctx = get_context(2)
    x = np.array([0.5, -1.0, 2.0])
    z1 = hyper_variable(ctx, 1, x)
    assert z1.coeffs[0] == x[1] and z1.coeffs[1] == -x[0]
    with pytest.raises(ValueError):
        hyper_variable(ctx, 3, x)


def test_symmetric_power_is_symmetrized_product():
    ctx = get_context(2)
    rng = np.random.default_rng(0)
    x = rng.normal(size=3)
    z1 = hyper_variable(ctx, 1, x)
    z2 = hyper_variable(ctx, 2, x)
    # arrangement-sum convention: Z^{(1,1)} = z1 z2 + z2 z1
    want = ((z1 * z2) + (z2 * z1)).coeffs
    got = symmetric_power(ctx, (1, 1), x)
    assert np.allclose(got.coeffs, want, atol=1e-14)
    rows = symmetric_power_rows(ctx, (1, 1), np.atleast_2d(x))
    assert np.allclose(rows[0], want, atol=1e-14)


@pytest.mark.parametrize("n,alpha", [
    (1, (3,)),
    (2, (2, 1)),
    (3, (1, 0, 1)),
])
def test_fueter_polynomials_two_sided_monogenic(n, alpha):
    ctx = get_context(n)
    rng = np.random.default_rng(4)
    f = lambda x: symmetric_power(ctx, alpha, x)
    for _ in range(3):
        x = rng.normal(size=n + 1)
        for side in ("left", "right"):
            got = dirac_apply(ctx, f, x, side=side)
            assert np.max(np.abs(got.coeffs)) <= MONOGENIC_TOL


def test_kernel_trace_monogenic(circle_spec, circle_mesh):
    ctx = circle_mesh.context
    pole = interior_pole(circle_spec, seed=2, frac=0.35)
    ker = kernel_trace(circle_mesh, pole)
    x = np.array([0.9, 0.35])
    got = dirac_apply(ctx, ker.evaluator, x)
    assert np.max(np.abs(got.coeffs)) <= MONOGENIC_TOL_KERNEL


def test_kernel_derivative_matches_difference_quotients():
    ctx = get_context(2)
    rng = np.random.default_rng(5)
    y = rng.normal(size=3) * 2.0
    from hypercauchy.cauchy import kernel_E
    for alpha in [(1, 0), (0, 1), (1, 1), (2, 0)]:
        kd = kernel_derivative(ctx, alpha)
        got = kd.evaluate(y).as_point()
        step = 1e-3

        def fd(point, a):
            if sum(a) == 0:
                return kernel_E(point, np.zeros(3)).as_point()
            j = next(i for i, v in enumerate(a) if v > 0)
            down = tuple(v - (1 if i == j else 0) for i, v in enumerate(a))
            ep = np.zeros(3)
            ep[j + 1] = step
            return (fd(point + ep, down) - fd(point - ep, down)) / (2 * step)

        assert np.max(np.abs(got - fd(y, alpha))) <= 1e-5


def test_boundary_moment_reproduces_pole(circle_spec, circle_mesh):
    # (1/V) int Z^alpha dsigma E(. - a) = Z^alpha(a) for interior poles
    ctx = circle_mesh.context
    pole = interior_pole(circle_spec, seed=2, frac=0.35)
    ker = kernel_trace(circle_mesh, pole)
    V = unit_sphere_area(1)
    for alpha in [(0,), (1,), (2,), (3,)]:
        m = boundary_moment(circle_mesh, ker, alpha)
        want = symmetric_power(ctx, alpha, pole)
        assert np.max(np.abs(m.coeffs / V - want.coeffs)) <= MOMENT_TOL


def test_boundary_moment_reproduces_pole_sphere(sphere_spec, sphere_mesh):
    ctx = sphere_mesh.context
    pole = interior_pole(sphere_spec, seed=2, frac=0.35)
    ker = kernel_trace(sphere_mesh, pole)
    V = unit_sphere_area(2)
    for alpha in [(0, 0), (1, 0), (1, 1)]:
        m = boundary_moment(sphere_mesh, ker, alpha)
        want = symmetric_power(ctx, alpha, pole)
        assert np.max(np.abs(m.coeffs / V - want.coeffs)) <= 1e-4


def test_moment_table(circle_mesh):
    f = _sym_density(circle_mesh, (2,))
    table = build_moment_table(circle_mesh, f, 3)
    assert table.max_degree == 3 and table.side == "left"
    for k in range(4):
        for alpha in multi_indices(1, k):
            want = boundary_moment(circle_mesh, f, alpha).coeffs
            assert np.array_equal(table.moment(alpha), want)
    with pytest.raises(DegreeOverflowError):
        build_moment_table(circle_mesh, f, MAX_DEGREE + 1)


def test_derivative_at_origin_orthogonality(circle_mesh):
    # [d^alpha Z^beta](0) = |alpha|! delta_{alpha beta}
    f = _sym_density(circle_mesh, (2,))
    for alpha, want in [((1,), 0.0), ((2,), 2.0), ((3,), 0.0)]:
        got = derivative_at_origin(circle_mesh, f, alpha)
        ref = np.zeros(2)
        ref[0] = want
        assert np.max(np.abs(got - ref)) <= 1e-12


def test_taylor_component_recovers_coefficients(circle_mesh):
    ctx = circle_mesh.context
    rng = np.random.default_rng(2)
    coeffs = {0: rng.normal(size=2), 1: rng.normal(size=2),
              2: rng.normal(size=2)}

    def fn(pts):
        p = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        out = np.zeros((p.shape[0], 2))
        for k, c in coeffs.items():
            rows = symmetric_power_rows(ctx, (k,), p)
            out += batch_product(ctx, rows,
                                 np.broadcast_to(c, rows.shape).copy())
        return out if np.asarray(pts).ndim == 2 else out[0]

    f = BoundaryDensity.from_function(circle_mesh, fn)
    x = np.array([0.3, -0.2])
    total = np.zeros(2)
    for k, c in coeffs.items():
        ev = taylor_component(f, k, 1.0, circle_mesh)
        assert ev.degree == k
        # stored raw derivatives carry the |alpha|! normalization
        assert np.allclose(ev.coefficients[(k,)],
                           math.factorial(k) * c, atol=1e-12)
        total += ev(x).coeffs
    assert np.max(np.abs(total - fn(x))) <= 1e-12


def test_taylor_component_degeneracy_guards(circle_spec):
    coarse = build_mesh(circle_spec, 0)
    f = BoundaryDensity.constant(coarse, 1.0)
    with pytest.raises(QuadratureDegeneracyError):
        taylor_component(f, 0, 0.05, coarse)
    with pytest.raises(DegreeOverflowError):
        taylor_component(f, MAX_DEGREE + 1, 1.0, coarse)


def test_laurent_terms_sum_to_exterior_field(circle_spec, circle_mesh):
    pole = interior_pole(circle_spec, seed=2, frac=0.35)
    g = kernel_trace(circle_mesh, pole)
    w = np.array([2.5, 1.0])
    want = cauchy_integral(circle_mesh, g, w).value.coeffs
    total = np.zeros(2)
    for k in range(MAX_DEGREE + 1):
        ev = laurent_term(circle_mesh, g, k)
        assert ev.degree == k
        total += ev(w).coeffs
    assert np.max(np.abs(-total - want)) <= LAURENT_TOL


def test_laurent_evaluator_rejects_hull(circle_spec, circle_mesh):
    pole = interior_pole(circle_spec, seed=2, frac=0.35)
    g = kernel_trace(circle_mesh, pole)
    ev = laurent_term(circle_mesh, g, 0)
    assert ev.rho == pytest.approx(surface_hull_radius(circle_mesh))
    with pytest.raises(ValueError):
        ev(np.array([0.5, 0.0]))
    with pytest.raises(DegreeOverflowError):
        laurent_term(circle_mesh, g, MAX_DEGREE + 1)


def test_order_at_infinity_moment_and_slope(circle_spec, circle_mesh):
    pole = interior_pole(circle_spec, seed=2, frac=0.35)
    g = kernel_trace(circle_mesh, pole)
    rep = order_at_infinity(circle_mesh, g)
    assert rep.order == -1 and rep.moment_route == -1
    assert rep.first_moment_degree == 0
    assert not rep.undetermined
    assert abs(rep.slope_raw - rep.slope_route) <= SLOPE_DEV


def test_order_at_infinity_zero_density(circle_mesh):
    zero = BoundaryDensity(circle_mesh,
                           np.zeros((circle_mesh.node_count, 2)))
    rep = order_at_infinity(circle_mesh, zero)
    assert rep.order == -math.inf
    assert not rep.undetermined


def test_order_at_infinity_evaluator_route(circle_spec, circle_mesh):
    pole = interior_pole(circle_spec, seed=2, frac=0.35)
    g = kernel_trace(circle_mesh, pole)
    ev = laurent_term(circle_mesh, g, 0)
    rep = order_at_infinity(mesh=circle_mesh, evaluator=ev)
    assert rep.order == -1.0
    assert math.isnan(rep.moment_route)
    with pytest.raises(ValueError):
        order_at_infinity(circle_mesh)


def test_dirac_apply_detects_non_monogenic():
    ctx = get_context(2)
    f = lambda x: ctx.scalar(x[1] ** 2)  # not in the kernel of D
    got = dirac_apply(ctx, f, np.array([0.3, 0.7, -0.2]))
    assert np.max(np.abs(got.coeffs)) > 1e-2
