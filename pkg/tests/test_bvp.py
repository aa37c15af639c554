"""Jump problems, gap conjugation, Dirichlet verdicts, SIE and iterated PVs."""

import math

import numpy as np
import pytest

from hypercauchy.bvp import (
    CharacteristicCoefficients,
    apply_characteristic_lhs,
    apply_full_sie_lhs,
    constant_gap_residual,
    invert_cauchy_pv,
    invert_rows,
    jump_residual,
    poincare_bertrand_discrepancy,
    solve_characteristic_sie,
    solve_constant_gap,
    solve_dirichlet,
    solve_jump_rm,
)
from hypercauchy.cauchy import (
    BoundaryDensity,
    principal_value_nodes,
    unit_sphere_area,
)
from hypercauchy.clifford_core import SingularInputError, get_context
from hypercauchy.fueter import DegreeOverflowError
from hypercauchy.surface import DomainSpec, build_mesh
from hypercauchy._corpus import (
    coordinate_trace,
    holomorphic_combo,
    interior_pole,
    kernel_combo,
    kernel_trace,
    random_smooth,
)

LIMIT_KW = {"lam0": 0.25, "terms": 5}   # tuned normal-limit parameters (circle)
JUMP_TOL = 1e-4
MOMENT_EXACT_TOL = 1e-10
SIE_CONST_TOL = 1e-14
SIE_RESIDUAL_TOL = 1e-10
INVOLUTION_TOL = 1e-10
PB_SEPARABLE_TOL = 1e-9


def test_jump_unconditional_with_free_slots(circle_mesh):
    g = random_smooth(circle_mesh, 7)
    sol, rep = solve_jump_rm(circle_mesh, g, 1)
    assert rep.verdict == "unconditional"
    assert rep.condition_count == 0
    assert rep.freedom_count == math.comb(2, 1)
    assert [a for a, _ in sol.polynomial] == [(0,), (1,)]
    assert jump_residual(circle_mesh, sol, g, limit_kw=LIMIT_KW) <= JUMP_TOL


def test_jump_polynomial_part_preserves_jump(circle_mesh):
    g = random_smooth(circle_mesh, 7)
    sol, _ = solve_jump_rm(circle_mesh, g, 1)
    shifted = sol.with_polynomial({(1,): np.array([0.3, -0.2])})
    base = jump_residual(circle_mesh, sol, g, limit_kw=LIMIT_KW)
    moved = jump_residual(circle_mesh, shifted, g, limit_kw=LIMIT_KW)
    assert abs(base - moved) <= 1e-12
    w = np.array([0.2, 0.3])
    delta = shifted.interior(w).coeffs - sol.interior(w).coeffs
    assert np.max(np.abs(delta)) > 1e-3  # the section itself does move
    with pytest.raises(KeyError):
        sol.with_polynomial({(2,): np.array([1.0, 0.0])})


def test_jump_decaying_class_needs_vanishing_moments(circle_spec, circle_mesh):
    # degree-1 combo has a vanishing total charge: solvable at m = -n-1
    g = kernel_combo(circle_mesh, 1)
    sol, rep = solve_jump_rm(circle_mesh, g, -2)
    assert rep.verdict == "solvable"
    assert rep.condition_count == 1
    assert max(rep.residuals.values()) <= rep.threshold
    assert jump_residual(circle_mesh, sol, g, limit_kw=LIMIT_KW) <= JUMP_TOL
    # a single pole has full charge: unsolvable, residual is exactly V_n
    bad = kernel_trace(circle_mesh, interior_pole(circle_spec, seed=2,
                                                  frac=0.35), scale=-1.0)
    sol_bad, rep_bad = solve_jump_rm(circle_mesh, bad, -2)
    assert sol_bad is None
    assert rep_bad.verdict == "unsolvable"
    assert rep_bad.condition_count == 1
    (residual,) = rep_bad.residuals.values()
    assert abs(residual - unit_sphere_area(1)) <= MOMENT_EXACT_TOL


def test_jump_degree_overflow(circle_mesh):
    g = random_smooth(circle_mesh, 7)
    with pytest.raises(DegreeOverflowError):
        solve_jump_rm(circle_mesh, g, -9)


def test_jump_exterior_order_controls(circle_spec, circle_mesh):
    g = kernel_combo(circle_mesh, 1)
    sol, _ = solve_jump_rm(circle_mesh, g, -2)
    w = np.array([2.5, -1.0])
    far = np.array([25.0, -10.0])
    near_mag = np.linalg.norm(sol.exterior(w).coeffs)
    far_mag = np.linalg.norm(sol.exterior(far).coeffs)
    # order <= -2: tenfold radius shrinks the field by >= ~100x
    assert far_mag <= near_mag / 50


def test_jump_continuous_density_warns(circle_mesh):
    g = BoundaryDensity(circle_mesh, random_smooth(circle_mesh, 7).samples,
                        regularity=("continuous",))
    with pytest.warns(UserWarning):
        solve_jump_rm(circle_mesh, g, 0)


def test_invert_rows_closed_form():
    ctx = get_context(1)
    inv = invert_rows(ctx, np.array([[2.0, 1.0]]))
    # (2 + e1)^{-1} = (2 - e1)/5
    assert np.allclose(inv[0], [0.4, -0.2], atol=1e-14)


def test_invert_rows_rejects_zero_divisors():
    ctx3 = get_context(3)
    row = np.zeros(8)
    row[0] = 1.0
    row[7] = 1.0   # 1 + e123 squares to 2*(1 + e123): a zero divisor
    with pytest.raises(SingularInputError):
        invert_rows(ctx3, row[None, :])
    with pytest.raises(SingularInputError):
        invert_rows(ctx3, np.zeros((1, 8)))


def test_invert_rows_random_batch():
    ctx = get_context(2)
    rng = np.random.default_rng(3)
    rows = rng.normal(size=(20, 4))
    inv = invert_rows(ctx, rows)
    from hypercauchy.clifford_core import batch_product
    e0 = np.eye(4)[0]
    for prod in (batch_product(ctx, rows, inv), batch_product(ctx, inv, rows)):
        assert np.max(np.abs(prod - e0[None, :])) <= 1e-9


def test_constant_gap_reduces_to_jump(circle_mesh):
    g = random_smooth(circle_mesh, 7)
    G = np.array([2.0, 1.0])
    sol, rep = solve_constant_gap(circle_mesh, g, G, 0)
    assert rep.verdict == "unconditional"
    assert sol.gap_inverse is not None
    res = constant_gap_residual(circle_mesh, sol, g, G, limit_kw=LIMIT_KW)
    assert res <= JUMP_TOL


def test_constant_gap_validates_inverse(circle_mesh):
    g = random_smooth(circle_mesh, 7)
    G = np.array([2.0, 1.0])
    with pytest.raises(SingularInputError):
        solve_constant_gap(circle_mesh, g, G, 0,
                           G_inverse=np.array([1.0, 0.0]))
    ctx3_row = np.zeros(8)
    ctx3_row[0] = ctx3_row[7] = 1.0
    sphere3 = build_mesh(DomainSpec("sphere", 3,
                                    center=(0.0,) * 4, radius=1.0), 0)
    g3 = BoundaryDensity.constant(sphere3, 1.0)
    with pytest.raises(SingularInputError):
        solve_constant_gap(sphere3, g3, ctx3_row, 0)


def test_dirichlet_verdicts(circle_spec):
    mesh = build_mesh(circle_spec, 3)
    good = holomorphic_combo(mesh, 19)
    rep = solve_dirichlet(mesh, good)
    assert rep.solvable
    assert rep.mode == "holder" and rep.criterion == "both"
    assert rep.solution is not None
    bad = kernel_trace(mesh, interior_pole(circle_spec, seed=4, frac=0.3))
    rep_bad = solve_dirichlet(mesh, bad)
    assert not rep_bad.solvable
    assert rep_bad.solution is None


def test_dirichlet_solution_reproduces_data(circle_spec):
    mesh = build_mesh(circle_spec, 3)
    good = holomorphic_combo(mesh, 19)
    rep = solve_dirichlet(mesh, good)
    i = 11
    lam0 = 0.35
    vals = []
    for k in range(4):
        w = mesh.nodes[i] - (lam0 / 2.0 ** k) * mesh.normals[i]
        vals.append(rep.solution.interior(w, method="subtract").coeffs)
    from hypercauchy.cauchy import richardson_limit
    lim = richardson_limit(2.0, vals)
    assert np.max(np.abs(lim - good.samples[i])) <= 1e-3
    with pytest.raises(ValueError):
        rep.solution.exterior(np.array([2.0, 0.0]))


def test_dirichlet_explicit_threshold_and_guards(circle_mesh):
    good = holomorphic_combo(circle_mesh, 19)
    raw = BoundaryDensity(circle_mesh, good.samples)  # no evaluator attached
    rep = solve_dirichlet(circle_mesh, raw, threshold=1e-6)
    assert rep.solvable
    with pytest.raises(ValueError):
        solve_dirichlet(circle_mesh, raw)  # auto threshold needs evaluator
    with pytest.raises(ValueError):
        solve_dirichlet(circle_mesh, good, mode="continuous", criterion="pv")


def test_dirichlet_continuous_mode(circle_spec):
    mesh = build_mesh(circle_spec, 3)
    good = holomorphic_combo(mesh, 19)
    cont = BoundaryDensity(mesh, good.samples, evaluator=good.evaluator,
                           regularity=("continuous",))
    rep = solve_dirichlet(mesh, cont)
    assert rep.mode == "continuous" and rep.criterion == "exterior"
    assert rep.solvable
    assert np.isfinite(rep.attainment_error)


def test_sie_constant_coefficient_oracle(circle_mesh):
    # phi a + 2 PV C[phi] b = f with a = 3, b = 1, f = 1 has phi = 1/4:
    # the PV of a constant is the half charge, so lhs = phi (a + b)
    a = BoundaryDensity.constant(circle_mesh, 3.0)
    b = BoundaryDensity.constant(circle_mesh, 1.0)
    f = BoundaryDensity.constant(circle_mesh, 1.0)
    sie = solve_characteristic_sie(circle_mesh, (a, b), f)
    want = np.zeros(2)
    want[0] = 0.25
    assert np.max(np.abs(sie.phi.samples - want[None, :])) <= SIE_CONST_TOL
    assert sie.residual <= 1e-12


def test_sie_scaled_coefficient_family(circle_mesh):
    # a = 3u, b = u with a varying scalar u keeps the right quotient constant
    u = 2.0 + circle_mesh.nodes[:, 0][:, None] * np.array([1.0, 0.0])
    a = BoundaryDensity(circle_mesh, 3.0 * u)
    b = BoundaryDensity(circle_mesh, u.copy())
    co = CharacteristicCoefficients.from_ab(circle_mesh, a, b)
    assert co.quotient_spread <= 1e-12
    f = random_smooth(circle_mesh, 9)
    sie = solve_characteristic_sie(circle_mesh, co, f)
    assert sie.residual <= SIE_RESIDUAL_TOL


def test_sie_rejects_varying_quotient(circle_mesh):
    a = coordinate_trace(circle_mesh, 0)
    b = BoundaryDensity.constant(circle_mesh, 1.0)
    with pytest.raises(ValueError):
        CharacteristicCoefficients.from_ab(circle_mesh, a, b)


def test_full_sie_matches_characteristic_for_constant_kernel(circle_spec):
    mesh = build_mesh(circle_spec, 2)
    phi = random_smooth(mesh, 3)
    a = BoundaryDensity.constant(mesh, 3.0)
    b = BoundaryDensity.constant(mesh, 1.0)

    def k_const(x_rows, t):
        out = np.zeros((x_rows.shape[0], 2))
        out[:, 0] = 1.0
        return out

    lhs_full = apply_full_sie_lhs(mesh, a, k_const, phi)
    lhs_char = apply_characteristic_lhs(mesh, a, b, phi)
    assert np.max(np.abs(lhs_full - lhs_char)) <= 1e-12


def test_kernel_matrix_byte_cap(circle_mesh, monkeypatch):
    monkeypatch.setattr("hypercauchy.bvp.KERNEL_MATRIX_BYTE_CAP", 1000)
    a = BoundaryDensity.constant(circle_mesh, 1.0)
    phi = random_smooth(circle_mesh, 3)

    def k_const(x_rows, t):
        out = np.zeros((x_rows.shape[0], 2))
        out[:, 0] = 1.0
        return out

    with pytest.raises(ValueError):
        apply_full_sie_lhs(circle_mesh, a, k_const, phi)


def test_invert_cauchy_pv_involution(circle_mesh):
    f = random_smooth(circle_mesh, 13)
    phi = invert_cauchy_pv(circle_mesh, f)
    applied = 2.0 * principal_value_nodes(circle_mesh, phi)
    assert np.max(np.abs(applied - f.samples)) <= INVOLUTION_TOL


def test_poincare_bertrand_separable(circle_mesh):
    f = random_smooth(circle_mesh, 21)
    rep = poincare_bertrand_discrepancy(circle_mesh, f=f)
    assert rep.separable_error <= PB_SEPARABLE_TOL
    assert rep.discrepancy_max == rep.separable_error
    assert rep.orthogonality_max <= 0.05  # O(h) pair integral
    assert rep.lhs.shape == rep.rhs.shape


def test_poincare_bertrand_general_kernel(circle_spec):
    mesh = build_mesh(circle_spec, 0)
    f = random_smooth(mesh, 21)

    def k(x_rows, t):
        return f.samples.copy()

    rep = poincare_bertrand_discrepancy(mesh, k=k, sample_nodes=4)
    assert math.isnan(rep.separable_error)
    assert np.all(np.isfinite(rep.discrepancy))
    assert rep.sample_indices.size == 4


def test_poincare_bertrand_argument_validation(circle_mesh):
    f = random_smooth(circle_mesh, 21)
    with pytest.raises(ValueError):
        poincare_bertrand_discrepancy(circle_mesh)
    with pytest.raises(ValueError):
        poincare_bertrand_discrepancy(circle_mesh, k=lambda x, t: None, f=f)
