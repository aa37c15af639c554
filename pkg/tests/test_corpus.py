"""Named density families: determinism, labels and declared regularity."""

import numpy as np
import pytest

from hypercauchy.surface import refine
from hypercauchy.cauchy import BoundaryDensity
from hypercauchy._corpus import (
    dirichlet_corpus,
    exterior_pole,
    interior_pole,
    inversion_corpus,
    kernel_combo,
    kernel_trace,
    make_density,
    plemelj_corpus,
    polynomial_trace,
    product_kernel,
    random_smooth,
    rough_holder,
    sie_corpus,
    symmetric_power_trace,
    trig_polynomial,
    trig_polynomial_pv,
)

EVAL_TOL = 1e-12

DENSITY_NAMES = [
    "constant",
    "coord:0",
    "zpow:2",
    "poly:0.5,1.0",
    "etrace:in",
    "etrace:out",
    "netrace:in",
    "ecombo:1",
    "smooth:4",
    "rough:4",
    "trig:4",
]


def test_pole_placement(circle_spec):
    p_in = interior_pole(circle_spec, seed=2, frac=0.35)
    assert abs(np.linalg.norm(p_in) - 0.35) <= 1e-12
    p_out = exterior_pole(circle_spec, seed=2)
    assert np.linalg.norm(p_out) > 1.5
    assert np.array_equal(p_in, interior_pole(circle_spec, seed=2, frac=0.35))


def test_corpus_sizes_and_determinism(circle_mesh):
    a = plemelj_corpus(circle_mesh)
    b = plemelj_corpus(circle_mesh)
    assert len(a) == 10
    for da, db in zip(a, b):
        assert np.array_equal(da.samples, db.samples)
    assert len(inversion_corpus(circle_mesh)) == 10
    assert len(sie_corpus(circle_mesh)) == 7


def test_dirichlet_corpus_labels(circle_mesh, sphere_mesh):
    for mesh in (circle_mesh, sphere_mesh):
        members = dirichlet_corpus(mesh)
        assert len(members) == 15
        labels = [solvable for _, _, solvable in members]
        assert sum(labels) == 10 and labels.count(False) == 5
        names = [name for name, _, _ in members]
        assert len(set(names)) == len(names)


def test_evaluators_match_samples_on_refined_mesh(circle_mesh):
    fine = refine(circle_mesh)
    for dens in plemelj_corpus(circle_mesh):
        if dens.evaluator is None:
            continue
        refd = BoundaryDensity.from_function(fine, dens.evaluator,
                                             regularity=dens.regularity)
        direct = np.array([np.atleast_2d(dens.evaluator(x))[0]
                           for x in fine.nodes[:8]])
        assert np.max(np.abs(refd.samples[:8] - direct)) <= EVAL_TOL


def test_corpus_members_pass_spot_check(circle_mesh):
    rng = np.random.default_rng(0)
    for dens in inversion_corpus(circle_mesh):
        dens.spot_check(rng=rng)


def test_make_density_names(circle_mesh):
    for name in DENSITY_NAMES:
        dens = make_density(circle_mesh, name, seed=3)
        assert dens.samples.shape == (circle_mesh.node_count, 2)
        assert np.isfinite(dens.samples).all()
    with pytest.raises(ValueError):
        make_density(circle_mesh, "fourier:3")


def test_regularity_tags(circle_mesh):
    assert kernel_trace(circle_mesh,
                        np.array([0.2, 0.1])).regularity[0] == "holder"
    rough = rough_holder(circle_mesh, 4, exponent=1.5)
    tag, mu, M = rough.regularity
    assert tag == "holder" and mu == 1.0
    softer = rough_holder(circle_mesh, 4, exponent=0.5)
    assert softer.regularity[1] == 0.5


def test_polynomial_and_symmetric_traces(circle_mesh):
    dens = polynomial_trace(circle_mesh, [1.0, 0.5])
    assert np.isfinite(dens.samples).all()
    sym = symmetric_power_trace(circle_mesh, (2,))
    from hypercauchy.fueter import symmetric_power_rows
    want = symmetric_power_rows(circle_mesh.context, (2,), circle_mesh.nodes)
    assert np.allclose(sym.samples, want, atol=1e-14)


def test_kernel_combo_moment_cancellation(circle_mesh):
    from hypercauchy.fueter import boundary_moment
    for N in (1, 2):
        dens = kernel_combo(circle_mesh, N)
        for k in range(N):
            m = boundary_moment(circle_mesh, dens, (k,))
            assert np.max(np.abs(m.coeffs)) <= 1e-8, (N, k)


def test_trig_polynomial_closed_form_pv(circle_fine):
    dens, coeffs = trig_polynomial(circle_fine, seed=3)
    pv_rows = trig_polynomial_pv(circle_fine, coeffs)
    from hypercauchy.cauchy import principal_value_nodes
    got = principal_value_nodes(circle_fine, dens, indices=[0, 7, 19])
    want = pv_rows(circle_fine.nodes[[0, 7, 19]])
    assert np.max(np.abs(got - want)) <= 1e-10


def test_product_kernel_shape(circle_mesh):
    k = product_kernel(circle_mesh, 23)
    rows = k(circle_mesh.nodes, circle_mesh.nodes[0])
    assert rows.shape == (circle_mesh.node_count, 2)
    assert np.isfinite(rows).all()
