"""Mesh construction, invariants, file round trips and spec parsing."""

import math

import numpy as np
import pytest

from hypercauchy.surface import (
    CapExclusion,
    DegenerateExclusionError,
    DomainSpec,
    MeshFormatError,
    SurfaceMesh,
    UnsupportedDomainError,
    build_mesh,
    exclude_cap,
    load_mesh,
    oriented_measure,
    parse_mesh_spec,
    refine,
    save_mesh,
)

NORMAL_TOL = 1e-12


def _area(spec):
    R = spec.radius
    return {1: 2 * math.pi * R,
            2: 4 * math.pi * R ** 2,
            3: 2 * math.pi ** 2 * R ** 3}[spec.n]


@pytest.mark.parametrize("spec_text,level,rel_tol", [
    ("circle", 4, 1e-12),
    ("circle,radius=0.7,center=0.4:-0.2", 3, 1e-12),
    ("sphere,n=2", 2, 1e-12),
    ("sphere,n=3,radius=1.5", 1, 1e-9),
])
def test_weights_positive_and_area(spec_text, level, rel_tol):
    spec, _ = parse_mesh_spec(spec_text)
    mesh = build_mesh(spec, level)
    assert mesh.weights.min() > 0
    area = _area(spec)
    assert abs(mesh.weights.sum() - area) <= rel_tol * area


def test_normals_unit_and_outward(circle_mesh, sphere_mesh, sphere3_mesh):
    for mesh in (circle_mesh, sphere_mesh, sphere3_mesh):
        lens = np.linalg.norm(mesh.normals, axis=1)
        assert np.max(np.abs(lens - 1.0)) <= NORMAL_TOL
        radial = mesh.nodes - np.asarray(mesh.spec.center)[None, :]
        assert np.min(np.sum(radial * mesh.normals, axis=1)) > 0


def test_nodes_on_surface(circle_mesh, sphere_mesh, sphere3_mesh):
    for mesh in (circle_mesh, sphere_mesh, sphere3_mesh):
        radial = mesh.nodes - np.asarray(mesh.spec.center)[None, :]
        r = np.linalg.norm(radial, axis=1)
        assert np.max(np.abs(r - mesh.spec.radius)) <= 1e-12


def test_refine_shrinks_h(circle_spec, sphere_spec):
    for spec in (circle_spec, sphere_spec):
        mesh = build_mesh(spec, 1)
        finer = refine(mesh)
        assert finer.level == mesh.level + 1
        assert finer.node_count == 2 * mesh.node_count
        assert finer.h <= 0.75 * mesh.h


def test_circle_h_value(circle_mesh):
    want = 2 * math.sin(math.pi / circle_mesh.node_count)
    assert abs(circle_mesh.h - want) <= 1e-12


def test_oriented_measure(circle_mesh):
    mv = oriented_measure(circle_mesh, 3)
    want = circle_mesh.normals[3] * circle_mesh.weights[3]
    assert np.allclose(mv.coeffs, want)
    with pytest.raises(IndexError):
        oriented_measure(circle_mesh, circle_mesh.node_count)


def test_measure_coeffs_layout(sphere_mesh):
    rows = sphere_mesh.measure_coeffs()
    assert rows.shape == (sphere_mesh.node_count, sphere_mesh.n + 1)
    assert np.allclose(rows, sphere_mesh.normals * sphere_mesh.weights[:, None])


def test_save_load_roundtrip(tmp_path, sphere_mesh):
    path = tmp_path / "mesh.txt"
    save_mesh(sphere_mesh, path)
    back = load_mesh(path)
    assert back.spec is None
    assert np.array_equal(back.nodes, sphere_mesh.nodes)
    assert np.array_equal(back.normals, sphere_mesh.normals)
    assert np.array_equal(back.weights, sphere_mesh.weights)
    with pytest.raises(ValueError):
        refine(back)


def test_load_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("nodes 4 n 1\n")
    with pytest.raises(MeshFormatError):
        load_mesh(path)
    path.write_text("n one nodes 4\n")
    with pytest.raises(MeshFormatError):
        load_mesh(path)


def test_load_rejects_truncated_records(tmp_path, circle_mesh):
    path = tmp_path / "short.txt"
    save_mesh(circle_mesh, path)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-5]) + "\n")
    with pytest.raises(MeshFormatError):
        load_mesh(path)


def test_mesh_invariants_enforced(circle_mesh):
    with pytest.raises(MeshFormatError):
        SurfaceMesh(circle_mesh.nodes, circle_mesh.normals,
                    -circle_mesh.weights, circle_mesh.h)
    with pytest.raises(MeshFormatError):
        SurfaceMesh(circle_mesh.nodes, 2.0 * circle_mesh.normals,
                    circle_mesh.weights, circle_mesh.h)
    with pytest.raises(MeshFormatError):
        SurfaceMesh(circle_mesh.nodes, circle_mesh.normals,
                    circle_mesh.weights[:-1], circle_mesh.h)


def test_exclude_cap(circle_mesh):
    t = circle_mesh.nodes[0]
    delta = 5 * circle_mesh.h
    sub = exclude_cap(circle_mesh, CapExclusion(center=t, delta=delta))
    assert sub.node_count < circle_mesh.node_count
    dist = np.linalg.norm(sub.nodes - t[None, :], axis=1)
    assert dist.min() > delta
    with pytest.raises(DegenerateExclusionError):
        exclude_cap(circle_mesh, CapExclusion(center=t, delta=10.0))
    off = t + 0.5  # not on the surface
    with pytest.raises(ValueError):
        exclude_cap(circle_mesh, CapExclusion(center=off, delta=delta))
    with pytest.raises(ValueError):
        CapExclusion(center=t, delta=-1.0)


def test_domain_spec_validation():
    with pytest.raises(UnsupportedDomainError):
        DomainSpec("circle", 2, center=(0, 0, 0), radius=1.0)
    with pytest.raises(UnsupportedDomainError):
        DomainSpec("sphere", 1, center=(0, 0), radius=1.0)
    with pytest.raises(UnsupportedDomainError):
        DomainSpec("torus", 2, center=(0, 0, 0), radius=1.0)
    with pytest.raises(ValueError):
        DomainSpec("circle", 1, center=(0, 0), radius=0.0)
    with pytest.raises(ValueError):
        DomainSpec("circle", 1, center=(0, 0, 0), radius=1.0)
    with pytest.raises(ValueError):
        build_mesh(DomainSpec("circle", 1, center=(0, 0), radius=1.0), -1)


def test_parse_mesh_spec():
    spec, level = parse_mesh_spec("sphere,n=2,radius=2.0,center=0:1:0,level=4")
    assert spec.kind == "sphere" and spec.n == 2
    assert spec.radius == 2.0 and spec.center == (0.0, 1.0, 0.0)
    assert level == 4
    spec, level = parse_mesh_spec("circle")
    assert spec.n == 1 and level == 0
    for bad in ("", "n=2", "circle,frobnicate=2", "circle,radius"):
        with pytest.raises(ValueError):
            parse_mesh_spec(bad)
