"""Shared meshes for the test suite (session scoped; meshes are immutable)."""

import numpy as np
import pytest

from hypercauchy.surface import DomainSpec, build_mesh


@pytest.fixture(scope="session")
def circle_spec():
    return DomainSpec("circle", 1, center=(0.0, 0.0), radius=1.0)


@pytest.fixture(scope="session")
def circle_mesh(circle_spec):
    return build_mesh(circle_spec, level=4)


@pytest.fixture(scope="session")
def circle_fine(circle_spec):
    return build_mesh(circle_spec, level=6)


@pytest.fixture(scope="session")
def sphere_spec():
    return DomainSpec("sphere", 2, center=(0.0, 0.0, 0.0), radius=1.0)


@pytest.fixture(scope="session")
def sphere_mesh(sphere_spec):
    return build_mesh(sphere_spec, level=2)


@pytest.fixture(scope="session")
def sphere3_mesh():
    spec = DomainSpec("sphere", 3, center=(0.0, 0.0, 0.0, 0.0), radius=1.0)
    return build_mesh(spec, level=0)


@pytest.fixture(scope="session")
def shifted_circle():
    spec = DomainSpec("circle", 1, center=(0.4, -0.2), radius=0.7)
    return build_mesh(spec, level=4)


def interior_probes(mesh, count, seed, frac=0.5):
    """Deterministic interior probe points at frac * radius."""
    rng = np.random.default_rng(seed)
    dirs = rng.normal(size=(count, mesh.n + 1))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    spec = mesh.spec
    return np.asarray(spec.center) + frac * spec.radius * dirs


def exterior_probes(mesh, count, seed, frac=1.8):
    return interior_probes(mesh, count, seed, frac=frac)
