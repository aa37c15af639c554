"""Quadrature meshes on closed oriented hypersurfaces in R^{n+1}.

Builders cover the unit-radius family actually used by the solvers: a
uniform angular grid on circles (n=1), a Fibonacci lattice with equal
weights on 2-spheres, and a Gauss-Legendre x uniform product grid on
3-spheres.  Arbitrary closed C^1 surfaces can be supplied through the
text file format (see save_mesh/load_mesh); such meshes work everywhere
a built mesh does except refine().
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .clifford_core import Multivector, Paravector, get_context


class UnsupportedDomainError(ValueError):
    """Domain kind/dimension combination has no builder."""


class DegenerateExclusionError(ValueError):
    """Cap exclusion removed every node (or was as large as the surface)."""


class MeshFormatError(ValueError):
    """Mesh file violates the documented text format or its invariants."""


NORMAL_UNIT_TOL = 1e-6


@dataclass(frozen=True)
class DomainSpec:
    """Closed surface selector: kind 'circle' (n=1) or 'sphere' (n=2, 3)."""

    kind: str
    n: int = 0
    center: tuple = ()
    radius: float = 1.0

    def __post_init__(self):
        kind = self.kind.lower()
        n = self.n
        if n == 0:
            n = 1 if kind == "circle" else 2
        if kind == "circle" and n != 1:
            raise UnsupportedDomainError("circle requires n=1, got n=%d" % n)
        if kind == "sphere" and n not in (2, 3):
            raise UnsupportedDomainError("sphere requires n in {2, 3}, got n=%d" % n)
        if kind not in ("circle", "sphere"):
            raise UnsupportedDomainError("unknown surface kind %r" % self.kind)
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        center = tuple(float(c) for c in self.center) if self.center else \
            (0.0,) * (n + 1)
        if len(center) != n + 1:
            raise ValueError("center must have n+1 = %d components" % (n + 1))
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def center_array(self):
        return np.asarray(self.center, dtype=np.float64)


@dataclass(frozen=True)
class CapExclusion:
    """Spherical cap Gamma(t, delta) to drop around a surface point t."""

    center: tuple
    delta: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if not self.delta >= 0:
            raise ValueError("cap radius must be nonnegative")


@dataclass(frozen=True)
class SurfaceMesh:
    """Nodes, outward unit normals and positive area weights on Gamma.

    Attributes
    ----------
    nodes : (N, n+1) float array
        Quadrature points on the surface.
    normals : (N, n+1) float array
        Outward unit normals nu_i (pointing into the unbounded component).
    weights : (N,) float array
        Positive area elements; sum approximates area(Gamma).
    h : float
        Mesh parameter: maximum nearest-neighbor node distance.
    level : int
        Refinement index used by the builder (0 for loaded meshes).
    spec : DomainSpec or None
        Builder spec when constructed by build_mesh; None for loaded meshes.
    """

    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    h: float
    level: int = 0
    spec: DomainSpec | None = None

    def __post_init__(self):
        nodes = np.ascontiguousarray(self.nodes, dtype=np.float64)
        normals = np.ascontiguousarray(self.normals, dtype=np.float64)
        weights = np.ascontiguousarray(self.weights, dtype=np.float64)
        if nodes.ndim != 2 or nodes.shape != normals.shape or \
                weights.shape != (nodes.shape[0],):
            raise MeshFormatError("inconsistent mesh array shapes")
        misfit = np.abs(np.linalg.norm(normals, axis=1) - 1.0)
        if misfit.size and misfit.max() > NORMAL_UNIT_TOL:
            raise MeshFormatError("normals deviate from unit length by %.3g"
                                  % misfit.max())
        if weights.size and weights.min() <= 0:
            raise MeshFormatError("weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "normals", normals)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "h", float(self.h))

    @property
    def n(self):
        return self.nodes.shape[1] - 1

    @property
    def node_count(self):
        return self.nodes.shape[0]

    @property
    def context(self):
        return get_context(self.n)

    def measure_coeffs(self):
        """nu_i w_i as paravector component rows, shape (N, n+1)."""
        return self.normals * self.weights[:, None]


def _mesh_h(nodes):
    if nodes.shape[0] < 2:
        return 0.0
    d, _ = cKDTree(nodes).query(nodes, k=2)
    return float(d[:, 1].max())


def _circle_nodes(level, center, radius):
    N = 64 * (1 << level)
    theta = 2.0 * np.pi * np.arange(N) / N
    normals = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    nodes = center[None, :] + radius * normals
    weights = np.full(N, 2.0 * np.pi * radius / N)
    h = 2.0 * radius * np.sin(np.pi / N)
    return nodes, normals, weights, float(h)


def _fibonacci_nodes(level, center, radius):
    # equal-area Fibonacci lattice on S^2
    N = 320 * (1 << level)
    i = np.arange(N, dtype=np.float64)
    offset = 2.0 / N
    increment = np.pi * (3.0 - np.sqrt(5.0))
    y = i * offset - 1.0 + offset / 2.0
    r = np.sqrt(np.maximum(0.0, 1.0 - y * y))
    phi = i * increment
    normals = np.stack([np.cos(phi) * r, y, np.sin(phi) * r], axis=1)
    nodes = center[None, :] + radius * normals
    weights = np.full(N, 4.0 * np.pi * radius**2 / N)
    return nodes, normals, weights, _mesh_h(nodes)


def _sphere3_nodes(level, center, radius):
    # S^3 in R^4: x = (cos chi, sin chi sin th cos ph, sin chi sin th sin ph,
    # sin chi cos th); area element sin^2(chi) sin(th) dchi dth dph.
    m = 4 * (1 << level)
    chi, wchi = np.polynomial.legendre.leggauss(m)
    chi = 0.5 * np.pi * (chi + 1.0)          # map [-1,1] -> [0,pi]
    wchi = 0.5 * np.pi * wchi * np.sin(chi) ** 2
    u, wu = np.polynomial.legendre.leggauss(m)  # u = cos(th), exact in sin dth
    nphi = 2 * m
    phi = 2.0 * np.pi * np.arange(nphi) / nphi
    wphi = 2.0 * np.pi / nphi

    schi, cchi = np.sin(chi), np.cos(chi)
    sth = np.sqrt(np.maximum(0.0, 1.0 - u * u))
    x0 = cchi[:, None, None] * np.ones((m, m, nphi))
    x1 = schi[:, None, None] * sth[None, :, None] * np.cos(phi)[None, None, :]
    x2 = schi[:, None, None] * sth[None, :, None] * np.sin(phi)[None, None, :]
    x3 = schi[:, None, None] * u[None, :, None] * np.ones((1, 1, nphi))
    normals = np.stack([a.ravel() for a in (x0, x1, x2, x3)], axis=1)
    # renormalize against rounding so the unit-normal invariant holds exactly
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    nodes = center[None, :] + radius * normals
    weights = (wchi[:, None, None] * wu[None, :, None] *
               np.full((1, 1, nphi), wphi)).ravel() * radius**3
    return nodes, normals, weights, _mesh_h(nodes)


def build_mesh(spec: DomainSpec, level: int) -> SurfaceMesh:
    """Build a quadrature mesh for the spec at the given refinement level.

    Node counts grow geometrically with level: 64*2^level on circles,
    320*2^level on 2-spheres, 2*(4*2^level)^3 on 3-spheres.
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    c = spec.center_array
    if spec.kind == "circle":
        nodes, normals, weights, h = _circle_nodes(level, c, spec.radius)
    elif spec.n == 2:
        nodes, normals, weights, h = _fibonacci_nodes(level, c, spec.radius)
    else:
        nodes, normals, weights, h = _sphere3_nodes(level, c, spec.radius)
    return SurfaceMesh(nodes, normals, weights, h, level=level, spec=spec)


def oriented_measure(mesh: SurfaceMesh, i: int) -> Multivector:
    """Oriented Clifford measure element nu_i w_i at node i (as Multivector)."""
    if not 0 <= i < mesh.node_count:
        raise IndexError("node index out of range")
    p = Paravector(mesh.normals[i, 0] * mesh.weights[i],
                   mesh.normals[i, 1:] * mesh.weights[i])
    return p.as_multivector(mesh.context)


def exclude_cap(mesh: SurfaceMesh, cap: CapExclusion) -> SurfaceMesh:
    """Sub-mesh of nodes at distance > delta from the cap center.

    The cap center must lie on the surface (within mesh.h of a node);
    weights are not rebalanced -- principal values that need accuracy use
    the regularized form instead of a shrinking-cap limit.
    """
    t = np.asarray(cap.center, dtype=np.float64)
    if t.shape != (mesh.n + 1,):
        raise ValueError("cap center must have n+1 components")
    dist = np.linalg.norm(mesh.nodes - t[None, :], axis=1)
    if dist.min() > max(mesh.h, 1e-12):
        raise ValueError("cap center does not lie on the meshed surface")
    keep = dist > cap.delta
    if not np.any(keep):
        raise DegenerateExclusionError("cap of radius %g removed every node"
                                       % cap.delta)
    return SurfaceMesh(mesh.nodes[keep], mesh.normals[keep],
                       mesh.weights[keep], mesh.h, level=mesh.level,
                       spec=mesh.spec)


def refine(mesh: SurfaceMesh) -> SurfaceMesh:
    """Next refinement level of the same spec; h at most halves (x1.5 slack)."""
    if mesh.spec is None:
        raise ValueError("mesh has no builder spec (loaded from file); "
                         "build a finer mesh from a DomainSpec instead")
    return build_mesh(mesh.spec, mesh.level + 1)


def save_mesh(mesh: SurfaceMesh, path) -> None:
    """Write the text format: header 'n <int> nodes <int>', then per node
    n+1 coordinates, n+1 normal components, 1 weight."""
    with open(path, "w") as fh:
        fh.write("n %d nodes %d\n" % (mesh.n, mesh.node_count))
        for x, nu, w in zip(mesh.nodes, mesh.normals, mesh.weights):
            row = np.concatenate([x, nu, [w]])
            fh.write(" ".join("%.17g" % v for v in row) + "\n")


def load_mesh(path) -> SurfaceMesh:
    """Read the text format produced by save_mesh, validating invariants."""
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 4 or header[0] != "n" or header[2] != "nodes":
            raise MeshFormatError("bad header; expected 'n <int> nodes <int>'")
        try:
            n, count = int(header[1]), int(header[3])
        except ValueError:
            raise MeshFormatError("non-integer header fields") from None
        try:
            data = np.loadtxt(fh, dtype=np.float64, ndmin=2)
        except ValueError as exc:
            raise MeshFormatError("malformed node record: %s" % exc) from None
    if data.shape != (count, 2 * (n + 1) + 1):
        raise MeshFormatError("expected %d records of %d fields, got shape %s"
                              % (count, 2 * (n + 1) + 1, data.shape))
    nodes = data[:, : n + 1]
    normals = data[:, n + 1 : 2 * (n + 1)]
    weights = data[:, -1]
    return SurfaceMesh(nodes, normals, weights, _mesh_h(nodes))


def parse_mesh_spec(text: str):
    """Parse 'kind[,key=value...]' into (DomainSpec, level).

    Keys: n, radius, center (colon-separated floats), level.  Example:
    'sphere,n=2,radius=2.0,center=0:0:0,level=4'.
    """
    parts = [p.strip() for p in text.split(",") if p.strip()]
    if not parts:
        raise ValueError("empty mesh spec")
    kind = parts[0]
    if "=" in kind:
        raise ValueError("mesh spec must start with the surface kind")
    kw = {"kind": kind}
    level = 0
    for part in parts[1:]:
        if "=" not in part:
            raise ValueError("expected key=value, got %r" % part)
        key, _, value = part.partition("=")
        key = key.strip()
        value = value.strip()
        if key == "n":
            kw["n"] = int(value)
        elif key == "radius":
            kw["radius"] = float(value)
        elif key == "center":
            kw["center"] = tuple(float(v) for v in value.split(":"))
        elif key == "level":
            level = int(value)
        else:
            raise ValueError("unknown mesh spec key %r" % key)
    return DomainSpec(**kw), level
