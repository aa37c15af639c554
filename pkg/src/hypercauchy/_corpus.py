"""Named boundary-density families used by the experiments and tests.

Every builder returns a :class:`~hypercauchy.cauchy.BoundaryDensity` whose
evaluator is exact (closed form), so refinement-based thresholds can
resample the same density on finer meshes.  Seeded families are
deterministic for a fixed (mesh spec, seed) pair.
"""

import numpy as np

from .cauchy import (BoundaryDensity, kernel_E_rows, nuw_to_coeffs,
                     _mv_rows_product)
from .fueter import multi_indices, symmetric_power_rows

SMOOTH_DEGREE = 2
ROUGH_EXPONENT = 1.5


def _rowwise(fn):
    # wrap a batch (M, n+1) -> (M, dim) map so single points work too
    def ev(x):
        pts = np.asarray(x, dtype=np.float64)
        if pts.ndim == 1:
            return fn(pts[None, :])[0]
        return fn(pts)

    return ev


def _require_spec(mesh):
    if mesh.spec is None:
        raise ValueError("corpus densities need a mesh built from a DomainSpec")
    return mesh.spec


def _unit_direction(rng, m):
    v = rng.normal(size=m)
    return v / np.linalg.norm(v)


def interior_pole(spec, seed=0, frac=0.45):
    """A seeded point at distance frac*R from the center (inside for frac<1)."""
    rng = np.random.default_rng(seed)
    return spec.center_array + frac * spec.radius * _unit_direction(rng, spec.n + 1)


def exterior_pole(spec, seed=0, frac=1.9):
    return interior_pole(spec, seed=seed, frac=frac)


def constant_density(mesh, value=1.0):
    return BoundaryDensity.constant(mesh, value)


def coordinate_trace(mesh, j):
    """Trace of the coordinate x_j (scalar-valued), 0 <= j <= n."""
    dim = mesh.context.dim
    if not 0 <= j <= mesh.n:
        raise ValueError("coordinate index out of range")

    def rows(pts):
        out = np.zeros((pts.shape[0], dim))
        out[:, 0] = pts[:, j]
        return out

    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, 1.0))


def symmetric_power_trace(mesh, alpha):
    """Trace of the symmetric power Z^alpha."""
    ctx = mesh.context
    alpha = tuple(int(a) for a in alpha)

    def rows(pts):
        return symmetric_power_rows(ctx, alpha, pts)

    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, None))


def _kernel_coeff_rows(ctx, pts, pole):
    return nuw_to_coeffs(ctx, kernel_E_rows(pts, pole))


def kernel_trace(mesh, pole, scale=1.0):
    """Trace of scale * E(. - pole) for a pole off the surface."""
    pole = np.asarray(pole, dtype=np.float64)
    ctx = mesh.context

    def rows(pts):
        return scale * _kernel_coeff_rows(ctx, pts, pole)

    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, None))


def kernel_combo(mesh, vanishing_degree, seed=5, spacing_frac=0.15):
    """Collinear combination of Cauchy-kernel traces with prescribed decay.

    Finite-difference coefficient patterns (1), (1, -1), (1, -2, 1) along a
    seeded direction annihilate the surface moments of every degree below
    ``vanishing_degree``, so the resulting density is the trace of a field
    of order -n - vanishing_degree at infinity.

    Parameters
    ----------
    vanishing_degree : int
        N in {0, 1, 2}: the first degree whose moment survives.
    seed : int
        Seeds the base pole and the pole line direction.
    spacing_frac : float
        Pole spacing as a fraction of the surface radius.

    Returns
    -------
    BoundaryDensity
    """
    patterns = {0: (1.0,), 1: (1.0, -1.0), 2: (1.0, -2.0, 1.0)}
    if vanishing_degree not in patterns:
        raise ValueError("vanishing_degree must be 0, 1 or 2")
    spec = _require_spec(mesh)
    rng = np.random.default_rng(seed)
    base = spec.center_array + 0.35 * spec.radius * _unit_direction(rng, spec.n + 1)
    line = _unit_direction(rng, spec.n + 1)
    s = spacing_frac * spec.radius
    coeffs = patterns[vanishing_degree]
    poles = [base + l * s * line for l in range(len(coeffs))]

    ctx = mesh.context

    def rows(pts):
        out = coeffs[0] * _kernel_coeff_rows(ctx, pts, poles[0])
        for c, a in zip(coeffs[1:], poles[1:]):
            out += c * _kernel_coeff_rows(ctx, pts, a)
        return out

    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, None))


def _monomials(n_coords, degree):
    return [e for k in range(degree + 1) for e in multi_indices(n_coords, k)]


def random_smooth(mesh, seed, degree=SMOOTH_DEGREE):
    """Seeded multivector-valued polynomial trace in normalized coordinates."""
    spec = _require_spec(mesh)
    ctx = mesh.context
    rng = np.random.default_rng(seed)
    exps = _monomials(mesh.n + 1, degree)
    coeffs = rng.uniform(-1.0, 1.0, size=(len(exps), ctx.dim))
    coeffs /= len(exps)
    c0, R = spec.center_array, spec.radius

    def rows(pts):
        xh = (pts - c0) / R
        out = np.zeros((pts.shape[0], ctx.dim))
        for e, c in zip(exps, coeffs):
            mono = np.prod(xh ** np.asarray(e), axis=1)
            out += mono[:, None] * c[None, :]
        return out

    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, None))


def rough_holder(mesh, seed, exponent=ROUGH_EXPONENT):
    """Chordal-distance power |x - p|^exponent at a seeded surface point.

    For 1 < exponent < 2 the density is Lipschitz with a merely Holder
    gradient at p, which keeps refinement errors off the rounding floor in
    fitted-order experiments.
    """
    spec = _require_spec(mesh)
    ctx = mesh.context
    rng = np.random.default_rng(seed)
    p = spec.center_array + spec.radius * _unit_direction(rng, spec.n + 1)
    cdir = np.zeros(ctx.dim)
    cdir[0] = 1.0
    if ctx.dim > 1:
        cdir[1] = rng.uniform(-0.5, 0.5)
    norm = (2.0 * spec.radius) ** exponent

    def rows(pts):
        d = np.linalg.norm(pts - p, axis=1)
        return (d ** exponent / norm)[:, None] * cdir[None, :]

    mu = min(1.0, exponent)
    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", mu, None))


def polynomial_trace(mesh, coeffs, max_degree=6):
    """Trace of sum_k Z^{alpha_k} c_k with scalar coefficients.

    Multi-indices are enumerated by total degree, lexicographically inside
    each degree, and consumed until the coefficient list is exhausted.
    """
    ctx = mesh.context
    coeffs = [float(c) for c in coeffs]
    alphas = _monomials(mesh.n, max_degree)
    if len(coeffs) > len(alphas):
        raise ValueError("coefficient list longer than the multi-index table")

    def rows(pts):
        out = np.zeros((np.atleast_2d(pts).shape[0], ctx.dim))
        for c, alpha in zip(coeffs, alphas):
            if c != 0.0:
                out += c * symmetric_power_rows(ctx, alpha, pts)
        return out

    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, None))


def trig_polynomial(mesh, seed, degree=5, coeffs=None):
    """Trigonometric polynomial sum_m c_m e^{i m theta} on a circle, e1 <-> i.

    ``coeffs`` maps m in [-degree, degree] to complex amplitudes; when
    omitted they are drawn uniformly from the seeded generator.
    """
    spec = _require_spec(mesh)
    if mesh.n != 1:
        raise ValueError("trigonometric densities require a circle mesh")
    if coeffs is None:
        rng = np.random.default_rng(seed)
        ms = range(-degree, degree + 1)
        coeffs = {m: complex(rng.uniform(-1, 1), rng.uniform(-1, 1)) for m in ms}
    coeffs = {int(m): complex(c) for m, c in coeffs.items()}
    c0, R = spec.center_array, spec.radius

    def rows(pts):
        w = ((pts[:, 0] - c0[0]) + 1j * (pts[:, 1] - c0[1])) / R
        vals = np.zeros(pts.shape[0], dtype=np.complex128)
        for m, c in coeffs.items():
            vals += c * w ** m
        out = np.zeros((pts.shape[0], 2))
        out[:, 0] = vals.real
        out[:, 1] = vals.imag
        return out

    dens = BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, None))
    return dens, coeffs


def trig_polynomial_pv(mesh, coeffs):
    """Closed-form principal-value rows for :func:`trig_polynomial` data.

    On any circle the principal value of the Cauchy integral acts on
    e^{i m theta} as multiplication by +1/2 for m >= 0 and -1/2 for m < 0
    (residue calculus after mapping to the complex plane).
    """
    spec = _require_spec(mesh)
    c0, R = spec.center_array, spec.radius

    def rows(pts):
        w = ((pts[:, 0] - c0[0]) + 1j * (pts[:, 1] - c0[1])) / R
        vals = np.zeros(pts.shape[0], dtype=np.complex128)
        for m, c in coeffs.items():
            vals += (0.5 if m >= 0 else -0.5) * c * w ** m
        out = np.zeros((pts.shape[0], 2))
        out[:, 0] = vals.real
        out[:, 1] = vals.imag
        return out

    return _rowwise(rows)


def _right_combo(mesh, parts, coeffs):
    # sum of rows right-multiplied by constant multivector coefficients
    ctx = mesh.context

    def rows(pts):
        out = np.zeros((pts.shape[0], ctx.dim))
        for part, c in zip(parts, coeffs):
            block = part(pts)
            out += _mv_rows_product(ctx, block, np.broadcast_to(c, block.shape))
        return out

    return rows


def holomorphic_combo(mesh, seed, max_degree=2, pole_count=1):
    """Seeded right-module combination of Z^alpha and exterior-pole kernels.

    Every member is the trace of a field that is two-sided regular inside
    the surface, hence Dirichlet-solvable by construction.
    """
    spec = _require_spec(mesh)
    ctx = mesh.context
    rng = np.random.default_rng(seed)
    parts = []
    for k in range(max_degree + 1):
        for alpha in multi_indices(mesh.n, k):
            parts.append(lambda pts, a=alpha: symmetric_power_rows(ctx, a, pts))
    for _ in range(pole_count):
        a = spec.center_array + \
            rng.uniform(1.6, 2.4) * spec.radius * _unit_direction(rng, spec.n + 1)
        parts.append(lambda pts, p=a: _kernel_coeff_rows(ctx, pts, p))
    coeffs = rng.uniform(-1.0, 1.0, size=(len(parts), ctx.dim)) / len(parts)
    rows = _right_combo(mesh, parts, coeffs)
    return BoundaryDensity(mesh, rows(mesh.nodes), evaluator=_rowwise(rows),
                           regularity=("holder", 1.0, None))


# -- corpora ---------------------------------------------------------------------


def plemelj_corpus(mesh, seed=11):
    """Ten seeded Holder densities for two-sided boundary-limit experiments."""
    spec = _require_spec(mesh)
    out = [random_smooth(mesh, seed + k) for k in range(4)]
    out.append(kernel_trace(mesh, interior_pole(spec, seed=seed + 4, frac=0.4)))
    out.append(kernel_trace(mesh, exterior_pole(spec, seed=seed + 5, frac=2.1)))
    out.append(symmetric_power_trace(mesh, next(iter(multi_indices(mesh.n, 1)))))
    out.append(symmetric_power_trace(mesh, next(iter(multi_indices(mesh.n, 2)))))
    out.append(coordinate_trace(mesh, 1))
    out.append(rough_holder(mesh, seed + 6, exponent=2.5))
    return out


def inversion_corpus(mesh, seed=13):
    """Densities for involution experiments; rough members keep the
    refinement error measurable above the rounding floor."""
    spec = _require_spec(mesh)
    out = [random_smooth(mesh, seed + k) for k in range(4)]
    out.append(constant_density(mesh))
    out.append(coordinate_trace(mesh, 0))
    out.append(symmetric_power_trace(mesh, next(iter(multi_indices(mesh.n, 2)))))
    out.append(kernel_trace(mesh, exterior_pole(spec, seed=seed + 4)))
    out.append(rough_holder(mesh, seed + 5))
    out.append(rough_holder(mesh, seed + 6))
    return out


def sie_corpus(mesh, seed=17):
    """Right-hand sides for the characteristic singular equation."""
    spec = _require_spec(mesh)
    out = [random_smooth(mesh, seed + k) for k in range(3)]
    out.append(constant_density(mesh, 1.0))
    out.append(kernel_trace(mesh, exterior_pole(spec, seed=seed + 3)))
    out.append(symmetric_power_trace(mesh, next(iter(multi_indices(mesh.n, 1)))))
    out.append(rough_holder(mesh, seed + 4))
    return out


def dirichlet_corpus(mesh, seed=19):
    """Labelled Dirichlet data: ten solvable and five unsolvable members.

    Solvable members are traces of fields regular inside the surface
    (symmetric-power combinations and exterior-pole kernels).  Unsolvable
    members carry an interior pole, or on the circle a conjugate-frequency
    component, so the exterior Cauchy field cannot vanish.

    Returns
    -------
    list of (name, BoundaryDensity, bool)
        The flag is True for solvable data.
    """
    spec = _require_spec(mesh)
    out = [("constant", constant_density(mesh), True)]
    for k in (1, 2, 3):
        alpha = next(iter(multi_indices(mesh.n, k)))
        out.append(("zpow-%d" % k, symmetric_power_trace(mesh, alpha), True))
    for j in range(2):
        pole = exterior_pole(spec, seed=seed + j, frac=1.7 + 0.4 * j)
        out.append(("ekernel-ext-%d" % j, kernel_trace(mesh, pole), True))
    for j in range(3):
        out.append(("regular-combo-%d" % j,
                    holomorphic_combo(mesh, seed + 10 + j), True))
    out.append(("ekernel-ext-neg",
                kernel_trace(mesh, exterior_pole(spec, seed=seed + 2, frac=2.3),
                             scale=-1.0), True))

    for j in range(3 if mesh.n == 1 else 5):
        pole = interior_pole(spec, seed=seed + 20 + j, frac=0.25 + 0.075 * j)
        out.append(("ekernel-int-%d" % j, kernel_trace(mesh, pole), False))
    if mesh.n == 1:
        out.append(("coord-0", coordinate_trace(mesh, 0), False))
        _, coeffs = trig_polynomial(mesh, seed + 30, degree=2)
        coeffs = {m: c for m, c in coeffs.items() if m < 0}
        dens, _ = trig_polynomial(mesh, 0, coeffs=coeffs)
        out.append(("conjugate-frequencies", dens, False))
    return out


def product_kernel(mesh, seed=23):
    """Smooth two-point kernel k(x, t) for iterated-integral experiments."""
    ctx = mesh.context
    f = random_smooth(mesh, seed)
    g = random_smooth(mesh, seed + 1)
    fe, ge = f.evaluator, g.evaluator

    def k(x_rows, t):
        block = np.atleast_2d(fe(x_rows))
        tail = 0.2 * np.asarray(ge(t), dtype=np.float64)
        tail[0] += 1.0
        return _mv_rows_product(ctx, block, np.broadcast_to(tail, block.shape))

    return k


def make_density(mesh, name, seed=0):
    """Build a named density for the command-line experiments.

    Recognized names: ``constant``, ``coord:<j>``, ``zpow:<a1,..,an>``,
    ``poly:<c0,c1,..>``, ``etrace:<in|out>``, ``netrace:in``, ``ecombo:<N>``,
    ``smooth:<seed>``, ``rough:<seed>``, ``trig:<seed>``.

    Parameters
    ----------
    mesh : SurfaceMesh
    name : str
    seed : int
        Base seed mixed into families that do not embed their own.

    Returns
    -------
    BoundaryDensity
    """
    spec = _require_spec(mesh)
    head, _, arg = name.partition(":")
    if head == "constant":
        return constant_density(mesh)
    if head == "coord":
        return coordinate_trace(mesh, int(arg or 0))
    if head == "zpow":
        alpha = tuple(int(a) for a in arg.split(",")) if arg else \
            next(iter(multi_indices(mesh.n, 1)))
        return symmetric_power_trace(mesh, alpha)
    if head == "poly":
        return polynomial_trace(mesh, [float(c) for c in arg.split(",")])
    if head in ("etrace", "netrace"):
        scale = -1.0 if head == "netrace" else 1.0
        if arg == "out":
            pole = exterior_pole(spec, seed=seed)
        else:
            pole = interior_pole(spec, seed=seed)
        return kernel_trace(mesh, pole, scale=scale)
    if head == "ecombo":
        return kernel_combo(mesh, int(arg or 0), seed=seed + 5)
    if head == "smooth":
        return random_smooth(mesh, int(arg or seed))
    if head == "rough":
        return rough_holder(mesh, int(arg or seed))
    if head == "trig":
        return trig_polynomial(mesh, int(arg or seed))[0]
    raise ValueError("unknown density family %r" % name)
