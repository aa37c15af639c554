"""Numerical toolkit for Clifford-algebra boundary value problems."""

from .clifford_core import (
    AlgebraContext,
    ContextMismatchError,
    Multivector,
    Paravector,
    SingularInputError,
    conjugate,
    divide,
    embed_point,
    get_context,
    norm,
    paravector_inverse,
    product,
    project_paravector,
)
from .surface import (
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
from .cauchy import (
    BoundaryDensity,
    CauchyValue,
    InconclusiveSpanError,
    SideTaggedPoint,
    SpanResult,
    boundary_limit,
    cauchy_derivative,
    cauchy_integral,
    kernel_E,
    plemelj_values,
    principal_value,
    principal_value_nodes,
    side_of,
    span_indicator,
    symmetric_difference_limit,
    unit_sphere_area,
)
from .fueter import (
    DegreeOverflowError,
    KernelDerivative,
    MomentTable,
    MultiIndex,
    OrderReport,
    QuadratureDegeneracyError,
    boundary_moment,
    build_moment_table,
    derivative_at_origin,
    dirac_apply,
    kernel_derivative,
    laurent_term,
    multi_indices,
    order_at_infinity,
    surface_hull_radius,
    symmetric_power,
    taylor_component,
)
from .bvp import (
    CharacteristicCoefficients,
    DirichletReport,
    PoincareBertrandReport,
    SIESolution,
    SectionalSolution,
    SolvabilityReport,
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

__version__ = "0.1.0"
