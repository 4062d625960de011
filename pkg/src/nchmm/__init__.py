"""Nonconforming P1 quadrilateral FEHMM for 2D multiscale elliptic problems."""

from .analysis import (
    ConvergenceReport,
    ExactSolution,
    broken_h1_error,
    convergence_report,
    estimate_rates,
    l2_error,
    reference_solver,
)
from .fem import Field, NCSpace, Variant, build_space, evaluate, gradient, interpolate_linear
from .linalg import CgReport, SolverError, assemble, cg_solve, dense_constrained_solve
from .macro import (
    BoundarySpec,
    MacroProblem,
    assemble_fehmm,
    assemble_with_tensor_field,
    dirichlet,
    neumann,
    quadrature_points,
    solve_macro,
)
from .mesh import UniformQuadMesh, build_uniform_mesh, opposite_face_pairs
from .micro import (
    Coupling,
    SamplingDomain,
    TensorField,
    assemble_micro_system,
    recovered_tensor,
    solve_correctors,
)
from .problems import builtin_examples

__version__ = "0.1.0"
