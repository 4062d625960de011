"""FEHMM macro assembly: quadrature, sampling domains, boundary data and the macro solve."""

from __future__ import annotations

import logging
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .fem import Field, NCSpace, PiecewiseLinear, Variant, build_space, vertex_combination
from .linalg import CgReport, cg_solve
from .mesh import SIDES, UniformQuadMesh
from .micro import GAUSS2, Coupling, SamplingDomain, TensorCache, TensorField, compute_micro

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n_elements, I, 2)
    weights: np.ndarray  # (n_elements, I)


def quadrature_points(mesh: UniformQuadMesh) -> QuadratureRule:
    """Tensor-product 2-point Gauss-Legendre rule on every element (I = 4)."""
    ll = mesh.element_lower_left
    wx, wy = mesh.cell_width
    ox = GAUSS2[[0, 1, 0, 1]] * wx
    oy = GAUSS2[[0, 0, 1, 1]] * wy
    pts = np.stack([ll[:, :1] + ox, ll[:, 1:] + oy], axis=-1)
    w = np.full((mesh.n_elements, 4), 0.25 * mesh.cell_area)
    return QuadratureRule(pts, w)


@dataclass(frozen=True)
class BoundaryCondition:
    kind: str  # "dirichlet" or "neumann"
    value: float | Callable | None = None

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary condition kind {self.kind!r}")

    @property
    def homogeneous(self) -> bool:
        return self.kind == "neumann" or self.value is None or (
            not callable(self.value) and self.value == 0.0
        )

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        if self.value is None:
            return np.zeros(len(x))
        if callable(self.value):
            return np.asarray(self.value(x[:, 0], x[:, 1]), dtype=float) * np.ones(len(x))
        return np.full(len(x), float(self.value))


def dirichlet(value: float | Callable | None = None) -> BoundaryCondition:
    return BoundaryCondition("dirichlet", value)


def neumann() -> BoundaryCondition:
    return BoundaryCondition("neumann")


@dataclass(frozen=True)
class BoundarySpec:
    left: BoundaryCondition = dc_field(default_factory=dirichlet)
    right: BoundaryCondition = dc_field(default_factory=dirichlet)
    bottom: BoundaryCondition = dc_field(default_factory=dirichlet)
    top: BoundaryCondition = dc_field(default_factory=dirichlet)

    def __post_init__(self):
        if not self.dirichlet_sides:
            raise ValueError("at least one side needs a Dirichlet condition")

    @property
    def dirichlet_sides(self) -> tuple[str, ...]:
        return tuple(s for s in SIDES if getattr(self, s).kind == "dirichlet")


@dataclass(frozen=True, eq=False)
class MacroSystem:
    space: NCSpace
    matrix: object
    rhs: np.ndarray
    lift: PiecewiseLinear | None
    quadrature: QuadratureRule
    # recovered (or directly evaluated) tensors per (element, quadrature point)
    tensors: np.ndarray = dc_field(repr=False)
    micro_iterations: int = 0
    micro_dofs: int = 0


@dataclass
class MacroProblem:
    mesh: UniformQuadMesh
    tensor: TensorField
    source: Callable[[np.ndarray, np.ndarray], np.ndarray]
    bc: BoundarySpec
    delta: float
    n: int
    coupling: Coupling = Coupling.PERIODIC
    tol: float = 1e-10
    precondition: bool = False
    memoize: bool = False
    jobs: int = 1


def _dirichlet_lift(mesh: UniformQuadMesh, bc: BoundarySpec) -> PiecewiseLinear | None:
    """Vertex-value lift of the Dirichlet data; None when all data vanish."""
    if all(getattr(bc, s).homogeneous for s in SIDES):
        return None
    c = np.zeros(mesh.n_vertices)
    for s in bc.dirichlet_sides:
        v = mesh.boundary_vertices(s)
        c[v] = getattr(bc, s).evaluate(mesh.vertices[v])
    return vertex_combination(mesh, c)


def _assemble(mesh, bc, quad: QuadratureRule, tensors: np.ndarray, source) -> tuple:
    """Macro stiffness and load from per-point tensors ``(n_elements, I, 2, 2)``."""
    space = build_space(mesh, Variant.ZERO_BOUNDARY_MEAN, bc.dirichlet_sides)
    effective = np.einsum("ei,eijk->ejk", quad.weights, tensors)
    K = space.assemble_stiffness(effective)
    d = quad.points - mesh.element_centers[:, None, :]
    phi = space.local_values[:, None, :] + np.einsum("eqi,eli->eql", d, space.local_gradients)
    fq = np.asarray(source(quad.points[..., 0], quad.points[..., 1]), dtype=float) * np.ones(
        quad.weights.shape
    )
    loads = np.einsum("eq,eq,eql->el", quad.weights, fq, phi)
    lift = _dirichlet_lift(mesh, bc)
    if lift is not None:
        loads -= np.einsum("eli,eij,ej->el", space.local_gradients, effective, lift.gradients)
    return space, K, space.assemble_load(loads), lift


def sampling_domains(problem: MacroProblem, quad: QuadratureRule | None = None) -> list[SamplingDomain]:
    quad = quadrature_points(problem.mesh) if quad is None else quad
    return [
        SamplingDomain((float(x), float(y)), problem.delta, problem.n, problem.coupling)
        for x, y in quad.points.reshape(-1, 2)
    ]


# worker state for forked micro pools; set just before the pool starts
_POOL_STATE: dict = {}


def _micro_chunk(args):
    start, stop = args
    st = _POOL_STATE
    out = []
    for d in st["domains"][start:stop]:
        r = compute_micro(d, st["tensor"], tol=st["tol"], precondition=st["precondition"], cache=st["cache"])
        out.append((r.tensor.matrix, r.iterations, r.dof_count))
    return out


def _run_micro(problem: MacroProblem, domains: list[SamplingDomain]):
    cache = TensorCache() if problem.memoize else None
    if problem.jobs <= 1 or len(domains) < 2:
        results = []
        for d in domains:
            r = compute_micro(d, problem.tensor, tol=problem.tol, precondition=problem.precondition, cache=cache)
            results.append((r.tensor.matrix, r.iterations, r.dof_count))
        return results
    _POOL_STATE.update(
        domains=domains, tensor=problem.tensor, tol=problem.tol,
        precondition=problem.precondition, cache=cache,
    )
    step = max(1, len(domains) // (4 * problem.jobs))
    chunks = [(s, min(s + step, len(domains))) for s in range(0, len(domains), step)]
    ctx = multiprocessing.get_context("fork")
    try:
        with ProcessPoolExecutor(max_workers=problem.jobs, mp_context=ctx) as pool:
            return [r for part in pool.map(_micro_chunk, chunks) for r in part]
    finally:
        _POOL_STATE.clear()


def assemble_fehmm(problem: MacroProblem) -> MacroSystem:
    """FEHMM macro system with stiffness built from recovered tensors.

    ``a_H(u, v) = sum_K sum_i w_i A0_{K,i} grad u . grad v``; the recovered
    tensors come from one corrector solve per (element, quadrature point).
    """
    mesh = problem.mesh
    quad = quadrature_points(mesh)
    domains = sampling_domains(problem, quad)
    results = _run_micro(problem, domains)
    tensors = np.array([r[0] for r in results]).reshape(mesh.n_elements, 4, 2, 2)
    iters = int(sum(r[1] for r in results))
    space, K, b, lift = _assemble(mesh, problem.bc, quad, tensors, problem.source)
    return MacroSystem(space, K, b, lift, quad, tensors, iters, results[0][2] if results else 0)


def assemble_with_tensor_field(mesh: UniformQuadMesh, A0: TensorField, f, bc: BoundarySpec) -> MacroSystem:
    """Macro system with the tensor evaluated directly at the quadrature points."""
    quad = quadrature_points(mesh)
    tensors = np.asarray(A0(quad.points), dtype=float)
    space, K, b, lift = _assemble(mesh, bc, quad, tensors, f)
    return MacroSystem(space, K, b, lift, quad, tensors)


def solve_macro(system: MacroSystem, tol: float = 1e-12, precondition: bool = False) -> tuple[Field, CgReport]:
    if system.space.dof_count == 0:
        return Field(system.space, np.zeros(0), system.lift), CgReport(0, 0.0, True, tol)
    x, rep = cg_solve(system.matrix, system.rhs, tol=tol, precondition=precondition)
    return Field(system.space, x, system.lift), rep
