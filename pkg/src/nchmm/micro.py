"""Micro (corrector) problems on sampling domains and recovered homogenized tensors."""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field as dc_field
from enum import Enum
from functools import lru_cache
from typing import Callable

import numpy as np

from .fem import Field, NCSpace, Variant, build_space
from .linalg import CgReport, SolverError, cg_solve, dense_constrained_solve, independent_rows
from .mesh import build_uniform_mesh, opposite_face_pairs

#: 2-point Gauss-Legendre nodes on [0, 1]; weights are 1/2 each
GAUSS2 = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])


class Coupling(str, Enum):
    PERIODIC = "periodic"
    DIRICHLET = "dirichlet"


class MicroSolveError(RuntimeError):
    def __init__(self, message: str, domain: "SamplingDomain", report: CgReport | None = None):
        super().__init__(f"{message} [sampling domain center={domain.center}, delta={domain.delta:g}, n={domain.n}]")
        self.domain = domain
        self.report = report


@dataclass(frozen=True)
class TensorField:
    """Symmetric 2x2 coefficient field ``x -> A(x)`` with ellipticity bounds.

    ``func(x1, x2)`` takes broadcastable coordinate arrays and returns an array
    of shape ``x1.shape + (2, 2)``.
    """

    func: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lam: float
    Lam: float
    period: float | None = None
    name: str = ""

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return self.func(x[..., 0], x[..., 1])

    def check(self, points: np.ndarray, n_dirs: int = 16, tol: float = 1e-12) -> None:
        """Assert symmetry and ellipticity bounds at ``points`` for unit directions."""
        A = self(points)
        if np.max(np.abs(A - np.swapaxes(A, -1, -2))) > tol * max(1.0, np.abs(A).max()):
            raise ValueError(f"tensor field {self.name!r} is not symmetric")
        t = np.linspace(0.0, np.pi, n_dirs, endpoint=False)
        xi = np.column_stack([np.cos(t), np.sin(t)])
        q = np.einsum("di,...ij,dj->...d", xi, A, xi)
        if q.min() < self.lam - tol or q.max() > self.Lam + tol:
            raise ValueError(
                f"tensor field {self.name!r} violates bounds [{self.lam}, {self.Lam}]: "
                f"range [{q.min()}, {q.max()}]"
            )


def constant_tensor(A0, lam: float | None = None, Lam: float | None = None, name: str = "") -> TensorField:
    A0 = np.array(A0, dtype=float)
    ev = np.linalg.eigvalsh(A0)
    return TensorField(
        _Constant(A0), ev[0] if lam is None else lam, ev[-1] if Lam is None else Lam, None, name
    )


class _Constant:
    def __init__(self, A0):
        self.A0 = A0

    def __call__(self, x1, x2):
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        return np.broadcast_to(self.A0, shape + (2, 2)).copy()


@dataclass(frozen=True)
class SamplingDomain:
    """Square ``center + [-delta/2, delta/2]^2`` meshed with ``n x n`` micro cells."""

    center: tuple[float, float]
    delta: float
    n: int
    coupling: Coupling = Coupling.PERIODIC

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("micro resolution n must be >= 1")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        object.__setattr__(self, "coupling", Coupling(self.coupling))

    @property
    def h(self) -> float:
        return self.delta / self.n

    @property
    def lower_left(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float) - 0.5 * self.delta


@lru_cache(maxsize=32)
def micro_space(delta: float, n: int, coupling: Coupling) -> NCSpace:
    """Micro space on a reference copy of the sampling domain anchored at the origin.

    Element gradients depend only on the cell widths, so the same space serves
    every sampling domain with equal ``delta`` and ``n``.
    """
    mesh = build_uniform_mesh((0.0, 0.0), (delta, delta), n, n)
    if Coupling(coupling) is Coupling.PERIODIC:
        return build_space(mesh, Variant.PERIODIC_ZERO_MEAN)
    return build_space(mesh, Variant.ZERO_BOUNDARY_MEAN)


def cell_quadrature_points(domain: SamplingDomain) -> np.ndarray:
    """2x2 Gauss points of every micro cell, shape ``(n*n, 4, 2)`` (element order x-fastest)."""
    x0, y0 = domain.lower_left
    h = domain.h
    k = np.arange(domain.n)
    gx = x0 + (k[:, None] + GAUSS2[None, :]) * h  # (n, 2)
    gy = y0 + (k[:, None] + GAUSS2[None, :]) * h
    # element (i, j): points (gx[i, a], gy[j, b])
    X = np.broadcast_to(gx[None, :, :, None], (domain.n, domain.n, 2, 2))
    Y = np.broadcast_to(gy[:, None, None, :], (domain.n, domain.n, 2, 2))
    return np.stack([X, Y], axis=-1).reshape(domain.n * domain.n, 4, 2)


def cell_tensors(domain: SamplingDomain, A: TensorField) -> np.ndarray:
    """Cell integrals of ``A`` by 2x2 Gauss-Legendre, shape ``(n*n, 2, 2)``."""
    pts = cell_quadrature_points(domain)
    try:
        vals = A(pts)
    except Exception as exc:  # noqa: BLE001 - re-raised with location
        raise MicroSolveError(f"tensor evaluation failed: {exc!r}", domain) from exc
    vals = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(vals)):
        bad = np.argwhere(~np.isfinite(vals).all(axis=(-1, -2)))[0]
        raise MicroSolveError(f"non-finite tensor value at micro point {pts[bad[0], bad[1]]}", domain)
    return 0.25 * domain.h * domain.h * vals.sum(axis=1)


@dataclass(frozen=True, eq=False)
class MicroSystem:
    domain: SamplingDomain
    space: NCSpace
    cell_tensors: np.ndarray = dc_field(repr=False)
    matrix: object = dc_field(repr=False)
    rhs: np.ndarray = dc_field(repr=False)


def assemble_micro_system(domain: SamplingDomain, A: TensorField, tensors: np.ndarray | None = None) -> MicroSystem:
    """Stiffness matrix and the two corrector right-hand sides on one sampling domain."""
    space = micro_space(domain.delta, domain.n, domain.coupling)
    T = cell_tensors(domain, A) if tensors is None else tensors
    K = space.assemble_stiffness(T)
    # rhs_j[a] = - sum_K (T_K e_j) . grad phi_a
    loads = -np.einsum("eai,eij->eaj", space.local_gradients, T)
    b = space.assemble_load(loads)
    return MicroSystem(domain, space, T, K, b)


@dataclass(frozen=True, eq=False)
class Corrector:
    system: MicroSystem
    coeffs: np.ndarray  # (dof_count, 2), column j is psi^j
    report: CgReport

    @property
    def space(self) -> NCSpace:
        return self.system.space

    def field(self, j: int) -> Field:
        return Field(self.space, self.coeffs[:, j])

    def gradients(self) -> np.ndarray:
        """Element gradients, shape ``(n_elements, 2, 2)``; ``[e, j, k] = d psi^j / d x_k``."""
        G = np.append(self.coeffs, np.zeros((1, 2)), axis=0)[self.space.local_dofs]  # (e, l, j)
        return np.einsum("elj,elk->ejk", G, self.space.local_gradients)


def zero_mean_shift(space: NCSpace, coeffs: np.ndarray) -> np.ndarray:
    """Subtract the mean value from periodic fields (columns of ``coeffs``)."""
    k = space.constant_vector
    w = space.mean_integral_weights()
    area = space.mesh.extent[0] * space.mesh.extent[1]
    mean = (w @ coeffs) / area
    return coeffs - np.multiply.outer(k, mean)


def solve_correctors(
    domain: SamplingDomain,
    A: TensorField,
    tol: float = 1e-10,
    system: MicroSystem | None = None,
    precondition: bool = False,
) -> Corrector:
    system = assemble_micro_system(domain, A) if system is None else system
    space, K, b = system.space, system.matrix, system.rhs.copy()
    if space.dof_count == 0:
        return Corrector(system, np.zeros((0, 2)), CgReport(0, 0.0, True, tol))
    if domain.coupling is Coupling.PERIODIC:
        k = space.constant_vector
        kk = k @ k
        dot = k @ b
        # size of the summed element contributions, so rounding of a near-zero rhs passes
        ref = np.abs(space.local_gradients).max() * np.abs(system.cell_tensors).sum()
        scale = np.maximum(np.linalg.norm(b, axis=0), ref) * np.sqrt(kk)
        if np.any(np.abs(dot) > 1e-12 * scale):
            raise MicroSolveError(f"periodic corrector rhs is inconsistent (k.b = {dot})", domain)
        b -= np.multiply.outer(k, dot / kk)
    try:
        X, rep = cg_solve(K, b, tol=tol, precondition=precondition)
    except SolverError as exc:
        raise MicroSolveError(str(exc), domain, exc.report) from exc
    if domain.coupling is Coupling.PERIODIC:
        X = zero_mean_shift(space, X)
    return Corrector(system, X, rep)


@dataclass(frozen=True)
class RecoveredTensor:
    matrix: np.ndarray
    energy_matrix: np.ndarray  # same tensor from the energy representation

    @property
    def asymmetry(self) -> float:
        return float(np.abs(self.energy_matrix - self.energy_matrix.T).max())

    @property
    def representation_gap(self) -> float:
        return float(np.abs(self.matrix - self.energy_matrix).max())


def recovered_tensor(domain: SamplingDomain, A: TensorField | None, corrector: Corrector) -> RecoveredTensor:
    """Average of ``A (I + J_psi^T)`` over the sampling domain, plus its energy form.

    ``A`` is unused when the corrector carries its cell tensors; it is accepted
    for symmetry with the other micro operations.
    """
    T = corrector.system.cell_tensors
    J = corrector.gradients()
    vol = domain.delta**2
    M = np.einsum("eij,ejk->ik", T, np.eye(2)[None] + np.swapaxes(J, 1, 2)) / vol
    gphi = np.eye(2)[None] + J  # [e, k, :] = grad phi^k
    E = np.einsum("eji,eil,ekl->jk", gphi, T, gphi) / vol
    return RecoveredTensor(M, E)


def micro_energy(system: MicroSystem, u: np.ndarray, v: np.ndarray) -> float:
    """``sum_K int A grad u . grad v`` for element gradients ``u``, ``v`` of shape ``(n_elements, 2)``."""
    return float(np.einsum("ei,eij,ej->", u, system.cell_tensors, v))


@dataclass
class MicroResult:
    tensor: RecoveredTensor
    iterations: int
    dof_count: int


class TensorCache:
    """Exact memo of micro results keyed by the sampled coefficient data.

    Two sampling domains share an entry only when ``delta``, ``n``, the
    coupling and every sampled tensor value coincide bit for bit, so cached
    results are identical to recomputed ones.
    """

    def __init__(self):
        self._store: dict = {}
        self.hits = 0
        self.misses = 0

    def key(self, domain: SamplingDomain, tensors: np.ndarray):
        digest = hashlib.blake2b(np.ascontiguousarray(tensors).tobytes(), digest_size=20).digest()
        return (domain.delta, domain.n, domain.coupling.value, digest)

    def get(self, key):
        hit = self._store.get(key)
        if hit is None:
            self.misses += 1
        else:
            self.hits += 1
        return hit

    def put(self, key, value) -> None:
        self._store[key] = value


def compute_micro(
    domain: SamplingDomain,
    A: TensorField,
    tol: float = 1e-10,
    precondition: bool = False,
    cache: TensorCache | None = None,
) -> MicroResult:
    """Assemble, solve and recover the homogenized tensor on one sampling domain."""
    T = cell_tensors(domain, A)
    key = None
    if cache is not None:
        key = cache.key(domain, T)
        hit = cache.get(key)
        if hit is not None:
            return MicroResult(hit.tensor, 0, hit.dof_count)
    system = assemble_micro_system(domain, A, tensors=T)
    corr = solve_correctors(domain, A, tol=tol, system=system, precondition=precondition)
    res = MicroResult(recovered_tensor(domain, A, corr), corr.report.iterations, system.space.dof_count)
    if cache is not None:
        cache.put(key, res)
    return res


#: largest micro resolution accepted by the dense saddle-point path
DENSE_MAX_N = 32


@dataclass(frozen=True, eq=False)
class DenseMicroResult:
    tensor: RecoveredTensor
    element_gradients: np.ndarray  # (n_elements, 2, 2), [e, j, k] = d psi^j / d x_k
    center_values: np.ndarray  # (n_elements, 2)
    unknowns: int
    constraints: int


def solve_correctors_dense(domain: SamplingDomain, A: TensorField) -> DenseMicroResult:
    """Corrector problems through a Lagrange-multiplier saddle system.

    Unknowns are per-element linear functions (center value and gradient),
    i.e. the broken P1 space.  Edge-midpoint continuity, the coupling
    condition and (periodic case) the zero integral enter as constraints.
    This path shares no basis code with the iterative solver.
    """
    if domain.n > DENSE_MAX_N:
        raise ValueError(f"dense path limited to n <= {DENSE_MAX_N} (got {domain.n})")
    mesh = build_uniform_mesh(tuple(domain.lower_left), (domain.delta, domain.delta), domain.n, domain.n)
    T = cell_tensors(domain, A)
    ne = mesh.n_elements
    nu = 3 * ne  # [c_e, gx_e, gy_e] per element

    def trace(e, face):
        row = np.zeros(nu)
        d = mesh.face_midpoints[face] - mesh.element_centers[e]
        row[3 * e] = 1.0
        row[3 * e + 1 : 3 * e + 3] = d
        return row

    rows = []
    fe = mesh.face_elements
    for f in range(mesh.n_faces):
        a, b = fe[f]
        if a >= 0 and b >= 0:
            rows.append(trace(a, f) - trace(b, f))
    boundary = [f for f in range(mesh.n_faces) if min(fe[f]) < 0]
    owner = {f: int(max(fe[f])) for f in boundary}
    if domain.coupling is Coupling.PERIODIC:
        for f, g in opposite_face_pairs(mesh).pairs:
            rows.append(trace(owner[f], f) - trace(owner[g], g))
        mean = np.zeros(nu)
        mean[0::3] = mesh.cell_area
        rows.append(mean)
    else:
        rows.extend(trace(owner[f], f) for f in boundary)
    C = np.array(rows)
    C = C[independent_rows(C)]

    K = np.zeros((nu, nu))
    g = np.arange(ne)[:, None] * 3 + np.array([1, 2])
    K[g[:, :, None], g[:, None, :]] = T
    rhs = np.zeros((nu, 2))
    for j in range(2):
        rhs[g, j] = -T[:, :, j]
    try:
        X = dense_constrained_solve(K, C, rhs)
    except SolverError as exc:
        raise MicroSolveError(str(exc), domain) from exc
    J = np.stack([X[g, 0], X[g, 1]], axis=1)  # (e, j, k)
    vol = domain.delta**2
    M = np.einsum("eij,ejk->ik", T, np.eye(2)[None] + np.swapaxes(J, 1, 2)) / vol
    gphi = np.eye(2)[None] + J
    E = np.einsum("eji,eil,ekl->jk", gphi, T, gphi) / vol
    return DenseMicroResult(RecoveredTensor(M, E), J, X[0::3], nu, C.shape[0])


def system_deficiency(system: MicroSystem) -> int:
    """Numerical rank deficiency of the assembled micro stiffness (dense, small systems only)."""
    K = system.matrix.toarray()
    if K.size == 0:
        return 0
    ev = np.linalg.eigvalsh(K)
    # scale from the element contributions so an all-zero (rounding-level) matrix counts as singular
    scale = np.abs(system.space.local_gradients).max() ** 2 * np.abs(system.cell_tensors).max(axis=0).sum()
    return int(np.sum(ev <= 1e-10 * max(ev.max(), scale)))
