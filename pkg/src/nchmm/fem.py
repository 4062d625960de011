"""P1-nonconforming quadrilateral element on uniform rectangle meshes.

Global basis
------------
Every kept mesh vertex ``v`` carries a basis function whose restriction to an
adjacent element is the linear polynomial taking the value 1/2 at the
midpoints of the two element edges through ``v`` and 0 at the midpoints of
the other two edges (on the unit square with ``v`` at the origin this is
``3/4 - (x + y)/2``).  The edge-midpoint value of a vertex combination on an
edge is the average of the coefficients at its two endpoints, so edge-mean
continuity holds by construction.

Vertex functions alone miss the "edge checkerboard" functions

* ``g_h``: midpoint value ``(-1)**(i+j)`` on horizontal edge ``(i, j)``, 0 on vertical edges,
* ``g_v``: midpoint value ``(-1)**(i+j)`` on vertical edge ``(i, j)``, 0 on horizontal edges,

whenever the boundary conditions forbid writing them as vertex
combinations: on the even torus, and when exactly one opposite pair of sides
is constrained.  These are appended as extra global DOFs.  On the even torus
the alternating vertex sum vanishes identically, so one vertex (index 0) is
dropped; the periodic space then has ``nx*ny + 1`` DOFs and its stiffness
matrix has the constants as its only kernel.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from enum import Enum
from functools import cached_property

import numpy as np

from .mesh import SIDES, UniformQuadMesh


class Variant(str, Enum):
    FULL = "full"
    ZERO_BOUNDARY_MEAN = "zero-boundary-mean"
    PERIODIC_ZERO_MEAN = "periodic-zero-mean"


@dataclass(frozen=True, eq=False)
class PiecewiseLinear:
    """Element-wise linear function stored as centroid value plus constant gradient."""

    mesh: UniformQuadMesh
    center_values: np.ndarray
    gradients: np.ndarray

    def __add__(self, other: "PiecewiseLinear") -> "PiecewiseLinear":
        return PiecewiseLinear(
            self.mesh, self.center_values + other.center_values, self.gradients + other.gradients
        )

    def values_at(self, elements: np.ndarray, x: np.ndarray) -> np.ndarray:
        d = x - self.mesh.element_centers[elements]
        return self.center_values[elements] + np.einsum("...i,...i->...", d, self.gradients[elements])

    def face_values(self) -> np.ndarray:
        """Midpoint value of every face seen from each incident element, NaN outside."""
        m = self.mesh
        out = np.full((m.n_faces, 2), np.nan)
        for side in range(2):
            e = m.face_elements[:, side]
            ok = e >= 0
            out[ok, side] = self.values_at(e[ok], m.face_midpoints[ok])
        return out

    def integral(self) -> float:
        return float(self.center_values.sum() * self.mesh.cell_area)


@dataclass(frozen=True, eq=False)
class NCSpace:
    mesh: UniformQuadMesh
    variant: Variant
    constrained_sides: frozenset
    dof_count: int
    vertex_dof: np.ndarray
    extras: tuple
    # element-local tables; absent slots point at the dummy index ``dof_count``
    local_dofs: np.ndarray = dc_field(repr=False)
    local_values: np.ndarray = dc_field(repr=False)
    local_gradients: np.ndarray = dc_field(repr=False)

    @property
    def periodic(self) -> bool:
        return self.variant is Variant.PERIODIC_ZERO_MEAN

    def piecewise(self, coeffs: np.ndarray) -> PiecewiseLinear:
        c = np.append(np.asarray(coeffs, dtype=float), 0.0)[self.local_dofs]
        vals = np.einsum("el,el->e", c, self.local_values)
        grads = np.einsum("el,eli->ei", c, self.local_gradients)
        return PiecewiseLinear(self.mesh, vals, grads)

    def basis_function(self, k: int) -> PiecewiseLinear:
        c = np.zeros(self.dof_count)
        c[k] = 1.0
        return self.piecewise(c)

    @cached_property
    def constant_vector(self) -> np.ndarray | None:
        """Coefficients of the constant function 1, or None if it is not in the space."""
        if self.variant is Variant.ZERO_BOUNDARY_MEAN and self.constrained_sides:
            return None
        c = np.zeros(self.dof_count)
        kept = self.vertex_dof >= 0
        if self.periodic and self.extras:
            # 1 = sum of all torus vertex functions = 2 * (vertices of the other colour than vertex 0)
            i, j = _torus_ij(self.mesh)
            colour = (i + j) % 2 == 1
            c[self.vertex_dof[kept & colour]] = 2.0
        else:
            c[self.vertex_dof[kept]] = 1.0
        return c

    def mean_integral_weights(self) -> np.ndarray:
        """Row vector w with ``w @ coeffs`` equal to the integral of the field."""
        w = np.zeros(self.dof_count + 1)
        np.add.at(w, self.local_dofs, self.local_values * self.mesh.cell_area)
        return w[:-1]

    def local_stiffness(self, cell_tensors: np.ndarray) -> np.ndarray:
        """``K_e[a, b] = grad_a . T_e grad_b`` for element-integrated tensors ``T_e``."""
        G = self.local_gradients
        return np.einsum("eai,eij,ebj->eab", G, cell_tensors, G)

    @cached_property
    def _pattern(self):
        from .linalg import AssemblyPattern

        nloc = self.local_dofs.shape[1]
        rows = np.repeat(self.local_dofs, nloc, axis=1).ravel()
        cols = np.tile(self.local_dofs, (1, nloc)).ravel()
        return AssemblyPattern(self.dof_count, rows, cols)

    def assemble_stiffness(self, cell_tensors: np.ndarray):
        """Global stiffness for element-integrated tensors of shape ``(n_elements, 2, 2)``."""
        return self._pattern.assemble(self.local_stiffness(cell_tensors).ravel())

    def assemble_load(self, local_loads: np.ndarray) -> np.ndarray:
        """Scatter element-local loads of shape ``(n_elements, nloc[, k])`` into a global vector."""
        shape = (self.dof_count + 1,) + local_loads.shape[2:]
        b = np.zeros(shape)
        np.add.at(b, self.local_dofs, local_loads)
        return b[:-1]


def _torus_ij(mesh: UniformQuadMesh):
    nxp = mesh.nx + 1
    v = np.arange(mesh.n_vertices)
    return v % nxp, v // nxp


def _extras_needed(mesh: UniformQuadMesh, variant: Variant, sides: frozenset) -> tuple:
    if variant is Variant.PERIODIC_ZERO_MEAN:
        return ("h", "v") if mesh.nx % 2 == 0 and mesh.ny % 2 == 0 else ()
    out = []
    lr = {"left", "right"} <= sides
    bt = {"bottom", "top"} <= sides
    if lr and not (sides & {"bottom", "top"}):
        out.append("h")
    if bt and not (sides & {"left", "right"}):
        out.append("v")
    return tuple(out)


def build_space(
    mesh: UniformQuadMesh,
    variant: Variant | str,
    constrained_sides=None,
    period: tuple[float, float] | None = None,
) -> NCSpace:
    """Build one of the three P1-NC space variants on ``mesh``.

    ``constrained_sides`` applies to ``ZERO_BOUNDARY_MEAN`` only and defaults to
    all four sides; a subset gives zero edge means on those sides and natural
    (free) behaviour on the others.  ``period``, when given for the periodic
    variant, must equal the mesh extent.
    """
    variant = Variant(variant)
    if variant is Variant.ZERO_BOUNDARY_MEAN:
        sides = frozenset(SIDES if constrained_sides is None else constrained_sides)
        unknown = sides - set(SIDES)
        if unknown:
            raise ValueError(f"unknown sides {sorted(unknown)}")
    else:
        if constrained_sides:
            raise ValueError(f"{variant.value} space takes no constrained sides")
        sides = frozenset()
    if variant is Variant.PERIODIC_ZERO_MEAN and period is not None:
        if not np.allclose(period, mesh.extent, rtol=1e-12, atol=0.0):
            raise ValueError(f"periodic space needs extent == period, got {mesh.extent} vs {period}")

    nxp = mesh.nx + 1
    vi, vj = _torus_ij(mesh)
    extras = _extras_needed(mesh, variant, sides)

    if variant is Variant.PERIODIC_ZERO_MEAN:
        torus = (vi % mesh.nx) + (vj % mesh.ny) * mesh.nx
        n_torus = mesh.nx * mesh.ny
        if extras:
            dof_of_torus = np.arange(n_torus) - 1  # torus vertex 0 dropped
        else:
            dof_of_torus = np.arange(n_torus)
        vertex_dof = dof_of_torus[torus]
        n_vertex_dofs = n_torus - (1 if extras else 0)
    else:
        keep = np.ones(mesh.n_vertices, dtype=bool)
        for s in sides:
            keep[mesh.boundary_vertices(s)] = False
        vertex_dof = -np.ones(mesh.n_vertices, dtype=int)
        vertex_dof[keep] = np.arange(keep.sum())
        n_vertex_dofs = int(keep.sum())

    dof_count = n_vertex_dofs + len(extras)
    wx, wy = mesh.cell_width
    ne = mesh.n_elements
    nloc = 4 + len(extras)
    dofs = np.full((ne, nloc), dof_count, dtype=int)
    vals = np.zeros((ne, nloc))
    grads = np.zeros((ne, nloc, 2))

    ev = mesh.element_vertices
    offsets = np.array([[-1, -1], [1, -1], [1, 1], [-1, 1]], dtype=float)
    for slot in range(4):
        d = vertex_dof[ev[:, slot]]
        present = d >= 0
        dofs[present, slot] = d[present]
        vals[present, slot] = 0.25
        grads[present, slot] = offsets[slot] * (0.5 / wx, 0.5 / wy)

    sign = np.where(mesh.element_ij.sum(axis=1) % 2 == 0, 1.0, -1.0)
    for k, kind in enumerate(extras):
        slot = 4 + k
        dofs[:, slot] = n_vertex_dofs + k
        if kind == "h":
            grads[:, slot, 1] = -2.0 * sign / wy
        else:
            grads[:, slot, 0] = -2.0 * sign / wx

    return NCSpace(mesh, variant, sides, dof_count, vertex_dof, extras, dofs, vals, grads)


@dataclass(frozen=True, eq=False)
class Field:
    """Coefficient vector on an NC space plus an optional fixed lift (Dirichlet data)."""

    space: NCSpace
    coeffs: np.ndarray
    lift: PiecewiseLinear | None = None

    @cached_property
    def piecewise(self) -> PiecewiseLinear:
        p = self.space.piecewise(self.coeffs)
        return p if self.lift is None else p + self.lift

    @property
    def mesh(self) -> UniformQuadMesh:
        return self.space.mesh


def evaluate(field: Field, element: int, x) -> float:
    m = field.mesh
    if not 0 <= element < m.n_elements:
        raise IndexError(f"element {element} out of range")
    x = np.asarray(x, dtype=float)
    if not m.contains(element, x):
        raise ValueError(f"point {tuple(x)} is outside element {element}")
    p = field.piecewise
    return float(p.values_at(np.array([element]), x[None, :])[0])


def gradient(field: Field, element: int) -> np.ndarray:
    if not 0 <= element < field.mesh.n_elements:
        raise IndexError(f"element {element} out of range")
    return field.piecewise.gradients[element].copy()


def vertex_combination(mesh: UniformQuadMesh, vertex_values: np.ndarray) -> PiecewiseLinear:
    """Piecewise-linear function ``sum_v c_v phi_v`` over all mesh vertices."""
    space = build_space(mesh, Variant.FULL)
    return space.piecewise(np.asarray(vertex_values, dtype=float)[np.arange(mesh.n_vertices)])


def interpolate_linear(space: NCSpace, a: float, b) -> Field:
    """Field equal to ``a + b . x`` on every element."""
    b = np.asarray(b, dtype=float)
    m = space.mesh
    if space.periodic:
        if np.any(b != 0.0):
            raise ValueError("a non-constant linear function is not periodic")
        return Field(space, a * space.constant_vector)
    values = a + m.vertices @ b
    dropped = space.vertex_dof < 0
    scale = max(abs(a), float(np.abs(b).sum()) * max(m.extent), 1.0)
    if np.any(np.abs(values[dropped]) > 1e-12 * scale):
        raise ValueError("linear function has nonzero means on constrained boundary faces")
    c = np.zeros(space.dof_count)
    kept = ~dropped
    c[space.vertex_dof[kept]] = values[kept]
    return Field(space, c)
