"""Uniform axis-aligned rectangle meshes.

Index layout (frozen, x-fastest):

* vertex ``(i, j)``, ``0 <= i <= nx``, ``0 <= j <= ny`` -> ``i + j * (nx + 1)``
* element ``(i, j)``, ``0 <= i < nx``, ``0 <= j < ny`` -> ``i + j * nx``
* vertical face ``(i, j)`` (the segment ``x = x_i``, ``y in [y_j, y_{j+1}]``)
  -> ``i + j * (nx + 1)``
* horizontal face ``(i, j)`` (the segment ``y = y_j``, ``x in [x_i, x_{i+1}]``)
  -> ``(nx + 1) * ny + i + j * nx``

Element-local vertex order is lower-left, lower-right, upper-right, upper-left;
element-local face order is bottom, right, top, left.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

SIDES = ("left", "right", "bottom", "top")


@dataclass(frozen=True)
class UniformQuadMesh:
    origin: tuple[float, float]
    extent: tuple[float, float]
    nx: int
    ny: int

    @property
    def cell_width(self) -> tuple[float, float]:
        return (self.extent[0] / self.nx, self.extent[1] / self.ny)

    @property
    def cell_area(self) -> float:
        wx, wy = self.cell_width
        return wx * wy

    @property
    def n_elements(self) -> int:
        return self.nx * self.ny

    @property
    def n_vertices(self) -> int:
        return (self.nx + 1) * (self.ny + 1)

    @property
    def n_vertical_faces(self) -> int:
        return (self.nx + 1) * self.ny

    @property
    def n_faces(self) -> int:
        return self.nx * (self.ny + 1) + self.ny * (self.nx + 1)

    @property
    def n_interior_faces(self) -> int:
        return (self.nx - 1) * self.ny + self.nx * (self.ny - 1)

    # geometry -----------------------------------------------------------

    @cached_property
    def x_lines(self) -> np.ndarray:
        return self.origin[0] + self.extent[0] * np.arange(self.nx + 1) / self.nx

    @cached_property
    def y_lines(self) -> np.ndarray:
        return self.origin[1] + self.extent[1] * np.arange(self.ny + 1) / self.ny

    @cached_property
    def vertices(self) -> np.ndarray:
        """Vertex coordinates, shape ``(n_vertices, 2)``."""
        X, Y = np.meshgrid(self.x_lines, self.y_lines)
        return np.column_stack([X.ravel(), Y.ravel()])

    @cached_property
    def element_ij(self) -> np.ndarray:
        e = np.arange(self.n_elements)
        return np.column_stack([e % self.nx, e // self.nx])

    @cached_property
    def element_lower_left(self) -> np.ndarray:
        i, j = self.element_ij.T
        return np.column_stack([self.x_lines[i], self.y_lines[j]])

    @cached_property
    def element_centers(self) -> np.ndarray:
        i, j = self.element_ij.T
        return np.column_stack(
            [
                0.5 * (self.x_lines[i] + self.x_lines[i + 1]),
                0.5 * (self.y_lines[j] + self.y_lines[j + 1]),
            ]
        )

    @cached_property
    def element_vertices(self) -> np.ndarray:
        """Vertex indices per element, shape ``(n_elements, 4)``, order LL, LR, UR, UL."""
        i, j = self.element_ij.T
        ll = i + j * (self.nx + 1)
        return np.column_stack([ll, ll + 1, ll + self.nx + 2, ll + self.nx + 1])

    @cached_property
    def element_faces(self) -> np.ndarray:
        """Face indices per element, shape ``(n_elements, 4)``, order bottom, right, top, left."""
        i, j = self.element_ij.T
        nv = self.n_vertical_faces
        left = i + j * (self.nx + 1)
        bottom = nv + i + j * self.nx
        return np.column_stack([bottom, left + 1, bottom + self.nx, left])

    @cached_property
    def face_vertices(self) -> np.ndarray:
        """Endpoint vertex indices per face, shape ``(n_faces, 2)``."""
        nxp = self.nx + 1
        vi, vj = np.divmod(np.arange(self.n_vertical_faces), nxp)
        vert = np.column_stack([vj + vi * nxp, vj + (vi + 1) * nxp])
        hj, hi = np.divmod(np.arange(self.nx * (self.ny + 1)), self.nx)
        horiz = np.column_stack([hi + hj * nxp, hi + 1 + hj * nxp])
        return np.vstack([vert, horiz])

    @cached_property
    def face_midpoints(self) -> np.ndarray:
        v = self.vertices[self.face_vertices]
        return 0.5 * (v[:, 0] + v[:, 1])

    @cached_property
    def face_elements(self) -> np.ndarray:
        """Incident elements per face, shape ``(n_faces, 2)``; ``-1`` marks the outside.

        Vertical faces list (left neighbour, right neighbour); horizontal faces
        list (lower neighbour, upper neighbour).
        """
        out = -np.ones((self.n_faces, 2), dtype=int)
        ef = self.element_faces
        e = np.arange(self.n_elements)
        out[ef[:, 0], 1] = e
        out[ef[:, 2], 0] = e
        out[ef[:, 3], 1] = e
        out[ef[:, 1], 0] = e
        return out

    def face_midpoint(self, face: int) -> np.ndarray:
        if not 0 <= face < self.n_faces:
            raise IndexError(f"face index {face} out of range [0, {self.n_faces})")
        return self.face_midpoints[face]

    def boundary_faces(self, side: str) -> np.ndarray:
        """Faces on one side, ordered along the side."""
        nxp, nv = self.nx + 1, self.n_vertical_faces
        j = np.arange(self.ny)
        i = np.arange(self.nx)
        if side == "left":
            return j * nxp
        if side == "right":
            return self.nx + j * nxp
        if side == "bottom":
            return nv + i
        if side == "top":
            return nv + i + self.ny * self.nx
        raise ValueError(f"unknown side {side!r}")

    def boundary_vertices(self, side: str) -> np.ndarray:
        nxp = self.nx + 1
        if side == "left":
            return np.arange(self.ny + 1) * nxp
        if side == "right":
            return self.nx + np.arange(self.ny + 1) * nxp
        if side == "bottom":
            return np.arange(nxp)
        if side == "top":
            return np.arange(nxp) + self.ny * nxp
        raise ValueError(f"unknown side {side!r}")

    def locate(self, x: np.ndarray) -> np.ndarray:
        """Element index containing each point (closed cells, ties go to the lower index)."""
        x = np.atleast_2d(x)
        wx, wy = self.cell_width
        i = np.clip(np.floor((x[:, 0] - self.origin[0]) / wx).astype(int), 0, self.nx - 1)
        j = np.clip(np.floor((x[:, 1] - self.origin[1]) / wy).astype(int), 0, self.ny - 1)
        return i + j * self.nx

    def contains(self, element: int, x, tol: float = 1e-12) -> bool:
        ll = self.element_lower_left[element]
        wx, wy = self.cell_width
        sx, sy = tol * max(wx, 1.0), tol * max(wy, 1.0)
        return bool(
            ll[0] - sx <= x[0] <= ll[0] + wx + sx and ll[1] - sy <= x[1] <= ll[1] + wy + sy
        )


def build_uniform_mesh(origin, extent, nx: int, ny: int) -> UniformQuadMesh:
    if int(nx) != nx or int(ny) != ny or nx < 1 or ny < 1:
        raise ValueError(f"element counts must be positive integers, got nx={nx}, ny={ny}")
    if not (extent[0] > 0 and extent[1] > 0):
        raise ValueError(f"extent must be positive, got {extent}")
    return UniformQuadMesh(
        (float(origin[0]), float(origin[1])), (float(extent[0]), float(extent[1])), int(nx), int(ny)
    )


@dataclass(frozen=True)
class OppositeFacePairs:
    """Boundary faces paired across the domain.

    ``pairs[:ny]`` are (left, right) pairs ordered by row, ``pairs[ny:]`` are
    (bottom, top) pairs ordered by column.
    """

    pairs: np.ndarray
    ny: int

    @property
    def left_right(self) -> np.ndarray:
        return self.pairs[: self.ny]

    @property
    def bottom_top(self) -> np.ndarray:
        return self.pairs[self.ny :]

    def partner(self, face: int) -> int:
        hit = np.argwhere(self.pairs == face)
        if len(hit) == 0:
            raise KeyError(f"face {face} is not a paired boundary face")
        r, c = hit[0]
        return int(self.pairs[r, 1 - c])


def opposite_face_pairs(mesh: UniformQuadMesh) -> OppositeFacePairs:
    lr = np.column_stack([mesh.boundary_faces("left"), mesh.boundary_faces("right")])
    bt = np.column_stack([mesh.boundary_faces("bottom"), mesh.boundary_faces("top")])
    return OppositeFacePairs(np.vstack([lr, bt]), mesh.ny)
