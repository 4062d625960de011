"""Error norms, reference solves and convergence sweeps."""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .fem import Field, PiecewiseLinear
from .linalg import CgReport, SolverError
from .macro import (
    BoundarySpec,
    MacroProblem,
    assemble_fehmm,
    assemble_with_tensor_field,
    solve_macro,
)
from .mesh import UniformQuadMesh, build_uniform_mesh
from .micro import Coupling, MicroSolveError, TensorField

log = logging.getLogger(__name__)

_G3 = 0.5 * np.sqrt(3.0 / 5.0)
GAUSS3_NODES = np.array([0.5 - _G3, 0.5, 0.5 + _G3])
GAUSS3_WEIGHTS = np.array([5.0, 8.0, 5.0]) / 18.0


@dataclass(frozen=True)
class ExactSolution:
    value: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray, np.ndarray], np.ndarray]


def gauss3_points(mesh: UniformQuadMesh) -> tuple[np.ndarray, np.ndarray]:
    """3x3 Gauss-Legendre points ``(n_elements, 9, 2)`` and weights ``(n_elements, 9)``."""
    wx, wy = mesh.cell_width
    gx, gy = np.meshgrid(GAUSS3_NODES, GAUSS3_NODES, indexing="xy")
    wts = np.outer(GAUSS3_WEIGHTS, GAUSS3_WEIGHTS).ravel() * mesh.cell_area
    ll = mesh.element_lower_left
    pts = np.stack([ll[:, :1] + gx.ravel() * wx, ll[:, 1:] + gy.ravel() * wy], axis=-1)
    return pts, np.broadcast_to(wts, (mesh.n_elements, 9))


def _piecewise(u) -> PiecewiseLinear:
    return u.piecewise if isinstance(u, Field) else u


def broken_h1_error(u, exact: ExactSolution) -> float:
    """``sqrt(sum_K int_K |grad u - grad u0|^2)`` with 3x3 Gauss per element."""
    p = _piecewise(u)
    pts, w = gauss3_points(p.mesh)
    g = np.asarray(exact.grad(pts[..., 0], pts[..., 1]), dtype=float)
    d = p.gradients[:, None, :] - g
    return float(np.sqrt(np.sum(w * np.einsum("eqi,eqi->eq", d, d))))


def l2_error(u, exact: ExactSolution) -> float:
    p = _piecewise(u)
    pts, w = gauss3_points(p.mesh)
    e = np.repeat(np.arange(p.mesh.n_elements), 9).reshape(-1, 9)
    d = p.values_at(e, pts) - exact.value(pts[..., 0], pts[..., 1])
    return float(np.sqrt(np.sum(w * d * d)))


def field_errors(reference, u) -> tuple[float, float]:
    """(broken H1, L2) distance between a fine-mesh reference and a coarse field.

    Both are integrated over the reference mesh: ``u`` is evaluated
    element-locally at each fine element's 3x3 Gauss points, using the coarse
    element containing the fine element's centroid.  Each fine element must lie
    inside a single coarse element (nested uniform meshes), which makes the
    integrands polynomial and the quadrature exact.
    """
    ref, cur = _piecewise(reference), _piecewise(u)
    fine = ref.mesh
    coarse_of = cur.mesh.locate(fine.element_centers)
    dg = ref.gradients - cur.gradients[coarse_of]
    h1 = float(np.sqrt(fine.cell_area * np.sum(dg * dg)))
    pts, w = gauss3_points(fine)
    fe = np.repeat(np.arange(fine.n_elements), 9).reshape(-1, 9)
    d = ref.values_at(fe, pts) - cur.values_at(np.repeat(coarse_of, 9).reshape(-1, 9), pts)
    return h1, float(np.sqrt(np.sum(w * d * d)))


def reference_solver(
    mesh: UniformQuadMesh, tensor_field: TensorField, f, bc: BoundarySpec, tol: float = 1e-12
) -> tuple[Field, CgReport]:
    """Plain P1-NC Galerkin solve with the tensor sampled at the 2x2 Gauss points."""
    return solve_macro(assemble_with_tensor_field(mesh, tensor_field, f, bc), tol=tol)


def estimate_rates(params, errors) -> list[float]:
    """Observed orders ``log(e_k / e_{k+1}) / log(p_k / p_{k+1})`` of successive pairs."""
    out = []
    for (p0, e0), (p1, e1) in zip(zip(params, errors), zip(params[1:], errors[1:])):
        if e0 is None or e1 is None or not (e0 > 0 and e1 > 0) or p0 == p1:
            out.append(float("nan"))
        else:
            out.append(math.log(e0 / e1) / math.log(float(p0) / float(p1)))
    return out


def resolve_delta(mode, eps: float) -> float:
    """Sampling-domain width from a mode: a factor of eps, ``"eps"`` or ``"sqrt"``."""
    if mode in ("eps", None):
        return eps
    if mode in ("sqrt", "sqrt-eps"):
        return math.sqrt(eps)
    return float(mode) * eps


def delta_label(mode) -> str:
    if mode in ("eps", None, 1.0):
        return "eps"
    if mode in ("sqrt", "sqrt-eps"):
        return "sqrt-eps"
    return f"factor:{float(mode):g}"


@dataclass
class SweepCell:
    H: Fraction
    n: int
    delta: float
    delta_mode: str
    coupling: str
    h_over_eps: float
    err_h1_broken: float = float("nan")
    err_l2: float = float("nan")
    tensor_err_fro: float = float("nan")
    micro_cg_iters_total: int = 0
    macro_cg_iters: int = 0
    seconds: float = 0.0
    status: str = "ok"
    # kept in memory for plotting/tensor output, not serialised in the report
    solution: Field | None = dc_field(default=None, repr=False)
    tensors: np.ndarray | None = dc_field(default=None, repr=False)
    points: np.ndarray | None = dc_field(default=None, repr=False)


@dataclass
class ConvergenceReport:
    example: str
    cells: list[SweepCell]
    comparison: str = ""

    def lookup(self, H, n, delta_mode=None) -> SweepCell | None:
        for c in self.cells:
            if c.H == Fraction(H) and c.n == n and (delta_mode is None or c.delta_mode == delta_mode):
                return c
        return None

    def rates(self, metric: str = "err_h1_broken") -> list[dict]:
        """Rates along H for every (n, delta) column and along h/eps for every (H, delta) row."""
        out = []
        groups: dict = {}
        for c in self.cells:
            groups.setdefault(("H", c.n, c.delta_mode), []).append(c)
            groups.setdefault(("h", str(c.H), c.delta_mode), []).append(c)
        for (axis, fixed, dmode), cells in groups.items():
            if len(cells) < 2:
                continue
            if axis == "H":
                cells = sorted(cells, key=lambda c: -c.H)
                params = [float(c.H) for c in cells]
            else:
                cells = sorted(cells, key=lambda c: -c.h_over_eps)
                params = [c.h_over_eps for c in cells]
            errs = [getattr(c, metric) if c.status == "ok" else None for c in cells]
            for c0, c1, r in zip(cells, cells[1:], estimate_rates(params, errs)):
                out.append(
                    dict(axis=axis, fixed=fixed, delta_mode=dmode, metric=metric,
                         from_cell=(str(c0.H), c0.n), to_cell=(str(c1.H), c1.n), rate=r)
                )
        return out


@lru_cache(maxsize=4)
def _reference_solution(example_name: str, n_ref: int) -> Field:
    from .problems import builtin_examples

    ex = builtin_examples()[example_name]
    mesh = build_uniform_mesh((0.0, 0.0), (1.0, 1.0), n_ref, n_ref)
    u, rep = reference_solver(mesh, ex.homogenized, ex.source, ex.bc)
    log.info("reference solve %s on %dx%d: %d CG iterations", example_name, n_ref, n_ref, rep.iterations)
    return u


def run_cell(
    example,
    H,
    n: int,
    delta_mode=None,
    coupling: Coupling | str | None = None,
    tol: float = 1e-10,
    macro_tol: float = 1e-12,
    memoize: bool = False,
    jobs: int = 1,
    precondition: bool = False,
    keep_fields: bool = False,
) -> SweepCell:
    """Full FEHMM pipeline on one (H, n, delta) cell of a sweep."""
    H = Fraction(H).limit_denominator(10**6)
    coupling = Coupling(coupling or example.coupling)
    delta = resolve_delta(delta_mode, example.eps)
    nH = int(round(1 / H))
    cell = SweepCell(H, n, delta, delta_label(delta_mode), coupling.value, delta / n / example.eps)
    t0 = time.perf_counter()
    try:
        mesh = build_uniform_mesh((0.0, 0.0), (1.0, 1.0), nH, nH)
        problem = MacroProblem(
            mesh, example.tensor, example.source, example.bc, delta, n, coupling,
            tol=tol, precondition=precondition, memoize=memoize, jobs=jobs,
        )
        system = assemble_fehmm(problem)
        u, rep = solve_macro(system, tol=macro_tol)
        cell.micro_cg_iters_total = system.micro_iterations
        cell.macro_cg_iters = rep.iterations
        pts = system.quadrature.points
        A0 = example.homogenized(pts)
        cell.tensor_err_fro = float(np.linalg.norm(system.tensors - A0, axis=(-2, -1)).max())
        if example.exact is not None:
            cell.err_h1_broken = broken_h1_error(u, example.exact)
            cell.err_l2 = l2_error(u, example.exact)
        else:
            ref = _reference_solution(example.name, example.reference_n)
            cell.err_h1_broken, cell.err_l2 = field_errors(ref, u)
        if keep_fields:
            cell.solution, cell.tensors, cell.points = u, system.tensors, pts
    except (MicroSolveError, SolverError) as exc:
        cell.status = f"failed: {exc}"
        log.warning("cell H=%s n=%d failed: %s", H, n, exc)
    cell.seconds = time.perf_counter() - t0
    return cell


def convergence_report(
    example,
    H_list,
    n_list,
    delta_modes=None,
    pairs=None,
    progress: Callable[[SweepCell], None] | None = None,
    apply_overrides: bool = True,
    **kwargs,
) -> ConvergenceReport:
    """Run the FEHMM pipeline on the (H x n x delta) grid, or on explicit (H, n) pairs.

    With ``apply_overrides`` the example's per-delta micro resolutions replace ``n``.
    """
    delta_modes = list(delta_modes or example.delta_factors)
    override = dict(example.micro_n_override)
    if pairs is None:
        pairs = [(H, n) for H in H_list for n in n_list]
    cells = []
    for dmode in delta_modes:
        for H, n in pairs:
            n_eff = override.get(dmode, n) if apply_overrides else n
            cell = run_cell(example, H, n_eff, dmode, **kwargs)
            cells.append(cell)
            if progress is not None:
                progress(cell)
    comparison = (
        "exact homogenized solution, 3x3 Gauss per macro element"
        if example.exact is not None
        else f"{example.reference_n}x{example.reference_n} P1-NC homogenized reference; macro field "
        "evaluated element-locally at the 3x3 Gauss points of every reference element"
    )
    return ConvergenceReport(example.name, cells, comparison)


def simultaneous_pairs(levels: int = 3, H0=Fraction(1, 2), n0: int = 4) -> list[tuple[Fraction, int]]:
    """H divided by 4 while h is halved per level (second order in H, first in h)."""
    return [(Fraction(H0) / 4**k, n0 * 2**k) for k in range(levels)]
