"""The four built-in multiscale test problems on the unit square (epsilon = 1e-3)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .analysis import ExactSolution
from .macro import BoundarySpec, dirichlet, neumann
from .micro import Coupling, TensorField

EPS = 1e-3
SQRT2 = np.sqrt(2.0)


def _diag(a11, a22):
    out = np.zeros(np.broadcast(a11, a22).shape + (2, 2))
    out[..., 0, 0] = a11
    out[..., 1, 1] = a22
    return out


class PeriodicDiagonal:
    """``diag(sqrt2 + sin(2 pi x1/eps), sqrt2 + sin(2 pi x2/eps))``."""

    def __init__(self, eps: float = EPS):
        self.eps = eps

    def __call__(self, x1, x2):
        k = 2.0 * np.pi / self.eps
        return _diag(SQRT2 + np.sin(k * x1), SQRT2 + np.sin(k * x2))


class PeriodicOffDiagonal:
    def __init__(self, eps: float = EPS):
        self.eps = eps

    def __call__(self, x1, x2):
        s = np.sin(2.0 * np.pi * np.asarray(x1) / self.eps) + 0.0 * np.asarray(x2)
        out = np.empty(s.shape + (2, 2))
        out[..., 0, 0] = SQRT2 + s
        out[..., 0, 1] = out[..., 1, 0] = 0.5 + s / (2.0 * SQRT2)
        out[..., 1, 1] = 2.0 + s
        return out


class CosineIsotropic:
    """``(2 + cos(2 pi x1/eps)) I``."""

    def __init__(self, eps: float = EPS):
        self.eps = eps

    def __call__(self, x1, x2):
        a = 2.0 + np.cos(2.0 * np.pi * np.asarray(x1) / self.eps) + 0.0 * np.asarray(x2)
        return _diag(a, a)


def in_lower_right(x1, x2):
    """Indicator of the oscillating subdomain ``{x1 > 1/2, x2 < 1/2}``."""
    return (np.asarray(x1) > 0.5) & (np.asarray(x2) < 0.5)


class MixedDomain:
    def __init__(self, eps: float = EPS):
        self.eps = eps

    def __call__(self, x1, x2):
        osc = np.where(in_lower_right(x1, x2), np.sin(2.0 * np.pi * np.asarray(x1) / self.eps), 0.0)
        a = 1.1 + osc
        return _diag(a, a)


class MixedDomainHomogenized:
    def __call__(self, x1, x2):
        inside = in_lower_right(x1, x2)
        return _diag(np.where(inside, np.sqrt(0.21), 1.1), np.full(inside.shape, 1.1))


class Constant:
    def __init__(self, A0):
        self.A0 = np.asarray(A0, dtype=float)

    def __call__(self, x1, x2):
        shape = np.broadcast(np.asarray(x1), np.asarray(x2)).shape
        return np.broadcast_to(self.A0, shape + (2, 2)).copy()


OFFDIAG_A0 = np.array([[1.0, 1.0 / (2.0 * SQRT2)], [1.0 / (2.0 * SQRT2), (17.0 - SQRT2) / 8.0]])


def _offdiag_bounds():
    # eigenvalues of the 2x2 pointwise tensor over one period of s = sin(...)
    s = np.linspace(-1.0, 1.0, 20001)
    M = PeriodicOffDiagonal()(np.arcsin(s) * EPS / (2 * np.pi), 0.0 * s)
    ev = np.linalg.eigvalsh(M)
    return float(ev[:, 0].min()) * (1 - 1e-9), float(ev[:, 1].max()) * (1 + 1e-9)


def sine_product(x1, x2):
    return np.sin(np.pi * x1) * np.sin(np.pi * x2)


def sine_product_grad(x1, x2):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    return np.stack(
        [np.pi * np.cos(np.pi * x1) * np.sin(np.pi * x2), np.pi * np.sin(np.pi * x1) * np.cos(np.pi * x2)],
        axis=-1,
    )


class ManufacturedSource:
    """``-div(A0 grad u0)`` for constant ``A0`` and ``u0 = sin(pi x1) sin(pi x2)``."""

    def __init__(self, A0):
        self.A0 = np.asarray(A0, dtype=float)

    def __call__(self, x1, x2):
        A = self.A0
        ss = np.sin(np.pi * x1) * np.sin(np.pi * x2)
        cc = np.cos(np.pi * x1) * np.cos(np.pi * x2)
        return np.pi**2 * ((A[0, 0] + A[1, 1]) * ss - (A[0, 1] + A[1, 0]) * cc)


def unit_source(x1, x2):
    return np.ones(np.broadcast(np.asarray(x1), np.asarray(x2)).shape)


def zero_source(x1, x2):
    return np.zeros(np.broadcast(np.asarray(x1), np.asarray(x2)).shape)


def parabola(x1, x2):
    return -x1 * (x1 - 1.0) / (2.0 * np.sqrt(3.0)) + 0.0 * x2


def parabola_grad(x1, x2):
    x1, x2 = np.broadcast_arrays(np.asarray(x1, float), np.asarray(x2, float))
    return np.stack([-(2.0 * x1 - 1.0) / (2.0 * np.sqrt(3.0)), np.zeros_like(x2)], axis=-1)


@dataclass(frozen=True)
class Example:
    name: str
    description: str
    tensor: TensorField
    homogenized: TensorField
    source: object
    bc: BoundarySpec
    exact: ExactSolution | None
    coupling: Coupling
    eps: float = EPS
    delta_factors: tuple = (1.0,)
    default_H: tuple = (1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32, 1 / 64)
    default_n: tuple = (4, 8, 16, 32, 64)
    reference_n: int | None = None
    # micro resolution overrides per delta mode (the sqrt(eps) domain is ~29x wider than eps)
    micro_n_override: tuple = ()


def builtin_examples() -> dict[str, Example]:
    lam_off, Lam_off = _offdiag_bounds()
    dir0 = BoundarySpec()
    lr_only = BoundarySpec(left=dirichlet(), right=dirichlet(), bottom=neumann(), top=neumann())
    examples = [
        Example(
            "peri-diag",
            "periodic diagonal tensor, homogenized tensor I, u0 = sin(pi x1) sin(pi x2)",
            TensorField(PeriodicDiagonal(), SQRT2 - 1.0, SQRT2 + 1.0, EPS, "peri-diag"),
            TensorField(Constant(np.eye(2)), 1.0, 1.0, None, "identity"),
            ManufacturedSource(np.eye(2)),
            dir0,
            ExactSolution(sine_product, sine_product_grad),
            Coupling.PERIODIC,
        ),
        Example(
            "peri-offdiag",
            "periodic tensor with off-diagonal terms varying in x1 only",
            TensorField(PeriodicOffDiagonal(), lam_off, Lam_off, EPS, "peri-offdiag"),
            TensorField(Constant(OFFDIAG_A0), *np.linalg.eigvalsh(OFFDIAG_A0), None, "offdiag-A0"),
            ManufacturedSource(OFFDIAG_A0),
            dir0,
            ExactSolution(sine_product, sine_product_grad),
            Coupling.PERIODIC,
        ),
        Example(
            "dirichlet-noninteger",
            "(2 + cos(2 pi x1/eps)) I with Dirichlet coupling and delta not a multiple of eps",
            TensorField(CosineIsotropic(), 1.0, 3.0, EPS, "cosine"),
            TensorField(Constant(np.diag([np.sqrt(3.0), 2.0])), np.sqrt(3.0), 2.0, None, "diag(sqrt3, 2)"),
            unit_source,
            lr_only,
            ExactSolution(parabola, parabola_grad),
            Coupling.DIRICHLET,
            delta_factors=(1.1, 3.1, "sqrt"),
            default_H=(1 / 2, 1 / 4, 1 / 8, 1 / 16, 1 / 32),
            default_n=(128,),
            micro_n_override=(("sqrt", 512),),
        ),
        Example(
            "mixed-domain",
            "oscillating lower-right quarter inside a constant medium; Dirichlet 1/0 left/right",
            TensorField(MixedDomain(), 0.1, 2.1, EPS, "mixed-domain"),
            TensorField(MixedDomainHomogenized(), np.sqrt(0.21), 1.1, None, "mixed-domain-A0"),
            zero_source,
            BoundarySpec(left=dirichlet(1.0), right=dirichlet(0.0), bottom=neumann(), top=neumann()),
            None,
            Coupling.PERIODIC,
            default_n=(16, 32, 64),
            reference_n=512,
        ),
    ]
    return {e.name: e for e in examples}
