"""Cones of log-Lipschitz functions, Hilbert's projective metric and contraction bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Optional, Sequence

import numpy as np

from rpf_cocycle.classdeg import IntermediateSymbol, TransitionBlockCertificate
from rpf_cocycle.cocycle import BarOperatorFamily, bar_product
from rpf_cocycle.core.errors import AllZeroError, InfiniteDiameterError, InputError, ZeroVectorError
from rpf_cocycle.potential import Potential, WordFunction, first_disagreement, seminorm

MEMBERSHIP_RTOL = 1e-12


@dataclass(frozen=True)
class ConeParams:
    """
    Cone parameters derived from a potential.

    a = beta (|phi|_beta + 1) / (1 - beta), b = beta (a + |phi|_beta) and
    D = max(6, 2 + 2 a e^a).
    """

    beta: float
    seminorm_phi: float
    a: float
    b: float
    D: float


class AndoSplit(NamedTuple):
    g: WordFunction
    h: WordFunction


@dataclass(frozen=True)
class ConeDiagnostics:
    block_length: int
    a_bound: float
    t: float
    k_bound: float
    empirical_diameter: float
    contraction_coeff: float


def cone_parameter(potential: Potential, a: Optional[float] = None) -> ConeParams:
    """
    Derive cone parameters; an explicit ``a`` must keep b below a.

    Raises:
        InputError: If an explicit a yields b >= a
    """
    beta = potential.beta
    phi = seminorm(potential).value
    if a is None:
        a = beta * (phi + 1.0) / (1.0 - beta)
    b = beta * (a + phi)
    if not b < a:
        raise InputError(f"Cone parameter a={a} gives b={b} >= a")
    return ConeParams(beta=beta, seminorm_phi=phi, a=a, b=b, D=max(6.0, 2.0 + 2.0 * a * math.exp(a)))


def norm_comparison_bound(params: ConeParams) -> float:
    """Constant bounding ||g||_beta by a multiple of inf g for g in the cone."""
    return max(3.0, 1.0 + params.a * math.exp(params.a))


def cone_membership(f: WordFunction, params: ConeParams, rtol: float = MEMBERSHIP_RTOL) -> bool:
    """f >= 0 and f(x) <= exp(a beta^t) f(y) whenever x, y first disagree at t >= 1."""
    values = f.values
    if any(v < 0.0 for v in values.values()):
        return False
    for u, v in combinations(sorted(values), 2):
        t = first_disagreement(u, v)
        if t == 0:
            continue
        bound = math.exp(params.a * params.beta**t) * (1.0 + rtol)
        if values[u] > bound * values[v] or values[v] > bound * values[u]:
            return False
    return True


def ando_split(f: WordFunction, params: ConeParams) -> AndoSplit:
    """Write f = g - h with g, h in the cone: h is the constant (1 + 1/a) ||f||_beta."""
    constant = (1.0 + 1.0 / params.a) * f.norm(params.beta)
    return AndoSplit(g=f.shifted(constant), h=WordFunction.constant(f.sft, f.range, constant))


def _as_vector(v: Sequence[float]) -> np.ndarray:
    vector = np.asarray(v, dtype=float)
    if np.any(vector < 0.0):
        raise InputError("Projective distance is defined on non-negative vectors")
    if not np.any(vector):
        raise ZeroVectorError("Projective distance of the zero vector")
    return vector


def hilbert_distance(u: Sequence[float], v: Sequence[float]) -> float:
    """Hilbert projective distance on the non-negative orthant; inf across different supports."""
    x, y = _as_vector(u), _as_vector(v)
    if x.shape != y.shape:
        raise InputError("Vectors have different lengths")
    support = x > 0.0
    if not np.array_equal(support, y > 0.0):
        return math.inf
    ratios = x[support] / y[support]
    return float(math.log(ratios.max() / ratios.min()))


def matrix_diameter(matrix: np.ndarray) -> float:
    """
    Largest projective distance between nonzero columns.

    Raises:
        AllZeroError: If the matrix is zero
    """
    columns = [matrix[:, c] for c in range(matrix.shape[1]) if np.any(matrix[:, c])]
    if not columns:
        raise AllZeroError("Diameter of the zero matrix")
    return max(
        (hilbert_distance(u, v) for u, v in combinations(columns, 2)),
        default=0.0,
    )


def contraction_coefficient(matrix: np.ndarray) -> float:
    """tanh(diameter / 4), the Birkhoff contraction coefficient.

    Raises:
        InfiniteDiameterError: If the diameter is infinite
    """
    diameter = matrix_diameter(matrix)
    if math.isinf(diameter):
        raise InfiniteDiameterError("Matrix does not map the cone into a bounded set")
    return math.tanh(diameter / 4.0)


def projective_contraction(
    matrix: np.ndarray, u: Sequence[float], v: Sequence[float], steps: int
) -> list[float]:
    """Distances between B^k u and B^k v for k = 0..steps."""
    x, y = _as_vector(u), _as_vector(v)
    distances = [hilbert_distance(x, y)]
    for _ in range(steps):
        x, y = matrix @ x, matrix @ y
        x, y = x / x.max(), y / y.max()
        distances.append(hilbert_distance(x, y))
    return distances


def lemma_bounds(
    cert: TransitionBlockCertificate,
    potential: Potential,
    params: ConeParams,
    bar_family: BarOperatorFamily,
) -> ConeDiagnostics:
    """
    Cone constants for the block and the diameter of its windowed product.

    The product reads the block with the window taking the first representative.

    Raises:
        InfiniteDiameterError: If the block product has infinite diameter
    """
    n = len(cert.block)
    size = potential.sft.size
    a_bound = math.exp(params.a + n * (potential.max_value() - potential.min_value())) * size**n
    t = (params.a - params.b) / (a_bound * (params.a + params.b))
    k_bound = 2.0 * math.log(1.0 / t)
    symbols = [
        IntermediateSymbol(j, cert.representatives[0] if m == cert.position else None)
        for m, j in enumerate(cert.block)
    ]
    product = bar_product(bar_family, symbols)
    if product.is_zero:
        raise AllZeroError("Windowed block product vanishes")
    diameter = matrix_diameter(product.matrix)
    if math.isinf(diameter):
        raise InfiniteDiameterError("Windowed block product has infinite diameter")
    return ConeDiagnostics(
        block_length=n,
        a_bound=a_bound,
        t=t,
        k_bound=k_bound,
        empirical_diameter=diameter,
        contraction_coeff=math.tanh(diameter / 4.0),
    )
