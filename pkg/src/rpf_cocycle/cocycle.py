"""Transfer operator cocycle over the image and its exponents.

For every target symbol j the operator M^(j) acts on functions of the source alphabet:
M^(j)[r, c] = exp(phi(c, r)) when rho(c) = j and c may be followed by r, and 0 otherwise.
Products along long words are kept as a normalized matrix and a separate log scale.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from itertools import product
from typing import Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy.linalg import eigvals
from scipy.special import logsumexp

from rpf_cocycle.classdeg import (
    ClassDegreeResult,
    IntermediateSymbol,
    RepresentativeFibers,
    TransitionBlockCertificate,
    class_degree,
    representative_fibers,
    window_positions,
)
from rpf_cocycle.core.errors import (
    DimensionTooSmallError,
    InputError,
    NoWindowError,
    RangeTooLargeError,
    VerificationFailed,
    WordNotInImageError,
)
from rpf_cocycle.measure import FRAME_STREAM, MeasurePresentation, orbit_rng, sample_orbit
from rpf_cocycle.potential import Potential, Seminorm, WordFunction, seminorm
from rpf_cocycle.results import BatchAnalyzer
from rpf_cocycle.symbolic import CodeSpec, Sft, WordLike, enumerate_words, preimage_words

__all__ = [
    "OperatorFamily",
    "BarOperatorFamily",
    "CocycleProduct",
    "PressureEstimate",
    "LyapunovReport",
    "Multiplicity",
    "DecompositionCheck",
    "Clause",
    "TheoremReport",
    "Seminorm",
    "build_operators",
    "bar_operators",
    "cocycle_product",
    "bar_product",
    "partition_function",
    "pressure_estimate",
    "pressure_along",
    "lyapunov_spectrum",
    "lyapunov_along",
    "top_multiplicity",
    "verify_decomposition",
    "decomposition_word",
    "verify_theorem",
    "topological_pressure",
    "transfer_word_function",
    "seminorm",
]

logger = logging.getLogger(__name__)

RESCALE_HIGH = 2.0**512
RESCALE_LOW = 2.0**-512
COLLAPSE_TOL = 1e-13
DECOMPOSITION_RTOL = 1e-12
DEFAULT_BATCHES = 20
DEFAULT_WARMUP = 1000
DEFAULT_MULTIPLICITY_TOL = 1e-3
DEFAULT_MAX_ASSIGNMENTS = 4096


def _read_only(matrix: np.ndarray) -> np.ndarray:
    matrix.setflags(write=False)
    return matrix


@dataclass(frozen=True, eq=False)
class OperatorFamily:
    """One non-negative |A| x |A| operator per target symbol."""

    code: CodeSpec
    matrices: tuple[np.ndarray, ...]

    @property
    def dimension(self) -> int:
        return self.code.source.size

    def matrix(self, j: int) -> np.ndarray:
        return self.matrices[j]

    def total(self) -> np.ndarray:
        return np.sum(self.matrices, axis=0)


@dataclass(frozen=True, eq=False)
class BarOperatorFamily:
    """Base operators plus M^(q,s) = M^(q) restricted to columns in R_s, for s in B."""

    base: OperatorFamily
    certificate: TransitionBlockCertificate
    windowed: Mapping[int, np.ndarray]

    def symbol_matrix(self, symbol: IntermediateSymbol) -> np.ndarray:
        if symbol.representative is None:
            return self.base.matrix(symbol.target)
        return self.windowed[symbol.representative]


class CocycleProduct(NamedTuple):
    """Product stored as matrix * exp(log_scale); log_scale is -inf for the zero product."""

    matrix: np.ndarray
    log_scale: float

    @property
    def value(self) -> np.ndarray:
        if self.log_scale == -math.inf:
            return np.zeros_like(self.matrix)
        return self.matrix * math.exp(self.log_scale)

    @property
    def is_zero(self) -> bool:
        return self.log_scale == -math.inf


@dataclass(frozen=True)
class PressureEstimate:
    value: float
    stderr: float
    n: int
    method: str
    batch_estimates: tuple[float, ...] = field(default=(), repr=False)


@dataclass(frozen=True, eq=False)
class LyapunovReport:
    """
    Estimated top exponents, sorted non-increasing.

    Collapsed directions report -inf with a NaN standard error.
    """

    exponents: tuple[float, ...]
    stderr: tuple[float, ...]
    multiplicity: int
    gap: Optional[float]
    steps: int
    seed: int
    warmup: int
    batch_estimates: np.ndarray = field(repr=False)


class Multiplicity(NamedTuple):
    count: int
    gap: Optional[float]


@dataclass(frozen=True)
class DecompositionCheck:
    ok: bool
    assignments: int
    nonzero: int
    max_rel_error: float
    windows: tuple[int, ...]
    per_symbol_identity: bool


class Clause(NamedTuple):
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True, eq=False)
class TheoremReport:
    """Everything the theorem check computed, with one entry per clause."""

    degree: ClassDegreeResult
    fibers: RepresentativeFibers
    lyapunov: LyapunovReport
    pressure: PressureEstimate
    multiplicity: Multiplicity
    decomposition: DecompositionCheck
    decomposition_word: tuple[int, ...]
    topological_pressure: float
    clauses: tuple[Clause, ...]

    @property
    def passed(self) -> bool:
        return all(clause.passed for clause in self.clauses)


def build_operators(sft: Sft, code: CodeSpec, potential: Potential) -> OperatorFamily:
    """
    Build M^(j) for every target symbol j.

    Raises:
        RangeTooLargeError: If the potential has range above 2
        InputError: If the code or the potential live on another shift
    """
    if potential.range > 2:
        raise RangeTooLargeError("Recode with higher_block before building operators")
    if code.source is not sft or potential.sft is not sft:
        raise InputError("Code and potential must be defined on the given shift")
    matrices = [np.zeros((sft.size, sft.size)) for _ in range(code.target_size)]
    for c in range(sft.size):
        for r in sft.successors(c):
            matrices[code.rho[c]][r, c] = math.exp(potential.pair_value(c, r))
    return OperatorFamily(code=code, matrices=tuple(_read_only(m) for m in matrices))


def bar_operators(
    family: OperatorFamily, cert: TransitionBlockCertificate, fibers: RepresentativeFibers
) -> BarOperatorFamily:
    windowed = {}
    for s in cert.representatives:
        matrix = np.array(family.matrix(cert.symbol), copy=True)
        keep = np.zeros(family.dimension, dtype=bool)
        keep[list(fibers.fibers[s])] = True
        matrix[:, ~keep] = 0.0
        windowed[s] = _read_only(matrix)
    return BarOperatorFamily(base=family, certificate=cert, windowed=windowed)


def _scaled_product(factors: Sequence[np.ndarray]) -> CocycleProduct:
    if not factors:
        raise InputError("Product over the empty word")
    result = np.array(factors[0], dtype=float, copy=True)
    log_scale = 0.0
    for factor in list(factors[1:]) + [None]:
        peak = float(np.abs(result).max())
        if peak == 0.0:
            return CocycleProduct(np.zeros_like(result), -math.inf)
        if not RESCALE_LOW <= peak <= RESCALE_HIGH:
            result /= peak
            log_scale += math.log(peak)
        if factor is not None:
            result = factor @ result
    return CocycleProduct(result, log_scale)


def cocycle_product(family: OperatorFamily, z_word: WordLike) -> CocycleProduct:
    """M^(z_{n-1}) ... M^(z_0), rescaled whenever its sup norm leaves [2^-512, 2^512]."""
    word = family.code.parse_target(z_word)
    return _scaled_product([family.matrix(j) for j in word])


def bar_product(bar_family: BarOperatorFamily, symbols: Sequence[IntermediateSymbol]) -> CocycleProduct:
    """Product of intermediate-alphabet operators along a word of intermediate symbols."""
    return _scaled_product([bar_family.symbol_matrix(s) for s in symbols])


def _final_term(sft: Sft, potential: Potential) -> np.ndarray:
    return np.array(
        [max(potential.pair_value(c, r) for r in sft.successors(c)) for c in range(sft.size)]
    )


def _log_matrices(family: OperatorFamily) -> list[np.ndarray]:
    with np.errstate(divide="ignore"):
        return [np.log(m) for m in family.matrices]


def _logsumexp_rows(matrix: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return logsumexp(matrix, axis=1)


def _logsumexp(vector: np.ndarray) -> float:
    with np.errstate(divide="ignore", invalid="ignore"):
        return float(logsumexp(vector))


class _PartitionRecursion:
    """
    Log-weights of preimage prefixes ending at each source symbol.

    After ``step(j)`` the vector holds, at c, the log of the summed weights of preimages
    of the word read so far whose last symbol is c.
    """

    def __init__(self, family: OperatorFamily, log_matrices: Optional[list[np.ndarray]] = None) -> None:
        self.family = family
        self.log_matrices = log_matrices if log_matrices is not None else _log_matrices(family)
        self.masks = [family.code.mask(j) for j in range(family.code.target_size)]
        self.weights: Optional[np.ndarray] = None
        self.last: Optional[int] = None

    def step(self, j: int) -> None:
        if self.weights is None:
            self.weights = np.where(self.masks[j], 0.0, -np.inf)
        else:
            assert self.last is not None
            moved = _logsumexp_rows(self.log_matrices[self.last] + self.weights[None, :])
            self.weights = np.where(self.masks[j], moved, -np.inf)
        self.last = j

    def prefix_log_mass(self) -> float:
        assert self.weights is not None
        return _logsumexp(self.weights)

    def closed(self, final_term: np.ndarray) -> float:
        assert self.weights is not None
        return _logsumexp(self.weights + final_term)


class _ScaledRecursion:
    """
    Linear-space counterpart of _PartitionRecursion for long orbits.

    The weight vector is kept with sum in [RESCALE_LOW, RESCALE_HIGH]; the removed scale
    is accumulated in ``log_scale``.
    """

    def __init__(self, family: OperatorFamily) -> None:
        self.matrices = family.matrices
        self.masks = [family.code.mask(j).astype(float) for j in range(family.code.target_size)]
        self.weights: Optional[np.ndarray] = None
        self.last: Optional[int] = None
        self.log_scale = 0.0

    def step(self, j: int) -> None:
        if self.weights is None:
            self.weights = self.masks[j].copy()
        else:
            assert self.last is not None
            self.weights = (self.matrices[self.last] @ self.weights) * self.masks[j]
        self.last = j
        total = float(self.weights.sum())
        if total == 0.0:
            self.log_scale = -math.inf
        elif not RESCALE_LOW <= total <= RESCALE_HIGH:
            self.weights /= total
            self.log_scale += math.log(total)

    def prefix_log_mass(self) -> float:
        assert self.weights is not None
        total = float(self.weights.sum())
        if total == 0.0:
            return -math.inf
        return self.log_scale + math.log(total)

    def closed(self, final_term: np.ndarray) -> float:
        assert self.weights is not None
        with np.errstate(divide="ignore"):
            return self.log_scale + _logsumexp(np.log(self.weights) + final_term)


def partition_function(
    code: CodeSpec, potential: Potential, z_word: WordLike, method: str = "partition-dp"
) -> float:
    """
    log of the sum over preimages x of z of exp(S_n phi(x)).

    Raises:
        WordNotInImageError: If z has no preimage
        InputError: On an unknown method
    """
    word = code.parse_target(z_word)
    if not word:
        raise InputError("Partition function of the empty word")
    sft = code.source
    final = _final_term(sft, potential)
    if method == "enumeration":
        words = preimage_words(code, word)
        if not words:
            raise WordNotInImageError(f"{code.format_target(word)} has no preimage")
        sums = [
            sum(potential.pair_value(x[t], x[t + 1]) for t in range(len(x) - 1)) + final[x[-1]]
            for x in words
        ]
        return _logsumexp(np.array(sums))
    if method != "partition-dp":
        raise InputError(f"Unknown partition method {method!r}")
    recursion = _PartitionRecursion(build_operators(sft, code, potential))
    for j in word:
        recursion.step(j)
    value = recursion.closed(final)
    if value == -math.inf:
        raise WordNotInImageError(f"{code.format_target(word)} has no preimage")
    return value


def _batch_bounds(n: int, batches: int) -> list[tuple[int, int]]:
    sizes = [len(chunk) for chunk in np.array_split(np.arange(n), batches)]
    bounds, start = [], 0
    for size in sizes:
        bounds.append((start, start + size))
        start += size
    return bounds


def _check_batches(n: int, batches: int) -> None:
    if batches < 2:
        raise InputError("At least two batches are needed for a standard error")
    if n < 10 * batches:
        raise InputError(f"Need at least {10 * batches} steps for {batches} batches, got {n}")


def pressure_along(
    family: OperatorFamily, potential: Potential, symbols: Sequence[int], batches: int = DEFAULT_BATCHES
) -> PressureEstimate:
    """Pressure estimate (1/n) log Z_n along a given target word, with batch errors."""
    n = len(symbols)
    _check_batches(n, batches)
    recursion = _ScaledRecursion(family)
    ends = {end - 1 for _, end in _batch_bounds(n, batches)}
    marks = []
    for t, j in enumerate(symbols):
        recursion.step(j)
        if t in ends:
            marks.append(recursion.prefix_log_mass())
    value = recursion.closed(_final_term(family.code.source, potential))
    if value == -math.inf:
        raise WordNotInImageError("Orbit has no preimage")

    previous = 0.0
    estimates = []
    for (start, end), mark in zip(_batch_bounds(n, batches), marks):
        estimates.append((mark - previous) / (end - start))
        previous = mark
    stats = BatchAnalyzer(np.array(estimates)[:, None]).analyze()[0]
    return PressureEstimate(
        value=value / n,
        stderr=stats.stderr,
        n=n,
        method="partition-dp",
        batch_estimates=tuple(estimates),
    )


def pressure_estimate(
    code: CodeSpec,
    potential: Potential,
    presentation: MeasurePresentation,
    n: int,
    seed: int,
    batches: int = DEFAULT_BATCHES,
    warmup: int = DEFAULT_WARMUP,
    orbit_index: int = 0,
) -> PressureEstimate:
    """Sample an orbit of warmup + n symbols and estimate pressure on its last n."""
    _check_batches(n, batches)
    orbit = sample_orbit(presentation, warmup + n, seed, orbit_index)
    family = build_operators(code.source, code, potential)
    return pressure_along(family, potential, orbit.symbols[warmup:], batches)


def top_multiplicity(report: LyapunovReport, tol: float = DEFAULT_MULTIPLICITY_TOL) -> Multiplicity:
    """
    Number of exponents equal to the top one within max(tol, 3 (se_1 + se_i)).

    Raises:
        InputError: If the top exponent is not finite
    """
    exponents, errors = report.exponents, report.stderr
    if not exponents or not math.isfinite(exponents[0]):
        raise InputError("Top exponent is not finite")
    se = [0.0 if math.isnan(e) else e for e in errors]
    count = sum(
        1
        for value, sei in zip(exponents, se)
        if math.isfinite(value) and abs(exponents[0] - value) <= max(tol, 3.0 * (se[0] + sei))
    )
    # exponents are sorted, so the first one outside the set gives the gap
    gap = None
    if count < len(exponents):
        gap = exponents[count - 1] - exponents[count]
    return Multiplicity(count=count, gap=gap)


def lyapunov_along(
    family: OperatorFamily,
    symbols: Sequence[int],
    p: int,
    batches: int,
    warmup: int,
    frame_rng: np.random.Generator,
    seed: int = 0,
    tol: float = DEFAULT_MULTIPLICITY_TOL,
) -> LyapunovReport:
    """
    Top p exponents along a target word by repeated QR of a p-frame.

    The first ``warmup`` symbols only evolve the frame. A direction collapses when its
    diagonal entry of R drops to COLLAPSE_TOL times the largest entry of R; it is then
    dropped from the frame and reported as -inf.
    """
    dim = family.dimension
    if not 1 <= p <= dim:
        raise DimensionTooSmallError(f"Requested {p} exponents for dimension {dim}")
    n = len(symbols) - warmup
    _check_batches(n, batches)

    matrices = family.matrices
    frame, _ = np.linalg.qr(frame_rng.standard_normal((dim, p)))
    slots = list(range(p))
    collapsed = np.zeros(p, dtype=bool)
    totals = np.zeros(p)
    batch_sums = np.zeros((batches, p))
    batch_of = np.repeat(np.arange(batches), [end - start for start, end in _batch_bounds(n, batches)])

    for t, j in enumerate(symbols):
        if not slots:
            break
        image = matrices[j] @ frame
        q, r = np.linalg.qr(image)
        diag = np.abs(np.diag(r))
        scale = float(np.abs(r).max())
        dead = diag <= COLLAPSE_TOL * scale if scale > 0.0 else np.ones(len(slots), dtype=bool)
        if dead.any():
            for position in sorted(np.flatnonzero(dead).tolist(), reverse=True):
                collapsed[slots.pop(position)] = True
            if not slots:
                break
            q, r = np.linalg.qr(image[:, ~dead])
            diag = np.abs(np.diag(r))
            logger.debug("Frame collapsed to %d directions at step %d", len(slots), t)
        signs = np.where(np.diag(r) < 0.0, -1.0, 1.0)
        frame = q * signs
        if t >= warmup:
            logs = np.log(diag)
            totals[slots] += logs
            batch_sums[batch_of[t - warmup], slots] += logs

    sizes = np.array([end - start for start, end in _batch_bounds(n, batches)], dtype=float)
    estimates = batch_sums / sizes[:, None]
    estimates[:, collapsed] = -np.inf
    stats = BatchAnalyzer(estimates).analyze()
    raw = [(-math.inf if collapsed[i] else totals[i] / n) for i in range(p)]
    errors = [(math.nan if collapsed[i] else stats[i].stderr) for i in range(p)]
    order = sorted(range(p), key=lambda i: -raw[i])
    partial = LyapunovReport(
        exponents=tuple(float(raw[i]) for i in order),
        stderr=tuple(float(errors[i]) for i in order),
        multiplicity=0,
        gap=None,
        steps=n,
        seed=seed,
        warmup=warmup,
        batch_estimates=estimates[:, order],
    )
    if not math.isfinite(partial.exponents[0]):
        return partial
    count, gap = top_multiplicity(partial, tol)
    return LyapunovReport(
        exponents=partial.exponents,
        stderr=partial.stderr,
        multiplicity=count,
        gap=gap,
        steps=n,
        seed=seed,
        warmup=warmup,
        batch_estimates=partial.batch_estimates,
    )


def lyapunov_spectrum(
    family: OperatorFamily,
    presentation: MeasurePresentation,
    p: int,
    n: int,
    seed: int,
    batches: int = DEFAULT_BATCHES,
    warmup: int = DEFAULT_WARMUP,
    orbit_index: int = 0,
    tol: float = DEFAULT_MULTIPLICITY_TOL,
) -> LyapunovReport:
    """
    Estimate the top p exponents of the cocycle over a nu-typical orbit.

    The orbit and the random initial frame come from separate streams of ``seed``, so the
    result is a deterministic function of (system, seed, n, p, batches, warmup, orbit_index).
    """
    if not 1 <= p <= family.dimension:
        raise DimensionTooSmallError(f"Requested {p} exponents for dimension {family.dimension}")
    _check_batches(n, batches)
    orbit = sample_orbit(presentation, warmup + n, seed, orbit_index)
    return lyapunov_along(
        family,
        orbit.symbols,
        p,
        batches,
        warmup,
        orbit_rng(seed, orbit_index, FRAME_STREAM),
        seed=seed,
        tol=tol,
    )


def verify_decomposition(
    family: OperatorFamily,
    bar_family: BarOperatorFamily,
    cert: TransitionBlockCertificate,
    z_word: WordLike,
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS,
) -> DecompositionCheck:
    """
    Check that the products over all assignments of B to the windows of z sum to M_z.

    Raises:
        NoWindowError: If z contains no full copy of the block
        InputError: If |B|^windows exceeds max_assignments
    """
    word = family.code.parse_target(z_word)
    windows = window_positions(word, cert)
    if not windows:
        raise NoWindowError("Word contains no full copy of the transition block")
    count = cert.size ** len(windows)
    if count > max_assignments:
        raise InputError(f"{count} assignments exceed the limit of {max_assignments}")

    full = cocycle_product(family, word).value
    total = np.zeros_like(full)
    nonzero = 0
    for assignment in product(cert.representatives, repeat=len(windows)):
        choice = dict(zip(windows, assignment))
        symbols = [IntermediateSymbol(j, choice.get(m)) for m, j in enumerate(word)]
        term = bar_product(bar_family, symbols).value
        if np.any(term):
            nonzero += 1
        total += term

    reference = float(np.abs(full).max())
    error = float(np.abs(total - full).max()) / reference if reference > 0.0 else float(np.abs(total).max())
    identity = np.allclose(
        np.sum(list(bar_family.windowed.values()), axis=0),
        family.matrix(cert.symbol),
        rtol=DECOMPOSITION_RTOL,
        atol=0.0,
    )
    return DecompositionCheck(
        ok=error <= DECOMPOSITION_RTOL,
        assignments=count,
        nonzero=nonzero,
        max_rel_error=error,
        windows=tuple(windows),
        per_symbol_identity=bool(identity),
    )


def decomposition_word(
    symbols: Sequence[int], cert: TransitionBlockCertificate, max_assignments: int = DEFAULT_MAX_ASSIGNMENTS
) -> tuple[int, ...]:
    """Short segment of an orbit around its first copy of the block, or the block itself."""
    n = len(cert.block)
    block = tuple(cert.block)
    start = next((m for m in range(len(symbols) - n + 1) if tuple(symbols[m : m + n]) == block), None)
    if start is not None:
        for pad in (2, 1, 0):
            segment = tuple(symbols[max(0, start - pad) : start + n + pad])
            if cert.size ** len(window_positions(segment, cert)) <= max_assignments:
                return segment
    return block


def topological_pressure(family: OperatorFamily) -> float:
    """log of the spectral radius of the sum of all operators."""
    radius = float(np.abs(eigvals(family.total())).max())
    return math.log(radius) if radius > 0.0 else -math.inf


def transfer_word_function(
    sft: Sft, code: CodeSpec, potential: Potential, j: int, f: WordFunction
) -> WordFunction:
    """
    Apply L_j to a word function of range r.

    (L_j f)(x) sums exp(phi(i, x_0)) f(i x) over i in rho^-1(j) with i followed by x_0.
    The result has range max(r - 1, 1).
    """
    if code.source is not sft:
        raise InputError("Code must be defined on the given shift")
    out_range = max(f.range - 1, 1)
    values = {}
    for x in enumerate_words(sft, out_range):
        total = 0.0
        for i in code.fiber(j):
            if sft.allows(i, x[0]):
                extended = ((i,) + x)[: f.range]
                total += math.exp(potential.pair_value(i, x[0])) * f[extended]
        values[x] = total
    return WordFunction(sft, out_range, values)


def verify_theorem(
    code: CodeSpec,
    potential: Potential,
    presentation: MeasurePresentation,
    steps: int,
    seed: int,
    num_exponents: Optional[int] = None,
    batches: int = DEFAULT_BATCHES,
    tol_abs: float = DEFAULT_MULTIPLICITY_TOL,
    max_block_len: int = 6,
    warmup: int = DEFAULT_WARMUP,
    orbit_index: int = 0,
    max_assignments: int = DEFAULT_MAX_ASSIGNMENTS,
    expectations: Optional[Mapping[str, float]] = None,
    strict: bool = True,
    family: Optional[OperatorFamily] = None,
    degree: Optional[ClassDegreeResult] = None,
    bar_family: Optional[BarOperatorFamily] = None,
) -> TheoremReport:
    """
    Run every check of the decomposition theorem on one orbit.

    Clauses: the top exponent equals the pressure, its multiplicity is at most the class
    degree, the decomposition identity holds, and any supplied expectations match.
    Prebuilt ``family``, ``degree`` and ``bar_family`` are reused when given.

    Raises:
        VerificationFailed: If strict and a clause fails; carries the report
    """
    if family is None:
        family = build_operators(code.source, code, potential)
    if degree is None:
        degree = class_degree(code, max_block_len)
    fibers = representative_fibers(code, degree.certificate)
    if bar_family is None:
        bar_family = bar_operators(family, degree.certificate, fibers)

    p = min(num_exponents or 4, family.dimension)
    orbit = sample_orbit(presentation, warmup + steps, seed, orbit_index)
    lyapunov = lyapunov_along(
        family, orbit.symbols, p, batches, warmup, orbit_rng(seed, orbit_index, FRAME_STREAM), seed=seed, tol=tol_abs
    )
    pressure = pressure_along(family, potential, orbit.symbols[warmup:], batches)
    multiplicity = top_multiplicity(lyapunov, tol_abs)
    word = decomposition_word(orbit.symbols[warmup:], degree.certificate, max_assignments)
    decomposition = verify_decomposition(family, bar_family, degree.certificate, word, max_assignments)

    top, top_se = lyapunov.exponents[0], lyapunov.stderr[0]
    threshold = max(tol_abs, 3.0 * (top_se + pressure.stderr))
    clauses = [
        Clause(
            "exponent_equals_pressure",
            abs(top - pressure.value) <= threshold,
            f"|{top:.6g} - {pressure.value:.6g}| vs {threshold:.3g}",
        ),
        Clause(
            "multiplicity_bounded_by_class_degree",
            multiplicity.count <= degree.value,
            f"{multiplicity.count} <= {degree.value}",
        ),
        Clause(
            "decomposition_identity",
            decomposition.ok,
            f"max relative error {decomposition.max_rel_error:.3g} over {decomposition.assignments} assignments",
        ),
    ]
    expected = dict(expectations or {})
    if expected.get("exponent") is not None:
        bound = max(tol_abs, 3.0 * top_se)
        clauses.append(
            Clause(
                "expected_exponent",
                abs(top - expected["exponent"]) <= bound,
                f"|{top:.6g} - {expected['exponent']:.6g}| vs {bound:.3g}",
            )
        )
    if expected.get("multiplicity") is not None:
        clauses.append(
            Clause(
                "expected_multiplicity",
                multiplicity.count == int(expected["multiplicity"]),
                f"{multiplicity.count} vs {int(expected['multiplicity'])}",
            )
        )
    if expected.get("class_degree") is not None:
        clauses.append(
            Clause(
                "expected_class_degree",
                degree.value == int(expected["class_degree"]),
                f"{degree.value} vs {int(expected['class_degree'])}",
            )
        )
    if expected.get("pressure") is not None:
        bound = max(tol_abs, 3.0 * pressure.stderr)
        clauses.append(
            Clause(
                "expected_pressure",
                abs(pressure.value - expected["pressure"]) <= bound,
                f"|{pressure.value:.6g} - {expected['pressure']:.6g}| vs {bound:.3g}",
            )
        )

    report = TheoremReport(
        degree=degree,
        fibers=fibers,
        lyapunov=lyapunov,
        pressure=pressure,
        multiplicity=multiplicity,
        decomposition=decomposition,
        decomposition_word=word,
        topological_pressure=topological_pressure(family),
        clauses=tuple(clauses),
    )
    for clause in clauses:
        level = logging.INFO if clause.passed else logging.WARNING
        logger.log(level, "%s: %s (%s)", clause.name, "pass" if clause.passed else "FAIL", clause.detail)
    if strict and not report.passed:
        failed = next(c for c in clauses if not c.passed)
        raise VerificationFailed(failed.name, failed.detail, report)
    return report
