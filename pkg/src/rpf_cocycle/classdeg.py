"""Degree of a one-block code onto its image, computed combinatorially.

A transition block is a target word W with a marked position l and a set B of source
symbols such that every preimage of W can be rerouted at position l through B while keeping
its two endpoints. The least |B| over all blocks is the class degree; a block attaining it
is the certificate used by the cocycle decomposition.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from itertools import combinations, product
from math import gcd
from typing import Iterable, Mapping, NamedTuple, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from rpf_cocycle.core.errors import (
    InputError,
    NotAPreimageError,
    NotIrreducibleError,
    NotPeriodicPointError,
    RoutingOverlapError,
    UnknownSymbolError,
)
from rpf_cocycle.symbolic import CodeSpec, Word, WordLike, image_language, preimage_words

logger = logging.getLogger(__name__)

DEFAULT_MAX_BLOCK_LEN = 6


@dataclass(frozen=True)
class TransitionBlockCertificate:
    """
    Minimal transition block (W, l, B).

    Attributes:
        block: Target word W
        position: Marked position l, 0 <= l < |W|
        representatives: Ordered set B of source symbols over block[position]
        routing: Routing set of every preimage of W, keyed by the preimage
        symbol: Target symbol q = block[position]
    """

    block: Word
    position: int
    representatives: tuple[int, ...]
    routing: Mapping[Word, frozenset[int]] = field(repr=False, compare=False)
    symbol: int

    @property
    def size(self) -> int:
        return len(self.representatives)


@dataclass(frozen=True)
class ClassDegreeResult:
    """Outcome of the class-degree search."""

    value: int
    certificate: TransitionBlockCertificate
    stabilized: bool
    profile: tuple[int, ...]


class RepresentativeFibers(NamedTuple):
    fibers: Mapping[int, frozenset[int]]
    uncovered: frozenset[int]


class IntermediateSymbol(NamedTuple):
    """Symbol of the intermediate alphabet: (j, None) or (q, s) for s in B."""

    target: int
    representative: Optional[int]

    @property
    def is_window(self) -> bool:
        return self.representative is not None


class TransitionClasses(NamedTuple):
    count: int
    bridge_len: int
    points: int


def _as_mask(bits: np.ndarray) -> int:
    return sum(1 << int(c) for c in np.flatnonzero(bits))


def _mask_members(mask: int) -> frozenset[int]:
    return frozenset(c for c in range(mask.bit_length()) if mask >> c & 1)


def _endpoint_reach(code: CodeSpec, word: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """
    Endpoint-indexed reachability along the fiber of a target word.

    ``forward[t, e0, c]``: c at position t is reachable from e0 at position 0.
    ``backward[t, e1, c]``: c at position t reaches e1 at the last position.
    """
    size = code.source.size
    adjacency = code.source.adjacency.astype(np.int64)
    n = len(word)
    forward = np.zeros((n, size, size), dtype=bool)
    backward = np.zeros((n, size, size), dtype=bool)
    forward[0] = np.diag(code.mask(word[0]))
    for t in range(1, n):
        forward[t] = ((forward[t - 1].astype(np.int64) @ adjacency) > 0) & code.mask(word[t])
    backward[n - 1] = np.diag(code.mask(word[n - 1]))
    for t in range(n - 2, -1, -1):
        backward[t] = ((backward[t + 1].astype(np.int64) @ adjacency.T) > 0) & code.mask(word[t])
    return forward, backward


def _routing_family(forward: np.ndarray, backward: np.ndarray, position: int) -> set[int]:
    """Distinct routing sets at a position, one per connected endpoint pair, as bitmasks."""
    valid = forward[-1]
    family = set()
    for e0, e1 in zip(*np.nonzero(valid)):
        family.add(_as_mask(forward[position, e0] & backward[position, e1]))
    return family


def _minimum_hitting_set(family: Iterable[int], bound: int) -> Optional[tuple[int, ...]]:
    """Lexicographically first hitting set of least size, if one smaller than bound exists."""
    sets = sorted(set(family))
    union = 0
    for s in sets:
        union |= s
    candidates = sorted(_mask_members(union))
    for size in range(1, min(bound, len(candidates) + 1)):
        for combo in combinations(candidates, size):
            mask = sum(1 << c for c in combo)
            if all(mask & s for s in sets):
                return combo
    return None


def _require_irreducible(code: CodeSpec) -> None:
    if not code.source.irreducible:
        raise NotIrreducibleError("Class degree needs an irreducible source shift")


def routing_set(code: CodeSpec, block: WordLike, position: int, u: Sequence[int]) -> frozenset[int]:
    """
    Symbols b such that some preimage of the block with u's endpoints passes b at position.

    Raises:
        NotAPreimageError: If u does not map onto the block
        InputError: If position is outside the block
    """
    word = code.parse_target(block)
    if not 0 <= position < len(word):
        raise InputError(f"Position {position} outside block of length {len(word)}")
    u = tuple(u)
    if len(u) != len(word) or code.image(u) != word or not code.source.is_allowed(u):
        raise NotAPreimageError("Word is not an allowed preimage of the block")
    forward, backward = _endpoint_reach(code, word)
    return frozenset(
        int(c) for c in np.flatnonzero(forward[position, u[0]] & backward[position, u[-1]])
    )


def _search(code: CodeSpec, max_len: int) -> tuple[tuple[Word, int, tuple[int, ...]], list[int]]:
    best: Optional[tuple[Word, int, tuple[int, ...]]] = None
    profile: list[int] = []
    for n in range(1, max_len + 1):
        if best is not None and len(best[2]) == 1:
            profile.append(1)
            continue
        for word in sorted(image_language(code, n)):
            forward, backward = _endpoint_reach(code, word)
            for position in range(n):
                bound = len(best[2]) if best is not None else code.source.size + 1
                hit = _minimum_hitting_set(_routing_family(forward, backward, position), bound)
                if hit is not None:
                    best = (word, position, hit)
        assert best is not None
        profile.append(len(best[2]))
        logger.debug("Best transition block up to length %d has size %d", n, profile[-1])
    assert best is not None
    return best, profile


def _certificate(code: CodeSpec, word: Word, position: int, reps: tuple[int, ...]) -> TransitionBlockCertificate:
    forward, backward = _endpoint_reach(code, word)
    routing = {
        u: frozenset(
            int(c) for c in np.flatnonzero(forward[position, u[0]] & backward[position, u[-1]])
        )
        for u in preimage_words(code, word)
    }
    return TransitionBlockCertificate(
        block=word,
        position=position,
        representatives=reps,
        routing=routing,
        symbol=word[position],
    )


def minimal_transition_block(
    code: CodeSpec, max_len: int = DEFAULT_MAX_BLOCK_LEN
) -> TransitionBlockCertificate:
    """
    Least transition block over image words of length at most max_len.

    Ties go to the shorter word, then the lexicographically smaller word, then the smaller
    position, then the lexicographically smaller set.
    """
    _require_irreducible(code)
    if max_len < 1:
        raise InputError("max_len must be at least 1")
    (word, position, reps), _ = _search(code, max_len)
    return _certificate(code, word, position, reps)


def class_degree(code: CodeSpec, max_len: int = DEFAULT_MAX_BLOCK_LEN) -> ClassDegreeResult:
    """
    Class degree with its certificate.

    The value is reported as stabilized when it is 1 or did not change over the last two
    length increments of the search.
    """
    _require_irreducible(code)
    if max_len < 1:
        raise InputError("max_len must be at least 1")
    (word, position, reps), profile = _search(code, max_len)
    value = len(reps)
    stabilized = value == 1 or (len(profile) >= 3 and profile[-1] == profile[-2] == profile[-3])
    if not stabilized:
        logger.warning("Class degree %d did not stabilize by length %d", value, max_len)
    return ClassDegreeResult(
        value=value,
        certificate=_certificate(code, word, position, reps),
        stabilized=stabilized,
        profile=tuple(profile),
    )


def representative_fibers(code: CodeSpec, cert: TransitionBlockCertificate) -> RepresentativeFibers:
    """
    R_s for s in B: the union of routing sets that contain s.

    Symbols of rho^-1(q) that lie in no R_s are returned as ``uncovered``.

    Raises:
        RoutingOverlapError: If some R_s is empty or two of them intersect
    """
    forward, backward = _endpoint_reach(code, cert.block)
    family = [_mask_members(m) for m in _routing_family(forward, backward, cert.position)]
    fibers = {s: frozenset().union(*(r for r in family if s in r)) for s in cert.representatives}
    claimed: set[int] = set()
    for s, fiber in fibers.items():
        if not fiber:
            raise RoutingOverlapError(f"Representative {code.source.alphabet[s]} has an empty fiber")
        if claimed & fiber:
            raise RoutingOverlapError("Representative fibers overlap")
        claimed |= fiber
    uncovered = frozenset(code.fiber(cert.symbol)) - claimed
    return RepresentativeFibers(fibers=fibers, uncovered=uncovered)


def intermediate_alphabet(code: CodeSpec, cert: TransitionBlockCertificate) -> list[IntermediateSymbol]:
    """(q, s) for s in B then (q, None) at q's place; (j, None) for every other j."""
    symbols = []
    for j in range(code.target_size):
        if j == cert.symbol:
            symbols.extend(IntermediateSymbol(j, s) for s in cert.representatives)
        symbols.append(IntermediateSymbol(j, None))
    return symbols


def window_positions(z_word: Sequence[int], cert: TransitionBlockCertificate) -> list[int]:
    """Positions m with the block read at m - l fully inside the word."""
    word = tuple(z_word)
    n, l = len(cert.block), cert.position
    return [
        m
        for m in range(l, len(word) - n + l + 1)
        if word[m - l : m - l + n] == cert.block
    ]


def lift_to_intermediate(
    code: CodeSpec, cert: TransitionBlockCertificate, source_word: Sequence[int]
) -> list[IntermediateSymbol]:
    """
    Intermediate symbols along a source word.

    At a window position the symbol is (q, s) with s the least representative routing the
    window's segment; elsewhere it is (z_m, None).
    """
    x = tuple(source_word)
    if not code.source.is_allowed(x):
        raise UnknownSymbolError("Source word is not allowed")
    z = code.image(x)
    windows = set(window_positions(z, cert))
    n, l = len(cert.block), cert.position
    lifted = []
    for m, j in enumerate(z):
        if m in windows:
            segment = x[m - l : m - l + n]
            routes = routing_set(code, cert.block, l, segment) & set(cert.representatives)
            lifted.append(IntermediateSymbol(j, min(routes)))
        else:
            lifted.append(IntermediateSymbol(j, None))
    return lifted


def _fiber_graph(code: CodeSpec, period: Word) -> np.ndarray:
    """G[c, c']: c over period[0] reaches c' one period later along the period word."""
    forward, _ = _endpoint_reach(code, period + period[:1])
    return forward[-1] & code.mask(period[0])[:, None]


def _shortest_cycle(graph: np.ndarray, start: int) -> Optional[tuple[int, ...]]:
    parents = {start: -1}
    frontier = [start]
    while frontier:
        nxt = []
        for v in frontier:
            for w in np.flatnonzero(graph[v]).tolist():
                if w == start:
                    path = [v]
                    while parents[path[-1]] != -1:
                        path.append(parents[path[-1]])
                    return tuple(reversed(path))
                if w not in parents:
                    parents[w] = v
                    nxt.append(w)
        frontier = nxt
    return None


def _minimal_period(cycle: tuple[int, ...]) -> tuple[int, ...]:
    for p in range(1, len(cycle) + 1):
        if len(cycle) % p == 0 and cycle[:p] * (len(cycle) // p) == cycle:
            return cycle[:p]
    return cycle


def transition_classes_periodic(
    code: CodeSpec, z_word: WordLike, bridge_len: Optional[int] = None
) -> TransitionClasses:
    """
    Count transition classes over the periodic point generated by z_word.

    Preimages are periodic points of the fiber graph taken one period at a time. x may
    transition to x' when some bridge of at most bridge_len steps leaves x and lands on x',
    checked over every relative phase; classes are the strongly connected components of
    this relation. Bridges are limited to whole periods and bridge_len defaults to
    P * |A|^2.

    Raises:
        NotPeriodicPointError: If the fiber over the periodic point carries no cycle
    """
    period = code.parse_target(z_word)
    if not period:
        raise NotPeriodicPointError("Empty word generates no periodic point")
    if bridge_len is None:
        bridge_len = len(period) * code.source.size**2
    if bridge_len < len(period):
        raise InputError("bridge_len must cover at least one period")

    graph = _fiber_graph(code, period)
    points: list[tuple[int, ...]] = []
    for v in code.fiber(period[0]):
        cycle = _shortest_cycle(graph, v)
        if cycle is None:
            continue
        # rotations of a cycle are distinct preimages
        point = _minimal_period(cycle)
        if point not in points:
            points.append(point)
    if not points:
        raise NotPeriodicPointError("No preimage of the periodic point exists")

    steps = bridge_len // len(period)
    reach = [np.eye(graph.shape[0], dtype=bool)]
    for _ in range(steps):
        reach.append((reach[-1].astype(np.int64) @ graph.astype(np.int64)) > 0)

    relation = np.zeros((len(points), len(points)), dtype=np.int8)
    for a, x in enumerate(points):
        for b, y in enumerate(points):
            span = len(x) * len(y) // gcd(len(x), len(y))
            if any(
                reach[d][x[i % len(x)], y[(i + d) % len(y)]]
                for i, d in product(range(span), range(steps + 1))
            ):
                relation[a, b] = 1
    count, _ = connected_components(csr_matrix(relation), directed=True, connection="strong")
    return TransitionClasses(count=int(count), bridge_len=bridge_len, points=len(points))


def fiber_cardinality_bound(code: CodeSpec) -> int:
    """min_j |rho^-1(j)|, an upper bound for the class degree."""
    return min(len(code.fiber(j)) for j in range(code.target_size))


def is_finite_to_one(code: CodeSpec) -> bool:
    """True iff the pair graph of the code has no diamond."""
    sft = code.source
    pairs = [(c, d) for c in range(sft.size) for d in range(sft.size) if code.rho[c] == code.rho[d]]
    index = {pair: i for i, pair in enumerate(pairs)}
    adjacency = np.zeros((len(pairs), len(pairs)), dtype=bool)
    for (c, d), i in index.items():
        for r in sft.successors(c):
            for s in sft.successors(d):
                if (r, s) in index:
                    adjacency[i, index[(r, s)]] = True
    diagonal = np.array([c == d for c, d in pairs])

    def closure(matrix: np.ndarray) -> np.ndarray:
        seen = np.zeros(len(pairs), dtype=bool)
        frontier = diagonal.copy()
        while frontier.any():
            step = (frontier.astype(np.int64) @ matrix.astype(np.int64)) > 0
            frontier = step & ~seen
            seen |= step
        return seen

    from_diagonal = closure(adjacency) & ~diagonal
    to_diagonal = closure(adjacency.T) & ~diagonal
    return not bool((from_diagonal & to_diagonal).any())


def fiber_degree(code: CodeSpec, max_len: int = DEFAULT_MAX_BLOCK_LEN) -> Optional[int]:
    """
    Least number of symbols seen at one position over all preimages of a word.

    Returns None when the code is not finite-to-one.
    """
    if not is_finite_to_one(code):
        return None
    best = code.source.size
    for n in range(1, max_len + 1):
        for word in sorted(image_language(code, n)):
            forward, backward = _endpoint_reach(code, word)
            for t in range(n):
                seen = forward[t].any(axis=0) & backward[t].any(axis=0)
                best = min(best, int(seen.sum()))
    return best
