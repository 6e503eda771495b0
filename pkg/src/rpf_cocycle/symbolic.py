"""Shifts of finite type, one-block factor codes and presentations of their sofic images.

Symbols carry integer ids in declaration order and every iteration below runs in that
order, so all outputs are deterministic. Words are tuples of symbol ids.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING, Iterator, Mapping, NamedTuple, Optional, Sequence, Union

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from rpf_cocycle.core.errors import (
    CodeError,
    DuplicateSymbolError,
    InputError,
    LanguageMismatchError,
    MeasureError,
    NotEssentialError,
    NotIrreducibleError,
    UnknownSymbolError,
)

if TYPE_CHECKING:
    from rpf_cocycle.potential import Potential

logger = logging.getLogger(__name__)

Word = tuple[int, ...]
WordLike = Union[str, Sequence[Union[int, str]]]

DEFAULT_L_CHECK = 8


def _read_only(array: np.ndarray) -> np.ndarray:
    frozen = np.array(array, copy=True)
    frozen.setflags(write=False)
    return frozen


def is_strongly_connected(adjacency: np.ndarray) -> bool:
    """Return True if the digraph with the given boolean adjacency matrix is strongly connected."""
    if adjacency.shape[0] == 0:
        return False
    count, _ = connected_components(
        csr_matrix(adjacency.astype(np.int8)), directed=True, connection="strong"
    )
    return bool(count == 1)


def parse_word(word: WordLike, alphabet: Sequence[str]) -> Word:
    """
    Convert a word given by names or ids into a tuple of symbol ids.

    Strings containing whitespace are split on it; other strings are read as one symbol
    when they name one, and character by character otherwise. Sequences may mix names and ids.

    Raises:
        UnknownSymbolError: If a name or id is not part of the alphabet
    """
    index = {symbol: i for i, symbol in enumerate(alphabet)}
    tokens: Sequence[Union[int, str]]
    if isinstance(word, str):
        if any(ch.isspace() for ch in word):
            tokens = word.split()
        elif word in index:
            tokens = [word]
        else:
            tokens = list(word)
    else:
        tokens = word

    ids = []
    for token in tokens:
        if isinstance(token, (int, np.integer)) and not isinstance(token, bool):
            if not 0 <= int(token) < len(alphabet):
                raise UnknownSymbolError(f"Symbol id {token} outside alphabet of size {len(alphabet)}")
            ids.append(int(token))
        elif isinstance(token, str) and token in index:
            ids.append(index[token])
        else:
            raise UnknownSymbolError(f"Unknown symbol {token!r}")
    return tuple(ids)


@dataclass(frozen=True, eq=False)
class Sft:
    """
    Memory-1 shift of finite type.

    ``adjacency[c, r]`` is True iff symbol ``c`` may be followed by symbol ``r``. ``origin``
    is set on higher-block recodings and gives, for each symbol, the word of the original
    shift it stands for.
    """

    alphabet: tuple[str, ...]
    adjacency: np.ndarray
    irreducible: bool
    origin: Optional[tuple[Word, ...]] = None

    @property
    def size(self) -> int:
        return len(self.alphabet)

    def index(self, symbol: str) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise UnknownSymbolError(f"Unknown symbol {symbol!r}") from None

    def successors(self, c: int) -> tuple[int, ...]:
        return tuple(int(r) for r in np.flatnonzero(self.adjacency[c]))

    def predecessors(self, r: int) -> tuple[int, ...]:
        return tuple(int(c) for c in np.flatnonzero(self.adjacency[:, r]))

    def allows(self, c: int, r: int) -> bool:
        return bool(self.adjacency[c, r])

    def is_allowed(self, word: Sequence[int]) -> bool:
        return all(self.adjacency[word[t], word[t + 1]] for t in range(len(word) - 1))

    def parse_word(self, word: WordLike) -> Word:
        return parse_word(word, self.alphabet)

    def format_word(self, word: Sequence[int]) -> str:
        return " ".join(self.alphabet[c] for c in word)


def validate_sft(
    alphabet: Sequence[str],
    transitions: Sequence[Sequence[Union[int, str]]],
    require_irreducible: bool = False,
) -> Sft:
    """
    Build a validated shift of finite type from raw symbols and transition pairs.

    Args:
        alphabet: Symbol names in declaration order
        transitions: Pairs (c, r) meaning "c followed by r is allowed", by name or id
        require_irreducible: Raise when the transition digraph is not strongly connected

    Returns:
        Immutable Sft with irreducibility reported in ``irreducible``

    Raises:
        DuplicateSymbolError: If a symbol is declared twice
        UnknownSymbolError: If a transition references an undeclared symbol
        NotEssentialError: If a symbol lacks a successor or a predecessor
        NotIrreducibleError: If irreducibility is required and fails
    """
    symbols = tuple(str(s) for s in alphabet)
    if not symbols:
        raise InputError("Alphabet must not be empty")
    seen: set[str] = set()
    for symbol in symbols:
        if symbol in seen:
            raise DuplicateSymbolError(f"Symbol {symbol!r} declared twice")
        seen.add(symbol)

    adjacency = np.zeros((len(symbols), len(symbols)), dtype=bool)
    for pair in transitions:
        if len(pair) != 2:
            raise InputError(f"Transition {pair!r} is not a pair")
        c, r = parse_word(list(pair), symbols)
        adjacency[c, r] = True

    dead_ends = [symbols[c] for c in range(len(symbols)) if not adjacency[c].any()]
    orphans = [symbols[r] for r in range(len(symbols)) if not adjacency[:, r].any()]
    if dead_ends or orphans:
        raise NotEssentialError(
            f"Symbols without successor {dead_ends} or without predecessor {orphans}"
        )

    irreducible = is_strongly_connected(adjacency)
    if require_irreducible and not irreducible:
        raise NotIrreducibleError("Transition digraph is not strongly connected")
    return Sft(alphabet=symbols, adjacency=_read_only(adjacency), irreducible=irreducible)


def count_words(sft: Sft, n: int) -> int:
    """Number of allowed words of length n, computed exactly with integer arithmetic."""
    if n < 1:
        raise InputError("Word length must be at least 1")
    transfer = sft.adjacency.astype(object)
    counts = np.ones(sft.size, dtype=object)
    for _ in range(n - 1):
        counts = transfer @ counts
    return int(sum(counts))


def enumerate_words(sft: Sft, n: int) -> Iterator[Word]:
    """Yield every allowed word of length n in lexicographic order of symbol ids."""
    if n < 1:
        raise InputError("Word length must be at least 1")
    successors = [sft.successors(c) for c in range(sft.size)]
    stack: list[Word] = [(c,) for c in reversed(range(sft.size))]
    while stack:
        word = stack.pop()
        if len(word) == n:
            yield word
            continue
        for r in reversed(successors[word[-1]]):
            stack.append(word + (r,))


@dataclass(frozen=True, eq=False)
class CodeSpec:
    """One-block factor code rho from the source alphabet onto the target alphabet."""

    source: Sft
    target_alphabet: tuple[str, ...]
    rho: tuple[int, ...]

    @property
    def target_size(self) -> int:
        return len(self.target_alphabet)

    def fiber(self, j: int) -> tuple[int, ...]:
        return tuple(c for c, image in enumerate(self.rho) if image == j)

    def mask(self, j: int) -> np.ndarray:
        return np.array([image == j for image in self.rho], dtype=bool)

    def image(self, word: Sequence[int]) -> Word:
        return tuple(self.rho[c] for c in word)

    def parse_target(self, word: WordLike) -> Word:
        return parse_word(word, self.target_alphabet)

    def format_target(self, word: Sequence[int]) -> str:
        return " ".join(self.target_alphabet[j] for j in word)


def validate_code(
    source: Sft,
    rho: Mapping[str, str],
    target_alphabet: Optional[Sequence[str]] = None,
) -> CodeSpec:
    """
    Build a validated one-block code.

    Args:
        source: Source shift of finite type
        rho: Map from every source symbol name to a target symbol name
        target_alphabet: Target symbols in declaration order; defaults to first appearance
            of each image in source declaration order

    Raises:
        DuplicateSymbolError: If the target alphabet repeats a symbol
        UnknownSymbolError: If rho names an undeclared source or target symbol
        CodeError: If rho is not total or not surjective
    """
    for name in rho:
        source.index(name)
    missing = [s for s in source.alphabet if s not in rho]
    if missing:
        raise CodeError(f"Code is not total: no image for {missing}")

    if target_alphabet is None:
        targets: list[str] = []
        for symbol in source.alphabet:
            if rho[symbol] not in targets:
                targets.append(rho[symbol])
        target_alphabet = targets
    targets_tuple = tuple(str(t) for t in target_alphabet)
    if len(set(targets_tuple)) != len(targets_tuple):
        raise DuplicateSymbolError("Target alphabet declares a symbol twice")

    images = []
    for symbol in source.alphabet:
        if rho[symbol] not in targets_tuple:
            raise UnknownSymbolError(f"Unknown target symbol {rho[symbol]!r}")
        images.append(targets_tuple.index(rho[symbol]))
    unused = [t for j, t in enumerate(targets_tuple) if j not in images]
    if unused:
        raise CodeError(f"Code is not surjective: unused target symbols {unused}")
    return CodeSpec(source=source, target_alphabet=targets_tuple, rho=tuple(images))


def identity_code(sft: Sft) -> CodeSpec:
    """The identity code, mapping every symbol to a target symbol of the same name."""
    return CodeSpec(source=sft, target_alphabet=sft.alphabet, rho=tuple(range(sft.size)))


def _block_names(sft: Sft, blocks: Sequence[Word]) -> tuple[str, ...]:
    names = tuple("".join(sft.alphabet[c] for c in block) for block in blocks)
    if len(set(names)) == len(names):
        return names
    return tuple(".".join(sft.alphabet[c] for c in block) for block in blocks)


def higher_block(
    sft: Sft, code: CodeSpec, potential: "Potential", k: int
) -> tuple[Sft, CodeSpec, "Potential"]:
    """
    Recode onto the (k-1)-block presentation so that the potential has range at most 2.

    Symbols of the recoded shift are the allowed (k-1)-words; u may be followed by v when
    they overlap in k-2 symbols and u·v[-1] is allowed. The code applies rho to the first
    original symbol, and the recoded potential reads the original one off the k-word u·v[-1].

    Raises:
        InputError: If k < max(2, potential.range)
    """
    from rpf_cocycle.potential import Potential

    if k < max(2, potential.range):
        raise InputError(f"Block length {k} is below max(2, range={potential.range})")

    blocks = list(enumerate_words(sft, k - 1))
    index = {block: i for i, block in enumerate(blocks)}
    adjacency = np.zeros((len(blocks), len(blocks)), dtype=bool)
    values: dict[Word, float] = {}
    for i, block in enumerate(blocks):
        for r in sft.successors(block[-1]):
            j = index[block[1:] + (r,)]
            adjacency[i, j] = True
            k_word = block + (r,)
            values[(i, j)] = potential.values[k_word[: potential.range]]

    recoded = Sft(
        alphabet=_block_names(sft, blocks),
        adjacency=_read_only(adjacency),
        irreducible=is_strongly_connected(adjacency),
        origin=tuple(blocks),
    )
    recoded_code = CodeSpec(
        source=recoded,
        target_alphabet=code.target_alphabet,
        rho=tuple(code.rho[block[0]] for block in blocks),
    )
    recoded_potential = Potential(sft=recoded, range=2, values=values, beta=potential.beta)
    logger.debug("Recoded %d symbols into %d blocks of length %d", sft.size, len(blocks), k - 1)
    return recoded, recoded_code, recoded_potential


def completion_masks(code: CodeSpec, word: Sequence[int]) -> list[np.ndarray]:
    """
    For each position t, the source symbols at t from which word[t:] has a preimage.

    Position t is restricted to rho^-1(word[t]).
    """
    adjacency = code.source.adjacency.astype(np.int64)
    masks: list[np.ndarray] = [np.zeros(0, dtype=bool)] * len(word)
    if not word:
        return masks
    masks[-1] = code.mask(word[-1])
    for t in range(len(word) - 2, -1, -1):
        masks[t] = ((adjacency @ masks[t + 1].astype(np.int64)) > 0) & code.mask(word[t])
    return masks


def has_preimage(code: CodeSpec, word: Sequence[int]) -> bool:
    """True iff the target word lies in the language of the image."""
    if not word:
        return True
    return bool(completion_masks(code, word)[0].any())


def preimage_words(code: CodeSpec, z_word: WordLike) -> list[Word]:
    """
    All allowed source words mapping onto z_word, in lexicographic order.

    The list is empty iff z_word is not in the image language.

    Raises:
        UnknownSymbolError: If z_word uses a symbol outside the target alphabet
    """
    word = code.parse_target(z_word)
    if not word:
        return [()]
    masks = completion_masks(code, word)
    sft = code.source
    results: list[Word] = []
    stack: list[Word] = [(c,) for c in reversed(np.flatnonzero(masks[0]).tolist())]
    while stack:
        prefix = stack.pop()
        t = len(prefix)
        if t == len(word):
            results.append(prefix)
            continue
        for r in reversed(sft.successors(prefix[-1])):
            if masks[t][r]:
                stack.append(prefix + (r,))
    return results


def image_language(code: CodeSpec, n: int) -> set[Word]:
    """Every target word of length n that has a preimage."""
    if n < 1:
        raise InputError("Word length must be at least 1")
    adjacency = code.source.adjacency.astype(np.int64)
    masks = [code.mask(j) for j in range(code.target_size)]
    frontier: dict[Word, np.ndarray] = {(j,): masks[j] for j in range(code.target_size)}
    for _ in range(n - 1):
        extended: dict[Word, np.ndarray] = {}
        for word, reach in frontier.items():
            successors = (reach.astype(np.int64) @ adjacency) > 0
            for j in range(code.target_size):
                nxt = successors & masks[j]
                if nxt.any():
                    extended[word + (j,)] = nxt
        frontier = extended
    return set(frontier)


class Edge(NamedTuple):
    source: int
    target: int
    label: int


@dataclass(frozen=True)
class LabelledGraph:
    """Labelled digraph presenting a sofic shift; labels index the target alphabet."""

    states: tuple[str, ...]
    labels: tuple[str, ...]
    edges: tuple[Edge, ...]

    def out_edges(self, state: int) -> tuple[Edge, ...]:
        return tuple(edge for edge in self.edges if edge.source == state)

    def follow(self, state: int, label: int) -> Optional[int]:
        for edge in self.edges:
            if edge.source == state and edge.label == label:
                return edge.target
        return None

    def adjacency(self) -> np.ndarray:
        matrix = np.zeros((len(self.states), len(self.states)), dtype=bool)
        for edge in self.edges:
            matrix[edge.source, edge.target] = True
        return matrix

    def is_right_resolving(self) -> bool:
        seen = set()
        for edge in self.edges:
            if (edge.source, edge.label) in seen:
                return False
            seen.add((edge.source, edge.label))
        return True

    def language(self, n: int) -> set[Word]:
        """Label words of length n read along paths starting anywhere."""
        frontier: dict[Word, frozenset[int]] = {(): frozenset(range(len(self.states)))}
        for _ in range(n):
            extended: dict[Word, set[int]] = {}
            for word, states in frontier.items():
                for edge in self.edges:
                    if edge.source in states:
                        extended.setdefault(word + (edge.label,), set()).add(edge.target)
            frontier = {word: frozenset(states) for word, states in extended.items()}
        return set(frontier)


def validate_labelled_graph(graph: LabelledGraph) -> LabelledGraph:
    """
    Check that a labelled graph is right-resolving and irreducible.

    Raises:
        MeasureError: If either property fails or an edge references a missing state or label
    """
    for edge in graph.edges:
        if not (0 <= edge.source < len(graph.states) and 0 <= edge.target < len(graph.states)):
            raise MeasureError(f"Edge {edge} references an unknown state")
        if not 0 <= edge.label < len(graph.labels):
            raise MeasureError(f"Edge {edge} references an unknown label")
    if not graph.is_right_resolving():
        raise MeasureError("Presentation is not right-resolving")
    if not is_strongly_connected(graph.adjacency()):
        raise MeasureError("Presentation is not irreducible")
    return graph


def check_presentation_language(
    code: CodeSpec, graph: LabelledGraph, l_check: int = DEFAULT_L_CHECK
) -> None:
    """
    Compare the language of a presentation with the image language up to length l_check.

    Raises:
        LanguageMismatchError: On the first length where the two languages differ
    """
    for n in range(1, l_check + 1):
        generated = graph.language(n)
        expected = image_language(code, n)
        if generated != expected:
            extra = sorted(generated - expected)[:3]
            missing = sorted(expected - generated)[:3]
            raise LanguageMismatchError(
                f"Presentation language differs from the image at length {n}: "
                f"extra {[code.format_target(w) for w in extra]}, "
                f"missing {[code.format_target(w) for w in missing]}"
            )


def _subset_name(sft: Sft, subset: frozenset[int]) -> str:
    return "{" + ",".join(sft.alphabet[c] for c in sorted(subset)) + "}"


def image_presentation(code: CodeSpec, l_check: int = DEFAULT_L_CHECK) -> LabelledGraph:
    """
    Right-resolving presentation of the image Z = pi(X) by the subset construction.

    States are follower sets: sets of source symbols that may come next. Exploration starts
    from the full alphabet, and the result keeps the first terminal strongly connected
    component in discovery order. The language is then checked against fiber enumeration
    up to length l_check.

    Raises:
        NotIrreducibleError: If the source shift is not irreducible
        LanguageMismatchError: If the verification fails
    """
    sft = code.source
    if not sft.irreducible:
        raise NotIrreducibleError("Image presentation requires an irreducible source")

    start = frozenset(range(sft.size))
    seen: dict[frozenset[int], int] = {start: 0}
    order = [start]
    frontier = deque([start])
    raw_edges: list[Edge] = []
    while frontier:
        subset = frontier.popleft()
        for j in range(code.target_size):
            nxt = frozenset(
                r for c in sorted(subset) if code.rho[c] == j for r in sft.successors(c)
            )
            if not nxt:
                continue
            if nxt not in seen:
                seen[nxt] = len(order)
                order.append(nxt)
                frontier.append(nxt)
            raw_edges.append(Edge(seen[subset], seen[nxt], j))
    logger.debug("Subset construction reached %d states", len(order))

    adjacency = np.zeros((len(order), len(order)), dtype=np.int8)
    for edge in raw_edges:
        adjacency[edge.source, edge.target] = 1
    _, component = connected_components(
        csr_matrix(adjacency), directed=True, connection="strong"
    )
    leaving = {component[e.source] for e in raw_edges if component[e.source] != component[e.target]}
    terminal = next(
        component[state] for state in range(len(order)) if component[state] not in leaving
    )
    kept = [state for state in range(len(order)) if component[state] == terminal]
    renumber = {state: i for i, state in enumerate(kept)}
    graph = LabelledGraph(
        states=tuple(_subset_name(sft, order[state]) for state in kept),
        labels=code.target_alphabet,
        edges=tuple(
            Edge(renumber[e.source], renumber[e.target], e.label)
            for e in raw_edges
            if e.source in renumber and e.target in renumber
        ),
    )
    check_presentation_language(code, graph, l_check)
    return graph
