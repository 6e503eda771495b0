"""Markov measures on the image, presented by right-resolving labelled graphs.

Orbits are drawn with numpy's PCG64 generator. Each orbit and each auxiliary stream gets
its own ``SeedSequence`` keyed by ``(orbit_index, stream)`` so that results depend only on
the seed and not on how orbits are scheduled.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from rpf_cocycle.core.errors import InputError, MeasureError, NotIrreducibleChainError
from rpf_cocycle.symbolic import Edge, LabelledGraph, WordLike, parse_word, validate_labelled_graph

logger = logging.getLogger(__name__)

PROBABILITY_TOL = 1e-12
STATIONARY_TOL = 1e-12

ORBIT_STREAM = 0
FRAME_STREAM = 1


def orbit_rng(seed: int, orbit_index: int = 0, stream: int = ORBIT_STREAM) -> np.random.Generator:
    """Independent PCG64 generator for one (orbit, stream) pair."""
    if seed < 0:
        raise InputError("Seed must be non-negative")
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(orbit_index, stream)))


def stationary_distribution(transition: np.ndarray) -> np.ndarray:
    """
    Unique stationary distribution of an irreducible stochastic matrix.

    Raises:
        NotIrreducibleChainError: If the chain is not irreducible
        MeasureError: If the balance residual exceeds tolerance
    """
    n = transition.shape[0]
    count, _ = connected_components(
        csr_matrix((transition > 0).astype(np.int8)), directed=True, connection="strong"
    )
    if n == 0 or count != 1:
        raise NotIrreducibleChainError("Markov chain is not irreducible")

    system = transition.T - np.eye(n)
    system[-1, :] = 1.0
    rhs = np.zeros(n)
    rhs[-1] = 1.0
    pi = np.linalg.solve(system, rhs)
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    residual = float(np.abs(pi @ transition - pi).max())
    if residual > STATIONARY_TOL:
        raise MeasureError(f"Stationary balance residual {residual:.3e} exceeds tolerance")
    return pi


@dataclass(frozen=True, eq=False)
class MeasurePresentation:
    """Labelled graph with positive edge probabilities and its stationary state distribution."""

    graph: LabelledGraph
    edge_prob: tuple[float, ...]
    stationary: np.ndarray

    @property
    def num_states(self) -> int:
        return len(self.graph.states)

    def transition_matrix(self) -> np.ndarray:
        matrix = np.zeros((self.num_states, self.num_states))
        for edge, prob in zip(self.graph.edges, self.edge_prob):
            matrix[edge.source, edge.target] += prob
        return matrix

    def label_matrix(self, label: int) -> np.ndarray:
        matrix = np.zeros((self.num_states, self.num_states))
        for edge, prob in zip(self.graph.edges, self.edge_prob):
            if edge.label == label:
                matrix[edge.source, edge.target] = prob
        return matrix


def build_presentation(graph: LabelledGraph, edge_prob: Sequence[float]) -> MeasurePresentation:
    """
    Attach edge probabilities to a right-resolving presentation.

    Raises:
        MeasureError: If a probability is not positive, or outgoing probabilities of a
            state do not sum to 1 within 1e-12
        NotIrreducibleChainError: If the chain is reducible
    """
    validate_labelled_graph(graph)
    if len(edge_prob) != len(graph.edges):
        raise MeasureError("Need one probability per edge")
    probs = tuple(float(p) for p in edge_prob)
    if any(not p > 0.0 for p in probs):
        raise MeasureError("Edge probabilities must be positive")
    totals = np.zeros(len(graph.states))
    for edge, prob in zip(graph.edges, probs):
        totals[edge.source] += prob
    bad = [graph.states[s] for s, total in enumerate(totals) if abs(total - 1.0) > PROBABILITY_TOL]
    if bad:
        raise MeasureError(f"Outgoing probabilities do not sum to 1 at states {bad}")

    presentation = MeasurePresentation(graph=graph, edge_prob=probs, stationary=np.zeros(0))
    pi = stationary_distribution(presentation.transition_matrix())
    pi.setflags(write=False)
    object.__setattr__(presentation, "stationary", pi)
    return presentation


def from_weights(graph: LabelledGraph, weights: Sequence[float]) -> MeasurePresentation:
    """Normalize positive edge weights per state into probabilities."""
    totals: dict[int, float] = {}
    for edge, weight in zip(graph.edges, weights):
        if not weight > 0.0:
            raise MeasureError("Edge weights must be positive")
        totals[edge.source] = totals.get(edge.source, 0.0) + float(weight)
    return build_presentation(
        graph, [w / totals[e.source] for e, w in zip(graph.edges, weights)]
    )


def uniform_measure(graph: LabelledGraph) -> MeasurePresentation:
    """Equal probability on the outgoing edges of every state."""
    return from_weights(graph, [1.0] * len(graph.edges))


def label_weight_measure(graph: LabelledGraph, weights: Mapping[str, float]) -> MeasurePresentation:
    """
    Weight each edge by its label and renormalize per state.

    On a single-state presentation this is the Bernoulli measure with the given probabilities.
    """
    missing = [label for label in graph.labels if label not in weights]
    if missing:
        raise MeasureError(f"No weight for labels {missing}")
    return from_weights(graph, [weights[graph.labels[e.label]] for e in graph.edges])


def custom_presentation(
    states: Sequence[str],
    labels: Sequence[str],
    edges: Sequence[tuple[str, str, str, float]],
) -> MeasurePresentation:
    """Build a presentation from (from, to, label, prob) tuples given by name."""
    state_names = tuple(states)
    if len(set(state_names)) != len(state_names):
        raise MeasureError("Presentation declares a state twice")
    index = {name: i for i, name in enumerate(state_names)}
    built = []
    probs = []
    for source, target, label, prob in edges:
        if source not in index or target not in index:
            raise MeasureError(f"Edge {source}->{target} references an unknown state")
        built.append(Edge(index[source], index[target], parse_word([label], labels)[0]))
        probs.append(prob)
    graph = LabelledGraph(states=state_names, labels=tuple(labels), edges=tuple(built))
    return build_presentation(graph, probs)


def stationary(presentation: MeasurePresentation) -> np.ndarray:
    """Recompute the stationary distribution of a presentation's state chain."""
    return stationary_distribution(presentation.transition_matrix())


def word_frequency(presentation: MeasurePresentation, word: WordLike) -> float:
    """nu[w] = pi . P_{w_0} ... P_{w_{n-1}} . 1 for a label word w."""
    labels = parse_word(word, presentation.graph.labels)
    row = np.array(presentation.stationary, dtype=float)
    for label in labels:
        row = row @ presentation.label_matrix(label)
    return float(row.sum())


@dataclass(frozen=True)
class OrbitSample:
    """Sampled target orbit with the presentation states it visited."""

    seed: int
    orbit_index: int
    symbols: tuple[int, ...]
    states: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.symbols)


def sample_orbit(
    presentation: MeasurePresentation,
    n: int,
    seed: int,
    orbit_index: int = 0,
) -> OrbitSample:
    """
    Draw a path of n edges: initial state from the stationary law, then edge by edge.

    ``states`` has n + 1 entries, ``symbols`` has n.
    """
    if n < 1:
        raise InputError("Orbit length must be at least 1")
    rng = orbit_rng(seed, orbit_index, ORBIT_STREAM)
    uniforms = rng.random(n + 1)

    out_edges = [presentation.graph.out_edges(s) for s in range(presentation.num_states)]
    edge_index = {edge: i for i, edge in enumerate(presentation.graph.edges)}
    cumulative: list[list[float]] = []
    for edges in out_edges:
        running, acc = [], 0.0
        for edge in edges:
            acc += presentation.edge_prob[edge_index[edge]]
            running.append(acc)
        cumulative.append(running)

    start_cdf = np.cumsum(presentation.stationary)
    state = min(int(np.searchsorted(start_cdf, uniforms[0], side="right")), presentation.num_states - 1)
    states = [state]
    symbols = []
    for u in uniforms[1:]:
        choices = cumulative[state]
        pick = min(bisect.bisect_right(choices, u * choices[-1]), len(choices) - 1)
        edge = out_edges[state][pick]
        symbols.append(edge.label)
        state = edge.target
        states.append(state)
    logger.debug("Sampled orbit %d of length %d (seed %d)", orbit_index, n, seed)
    return OrbitSample(seed=seed, orbit_index=orbit_index, symbols=tuple(symbols), states=tuple(states))


def empirical_frequency(symbols: Sequence[int], word: Sequence[int]) -> Optional[float]:
    """Fraction of positions where an overlapping copy of word starts."""
    k = len(word)
    windows = len(symbols) - k + 1
    if windows <= 0:
        return None
    target = tuple(word)
    hits = sum(1 for t in range(windows) if tuple(symbols[t : t + k]) == target)
    return hits / windows
