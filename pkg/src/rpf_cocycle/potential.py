"""Finite-range word functions on a shift of finite type, and the potential."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from types import MappingProxyType
from typing import Callable, Mapping, NamedTuple, Union

import numpy as np

from rpf_cocycle.core.errors import PotentialError, RangeTooLargeError
from rpf_cocycle.symbolic import Sft, Word, enumerate_words, parse_word

DEFAULT_BETA = 0.5

WordKey = Union[str, Word]


def first_disagreement(u: Word, v: Word) -> int:
    """Index of the first position where u and v differ, or len(u) if they agree."""
    for t, (a, b) in enumerate(zip(u, v)):
        if a != b:
            return t
    return min(len(u), len(v))


def _parse_key(sft: Sft, key: WordKey, length: int) -> Word:
    if isinstance(key, tuple):
        word = parse_word(list(key), sft.alphabet)
    elif length == 1:
        word = parse_word([key], sft.alphabet)
    else:
        word = parse_word(key.split(), sft.alphabet)
    return word


@dataclass(frozen=True, eq=False)
class WordFunction:
    """
    Function of the first ``range`` coordinates, stored as a table over allowed words.

    The table holds exactly the allowed words of length ``range``.
    """

    sft: Sft
    range: int
    values: Mapping[Word, float]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", MappingProxyType(dict(self.values)))

    def __getitem__(self, word: Word) -> float:
        return self.values[word]

    def words(self) -> tuple[Word, ...]:
        return tuple(sorted(self.values))

    def sup_norm(self) -> float:
        return max((abs(v) for v in self.values.values()), default=0.0)

    def lipschitz(self, beta: float) -> float:
        """Smallest L with |f(x) - f(y)| <= L beta^t whenever x, y first disagree at t."""
        return lipschitz_seminorm(self.values, beta)

    def norm(self, beta: float) -> float:
        return max(self.sup_norm(), self.lipschitz(beta))

    def map(self, func: Callable[[float], float]) -> "WordFunction":
        return WordFunction(self.sft, self.range, {w: func(v) for w, v in self.values.items()})

    def shifted(self, constant: float) -> "WordFunction":
        return self.map(lambda v: v + constant)

    def as_array(self) -> np.ndarray:
        return np.array([self.values[w] for w in self.words()], dtype=float)

    @classmethod
    def constant(cls, sft: Sft, range: int, value: float) -> "WordFunction":
        return cls(sft, range, {w: value for w in enumerate_words(sft, range)})


def lipschitz_seminorm(values: Mapping[Word, float], beta: float) -> float:
    """Largest |f(u) - f(v)| / beta^t over pairs of words first disagreeing at t."""
    best = 0.0
    for u, v in combinations(sorted(values), 2):
        t = first_disagreement(u, v)
        best = max(best, abs(values[u] - values[v]) / beta**t)
    return best


def make_word_function(
    sft: Sft, range: int, values: Mapping[WordKey, float], require_finite: bool = True
) -> WordFunction:
    """
    Build a word function from a table keyed by words or by space-separated names.

    Raises:
        PotentialError: If the table misses an allowed word, covers a forbidden or
            malformed word, or holds a non-finite value
    """
    if range < 1:
        raise PotentialError("Range must be at least 1")
    table: dict[Word, float] = {}
    for key, value in values.items():
        word = _parse_key(sft, key, range)
        if len(word) != range or not sft.is_allowed(word):
            raise PotentialError(f"Entry {key!r} is not an allowed word of length {range}")
        if require_finite and not math.isfinite(float(value)):
            raise PotentialError(f"Entry {key!r} is not finite")
        table[word] = float(value)
    missing = [w for w in enumerate_words(sft, range) if w not in table]
    if missing:
        raise PotentialError(
            f"Potential values incomplete: missing {[sft.format_word(w) for w in missing[:5]]}"
        )
    return WordFunction(sft, range, table)


class Seminorm(NamedTuple):
    value: float
    sup_norm: float


@dataclass(frozen=True, eq=False)
class Potential(WordFunction):
    """Real potential phi of finite range with its metric parameter beta."""

    beta: float = DEFAULT_BETA

    def pair_value(self, c: int, r: int) -> float:
        """phi on a cylinder starting c, r; range 1 ignores r."""
        if self.range == 1:
            return self.values[(c,)]
        if self.range == 2:
            return self.values[(c, r)]
        raise RangeTooLargeError(f"Range {self.range} needs higher-block recoding first")

    def max_value(self) -> float:
        return max(self.values.values())

    def min_value(self) -> float:
        return min(self.values.values())


def validate_potential(
    sft: Sft, range: int, values: Mapping[WordKey, float], beta: float = DEFAULT_BETA
) -> Potential:
    """
    Validate a potential table.

    Raises:
        PotentialError: If beta is outside (0, 1) or the table is not exactly the
            allowed words of length ``range`` with finite values
    """
    if not 0.0 < beta < 1.0:
        raise PotentialError(f"beta must lie in (0, 1), got {beta}")
    table = make_word_function(sft, range, values)
    return Potential(sft=sft, range=range, values=table.values, beta=beta)


def zero_potential(sft: Sft, beta: float = DEFAULT_BETA) -> Potential:
    return Potential(sft=sft, range=1, values={(c,): 0.0 for c in range(sft.size)}, beta=beta)


def seminorm(potential: Potential) -> Seminorm:
    """|phi|_beta together with the sup norm of phi."""
    return Seminorm(potential.lipschitz(potential.beta), potential.sup_norm())
