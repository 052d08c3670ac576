"""
Multi-Index Module
Words over the alphabet {0, 1, ..., d}, their degree and weight, the
truncation sets A(m) and the boundary words that make up the remainder
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from errors import DomainError

Letters = Tuple[int, ...]


def _weight(letters: Letters) -> int:
    return len(letters) + sum(1 for a in letters if a == 0)


@dataclass(frozen=True)
class MultiIndex:
    """
    A nonempty word (a1, ..., ak) over {0, ..., d}

    Letter 0 is the time channel. The weight counts each zero twice, which is
    the exponent of sqrt(t) in the Brownian scaling of the matching iterated
    integral.
    """
    letters: Letters
    d: int

    def __post_init__(self):
        letters = tuple(int(a) for a in self.letters)
        object.__setattr__(self, 'letters', letters)
        if self.d < 1:
            raise DomainError(f"Alphabet bound d must be at least 1, got {self.d}")
        if not letters:
            raise DomainError("Multi-indices are nonempty words")
        bad = [a for a in letters if not 0 <= a <= self.d]
        if bad:
            raise DomainError(f"Letters {bad} outside 0..{self.d}")

    @property
    def degree(self) -> int:
        return len(self.letters)

    @property
    def weight(self) -> int:
        return _weight(self.letters)

    @property
    def zero_count(self) -> int:
        return self.weight - self.degree

    @property
    def is_zero_free(self) -> bool:
        return self.zero_count == 0

    @property
    def sort_key(self) -> Tuple[int, int, Letters]:
        return self.weight, self.degree, self.letters

    def tail(self) -> Letters:
        return self.letters[1:]

    def __len__(self):
        return len(self.letters)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, k):
        return self.letters[k]

    def __add__(self, other: 'MultiIndex') -> 'MultiIndex':
        if not isinstance(other, MultiIndex):
            return NotImplemented
        return MultiIndex(self.letters + other.letters, max(self.d, other.d))

    def __lt__(self, other: 'MultiIndex') -> bool:
        return self.sort_key < other.sort_key

    def __str__(self):
        return '.'.join(str(a) for a in self.letters)

    @classmethod
    def parse(cls, text: str, d: int) -> 'MultiIndex':
        return parse_word(text, d)


WordLike = Union[MultiIndex, Sequence[int]]


def _letters(word: WordLike) -> Letters:
    return word.letters if isinstance(word, MultiIndex) else tuple(int(a) for a in word)


def degree(word: WordLike) -> int:
    return len(_letters(word))


def weight(word: WordLike) -> int:
    """|I| plus the number of zero letters"""
    return _weight(_letters(word))


def parse_word(text: str, d: int) -> MultiIndex:
    """Parse the dotted text form, e.g. '1.1.0'"""
    parts = str(text).strip().split('.')
    try:
        letters = tuple(int(p) for p in parts)
    except ValueError:
        raise DomainError(f"Cannot parse word '{text}'; expected letters joined by dots, e.g. 1.1.0")
    return MultiIndex(letters, d)


@lru_cache(maxsize=None)
def _letters_up_to_weight(m: int, d: int) -> Tuple[Letters, ...]:
    found = []
    frontier: List[Letters] = [()]
    while frontier:
        grown = []
        for word in frontier:
            for a in range(d + 1):
                candidate = word + (a,)
                if _weight(candidate) <= m:
                    found.append(candidate)
                    grown.append(candidate)
        frontier = grown
    found.sort(key=lambda w: (_weight(w), len(w), w))
    return tuple(found)


def enumerate_A(m: int, d: int) -> List[MultiIndex]:
    """
    All nonempty words of weight at most m

    Ordered by weight, then degree, then lexicographically.
    """
    if m < 0 or d < 1:
        raise DomainError(f"Need m >= 0 and d >= 1, got m={m}, d={d}")
    return [MultiIndex(w, d) for w in _letters_up_to_weight(m, d)]


def enumerate_words(max_degree: int, d: int) -> List[MultiIndex]:
    """All nonempty words of degree at most max_degree, ordered by degree then letters"""
    if max_degree < 0 or d < 1:
        raise DomainError(f"Need max_degree >= 0 and d >= 1, got {max_degree}, {d}")
    out: List[Letters] = []
    frontier: List[Letters] = [()]
    for _ in range(max_degree):
        frontier = [w + (a,) for w in frontier for a in range(d + 1)]
        out.extend(frontier)
    return [MultiIndex(w, d) for w in out]


def boundary_set(m: int, d: int, max_degree_guard: Optional[int] = None) -> List[MultiIndex]:
    """
    Remainder words: (a, *tail) outside A(m) whose tail is empty or in A(m)

    Args:
        m: truncation level (m = 0 gives every single letter)
        d: alphabet bound
        max_degree_guard: raise if a member would be longer than this

    Returns:
        Words sorted like enumerate_A; each has weight m+1 or m+2
    """
    if m < 0 or d < 1:
        raise DomainError(f"Need m >= 0 and d >= 1, got m={m}, d={d}")
    tails: Iterable[Letters] = ((),) + _letters_up_to_weight(m, d)
    found = {
        (a,) + tail
        for tail in tails
        for a in range(d + 1)
        if _weight((a,) + tail) > m
    }
    words = sorted(found, key=lambda w: (_weight(w), len(w), w))
    longest = max((len(w) for w in words), default=0)
    if max_degree_guard is not None and longest > max_degree_guard:
        raise DomainError(f"Boundary words reach degree {longest}, above the guard {max_degree_guard}")
    return [MultiIndex(w, d) for w in words]


@lru_cache(maxsize=4096)
def _shuffle(u: Letters, v: Letters) -> Tuple[Letters, ...]:
    if not u:
        return (v,)
    if not v:
        return (u,)
    left = tuple(w + (u[-1],) for w in _shuffle(u[:-1], v))
    right = tuple(w + (v[-1],) for w in _shuffle(u, v[:-1]))
    return left + right


def shuffle(first: WordLike, second: WordLike) -> List[Letters]:
    """All interleavings of two words, with multiplicity"""
    return list(_shuffle(_letters(first), _letters(second)))
