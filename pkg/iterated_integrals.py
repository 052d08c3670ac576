"""
Iterated Integrals Module
Iterated integrals of a driver over the simplex s < r1 < ... < rk < t

The first letter of a word is integrated innermost. All prefixes of a word are
accumulated in one sweep over the grid, and prefixes shared between words are
computed once.
"""

import math
from typing import Callable, Dict, Iterable, Optional, Tuple, Union

import numpy as np
import pandas as pd

from errors import DomainError
from multi_index import Letters, MultiIndex, WordLike, _letters, enumerate_A
from path_core import LINEAR, SampledPath

BOUNDED_VARIATION = 'bounded-variation'
STRATONOVICH = 'stratonovich'
KINDS = (BOUNDED_VARIATION, STRATONOVICH)


class Driver:
    """
    A driving path X = (t, X^1, ..., X^d) with coordinate 0 equal to time

    Attributes:
        path: SampledPath of dimension d + 1 (batched drivers allowed)
        kind: BOUNDED_VARIATION (exact Chen recursion on piecewise-linear
              paths) or STRATONOVICH (trapezoid rule throughout)
    """

    def __init__(self, path: SampledPath, kind: str = STRATONOVICH):
        if kind not in KINDS:
            raise DomainError(f"Unknown driver kind '{kind}'. Use one of: {', '.join(KINDS)}")
        if path.dimension < 2:
            raise DomainError("A driver needs the time coordinate plus at least one more")
        if path.interpolation != LINEAR:
            raise DomainError("Drivers are piecewise-linear paths")
        clock = np.broadcast_to(path.times, path.values.shape[:-1])
        if not np.array_equal(path.values[..., 0], clock):
            raise DomainError("Driver coordinate 0 must equal the grid times exactly")
        self.path = path
        self.kind = kind

    @classmethod
    def from_path(cls, path: SampledPath, kind: str = BOUNDED_VARIATION) -> 'Driver':
        """Prepend the time coordinate to a d-dimensional path"""
        clock = np.broadcast_to(path.times[:, None], path.values.shape[:-1] + (1,))
        values = np.concatenate([clock, path.values], axis=-1)
        return cls(SampledPath(path.times, values, path.interpolation), kind)

    @property
    def d(self) -> int:
        return self.path.dimension - 1

    @property
    def T(self) -> float:
        return self.path.T

    @property
    def times(self) -> np.ndarray:
        return self.path.times

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.path.batch_shape

    def select(self, k) -> 'Driver':
        return Driver(self.path.select(k), self.kind)

    def noise(self) -> SampledPath:
        """The driver without its time coordinate"""
        return SampledPath(self.path.times, self.path.values[..., 1:], self.path.interpolation)

    def segment(self, s: float, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """
        Grid nodes in [s, t] (endpoints inserted) and the increments between them

        Returns:
            times of shape (N+1,), increments of shape (..., N, d+1)
        """
        if not 0.0 <= s <= t <= self.T:
            raise DomainError(f"Need 0 <= s <= t <= T, got s={s}, t={t}, T={self.T:g}")
        refined = self.path.with_nodes([s, t])
        lo = int(np.searchsorted(refined.times, s, side='left'))
        hi = int(np.searchsorted(refined.times, t, side='right'))
        times = refined.times[lo:hi]
        increments = np.diff(refined.values[..., lo:hi, :], axis=-2)
        increments[..., 0] = np.diff(times)
        return times, increments

    def __repr__(self):
        return f"Driver(d={self.d}, kind={self.kind}, {self.path!r})"


class _PrefixSweep:
    """Running integrals of every prefix of the requested words, memoized by prefix"""

    def __init__(self, increments: np.ndarray, kind: str, base: Optional[np.ndarray] = None):
        self.increments = increments
        self.kind = kind
        n_nodes = increments.shape[-2] + 1
        if base is None:
            base = np.ones(increments.shape[:-2] + (n_nodes,))
        self.memo: Dict[Letters, np.ndarray] = {(): base}

    def _accumulate(self, steps: np.ndarray) -> np.ndarray:
        zero = np.zeros(steps.shape[:-1] + (1,))
        return np.concatenate([zero, np.cumsum(steps, axis=-1)], axis=-1)

    def running(self, prefix: Letters) -> np.ndarray:
        if prefix in self.memo:
            return self.memo[prefix]
        j = len(prefix)
        dX = self.increments
        if self.kind == STRATONOVICH:
            inner = self.running(prefix[:-1])
            steps = 0.5 * (inner[..., :-1] + inner[..., 1:]) * dX[..., prefix[-1]]
        else:
            # Chen: a linear cell contributes prod(increments) / k! for each suffix
            steps = np.zeros(dX.shape[:-1])
            product = np.ones(dX.shape[:-1])
            for i in range(j - 1, -1, -1):
                product = product * dX[..., prefix[i]]
                steps = steps + self.running(prefix[:i])[..., :-1] * product / math.factorial(j - i)
        out = self._accumulate(steps)
        self.memo[prefix] = out
        return out

    def value(self, letters: Letters):
        out = self.running(letters)[..., -1]
        return float(out) if np.ndim(out) == 0 else out


def _check_word(drv: Driver, word: WordLike) -> Letters:
    letters = _letters(word)
    if not letters:
        raise DomainError("Iterated integrals are indexed by nonempty words")
    if max(letters) > drv.d or min(letters) < 0:
        raise DomainError(f"Word {'.'.join(map(str, letters))} uses letters outside 0..{drv.d}")
    return letters


def iterated_integral(drv: Driver, word: WordLike, s: float, t: float):
    """
    Integral of dX^{a1} ... dX^{ak} over s < r1 < ... < rk < t

    Args:
        drv: driver
        word: MultiIndex or letter sequence, first letter innermost
        s, t: integration limits with 0 <= s <= t <= T

    Returns:
        float, or an array over the driver's batch axes
    """
    letters = _check_word(drv, word)
    _, increments = drv.segment(s, t)
    return _PrefixSweep(increments, drv.kind).value(letters)


def signature_of_words(drv: Driver, words: Iterable[WordLike], s: float, t: float) -> Dict:
    """Iterated integrals for many words with shared prefix work; keys are the given words"""
    words = list(words)
    checked = [_check_word(drv, w) for w in words]
    _, increments = drv.segment(s, t)
    sweep = _PrefixSweep(increments, drv.kind)
    return {word: sweep.value(letters) for word, letters in zip(words, checked)}


def signature_up_to(drv: Driver, m: int, s: float, t: float) -> Dict[MultiIndex, Union[float, np.ndarray]]:
    """Iterated integrals of every word in A(m), in enumeration order"""
    return signature_of_words(drv, enumerate_A(m, drv.d), s, t)


def weighted_iterated_integral(drv: Driver, word: WordLike, s: float, t: float,
                               integrand: Union[np.ndarray, Callable[[np.ndarray], np.ndarray]]):
    """
    Iterated integral with h(r1) inserted at the innermost time

    Args:
        integrand: values on the segment nodes, shape (..., N+1), or a callable
                   mapping the node times to such values

    Returns:
        float or batch array; trapezoid weights are used for every kind
    """
    letters = _check_word(drv, word)
    times, increments = drv.segment(s, t)
    base = integrand(times) if callable(integrand) else integrand
    base = np.broadcast_to(np.asarray(base, dtype=float), increments.shape[:-2] + (times.size,))
    return _PrefixSweep(increments, STRATONOVICH, base=base).value(letters)


def running_integral(drv: Driver, word: WordLike, s: float, t: float) -> Tuple[np.ndarray, np.ndarray]:
    """Node times in [s, t] and the iterated integral from s up to each node"""
    letters = _check_word(drv, word)
    times, increments = drv.segment(s, t)
    return times, _PrefixSweep(increments, drv.kind).running(letters)


def write_signature_csv(signature: Dict, dest=None):
    """Dump `word,value` rows in the order of the mapping"""
    rows = []
    for word, value in signature.items():
        if np.ndim(value) != 0:
            raise DomainError("Only unbatched signatures can be written as CSV")
        label = str(word) if isinstance(word, MultiIndex) else '.'.join(map(str, word))
        rows.append({'word': label, 'value': float(value)})
    return pd.DataFrame(rows, columns=['word', 'value']).to_csv(dest, index=False, float_format='%.17g')
