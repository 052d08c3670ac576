"""
Bounded-Variation Approximation Module
Polynomial functionals P(t, b) = sum_I p_I int_0^t db^I on bounded-variation
paths, fitting them to continuous functionals, and the word search that
separates two stopped paths
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.optimize import linprog

from config import config
from derivations import VectorFieldSet
from errors import ChenFliessError, DomainError
from functionals import Functional
from iterated_integrals import BOUNDED_VARIATION, Driver, signature_of_words
from multi_index import MultiIndex, enumerate_words
from path_core import SampledPath, StoppedPoint
from sde_engine import solve_stratonovich

LEAST_SQUARES = 'lstsq'
MINIMAX = 'minimax'
FIT_METHODS = (LEAST_SQUARES, MINIMAX)


class PolynomialFunctional(Functional):
    """
    Finite linear combination of iterated integrals of (t, b)

    Words run over {0, ..., d}; letter 0 integrates against time.
    """

    def __init__(self, coefficients: Dict[MultiIndex, float], d: int):
        for word in coefficients:
            if word.d != d:
                raise DomainError(f"Word {word} is over 0..{word.d}, expected 0..{d}")
        self.coefficients = {word: float(c) for word, c in coefficients.items()}
        self.d = d

    @classmethod
    def from_vector(cls, words: Sequence[MultiIndex], values, d: int) -> 'PolynomialFunctional':
        return cls(dict(zip(words, np.asarray(values, dtype=float))), d)

    @property
    def level(self) -> int:
        return max((w.degree for w in self.coefficients), default=0)

    def _evaluate(self, t, path):
        if path.dimension != self.d:
            raise DomainError(f"Polynomial over d={self.d} evaluated on a {path.dimension}-dimensional path")
        if not self.coefficients:
            return np.zeros(path.batch_shape)
        signature = signature_of_words(Driver.from_path(path, BOUNDED_VARIATION), self.coefficients, 0.0, t)
        total = np.zeros(path.batch_shape)
        for word, c in self.coefficients.items():
            total = total + c * np.asarray(signature[word])
        return total

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'word': [str(w) for w in self.coefficients],
                             'coefficient': list(self.coefficients.values())})

    def write_csv(self, dest) -> None:
        self.to_frame().to_csv(dest, index=False, float_format='%.17g')

    def __repr__(self):
        return f"Polynomial(d={self.d}, level={self.level}, terms={len(self.coefficients)})"


def eval_polynomial(P: PolynomialFunctional, t: float, b: SampledPath):
    return P.evaluate(t, b)


class ControlledSolutionFunctional(Functional):
    """
    F(t, b) = y_t^k for dy = V_0(y) dt + sum_i V_i(y) db^i, y_0 given

    The equation is solved on the nodes of b up to t, so the value only
    depends on the stopped path.
    """

    def __init__(self, vf_set: VectorFieldSet, y0: Sequence[float], component: int = 1):
        if not 1 <= component <= vf_set.e:
            raise DomainError(f"Component {component} outside 1..{vf_set.e}")
        self.vf_set = vf_set
        self.y0 = tuple(np.atleast_1d(np.asarray(y0, dtype=float)))
        self.component = component

    def _evaluate(self, t, path):
        times, values = path.head(t)
        drv = Driver.from_path(SampledPath(times, values), BOUNDED_VARIATION)
        y = solve_stratonovich(self.vf_set, self.y0, drv)
        return y.values[..., -1, self.component - 1]

    def __repr__(self):
        return f"ControlledSolution(component={self.component})"


# ==================== Fitting ====================

@dataclass
class FitResult:
    """Fitted polynomial plus its error figures on the training and held-out sets"""
    polynomial: PolynomialFunctional
    level: int
    method: str
    train_sup_error: float
    train_rms_error: float
    holdout_sup_error: Optional[float]
    rank: int
    rank_deficient: bool


def corpus_dimension(corpus: Sequence[StoppedPoint]) -> int:
    dims = {point.path.dimension for point in corpus}
    if len(dims) != 1:
        raise DomainError(f"Corpus paths disagree on dimension: {sorted(dims)}")
    return dims.pop()


def feature_matrix(corpus: Sequence[StoppedPoint], words: Sequence[MultiIndex]) -> np.ndarray:
    """Row j holds the iterated integrals of sample j over [0, t_j]"""
    rows = []
    for point in corpus:
        signature = signature_of_words(Driver.from_path(point.path, BOUNDED_VARIATION), words, 0.0, point.t)
        rows.append([signature[w] for w in words])
    return np.asarray(rows, dtype=float).reshape(len(corpus), len(words))


def target_values(F: Functional, corpus: Sequence[StoppedPoint]) -> np.ndarray:
    return np.array([float(F.evaluate(point.t, point.path)) for point in corpus])


def _solve_minimax(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """min_c max_j |X c - y|_j as a linear program in (c, z)"""
    n, k = X.shape
    ones = np.ones((n, 1))
    A_ub = np.vstack([np.hstack([X, -ones]), np.hstack([-X, -ones])])
    b_ub = np.concatenate([y, -y])
    cost = np.zeros(k + 1)
    cost[-1] = 1.0
    bounds = [(None, None)] * k + [(0, None)]
    result = linprog(cost, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method='highs')
    if not result.success:
        raise ChenFliessError(f"Uniform fit failed: {result.message}")
    return result.x[:k]


def fit(F_target: Functional, corpus: Sequence[StoppedPoint], N: int, method: str = LEAST_SQUARES,
        holdout: Optional[Sequence[StoppedPoint]] = None, rank_tolerance: Optional[float] = None) -> FitResult:
    """
    Fit a polynomial functional of word length at most N

    Args:
        F_target: functional to approximate
        corpus: training samples (t, b) with bounded-variation paths
        N: maximal word length
        method: 'lstsq' (minimum-norm least squares) or 'minimax'
                (uniform error by linear programming)
        holdout: optional samples for the held-out sup error
        rank_tolerance: relative singular value cutoff (default CF_RANK_TOLERANCE)

    Returns:
        FitResult; rank deficiency is flagged, not raised
    """
    if N < 1:
        raise DomainError(f"Level N must be at least 1, got {N}")
    if method not in FIT_METHODS:
        raise DomainError(f"Unknown fit method '{method}'. Use one of: {', '.join(FIT_METHODS)}")
    if not corpus:
        raise DomainError("Training corpus is empty")
    rtol = config.RANK_TOLERANCE if rank_tolerance is None else rank_tolerance

    d = corpus_dimension(corpus)
    words = enumerate_words(N, d)
    X = feature_matrix(corpus, words)
    y = target_values(F_target, corpus)

    if method == LEAST_SQUARES:
        coefficients, _, rank, _ = np.linalg.lstsq(X, y, rcond=rtol)
    else:
        coefficients = _solve_minimax(X, y)
        singular = np.linalg.svd(X, compute_uv=False)
        rank = int(np.sum(singular > rtol * singular[0])) if singular.size and singular[0] > 0 else 0

    residual = X @ coefficients - y
    polynomial = PolynomialFunctional.from_vector(words, coefficients, d)
    holdout_error = None
    if holdout:
        holdout_residual = feature_matrix(holdout, words) @ coefficients - target_values(F_target, holdout)
        holdout_error = float(np.max(np.abs(holdout_residual)))
    return FitResult(polynomial=polynomial, level=N, method=method,
                     train_sup_error=float(np.max(np.abs(residual))),
                     train_rms_error=float(np.sqrt(np.mean(residual ** 2))),
                     holdout_sup_error=holdout_error, rank=int(rank), rank_deficient=int(rank) < len(words))


def error_curve(F_target: Functional, corpus: Sequence[StoppedPoint], holdout: Sequence[StoppedPoint],
                levels: Sequence[int], method: str = LEAST_SQUARES) -> pd.DataFrame:
    """Table `N,train_sup_error,holdout_sup_error` over the given levels"""
    rows = []
    for N in levels:
        result = fit(F_target, corpus, N, method=method, holdout=holdout)
        rows.append({'N': N, 'train_sup_error': result.train_sup_error,
                     'holdout_sup_error': result.holdout_sup_error})
    return pd.DataFrame(rows, columns=['N', 'train_sup_error', 'holdout_sup_error'])


def sine_series_corpus(n_samples: int, n_terms: int = 4, T: float = 1.0, d: int = 1, n_nodes: int = 257,
                       seed: int = 0, amplitude: float = 1.0) -> List[StoppedPoint]:
    """
    Samples (t, b) with b^i(r) = sum_k a_ik sin(k pi r / T), |a_ik| <= amplitude, t uniform on [0, T]

    The bounded coefficients keep the family compact.
    """
    if n_samples < 1 or n_terms < 1 or n_nodes < 2:
        raise DomainError("Corpus needs at least one sample, one term and two nodes")
    rng = np.random.default_rng(seed)
    times = np.linspace(0.0, T, n_nodes)
    modes = np.sin(np.outer(times, np.arange(1, n_terms + 1)) * np.pi / T)
    corpus = []
    for _ in range(n_samples):
        a = rng.uniform(-amplitude, amplitude, size=(n_terms, d))
        t = float(rng.uniform(0.0, T))
        corpus.append(StoppedPoint(t, SampledPath(times, modes @ a)))
    return corpus


# ==================== Separation ====================

def anchored(path: SampledPath) -> SampledPath:
    """
    The path started from the origin: a jump from 0 to x(0) at time 0

    Iterated integrals of the anchored path see the starting value through
    the single-letter words and are unchanged for every word starting with 0.
    """
    start = path.values[..., 0, :]
    if not np.any(start):
        return path
    if path.n_nodes > 1 and path.times[1] == 0.0:
        values = np.array(path.values)
        values[..., 0, :] = 0.0
        return SampledPath(path.times, values, path.interpolation)
    times = np.concatenate([[0.0], path.times])
    values = np.concatenate([np.zeros_like(path.values[..., :1, :]), path.values], axis=-2)
    return SampledPath(times, values, path.interpolation)


def separation_gap(a: StoppedPoint, b: StoppedPoint, word: MultiIndex) -> float:
    """|int_0^s dx^I - int_0^t dy^I| for the two stopped points, both paths anchored at the origin"""
    left = signature_of_words(Driver.from_path(anchored(a.path), BOUNDED_VARIATION), [word], 0.0, a.t)[word]
    right = signature_of_words(Driver.from_path(anchored(b.path), BOUNDED_VARIATION), [word], 0.0, b.t)[word]
    return abs(float(left) - float(right))


def find_separating_word(a: StoppedPoint, b: StoppedPoint, L: int,
                         tolerance: Optional[float] = None) -> Optional[MultiIndex]:
    """
    First word telling two stopped points apart

    The time word (0) separates different stopping times; otherwise the
    words (0,...,0,i) with k <= L zeros are tried in order of k, then i.

    Paths are anchored at the origin, so different starting values show up
    in the words (i).

    Raises:
        DomainError: paths of different dimension
    """
    if a.path.dimension != b.path.dimension:
        raise DomainError("Stopped points have paths of different dimension")
    tolerance = config.SEPARATION_TOLERANCE if tolerance is None else tolerance
    d = a.path.dimension
    if a.t != b.t:
        return MultiIndex((0,), d)
    for k in range(L + 1):
        for i in range(1, d + 1):
            word = MultiIndex((0,) * k + (i,), d)
            if separation_gap(a, b, word) > tolerance:
                return word
    return None
