"""
Functionals Module
Nonanticipative functionals F(t, x), their time and space derivatives, and
the built-in families (cylinders, running integrals, products, sums)

A functional may know its derivatives in closed form: derivative(letter)
returns another Functional, or None when only finite differences are
available. Letter 0 is the time derivative, letter i >= 1 the space
derivative in coordinate i.
"""

from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from config import config
from errors import ContractError, DomainError
from path_core import SampledPath
from smooth_functions import Const, Expr, ZERO, add, apply_univariate, coordinate, mul

Value = Union[float, np.ndarray]
DerivativeWord = Sequence[int]  # letters, last one applied first


def _as_value(out) -> Value:
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Smoothness:
    """
    Declared differentiability class C^{time,space}

    A derivative word is admissible when it has at most `time` zero letters
    and at most `space` nonzero letters. None means unbounded.
    """
    time: Optional[int] = None
    space: Optional[int] = None

    def admits(self, word: DerivativeWord) -> bool:
        zeros = sum(1 for a in word if a == 0)
        others = len(word) - zeros
        return (self.time is None or zeros <= self.time) and (self.space is None or others <= self.space)

    def __str__(self):
        fmt = lambda n: 'inf' if n is None else str(n)
        return f"C^({fmt(self.time)},{fmt(self.space)})"


SMOOTH = Smoothness()


class Functional:
    """Base class: a real functional of a stopped path"""

    smoothness: Smoothness = SMOOTH

    def evaluate(self, t: float, path: SampledPath) -> Value:
        """
        Evaluate F(t, x)

        Args:
            t: time in [0, T]
            path: a path, possibly batched

        Returns:
            float, or an array over the path's batch axes
        """
        if not 0.0 <= t <= path.T * (1 + 1e-12):
            raise DomainError(f"Time {t} outside [0, {path.T:g}]")
        return _as_value(self._evaluate(min(float(t), path.T), path))

    __call__ = evaluate

    def _evaluate(self, t: float, path: SampledPath) -> np.ndarray:
        raise NotImplementedError

    def evaluate_along(self, path: SampledPath, times=None) -> np.ndarray:
        """F(t_j, x) for every t_j (default: the path's own nodes); shape (..., k)"""
        times = path.times if times is None else np.asarray(times, dtype=float)
        return np.stack([np.asarray(self._evaluate(float(t), path)) for t in times], axis=-1)

    def derivative(self, letter: int) -> Optional['Functional']:
        """Closed-form derivative functional, or None if unavailable"""
        cache = self.__dict__.setdefault('_derivatives', {})
        if letter not in cache:
            cache[letter] = self._derivative(letter)
        return cache[letter]

    def _derivative(self, letter: int) -> Optional['Functional']:
        return None

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def bounded(self) -> bool:
        """True when built only from bounded catalog pieces"""
        return False

    # ---- algebra -------------------------------------------------------
    def __mul__(self, other):
        return product(self, _as_functional(other))

    def __rmul__(self, other):
        return product(_as_functional(other), self)

    def __add__(self, other):
        return linear_combination([(1.0, self), (1.0, _as_functional(other))])

    def __radd__(self, other):
        return linear_combination([(1.0, _as_functional(other)), (1.0, self)])

    def __sub__(self, other):
        return linear_combination([(1.0, self), (-1.0, _as_functional(other))])

    def __neg__(self):
        return linear_combination([(-1.0, self)])


class ConstantFunctional(Functional):
    def __init__(self, value: float):
        self.value = float(value)

    def _evaluate(self, t, path):
        return np.full(path.batch_shape, self.value)

    def evaluate_along(self, path, times=None):
        times = path.times if times is None else np.asarray(times, dtype=float)
        return np.full(path.batch_shape + (len(times),), self.value)

    def _derivative(self, letter):
        return ZERO_FUNCTIONAL

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    @property
    def bounded(self) -> bool:
        return True

    def __repr__(self):
        return f"Constant({self.value:g})"


ZERO_FUNCTIONAL = ConstantFunctional(0.0)
ONE_FUNCTIONAL = ConstantFunctional(1.0)


class CylinderFunctional(Functional):
    """F(t, x) = f(t, x_t)"""

    def __init__(self, expr: Expr):
        self.expr = expr

    def _evaluate(self, t, path):
        return self.expr(t, path.value_at(t))

    def evaluate_along(self, path, times=None):
        times = path.times if times is None else np.asarray(times, dtype=float)
        return self.expr(times, path.value_at(times))

    def _derivative(self, letter):
        # freezing the path after t leaves only the explicit time dependence
        return make_cylinder(self.expr.partial(letter))

    @property
    def bounded(self) -> bool:
        return self.expr.bounded

    def __repr__(self):
        return f"Cylinder({self.expr!r})"


class RunningIntegralFunctional(Functional):
    """
    F(t, x) = f(int_0^t g(r, x_r) dr)

    The integral uses the trapezoid rule on the path grid. A bump at t does
    not reach the integral, so every space derivative vanishes, while the
    time derivative is g(t, x_t) f'(int_0^t g).
    """

    def __init__(self, outer: Expr, integrand: Expr):
        self.outer = outer
        self.integrand = integrand

    def integral(self, t: float, path: SampledPath) -> np.ndarray:
        times, values = path.head(t)
        g = self.integrand(times, values)
        return np.sum(0.5 * (g[..., 1:] + g[..., :-1]) * np.diff(times), axis=-1)

    def _evaluate(self, t, path):
        return apply_univariate(self.outer, self.integral(t, path))

    def evaluate_along(self, path, times=None):
        times = path.times if times is None else np.asarray(times, dtype=float)
        refined = path.with_nodes(times)
        g = self.integrand(refined.times, refined.values)
        cells = 0.5 * (g[..., 1:] + g[..., :-1]) * np.diff(refined.times)
        running = np.concatenate([np.zeros(cells.shape[:-1] + (1,)), np.cumsum(cells, axis=-1)], axis=-1)
        idx = np.searchsorted(refined.times, times, side='right') - 1
        return apply_univariate(self.outer, running[..., idx])

    def _derivative(self, letter):
        if letter != 0:
            return ZERO_FUNCTIONAL
        return product(make_running_integral(self.outer.partial(1), self.integrand),
                       make_cylinder(self.integrand))

    @property
    def bounded(self) -> bool:
        return self.outer.bounded

    def __repr__(self):
        return f"RunningIntegral(f={self.outer!r}, g={self.integrand!r})"


class ProductFunctional(Functional):
    def __init__(self, factors: Sequence[Functional]):
        self.factors = tuple(factors)

    def _evaluate(self, t, path):
        out = np.asarray(self.factors[0]._evaluate(t, path))
        for factor in self.factors[1:]:
            out = out * factor._evaluate(t, path)
        return out

    def evaluate_along(self, path, times=None):
        out = self.factors[0].evaluate_along(path, times)
        for factor in self.factors[1:]:
            out = out * factor.evaluate_along(path, times)
        return out

    def _derivative(self, letter):
        terms = []
        for j, factor in enumerate(self.factors):
            d_factor = factor.derivative(letter)
            if d_factor is None:
                return None
            if d_factor.is_zero:
                continue
            terms.append((1.0, product(*(d_factor if i == j else f for i, f in enumerate(self.factors)))))
        return linear_combination(terms)

    @property
    def bounded(self) -> bool:
        return all(f.bounded for f in self.factors)

    def __repr__(self):
        return " * ".join(repr(f) for f in self.factors)


class SumFunctional(Functional):
    def __init__(self, terms: Sequence[Tuple[float, Functional]]):
        self.terms = tuple((float(c), f) for c, f in terms)

    def _evaluate(self, t, path):
        out = np.zeros(path.batch_shape)
        for coefficient, term in self.terms:
            out = out + coefficient * np.asarray(term._evaluate(t, path))
        return out

    def evaluate_along(self, path, times=None):
        out = 0.0
        for coefficient, term in self.terms:
            out = out + coefficient * term.evaluate_along(path, times)
        return out

    def _derivative(self, letter):
        parts = []
        for coefficient, term in self.terms:
            d_term = term.derivative(letter)
            if d_term is None:
                return None
            parts.append((coefficient, d_term))
        return linear_combination(parts)

    @property
    def bounded(self) -> bool:
        return all(f.bounded for _, f in self.terms)

    def __repr__(self):
        return " + ".join(f"{c:g}*{f!r}" for c, f in self.terms)


class CallableFunctional(Functional):
    """Wraps a plain function fn(t, path); derivatives come from finite differences"""

    def __init__(self, fn: Callable[[float, SampledPath], Value], smoothness: Smoothness = SMOOTH,
                 bounded: bool = False, name: str = 'callable'):
        self.fn = fn
        self.smoothness = smoothness
        self._bounded = bounded
        self.name = name

    def _evaluate(self, t, path):
        return self.fn(t, path)

    @property
    def bounded(self) -> bool:
        return self._bounded

    def __repr__(self):
        return f"Callable({self.name})"


class NumericDerivativeFunctional(Functional):
    """The finite-difference derivative of another functional in one letter"""

    def __init__(self, base: Functional, letter: int, time_step: Optional[float] = None,
                 space_step: Optional[float] = None):
        self.base = base
        self.letter = letter
        self.time_step = time_step
        self.space_step = space_step

    def _evaluate(self, t, path):
        if self.letter == 0:
            return time_derivative(self.base, t, path, self.time_step)
        return space_derivative(self.base, self.letter, t, path, self.space_step)

    def __repr__(self):
        return f"Numeric(d{self.letter} {self.base!r})"


# ==================== Builders ====================

def _as_functional(value) -> Functional:
    if isinstance(value, Functional):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return ConstantFunctional(float(value))
    raise TypeError(f"Cannot turn {type(value).__name__} into a functional")


def constant(value: float) -> Functional:
    return ConstantFunctional(value)


def make_cylinder(expr: Expr) -> Functional:
    """F(t, x) = f(t, x_t) with derivatives read off the partials of f"""
    if expr.is_constant:
        return ConstantFunctional(float(expr(0.0, np.zeros(1))))
    return CylinderFunctional(expr)


def endpoint_coordinate(i: int) -> Functional:
    """F(t, x) = x_t^i"""
    return make_cylinder(coordinate(i))


def make_running_integral(outer: Expr, integrand: Expr) -> Functional:
    """
    F(t, x) = f(int_0^t g(r, x_r) dr)

    Args:
        outer: f, a univariate expression in y1
        integrand: g, an expression in (t, y)
    """
    if outer.variables - {1}:
        raise DomainError("The outer function of a running integral must be univariate in y1")
    if integrand.is_zero or outer.is_constant:
        return ConstantFunctional(float(apply_univariate(outer, 0.0)))
    return RunningIntegralFunctional(outer, integrand)


def product(*factors: Functional) -> Functional:
    """Pointwise product; constants fold and cylinders merge into one"""
    scale = 1.0
    cylinder: Optional[Expr] = None
    others: List[Functional] = []
    for factor in factors:
        parts = factor.factors if isinstance(factor, ProductFunctional) else (factor,)
        for part in parts:
            if isinstance(part, ConstantFunctional):
                scale *= part.value
            elif isinstance(part, CylinderFunctional):
                cylinder = part.expr if cylinder is None else mul(cylinder, part.expr)
            else:
                others.append(part)
    if scale == 0.0:
        return ZERO_FUNCTIONAL
    if cylinder is not None or scale != 1.0:
        merged = mul(Const(scale), cylinder) if cylinder is not None else Const(scale)
        if merged.is_zero:
            return ZERO_FUNCTIONAL
        if not (merged.is_constant and others and merged(0.0, np.zeros(1)) == 1.0):
            others.insert(0, make_cylinder(merged))
    if not others:
        return ONE_FUNCTIONAL
    if len(others) == 1:
        return others[0]
    return ProductFunctional(others)


def linear_combination(terms: Iterable[Tuple[float, Functional]]) -> Functional:
    """Sum of coefficient * functional; zeros drop, constants and cylinders merge"""
    collected: Dict[int, Tuple[float, Functional]] = {}
    order: List[int] = []
    cylinder: Expr = ZERO

    def push(coefficient: float, term: Functional):
        nonlocal cylinder
        if coefficient == 0.0 or term.is_zero:
            return
        if isinstance(term, SumFunctional):
            for c, inner in term.terms:
                push(coefficient * c, inner)
        elif isinstance(term, ConstantFunctional):
            cylinder = add(cylinder, Const(coefficient * term.value))
        elif isinstance(term, CylinderFunctional):
            cylinder = add(cylinder, mul(Const(coefficient), term.expr))
        else:
            key = id(term)
            if key in collected:
                collected[key] = (collected[key][0] + coefficient, term)
            else:
                collected[key] = (coefficient, term)
                order.append(key)

    for coefficient, term in terms:
        push(float(coefficient), term)

    parts = [collected[key] for key in order if collected[key][0] != 0.0]
    if not cylinder.is_zero:
        parts.insert(0, (1.0, make_cylinder(cylinder)))
    if not parts:
        return ZERO_FUNCTIONAL
    if len(parts) == 1 and parts[0][0] == 1.0:
        return parts[0][1]
    return SumFunctional(parts)


# ==================== Derivatives ====================

def time_derivative(F: Functional, t: float, x: SampledPath, h: Optional[float] = None,
                    extrapolate: bool = True) -> Value:
    """
    One-sided time derivative (F(t+h, x stopped at t) - F(t, x)) / h

    Args:
        F: functional
        t: time
        x: path
        h: step (default CF_TIME_STEP_FRACTION * T)
        extrapolate: combine steps h and h/2 by Richardson extrapolation

    Raises:
        DomainError: t + h beyond the horizon
    """
    h = config.TIME_STEP_FRACTION * x.T if h is None else float(h)
    if h <= 0:
        raise DomainError(f"Time step must be positive, got {h}")
    if t + h > x.T * (1 + 1e-12):
        raise DomainError(f"t + h = {t + h:g} exceeds the horizon {x.T:g}")
    frozen = x.stop_at(t)
    base = np.asarray(F.evaluate(t, x))

    def quotient(step: float) -> np.ndarray:
        return (np.asarray(F.evaluate(min(t + step, x.T), frozen)) - base) / step

    if not extrapolate:
        return _as_value(quotient(h))
    return _as_value(2.0 * quotient(h / 2.0) - quotient(h))


def space_derivative(F: Functional, i: int, t: float, x: SampledPath, eps: Optional[float] = None) -> Value:
    """
    Central difference (F(t, x + eps e_i 1[.>=t]) - F(t, x - eps e_i 1[.>=t])) / 2eps

    Args:
        eps: bump size (default CF_SPACE_STEP * max(1, |x_t|))

    Raises:
        DomainError: coordinate outside 1..e
    """
    if not 1 <= i <= x.dimension:
        raise DomainError(f"Coordinate {i} outside 1..{x.dimension}")
    if eps is None:
        eps = config.SPACE_STEP * max(1.0, float(np.max(np.abs(x.value_at(t)))))
    up = np.asarray(F.evaluate(t, x.bump(t, i, eps)))
    down = np.asarray(F.evaluate(t, x.bump(t, i, -eps)))
    return _as_value((up - down) / (2.0 * eps))


def derivative_functional(F: Functional, word: DerivativeWord, time_step: Optional[float] = None,
                          space_step: Optional[float] = None) -> Tuple[Functional, bool]:
    """
    The functional d_{a1} ... d_{ak} F, the last letter applied first

    Returns:
        (functional, numeric) where numeric tells whether finite differences were needed

    Raises:
        ContractError: word outside the declared class, or too deep for finite differences
    """
    word = tuple(int(a) for a in word)
    if not F.smoothness.admits(word):
        raise ContractError(f"Derivative word {'.'.join(map(str, word))} is outside {F.smoothness}")
    current, numeric = F, False
    for letter in reversed(word):
        following = current.derivative(letter)
        if following is None:
            numeric = True
            following = NumericDerivativeFunctional(current, letter, time_step, space_step)
        current = following
    if numeric and len(word) > config.MAX_NUMERIC_DEPTH:
        raise ContractError(
            f"Derivative word {'.'.join(map(str, word))} needs closed-form derivatives; "
            f"finite differences are limited to depth {config.MAX_NUMERIC_DEPTH}")
    return current, numeric


def derivative_word(F: Functional, word: DerivativeWord, t: float, x: SampledPath,
                    time_step: Optional[float] = None, space_step: Optional[float] = None) -> Value:
    """Evaluate d_{a1} ... d_{ak} F at (t, x), closed form whenever available"""
    bad = [a for a in word if not 0 <= a <= x.dimension]
    if bad:
        raise DomainError(f"Derivative letters {bad} outside 0..{x.dimension}")
    functional, _ = derivative_functional(F, word, time_step, space_step)
    return functional.evaluate(t, x)
