"""
Smooth Function Module
Closed-form smooth scalar functions of (t, y1, ..., ye) with exact partial derivatives

Variable 0 is time, variable k >= 1 is the k-th state coordinate. Every node
knows its own derivative rule, so partials of any order are assembled by
composing nodes; no general computer algebra system is involved.
"""

from typing import Dict, FrozenSet, Sequence, Tuple, Union

import numpy as np
from scipy.special import expit

from errors import DomainError

Number = Union[int, float]


def _result_shape(t: np.ndarray, y: np.ndarray) -> Tuple[int, ...]:
    return np.broadcast_shapes(np.shape(t), y.shape[:-1])


class Expr:
    """Base class for smooth expressions"""

    #: variable indices the expression depends on
    variables: FrozenSet[int] = frozenset()

    def __call__(self, t, y) -> np.ndarray:
        """
        Evaluate the expression

        Args:
            t: time, scalar or array broadcastable against y[..., 0]
            y: state array with the coordinate axis last

        Returns:
            Array of the broadcast shape (a 0-d array for scalar input)
        """
        t = np.asarray(t, dtype=float)
        y = np.asarray(y, dtype=float)
        if y.ndim == 0:
            y = y.reshape(1)
        return self.evaluate(t, y)

    def evaluate(self, t: np.ndarray, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def partial(self, k: int) -> 'Expr':
        """Exact partial derivative with respect to variable k (0 = time)"""
        cache = self.__dict__.setdefault('_partials', {})
        if k not in cache:
            cache[k] = self._partial(k) if k in self.variables else ZERO
        return cache[k]

    def _partial(self, k: int) -> 'Expr':
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def is_constant(self) -> bool:
        return not self.variables

    @property
    def bounded(self) -> bool:
        """Whether the catalog guarantees a global bound"""
        return False

    # ---- algebra -------------------------------------------------------
    def __add__(self, other):
        return add(self, as_expr(other))

    def __radd__(self, other):
        return add(as_expr(other), self)

    def __sub__(self, other):
        return add(self, mul(Const(-1.0), as_expr(other)))

    def __rsub__(self, other):
        return add(as_expr(other), mul(Const(-1.0), self))

    def __mul__(self, other):
        return mul(self, as_expr(other))

    def __rmul__(self, other):
        return mul(as_expr(other), self)

    def __neg__(self):
        return mul(Const(-1.0), self)

    def __pow__(self, n: int):
        return power(self, n)


class Const(Expr):
    def __init__(self, value: Number):
        self.value = float(value)

    def evaluate(self, t, y):
        return np.full(_result_shape(t, y), self.value)

    @property
    def is_zero(self) -> bool:
        return self.value == 0.0

    @property
    def bounded(self) -> bool:
        return True

    def __repr__(self):
        return f"{self.value:g}"


ZERO = Const(0.0)
ONE = Const(1.0)


class Var(Expr):
    def __init__(self, index: int):
        if index < 0:
            raise DomainError(f"Variable index must be non-negative, got {index}")
        self.index = index
        self.variables = frozenset({index})

    def evaluate(self, t, y):
        shape = _result_shape(t, y)
        if self.index == 0:
            return np.broadcast_to(t, shape).astype(float)
        if self.index > y.shape[-1]:
            raise DomainError(f"Variable y{self.index} used on a {y.shape[-1]}-dimensional state")
        return np.broadcast_to(y[..., self.index - 1], shape).astype(float)

    def _partial(self, k):
        return ONE

    def __repr__(self):
        return 't' if self.index == 0 else f"y{self.index}"


class Add(Expr):
    def __init__(self, terms: Sequence[Expr]):
        self.terms = tuple(terms)
        self.variables = frozenset().union(*(term.variables for term in self.terms))

    def evaluate(self, t, y):
        total = self.terms[0].evaluate(t, y)
        for term in self.terms[1:]:
            total = total + term.evaluate(t, y)
        return total

    def _partial(self, k):
        return add(*(term.partial(k) for term in self.terms))

    @property
    def bounded(self) -> bool:
        return all(term.bounded for term in self.terms)

    def __repr__(self):
        return "(" + " + ".join(repr(term) for term in self.terms) + ")"


class Mul(Expr):
    def __init__(self, factors: Sequence[Expr]):
        self.factors = tuple(factors)
        self.variables = frozenset().union(*(factor.variables for factor in self.factors))

    def evaluate(self, t, y):
        total = self.factors[0].evaluate(t, y)
        for factor in self.factors[1:]:
            total = total * factor.evaluate(t, y)
        return total

    def _partial(self, k):
        terms = []
        for j, factor in enumerate(self.factors):
            if k not in factor.variables:
                continue
            terms.append(mul(*(f.partial(k) if i == j else f for i, f in enumerate(self.factors))))
        return add(*terms)

    @property
    def bounded(self) -> bool:
        return all(factor.bounded for factor in self.factors)

    def __repr__(self):
        return "*".join(repr(factor) for factor in self.factors)


class Pow(Expr):
    def __init__(self, base: Expr, exponent: int):
        self.base = base
        self.exponent = int(exponent)
        self.variables = base.variables

    def evaluate(self, t, y):
        return self.base.evaluate(t, y) ** self.exponent

    def _partial(self, k):
        return mul(Const(self.exponent), power(self.base, self.exponent - 1), self.base.partial(k))

    @property
    def bounded(self) -> bool:
        return self.base.bounded

    def __repr__(self):
        return f"{self.base!r}^{self.exponent}"


class _Unary(Expr):
    """Elementary function applied to an inner expression"""

    symbol = '?'

    def __init__(self, arg: Expr):
        self.arg = arg
        self.variables = arg.variables

    def __repr__(self):
        return f"{self.symbol}({self.arg!r})"


class Sin(_Unary):
    symbol = 'sin'

    def evaluate(self, t, y):
        return np.sin(self.arg.evaluate(t, y))

    def _partial(self, k):
        return mul(Cos(self.arg), self.arg.partial(k))

    @property
    def bounded(self) -> bool:
        return True


class Cos(_Unary):
    symbol = 'cos'

    def evaluate(self, t, y):
        return np.cos(self.arg.evaluate(t, y))

    def _partial(self, k):
        return mul(Const(-1.0), Sin(self.arg), self.arg.partial(k))

    @property
    def bounded(self) -> bool:
        return True


class Exp(_Unary):
    symbol = 'exp'

    def __init__(self, arg: Expr, bounded: bool = False):
        super().__init__(arg)
        self._bounded = bounded  # set when arg is known to be bounded above

    def evaluate(self, t, y):
        return np.exp(self.arg.evaluate(t, y))

    def _partial(self, k):
        return mul(self, self.arg.partial(k))

    @property
    def bounded(self) -> bool:
        return self._bounded


class Logistic(_Unary):
    symbol = 'logistic'

    def evaluate(self, t, y):
        return expit(self.arg.evaluate(t, y))

    def _partial(self, k):
        return mul(self, add(ONE, mul(Const(-1.0), self)), self.arg.partial(k))

    @property
    def bounded(self) -> bool:
        return True


# ==================== Simplifying constructors ====================

def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    if isinstance(value, (int, float, np.floating, np.integer)):
        return Const(float(value))
    raise TypeError(f"Cannot turn {type(value).__name__} into an expression")


def add(*terms: Expr) -> Expr:
    """Sum with constant folding and zero elimination"""
    flat = []
    constant = 0.0
    for term in terms:
        parts = term.terms if isinstance(term, Add) else (term,)
        for part in parts:
            if isinstance(part, Const):
                constant += part.value
            else:
                flat.append(part)
    if constant != 0.0:
        flat.append(Const(constant))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(flat)


def mul(*factors: Expr) -> Expr:
    """Product with constant folding; any zero factor collapses the product"""
    flat = []
    constant = 1.0
    for factor in factors:
        parts = factor.factors if isinstance(factor, Mul) else (factor,)
        for part in parts:
            if isinstance(part, Const):
                constant *= part.value
            else:
                flat.append(part)
    if constant == 0.0:
        return ZERO
    if not flat:
        return Const(constant)
    if constant != 1.0:
        flat.insert(0, Const(constant))
    if len(flat) == 1:
        return flat[0]
    return Mul(flat)


def power(base: Expr, exponent: int) -> Expr:
    if exponent < 0:
        raise DomainError("Only non-negative integer powers are supported")
    if exponent == 0:
        return ONE
    if exponent == 1:
        return base
    if isinstance(base, Const):
        return Const(base.value ** exponent)
    return Pow(base, exponent)


def time() -> Expr:
    return Var(0)


def coordinate(k: int) -> Expr:
    """State coordinate y_k, k counted from 1"""
    if k < 1:
        raise DomainError(f"State coordinates are counted from 1, got {k}")
    return Var(k)


# ==================== Catalog ====================

SCALAR_CATALOG = ('constant', 'identity', 'polynomial', 'sin', 'cos', 'gaussian', 'logistic')


def scalar_function(kind: str, arg: Expr, **params) -> Expr:
    """
    Build a catalog function applied to an inner expression

    Args:
        kind: one of SCALAR_CATALOG
        arg: inner expression (usually a coordinate)
        **params: coefficients of the family
            constant:   value
            polynomial: coefficients (c0, c1, ...), lowest order first
            sin, cos:   offset + amplitude * sin(frequency * x + phase)
            gaussian:   amplitude * exp(-rate * x^2)
            logistic:   offset + amplitude * logistic(slope * x)

    Returns:
        Expression with exact partials

    Raises:
        DomainError: unknown kind or unknown parameter
    """
    allowed: Dict[str, Tuple[str, ...]] = {
        'constant': ('value',),
        'identity': (),
        'polynomial': ('coefficients',),
        'sin': ('amplitude', 'frequency', 'phase', 'offset'),
        'cos': ('amplitude', 'frequency', 'phase', 'offset'),
        'gaussian': ('amplitude', 'rate'),
        'logistic': ('amplitude', 'slope', 'offset'),
    }
    if kind not in allowed:
        raise DomainError(f"Unknown scalar function '{kind}'. Available: {', '.join(SCALAR_CATALOG)}")
    unknown = set(params) - set(allowed[kind])
    if unknown:
        raise DomainError(f"Unknown parameter(s) {sorted(unknown)} for scalar function '{kind}'")

    if kind == 'constant':
        return Const(params.get('value', 0.0))
    if kind == 'identity':
        return arg
    if kind == 'polynomial':
        coefficients = [float(c) for c in params.get('coefficients', (0.0, 1.0))]
        return add(*(mul(Const(c), power(arg, j)) for j, c in enumerate(coefficients)))
    if kind in ('sin', 'cos'):
        inner = add(mul(Const(params.get('frequency', 1.0)), arg), Const(params.get('phase', 0.0)))
        wave = Sin(inner) if kind == 'sin' else Cos(inner)
        return add(Const(params.get('offset', 0.0)), mul(Const(params.get('amplitude', 1.0)), wave))
    if kind == 'gaussian':
        return mul(Const(params.get('amplitude', 1.0)),
                   Exp(mul(Const(-abs(params.get('rate', 1.0))), power(arg, 2)), bounded=True))
    # logistic
    return add(Const(params.get('offset', 0.0)),
               mul(Const(params.get('amplitude', 1.0)), Logistic(mul(Const(params.get('slope', 1.0)), arg))))


def univariate(kind: str, **params) -> Expr:
    """Catalog function of a single real argument (stored as y1)"""
    return scalar_function(kind, Var(1), **params)


def apply_univariate(expr: Expr, x) -> np.ndarray:
    """Evaluate a univariate expression at the real argument(s) x"""
    x = np.asarray(x, dtype=float)
    return expr.evaluate(np.zeros(()), x[..., None])

