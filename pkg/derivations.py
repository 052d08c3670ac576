"""
Derivations Module
Vector fields V_0, ..., V_d on R^e, their lifts (delta_0i, V_i) and the action
of lifted fields on functionals: V.F(t, x) = sum_j V^j(x_t) d_j F(t, x)
"""

from typing import Dict, Iterable, List, Optional, Sequence, Union

import numpy as np

from errors import ContractError, DomainError
from functionals import Functional, linear_combination, make_cylinder, product
from multi_index import Letters, WordLike, _letters
from smooth_functions import Const, Expr, ZERO, add, as_expr, coordinate, mul, scalar_function


class VectorField:
    """A time-independent smooth map R^e -> R^e given by one expression per component"""

    def __init__(self, components: Sequence[Union[Expr, float]]):
        components = tuple(as_expr(c) for c in components)
        if not components:
            raise DomainError("A vector field needs at least one component")
        e = len(components)
        for c in components:
            if 0 in c.variables:
                raise DomainError("Vector fields do not depend on time")
            if any(k > e for k in c.variables):
                raise DomainError(f"Component {c!r} uses a coordinate beyond y{e}")
        self.components = components

    @property
    def dimension(self) -> int:
        return len(self.components)

    @property
    def is_zero(self) -> bool:
        return all(c.is_zero for c in self.components)

    @property
    def bounded(self) -> bool:
        return all(c.bounded for c in self.components)

    def evaluate(self, y) -> np.ndarray:
        """V(y) for y of shape (..., e)"""
        y = np.asarray(y, dtype=float)
        return np.stack([c(0.0, y) for c in self.components], axis=-1)

    __call__ = evaluate

    def scaled(self, a: float) -> 'VectorField':
        return VectorField([mul(Const(a), c) for c in self.components])

    def __add__(self, other: 'VectorField') -> 'VectorField':
        if other.dimension != self.dimension:
            raise DomainError("Cannot add vector fields of different dimensions")
        return VectorField([add(a, b) for a, b in zip(self.components, other.components)])

    def __repr__(self):
        return "VectorField(" + ", ".join(repr(c) for c in self.components) + ")"


class LiftedField:
    """
    The lift (c, V): time component c and spatial part V

    For the fields of a VectorFieldSet, c = 1 for index 0 and 0 otherwise.
    Linear combinations stay lifted fields.
    """

    def __init__(self, time_component: float, field: VectorField):
        self.time_component = float(time_component)
        self.field = field

    @property
    def components(self) -> List[Expr]:
        return [Const(self.time_component)] + list(self.field.components)

    def evaluate(self, y) -> np.ndarray:
        spatial = self.field.evaluate(y)
        clock = np.full(spatial.shape[:-1] + (1,), self.time_component)
        return np.concatenate([clock, spatial], axis=-1)

    def combine(self, a: float, other: 'LiftedField', b: float) -> 'LiftedField':
        """a * self + b * other"""
        return LiftedField(a * self.time_component + b * other.time_component,
                           self.field.scaled(a) + other.field.scaled(b))


class VectorFieldSet:
    """Fields V_0 (drift) through V_d driving dY = sum_i V_i(Y) o dX^i"""

    def __init__(self, fields: Sequence[VectorField]):
        fields = tuple(fields)
        if len(fields) < 2:
            raise DomainError("Need V_0 and at least one noise field")
        dims = {f.dimension for f in fields}
        if len(dims) != 1:
            raise DomainError(f"Vector fields disagree on the state dimension: {sorted(dims)}")
        self.fields = fields

    @property
    def d(self) -> int:
        return len(self.fields) - 1

    @property
    def e(self) -> int:
        return self.fields[0].dimension

    @property
    def bounded(self) -> bool:
        return all(f.bounded for f in self.fields)

    def lifted(self, i: int) -> LiftedField:
        if not 0 <= i <= self.d:
            raise DomainError(f"Field index {i} outside 0..{self.d}")
        return LiftedField(1.0 if i == 0 else 0.0, self.fields[i])

    def evaluate(self, y) -> np.ndarray:
        """All fields at y; shape (..., d+1, e)"""
        return np.stack([f.evaluate(y) for f in self.fields], axis=-2)

    def __repr__(self):
        return f"VectorFieldSet(d={self.d}, e={self.e})"


# ==================== Action on functionals ====================

def apply_derivation(field: LiftedField, F: Functional) -> Functional:
    """
    V.F = sum_j V^j(x_t) d_j F

    Components that vanish identically are skipped, so fields with zero
    time component never ask F for its time derivative.

    Raises:
        ContractError: F has no closed-form derivative for a needed letter
    """
    terms = []
    for j, component in enumerate(field.components):
        if component.is_zero:
            continue
        d_F = F.derivative(j)
        if d_F is None:
            raise ContractError(f"{F!r} has no closed-form derivative in letter {j}")
        if d_F.is_zero:
            continue
        terms.append((1.0, product(make_cylinder(component), d_F)))
    return linear_combination(terms)


def apply_word(vf_set: VectorFieldSet, word: WordLike, F: Functional) -> Functional:
    """V_{a1}( ... V_{ak}(F)): the last letter acts first"""
    letters = _letters(word)
    out = F
    for a in reversed(letters):
        out = apply_derivation(vf_set.lifted(a), out)
    return out


def word_functionals(vf_set: VectorFieldSet, words: Iterable[WordLike], F: Functional) -> Dict:
    """Coefficient functionals for many words, reusing shared suffixes"""
    memo: Dict[Letters, Functional] = {(): F}

    def build(letters: Letters) -> Functional:
        if letters not in memo:
            memo[letters] = apply_derivation(vf_set.lifted(letters[0]), build(letters[1:]))
        return memo[letters]

    return {word: build(_letters(word)) for word in words}


def classical_vector_field_action(vf_set: VectorFieldSet, word: WordLike, f: Expr) -> Expr:
    """
    Lifted fields acting on a smooth function f(t, y) directly

    V_i f = delta_0i df/dt + sum_k V_i^k df/dy_k; letters act last-first.
    """
    out = f
    for a in reversed(_letters(word)):
        lifted = vf_set.lifted(a)
        out = add(*(mul(c, out.partial(k)) for k, c in enumerate(lifted.components) if not c.is_zero))
    return out


# ==================== Catalog ====================

FIELD_CATALOG = ('zero', 'constant', 'affine', 'sin', 'cos', 'logistic', 'polynomial', 'gaussian')


def _per_component(value, e: int, name: str) -> List:
    if isinstance(value, (list, tuple, np.ndarray)):
        if len(value) != e:
            raise DomainError(f"Field parameter '{name}' needs {e} entries, got {len(value)}")
        return list(value)
    return [value] * e


def vector_field(kind: str, e: int, **params) -> VectorField:
    """
    Build a catalog vector field on R^e

    Args:
        kind: 'zero', 'constant' (value), 'affine' (matrix row-major, offset),
              or a componentwise family V^k(y) = h(y_k) with h one of
              'sin', 'cos', 'logistic', 'polynomial', 'gaussian' and the
              scalar catalog parameters (scalars or one entry per component)
        e: state dimension

    Raises:
        DomainError: unknown kind or malformed parameters
    """
    if kind not in FIELD_CATALOG:
        raise DomainError(f"Unknown vector field '{kind}'. Available: {', '.join(FIELD_CATALOG)}")
    if kind == 'zero':
        return VectorField([ZERO] * e)
    if kind == 'constant':
        return VectorField([Const(v) for v in _per_component(params.get('value', 0.0), e, 'value')])
    if kind == 'affine':
        matrix = np.asarray(params.get('matrix', np.zeros(e * e)), dtype=float).reshape(-1)
        if matrix.size != e * e:
            raise DomainError(f"Affine field needs an {e}x{e} matrix, got {matrix.size} entries")
        matrix = matrix.reshape(e, e)
        offset = _per_component(params.get('offset', 0.0), e, 'offset')
        return VectorField([
            add(Const(offset[k]), *(mul(Const(matrix[k, j]), coordinate(j + 1)) for j in range(e)))
            for k in range(e)
        ])

    components = []
    for k in range(e):
        local = {}
        for name, value in params.items():
            if name == 'coefficients':
                nested = isinstance(value, (list, tuple)) and value and isinstance(value[0], (list, tuple))
                local[name] = value[k] if nested else value
            else:
                local[name] = _per_component(value, e, name)[k]
        components.append(scalar_function(kind, coordinate(k + 1), **local))
    return VectorField(components)


def noise_only(field: VectorField, e: Optional[int] = None) -> VectorFieldSet:
    """V_0 = 0 with a single noise field"""
    return VectorFieldSet([vector_field('zero', e or field.dimension), field])
