"""
Tests for vector fields and their action on functionals
"""

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings, strategies as st
from scipy.special import expit

from derivations import (LiftedField, VectorField, VectorFieldSet, apply_derivation, apply_word,
                         classical_vector_field_action, noise_only, vector_field, word_functionals)
from errors import ContractError, DomainError
from functionals import CallableFunctional, make_cylinder, make_running_integral, product
from multi_index import enumerate_A, enumerate_words
from path_core import SampledPath
from smooth_functions import coordinate, mul, scalar_function, time, univariate

y1, y2, t_sym = sp.symbols('y1 y2 t')


SYMBOLIC_FIELDS = [
    (0.1 + y2, -y1),
    (0.5 + 0.3 * sp.cos(y1), 0.5 + 0.3 * sp.cos(y2)),
    (1 / (1 + sp.exp(-y1)), 1 / (1 + sp.exp(-y2))),
]


def symbolic_action(word, f):
    """Lifted fields acting on a sympy expression, last letter first"""
    out = f
    for a in reversed(word):
        V = SYMBOLIC_FIELDS[a]
        out = V[0] * sp.diff(out, y1) + V[1] * sp.diff(out, y2) + (sp.diff(out, t_sym) if a == 0 else 0)
    return out


def plane_field_set():
    return VectorFieldSet([
        vector_field('affine', 2, matrix=[0.0, 1.0, -1.0, 0.0], offset=[0.1, 0.0]),
        vector_field('cos', 2, amplitude=0.3, offset=0.5),
        vector_field('logistic', 2),
    ])


@pytest.fixture
def plane_fields():
    """V0 affine rotation, V1 = 0.5 + 0.3 cos, V2 = logistic; all on R^2"""
    return plane_field_set()


def state_path(state, T=1.0):
    return SampledPath.constant(state, T)


# ==================== Vector fields ====================

def test_field_set_shapes(plane_fields):
    assert plane_fields.d == 2
    assert plane_fields.e == 2
    values = plane_fields.evaluate(np.zeros((5, 2)))
    assert values.shape == (5, 3, 2)
    np.testing.assert_allclose(values[0, 0], [0.1, 0.0])
    np.testing.assert_allclose(values[0, 1], [0.8, 0.8])
    np.testing.assert_allclose(values[0, 2], [0.5, 0.5])


def test_field_set_validation():
    with pytest.raises(DomainError):
        VectorFieldSet([vector_field('zero', 1)])
    with pytest.raises(DomainError):
        VectorFieldSet([vector_field('zero', 1), vector_field('zero', 2)])
    with pytest.raises(DomainError):
        VectorField([mul(time(), coordinate(1))])
    with pytest.raises(DomainError):
        VectorField([coordinate(2)])


def test_field_catalog_errors():
    with pytest.raises(DomainError):
        vector_field('swirl', 1)
    with pytest.raises(DomainError):
        vector_field('affine', 2, matrix=[1.0, 0.0, 0.0])
    with pytest.raises(DomainError):
        vector_field('sin', 2, amplitude=[1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        vector_field('cos', 1, wavelength=2.0)


def test_per_component_parameters():
    field = vector_field('polynomial', 2, coefficients=[[0.0, 1.0], [1.0, 0.0, 2.0]])
    np.testing.assert_allclose(field.evaluate([3.0, 2.0]), [3.0, 9.0])
    assert not field.bounded
    assert vector_field('sin', 2).bounded
    assert vector_field('gaussian', 2, rate=0.5).bounded


def test_lift_and_combination(plane_fields):
    drift = plane_fields.lifted(0)
    noise = plane_fields.lifted(1)
    assert drift.time_component == 1.0
    assert noise.time_component == 0.0
    mixed = drift.combine(2.0, noise, -1.0)
    state = np.array([0.3, -0.2])
    np.testing.assert_allclose(mixed.evaluate(state), 2.0 * drift.evaluate(state) - noise.evaluate(state))
    with pytest.raises(DomainError):
        plane_fields.lifted(3)


def test_noise_only_has_zero_drift():
    fields = noise_only(vector_field('constant', 1, value=2.0))
    assert fields.d == 1
    assert fields.fields[0].is_zero


# ==================== Action on functionals ====================

@pytest.mark.parametrize("word", [w.letters for w in enumerate_words(3, 2)])
def test_cylinder_collapse_matches_symbolic_fields(plane_fields, word):
    f_expr = mul(scalar_function('sin', coordinate(1)), coordinate(2)) + coordinate(1) ** 2
    f_sym = sp.sin(y1) * y2 + y1 ** 2
    state = np.array([0.4, -0.7])

    G = word_functionals(plane_fields, [word], make_cylinder(f_expr))[word]
    classical = classical_vector_field_action(plane_fields, word, f_expr)
    oracle = float(symbolic_action(word, f_sym).subs({y1: state[0], y2: state[1]}))

    assert G.evaluate(0.5, state_path(state)) == pytest.approx(oracle, abs=1e-10)
    assert float(classical(0.5, state)) == pytest.approx(oracle, abs=1e-10)


@pytest.mark.parametrize("word", [(0,), (0, 1), (1, 0), (0, 0), (2, 0, 1)])
def test_explicit_time_dependence_enters_through_letter_zero(plane_fields, word):
    f_expr = mul(time(), coordinate(1)) + mul(time(), time(), coordinate(2))
    f_sym = t_sym * y1 + t_sym ** 2 * y2
    state = np.array([-0.3, 0.9])
    s = 0.35

    G = apply_word(plane_fields, word, make_cylinder(f_expr))
    oracle = float(symbolic_action(word, f_sym).subs({y1: state[0], y2: state[1], t_sym: s}))
    assert G.evaluate(s, state_path(state)) == pytest.approx(oracle, abs=1e-10)


def test_example_coefficients_at_level_three(example_functional, example_fields):
    words = enumerate_A(3, 1)
    coefficients = word_functionals(example_fields, words, example_functional)
    nonzero = sorted(w.letters for w, G in coefficients.items() if not G.is_zero)
    assert nonzero == [(0,), (1, 0)]

    rng = np.random.default_rng(8)
    times = np.linspace(0.0, 1.0, 513)
    for _ in range(5):
        amplitude, frequency = rng.uniform(-1.5, 1.5), rng.uniform(0.5, 6.0)
        path = SampledPath(times, amplitude * np.sin(frequency * times) + 0.2 * times)
        s = float(rng.uniform(0.05, 0.95))
        x_s = path.value_at(s)[0]
        integral = example_functional.integral(s, path)
        v1 = 0.5 + 0.3 * np.cos(x_s)

        word_0 = next(w for w in words if w.letters == (0,))
        word_10 = next(w for w in words if w.letters == (1, 0))
        assert coefficients[word_0].evaluate(s, path) == pytest.approx(expit(x_s) * np.cos(integral), abs=1e-10)
        assert coefficients[word_10].evaluate(s, path) == pytest.approx(
            v1 * expit(x_s) * (1 - expit(x_s)) * np.cos(integral), abs=1e-10)


def test_noise_field_annihilates_example(example_functional, example_fields):
    assert apply_derivation(example_fields.lifted(1), example_functional).is_zero


def test_suffix_sharing_matches_word_by_word(plane_fields):
    F = make_cylinder(scalar_function('cos', coordinate(2)) * coordinate(1))
    words = enumerate_A(3, 2)
    shared = word_functionals(plane_fields, words, F)
    state = state_path([0.2, 0.5])
    for word in words:
        direct = apply_word(plane_fields, word, F)
        assert shared[word].evaluate(0.1, state) == pytest.approx(direct.evaluate(0.1, state), abs=1e-12)


# ==================== Derivation laws ====================

LAW_TIMES = np.linspace(0.0, 1.0, 401)


def law_functionals():
    running = make_running_integral(univariate('sin'), scalar_function('logistic', coordinate(2)))
    cylinder = make_cylinder(mul(time(), scalar_function('cos', coordinate(1))) + coordinate(2) ** 2)
    return running, cylinder


@settings(max_examples=25, deadline=None)
@given(a=st.floats(-2.0, 2.0), b=st.floats(-2.0, 2.0), s=st.floats(0.05, 0.95), letter=st.integers(0, 2))
def test_derivation_leibniz_law(a, b, s, letter):
    fields = plane_field_set()
    path = SampledPath(LAW_TIMES, np.column_stack([a * np.sin(3 * LAW_TIMES), b * LAW_TIMES ** 2 + 0.1]))
    F, G = law_functionals()
    V = fields.lifted(letter)
    lhs = apply_derivation(V, product(F, G)).evaluate(s, path)
    rhs = (apply_derivation(V, F).evaluate(s, path) * G.evaluate(s, path)
           + F.evaluate(s, path) * apply_derivation(V, G).evaluate(s, path))
    assert lhs == pytest.approx(rhs, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(alpha=st.floats(-3.0, 3.0), beta=st.floats(-3.0, 3.0), s=st.floats(0.05, 0.95))
def test_derivation_is_linear_in_the_field(alpha, beta, s):
    fields = plane_field_set()
    path = SampledPath(LAW_TIMES, np.column_stack([np.cos(2 * LAW_TIMES), LAW_TIMES - LAW_TIMES ** 3]))
    V, W = fields.lifted(0), fields.lifted(2)
    for F in law_functionals():
        combined = apply_derivation(V.combine(alpha, W, beta), F).evaluate(s, path)
        separate = alpha * apply_derivation(V, F).evaluate(s, path) + beta * apply_derivation(W, F).evaluate(s, path)
        assert combined == pytest.approx(separate, abs=1e-10)


def test_only_the_drift_sees_time(plane_fields):
    path = SampledPath(LAW_TIMES, np.column_stack([np.sin(LAW_TIMES), LAW_TIMES]))
    clock = make_cylinder(time())
    assert apply_derivation(plane_fields.lifted(0), clock).evaluate(0.4, path) == pytest.approx(1.0)
    for i in (1, 2):
        assert apply_derivation(plane_fields.lifted(i), clock).is_zero

    # V_0 acting on F splits into the time derivative plus the spatial part of V_0
    spatial_drift = LiftedField(0.0, plane_fields.fields[0])
    for F in law_functionals():
        for s in (0.1, 0.5, 0.9):
            full = apply_derivation(plane_fields.lifted(0), F).evaluate(s, path)
            split = F.derivative(0).evaluate(s, path) + apply_derivation(spatial_drift, F).evaluate(s, path)
            assert full == pytest.approx(split, abs=1e-12)


def test_derivation_needs_closed_form_derivatives(plane_fields):
    F = CallableFunctional(lambda t, x: x.value_at(t)[..., 0])
    with pytest.raises(ContractError):
        apply_derivation(plane_fields.lifted(1), F)


def test_lifted_field_components():
    lifted = LiftedField(1.0, vector_field('constant', 2, value=[3.0, 4.0]))
    assert len(lifted.components) == 3
    np.testing.assert_allclose(lifted.evaluate(np.zeros(2)), [1.0, 3.0, 4.0])
