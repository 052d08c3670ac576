"""
Tests for polynomial functionals, fitting on bounded-variation corpora and
the separating-word search
"""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from bv_approx import (MINIMAX, ControlledSolutionFunctional, PolynomialFunctional, anchored, error_curve,
                       eval_polynomial, find_separating_word, fit, separation_gap, sine_series_corpus)
from derivations import VectorFieldSet, vector_field
from errors import DomainError
from functionals import make_cylinder
from multi_index import MultiIndex, parse_word
from path_core import SampledPath, StoppedPoint, rho_one_var
from smooth_functions import coordinate, scalar_function

NODES = np.linspace(0.0, 1.0, 4097)


def word(text, d=1):
    return parse_word(text, d)


def point(values, t=1.0, times=NODES):
    return StoppedPoint(t, SampledPath(times, values))


@pytest.fixture(scope='module')
def corpus():
    return sine_series_corpus(120, n_terms=4, seed=3)


@pytest.fixture(scope='module')
def holdout():
    return sine_series_corpus(60, n_terms=4, seed=4)


# ==================== Polynomial functionals ====================

def test_polynomial_on_linear_path():
    P = PolynomialFunctional({word('1'): 2.0, word('1.1'): 1.0, word('0.1'): -3.0}, d=1)
    b = SampledPath(NODES, 0.5 * NODES)
    t = 0.8
    # increments of b are 0.5 r, so (1) -> 0.5 t, (1,1) -> (0.5 t)^2 / 2, (0,1) -> 0.5 t^2 / 2
    expected = 2.0 * 0.5 * t + (0.5 * t) ** 2 / 2 - 3.0 * 0.5 * t ** 2 / 2
    assert eval_polynomial(P, t, b) == pytest.approx(expected, abs=1e-12)
    assert P.level == 2
    assert list(P.to_frame().columns) == ['word', 'coefficient']


def test_empty_polynomial_is_zero():
    assert PolynomialFunctional({}, d=1).evaluate(0.5, SampledPath(NODES, NODES)) == 0.0


def test_polynomial_checks_dimensions():
    with pytest.raises(DomainError):
        PolynomialFunctional({word('1', d=2): 1.0}, d=1)
    P = PolynomialFunctional({word('1'): 1.0}, d=1)
    with pytest.raises(DomainError):
        P.evaluate(0.5, SampledPath(NODES, np.column_stack([NODES, NODES])))


@pytest.mark.parametrize("t", [0.3, 0.6, 1.0])
def test_polynomial_is_continuous_in_one_variation_distance(t):
    P = PolynomialFunctional({word('0'): 0.3, word('1'): 1.0, word('0.1'): -2.0, word('1.1'): 0.5,
                              word('1.0.1'): 1.5}, d=1)
    base = SampledPath(NODES, 0.5 * np.sin(np.pi * NODES) + 0.2 * NODES)
    value = eval_polynomial(P, t, base)

    distances, changes = [], []
    for eps in (1e-1, 1e-2, 1e-3, 1e-4):
        moved = SampledPath(NODES, base.values + eps * np.cos(3 * NODES)[:, None])
        distances.append(rho_one_var(StoppedPoint(t, base), StoppedPoint(t, moved)))
        changes.append(abs(eval_polynomial(P, t, moved) - value))
    assert all(change <= 10.0 * rho for change, rho in zip(changes, distances))
    assert changes[-1] < 1e-3

    # moving the stopping time alone
    for dt in (1e-2, 1e-3):
        shifted = eval_polynomial(P, t - dt, base)
        assert abs(shifted - value) <= 10.0 * rho_one_var(StoppedPoint(t - dt, base), StoppedPoint(t, base))


# ==================== Controlled solutions ====================

def test_controlled_solution_of_additive_equation():
    fields = VectorFieldSet([vector_field('zero', 1), vector_field('constant', 1, value=1.0)])
    F = ControlledSolutionFunctional(fields, [0.0])
    b = SampledPath(NODES, np.sin(2 * np.pi * NODES))
    assert F.evaluate(0.3, b) == pytest.approx(np.sin(0.6 * np.pi), abs=1e-6)


def test_controlled_solution_of_linear_equation():
    fields = VectorFieldSet([vector_field('zero', 1), vector_field('affine', 1, matrix=[1.0])])
    F = ControlledSolutionFunctional(fields, [1.0])
    b = SampledPath(NODES, 0.5 * np.sin(2 * np.pi * NODES))
    assert F.evaluate(0.2, b) == pytest.approx(np.exp(0.5 * np.sin(0.4 * np.pi)), abs=1e-5)


def test_controlled_solution_component_is_checked():
    fields = VectorFieldSet([vector_field('zero', 1), vector_field('constant', 1, value=1.0)])
    with pytest.raises(DomainError):
        ControlledSolutionFunctional(fields, [0.0], component=2)


# ==================== Fitting ====================

def test_sine_series_corpus_shape(corpus):
    assert len(corpus) == 120
    assert all(0.0 <= p.t <= 1.0 for p in corpus)
    assert all(p.path.value_at(0.0)[0] == pytest.approx(0.0, abs=1e-15) for p in corpus)
    with pytest.raises(DomainError):
        sine_series_corpus(0)


def test_polynomial_target_is_recovered(corpus, holdout):
    target = PolynomialFunctional({word('0'): 0.5, word('1'): -1.0, word('0.1'): 2.0, word('1.1'): 0.25}, d=1)
    result = fit(target, corpus, 2, holdout=holdout)
    assert result.train_sup_error <= 1e-8
    assert result.holdout_sup_error <= 1e-8
    assert not result.rank_deficient
    fitted = result.polynomial.coefficients
    for w, c in target.coefficients.items():
        assert fitted[w] == pytest.approx(c, abs=1e-6)
    assert fitted[word('1.0')] == pytest.approx(0.0, abs=1e-6)


def test_minimax_error_does_not_grow_with_level(corpus, holdout):
    target = make_cylinder(scalar_function('sin', coordinate(1)))
    curve = error_curve(target, corpus, holdout, [1, 2, 3, 4], method=MINIMAX)
    assert list(curve.columns) == ['N', 'train_sup_error', 'holdout_sup_error']
    errors = curve['train_sup_error'].to_numpy()
    assert np.all(np.diff(errors) <= 1e-6)
    assert errors[-1] < errors[0]


def test_least_squares_fit_of_controlled_solution(corpus):
    fields = VectorFieldSet([vector_field('zero', 1), vector_field('affine', 1, matrix=[0.5])])
    target = ControlledSolutionFunctional(fields, [1.0])
    coarse = fit(target, corpus[:60], 1)
    fine = fit(target, corpus[:60], 3)
    assert fine.train_rms_error < coarse.train_rms_error
    assert fine.holdout_sup_error is None


def test_least_squares_fit_of_sine_of_endpoint_generalizes():
    train = sine_series_corpus(200, n_terms=4, seed=11, amplitude=0.5)
    held_out = sine_series_corpus(100, n_terms=4, seed=12, amplitude=0.5)
    target = make_cylinder(scalar_function('sin', coordinate(1)))
    result = fit(target, train, 4, holdout=held_out)
    scale = max(abs(float(target.evaluate(p.t, p.path))) for p in held_out)
    assert result.holdout_sup_error <= 0.1 * scale


def test_rank_deficiency_is_flagged():
    corpus = [point(a * NODES) for a in (-1.0, 0.5, 2.0, 3.0)]
    result = fit(make_cylinder(coordinate(1)), corpus, 2)
    assert result.rank_deficient
    assert result.rank < 6
    assert result.train_sup_error <= 1e-10


def test_fit_input_checks(corpus):
    target = make_cylinder(coordinate(1))
    with pytest.raises(DomainError):
        fit(target, corpus, 0)
    with pytest.raises(DomainError):
        fit(target, corpus, 2, method='ridge')
    with pytest.raises(DomainError):
        fit(target, [], 2)
    mixed = [corpus[0], point(np.column_stack([NODES, NODES]))]
    with pytest.raises(DomainError):
        fit(target, mixed, 1)


# ==================== Separation ====================

def test_linear_and_quadratic_paths_split_on_time_weighted_word():
    a, b = point(NODES), point(NODES ** 2)
    found = find_separating_word(a, b, L=4, tolerance=0.1)
    assert found == word('0.1')
    assert separation_gap(a, b, found) == pytest.approx(1.0 / 6.0, abs=1e-6)
    assert separation_gap(a, b, word('1')) == pytest.approx(0.0, abs=1e-12)


def test_short_search_can_fail():
    assert find_separating_word(point(NODES), point(NODES ** 2), L=0, tolerance=0.1) is None
    assert find_separating_word(point(NODES), point(NODES), L=4, tolerance=1e-12) is None


def test_different_stopping_times_split_on_time():
    found = find_separating_word(point(NODES, t=0.5), point(NODES, t=0.75), L=2)
    assert found == MultiIndex((0,), 1)


def test_different_starting_values_split_on_first_word():
    a, b = point(NODES), point(NODES + 1.0)
    found = find_separating_word(a, b, L=2)
    assert found == word('1')
    assert separation_gap(a, b, found) == pytest.approx(1.0, abs=1e-12)


def test_same_endpoint_different_start_splits_on_time_weighted_word():
    # x = 1 and y = r meet at t = 1; the start jump is invisible to (0.1)
    a, b = point(np.ones_like(NODES)), point(NODES)
    found = find_separating_word(a, b, L=3, tolerance=1e-6)
    assert found == word('0.1')
    assert separation_gap(a, b, found) == pytest.approx(0.5, abs=1e-9)


def test_anchoring_keeps_time_weighted_integrals():
    shifted = anchored(SampledPath(NODES, NODES + 2.0))
    assert shifted.n_nodes == NODES.size + 1
    assert shifted.value_at(0.0)[0] == pytest.approx(2.0)
    assert anchored(SampledPath(NODES, NODES)).n_nodes == NODES.size
    a, b = point(NODES + 2.0), point(NODES)
    assert separation_gap(a, b, word('0.1')) == pytest.approx(0.0, abs=1e-12)
    assert separation_gap(a, b, word('0.0.1')) == pytest.approx(0.0, abs=1e-12)


def test_separation_needs_matching_dimensions():
    with pytest.raises(DomainError):
        find_separating_word(point(NODES), point(np.column_stack([NODES, NODES])), L=2)


@settings(max_examples=25, deadline=None)
@given(p=st.floats(-2.0, 2.0), q=st.floats(-2.0, 2.0))
def test_different_slopes_split_on_first_word(p, q):
    times = np.linspace(0.0, 1.0, 33)
    found = find_separating_word(point(p * times, times=times), point(q * times, times=times), L=3, tolerance=1e-9)
    if abs(p - q) > 1e-6:
        assert found == word('1')
    elif p == q:
        assert found is None
