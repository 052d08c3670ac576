"""
Tests for experiment file parsing and the bundled experiment files
"""

import textwrap
from pathlib import Path

import pytest

from bv_approx import ControlledSolutionFunctional
from config import config
from errors import ConfigError
from experiment_config import build_corpus, load_experiment
from functionals import CylinderFunctional, RunningIntegralFunctional
from verify_config import check_experiments

EXPERIMENTS = Path(__file__).parent / 'experiments'

EXAMPLE_SECTIONS = """
[functional]
name = running_integral

[functional.f]
kind = sin

[functional.g]
kind = logistic
coordinate = 1

[field.0]
kind = zero

[field.1]
kind = cos
amplitude = 0.3
offset = 0.5
"""


def write_cfg(directory, text, name='experiment.cfg'):
    path = Path(directory) / name
    path.write_text(textwrap.dedent(text).lstrip('\n'))
    return path


# ==================== Bundled files ====================

def test_every_bundled_experiment_resolves():
    loaded, failed = check_experiments(EXPERIMENTS)
    assert failed == {}
    assert len(loaded) == len(list(EXPERIMENTS.glob('*.cfg')))


def test_scaling_file_resolves_the_example():
    exp = load_experiment(EXPERIMENTS / 'scaling_m1.cfg')
    assert exp.kind == 'scaling'
    assert exp.m == 1
    assert exp.t_grid == [0.02, 0.04, 0.08, 0.16]
    assert exp.tolerance == 0.25
    assert exp.simulation.n_paths == 10_000
    assert exp.simulation.seed == 20240601
    assert isinstance(exp.functional, RunningIntegralFunctional)
    assert exp.vf_set.d == 1 and exp.vf_set.fields[0].is_zero
    assert exp.out_dir == config.OUTPUT_DIR / 'scaling_m1'


def test_command_line_overrides(tmp_path):
    exp = load_experiment(EXPERIMENTS / 'scaling_m1.cfg',
                          {'seed': 5, 'paths': 100, 'steps': 64, 'out': str(tmp_path)})
    assert exp.simulation.seed == 5
    assert exp.simulation.n_paths == 100
    assert exp.simulation.n_steps == 64
    assert exp.out_dir == tmp_path


def test_separation_points():
    exp = load_experiment(EXPERIMENTS / 'separate.cfg')
    a, b = exp.points
    assert a.t == 1.0 and b.t == 1.0
    assert a.path.value_at(0.5)[0] == pytest.approx(0.5)
    assert b.path.value_at(0.5)[0] == pytest.approx(0.25)
    assert exp.expect == '0.1'
    assert exp.simulation is None


def test_fit_corpus_is_reproducible():
    exp = load_experiment(EXPERIMENTS / 'fit_bv.cfg')
    assert exp.levels == [1, 2, 3, 4]
    assert exp.method == 'minimax'
    assert isinstance(exp.functional, CylinderFunctional)
    train, holdout = build_corpus(exp)
    again, _ = build_corpus(exp)
    assert len(train) == 200 and len(holdout) == 200
    assert [p.t for p in train] == [p.t for p in again]
    assert train[0].t != holdout[0].t


# ==================== Resolution ====================

def test_ode_solution_functional(tmp_path):
    path = write_cfg(tmp_path, """
        [experiment]
        kind = expand
        m = 1

        [simulation]
        n_steps = 8
        n_paths = 1

        [functional]
        name = ode_solution

        [field.0]
        kind = zero

        [field.1]
        kind = constant
        value = 1.0
    """)
    exp = load_experiment(path)
    assert isinstance(exp.functional, ControlledSolutionFunctional)
    assert exp.y0 == (0.0,)


def test_fit_levels_default(tmp_path):
    path = write_cfg(tmp_path, """
        [experiment]
        kind = fit-bv

        [functional]
        name = cylinder

        [functional.f]
        kind = identity
        time_factor = yes

        [corpus]
        n_samples = 10
    """)
    exp = load_experiment(path)
    assert exp.levels == [1, 2, 3, 4]
    assert 0 in exp.functional.expr.variables


# ==================== Errors ====================

def test_missing_file():
    with pytest.raises(ConfigError):
        load_experiment('no/such/experiment.cfg')


def test_unknown_functional_reports_its_line(tmp_path):
    path = write_cfg(tmp_path, """
        [experiment]
        kind = expand
        m = 1

        [simulation]
        n_steps = 8
        n_paths = 1

        [functional]
        name = swirl
    """)
    with pytest.raises(ConfigError) as info:
        load_experiment(path)
    assert info.value.line == 10
    assert f"{path}:10" in str(info.value)
    assert 'swirl' in str(info.value)


def test_unknown_field_reports_its_line(tmp_path):
    path = write_cfg(tmp_path, """
        [experiment]
        kind = scaling
        t_grid = 0.1, 0.2, 0.4, 0.8

        [field.0]
        kind = zero

        [field.1]
        kind = vortex
    """)
    with pytest.raises(ConfigError) as info:
        load_experiment(path)
    assert info.value.line == 9


def test_bad_number_reports_its_line(tmp_path):
    path = write_cfg(tmp_path, """
        [experiment]
        kind = l2-error
        m = two
    """)
    with pytest.raises(ConfigError) as info:
        load_experiment(path)
    assert info.value.line == 3


@pytest.mark.parametrize("body", [
    # unknown kind
    "[experiment]\nkind = forecast\n",
    # gap in the field sections
    "[experiment]\nkind = expand\n[simulation]\nn_paths = 1\n[field.0]\nkind = zero\n[field.2]\nkind = zero\n",
    # field count disagrees with d
    "[experiment]\nkind = expand\n[simulation]\nd = 2\n[field.0]\nkind = zero\n[field.1]\nkind = zero\n",
    # scaling without a horizon grid
    "[experiment]\nkind = scaling\n[simulation]\nn_paths = 1\n" + EXAMPLE_SECTIONS,
    # ito check with a single level
    "[experiment]\nkind = ito-check\nlevels = 64\n[simulation]\nn_paths = 1\n" + EXAMPLE_SECTIONS,
    # separation without points
    "[experiment]\nkind = separate\n",
    # y0 of the wrong size
    "[experiment]\nkind = expand\n[simulation]\ny0 = 0, 1\n" + EXAMPLE_SECTIONS,
    # invalid simulation setting
    "[experiment]\nkind = expand\n[simulation]\nn_steps = 0\n" + EXAMPLE_SECTIONS,
    # stopping time beyond the path
    "[experiment]\nkind = separate\n[point.a]\ncoefficients = 0, 1\nt = 2\n[point.b]\ncoefficients = 0, 1\n",
])
def test_invalid_files_raise_config_error(tmp_path, body):
    with pytest.raises(ConfigError):
        load_experiment(write_cfg(tmp_path, body))


def test_verification_collects_failures(tmp_path):
    write_cfg(tmp_path, "[experiment]\nkind = separate\n", name='broken.cfg')
    write_cfg(tmp_path, (EXPERIMENTS / 'separate.cfg').read_text(), name='fine.cfg')
    loaded, failed = check_experiments(tmp_path)
    assert loaded == ['fine.cfg (separate)']
    assert list(failed) == ['broken.cfg']
