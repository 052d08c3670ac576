"""
Experiment Config Module
Reads INI experiment files and resolves catalog names into functionals,
vector fields, simulation settings, corpora and stopped points
"""

import configparser
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from bv_approx import ControlledSolutionFunctional, sine_series_corpus
from config import config
from derivations import FIELD_CATALOG, VectorFieldSet, vector_field
from errors import ChenFliessError, ConfigError
from functionals import Functional, make_cylinder, make_running_integral, product
from path_core import SampledPath, StoppedPoint
from sde_engine import SimulationConfig
from smooth_functions import SCALAR_CATALOG, coordinate, mul, scalar_function, time, univariate

EXPERIMENT_KINDS = ('ito-check', 'expand', 'l2-error', 'scaling', 'fit-bv', 'separate')
FUNCTIONAL_KINDS = ('cylinder', 'running_integral', 'product', 'ode_solution')
POINT_KINDS = ('polynomial', 'sine', 'csv')

_STRUCTURAL_KEYS = {'kind', 'coordinate', 'time_factor'}
_TRUE = ('1', 'true', 'yes', 'on')
_FALSE = ('0', 'false', 'no', 'off')


@dataclass
class ExperimentConfig:
    """A fully resolved experiment file"""
    path: Path
    kind: str
    m: int = 1
    s: float = 0.0
    t: float = 1.0
    t_grid: List[float] = field(default_factory=list)
    levels: List[int] = field(default_factory=list)
    mode: str = 'stratonovich'
    method: str = 'lstsq'
    tolerance: Optional[float] = None
    L: int = 4
    expect: Optional[str] = None
    path_index: int = 0
    dump_paths: bool = False
    out_dir: Optional[Path] = None
    simulation: Optional[SimulationConfig] = None
    y0: Tuple[float, ...] = (0.0,)
    functional: Optional[Functional] = None
    vf_set: Optional[VectorFieldSet] = None
    corpus: Dict[str, float] = field(default_factory=dict)
    points: Tuple[StoppedPoint, ...] = ()
    sections: Dict[str, Dict[str, str]] = field(default_factory=dict)


class _Reader:
    """configparser wrapper that reports problems with file and line"""

    def __init__(self, path: Path):
        self.path = path
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        self.lines = path.read_text().splitlines()
        self.parser = configparser.ConfigParser(inline_comment_prefixes=('#', ';'))
        try:
            self.parser.read_string('\n'.join(self.lines), source=str(path))
        except configparser.Error as e:
            raise ConfigError(str(e).splitlines()[0], path, getattr(e, 'lineno', None))

    def line_of(self, section: str, key: Optional[str] = None) -> Optional[int]:
        current = None
        for number, raw in enumerate(self.lines, start=1):
            text = raw.strip()
            if text.startswith('[') and text.endswith(']'):
                current = text[1:-1].strip()
                if key is None and current == section:
                    return number
                continue
            if current == section and key is not None:
                name = text.split('=', 1)[0].split(':', 1)[0].strip().lower()
                if name == key.lower():
                    return number
        return None

    def error(self, message: str, section: str, key: Optional[str] = None) -> ConfigError:
        return ConfigError(message, self.path, self.line_of(section, key))

    def has(self, section: str, key: Optional[str] = None) -> bool:
        if key is None:
            return self.parser.has_section(section)
        return self.parser.has_option(section, key)

    def raw(self, section: str, key: str, default=None) -> Optional[str]:
        if not self.parser.has_option(section, key):
            return default
        return self.parser.get(section, key)

    def require(self, section: str) -> None:
        if not self.parser.has_section(section):
            raise ConfigError(f"Missing section [{section}]", self.path)

    def number(self, section: str, key: str, default=None, cast=float, positive: bool = False):
        text = self.raw(section, key)
        if text is None:
            if default is None:
                raise self.error(f"Missing key '{key}' in [{section}]", section)
            return default
        try:
            value = cast(text)
        except ValueError:
            raise self.error(f"'{key}' must be a number, got '{text}'", section, key)
        if positive and not value > 0:
            raise self.error(f"'{key}' must be positive, got {value}", section, key)
        return value

    def numbers(self, section: str, key: str, cast=float) -> List:
        text = self.raw(section, key)
        if text is None:
            return []
        try:
            return [cast(part) for part in text.replace(',', ' ').split()]
        except ValueError:
            raise self.error(f"'{key}' must be a list of numbers, got '{text}'", section, key)

    def flag(self, section: str, key: str, default: bool = False) -> bool:
        text = self.raw(section, key)
        if text is None:
            return default
        if text.strip().lower() in _TRUE:
            return True
        if text.strip().lower() in _FALSE:
            return False
        raise self.error(f"'{key}' must be yes or no, got '{text}'", section, key)

    def catalog_params(self, section: str) -> Dict:
        """Every non-structural key of a section as a float or a list of floats"""
        params = {}
        for key in self.parser.options(section):
            if key in _STRUCTURAL_KEYS or key == 'name':
                continue
            values = self.numbers(section, key)
            if not values:
                raise self.error(f"'{key}' has no value", section, key)
            params[key] = values if key in ('coefficients', 'matrix') or len(values) > 1 else values[0]
        return params


# ==================== Builders ====================

def _scalar(reader: _Reader, section: str, univariate_only: bool = False):
    reader.require(section)
    kind = reader.raw(section, 'kind')
    if kind not in SCALAR_CATALOG:
        raise reader.error(f"Unknown scalar function '{kind}'. Available: {', '.join(SCALAR_CATALOG)}", section, 'kind')
    params = reader.catalog_params(section)
    try:
        if univariate_only:
            return univariate(kind, **params)
        expr = scalar_function(kind, coordinate(reader.number(section, 'coordinate', 1, int, positive=True)), **params)
    except ChenFliessError as e:
        raise reader.error(str(e), section)
    if reader.flag(section, 'time_factor'):
        expr = mul(time(), expr)
    return expr


def _functional(reader: _Reader, section: str, vf_set: Optional[VectorFieldSet], y0) -> Functional:
    reader.require(section)
    name = reader.raw(section, 'name')
    if name not in FUNCTIONAL_KINDS:
        raise reader.error(f"Unknown functional '{name}'. Available: {', '.join(FUNCTIONAL_KINDS)}", section, 'name')
    if name == 'cylinder':
        return make_cylinder(_scalar(reader, f"{section}.f"))
    if name == 'running_integral':
        return make_running_integral(_scalar(reader, f"{section}.f", univariate_only=True),
                                     _scalar(reader, f"{section}.g"))
    if name == 'product':
        return product(_functional(reader, f"{section}.left", vf_set, y0),
                       _functional(reader, f"{section}.right", vf_set, y0))
    if vf_set is None:
        raise reader.error("Functional 'ode_solution' needs [field.*] sections", section, 'name')
    return ControlledSolutionFunctional(vf_set, y0, reader.number(section, 'component', 1, int, positive=True))


def _fields(reader: _Reader, e: int) -> Optional[VectorFieldSet]:
    indices = sorted(int(s.split('.', 1)[1]) for s in reader.parser.sections()
                     if s.startswith('field.') and s.split('.', 1)[1].isdigit())
    if not indices:
        return None
    if indices != list(range(len(indices))):
        raise ConfigError(f"Field sections must be [field.0] .. [field.d] without gaps, got {indices}", reader.path)
    fields = []
    for i in indices:
        section = f"field.{i}"
        kind = reader.raw(section, 'kind')
        if kind not in FIELD_CATALOG:
            raise reader.error(f"Unknown vector field '{kind}'. Available: {', '.join(FIELD_CATALOG)}", section, 'kind')
        try:
            fields.append(vector_field(kind, e, **reader.catalog_params(section)))
        except ChenFliessError as e_:
            raise reader.error(str(e_), section)
    try:
        return VectorFieldSet(fields)
    except ChenFliessError as e_:
        raise ConfigError(str(e_), reader.path, reader.line_of('field.0'))


def _point(reader: _Reader, section: str) -> StoppedPoint:
    reader.require(section)
    kind = reader.raw(section, 'kind', 'polynomial')
    if kind not in POINT_KINDS:
        raise reader.error(f"Unknown path kind '{kind}'. Available: {', '.join(POINT_KINDS)}", section, 'kind')
    if kind == 'csv':
        source = Path(reader.raw(section, 'file', ''))
        if not source.is_absolute():
            source = reader.path.parent / source
        if not source.is_file():
            raise reader.error(f"Path file not found: {source}", section, 'file')
        path = SampledPath.from_csv(source)
    else:
        T = reader.number(section, 'horizon', 1.0, positive=True)
        n_nodes = reader.number(section, 'n_nodes', 1025, int, positive=True)
        coefficients = reader.numbers(section, 'coefficients')
        if not coefficients:
            raise reader.error("Path needs 'coefficients'", section)
        times = np.linspace(0.0, T, n_nodes)
        if kind == 'polynomial':
            values = np.polynomial.polynomial.polyval(times, coefficients)
        else:
            modes = np.arange(1, len(coefficients) + 1)
            values = np.sin(np.outer(times, modes) * np.pi / T) @ np.asarray(coefficients)
        path = SampledPath(times, values)
    t = reader.number(section, 't', path.T)
    if not 0.0 <= t <= path.T:
        raise reader.error(f"Stopping time {t} outside [0, {path.T:g}]", section, 't')
    return StoppedPoint(t, path)


def load_experiment(path, overrides: Optional[Dict] = None) -> ExperimentConfig:
    """
    Parse and resolve an experiment file

    Args:
        path: INI file
        overrides: optional 'seed', 'paths', 'steps', 'out' values from the command line

    Returns:
        ExperimentConfig with every catalog name resolved

    Raises:
        ConfigError: missing file, malformed value or unknown catalog name
    """
    overrides = overrides or {}
    reader = _Reader(Path(path))
    reader.require('experiment')

    kind = reader.raw('experiment', 'kind')
    if kind not in EXPERIMENT_KINDS:
        raise reader.error(f"Unknown experiment kind '{kind}'. Available: {', '.join(EXPERIMENT_KINDS)}",
                           'experiment', 'kind')

    exp = ExperimentConfig(path=Path(path), kind=kind)
    exp.m = reader.number('experiment', 'm', 1, int)
    if exp.m < 0:
        raise reader.error("'m' must be non-negative", 'experiment', 'm')
    exp.s = reader.number('experiment', 's', 0.0)
    exp.t_grid = reader.numbers('experiment', 't_grid')
    exp.levels = reader.numbers('experiment', 'levels', int)
    exp.mode = reader.raw('experiment', 'mode', exp.mode)
    exp.method = reader.raw('experiment', 'method', exp.method)
    exp.L = reader.number('experiment', 'L', exp.L, int)
    exp.expect = reader.raw('experiment', 'expect')
    exp.path_index = reader.number('experiment', 'path_index', 0, int)
    exp.dump_paths = reader.flag('experiment', 'dump_paths')
    if reader.has('experiment', 'tolerance'):
        exp.tolerance = reader.number('experiment', 'tolerance')

    out = overrides.get('out') or reader.raw('experiment', 'out')
    exp.out_dir = Path(out) if out else config.OUTPUT_DIR / Path(path).stem

    e = 1
    if reader.has('simulation'):
        e = reader.number('simulation', 'e', 1, int, positive=True)
        try:
            exp.simulation = SimulationConfig(
                d=reader.number('simulation', 'd', 1, int, positive=True),
                e=e,
                T=reader.number('simulation', 'T', 1.0, positive=True),
                n_steps=reader.number('simulation', 'n_steps', config.N_STEPS, int),
                substep_ratio=reader.number('simulation', 'substep_ratio', config.SUBSTEP_RATIO, int),
                seed=reader.number('simulation', 'seed', config.SEED, int),
                n_paths=reader.number('simulation', 'n_paths', config.N_PATHS, int),
            )
            if overrides.get('seed') is not None:
                exp.simulation = replace(exp.simulation, seed=int(overrides['seed']))
            if overrides.get('paths') is not None:
                exp.simulation = replace(exp.simulation, n_paths=int(overrides['paths']))
            if overrides.get('steps') is not None:
                exp.simulation = replace(exp.simulation, n_steps=int(overrides['steps']))
        except ChenFliessError as e_:
            raise reader.error(str(e_), 'simulation')
        y0 = reader.numbers('simulation', 'y0') or [0.0] * e
        if len(y0) != e:
            raise reader.error(f"'y0' needs {e} entries, got {len(y0)}", 'simulation', 'y0')
        exp.y0 = tuple(y0)
        exp.t = reader.number('experiment', 't', exp.simulation.T)
    else:
        exp.t = reader.number('experiment', 't', 1.0)

    exp.vf_set = _fields(reader, e)
    if exp.vf_set is not None and exp.simulation is not None and exp.vf_set.d != exp.simulation.d:
        raise ConfigError(f"[simulation] d={exp.simulation.d} but {exp.vf_set.d} noise fields are defined",
                          reader.path, reader.line_of('simulation', 'd'))
    if reader.has('functional'):
        exp.functional = _functional(reader, 'functional', exp.vf_set, exp.y0)

    if reader.has('corpus'):
        exp.corpus = {key: reader.number('corpus', key) for key in reader.parser.options('corpus')}
        if overrides.get('seed') is not None:
            exp.corpus['seed'] = int(overrides['seed'])
    if reader.has('point.a') or reader.has('point.b'):
        exp.points = (_point(reader, 'point.a'), _point(reader, 'point.b'))

    _check_kind_needs(reader, exp)
    exp.sections = {s: dict(reader.parser.items(s)) for s in reader.parser.sections()}
    return exp


def _check_kind_needs(reader: _Reader, exp: ExperimentConfig) -> None:
    needs = {
        'expand': ('simulation', 'functional', 'fields'),
        'l2-error': ('simulation', 'functional', 'fields'),
        'scaling': ('simulation', 'functional', 'fields'),
        'ito-check': ('simulation', 'functional', 'fields'),
        'fit-bv': ('functional', 'corpus'),
        'separate': ('points',),
    }[exp.kind]
    present = {
        'simulation': exp.simulation is not None,
        'functional': exp.functional is not None,
        'fields': exp.vf_set is not None,
        'corpus': bool(exp.corpus),
        'points': bool(exp.points),
    }
    missing = [n for n in needs if not present[n]]
    if missing:
        label = {'fields': '[field.0] .. [field.d]', 'points': '[point.a] and [point.b]'}
        raise ConfigError(f"Experiment '{exp.kind}' needs " + ', '.join(label.get(n, f"[{n}]") for n in missing),
                          reader.path, reader.line_of('experiment', 'kind'))
    if exp.kind == 'scaling' and len(exp.t_grid) < 4:
        raise reader.error("Scaling needs 't_grid' with at least 4 values", 'experiment', 't_grid')
    if exp.kind == 'ito-check' and len(exp.levels) < 2:
        raise reader.error("Ito check needs 'levels' with at least 2 step counts", 'experiment', 'levels')
    if exp.kind == 'fit-bv' and not exp.levels:
        exp.levels = [1, 2, 3, 4]


def build_corpus(exp: ExperimentConfig, d: int = 1) -> Tuple[Sequence[StoppedPoint], Sequence[StoppedPoint]]:
    """Training and held-out samples from the [corpus] section"""
    corpus = exp.corpus
    seed = int(corpus.get('seed', config.SEED))
    common = dict(n_terms=int(corpus.get('n_terms', 4)), T=float(corpus.get('horizon', 1.0)), d=d,
                  n_nodes=int(corpus.get('n_nodes', 257)), amplitude=float(corpus.get('amplitude', 1.0)))
    train = sine_series_corpus(int(corpus.get('n_samples', 200)), seed=seed, **common)
    holdout = sine_series_corpus(int(corpus.get('holdout', 200)), seed=seed + 1, **common)
    return train, holdout
