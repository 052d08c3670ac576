"""
Chen-Fliess Expansion Module
Truncated expansion F_t(Y) - F_s(Y) = sum_{I in A(m)} V_I.F_s(Y) int dX^I + R,
Monte Carlo estimates of the remainder, its scaling in t, and pathwise checks
of the functional Ito/Stratonovich formulas
"""

from dataclasses import dataclass, field
from functools import partial
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from config import config
from derivations import VectorFieldSet, apply_derivation, classical_vector_field_action, word_functionals
from errors import ContractError, DomainError
from functionals import Functional
from iterated_integrals import Driver, signature_of_words, weighted_iterated_integral
from monte_carlo import log_log_fit, measured_order, rms_with_ci, run_paths
from multi_index import MultiIndex, boundary_set, enumerate_A
from path_core import SampledPath
from sde_engine import SimulationConfig, coarsen_driver, sample_driver_batch, solve_stratonovich
from smooth_functions import Expr

STRATONOVICH_FORM = 'stratonovich'
ITO_FORM = 'ito'


def _value(out):
    out = np.asarray(out, dtype=float)
    return float(out) if out.ndim == 0 else out


def _check_window(drv: Driver, vf_set: VectorFieldSet, s: float, t: float):
    if drv.d != vf_set.d:
        raise DomainError(f"Driver has d={drv.d} but the field set has d={vf_set.d}")
    if not 0.0 <= s < t <= drv.T:
        raise DomainError(f"Need 0 <= s < t <= T, got s={s}, t={t}, T={drv.T:g}")


@dataclass
class ExpansionReport:
    """
    One realized expansion

    coefficients and integrals have the words on their first axis and any
    batch axes after it; lhs, truncation_value and remainder carry the batch
    axes only.
    """
    m: int
    s: float
    t: float
    words: List[MultiIndex]
    coefficients: np.ndarray
    integrals: np.ndarray
    truncation_value: object
    lhs: object
    remainder: object
    solution: Optional[SampledPath] = field(default=None, repr=False)

    @property
    def products(self) -> np.ndarray:
        return self.coefficients * self.integrals

    def nonzero_words(self, tolerance: float = 0.0) -> List[MultiIndex]:
        magnitude = np.abs(self.coefficients).reshape(len(self.words), -1).max(axis=1)
        return [w for w, c in zip(self.words, magnitude) if c > tolerance]

    def to_frame(self) -> pd.DataFrame:
        if self.coefficients.ndim != 1:
            raise DomainError("Only single-path reports can be tabulated; select a path first")
        return pd.DataFrame({
            'word': [str(w) for w in self.words],
            'coefficient': self.coefficients,
            'integral': self.integrals,
            'product': self.products,
        })

    def write_csv(self, dest) -> None:
        self.to_frame().to_csv(dest, index=False, float_format='%.17g')


@dataclass
class ScalingReport:
    """RMS remainder over a grid of horizons and the fitted log-log slope"""
    m: int
    t_values: List[float]
    rms: List[float]
    ci: List[float]
    slope: Optional[float]
    intercept: Optional[float]
    slope_theory: float
    tolerance: float
    n_paths: int
    exact: bool = False

    @property
    def passed(self) -> bool:
        if self.exact:
            return True
        return abs(self.slope - self.slope_theory) <= self.tolerance

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'t': self.t_values, 'rms': self.rms, 'ci': self.ci})


@dataclass
class RefinementReport:
    """Residual of the functional Ito check per grid level"""
    mode: str
    levels: List[int]
    steps: List[float]
    rms: List[float]
    ci: List[float]
    order: float

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({'n_steps': self.levels, 'step': self.steps, 'rms': self.rms, 'ci': self.ci})


# ==================== Expansion ====================

def expand(F: Functional, vf_set: VectorFieldSet, y0, drv: Driver, s: float, t: float, m: int) -> ExpansionReport:
    """
    Realize the level-m expansion on one driver (or a batch of drivers)

    Coefficients are V_I.F evaluated at (s, Y) with Y the Heun solution on
    the same driver that produces the iterated integrals.

    Raises:
        DomainError: window outside the driver horizon
        ContractError: F lacks closed-form derivatives for some word
    """
    _check_window(drv, vf_set, s, t)
    Y = solve_stratonovich(vf_set, y0, drv)
    words = enumerate_A(m, vf_set.d)
    functionals = word_functionals(vf_set, words, F)
    coefficients = np.array([np.asarray(functionals[w].evaluate(s, Y)) for w in words])
    signature = signature_of_words(drv, words, s, t)
    integrals = np.array([np.asarray(signature[w]) for w in words])
    lhs = _value(np.asarray(F.evaluate(t, Y)) - np.asarray(F.evaluate(s, Y)))
    truncation = _value(np.sum(coefficients * integrals, axis=0))
    return ExpansionReport(m=m, s=s, t=t, words=words, coefficients=coefficients, integrals=integrals,
                           truncation_value=truncation, lhs=lhs, remainder=lhs - truncation, solution=Y)


def classical_expansion(f: Expr, vf_set: VectorFieldSet, y0, drv: Driver, s: float, t: float, m: int) -> ExpansionReport:
    """Stochastic Taylor expansion of f(t, Y_t) computed with vector fields acting on f directly"""
    _check_window(drv, vf_set, s, t)
    Y = solve_stratonovich(vf_set, y0, drv)
    words = enumerate_A(m, vf_set.d)
    y_s = Y.value_at(s)
    coefficients = np.array([np.asarray(classical_vector_field_action(vf_set, w, f)(s, y_s)) for w in words])
    signature = signature_of_words(drv, words, s, t)
    integrals = np.array([np.asarray(signature[w]) for w in words])
    lhs = _value(np.asarray(f(t, Y.value_at(t))) - np.asarray(f(s, y_s)))
    truncation = _value(np.sum(coefficients * integrals, axis=0))
    return ExpansionReport(m=m, s=s, t=t, words=words, coefficients=coefficients, integrals=integrals,
                           truncation_value=truncation, lhs=lhs, remainder=lhs - truncation, solution=Y)


@dataclass(frozen=True)
class ExpansionSetup:
    """Everything a worker needs to realize remainders for a chunk of paths"""
    F: Functional
    vf_set: VectorFieldSet
    y0: Tuple[float, ...]
    cfg: SimulationConfig
    s: float
    t: float
    m: int


def remainder_samples(setup: ExpansionSetup, chunk: range) -> np.ndarray:
    drv = sample_driver_batch(setup.cfg, chunk)
    report = expand(setup.F, setup.vf_set, setup.y0, drv, setup.s, setup.t, setup.m)
    return np.atleast_1d(report.remainder)


def remainder_distribution(F: Functional, vf_set: VectorFieldSet, y0, cfg: SimulationConfig, s: float, t: float,
                           m: int, workers: Optional[int] = None, progress: Optional[bool] = None) -> np.ndarray:
    """Realized remainders of paths 0 .. n_paths-1, in path order"""
    setup = ExpansionSetup(F, vf_set, tuple(np.atleast_1d(y0).astype(float)), cfg, float(s), float(t), int(m))
    return run_paths(partial(remainder_samples, setup), cfg.n_paths, workers=workers, progress=progress,
                     desc=f"remainder m={m} t={t:g}")


def l2_remainder(F: Functional, vf_set: VectorFieldSet, y0, cfg: SimulationConfig, s: float, t: float, m: int,
                 workers: Optional[int] = None, progress: Optional[bool] = None) -> Tuple[float, float]:
    """
    RMS of the remainder over cfg.n_paths drivers

    Returns:
        (rms, ci_halfwidth) with the half-width from the delta method
    """
    samples = remainder_distribution(F, vf_set, y0, cfg, s, t, m, workers, progress)
    return rms_with_ci(samples)


def scaling_regression(F: Functional, vf_set: VectorFieldSet, y0, cfg: SimulationConfig, m: int,
                       t_list: Sequence[float], tolerance: Optional[float] = None,
                       workers: Optional[int] = None, progress: Optional[bool] = None) -> ScalingReport:
    """
    Fit log RMS remainder against log t

    Each t runs on its own horizon [0, t] with s = 0 and the same grid size,
    so all horizons share the same normal draws.

    Raises:
        DomainError: fewer than 4 horizons, or a span below a factor of 8
    """
    t_values = sorted(float(t) for t in t_list)
    if len(t_values) < 4:
        raise DomainError(f"Scaling needs at least 4 horizons, got {len(t_values)}")
    if t_values[0] <= 0 or t_values[-1] / t_values[0] < 8:
        raise DomainError("Horizons must be positive and span at least a factor of 8")
    tolerance = config.SLOPE_TOLERANCE if tolerance is None else tolerance

    rms, ci = [], []
    for t in t_values:
        value, half_width = l2_remainder(F, vf_set, y0, cfg.with_horizon(t), 0.0, t, m, workers, progress)
        rms.append(value)
        ci.append(half_width)

    report = ScalingReport(m=m, t_values=t_values, rms=rms, ci=ci, slope=None, intercept=None,
                           slope_theory=(m + 1) / 2.0, tolerance=tolerance, n_paths=cfg.n_paths)
    if all(r <= config.EXACT_EXPANSION_FLOOR for r in rms):
        report.exact = True
        return report
    if any(r <= 0 for r in rms):
        raise DomainError("Remainder vanished at some horizons but not all; cannot fit a slope")
    fit = log_log_fit(t_values, rms)
    report.slope = float(fit.slope)
    report.intercept = float(fit.intercept)
    return report


# ==================== Remainder formula ====================

def boundary_remainder(F: Functional, vf_set: VectorFieldSet, y0, drv: Driver, s: float, t: float, m: int):
    """
    The remainder as a sum over boundary words

    Each word I contributes the iterated integral of dX^I with V_I.F(r1, Y)
    inserted at the innermost time r1.
    """
    _check_window(drv, vf_set, s, t)
    Y = solve_stratonovich(vf_set, y0, drv)
    times, _ = drv.segment(s, t)
    words = boundary_set(m, vf_set.d)
    total = 0.0
    for word, G in word_functionals(vf_set, words, F).items():
        if G.is_zero:
            continue
        total = total + weighted_iterated_integral(drv, word, s, t, G.evaluate_along(Y, times))
    return _value(total)


def _coefficient_magnitudes(F: Functional, vf_set: VectorFieldSet, words: Sequence[MultiIndex],
                            states: Sequence[Tuple[float, SampledPath]]) -> Dict[MultiIndex, float]:
    out = {}
    for word, G in word_functionals(vf_set, words, F).items():
        if G.is_zero:
            out[word] = 0.0
            continue
        out[word] = max(float(np.max(np.abs(G.evaluate(t, x)))) for t, x in states)
    return out


def active_boundary_words(F: Functional, vf_set: VectorFieldSet, m: int, states: Sequence[Tuple[float, SampledPath]],
                          tolerance: float = 0.0) -> List[MultiIndex]:
    """Boundary words whose coefficient functional is nonzero on some sampled state"""
    magnitudes = _coefficient_magnitudes(F, vf_set, boundary_set(m, vf_set.d), states)
    return [w for w, value in magnitudes.items() if value > tolerance]


def remainder_bound_profile(F: Functional, vf_set: VectorFieldSet, m: int, delta: float,
                            states: Sequence[Tuple[float, SampledPath]]) -> Dict[int, float]:
    """
    Constant-free terms of the L2 remainder bound

    For j in {m+1, m+2}: |delta|^(j/2) times the largest sampled |V_I.F| over
    boundary words of weight j.
    """
    magnitudes = _coefficient_magnitudes(F, vf_set, boundary_set(m, vf_set.d), states)
    profile = {}
    for j in (m + 1, m + 2):
        peak = max((value for w, value in magnitudes.items() if w.weight == j), default=0.0)
        profile[j] = abs(delta) ** (j / 2.0) * peak
    return profile


# ==================== Functional Ito checks ====================

def _window_nodes(Y: SampledPath, s: float, t: float) -> np.ndarray:
    times = Y.with_nodes([s, t]).times
    return times[(times >= s) & (times <= t)]


def _required(F: Functional, letter: int) -> Functional:
    d_F = F.derivative(letter)
    if d_F is None:
        raise ContractError(f"{F!r} has no closed-form derivative in letter {letter}")
    return d_F


def functional_ito_residual(F: Functional, Y: SampledPath, s: float, t: float, mode: str = STRATONOVICH_FORM):
    """
    |F_t - F_s - int d0F dr - sum_i int diF dY^i| on the grid of Y

    The Stratonovich form uses trapezoid weights for dY; the Ito form uses
    left points plus 1/2 sum_ik int dikF d[Y^i, Y^k].
    """
    if mode not in (STRATONOVICH_FORM, ITO_FORM):
        raise DomainError(f"Unknown mode '{mode}'. Use '{STRATONOVICH_FORM}' or '{ITO_FORM}'")
    times = _window_nodes(Y, s, t)
    states = Y.value_at(times)
    dY = np.diff(states, axis=-2)
    dt = np.diff(times)

    drift = _required(F, 0).evaluate_along(Y, times)
    total = np.asarray(F.evaluate(t, Y)) - np.asarray(F.evaluate(s, Y))
    total = total - np.sum(0.5 * (drift[..., 1:] + drift[..., :-1]) * dt, axis=-1)
    for i in range(1, Y.dimension + 1):
        d_i = _required(F, i)
        if d_i.is_zero:
            continue
        along = d_i.evaluate_along(Y, times)
        if mode == STRATONOVICH_FORM:
            total = total - np.sum(0.5 * (along[..., 1:] + along[..., :-1]) * dY[..., i - 1], axis=-1)
            continue
        total = total - np.sum(along[..., :-1] * dY[..., i - 1], axis=-1)
        for k in range(1, Y.dimension + 1):
            d_ik = _required(d_i, k)
            if d_ik.is_zero:
                continue
            curvature = d_ik.evaluate_along(Y, times)[..., :-1]
            total = total - 0.5 * np.sum(curvature * dY[..., i - 1] * dY[..., k - 1], axis=-1)
    return _value(np.abs(total))


def verify_functional_ito(F: Functional, vf_set: VectorFieldSet, y0, drv: Driver, s: float, t: float,
                          mode: str = STRATONOVICH_FORM):
    """Solve on drv and return the pathwise residual of the functional Ito formula"""
    _check_window(drv, vf_set, s, t)
    return functional_ito_residual(F, solve_stratonovich(vf_set, y0, drv), s, t, mode)


def verify_fde_ito(F: Functional, vf_set: VectorFieldSet, y0, drv: Driver, s: float, t: float):
    """|F_t - F_s - sum_i int V_i.F o dX^i| with the derivations evaluated along Y"""
    _check_window(drv, vf_set, s, t)
    Y = solve_stratonovich(vf_set, y0, drv)
    times, _ = drv.segment(s, t)
    total = np.asarray(F.evaluate(t, Y)) - np.asarray(F.evaluate(s, Y))
    for i in range(vf_set.d + 1):
        G = apply_derivation(vf_set.lifted(i), F)
        if G.is_zero:
            continue
        total = total - weighted_iterated_integral(drv, (i,), s, t, G.evaluate_along(Y, times))
    return _value(np.abs(total))


@dataclass(frozen=True)
class RefinementSetup:
    F: Functional
    vf_set: VectorFieldSet
    y0: Tuple[float, ...]
    cfg: SimulationConfig
    levels: Tuple[int, ...]
    s: float
    t: float
    mode: str


def refinement_samples(setup: RefinementSetup, chunk: range) -> np.ndarray:
    """Residuals of a chunk of paths at every level; shape (len(chunk), len(levels))"""
    finest = max(setup.levels)
    fine = sample_driver_batch(setup.cfg.with_steps(finest), chunk)
    columns = []
    for level in setup.levels:
        drv = coarsen_driver(fine, finest // level)
        Y = solve_stratonovich(setup.vf_set, setup.y0, drv)
        columns.append(np.atleast_1d(functional_ito_residual(setup.F, Y, setup.s, setup.t, setup.mode)))
    return np.stack(columns, axis=-1)


def ito_refinement_study(F: Functional, vf_set: VectorFieldSet, y0, cfg: SimulationConfig, levels: Sequence[int],
                         s: float, t: float, mode: str = STRATONOVICH_FORM, workers: Optional[int] = None,
                         progress: Optional[bool] = None) -> RefinementReport:
    """
    RMS residual of the functional Ito check on nested grids

    Coarse drivers are subsampled from one fine driver per path, so every
    level sees the same Brownian paths.
    """
    levels = tuple(sorted(int(n) for n in levels))
    if len(levels) < 2 or any(levels[-1] % n for n in levels):
        raise DomainError(f"Levels must be at least two step counts dividing the finest one, got {levels}")
    if not 0.0 <= s < t <= cfg.T:
        raise DomainError(f"Need 0 <= s < t <= T, got s={s}, t={t}, T={cfg.T:g}")
    setup = RefinementSetup(F, vf_set, tuple(np.atleast_1d(y0).astype(float)), cfg, levels, float(s), float(t), mode)
    samples = run_paths(partial(refinement_samples, setup), cfg.n_paths, workers=workers, progress=progress,
                        desc=f"ito check ({mode})")
    stats = [rms_with_ci(samples[:, j]) for j in range(len(levels))]
    steps = [cfg.T / n for n in levels]
    rms = [r for r, _ in stats]
    return RefinementReport(mode=mode, levels=list(levels), steps=steps, rms=rms, ci=[c for _, c in stats],
                            order=measured_order(steps, rms))
