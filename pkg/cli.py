#!/usr/bin/env python3
"""
Chen-Fliess experiment runner

Usage:
    python cli.py run experiments/scaling_m1.cfg --assert
    python cli.py expand experiments/expand_exact.cfg --out outputs/exact
    python cli.py fit-bv experiments/fit_bv.cfg --quiet

Every run writes summary.json plus the CSV tables of its experiment kind.
Exit status: 0 success, 2 failed acceptance check (with --assert), 1 error.
"""

import argparse
import json
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from bv_approx import error_curve, find_separating_word, fit, separation_gap
from chen_fliess import expand, ito_refinement_study, l2_remainder, scaling_regression
from config import config
from errors import ChenFliessError
from experiment_config import EXPERIMENT_KINDS, ExperimentConfig, build_corpus, load_experiment
from multi_index import parse_word
from sde_engine import sample_driver, solve_stratonovich

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_FAILED = 2

_FLOAT_FORMAT = '%.17g'
_EXPAND_TOLERANCE = 1e-6
_ITO_ORDER = 0.9
_FIT_SLACK = 1e-6


class ExperimentResult:
    """Summary fields, output tables and pass verdict of one experiment"""

    def __init__(self, kind: str):
        self.kind = kind
        self.results: Dict = {}
        self.tables: Dict[str, pd.DataFrame] = {}
        self.passed = True
        self.headline = ""
        # flat summary fields; None where the kind has no such figure
        self.n_paths: Optional[int] = None
        self.rms = None
        self.ci = None
        self.slope: Optional[float] = None
        self.slope_theory: Optional[float] = None


# ==================== Runners ====================

def _run_expand(exp: ExperimentConfig, workers: Optional[int], progress: bool) -> ExperimentResult:
    out = ExperimentResult(exp.kind)
    cfg = exp.simulation
    drv = sample_driver(cfg, exp.path_index)
    report = expand(exp.functional, exp.vf_set, exp.y0, drv, exp.s, exp.t, exp.m)
    tolerance = _EXPAND_TOLERANCE if exp.tolerance is None else exp.tolerance
    remainder = float(report.remainder)
    nonzero = report.nonzero_words(config.EXACT_EXPANSION_FLOOR)

    out.tables['expansion.csv'] = report.to_frame()
    out.results = {
        'path_index': exp.path_index,
        'lhs': float(report.lhs),
        'truncation': float(report.truncation_value),
        'remainder': remainder,
        'n_words': len(report.words),
        'nonzero_words': [str(w) for w in nonzero],
        'tolerance': tolerance,
    }
    out.n_paths, out.rms = 1, abs(remainder)
    out.passed = abs(remainder) <= tolerance
    out.headline = f"m={exp.m} remainder={remainder:.3e} ({len(nonzero)}/{len(report.words)} words active)"
    return out


def _run_l2_error(exp: ExperimentConfig, workers: Optional[int], progress: bool) -> ExperimentResult:
    out = ExperimentResult(exp.kind)
    rms, ci = l2_remainder(exp.functional, exp.vf_set, exp.y0, exp.simulation, exp.s, exp.t, exp.m,
                           workers=workers, progress=progress)
    out.results = {'rms': rms, 'ci': ci, 'n_paths': exp.simulation.n_paths, 'tolerance': exp.tolerance}
    out.n_paths, out.rms, out.ci = exp.simulation.n_paths, rms, ci
    if exp.tolerance is not None:
        out.passed = rms <= exp.tolerance
    out.headline = f"m={exp.m} rms remainder={rms:.3e} ± {ci:.1e}"
    return out


def _run_scaling(exp: ExperimentConfig, workers: Optional[int], progress: bool) -> ExperimentResult:
    out = ExperimentResult(exp.kind)
    report = scaling_regression(exp.functional, exp.vf_set, exp.y0, exp.simulation, exp.m, exp.t_grid,
                                tolerance=exp.tolerance, workers=workers, progress=progress)
    out.tables['scaling.csv'] = report.to_frame()
    out.results = {
        'slope': report.slope,
        'intercept': report.intercept,
        'slope_theory': report.slope_theory,
        'tolerance': report.tolerance,
        'exact': report.exact,
        'n_paths': report.n_paths,
    }
    out.n_paths, out.rms, out.ci = report.n_paths, list(report.rms), list(report.ci)
    out.slope, out.slope_theory = report.slope, report.slope_theory
    out.passed = report.passed
    if report.exact:
        out.headline = f"m={exp.m} remainder vanishes at every horizon"
    else:
        out.headline = f"m={exp.m} slope={report.slope:.3f} (theory {report.slope_theory:.2f} ± {report.tolerance:g})"
    return out


def _run_ito_check(exp: ExperimentConfig, workers: Optional[int], progress: bool) -> ExperimentResult:
    out = ExperimentResult(exp.kind)
    report = ito_refinement_study(exp.functional, exp.vf_set, exp.y0, exp.simulation, exp.levels,
                                  exp.s, exp.t, mode=exp.mode, workers=workers, progress=progress)
    threshold = _ITO_ORDER if exp.tolerance is None else exp.tolerance
    out.tables['ito.csv'] = report.to_frame()
    out.results = {'mode': report.mode, 'order': report.order, 'min_order': threshold,
                   'n_paths': exp.simulation.n_paths}
    out.n_paths, out.rms, out.ci = exp.simulation.n_paths, list(report.rms), list(report.ci)
    out.slope = report.order
    out.passed = report.order >= threshold
    out.headline = f"{report.mode} residual order={report.order:.3f} (need ≥ {threshold:g})"
    return out


def _run_fit_bv(exp: ExperimentConfig, workers: Optional[int], progress: bool) -> ExperimentResult:
    out = ExperimentResult(exp.kind)
    d = exp.simulation.d if exp.simulation is not None else 1
    train, holdout = build_corpus(exp, d)
    curve = error_curve(exp.functional, train, holdout, exp.levels, method=exp.method)
    best = fit(exp.functional, train, max(exp.levels), method=exp.method, holdout=holdout)

    errors = curve['train_sup_error'].to_numpy()
    out.tables['fit.csv'] = curve
    out.tables['coefficients.csv'] = best.polynomial.to_frame()
    out.results = {
        'method': exp.method,
        'levels': list(exp.levels),
        'train_sup_error': [float(v) for v in errors],
        'holdout_sup_error': [float(v) for v in curve['holdout_sup_error']],
        'rank': best.rank,
        'rank_deficient': best.rank_deficient,
        'n_train': len(train),
        'n_holdout': len(holdout),
    }
    out.rms = best.train_rms_error
    out.passed = bool(np.all(np.diff(errors) <= _FIT_SLACK))
    out.headline = f"{exp.method} sup error {errors[0]:.3e} → {errors[-1]:.3e} over N={exp.levels[0]}..{exp.levels[-1]}"
    return out


def _run_separate(exp: ExperimentConfig, workers: Optional[int], progress: bool) -> ExperimentResult:
    out = ExperimentResult(exp.kind)
    a, b = exp.points
    word = find_separating_word(a, b, exp.L, tolerance=exp.tolerance)
    out.results = {'word': None if word is None else str(word), 'L': exp.L, 'expect': exp.expect}
    if word is not None:
        out.results['gap'] = separation_gap(a, b, word)
    if exp.expect is not None:
        out.passed = word is not None and word == parse_word(exp.expect, word.d)
    else:
        out.passed = word is not None
    out.headline = f"separating word: {word if word is not None else 'none up to L=' + str(exp.L)}"
    return out


RUNNERS = {
    'expand': _run_expand,
    'l2-error': _run_l2_error,
    'scaling': _run_scaling,
    'ito-check': _run_ito_check,
    'fit-bv': _run_fit_bv,
    'separate': _run_separate,
}


# ==================== Outputs ====================

def _summary(exp: ExperimentConfig, result: ExperimentResult) -> Dict:
    simulation = None
    if exp.simulation is not None:
        cfg = exp.simulation
        simulation = {'d': cfg.d, 'e': cfg.e, 'T': cfg.T, 'n_steps': cfg.n_steps,
                      'substep_ratio': cfg.substep_ratio, 'seed': cfg.seed, 'n_paths': cfg.n_paths,
                      'y0': list(exp.y0)}
    return {
        'm': exp.m,
        's': exp.s,
        't': exp.t,
        'n_paths': result.n_paths,
        'rms': result.rms,
        'ci': result.ci,
        'slope': result.slope,
        'slope_theory': result.slope_theory,
        'pass': bool(result.passed),
        'kind': exp.kind,
        'config': exp.path.name,
        'sections': exp.sections,
        'simulation': simulation,
        'results': result.results,
    }


def write_outputs(exp: ExperimentConfig, result: ExperimentResult) -> Path:
    out_dir = exp.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / 'summary.json', 'w') as f:
        json.dump(_summary(exp, result), f, indent=2, sort_keys=True)
        f.write('\n')
    for name, frame in result.tables.items():
        frame.to_csv(out_dir / name, index=False, float_format=_FLOAT_FORMAT)
    if exp.dump_paths and exp.simulation is not None and exp.vf_set is not None:
        paths_dir = out_dir / 'paths'
        paths_dir.mkdir(exist_ok=True)
        drv = sample_driver(exp.simulation, exp.path_index)
        drv.path.to_csv(paths_dir / 'driver.csv')
        solve_stratonovich(exp.vf_set, exp.y0, drv).to_csv(paths_dir / 'solution.csv')
    return out_dir


# ==================== Command line ====================

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='cli.py', description="Chen-Fliess expansion experiments")
    commands = parser.add_subparsers(dest='command', required=True)
    for name in ('run',) + EXPERIMENT_KINDS:
        help_text = "run the experiment the file describes" if name == 'run' else f"run a '{name}' experiment"
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('config_path', metavar='CONFIG', help="experiment file (INI)")
        sub.add_argument('--seed', type=int, help="override the random seed")
        sub.add_argument('--paths', type=int, help="override the Monte Carlo path count")
        sub.add_argument('--steps', type=int, help="override the coarse step count")
        sub.add_argument('--workers', type=int, help="worker processes (results do not depend on it)")
        sub.add_argument('--assert', dest='check', action='store_true',
                         help="exit with status 2 when the acceptance check fails")
        sub.add_argument('--out', metavar='DIR', help="output directory")
        sub.add_argument('--quiet', action='store_true', help="only print the final summary line")
    return parser


def run(config_path, overrides: Optional[Dict] = None, workers: Optional[int] = None, check: bool = False,
        quiet: bool = False, command: str = 'run') -> Tuple[int, Optional[ExperimentResult]]:
    """
    Load, run and write one experiment

    Returns:
        (exit status, result or None on error)
    """
    try:
        exp = load_experiment(config_path, overrides)
        if command != 'run' and command != exp.kind:
            raise ChenFliessError(f"{config_path} describes a '{exp.kind}' experiment, not '{command}'")

        if not quiet:
            print(f"🚀 {exp.kind} experiment: {exp.path}")
            print("=" * 60)
            if exp.simulation is not None:
                cfg = exp.simulation
                print(f"📊 d={cfg.d} e={cfg.e} T={cfg.T:g} steps={cfg.fine_steps} paths={cfg.n_paths} seed={cfg.seed}")
            if exp.functional is not None and not exp.functional.bounded:
                print("⚠️  Functional is not known to be bounded; remainder bounds may not apply")
            if exp.vf_set is not None and not exp.vf_set.bounded:
                print("⚠️  Vector fields are not known to be bounded; remainder bounds may not apply")

        result = RUNNERS[exp.kind](exp, workers, not quiet and config.SHOW_PROGRESS)
        out_dir = write_outputs(exp, result)
    except (ChenFliessError, OSError, ValueError) as e:
        print(f"❌ {e}")
        return EXIT_ERROR, None

    mark = "✅" if result.passed else "❌"
    if not quiet:
        print(f"💾 Outputs written to {out_dir}")
        print("=" * 60)
    print(f"{mark} {exp.kind}: {result.headline} [{'pass' if result.passed else 'fail'}]")
    if check and not result.passed:
        return EXIT_FAILED, result
    return EXIT_OK, result


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {'seed': args.seed, 'paths': args.paths, 'steps': args.steps, 'out': args.out}
    code, _ = run(args.config_path, overrides, workers=args.workers, check=args.check, quiet=args.quiet,
                  command=args.command)
    return code


if __name__ == "__main__":
    exit(main())
