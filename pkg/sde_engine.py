"""
SDE Engine Module
Brownian drivers with X^0_t = t and a Heun solver for dY = sum_i V_i(Y) o dX^i

Every path index owns its own counter-based random stream, so a driver is a
pure function of (seed, path_index) no matter how paths are split across
workers.
"""

from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from config import config
from derivations import VectorFieldSet
from errors import DomainError, NumericalBlowupError
from iterated_integrals import STRATONOVICH, Driver
from path_core import SampledPath

_STREAM_SHIFT = 128


@dataclass(frozen=True)
class SimulationConfig:
    """
    Monte Carlo setup

    Attributes:
        d: number of Brownian coordinates
        e: state dimension
        T: horizon
        n_steps: coarse grid size
        substep_ratio: refinement factor; drivers and solutions live on
                       n_steps * substep_ratio cells
        seed: key of the random streams
        n_paths: Monte Carlo sample count
    """
    d: int = 1
    e: int = 1
    T: float = 1.0
    n_steps: int = config.N_STEPS
    substep_ratio: int = config.SUBSTEP_RATIO
    seed: int = config.SEED
    n_paths: int = config.N_PATHS

    def __post_init__(self):
        if self.d < 1 or self.e < 1:
            raise DomainError(f"Dimensions must be positive, got d={self.d}, e={self.e}")
        if not self.T > 0:
            raise DomainError(f"Horizon must be positive, got T={self.T}")
        if self.n_steps < 1 or self.substep_ratio < 1:
            raise DomainError(f"Need n_steps >= 1 and substep_ratio >= 1, got {self.n_steps}, {self.substep_ratio}")
        if self.n_paths < 1:
            raise DomainError(f"Need at least one path, got n_paths={self.n_paths}")
        if not 0 <= self.seed < 2 ** 128:
            raise DomainError(f"Seed must lie in [0, 2^128), got {self.seed}")

    @property
    def fine_steps(self) -> int:
        return self.n_steps * self.substep_ratio

    @property
    def dt(self) -> float:
        return self.T / self.fine_steps

    def with_horizon(self, T: float) -> 'SimulationConfig':
        return replace(self, T=float(T))

    def with_steps(self, n_steps: int, substep_ratio: int = 1) -> 'SimulationConfig':
        return replace(self, n_steps=int(n_steps), substep_ratio=int(substep_ratio))


def path_rng(seed: int, path_index: int) -> np.random.Generator:
    """Philox stream of one path; streams of different paths never overlap"""
    if path_index < 0:
        raise DomainError(f"Path index must be non-negative, got {path_index}")
    return np.random.Generator(np.random.Philox(key=seed, counter=path_index << _STREAM_SHIFT))


def sample_increments(cfg: SimulationConfig, path_index: int) -> np.ndarray:
    """Brownian increments of one path on the fine grid; shape (fine_steps, d)"""
    rng = path_rng(cfg.seed, path_index)
    return rng.standard_normal((cfg.fine_steps, cfg.d)) * np.sqrt(cfg.dt)


def driver_from_increments(increments, T: float) -> Driver:
    """
    Stratonovich driver from Brownian increments

    Args:
        increments: shape (..., N, d)
        T: horizon of the uniform grid

    Returns:
        Driver with coordinate 0 equal to the grid times
    """
    increments = np.asarray(increments, dtype=float)
    n = increments.shape[-2]
    times = np.linspace(0.0, T, n + 1)
    noise = np.concatenate([np.zeros(increments.shape[:-2] + (1, increments.shape[-1])),
                            np.cumsum(increments, axis=-2)], axis=-2)
    clock = np.broadcast_to(times[:, None], noise.shape[:-1] + (1,))
    return Driver(SampledPath(times, np.concatenate([clock, noise], axis=-1)), STRATONOVICH)


def sample_driver(cfg: SimulationConfig, path_index: int) -> Driver:
    return driver_from_increments(sample_increments(cfg, path_index), cfg.T)


def sample_driver_batch(cfg: SimulationConfig, path_indices: Iterable[int]) -> Driver:
    """One batched driver holding the paths in the given order"""
    stacked = np.stack([sample_increments(cfg, int(k)) for k in path_indices], axis=0)
    return driver_from_increments(stacked, cfg.T)


def coarsen_driver(drv: Driver, factor: int) -> Driver:
    """Keep every factor-th node; the coarse increments are sums of fine ones"""
    cells = drv.path.n_nodes - 1
    if factor < 1 or cells % factor:
        raise DomainError(f"Cannot coarsen {cells} cells by a factor of {factor}")
    if factor == 1:
        return drv
    keep = np.arange(0, cells + 1, factor)
    return Driver(SampledPath(drv.times[keep], drv.path.values[..., keep, :]), drv.kind)


def solve_stratonovich(vf_set: VectorFieldSet, y0: Sequence[float], drv: Driver) -> SampledPath:
    """
    Heun scheme for dY = sum_i V_i(Y) o dX^i on the driver grid

    predictor  y_hat = y + sum_i V_i(y) dX^i
    corrector  y_new = y + 1/2 sum_i (V_i(y) + V_i(y_hat)) dX^i

    Args:
        vf_set: fields V_0 .. V_d
        y0: initial state in R^e (shared by all batch members)
        drv: driver of matching d, possibly batched

    Returns:
        Solution path on the driver grid, batched like the driver

    Raises:
        NumericalBlowupError: state became non-finite
    """
    if drv.d != vf_set.d:
        raise DomainError(f"Driver has d={drv.d} but {vf_set.d} noise fields were given")
    y0 = np.atleast_1d(np.asarray(y0, dtype=float))
    if y0.shape != (vf_set.e,):
        raise DomainError(f"Initial state must have {vf_set.e} entries, got shape {y0.shape}")

    increments = np.diff(drv.path.values, axis=-2)
    increments[..., 0] = np.diff(drv.times)
    n = increments.shape[-2]

    y = np.broadcast_to(y0, drv.batch_shape + (vf_set.e,)).copy()
    out = np.empty(drv.batch_shape + (n + 1, vf_set.e))
    out[..., 0, :] = y
    for step in range(n):
        dX = increments[..., step, :]
        current = vf_set.evaluate(y)
        predictor = y + np.einsum('...ie,...i->...e', current, dX)
        y = y + 0.5 * np.einsum('...ie,...i->...e', current + vf_set.evaluate(predictor), dX)
        if not np.all(np.isfinite(y)):
            raise NumericalBlowupError(step + 1)
        out[..., step + 1, :] = y
    return SampledPath(drv.times, out)

