"""
Path Core Module
Sampled paths, the stopping operator, the 1-variation and uniform metrics,
and the bump perturbation used by space derivatives
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Tuple, Union

import numpy as np
import pandas as pd

from errors import DomainError

LINEAR = 'piecewise-linear'
CADLAG = 'piecewise-constant-cadlag'
INTERPOLATIONS = (LINEAR, CADLAG)

_TIME_SLACK = 1e-12


class SampledPath:
    """
    A path on [0, T] stored as grid nodes and vector values

    Values have shape (..., n, e): optional leading batch axes, one row per
    node, coordinates last. A time may appear twice in a row; the pair then
    encodes a jump (left value first, right value second). Evaluation is
    right-continuous, so at a jump time the second value is returned.
    """

    def __init__(self, times, values, interpolation: str = LINEAR):
        if interpolation not in INTERPOLATIONS:
            raise DomainError(f"Unknown interpolation '{interpolation}'. Use one of: {', '.join(INTERPOLATIONS)}")

        times = np.array(times, dtype=float).reshape(-1)
        values = np.array(values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]

        if times.size == 0:
            raise DomainError("A path needs at least one grid node")
        if values.ndim < 2 or values.shape[-2] != times.size:
            raise DomainError(f"Values of shape {values.shape} do not match {times.size} grid nodes")
        if values.shape[-1] < 1:
            raise DomainError("Path dimension must be positive")
        if times[0] != 0.0:
            raise DomainError(f"Grid must start at 0, got {times[0]}")
        steps = np.diff(times)
        if np.any(steps < 0):
            raise DomainError("Grid times must be non-decreasing")
        repeated = steps == 0
        if np.any(repeated[1:] & repeated[:-1]):
            raise DomainError("A grid time may appear at most twice (one jump per time)")
        if not np.all(np.isfinite(times)) or not np.all(np.isfinite(values)):
            raise DomainError("Path contains non-finite entries")

        times.setflags(write=False)
        values.setflags(write=False)
        self.times = times
        self.values = values
        self.interpolation = interpolation

    # ---- constructors ----------------------------------------------------
    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], times,
                      interpolation: str = LINEAR) -> 'SampledPath':
        """Sample fn on the grid; fn maps an array of times to (n,) or (n, e) values"""
        times = np.asarray(times, dtype=float)
        return cls(times, np.asarray(fn(times), dtype=float), interpolation)

    @classmethod
    def constant(cls, value, T: float, interpolation: str = LINEAR) -> 'SampledPath':
        value = np.atleast_1d(np.asarray(value, dtype=float))
        times = [0.0] if T == 0 else [0.0, float(T)]
        return cls(times, np.repeat(value[None, :], len(times), axis=0), interpolation)

    # ---- shape -----------------------------------------------------------
    @property
    def T(self) -> float:
        return float(self.times[-1])

    @property
    def dimension(self) -> int:
        return self.values.shape[-1]

    @property
    def batch_shape(self) -> Tuple[int, ...]:
        return self.values.shape[:-2]

    @property
    def n_nodes(self) -> int:
        return self.times.size

    def select(self, k) -> 'SampledPath':
        """Member k of a batched path"""
        if not self.batch_shape:
            raise DomainError("select() needs a batched path")
        return SampledPath(self.times, self.values[k], self.interpolation)

    def __repr__(self):
        batch = f", batch={self.batch_shape}" if self.batch_shape else ""
        return f"SampledPath(T={self.T:g}, n={self.n_nodes}, e={self.dimension}{batch}, {self.interpolation})"

    # ---- evaluation ------------------------------------------------------
    def _times_in_range(self, t) -> Tuple[np.ndarray, bool]:
        t = np.asarray(t, dtype=float)
        slack = _TIME_SLACK * max(1.0, self.T)
        if np.any(t < -slack) or np.any(t > self.T + slack) or not np.all(np.isfinite(t)):
            raise DomainError(f"Time outside [0, {self.T:g}]")
        return np.clip(np.atleast_1d(t), 0.0, self.T), t.ndim == 0

    def _interpolate(self, idx: np.ndarray, nxt: np.ndarray, t: np.ndarray) -> np.ndarray:
        span = self.times[nxt] - self.times[idx]
        inner = span > 0
        w = np.where(inner, (t - self.times[idx]) / np.where(inner, span, 1.0), 0.0)
        w = np.clip(w, 0.0, 1.0)[:, None]
        return (1.0 - w) * self.values[..., idx, :] + w * self.values[..., nxt, :]

    def value_at(self, t) -> np.ndarray:
        """
        Evaluate the path

        Args:
            t: time or array of times in [0, T]

        Returns:
            Array of shape (..., e) for a scalar t, (..., k, e) for k times
        """
        tt, scalar = self._times_in_range(t)
        last = self.n_nodes - 1
        idx = np.clip(np.searchsorted(self.times, tt, side='right') - 1, 0, last)
        if self.interpolation == CADLAG or last == 0:
            out = self.values[..., idx, :]
        else:
            out = self._interpolate(idx, np.minimum(idx + 1, last), tt)
        return out[..., 0, :] if scalar else out

    __call__ = value_at

    def left_limit(self, t) -> np.ndarray:
        """Value just before t (the value at 0 for t = 0)"""
        tt, scalar = self._times_in_range(t)
        last = self.n_nodes - 1
        idx = np.searchsorted(self.times, tt, side='left') - 1
        at_origin = idx < 0
        idx = np.clip(idx, 0, last)
        if self.interpolation == CADLAG or last == 0:
            out = self.values[..., idx, :]
        else:
            nxt = np.where(at_origin, idx, np.minimum(idx + 1, last))
            out = self._interpolate(idx, nxt, tt)
        return out[..., 0, :] if scalar else out

    def endpoint(self, t) -> np.ndarray:
        """x_t, the current state seen by a nonanticipative functional"""
        return self.value_at(t)

    # ---- grid manipulation ----------------------------------------------
    def head(self, t: float) -> Tuple[np.ndarray, np.ndarray]:
        """Nodes on [0, t], closed by a node at t"""
        tt, _ = self._times_in_range(t)
        t = float(tt[0])
        keep = int(np.searchsorted(self.times, t, side='right'))
        times = self.times[:keep]
        values = self.values[..., :keep, :]
        if times[-1] < t:
            times = np.append(times, t)
            values = np.concatenate([values, self.value_at(t)[..., None, :]], axis=-2)
        return times, values

    def stop_at(self, t: float) -> 'SampledPath':
        """The stopped path r -> x(min(r, t))"""
        times, values = self.head(t)
        if times[-1] < self.T:
            times = np.append(times, self.T)
            values = np.concatenate([values, values[..., -1:, :]], axis=-2)
        return SampledPath(times, values, self.interpolation)

    def with_nodes(self, extra) -> 'SampledPath':
        """Same path with additional grid nodes (values read off the path)"""
        extra, _ = self._times_in_range(extra)
        new = np.setdiff1d(np.unique(extra), self.times)
        if new.size == 0:
            return self
        all_times = np.concatenate([self.times, new])
        all_values = np.concatenate([self.values, self.value_at(new)], axis=-2)
        order = np.argsort(all_times, kind='stable')
        return SampledPath(all_times[order], all_values[..., order, :], self.interpolation)

    def bump(self, t: float, i: int, eps: float) -> 'SampledPath':
        """
        The perturbed path x + eps * e_i * 1[r >= t]

        The jump is stored as a node pair at t, so left of t nothing changes
        and evaluation at t already sees the bumped value.

        Args:
            t: bump time in [0, T]
            i: coordinate, counted from 1
            eps: bump size

        Raises:
            DomainError: coordinate or time out of range
        """
        if not 1 <= i <= self.dimension:
            raise DomainError(f"Coordinate {i} outside 1..{self.dimension}")
        tt, _ = self._times_in_range(t)
        t = float(tt[0])
        if eps == 0:
            return self

        shift = np.zeros(self.dimension)
        shift[i - 1] = eps
        before = int(np.searchsorted(self.times, t, side='left'))
        after = int(np.searchsorted(self.times, t, side='right'))

        pieces_t = [self.times[:before]]
        pieces_v = [self.values[..., :before, :]]
        if t > 0:
            pieces_t.append([t])
            pieces_v.append(self.left_limit(t)[..., None, :])
        pieces_t += [[t], self.times[after:]]
        pieces_v += [self.value_at(t)[..., None, :] + shift, self.values[..., after:, :] + shift]
        return SampledPath(np.concatenate(pieces_t), np.concatenate(pieces_v, axis=-2), self.interpolation)

    def difference(self, other: 'SampledPath') -> 'SampledPath':
        """
        Pointwise difference on the merged grid

        Every union time carries the difference of right values; where either
        operand jumps, the difference of left limits is inserted before it.
        """
        _check_compatible(self, other)
        union = np.union1d(self.times, other.times)
        right = self.value_at(union) - other.value_at(union)
        left = self.left_limit(union) - other.left_limit(union)

        batch_axes = tuple(range(right.ndim - 2)) + (right.ndim - 1,)
        jumps = np.any(left != right, axis=batch_axes)
        jumps[0] = False

        times, rows = [], []
        for j, u in enumerate(union):
            if jumps[j]:
                times.append(u)
                rows.append(left[..., j, :])
            times.append(u)
            rows.append(right[..., j, :])
        tag = LINEAR if self.interpolation == other.interpolation == LINEAR else CADLAG
        return SampledPath(np.asarray(times), np.stack(rows, axis=-2), tag)

    # ---- norms -----------------------------------------------------------
    def one_var_norm(self) -> Union[float, np.ndarray]:
        """Sum of Euclidean norms of node increments (jumps included)"""
        total = np.linalg.norm(np.diff(self.values, axis=-2), axis=-1).sum(axis=-1)
        return float(total) if np.ndim(total) == 0 else total

    def sup_norm(self) -> Union[float, np.ndarray]:
        total = np.linalg.norm(self.values, axis=-1).max(axis=-1)
        return float(total) if np.ndim(total) == 0 else total

    # ---- CSV -------------------------------------------------------------
    def to_csv(self, dest: Union[str, Path, None] = None):
        """Write `t,x1,...,xe` rows; returns the text when dest is None"""
        if self.batch_shape:
            raise DomainError("Only single paths can be written as CSV; use select() first")
        frame = pd.DataFrame(self.values, columns=[f"x{k + 1}" for k in range(self.dimension)])
        frame.insert(0, 't', self.times)
        return frame.to_csv(dest, index=False, float_format='%.17g')

    @classmethod
    def from_csv(cls, src, interpolation: str = LINEAR) -> 'SampledPath':
        frame = pd.read_csv(src, float_precision='round_trip')
        expected = ['t'] + [f"x{k + 1}" for k in range(len(frame.columns) - 1)]
        if list(frame.columns) != expected or len(expected) < 2:
            raise DomainError(f"Path CSV header must be {','.join(expected)}, got {','.join(map(str, frame.columns))}")
        return cls(frame['t'].to_numpy(dtype=float), frame[expected[1:]].to_numpy(dtype=float), interpolation)


@dataclass(frozen=True)
class StoppedPoint:
    """A pair (t, x) on which nonanticipative functionals act"""
    t: float
    path: SampledPath

    def __post_init__(self):
        if not 0.0 <= self.t <= self.path.T:
            raise DomainError(f"Stopping time {self.t} outside [0, {self.path.T:g}]")

    def stopped(self) -> SampledPath:
        return self.path.stop_at(self.t)


def _check_compatible(x: SampledPath, y: SampledPath):
    if abs(x.T - y.T) > _TIME_SLACK * max(1.0, x.T):
        raise DomainError(f"Paths have different horizons ({x.T:g} vs {y.T:g})")
    if x.dimension != y.dimension:
        raise DomainError(f"Paths have different dimensions ({x.dimension} vs {y.dimension})")


def stop_at(path: SampledPath, t: float) -> SampledPath:
    return path.stop_at(t)


def one_var_norm(path: SampledPath):
    return path.one_var_norm()


def bump(path: SampledPath, t: float, i: int, eps: float) -> SampledPath:
    return path.bump(t, i, eps)


def _stopped_difference(a: StoppedPoint, b: StoppedPoint) -> SampledPath:
    _check_compatible(a.path, b.path)
    return a.stopped().difference(b.stopped())


def rho_one_var(a: StoppedPoint, b: StoppedPoint):
    """|t - s| plus the 1-variation of the difference of stopped paths"""
    return abs(a.t - b.t) + _stopped_difference(a, b).one_var_norm()


def rho_infty(a: StoppedPoint, b: StoppedPoint):
    """|t - s| plus the uniform distance of stopped paths"""
    return abs(a.t - b.t) + _stopped_difference(a, b).sup_norm()
