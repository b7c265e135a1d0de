"""Multichannel time series containers and the overlapping window arrays.

A window with start index ``k*s`` takes inputs from samples
``[k*s, k*s + l_i - 1]`` and targets from ``[k*s + l_i, k*s + l_i + l_o - 1]``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import DataValidationError, WindowError

log = logging.getLogger(__name__)


def _as_channels(channels: Mapping[str, Sequence[float]]) -> dict[str, np.ndarray]:
    out = {str(k): np.asarray(v, dtype=np.float64).reshape(-1) for k, v in channels.items()}
    lengths = {v.size for v in out.values()}
    if len(lengths) > 1:
        raise DataValidationError(f"channels have unequal lengths {sorted(lengths)}")
    return out


@dataclass
class TimeSeriesFrame:
    """Named channels sampled at ``t0, t0 + dt, t0 + 2 dt, ...``."""

    channels: dict[str, np.ndarray]
    dt: float = 1.0
    t0: float = 0.0
    flow_period: np.ndarray | None = None

    def __post_init__(self):
        self.channels = _as_channels(self.channels)
        if not self.dt > 0:
            raise DataValidationError(f"dt must be positive, got {self.dt}")
        if self.flow_period is not None:
            self.flow_period = np.asarray(self.flow_period, dtype=np.int64).reshape(-1)
            if self.flow_period.size != len(self):
                raise DataValidationError("flow_period length differs from channel length")

    def __len__(self) -> int:
        return next(iter(self.channels.values())).size if self.channels else 0

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    @property
    def time(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(len(self))

    def __getitem__(self, name: str) -> np.ndarray:
        return self.channels[name]

    def select(self, names: Sequence[str]) -> np.ndarray:
        """Stack the named channels into a (T, len(names)) array."""
        missing = [n for n in names if n not in self.channels]
        if missing:
            raise KeyError(f"unknown channels {missing}; available {self.names}")
        return np.column_stack([self.channels[n] for n in names]) if names else np.empty((len(self), 0))

    def slice(self, start: int, stop: int) -> "TimeSeriesFrame":
        fp = None if self.flow_period is None else self.flow_period[start:stop]
        return TimeSeriesFrame(
            {k: v[start:stop].copy() for k, v in self.channels.items()},
            dt=self.dt,
            t0=self.t0 + start * self.dt,
            flow_period=fp,
        )

    def with_channels(self, channels: Mapping[str, np.ndarray]) -> "TimeSeriesFrame":
        return TimeSeriesFrame(dict(channels), dt=self.dt, t0=self.t0, flow_period=self.flow_period)

    def period_bounds(self) -> dict[int, tuple[int, int]]:
        """Half-open sample ranges ``[start, stop)`` of every flow period."""
        if self.flow_period is None:
            raise DataValidationError("frame carries no flow_period labels")
        bounds: dict[int, tuple[int, int]] = {}
        for i, p in enumerate(self.flow_period):
            p = int(p)
            lo, _ = bounds.get(p, (i, i))
            bounds[p] = (lo, i + 1)
        return bounds


@dataclass
class SampledSeries:
    """Channels at arbitrary strictly increasing timestamps (raw file records)."""

    time: np.ndarray
    channels: dict[str, np.ndarray]
    flow_period: np.ndarray | None = None

    def __post_init__(self):
        self.time = np.asarray(self.time, dtype=np.float64).reshape(-1)
        self.channels = _as_channels(self.channels)
        if self.channels and len(next(iter(self.channels.values()))) != self.time.size:
            raise DataValidationError("channel length differs from time length")
        if np.any(np.diff(self.time) <= 0):
            raise DataValidationError("timestamps must be strictly increasing")
        if self.flow_period is not None:
            self.flow_period = np.asarray(self.flow_period, dtype=np.int64).reshape(-1)
            if self.flow_period.size != self.time.size:
                raise DataValidationError("flow_period length differs from time length")

    def __len__(self) -> int:
        return self.time.size

    @property
    def names(self) -> list[str]:
        return list(self.channels)

    def segments(self) -> list["SampledSeries"]:
        """Split into consecutive runs of equal flow_period."""
        if self.flow_period is None or len(self) == 0:
            return [self]
        cuts = np.flatnonzero(np.diff(self.flow_period)) + 1
        edges = [0, *cuts.tolist(), len(self)]
        return [
            SampledSeries(
                self.time[a:b],
                {k: v[a:b] for k, v in self.channels.items()},
                self.flow_period[a:b],
            )
            for a, b in zip(edges[:-1], edges[1:])
        ]


@dataclass(frozen=True)
class FeatureSelection:
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "input_names", tuple(self.input_names))
        object.__setattr__(self, "output_names", tuple(self.output_names))
        if not self.input_names or not self.output_names:
            raise ValueError("need at least one input and one output feature")

    def validate(self, frame: TimeSeriesFrame) -> None:
        missing = [n for n in (*self.input_names, *self.output_names) if n not in frame.channels]
        if missing:
            raise KeyError(f"channels {missing} not in frame (have {frame.names})")


@dataclass(frozen=True)
class WindowSpec:
    l_i: int
    l_o: int
    s: int = 1

    def __post_init__(self):
        if self.l_i < 1 or self.l_o < 1 or self.s < 1:
            raise ValueError(f"window lengths and step must be >= 1, got {self}")

    @property
    def l(self) -> int:
        return self.l_i + self.l_o

    def count(self, T: int) -> int:
        """Number of complete windows in a series of length ``T``."""
        return 0 if T < self.l else (T - self.l) // self.s + 1


@dataclass
class SlidingDataset:
    X: np.ndarray  # (N, l_i, m)
    Y: np.ndarray  # (N, l_o, n)
    starts: np.ndarray  # (N,) sample index of each window's first input
    selection: FeatureSelection | None = None

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, idx) -> "SlidingDataset":
        return SlidingDataset(self.X[idx], self.Y[idx], self.starts[idx], self.selection)


def resample_uniform(series: SampledSeries, dt: float, t0: float | None = None) -> TimeSeriesFrame:
    """Linear interpolation onto ``t0, t0 + dt, ...`` up to the last timestamp."""
    if len(series) < 2:
        raise DataValidationError("resampling needs at least 2 samples")
    if not dt > 0:
        raise ValueError("dt must be positive")
    t = series.time
    start = t[0] if t0 is None else float(t0)
    if start < t[0]:
        raise ValueError("grid start precedes the first sample (no extrapolation)")
    n = int(math.floor((t[-1] - start) / dt * (1 + 1e-12) + 1e-9)) + 1
    grid = start + dt * np.arange(n)
    channels = {k: np.interp(grid, t, v) for k, v in series.channels.items()}
    fp = None
    if series.flow_period is not None:
        idx = np.searchsorted(t, grid, side="right") - 1
        fp = series.flow_period[np.clip(idx, 0, len(t) - 1)]
    return TimeSeriesFrame(channels, dt=dt, t0=start, flow_period=fp)


def resample_by_period(series: SampledSeries, dt: float) -> TimeSeriesFrame:
    """Resample every flow period on its own grid and concatenate.

    Values are never interpolated across a period boundary.
    """
    frames = [resample_uniform(seg, dt) for seg in series.segments()]
    for prev, nxt in zip(frames[:-1], frames[1:]):
        expected = prev.t0 + len(prev) * dt
        if not math.isclose(nxt.t0, expected, rel_tol=0, abs_tol=1e-6 * dt):
            log.warning("flow period starting at t=%g is not contiguous with the previous grid "
                        "(expected t=%g); sample times are approximate", nxt.t0, expected)
    channels = {k: np.concatenate([f.channels[k] for f in frames]) for k in series.channels}
    fp = None
    if series.flow_period is not None:
        fp = np.concatenate([f.flow_period for f in frames])
    return TimeSeriesFrame(channels, dt=dt, t0=frames[0].t0, flow_period=fp)


@dataclass
class NormalizerStats:
    """Per-channel min-max statistics fitted on a training interval."""

    minimum: dict[str, float]
    maximum: dict[str, float]

    def __post_init__(self):
        for k in self.minimum:
            if self.maximum[k] < self.minimum[k]:
                raise ValueError(f"max < min for channel {k}")

    @property
    def names(self) -> list[str]:
        return list(self.minimum)

    def _span(self, name: str) -> float:
        return self.maximum[name] - self.minimum[name]

    def scale(self, values: np.ndarray, names: Sequence[str]) -> np.ndarray:
        """Map columns of ``values`` (..., len(names)) into normalized units."""
        out = np.array(values, dtype=np.float64, copy=True)
        for j, name in enumerate(names):
            span = self._span(name)
            if span == 0:
                out[..., j] = 0.5
            else:
                out[..., j] = (out[..., j] - self.minimum[name]) / span
        return out

    def unscale(self, values: np.ndarray, names: Sequence[str]) -> np.ndarray:
        out = np.array(values, dtype=np.float64, copy=True)
        for j, name in enumerate(names):
            span = self._span(name)
            if span == 0:
                out[..., j] = self.minimum[name]
            else:
                out[..., j] = out[..., j] * span + self.minimum[name]
        return out


def fit_normalizer(frame: TimeSeriesFrame, training_range: tuple[int, int] | slice,
                   names: Sequence[str] | None = None) -> NormalizerStats:
    """Fit min-max statistics on samples ``training_range`` only."""
    sl = training_range if isinstance(training_range, slice) else slice(*training_range)
    names = frame.names if names is None else list(names)
    mins, maxs = {}, {}
    for name in names:
        seg = frame[name][sl]
        if seg.size == 0:
            raise ValueError("training range is empty")
        mins[name] = float(seg.min())
        maxs[name] = float(seg.max())
        if mins[name] == maxs[name]:
            log.warning("channel %s is constant on the training range; it normalizes to 0.5", name)
    return NormalizerStats(mins, maxs)


def normalize(frame: TimeSeriesFrame, stats: NormalizerStats) -> TimeSeriesFrame:
    channels = dict(frame.channels)
    for name in stats.names:
        channels[name] = stats.scale(frame[name][:, None], [name])[:, 0]
    return frame.with_channels(channels)


def denormalize(frame: TimeSeriesFrame, stats: NormalizerStats) -> TimeSeriesFrame:
    channels = dict(frame.channels)
    for name in stats.names:
        channels[name] = stats.unscale(frame[name][:, None], [name])[:, 0]
    return frame.with_channels(channels)


def build_windows(frame: TimeSeriesFrame, selection: FeatureSelection, spec: WindowSpec) -> SlidingDataset:
    """Cut the training array X (N, l_i, m) and target array Y (N, l_o, n)."""
    selection.validate(frame)
    T = len(frame)
    if T < spec.l:
        raise WindowError(
            f"training interval shorter than one sequence: {T} samples < l = {spec.l}"
        )
    N = spec.count(T)
    starts = np.arange(N) * spec.s
    x = frame.select(selection.input_names)
    y = frame.select(selection.output_names)
    # view shape (T - w + 1, channels, w) -> (N, w, channels)
    xw = np.lib.stride_tricks.sliding_window_view(x, spec.l_i, axis=0)[starts]
    yw = np.lib.stride_tricks.sliding_window_view(y[spec.l_i:], spec.l_o, axis=0)[starts]
    X = np.ascontiguousarray(xw.transpose(0, 2, 1))
    Y = np.ascontiguousarray(yw.transpose(0, 2, 1))
    return SlidingDataset(X, Y, starts, selection)


def train_val_split(dataset: SlidingDataset, fraction: float) -> tuple[SlidingDataset, SlidingDataset]:
    """Hold out the last ``ceil(fraction * N)`` windows (by start index)."""
    if not 0.0 <= fraction < 1.0:
        raise ValueError("validation fraction must lie in [0, 1)")
    N = len(dataset)
    order = np.argsort(dataset.starts, kind="stable")
    # guard against 0.05 * 100 = 5.000000000000001
    n_val = int(math.ceil(fraction * N - 1e-9))
    if n_val >= N:
        raise WindowError(f"validation fraction {fraction} leaves no training sequences (N = {N})")
    return dataset.subset(order[: N - n_val]), dataset.subset(order[N - n_val:])
