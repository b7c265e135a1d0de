"""Datasets: synthetic severe-slugging signals, a synthetic well test, CSV I/O.

The slugging generator is a stand-in for a hydrodynamical riser simulation.
Each cycle has a buildup phase (riser-bottom pressure ramps up, almost no
liquid leaves the riser) followed by a blowout (pressure decays back to base,
liquid and then gas leave in a short burst). With constant boundary
conditions the cycle is a strict limit cycle; ``period_jitter > 0`` makes
individual cycle lengths vary around ``period``, and the liquid burst then
grows with the cycle length (more liquid accumulated). Disturbances travel downstream, so gauge ``k``
(0 = riser bottom, increasing distance upstream) sees each cycle
``k * gauge_phase_lag`` seconds before the riser bottom does. Magnitudes are
order-of-magnitude placeholders (bar, kg/s).
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DataValidationError
from .nn import make_rng
from .windowing import SampledSeries, TimeSeriesFrame

log = logging.getLogger(__name__)

WELL_TEST_COLUMNS = ("time", "pressure", "temperature", "oil_rate", "gas_rate", "water_rate", "flow_period")
RATE_COLUMNS = ("oil_rate", "gas_rate", "water_rate")


@dataclass(frozen=True)
class SlugGenParams:
    period: float = 120.0
    duty: float = 0.75
    gauge_count: int = 7
    gauge_phase_lag: float = 15.0  # s between neighbouring gauges
    period_jitter: float = 0.0  # relative std of individual cycle lengths
    pressure_base: float = 2.0
    pressure_amplitude: float = 1.0
    pressure_base_step: float = 0.08  # per gauge, upstream pressure is higher
    blowout_decay: float = 6.0  # e-folding time of the pressure drop, s
    liquid_base: float = 0.5
    liquid_amplitude: float = 8.0
    liquid_width: float = 4.0  # std of the liquid burst, s
    gas_base: float = 0.05
    gas_amplitude: float = 0.6
    gas_delay: float = 6.0  # gas burst trails the liquid burst, s
    gas_width: float = 3.0
    noise_std: float = 0.02  # relative to each channel's amplitude
    seed: int = 0

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("period must be positive")
        if not 0 < self.duty < 1:
            raise ValueError("duty must lie in (0, 1)")
        if self.gauge_count < 1:
            raise ValueError("gauge_count must be >= 1")
        if self.noise_std < 0 or not 0 <= self.period_jitter < 0.5:
            raise ValueError("noise_std must be >= 0 and period_jitter in [0, 0.5)")
        for name in ("pressure_amplitude", "liquid_amplitude", "gas_amplitude",
                     "liquid_width", "gas_width", "blowout_decay"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.liquid_width == 0 or self.gas_width == 0 or self.blowout_decay == 0:
            raise ValueError("burst widths and decay time must be positive")


def gauge_names(count: int) -> list[str]:
    """Pressure channel names ordered by distance from the riser bottom."""
    return [f"p{k + 1}" for k in range(count)]


def _cycle_starts(p: SlugGenParams, t_min: float, t_max: float, rng) -> tuple[np.ndarray, np.ndarray]:
    """Cycle start times covering [t_min, t_max] and their lengths."""
    n = int(math.ceil((t_max - t_min) / (p.period * (1 - 3 * p.period_jitter)))) + 4
    lengths = p.period * np.clip(1.0 + p.period_jitter * rng.standard_normal(n), 0.5, 1.5)
    starts = t_min - p.period + np.concatenate([[0.0], np.cumsum(lengths[:-1])])
    return starts, lengths


def _pressure_shape(t: np.ndarray, starts: np.ndarray, lengths: np.ndarray, p: SlugGenParams) -> np.ndarray:
    """Unit-amplitude cycles: linear buildup, then exponential blowout to 0."""
    c = np.searchsorted(starts, t, side="right") - 1
    local = t - starts[c]
    build = p.duty * lengths[c]
    span = lengths[c] - build
    x = np.maximum(local - build, 0.0)
    # subtract a linear term so each cycle closes continuously at 0
    blow = np.exp(-x / p.blowout_decay) - (x / span) * np.exp(-span / p.blowout_decay)
    return np.where(local < build, local / build, blow)


def _bursts(t: np.ndarray, centers: np.ndarray, heights: np.ndarray, width: float) -> np.ndarray:
    # nearest-center Gaussian; centers are about a period apart and bursts are narrow
    idx = np.clip(np.searchsorted(centers, t), 1, len(centers) - 1)
    use_left = np.abs(t - centers[idx - 1]) <= np.abs(t - centers[idx])
    k = np.where(use_left, idx - 1, idx)
    return heights[k] * np.exp(-0.5 * ((t - centers[k]) / width) ** 2)


def generate_slugging(params: SlugGenParams, duration: float, dt: float = 1.0) -> TimeSeriesFrame:
    """Pressure gauges ``p1..pK``, ``liquid_rate`` and ``gas_rate`` on a uniform grid."""
    if not dt > 0 or not duration > 0:
        raise ValueError("duration and dt must be positive")
    p = params
    T = int(round(duration / dt))
    t = dt * np.arange(T)
    cycle_rng = make_rng(p.seed)
    noise_rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence([p.seed, 1])))
    lead = (p.gauge_count - 1) * abs(p.gauge_phase_lag)
    starts, lengths = _cycle_starts(p, -lead, duration + lead, cycle_rng)
    channels = {}
    for k, name in enumerate(gauge_names(p.gauge_count)):
        shape = _pressure_shape(t + k * p.gauge_phase_lag, starts, lengths, p)
        channels[name] = p.pressure_base + k * p.pressure_base_step + p.pressure_amplitude * shape
    blowouts = starts + p.duty * lengths
    strength = lengths / p.period
    channels["liquid_rate"] = p.liquid_base + p.liquid_amplitude * _bursts(t, blowouts, strength, p.liquid_width)
    channels["gas_rate"] = p.gas_base + p.gas_amplitude * _bursts(t, blowouts + p.gas_delay, strength, p.gas_width)
    if p.noise_std > 0:
        scale = {name: p.pressure_amplitude for name in gauge_names(p.gauge_count)}
        scale.update(liquid_rate=p.liquid_amplitude, gas_rate=p.gas_amplitude)
        for name in channels:
            channels[name] = channels[name] + p.noise_std * scale[name] * noise_rng.standard_normal(T)
    return TimeSeriesFrame(channels, dt=dt, t0=0.0)


@dataclass(frozen=True)
class WellTestParams:
    """Stepwise deliverability-style test: one plateau per choke size.

    Per flow period: sample count (1 min sampling), plateau levels of
    pressure (bar), temperature (degC), oil/gas/water rates (volume/day).
    Gas grows strongly with choke size; oil and water stay in a narrow range.
    """

    samples: tuple[int, ...] = (1474, 1474, 1123, 1100, 1100)
    pressure: tuple[float, ...] = (228.0, 201.0, 176.0, 156.0, 141.0)
    temperature: tuple[float, ...] = (42.0, 49.0, 55.0, 59.5, 62.5)
    oil_rate: tuple[float, ...] = (310.0, 345.0, 372.0, 390.0, 402.0)
    gas_rate: tuple[float, ...] = (3.1, 5.8, 8.3, 10.2, 11.6)
    water_rate: tuple[float, ...] = (95.0, 108.0, 118.0, 125.0, 130.0)
    dt: float = 60.0
    transient_minutes: float = 25.0  # relaxation time after a choke change
    spike: float = 0.35  # relative rate overshoot at the start of a period
    noise_std: float = 0.03  # relative
    drop_fraction: float = 0.01  # records randomly missing from the log
    seed: int = 7


def generate_well_test(params: WellTestParams = WellTestParams()) -> SampledSeries:
    """Synthetic noisy multi-rate well test with irregular (gappy) timestamps."""
    p = params
    rng = make_rng(p.seed)
    levels = {name: getattr(p, name) for name in ("pressure", "temperature", *RATE_COLUMNS)}
    times, fps = [], []
    cols: dict[str, list[np.ndarray]] = {k: [] for k in levels}
    start = 0
    prev = {k: v[0] for k, v in levels.items()}
    for fp, n in enumerate(p.samples):
        tau = np.arange(n, dtype=np.float64)  # minutes since the choke change
        relax = np.exp(-tau / p.transient_minutes)
        for name, lv in levels.items():
            target = lv[fp]
            base = target + (prev[name] - target) * relax
            if name in RATE_COLUMNS and fp > 0:
                base = base + p.spike * target * np.exp(-tau / (0.3 * p.transient_minutes))
            # slow drift within a period
            base = base * (1.0 - 0.01 * tau / n) if name in RATE_COLUMNS else base
            noise = p.noise_std * (0.2 if name in ("pressure", "temperature") else 1.0)
            cols[name].append(np.maximum(base * (1.0 + noise * rng.standard_normal(n)), 0.0))
            prev[name] = target
        times.append((start + np.arange(n)) * p.dt)
        fps.append(np.full(n, fp + 1))
        start += n
    time = np.concatenate(times)
    fp_all = np.concatenate(fps)
    channels = {k: np.concatenate(v) for k, v in cols.items()}
    # drop interior records at random; period ends are kept so resampling restores the grid
    keep = rng.random(time.size) >= p.drop_fraction
    edges = np.flatnonzero(np.diff(fp_all)) + 1
    keep[[0, time.size - 1, *edges, *(edges - 1)]] = True
    return SampledSeries(time[keep], {k: v[keep] for k, v in channels.items()}, fp_all[keep])


# ---------------------------------------------------------------------------
# CSV


def _fmt_time(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


def _parse_time(text: str, lineno: int) -> float:
    text = text.strip()
    try:
        return float(int(text))
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    try:
        stamp = datetime.fromisoformat(text)
    except ValueError:
        raise DataValidationError(f"line {lineno}: cannot parse time {text!r}") from None
    if stamp.tzinfo is None:
        stamp = stamp.replace(tzinfo=timezone.utc)
    return stamp.timestamp()


def write_frame_csv(frame: TimeSeriesFrame | SampledSeries, path) -> None:
    """Comma-separated ``time,<channels...>[,flow_period]`` with a header row."""
    path = Path(path)
    names = frame.names
    fp = frame.flow_period
    header = ["time", *names] + (["flow_period"] if fp is not None else [])
    try:
        with path.open("w", newline="") as fh:
            fh.write(",".join(header) + "\n")
            cols = [frame.channels[n] for n in names]
            for i, t in enumerate(frame.time):
                row = [_fmt_time(t), *(repr(float(c[i])) for c in cols)]
                if fp is not None:
                    row.append(str(int(fp[i])))
                fh.write(",".join(row) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def read_series_csv(path, required: Sequence[str] = ()) -> SampledSeries:
    """Parse any ``time,<channels...>[,flow_period]`` CSV."""
    path = Path(path)
    try:
        fh = path.open(newline="")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        if not header or header[0] != "time":
            raise DataValidationError(f"{path}: first column must be 'time'")
        missing = [c for c in required if c not in header]
        if missing:
            raise DataValidationError(f"{path}: missing columns {missing}")
        has_fp = "flow_period" in header
        names = [h for h in header[1:] if h != "flow_period"]
        times, fps, rows = [], [], []
        for lineno, rec in enumerate(reader, start=2):
            if not rec or all(not x.strip() for x in rec):
                continue
            if len(rec) != len(header):
                raise DataValidationError(f"line {lineno}: expected {len(header)} fields, got {len(rec)}")
            times.append(_parse_time(rec[0], lineno))
            values = {}
            for col, text in zip(header[1:], rec[1:]):
                try:
                    values[col] = float(text) if col != "flow_period" else int(text)
                except ValueError:
                    raise DataValidationError(f"line {lineno}: bad {col} value {text!r}") from None
            if not all(math.isfinite(values[n]) for n in names):
                raise DataValidationError(f"line {lineno}: non-finite value")
            if len(times) > 1 and times[-1] <= times[-2]:
                raise DataValidationError(f"line {lineno}: time does not increase")
            rows.append([values[n] for n in names])
            if has_fp:
                fps.append(values["flow_period"])
    arr = np.array(rows, dtype=np.float64).reshape(len(rows), len(names))
    return SampledSeries(
        np.array(times, dtype=np.float64),
        {n: arr[:, j] for j, n in enumerate(names)},
        np.array(fps, dtype=np.int64) if has_fp else None,
    )


def load_well_test_csv(path) -> SampledSeries:
    """Read and validate a well-test log (see ``WELL_TEST_COLUMNS``).

    Unknown columns are dropped with a warning. Rates must be non-negative
    and flow periods must not decrease.
    """
    series = read_series_csv(path, required=WELL_TEST_COLUMNS)
    extra = [n for n in series.names if n not in WELL_TEST_COLUMNS]
    if extra:
        log.warning("%s: ignoring unknown columns %s", path, extra)
    for name in RATE_COLUMNS:
        bad = np.flatnonzero(series.channels[name] < 0)
        if bad.size:
            raise DataValidationError(f"line {int(bad[0]) + 2}: negative {name}")
    fp = series.flow_period
    drops = np.flatnonzero(np.diff(fp) < 0)
    if drops.size:
        raise DataValidationError(f"line {int(drops[0]) + 3}: flow_period decreases")
    channels = {n: series.channels[n] for n in WELL_TEST_COLUMNS[1:-1]}
    return SampledSeries(series.time, channels, fp)


def read_frame_csv(path) -> TimeSeriesFrame:
    """Read a CSV whose time column is already uniformly spaced."""
    series = read_series_csv(path)
    if len(series) < 2:
        raise DataValidationError(f"{path}: need at least 2 rows for a uniform frame")
    steps = np.diff(series.time)
    dt = float(steps[0])
    if not np.allclose(steps, dt, rtol=1e-9, atol=1e-9):
        raise DataValidationError(f"{path}: time column is not uniform; resample it first")
    return TimeSeriesFrame(series.channels, dt=dt, t0=float(series.time[0]), flow_period=series.flow_period)


def write_plot_data(composite, truth: TimeSeriesFrame | None, path, channel: str | None = None) -> None:
    """Columns ``time,truth,forecast,sequence_id`` for one output channel."""
    names = list(composite.names)
    channel = names[0] if channel is None else channel
    j = names.index(channel)
    samples = composite.samples
    f17 = lambda v: format(float(v), ".17g")  # noqa: E731
    path = Path(path)
    try:
        with path.open("w") as fh:
            fh.write("time,truth,forecast,sequence_id\n")
            for row, i in enumerate(samples):
                t = composite.t0 + composite.dt * i
                if truth is not None and 0 <= i < len(truth):
                    tv = f17(truth[channel][i])
                else:
                    tv = "nan"
                fh.write(f"{f17(t)},{tv},{f17(composite.values[row, j])},{int(composite.source[row])}\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
