"""Multi-sequence forecasts, overlap stitching, error metrics and studies."""

from __future__ import annotations

import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import CoverageGapError, DataValidationError, WindowError
from .model import (
    DeepLSTMConfig,
    DeepLSTMModel,
    FeedforwardConfig,
    FeedforwardModel,
    build_ff,
    build_lstm,
)
from .training import TrainingHistory, TrainingProtocol, train
from .windowing import (
    FeatureSelection,
    TimeSeriesFrame,
    WindowSpec,
    build_windows,
    fit_normalizer,
    normalize,
)

log = logging.getLogger(__name__)


@dataclass
class SequenceForecast:
    """Forecast made from inputs ``[start, start + l_i)`` for ``[start + l_i, start + l_i + l_o)``."""

    start: int
    l_i: int
    outputs: np.ndarray  # (l_o, n), physical units

    @property
    def first(self) -> int:
        return self.start + self.l_i

    @property
    def l_o(self) -> int:
        return self.outputs.shape[0]

    @property
    def samples(self) -> np.ndarray:
        return self.first + np.arange(self.l_o)


@dataclass
class CompositeForecast:
    """Stitched forecast over samples ``first .. first + len(values) - 1``.

    ``source[r]`` is the index (into the stitched list) of the sequence that
    supplied row ``r``; ``offset[r]`` is that row's position within it.
    """

    first: int
    values: np.ndarray  # (L, n)
    source: np.ndarray  # (L,)
    offset: np.ndarray  # (L,)
    names: tuple[str, ...] = ()
    dt: float = 1.0
    t0: float = 0.0

    def __len__(self) -> int:
        return self.values.shape[0]

    @property
    def samples(self) -> np.ndarray:
        return self.first + np.arange(len(self))

    @property
    def last(self) -> int:
        return self.first + len(self) - 1


def sequence_starts(T: int, l_i: int, l_o: int, shift: int, first: int = 0) -> list[int]:
    """Starts ``first, first + shift, ...`` whose whole window fits in ``T`` samples."""
    if shift < 1:
        raise ValueError("shift must be >= 1")
    return list(range(first, T - (l_i + l_o) + 1, shift))


def forecast_sequences(model, frame: TimeSeriesFrame, starts: Sequence[int],
                       spec: WindowSpec | None = None) -> list[SequenceForecast]:
    """Run ``model`` on every input window; outputs in physical units.

    Only the inputs ``[start, start + l_i)`` need to exist in ``frame``.
    """
    l_i = model.config.l_i
    if spec is not None and (spec.l_i != l_i or spec.l_o != model.config.l_o):
        raise ValueError(f"window spec {spec} does not match model (l_i = l_o = {l_i})")
    x_all = frame.select(model.input_names)
    out = []
    for s in starts:
        s = int(s)
        if s < 0 or s + l_i > len(frame):
            raise WindowError(f"start {s} needs inputs up to sample {s + l_i - 1}, frame has {len(frame)}")
        out.append(SequenceForecast(s, l_i, model.predict_sequence(x_all[s:s + l_i])))
    return out


def stitch_overlapping(forecasts: Sequence[SequenceForecast], warmup: int = 0,
                       names: Sequence[str] = (), dt: float = 1.0, t0: float = 0.0) -> CompositeForecast:
    """Merge overlapping output sequences, skipping each one's first ``warmup`` rows.

    A sample takes its value from the latest sequence in which its offset is
    at least ``warmup``. Samples with no such sequence (the start of the
    horizon) fall back to the earliest sequence covering them.
    """
    if warmup < 0:
        raise ValueError("warmup must be >= 0")
    if not forecasts:
        raise ValueError("nothing to stitch")
    seqs = list(forecasts)
    if any(b.start < a.start for a, b in zip(seqs[:-1], seqs[1:])):
        raise ValueError("forecasts must be sorted by start")
    first = min(f.first for f in seqs)
    last = max(f.first + f.l_o - 1 for f in seqs)
    L = last - first + 1
    n = seqs[0].outputs.shape[1]
    values = np.full((L, n), np.nan)
    source = np.full(L, -1, dtype=np.int64)
    offset = np.full(L, -1, dtype=np.int64)
    # later sequences overwrite earlier ones on their settled part
    for k, f in enumerate(seqs):
        lo = f.first - first + warmup
        hi = f.first - first + f.l_o
        if lo < hi:
            values[lo:hi] = f.outputs[warmup:]
            source[lo:hi] = k
            offset[lo:hi] = np.arange(warmup, f.l_o)
    # fallback: earliest covering sequence for samples never settled
    for k, f in enumerate(seqs):
        lo = f.first - first
        rows = np.arange(lo, lo + f.l_o)
        todo = rows[source[rows] < 0]
        if todo.size:
            values[todo] = f.outputs[todo - lo]
            source[todo] = k
            offset[todo] = todo - lo
    missing = np.flatnonzero(source < 0)
    if missing.size:
        breaks = np.flatnonzero(np.diff(missing) > 1)
        a = np.r_[missing[0], missing[breaks + 1]] + first
        b = np.r_[missing[breaks], missing[-1]] + first
        raise CoverageGapError(zip(a.tolist(), b.tolist()))
    return CompositeForecast(first, values, source, offset, tuple(names), dt, t0)


def relative_forecasting_interval(l_o: int, dt: float, t0: float, tL: float) -> float:
    """Output-sequence duration as a percentage of the training interval."""
    if not tL > t0:
        raise ValueError("training interval must have positive length")
    return l_o * dt / (tL - t0) * 100.0


def peak_frequency(values: np.ndarray, dt: float) -> tuple[float, int]:
    """Frequency (and rfft bin) of the largest non-DC Fourier magnitude."""
    v = np.asarray(values, dtype=np.float64)
    if v.size < 2:
        raise ValueError("need at least 2 samples")
    spec = np.abs(np.fft.rfft(v - v.mean()))
    k = int(np.argmax(spec[1:])) + 1
    return k / (v.size * dt), k


@dataclass
class ForecastMetrics:
    names: tuple[str, ...]
    window: tuple[int, int]  # half-open sample range actually compared
    mse: dict[str, float]
    rmse: dict[str, float]
    peak_frequency: dict[str, float]
    truth_peak_frequency: dict[str, float]
    peak_bin: dict[str, int] = field(default_factory=dict)
    truth_peak_bin: dict[str, int] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return self.window[1] - self.window[0]

    @property
    def mean_mse(self) -> float:
        return float(np.mean(list(self.mse.values())))


def evaluate(composite: CompositeForecast, truth: TimeSeriesFrame,
             window: tuple[int, int] | None = None) -> ForecastMetrics:
    """Per-channel errors over samples present in both forecast and truth."""
    lo, hi = composite.first, composite.last + 1
    lo, hi = max(lo, 0), min(hi, len(truth))
    if window is not None:
        lo, hi = max(lo, window[0]), min(hi, window[1])
    if hi - lo < 2:
        raise ValueError(f"forecast and truth overlap on fewer than 2 samples ({lo}..{hi})")
    mse, rmse, pf, tpf, pb, tpb = {}, {}, {}, {}, {}, {}
    for j, name in enumerate(composite.names):
        f = composite.values[lo - composite.first:hi - composite.first, j]
        y = truth[name][lo:hi]
        mse[name] = float(np.mean((f - y) ** 2))
        rmse[name] = float(np.sqrt(mse[name]))
        pf[name], pb[name] = peak_frequency(f, truth.dt)
        tpf[name], tpb[name] = peak_frequency(y, truth.dt)
    return ForecastMetrics(tuple(composite.names), (lo, hi), mse, rmse, pf, tpf, pb, tpb)


def feedforward_series(model: FeedforwardModel, frame: TimeSeriesFrame, start: int, stop: int) -> CompositeForecast:
    """Next-sample baseline predictions for samples ``[start, stop)``.

    Prediction at ``t`` uses inputs ``[t - w, t)``. Past the end of the frame
    the baseline only continues if every input channel is also an output,
    feeding its own predictions back.
    """
    w = model.config.window_length
    if start < w:
        raise WindowError(f"first prediction at {start} needs {w} earlier samples")
    names = model.output_names
    autoregressive = set(model.input_names) <= set(names)
    if stop > len(frame) + 1 and not autoregressive:
        raise WindowError("cannot predict past the available inputs without autoregressive inputs")
    x = model.scale_inputs(frame.select(model.input_names))
    if stop > len(frame):
        x = np.vstack([x, np.full((stop - len(frame), x.shape[1]), np.nan)])
    col = [names.index(n) if n in names else -1 for n in model.input_names]
    values = np.empty((stop - start, len(names)))
    for r, t in enumerate(range(start, stop)):
        y = model.forward(x[t - w:t], keep_cache=False)[0]
        values[r] = y
        if t >= len(frame) and autoregressive:
            x[t] = [y[c] for c in col]
    values = model.unscale_outputs(values)
    return CompositeForecast(start, values, np.zeros(stop - start, dtype=np.int64),
                             np.zeros(stop - start, dtype=np.int64), tuple(names), frame.dt, frame.t0)


# ---------------------------------------------------------------------------
# end-to-end experiment


@dataclass
class ExperimentResult:
    model: object
    history: TrainingHistory
    composite: CompositeForecast
    train_metrics: ForecastMetrics
    test_metrics: ForecastMetrics
    seconds: float


def _prepare(frame, selection, train_stop):
    if not 0 < train_stop <= len(frame):
        raise ValueError(f"train_stop {train_stop} outside frame of length {len(frame)}")
    selection.validate(frame)
    names = list(dict.fromkeys((*selection.input_names, *selection.output_names)))
    stats = fit_normalizer(frame, (0, train_stop), names)
    return stats, normalize(frame, stats)


def run_lstm_experiment(frame: TimeSeriesFrame, selection: FeatureSelection, spec: WindowSpec,
                        protocol: TrainingProtocol, train_stop: int,
                        hidden_sizes: Sequence[int] = (10, 10, 10), forecast_shift: int | None = None,
                        warmup: int | None = None, test_window: tuple[int, int] | None = None) -> ExperimentResult:
    """Normalize, window, train and forecast the whole frame with one LSTM.

    Training uses samples ``[0, train_stop)`` only. The forecast is stitched
    from sequences shifted by ``forecast_shift`` (default ``l_i // 2``) with
    ``warmup`` (default = shift) leading rows discarded; test metrics cover
    ``test_window`` (default ``[train_stop, T)``).
    """
    tic = time.perf_counter()
    stats, norm = _prepare(frame, selection, train_stop)
    dataset = build_windows(norm.slice(0, train_stop), selection, spec)
    config = DeepLSTMConfig(len(selection.input_names), len(selection.output_names), tuple(hidden_sizes),
                            spec.l_i, spec.l_o)
    model = build_lstm(config, protocol.seed, normalizer=stats, input_names=selection.input_names,
                       output_names=selection.output_names)
    model, history = train(model, dataset, protocol)
    shift = spec.l_i // 2 if forecast_shift is None else forecast_shift
    warm = shift if warmup is None else warmup
    if shift + warm > spec.l_o:
        warm = spec.l_o - shift
    starts = sequence_starts(len(frame), spec.l_i, spec.l_o, shift)
    composite = stitch_overlapping(forecast_sequences(model, frame, starts), warm,
                                   selection.output_names, frame.dt, frame.t0)
    train_metrics = evaluate(composite, frame, (0, train_stop))
    test_metrics = evaluate(composite, frame, test_window or (train_stop, len(frame)))
    return ExperimentResult(model, history, composite, train_metrics, test_metrics, time.perf_counter() - tic)


def run_feedforward_experiment(frame: TimeSeriesFrame, selection: FeatureSelection, window_length: int,
                               protocol: TrainingProtocol, train_stop: int,
                               hidden_sizes: Sequence[int] = (10, 10, 10), output_steps: int = 1,
                               step: int = 1, forecast_shift: int | None = None, warmup: int | None = None,
                               test_window: tuple[int, int] | None = None) -> ExperimentResult:
    """Sliding-window baseline trained on ``[0, train_stop)``.

    With ``output_steps=1`` it predicts one sample ahead at every position.
    Otherwise it is trained on the same window arrays as the LSTM and its
    sequence forecasts are stitched exactly like the LSTM's.
    """
    tic = time.perf_counter()
    stats, norm = _prepare(frame, selection, train_stop)
    spec = WindowSpec(window_length, output_steps, step if output_steps > 1 else 1)
    dataset = build_windows(norm.slice(0, train_stop), selection, spec)
    config = FeedforwardConfig(window_length, len(selection.input_names), len(selection.output_names),
                               tuple(hidden_sizes), output_steps)
    model = build_ff(config, protocol.seed, normalizer=stats, input_names=selection.input_names,
                     output_names=selection.output_names)
    model, history = train(model, dataset, protocol)
    if output_steps == 1:
        composite = feedforward_series(model, frame, window_length, len(frame))
    else:
        shift = output_steps // 2 if forecast_shift is None else forecast_shift
        warm = min(shift if warmup is None else warmup, output_steps - shift)
        starts = sequence_starts(len(frame), window_length, output_steps, shift)
        composite = stitch_overlapping(forecast_sequences(model, frame, starts), warm,
                                       selection.output_names, frame.dt, frame.t0)
    train_metrics = evaluate(composite, frame, (0, train_stop))
    test_metrics = evaluate(composite, frame, test_window or (train_stop, len(frame)))
    return ExperimentResult(model, history, composite, train_metrics, test_metrics, time.perf_counter() - tic)


# ---------------------------------------------------------------------------
# gauge-count convergence study


@dataclass
class StudyRow:
    m: int
    channels: tuple[str, ...]
    train_mse: float = float("nan")
    test_mse: float = float("nan")
    seconds: float = 0.0
    error: str | None = None

    def line(self, timestamps: bool = True) -> str:
        sec = self.seconds if timestamps else 0.0
        err = "" if self.error is None else self.error.replace(",", ";").replace("\n", " ")
        return f"{self.m},{' '.join(self.channels)},{self.train_mse!r},{self.test_mse!r},{sec!r},{err}"


STUDY_HEADER = "m,channels,train_mse,test_mse,seconds,error"


def _study_row(args) -> StudyRow:
    frame, inputs, outputs, spec, protocol, train_stop, hidden, test_window = args
    try:
        res = run_lstm_experiment(frame, FeatureSelection(inputs, outputs), spec, protocol, train_stop,
                                  hidden, test_window=test_window)
        return StudyRow(len(inputs), tuple(inputs), res.train_metrics.mean_mse, res.test_metrics.mean_mse,
                        res.seconds)
    except Exception as exc:  # one failed row must not stop the study
        log.error("study row %s failed: %s", inputs, exc)
        return StudyRow(len(inputs), tuple(inputs), error=f"{type(exc).__name__}: {exc}")


def convergence_study(frame: TimeSeriesFrame, gauge_sets: Sequence[Sequence[str]], output_names: Sequence[str],
                      spec: WindowSpec, protocol: TrainingProtocol, train_stop: int,
                      hidden_sizes: Sequence[int] = (10, 10, 10), extra_inputs: Sequence[str] = (),
                      test_window: tuple[int, int] | None = None, parallel: bool = False,
                      max_workers: int | None = None) -> list[StudyRow]:
    """Train and evaluate one LSTM per input-channel set, same seed and protocol.

    ``extra_inputs`` (for example the liquid rate itself) are appended to
    every gauge set. Metric: MSE of the physical-unit forecast, averaged
    over output channels, on the test window.
    """
    for names in gauge_sets:
        missing = [n for n in (*names, *extra_inputs, *output_names) if n not in frame.channels]
        if missing:
            raise DataValidationError(f"unknown channels {missing}")
    jobs = [(frame, tuple(names) + tuple(extra_inputs), tuple(output_names), spec, protocol, train_stop,
             tuple(hidden_sizes), test_window) for names in gauge_sets]
    if parallel and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(_study_row, jobs))
    return [_study_row(job) for job in jobs]


def write_study_table(rows: Sequence[StudyRow], path, timestamps: bool = True) -> None:
    with open(path, "w") as fh:
        fh.write(STUDY_HEADER + "\n")
        for row in rows:
            fh.write(row.line(timestamps) + "\n")
