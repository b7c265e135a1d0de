import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vfmlstm.errors import CoverageGapError, DataValidationError, WindowError
from vfmlstm.forecasting import (
    CompositeForecast,
    SequenceForecast,
    StudyRow,
    convergence_study,
    evaluate,
    feedforward_series,
    forecast_sequences,
    peak_frequency,
    relative_forecasting_interval,
    sequence_starts,
    stitch_overlapping,
)
from vfmlstm.model import DeepLSTMConfig, FeedforwardConfig, build_ff, build_lstm
from vfmlstm.training import TrainingProtocol
from vfmlstm.windowing import FeatureSelection, NormalizerStats, TimeSeriesFrame, WindowSpec


def const_forecasts(starts, l_i, l_o, values=None):
    values = range(len(starts)) if values is None else values
    return [SequenceForecast(s, l_i, np.full((l_o, 1), float(v))) for s, v in zip(starts, values)]


def labelled_forecasts(starts, l_i, l_o):
    """Row r of sequence k stores (k, r) so provenance can be read back from values."""
    return [SequenceForecast(s, l_i, np.array([[k * 10_000 + r] for r in range(l_o)], dtype=float))
            for k, s in enumerate(starts)]


class TestSequences:
    def test_fifteen_non_overlapping(self):
        starts = sequence_starts(3000, 187, 187, 187)
        assert len(starts) == 15
        assert starts[:3] == [0, 187, 374] and starts[-1] + 374 <= 3000

    def test_overlap_of_94(self):
        starts = sequence_starts(3000, 187, 187, 93)
        fc = const_forecasts(starts, 187, 187)
        a, b = fc[0].samples, fc[1].samples
        assert len(np.intersect1d(a, b)) == 94

    def test_model_sequences(self):
        stats = NormalizerStats({"p": 0.0, "q": 0.0}, {"p": 1.0, "q": 2.0})
        model = build_lstm(DeepLSTMConfig(1, 1, (3,), 5, 5), 0, normalizer=stats,
                           input_names=("p",), output_names=("q",))
        frame = TimeSeriesFrame({"p": np.linspace(0, 1, 30), "q": np.zeros(30)})
        assert forecast_sequences(model, frame, []) == []
        out = forecast_sequences(model, frame, [0, 10, 25])
        assert [f.first for f in out] == [5, 15, 30]
        np.testing.assert_array_equal(out[1].outputs, model.predict_sequence(frame["p"][10:15, None]))
        with pytest.raises(WindowError):
            forecast_sequences(model, frame, [26])
        with pytest.raises(ValueError):
            forecast_sequences(model, frame, [0], WindowSpec(4, 4))


class TestStitch:
    def test_single_sequence(self):
        f = SequenceForecast(3, 4, np.arange(8.0).reshape(4, 2))
        comp = stitch_overlapping([f], 0)
        assert comp.first == 7
        np.testing.assert_array_equal(comp.values, f.outputs)
        np.testing.assert_array_equal(comp.source, 0)

    @pytest.mark.parametrize("s,w", [(3, 0), (3, 2), (5, 3), (1, 1)])
    def test_two_constant_sequences(self, s, w):
        l_i, l_o = 6, 8
        comp = stitch_overlapping(const_forecasts([0, s], l_i, l_o, [1.0, 2.0]), w)
        expect = np.where(comp.samples <= l_i + s + w - 1, 1.0, 2.0)
        np.testing.assert_array_equal(comp.values[:, 0], expect)

    def test_half_shift_geometry(self):
        s = 93
        comp = stitch_overlapping(labelled_forecasts(sequence_starts(3000, 186, 186, s), 186, 186), s)
        late = comp.samples >= comp.first + s
        assert np.all(comp.offset[late] >= s)
        assert np.all(comp.offset[~late] == np.arange(s))
        np.testing.assert_array_equal(comp.values[:, 0], comp.source * 10_000 + comp.offset)

    def test_gap_error_lists_ranges(self):
        fc = const_forecasts([0, 10, 30], 2, 5)
        with pytest.raises(CoverageGapError, match=r"7.*11") as err:
            stitch_overlapping(fc, 0)
        assert err.value.gaps == [(7, 11), (17, 31)]

    def test_rejects_bad_input(self):
        with pytest.raises(ValueError):
            stitch_overlapping([], 0)
        with pytest.raises(ValueError):
            stitch_overlapping(const_forecasts([5, 0], 2, 5), 0)
        with pytest.raises(ValueError):
            stitch_overlapping(const_forecasts([0], 2, 5), -1)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 20), st.data())
    def test_provenance_and_coverage(self, l_i, data):
        l_o = l_i
        w = data.draw(st.integers(0, l_o - 1))
        s = data.draw(st.integers(1, l_o - w))
        count = data.draw(st.integers(1, 8))
        starts = [3 + k * s for k in range(count)]
        comp = stitch_overlapping(labelled_forecasts(starts, l_i, l_o), w)
        assert comp.first == starts[0] + l_i and comp.last == starts[-1] + l_i + l_o - 1
        late = comp.samples >= comp.first + w
        assert np.all(comp.offset[late] >= w)
        np.testing.assert_array_equal(comp.values[:, 0], comp.source * 10_000 + comp.offset)
        # latest settled sequence wins
        for r, t in enumerate(comp.samples):
            settled = [k for k, st_ in enumerate(starts) if st_ + l_i + w <= t < st_ + l_i + l_o]
            if settled:
                assert comp.source[r] == max(settled)


class TestRelativeInterval:
    def test_slugging_value(self):
        assert relative_forecasting_interval(187, 1.0, 0.0, 1500.0) == pytest.approx(12.4666666667)

    def test_full_interval(self):
        assert relative_forecasting_interval(50, 2.0, 10.0, 110.0) == 100.0

    @given(st.integers(1, 10_000), st.floats(1e-3, 1e3), st.floats(1.0, 1e6), st.floats(1e-3, 1e3))
    def test_scale_invariance(self, l_o, dt, length, k):
        a = relative_forecasting_interval(l_o, dt, 0.0, length)
        b = relative_forecasting_interval(l_o, dt * k, 0.0, length * k)
        assert a == pytest.approx(b, rel=1e-12)

    def test_rejects_empty_interval(self):
        with pytest.raises(ValueError):
            relative_forecasting_interval(1, 1.0, 5.0, 5.0)


class TestEvaluate:
    def truth(self, T=200, dt=1.0):
        t = np.arange(T) * dt
        return TimeSeriesFrame({"q": np.sin(2 * np.pi * t / 25.0)}, dt=dt)

    def composite(self, values, first=0):
        L = len(values)
        return CompositeForecast(first, np.asarray(values, float)[:, None], np.zeros(L, int), np.zeros(L, int), ("q",))

    def test_exact_forecast(self):
        truth = self.truth()
        m = evaluate(self.composite(truth["q"]), truth)
        assert m.mse["q"] == 0.0 and m.rmse["q"] == 0.0

    @pytest.mark.parametrize("c", [0.5, -3.0])
    def test_constant_offset(self, c):
        truth = self.truth()
        m = evaluate(self.composite(truth["q"] + c), truth)
        assert m.mse["q"] == pytest.approx(c * c, rel=1e-12)
        assert m.rmse["q"] == pytest.approx(abs(c), rel=1e-12)

    def test_phase_shifted_sinusoid_same_peak(self):
        truth = self.truth(T=200, dt=0.5)
        t = truth.time
        m = evaluate(self.composite(0.7 * np.sin(2 * np.pi * t / 25.0 + 1.3)), truth)
        # 100 s of data, period 25 s -> bin 4
        assert m.peak_bin["q"] == m.truth_peak_bin["q"] == 4
        assert m.peak_frequency["q"] == m.truth_peak_frequency["q"] == pytest.approx(1 / 25.0)

    def test_overlap_only(self):
        truth = self.truth(T=100)
        comp = self.composite(np.zeros(60), first=70)
        m = evaluate(comp, truth)
        assert m.window == (70, 100)
        assert m.mse["q"] == pytest.approx(np.mean(truth["q"][70:] ** 2))
        with pytest.raises(ValueError):
            evaluate(self.composite(np.zeros(5), first=150), truth)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 150), st.integers(2, 50))
    def test_window_locality(self, lo, width):
        truth = self.truth()
        f = np.random.default_rng(lo).normal(size=200)
        full = self.composite(f)
        sub = self.composite(f[lo:lo + width], first=lo)
        a = evaluate(full, truth, (lo, lo + width))
        b = evaluate(sub, truth)
        assert a.window == b.window and a.mse == b.mse and a.peak_bin == b.peak_bin

    def test_peak_frequency_requires_samples(self):
        with pytest.raises(ValueError):
            peak_frequency([1.0], 1.0)


class TestFeedforwardSeries:
    def model(self, inputs, outputs):
        stats = NormalizerStats({"a": 0.0, "b": 0.0}, {"a": 1.0, "b": 1.0})
        model = build_ff(FeedforwardConfig(3, len(inputs), len(outputs), (4,)), 1, normalizer=stats,
                         input_names=inputs, output_names=outputs)
        return model

    def test_predictions_use_preceding_window(self):
        frame = TimeSeriesFrame({"a": np.linspace(0, 1, 20), "b": np.zeros(20)})
        model = self.model(("a",), ("b",))
        comp = feedforward_series(model, frame, 3, 20)
        assert comp.first == 3 and len(comp) == 17
        y = model.forward(frame["a"][9:12, None], keep_cache=False)[0]
        np.testing.assert_array_equal(comp.values[12 - 3], y)

    def test_stops_without_autoregressive_inputs(self):
        frame = TimeSeriesFrame({"a": np.linspace(0, 1, 20), "b": np.zeros(20)})
        with pytest.raises(WindowError):
            feedforward_series(self.model(("a",), ("b",)), frame, 3, 25)
        comp = feedforward_series(self.model(("a",), ("a", "b")), frame, 3, 25)
        assert len(comp) == 22 and np.all(np.isfinite(comp.values))


class TestConvergenceStudy:
    def frame(self):
        t = np.arange(120.0)
        return TimeSeriesFrame({"p1": np.sin(t / 5), "p2": np.cos(t / 5), "q": np.sin(t / 5 + 0.5)})

    def test_rows_and_determinism(self):
        spec, prot = WindowSpec(8, 8, 2), TrainingProtocol(epochs=1, seed=3)
        rows = convergence_study(self.frame(), [("p1",), ("p1", "p2"), ("p1",)], ("q",), spec, prot, 80,
                                 hidden_sizes=(3,))
        assert [r.m for r in rows] == [1, 2, 1]
        assert rows[0].test_mse == rows[2].test_mse and rows[0].train_mse == rows[2].train_mse
        assert all(r.error is None and np.isfinite(r.test_mse) for r in rows)

    def test_failed_row_is_recorded(self):
        spec, prot = WindowSpec(30, 30, 1), TrainingProtocol(epochs=1)
        rows = convergence_study(self.frame(), [("p1",), ("p1", "p2")], ("q",), spec, prot, 80,
                                 hidden_sizes=(2,), test_window=(80, 120))
        assert all(r.error is None for r in rows)
        rows = convergence_study(self.frame(), [("p1",)], ("q",), WindowSpec(50, 50, 1), prot, 80,
                                 hidden_sizes=(2,))
        assert rows[0].error and "shorter than one sequence" in rows[0].error
        assert np.isnan(rows[0].test_mse)
        assert rows[0].line(timestamps=False).startswith("1,p1,nan,nan,0.0,WindowError")

    def test_unknown_channel(self):
        with pytest.raises(DataValidationError):
            convergence_study(self.frame(), [("p9",)], ("q",), WindowSpec(4, 4), TrainingProtocol(), 80)

    def test_row_format(self):
        row = StudyRow(2, ("p1", "p2"), 0.5, 0.25, 3.0)
        assert row.line() == "2,p1 p2,0.5,0.25,3.0,"
