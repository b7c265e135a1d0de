"""Deep LSTM forecaster and the feedforward sliding-window baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DimensionError
from .nn import DenseNetwork, LSTMNetwork, init_weights, make_rng
from .windowing import NormalizerStats


@dataclass(frozen=True)
class DeepLSTMConfig:
    input_features: int
    output_features: int = 1
    hidden_sizes: tuple[int, ...] = (10, 10, 10)
    l_i: int = 1
    l_o: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ValueError("hidden_sizes must be a non-empty list of positive sizes")
        if self.input_features < 1 or self.output_features < 1:
            raise ValueError("feature counts must be positive")
        if self.l_i != self.l_o:
            raise ValueError(f"this architecture needs l_i == l_o (got {self.l_i}, {self.l_o})")


@dataclass(frozen=True)
class FeedforwardConfig:
    """Sliding-window regressor: ``window_length`` input rows to ``output_steps`` output rows.

    ``output_steps=1`` predicts the sample right after the window;
    ``output_steps=l_o`` learns the same window-to-window map as the LSTM.
    """

    window_length: int
    input_features: int
    output_features: int = 1
    hidden_sizes: tuple[int, ...] = (10, 10, 10)
    output_steps: int = 1

    def __post_init__(self):
        object.__setattr__(self, "hidden_sizes", tuple(int(h) for h in self.hidden_sizes))
        if not self.hidden_sizes or min(self.hidden_sizes) < 1:
            raise ValueError("hidden_sizes must be a non-empty list of positive sizes")
        if self.window_length < 1 or self.output_steps < 1:
            raise ValueError("window_length and output_steps must be >= 1")

    @property
    def l_i(self) -> int:
        return self.window_length

    @property
    def l_o(self) -> int:
        return self.output_steps


def count_params(config: DeepLSTMConfig | FeedforwardConfig) -> int:
    """Trainable parameter count from the configuration alone."""
    total = 0
    if isinstance(config, DeepLSTMConfig):
        prev = config.input_features
        for H in config.hidden_sizes:
            total += 4 * H * (prev + H + 1)
            prev = H
    else:
        prev = config.window_length * config.input_features
        for H in config.hidden_sizes:
            total += H * prev + H
            prev = H
        return total + (prev + 1) * config.output_features * config.output_steps
    return total + prev * config.output_features + config.output_features


class _RawUnitsMixin:
    normalizer: NormalizerStats | None
    input_names: tuple[str, ...]
    output_names: tuple[str, ...]

    def _require_normalizer(self) -> NormalizerStats:
        if self.normalizer is None:
            raise RuntimeError("model has no fitted normalizer; cannot work in physical units")
        return self.normalizer

    def scale_inputs(self, x: np.ndarray) -> np.ndarray:
        return self._require_normalizer().scale(x, self.input_names)

    def unscale_outputs(self, y: np.ndarray) -> np.ndarray:
        return self._require_normalizer().unscale(y, self.output_names)


class DeepLSTMModel(LSTMNetwork, _RawUnitsMixin):
    """Stacked LSTM with affine head plus the metadata needed to forecast."""

    kind = "lstm"

    def __init__(self, config: DeepLSTMConfig, params=None, *, seed: int | None = None,
                 normalizer: NormalizerStats | None = None,
                 input_names: Sequence[str] = (), output_names: Sequence[str] = ()):
        super().__init__(config.input_features, config.hidden_sizes, config.output_features, params)
        self.config = config
        self.seed = seed
        self.normalizer = normalizer
        self.input_names = tuple(input_names)
        self.output_names = tuple(output_names)

    @property
    def l_i(self) -> int:
        return self.config.l_i

    def predict_sequence(self, x_window: np.ndarray, raw: bool = True) -> np.ndarray:
        """Map one (l_i, m) input window to the (l_o, n) forecast that follows it."""
        x = np.asarray(x_window, dtype=np.float64)
        if x.shape != (self.config.l_i, self.config.input_features):
            raise DimensionError(
                f"expected window ({self.config.l_i}, {self.config.input_features}), got {x.shape}"
            )
        if raw:
            return self.unscale_outputs(self.forward(self.scale_inputs(x), keep_cache=False))
        return self.forward(x, keep_cache=False)


class FeedforwardModel(DenseNetwork, _RawUnitsMixin):
    """Dense tanh stack mapping a flattened input window to the next sample."""

    kind = "ff"

    def __init__(self, config: FeedforwardConfig, params=None, *, seed: int | None = None,
                 normalizer: NormalizerStats | None = None,
                 input_names: Sequence[str] = (), output_names: Sequence[str] = ()):
        super().__init__(config.window_length * config.input_features, config.hidden_sizes,
                         config.output_features * config.output_steps, params)
        self.config = config
        self.seed = seed
        self.normalizer = normalizer
        self.input_names = tuple(input_names)
        self.output_names = tuple(output_names)

    @property
    def l_i(self) -> int:
        return self.config.window_length

    def predict_sequence(self, x_window: np.ndarray, raw: bool = True) -> np.ndarray:
        """(output_steps, n) forecast following one (window_length, m) input window."""
        cfg = self.config
        x = np.asarray(x_window, dtype=np.float64)
        if x.shape != (cfg.window_length, cfg.input_features):
            raise DimensionError(f"expected window ({cfg.window_length}, {cfg.input_features}), got {x.shape}")
        if raw:
            x = self.scale_inputs(x)
        y = self.forward(x, keep_cache=False).reshape(cfg.output_steps, cfg.output_features)
        return self.unscale_outputs(y) if raw else y


def predict_window(model: FeedforwardModel, x_window: np.ndarray, raw: bool = False) -> np.ndarray:
    """Output vector (n,) for the sample right after ``x_window`` (window_length, m)."""
    return model.predict_sequence(x_window, raw=raw)[0]


def build_lstm(config: DeepLSTMConfig, rng: np.random.Generator | int, **meta) -> DeepLSTMModel:
    if isinstance(rng, (int, np.integer)):
        meta.setdefault("seed", int(rng))
        rng = make_rng(int(rng))
    model = DeepLSTMModel(config, **meta)
    init_weights(model.params, rng)
    return model


def build_ff(config: FeedforwardConfig, rng: np.random.Generator | int, **meta) -> FeedforwardModel:
    if isinstance(rng, (int, np.integer)):
        meta.setdefault("seed", int(rng))
        rng = make_rng(int(rng))
    model = FeedforwardModel(config, **meta)
    init_weights(model.params, rng)
    return model
