"""Plain-text model checkpoints.

Layout::

    VFMNN v1
    kind lstm
    input_features 1
    ...
    normalizer p1 <min> <max>
    end_config
    param lstm0.W_x 40 1 <values...>
    ...

Floats are written with 17 significant digits, so a load/save cycle is
bitwise exact in double precision.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import CheckpointFormatError, CheckpointShapeError, CheckpointVersionError
from .model import DeepLSTMConfig, DeepLSTMModel, FeedforwardConfig, FeedforwardModel
from .nn import ParamSet
from .windowing import NormalizerStats

HEADER = "VFMNN v1"


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def dumps(model) -> str:
    cfg = model.config
    lines = [HEADER, f"kind {model.kind}"]
    if model.kind == "lstm":
        lines += [f"input_features {cfg.input_features}", f"l_i {cfg.l_i}", f"l_o {cfg.l_o}"]
    else:
        lines += [f"input_features {cfg.input_features}", f"window_length {cfg.window_length}",
                  f"output_steps {cfg.output_steps}"]
    lines += [
        f"output_features {cfg.output_features}",
        "hidden_sizes " + " ".join(str(h) for h in cfg.hidden_sizes),
        f"seed {'none' if model.seed is None else model.seed}",
        "input_names " + " ".join(model.input_names),
        "output_names " + " ".join(model.output_names),
    ]
    if model.normalizer is not None:
        for name in model.normalizer.names:
            lines.append(f"normalizer {name} {_fmt(model.normalizer.minimum[name])} "
                         f"{_fmt(model.normalizer.maximum[name])}")
    lines.append("end_config")
    for name, value in model.params.items():
        shape = " ".join(str(d) for d in value.shape)
        lines.append(f"param {name} {value.ndim} {shape} " + " ".join(_fmt(v) for v in value.ravel()))
    return "\n".join(lines) + "\n"


def save_checkpoint(model, path) -> None:
    Path(path).write_text(dumps(model))


def _int(value: str, what: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise CheckpointFormatError(f"{what}: expected integer, got {value!r}") from None


def loads(text: str):
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        got = lines[0].strip() if lines else "<empty>"
        raise CheckpointVersionError(f"unsupported checkpoint header {got!r}, expected {HEADER!r}")
    cfg: dict[str, list[str]] = {}
    norm_min, norm_max = {}, {}
    pos = 1
    while True:
        if pos >= len(lines):
            raise CheckpointFormatError("missing end_config line")
        parts = lines[pos].split()
        pos += 1
        if not parts:
            continue
        if parts[0] == "end_config":
            break
        if parts[0] == "normalizer":
            if len(parts) != 4:
                raise CheckpointFormatError(f"line {pos}: malformed normalizer entry")
            try:
                norm_min[parts[1]], norm_max[parts[1]] = float(parts[2]), float(parts[3])
            except ValueError:
                raise CheckpointFormatError(f"line {pos}: bad normalizer value") from None
        else:
            cfg[parts[0]] = parts[1:]
    try:
        kind = cfg["kind"][0]
        hidden = tuple(_int(h, "hidden_sizes") for h in cfg["hidden_sizes"])
        m = _int(cfg["input_features"][0], "input_features")
        n = _int(cfg["output_features"][0], "output_features")
        seed_txt = cfg["seed"][0]
        inputs, outputs = cfg.get("input_names", []), cfg.get("output_names", [])
        if kind == "lstm":
            config = DeepLSTMConfig(m, n, hidden, _int(cfg["l_i"][0], "l_i"), _int(cfg["l_o"][0], "l_o"))
            cls = DeepLSTMModel
        elif kind == "ff":
            config = FeedforwardConfig(_int(cfg["window_length"][0], "window_length"), m, n, hidden,
                                       _int(cfg["output_steps"][0], "output_steps"))
            cls = FeedforwardModel
        else:
            raise CheckpointFormatError(f"unknown model kind {kind!r}")
    except (KeyError, IndexError) as exc:
        raise CheckpointFormatError(f"missing config field {exc}") from None
    except ValueError as exc:
        raise CheckpointFormatError(f"invalid config: {exc}") from None
    seed = None if seed_txt == "none" else _int(seed_txt, "seed")
    normalizer = NormalizerStats(norm_min, norm_max) if norm_min else None
    model = cls(config, seed=seed, normalizer=normalizer, input_names=inputs, output_names=outputs)

    expected = dict(model.params.specs())
    seen = set()
    for lineno, line in enumerate(lines[pos:], start=pos + 1):
        parts = line.split()
        if not parts:
            continue
        if parts[0] != "param" or len(parts) < 3:
            raise CheckpointFormatError(f"line {lineno}: expected a param record")
        name = parts[1]
        ndim = _int(parts[2], f"line {lineno} ndim")
        shape = tuple(_int(d, f"line {lineno} shape") for d in parts[3:3 + ndim])
        raw = parts[3 + ndim:]
        if name not in expected:
            raise CheckpointShapeError(f"line {lineno}: unexpected tensor {name!r}")
        if shape != expected[name]:
            raise CheckpointShapeError(f"tensor {name}: stored shape {shape}, config implies {expected[name]}")
        if len(raw) != int(np.prod(shape)):
            raise CheckpointShapeError(f"tensor {name}: {len(raw)} values for shape {shape}")
        try:
            values = np.array([float(v) for v in raw], dtype=np.float64)
        except ValueError:
            raise CheckpointFormatError(f"line {lineno}: non-numeric value in {name}") from None
        model.params[name][...] = values.reshape(shape)
        seen.add(name)
    missing = set(expected) - seen
    if missing:
        raise CheckpointShapeError(f"missing tensors {sorted(missing)}")
    return model


def load_checkpoint(path):
    return loads(Path(path).read_text())
