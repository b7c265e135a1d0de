"""Command-line front end: ``generate``, ``train``, ``forecast``, ``convergence``.

Every option can also come from a flat ``key = value`` config file
(``--config``); keys are the long option names with dashes or underscores.
Flags given on the command line win over the file.

Exit codes: 0 success, 1 runtime failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Sequence

from . import data as vdata
from .checkpoint import load_checkpoint, save_checkpoint
from .errors import VFMError
from .forecasting import (
    convergence_study,
    evaluate,
    feedforward_series,
    forecast_sequences,
    relative_forecasting_interval,
    sequence_starts,
    stitch_overlapping,
    write_study_table,
)
from .model import DeepLSTMConfig, FeedforwardConfig, build_ff, build_lstm
from .training import TrainingProtocol, train
from .windowing import (
    FeatureSelection,
    TimeSeriesFrame,
    WindowSpec,
    build_windows,
    fit_normalizer,
    normalize,
    resample_by_period,
)

log = logging.getLogger("vfmlstm")


class UsageError(Exception):
    """Bad or missing options; reported with exit code 2."""


# ---------------------------------------------------------------------------
# options: (name, parser, default); _REQUIRED marks mandatory ones


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in str(text).replace(",", " ").split())


def _names(text: str) -> tuple[str, ...]:
    return tuple(x for x in str(text).replace(",", " ").split())


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    value = str(text).strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


Option = tuple[str, Callable, object]
_REQUIRED = object()

SLUG_OPTS: list[Option] = [
    ("duration", float, _REQUIRED), ("dt", float, 1.0), ("period", float, 120.0), ("duty", float, 0.75),
    ("gauge-count", int, 7), ("gauge-phase-lag", float, 15.0), ("period-jitter", float, 0.0),
    ("noise-std", float, 0.02),
]
TRAIN_OPTS: list[Option] = [
    ("data", str, _REQUIRED), ("inputs", _names, _REQUIRED), ("outputs", _names, _REQUIRED),
    ("l-i", int, _REQUIRED), ("l-o", int, 0), ("step", int, 1), ("train-stop", int, 0),
    ("train-periods", int, 0), ("resample", float, 0.0), ("model", str, "lstm"),
    ("hidden", _ints, (10, 10, 10)), ("epochs", int, 10), ("validation-fraction", float, 0.05),
    ("lr", float, 1e-3), ("beta1", float, 0.9), ("beta2", float, 0.999), ("epsilon", float, 1e-8),
]
FORECAST_OPTS: list[Option] = [
    ("checkpoint", str, _REQUIRED), ("data", str, _REQUIRED), ("truth", str, ""), ("resample", float, 0.0),
    ("mode", str, "overlapping"), ("shift", int, 0), ("warmup", int, -1), ("test-start", int, 0),
    ("train-stop", int, 0),
]
CONVERGENCE_OPTS: list[Option] = [
    ("data", str, _REQUIRED), ("gauges", _names, ()), ("gauge-count", int, 7),
    ("outputs", _names, ("liquid_rate",)), ("extra-inputs", _names, ()), ("l-i", int, 187), ("step", int, 1),
    ("train-stop", int, _REQUIRED), ("hidden", _ints, (10, 10, 10)), ("epochs", int, 10),
    ("validation-fraction", float, 0.05), ("parallel", _bool, False), ("workers", int, 0),
]


def read_config(path) -> dict[str, str]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}, line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("_", "-")] = value
    return out


def _add_options(parser: argparse.ArgumentParser, options: Sequence[Option]) -> None:
    for name, _, default in options:
        help_ = "required" if default is _REQUIRED else f"default {default}"
        if name == "parallel":
            parser.add_argument("--parallel", action="store_const", const=True, default=None, help=help_)
        else:
            parser.add_argument(f"--{name}", default=None, metavar=name.upper().replace("-", "_"), help=help_)


def _resolve(args: argparse.Namespace, options: Sequence[Option], config: dict[str, str]) -> dict[str, object]:
    out = {}
    for name, kind, default in options:
        raw = getattr(args, name.replace("-", "_"))
        if raw is None:
            raw = config.get(name)
        if raw is None:
            if default is _REQUIRED:
                raise UsageError(f"missing required option --{name}")
            out[name] = default
            continue
        try:
            out[name] = kind(raw)
        except ValueError as exc:
            raise UsageError(f"bad value for --{name}: {raw!r} ({exc})") from None
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value file; flags override it")
    common.add_argument("--seed", type=int, default=None, help="random seed (required except for forecast)")
    common.add_argument("-o", "--out", default=None, help="output directory (default .)")
    common.add_argument("--no-timestamps", action="store_true",
                        help="zero wall-clock fields and drop times from log lines")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="vfmlstm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset CSV")
    gen_sub = gen.add_subparsers(dest="dataset", required=True)
    slug = gen_sub.add_parser("slugging", parents=[common], help="severe-slugging riser signals")
    _add_options(slug, SLUG_OPTS)
    gen_sub.add_parser("welltest", parents=[common], help="5-period well-test log")

    _add_options(sub.add_parser("train", parents=[common], help="train a model, write checkpoint + history"),
                 TRAIN_OPTS)
    _add_options(sub.add_parser("forecast", parents=[common], help="stitched forecast, metrics, plot data"),
                 FORECAST_OPTS)
    _add_options(sub.add_parser("convergence", parents=[common], help="gauge-count study table"),
                 CONVERGENCE_OPTS)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _out_dir(args, config) -> Path:
    out = Path(args.out or config.get("out") or ".")
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    return out


def _seed(args, config) -> int:
    if args.seed is not None:
        return args.seed
    if "seed" not in config:
        raise UsageError("missing required option --seed")
    try:
        return int(config["seed"])
    except ValueError:
        raise UsageError(f"bad seed {config['seed']!r}") from None


def load_frame(path, resample: float = 0.0) -> TimeSeriesFrame:
    """Uniform CSV as is; with ``resample > 0`` resample each flow period onto that step."""
    if resample > 0:
        return resample_by_period(vdata.read_series_csv(path), resample)
    return vdata.read_frame_csv(path)


def _train_stop(frame: TimeSeriesFrame, stop: int, periods: int) -> int:
    if stop and periods:
        raise UsageError("give either --train-stop or --train-periods, not both")
    if periods:
        bounds = frame.period_bounds()
        if periods not in bounds:
            raise VFMError(f"data has no flow period {periods}")
        return bounds[periods][1]
    return stop or len(frame)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# commands


def cmd_generate(args, config) -> int:
    out = _out_dir(args, config)
    seed = _seed(args, config)
    if args.dataset == "slugging":
        o = _resolve(args, SLUG_OPTS, config)
        params = vdata.SlugGenParams(period=o["period"], duty=o["duty"], gauge_count=o["gauge-count"],
                                     gauge_phase_lag=o["gauge-phase-lag"], period_jitter=o["period-jitter"],
                                     noise_std=o["noise-std"], seed=seed)
        frame = vdata.generate_slugging(params, o["duration"], o["dt"])
        path = out / "slugging.csv"
        vdata.write_frame_csv(frame, path)
        log.info("wrote %s (%d rows)", path, len(frame))
    else:
        series = vdata.generate_well_test(vdata.WellTestParams(seed=seed))
        path = out / "welltest.csv"
        vdata.write_frame_csv(series, path)
        log.info("wrote %s (%d records, %d flow periods)", path, len(series), len(set(series.flow_period)))
    return 0


def cmd_train(args, config) -> int:
    o = _resolve(args, TRAIN_OPTS, config)
    out = _out_dir(args, config)
    seed = _seed(args, config)
    frame = load_frame(o["data"], o["resample"])
    stop = _train_stop(frame, o["train-stop"], o["train-periods"])
    selection = FeatureSelection(o["inputs"], o["outputs"])
    l_i = o["l-i"]
    if o["model"] not in ("lstm", "ff"):
        raise UsageError("--model must be lstm or ff")
    l_o = o["l-o"] or (l_i if o["model"] == "lstm" else 1)
    protocol = TrainingProtocol(epochs=o["epochs"], validation_fraction=o["validation-fraction"], seed=seed,
                                lr=o["lr"], beta1=o["beta1"], beta2=o["beta2"], epsilon=o["epsilon"])
    selection.validate(frame)
    names = list(dict.fromkeys((*selection.input_names, *selection.output_names)))
    stats = fit_normalizer(frame, (0, stop), names)
    spec = WindowSpec(l_i, l_o, o["step"])
    dataset = build_windows(normalize(frame, stats).slice(0, stop), selection, spec)
    meta = dict(normalizer=stats, input_names=selection.input_names, output_names=selection.output_names)
    m, n = len(selection.input_names), len(selection.output_names)
    if o["model"] == "lstm":
        model = build_lstm(DeepLSTMConfig(m, n, o["hidden"], l_i, l_o), seed, **meta)
    else:
        model = build_ff(FeedforwardConfig(l_i, m, n, o["hidden"], l_o), seed, **meta)
    log.info("%s model, %d parameters, %d windows, f = %.2f%%", o["model"], model.n_params, len(dataset),
             relative_forecasting_interval(l_o, frame.dt, frame.t0, frame.t0 + stop * frame.dt))
    model, history = train(model, dataset, protocol)
    save_checkpoint(model, out / "model.ckpt")
    history.write(out / "history.csv", timestamps=not args.no_timestamps)
    log.info("wrote %s and %s", out / "model.ckpt", out / "history.csv")
    return 0


def cmd_forecast(args, config) -> int:
    o = _resolve(args, FORECAST_OPTS, config)
    out = _out_dir(args, config)
    model = load_checkpoint(o["checkpoint"])
    frame = load_frame(o["data"], o["resample"])
    cfg = model.config
    l_i, l_o = cfg.l_i, cfg.l_o
    if o["mode"] not in ("overlapping", "non-overlapping"):
        raise UsageError("--mode must be overlapping or non-overlapping")
    if model.kind == "ff" and l_o == 1:
        composite = feedforward_series(model, frame, l_i, len(frame))
    else:
        overlapping = o["mode"] == "overlapping"
        # non-overlapping: output windows tile the horizon back to back
        shift = o["shift"] or (max(l_o // 2, 1) if overlapping else l_o)
        warmup = o["warmup"] if o["warmup"] >= 0 else (min(shift, l_o - shift) if overlapping else 0)
        if overlapping and shift + warmup > l_o:
            raise UsageError(f"shift {shift} + warmup {warmup} exceeds l_o = {l_o}; the stitch would have gaps")
        starts = sequence_starts(len(frame), l_i, l_o, shift)
        if not starts:
            raise VFMError(f"data has {len(frame)} samples, fewer than one sequence (l = {l_i + l_o})")
        sequences = forecast_sequences(model, frame, starts)
        if overlapping:
            composite = stitch_overlapping(sequences, warmup, model.output_names, frame.dt, frame.t0)
        else:
            seq_dir = out / "sequences"
            seq_dir.mkdir(exist_ok=True)
            for k, seq in enumerate(sequences):
                with open(seq_dir / f"sequence_{k:03d}.csv", "w") as fh:
                    fh.write("time," + ",".join(model.output_names) + "\n")
                    for i, row in zip(seq.samples, seq.outputs):
                        fh.write(_fmt(frame.t0 + frame.dt * i) + "," + ",".join(_fmt(v) for v in row) + "\n")
            log.info("wrote %d sequence files to %s", len(sequences), seq_dir)
            if shift == l_o:
                composite = stitch_overlapping(sequences, 0, model.output_names, frame.dt, frame.t0)
            else:
                composite = None
                log.warning("sequences do not tile the horizon; no composite written")
    truth = None
    if o["truth"]:
        if Path(o["truth"]).exists():
            truth = load_frame(o["truth"], o["resample"])
        else:
            log.warning("truth file %s not found; metrics skipped", o["truth"])
    else:
        log.warning("no --truth given; metrics skipped")
    if composite is not None:
        for name in model.output_names:
            vdata.write_plot_data(composite, truth, out / f"forecast_{name}.csv", channel=name)
    if truth is not None and composite is not None:
        lines = []
        windows = {"all": None}
        test_start = o["test-start"] or o["train-stop"]
        if test_start:
            windows = {"train": (0, test_start), "test": (test_start, len(truth))}
        for label, window in windows.items():
            try:
                metrics = evaluate(composite, truth, window)
            except ValueError as exc:
                log.warning("no %s metrics: %s", label, exc)
                continue
            lines.append(f"{label}.window = {metrics.window[0]} {metrics.window[1]}")
            for name in metrics.names:
                lines += [f"{label}.{name}.mse = {_fmt(metrics.mse[name])}",
                          f"{label}.{name}.rmse = {_fmt(metrics.rmse[name])}",
                          f"{label}.{name}.peak_frequency = {_fmt(metrics.peak_frequency[name])}",
                          f"{label}.{name}.truth_peak_frequency = {_fmt(metrics.truth_peak_frequency[name])}"]
        (out / "metrics.txt").write_text("\n".join(lines) + "\n")
        log.info("wrote %s", out / "metrics.txt")
    return 0


def cmd_convergence(args, config) -> int:
    o = _resolve(args, CONVERGENCE_OPTS, config)
    out = _out_dir(args, config)
    seed = _seed(args, config)
    frame = load_frame(o["data"])
    gauges = o["gauges"] or tuple(vdata.gauge_names(o["gauge-count"]))
    gauge_sets = [gauges[:m] for m in range(1, len(gauges) + 1)]
    protocol = TrainingProtocol(epochs=o["epochs"], validation_fraction=o["validation-fraction"], seed=seed)
    spec = WindowSpec(o["l-i"], o["l-i"], o["step"])
    rows = convergence_study(frame, gauge_sets, o["outputs"], spec, protocol, o["train-stop"], o["hidden"],
                             extra_inputs=o["extra-inputs"], parallel=o["parallel"],
                             max_workers=o["workers"] or None)
    write_study_table(rows, out / "study.csv", timestamps=not args.no_timestamps)
    ok = sum(r.error is None for r in rows)
    log.info("wrote %s (%d of %d rows succeeded; gauge order %s)", out / "study.csv", ok, len(rows),
             " ".join(gauges))
    return 0 if ok else 1


COMMANDS = {"generate": cmd_generate, "train": cmd_train, "forecast": cmd_forecast,
            "convergence": cmd_convergence}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse: 0 for --help, 2 for usage errors
        return int(exc.code or 0)
    fmt = "%(levelname)s %(message)s" if args.no_timestamps else "%(asctime)s %(levelname)s %(message)s"
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=fmt)
    try:
        config = read_config(args.config) if args.config else {}
        return COMMANDS[args.command](args, config)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"vfmlstm: error: {exc}", file=sys.stderr)
        return 2
    except (VFMError, OSError, ValueError, KeyError) as exc:
        print(f"vfmlstm: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
