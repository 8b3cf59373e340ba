"""Signal files, run configuration files and result CSVs.

Signal files are UTF-8 text, one decimal sample per line; blank lines and
lines starting with ``#`` are skipped. Config files are flat ``key = value``
text with ``#`` comments. Unknown keys are an error.
"""

from __future__ import annotations

import csv
import io
import re
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from .errors import FormatError
from .experiments import (
    DEFAULT_RATIOS,
    Lambda2Scale,
    Method,
    SignalSource,
    SourceKind,
    TrialSpec,
)
from .solvers import DEFAULT_LAMBDA2, SolverConfig

__all__ = [
    "read_signal_file",
    "write_signal_file",
    "write_sweep_csv",
    "format_sweep_csv",
    "CSV_HEADER",
    "RunConfig",
    "parse_config",
    "serialize_config",
    "load_config",
]

CSV_HEADER = ("method", "ratio", "mean_rmse", "stddev_rmse", "mean_seconds", "trials_ok")

_DECIMAL = re.compile(r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")


def read_signal_file(path):
    """Samples of a one-per-line text file, in file order, as a float array."""
    try:
        text = Path(path).read_bytes().decode("utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8") from exc
    values = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not _DECIMAL.fullmatch(line):
            raise FormatError(f"not a decimal number: {line!r}", line=lineno)
        values.append(float(line))
    if not values:
        raise FormatError(f"{path}: no samples")
    return np.array(values)


def write_signal_file(samples, path=None):
    """Write samples one per line with round-trip precision.

    Returns the text; writes it to ``path`` when one is given.
    """
    text = "".join(f"{float(v)!r}\n" for v in np.asarray(samples).ravel())
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def _num(v):
    return f"{v:.9g}"


def format_sweep_csv(result, timing=False):
    buf = io.StringIO()
    out = csv.writer(buf, lineterminator="\n")
    out.writerow(CSV_HEADER)
    for method, ratio, cell in result.rows():
        out.writerow([
            method.value,
            _num(ratio),
            _num(cell.mean_rmse),
            _num(cell.stddev_rmse),
            _num(cell.mean_seconds) if timing else "nan",
            cell.trials_ok,
        ])
    return buf.getvalue()


def write_sweep_csv(result, path, timing=False):
    """One row per (method, ratio), method-major.

    Wall-clock times vary between runs, so ``mean_seconds`` is written as
    ``nan`` unless ``timing`` is set; with it unset the file is byte-stable
    for a fixed configuration.
    """
    Path(path).write_bytes(format_sweep_csv(result, timing).encode("utf-8"))


def _opt(parse):
    def inner(text):
        return None if text == "" else parse(text)
    return inner


def _fmt_opt(fmt):
    def inner(v):
        return "" if v is None else fmt(v)
    return inner


def _parse_bool(text):
    low = text.lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_ratios(text):
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_methods(text):
    return tuple(Method.parse(t) for t in text.split(",") if t.strip())


_float = (float, repr)
_int = (int, str)
_str = (_opt(str), _fmt_opt(str))


@dataclass(frozen=True)
class RunConfig:
    n: int = 512
    ratios: tuple = DEFAULT_RATIOS
    trial_count: int = 40
    epsilon_frac: float = 0.05
    lambda2: float = DEFAULT_LAMBDA2
    lambda2_scale: Lambda2Scale = Lambda2Scale.SQRT_N
    methods: tuple = tuple(Method)
    base_seed: int = 0
    source: SourceKind = SourceKind.DUAL_SPARSE
    k_time: int | None = None
    k_freq: int = 3
    burst_width: int | None = None
    noise_floor: float = 0.0
    source_seed: int = 0
    input: str | None = None
    out_csv: str | None = None
    rho: float = 1.0
    max_iters: int = 20000
    abs_tol: float = 1e-7
    rel_tol: float = 1e-5
    over_relaxation: float = 1.6
    adaptive_rho: bool = True
    workers: int = 1
    timing: bool = False

    def __post_init__(self):
        object.__setattr__(self, "ratios", tuple(float(r) for r in self.ratios))
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "source", SourceKind(self.source))
        object.__setattr__(self, "lambda2_scale", Lambda2Scale(self.lambda2_scale))

    def trial_spec(self):
        return TrialSpec(
            n=self.n,
            ratios=self.ratios,
            trial_count=self.trial_count,
            epsilon_frac=self.epsilon_frac,
            lambda2=self.lambda2,
            lambda2_scale=self.lambda2_scale,
            methods=self.methods,
            base_seed=self.base_seed,
        )

    def signal_source(self):
        kind = SourceKind.FILE_TRACE if self.input else self.source
        return SignalSource(
            kind=kind,
            k_time=self.k_time,
            k_freq=self.k_freq,
            burst_width=self.burst_width,
            noise_floor=self.noise_floor,
            seed=self.source_seed,
            path=self.input,
        )

    def solver_config(self):
        return SolverConfig(
            rho=self.rho,
            max_iters=self.max_iters,
            abs_tol=self.abs_tol,
            rel_tol=self.rel_tol,
            over_relaxation=self.over_relaxation,
            adaptive_rho=self.adaptive_rho,
        )


# key -> (parse, format)
_CODECS = {
    "n": _int,
    "ratios": (_parse_ratios, lambda v: ",".join(repr(r) for r in v)),
    "trial_count": _int,
    "epsilon_frac": _float,
    "lambda2": _float,
    "lambda2_scale": (Lambda2Scale, lambda v: v.value),
    "methods": (_parse_methods, lambda v: ",".join(m.value for m in v)),
    "base_seed": _int,
    "source": (SourceKind, lambda v: v.value),
    "k_time": (_opt(int), _fmt_opt(str)),
    "k_freq": _int,
    "burst_width": (_opt(int), _fmt_opt(str)),
    "noise_floor": _float,
    "source_seed": _int,
    "input": _str,
    "out_csv": _str,
    "rho": _float,
    "max_iters": _int,
    "abs_tol": _float,
    "rel_tol": _float,
    "over_relaxation": _float,
    "adaptive_rho": (_parse_bool, lambda v: "true" if v else "false"),
    "workers": _int,
    "timing": (_parse_bool, lambda v: "true" if v else "false"),
}


def parse_config(text, base=None):
    """Parse key=value text on top of ``base`` (defaults when None)."""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep:
            raise FormatError(f"expected key = value, got {line!r}", line=lineno)
        if key not in _CODECS:
            raise FormatError(f"unknown key {key!r}", line=lineno)
        if key in values:
            raise FormatError(f"duplicate key {key!r}", line=lineno)
        try:
            values[key] = _CODECS[key][0](value)
        except ValueError as exc:
            raise FormatError(f"bad value for {key}: {exc}", line=lineno) from exc
    base = base or RunConfig()
    merged = {f.name: getattr(base, f.name) for f in fields(RunConfig)}
    merged.update(values)
    try:
        return RunConfig(**merged)
    except ValueError as exc:
        raise FormatError(str(exc)) from exc


def serialize_config(config):
    lines = [f"{name} = {_CODECS[name][1](getattr(config, name))}" for name in _CODECS]
    return "\n".join(lines) + "\n"


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise FormatError(f"{path}: not valid UTF-8") from exc
    return parse_config(text)
