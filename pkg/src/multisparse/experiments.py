"""Signal sources, the relative-error RMSE and Monte Carlo sweeps.

A sweep reproduces the RMSE versus sub-sampling ratio comparison: for every
ratio M/N and trial l a unit-norm signal is sensed with a fresh Gaussian
matrix, the measurement ball radius is ``epsilon_frac * ||y||_2`` and each
method reconstructs the signal.
"""

from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import FormatError, GenerationError, UndefinedInputError
from .operators import (
    MeasurementKind,
    Signal,
    compressibility,
    make_measurement_matrix,
    rng,
)
from .solvers import (
    DEFAULT_LAMBDA2,
    SolverConfig,
    solve_f_l1,
    solve_l1_l1,
    solve_ls_baseline,
    solve_t_l1,
)

log = logging.getLogger(__name__)

__all__ = [
    "Method",
    "Lambda2Scale",
    "SourceKind",
    "SignalSource",
    "TrialSpec",
    "CellResult",
    "SweepResult",
    "DEFAULT_RATIOS",
    "rmse",
    "relative_error",
    "generate_signal",
    "ingest_trace",
    "run_sweep",
    "reconstruct",
    "derive_seed",
]

DEFAULT_RATIOS = (0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0)

# compressibility targets, measured on the largest 10% of coefficients
_TOP_FRACTION = 0.1
_SPARSE_MIN = 0.95
_DENSE_MAX = 0.7
_MAX_ATTEMPTS = 100


class Method(str, enum.Enum):
    LS = "LS"
    T_L1 = "T-L1"
    F_L1 = "F-L1"
    L1_L1 = "L1-L1"

    @classmethod
    def parse(cls, text):
        key = text.strip().upper().replace("_", "-")
        for m in cls:
            if m.value == key or m.value.replace("-", "") == key.replace("-", ""):
                return m
        raise ValueError(f"unknown method {text!r}")


class Lambda2Scale(str, enum.Enum):
    """How the L1-L1 frequency weight relates to the unitary DFT term.

    ``sqrt-n``: lambda2 weighs ||F x||_1 for the unnormalized N-point DFT,
    i.e. the unitary term gets lambda2 * sqrt(N). ``constant``: lambda2 is
    used on the unitary term as is.
    """

    CONSTANT = "constant"
    SQRT_N = "sqrt-n"

    def effective(self, lambda2, n):
        if self is Lambda2Scale.SQRT_N:
            return lambda2 * math.sqrt(n)
        return lambda2


class SourceKind(str, enum.Enum):
    FILE_TRACE = "file"
    SPIKES = "spikes"
    TONES = "tones"
    DUAL_SPARSE = "dual-sparse"
    FREQ_DENSE = "freq-dense"


_DEFAULT_K_TIME = {
    SourceKind.SPIKES: 5,
    SourceKind.DUAL_SPARSE: 3,
    SourceKind.FREQ_DENSE: 16,
}


@dataclass(frozen=True)
class SignalSource:
    """Where trial signals come from.

    ``k_time`` counts spikes (spikes, freq-dense) or bursts (dual-sparse);
    None picks the per-kind default. ``burst_width`` of None means
    round(sqrt(N)), which balances time and frequency concentration of a
    Hann burst. ``noise_floor`` is the standard deviation of additive white
    noise relative to the clean signal's RMS.
    """

    kind: SourceKind = SourceKind.DUAL_SPARSE
    k_time: int | None = None
    k_freq: int = 3
    burst_width: int | None = None
    noise_floor: float = 0.0
    seed: int = 0
    path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", SourceKind(self.kind))
        if self.k_time is None:
            object.__setattr__(self, "k_time", _DEFAULT_K_TIME.get(self.kind, 1))
        if self.k_time < 1 or self.k_freq < 1:
            raise ValueError("sparsity counts must be positive")
        if self.noise_floor < 0:
            raise ValueError("noise_floor must be nonnegative")
        if self.kind is SourceKind.FILE_TRACE and not self.path:
            raise ValueError("file source needs a path")


def derive_seed(*parts):
    """Stable 64-bit seed from a tuple of non-negative integers."""
    ss = np.random.SeedSequence([int(p) for p in parts])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _top_k(n):
    return max(1, int(_TOP_FRACTION * n))


def _time_freq_compressibility(x):
    k = _top_k(x.size)
    return compressibility(x, k), compressibility(np.fft.fft(x), k)


def _spikes(g, n, k):
    if k > n:
        raise ValueError(f"cannot place {k} spikes in {n} samples")
    x = np.zeros(n)
    pos = g.choice(n, size=k, replace=False)
    amp = g.standard_normal(k)
    amp[amp == 0.0] = 1.0
    x[pos] = amp
    return x


def _tones(g, n, k):
    bins = np.arange(1, (n - 1) // 2 + 1)
    if k > bins.size:
        raise ValueError(f"N={n} supports at most {bins.size} tone pairs")
    chosen = g.choice(bins, size=k, replace=False)
    t = np.arange(n)
    amp = 0.5 + g.random(k)
    phase = g.uniform(0.0, 2 * np.pi, size=k)
    return sum(a * np.cos(2 * np.pi * b * t / n + p) for a, b, p in zip(amp, chosen, phase))


def _burst_train(g, n, k, width):
    # identical bursts at exact spacing n/k on a continuous time axis, so the
    # train is periodic and its spectrum lives on every k-th bin
    f0 = g.uniform(0.05, 0.45)
    phase = g.uniform(0.0, 2 * np.pi)
    start = g.uniform(0.0, n)
    t = np.arange(n)
    x = np.zeros(n)
    for j in range(k):
        tau = (t - start - j * n / k + n / 2) % n - n / 2
        win = np.where(np.abs(tau) < width / 2, np.cos(np.pi * tau / width) ** 2, 0.0)
        x += win * np.cos(2 * np.pi * f0 * tau + phase)
    return x


def _freq_dense(g, n, k):
    # spike train modulated by broadband noise: flat spectrum, sparse in time
    return _spikes(g, n, k) * np.abs(g.standard_normal(n)) * g.choice([-1.0, 1.0], size=n)


def _accept(kind, x):
    ct, cf = _time_freq_compressibility(x)
    if kind is SourceKind.DUAL_SPARSE:
        return ct >= _SPARSE_MIN and cf >= _SPARSE_MIN
    if kind is SourceKind.FREQ_DENSE:
        return ct >= _SPARSE_MIN and cf < _DENSE_MAX
    return True


def generate_signal(source: SignalSource, n: int) -> Signal:
    """Draw one unit-norm synthetic signal of length n.

    Dual-sparse and frequency-dense draws are checked against their
    compressibility targets and redrawn with the next sub-seed, up to 100
    attempts.
    """
    kind = source.kind
    if kind is SourceKind.FILE_TRACE:
        return ingest_trace(source.path, n, 0)
    width = source.burst_width or max(2, round(math.sqrt(n)))
    for attempt in range(_MAX_ATTEMPTS):
        g = rng([source.seed & ((1 << 64) - 1), attempt])
        if kind is SourceKind.SPIKES:
            x = _spikes(g, n, source.k_time)
        elif kind is SourceKind.TONES:
            x = _tones(g, n, source.k_freq)
        elif kind is SourceKind.DUAL_SPARSE:
            x = _burst_train(g, n, source.k_time, width)
        else:
            x = _freq_dense(g, n, source.k_time)
        if source.noise_floor > 0:
            rms = np.sqrt(np.mean(x ** 2))
            x = x + source.noise_floor * rms * g.standard_normal(n)
        if np.any(x != 0.0) and _accept(kind, x):
            return Signal(x).normalize()
    raise GenerationError(
        f"{kind.value} source missed its compressibility targets in {_MAX_ATTEMPTS} draws"
    )


def _window(trace, n, offset, wrap=False):
    if wrap:
        if trace.size < n:
            raise FormatError(f"trace has {trace.size} samples, need at least {n}")
        idx = (offset + np.arange(n)) % trace.size
        x = trace[idx]
    else:
        if offset < 0 or offset + n > trace.size:
            raise FormatError(
                f"window [{offset}, {offset + n}) exceeds trace of {trace.size} samples"
            )
        x = trace[offset:offset + n]
    x = x - x.mean()
    if not np.any(x):
        raise UndefinedInputError(f"window at offset {offset} is constant")
    return Signal(x).normalize()


def ingest_trace(path, n, offset=0):
    """Window n samples from a sample-per-line file: mean-removed, unit norm."""
    from .io import read_signal_file

    return _window(read_signal_file(path), int(n), int(offset))


def relative_error(x, x_hat):
    x = x.samples if isinstance(x, Signal) else np.asarray(x, dtype=float)
    x_hat = x_hat.samples if isinstance(x_hat, Signal) else np.asarray(x_hat, dtype=float)
    if x.shape != x_hat.shape:
        raise ValueError("original and estimate differ in length")
    nx = np.linalg.norm(x)
    if nx == 0.0:
        raise UndefinedInputError("original signal has zero norm")
    return float(np.linalg.norm(x - x_hat) / nx)


def rmse(originals, estimates):
    """Mean relative L2 error over trials: (1/L) sum ||x_l - xhat_l|| / ||x_l||."""
    originals, estimates = list(originals), list(estimates)
    if len(originals) != len(estimates):
        raise ValueError("originals and estimates differ in count")
    if not originals:
        raise UndefinedInputError("no trials")
    return float(np.mean([relative_error(x, xh) for x, xh in zip(originals, estimates)]))


@dataclass(frozen=True)
class TrialSpec:
    n: int = 512
    ratios: tuple = DEFAULT_RATIOS
    trial_count: int = 40
    epsilon_frac: float = 0.05
    lambda2: float = DEFAULT_LAMBDA2
    lambda2_scale: Lambda2Scale = Lambda2Scale.SQRT_N
    methods: tuple = (Method.LS, Method.T_L1, Method.F_L1, Method.L1_L1)
    base_seed: int = 0

    def __post_init__(self):
        ratios = tuple(float(r) for r in self.ratios)
        object.__setattr__(self, "ratios", ratios)
        object.__setattr__(self, "methods", tuple(Method(m) for m in self.methods))
        object.__setattr__(self, "lambda2_scale", Lambda2Scale(self.lambda2_scale))
        if self.n < 1:
            raise ValueError("n must be positive")
        if self.trial_count < 1:
            raise ValueError("trial_count must be positive")
        if any(b <= a for a, b in zip(ratios, ratios[1:])):
            raise ValueError("ratios must be strictly increasing")
        for r in ratios:
            if not 0 < r <= 1 or math.floor(r * self.n) < 1:
                raise ValueError(f"ratio {r} gives no measurements at N={self.n}")
        if self.epsilon_frac < 0 or self.lambda2 < 0:
            raise ValueError("epsilon_frac and lambda2 must be nonnegative")

    def measurements(self, ratio):
        return math.floor(ratio * self.n)

    @property
    def effective_lambda2(self):
        """Weight handed to the solver's unitary-DFT term."""
        return self.lambda2_scale.effective(self.lambda2, self.n)


@dataclass
class CellResult:
    rmses: list
    seconds: list
    failures: list = field(default_factory=list)

    @property
    def ok(self):
        return [e for e in self.rmses if not math.isnan(e)]

    @property
    def trials_ok(self):
        return len(self.ok)

    @property
    def valid(self):
        return self.trials_ok * 2 >= len(self.rmses)

    @property
    def mean_rmse(self):
        ok = self.ok
        return float(np.mean(ok)) if ok else math.nan

    @property
    def stddev_rmse(self):
        ok = self.ok
        return float(np.std(ok)) if ok else math.nan

    @property
    def mean_seconds(self):
        s = [t for t, e in zip(self.seconds, self.rmses) if not math.isnan(e)]
        return float(np.mean(s)) if s else math.nan


@dataclass
class SweepResult:
    """Per (method, ratio) RMSE lists in method-major order."""

    spec: TrialSpec
    cells: dict

    def cell(self, method, ratio):
        return self.cells[(Method(method), float(ratio))]

    def mean_rmse(self, method, ratio):
        return self.cell(method, ratio).mean_rmse

    def curve(self, method):
        return [self.mean_rmse(method, r) for r in self.spec.ratios]

    def rows(self):
        for m in self.spec.methods:
            for r in self.spec.ratios:
                yield m, r, self.cells[(m, r)]


def reconstruct(method, y, phi, eps, lambda2=DEFAULT_LAMBDA2, config=None):
    method = Method(method)
    if method is Method.LS:
        return solve_ls_baseline(y, phi)
    if method is Method.T_L1:
        return solve_t_l1(y, phi, eps, config)
    if method is Method.F_L1:
        return solve_f_l1(y, phi, eps, config)
    return solve_l1_l1(y, phi, eps, lambda2, config)


def _trial_signal(spec, source, trace, trial):
    if source.kind is SourceKind.FILE_TRACE:
        return _window(trace, spec.n, trial * spec.n, wrap=True)
    seed = derive_seed(spec.base_seed, 0, source.seed, trial)
    return generate_signal(replace(source, seed=seed), spec.n)


def _run_trial(args):
    spec, config, x, ratio, trial = args
    m = spec.measurements(ratio)
    phi = make_measurement_matrix(
        MeasurementKind.GAUSSIAN, m, spec.n, derive_seed(spec.base_seed, 1, m, trial)
    )
    y = phi.apply(x)
    eps = spec.epsilon_frac * float(np.linalg.norm(y))
    lam2 = spec.effective_lambda2
    out = []
    for method in spec.methods:
        try:
            rep = reconstruct(method, y, phi, eps, lam2, config)
        except (ValueError, ArithmeticError) as exc:
            out.append((math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
            continue
        if not rep.converged:
            log.debug("%s ratio=%g trial=%d hit max_iters", method.value, ratio, trial)
        out.append((relative_error(x, rep.x_hat), rep.wall_time, None))
    return out


def run_sweep(spec: TrialSpec, source: SignalSource, config: SolverConfig | None = None,
              workers: int = 1) -> SweepResult:
    """Monte Carlo RMSE sweep over ``spec.ratios`` x ``spec.trial_count``.

    Trial l uses the same signal at every ratio; the sensing matrix is seeded
    from (base_seed, M, l). Solver failures are recorded per trial as NaN
    and the sweep continues. Results do not depend on ``workers``.
    """
    trace = None
    if source.kind is SourceKind.FILE_TRACE:
        from .io import read_signal_file

        trace = read_signal_file(source.path)
    signals = [_trial_signal(spec, source, trace, l) for l in range(spec.trial_count)]
    tasks = [
        (spec, config, signals[l], r, l)
        for r in spec.ratios
        for l in range(spec.trial_count)
    ]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_trial, tasks, chunksize=4))
    else:
        outputs = [_run_trial(t) for t in tasks]

    cells = {(m, r): CellResult([], []) for m in spec.methods for r in spec.ratios}
    for (_, _, _, r, l), out in zip(tasks, outputs):
        for m, (err, secs, failure) in zip(spec.methods, out):
            cell = cells[(m, r)]
            cell.rmses.append(err)
            cell.seconds.append(secs)
            if failure is not None:
                cell.failures.append((l, failure))
    for (m, r), cell in cells.items():
        if not cell.valid:
            log.warning("%s at ratio %g: %d of %d trials failed", m.value, r,
                        len(cell.failures), len(cell.rmses))
    return SweepResult(spec, cells)
