"""Measurement matrices, analysis operators and the signal container.

Every random quantity in the package is drawn from ``numpy.random.Generator``
backed by PCG64 and seeded with a 64-bit unsigned integer (see :func:`rng`),
so a (kind, M, N, seed) tuple always regenerates the same matrix.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, UndefinedInputError

__all__ = [
    "Signal",
    "MeasurementKind",
    "MeasurementMatrix",
    "AnalysisKind",
    "AnalysisOperator",
    "rng",
    "make_measurement_matrix",
    "sample",
    "analyze",
    "adjoint_apply",
    "compressibility",
    "real_fourier_basis",
]

_SEED_MASK = (1 << 64) - 1


def rng(seed):
    """Return the package-wide generator (PCG64) for a 64-bit seed.

    ``seed`` may also be a sequence of non-negative ints, which is hashed
    through ``SeedSequence`` so derived streams do not collide.
    """
    if isinstance(seed, (int, np.integer)):
        seed = int(seed) & _SEED_MASK
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def _frozen(a, dtype=None):
    a = np.array(a, dtype=dtype, copy=True)
    a.setflags(write=False)
    return a


def _samples_of(x):
    if isinstance(x, Signal):
        return x.samples
    return np.asarray(x)


@dataclass(frozen=True)
class Signal:
    """Real length-N signal at the Nyquist rate.

    ``norm_scale`` is the L2 norm that was divided out by :meth:`normalize`
    (1.0 when the samples were never normalized).
    """

    samples: np.ndarray
    norm_scale: float = 1.0
    normalized: bool = False

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim != 1 or s.size < 1:
            raise DimensionError("signal must be a non-empty 1-D sequence")
        if not np.all(np.isfinite(s)):
            raise ValueError("signal samples must be finite")
        if not self.norm_scale > 0:
            raise ValueError("norm_scale must be positive")
        object.__setattr__(self, "samples", _frozen(s))
        if self.normalized and abs(np.linalg.norm(s) - 1.0) > 1e-12:
            raise ValueError("signal flagged normalized but its norm is not 1")

    def __len__(self):
        return self.samples.size

    @property
    def norm(self):
        return float(np.linalg.norm(self.samples))

    def normalize(self):
        """Return a unit-norm copy, recording the divided-out norm."""
        nrm = self.norm
        if nrm == 0.0:
            raise UndefinedInputError("cannot normalize a zero signal")
        unit = self.samples / nrm
        # one correction pass brings the norm to within an ulp or two of 1
        unit = unit / np.linalg.norm(unit)
        return Signal(unit, norm_scale=nrm * self.norm_scale, normalized=True)


class MeasurementKind(str, enum.Enum):
    GAUSSIAN = "gaussian"
    BERNOULLI = "bernoulli"
    PARTIAL_FOURIER = "partial_fourier"
    CUSTOM = "custom"


@dataclass(frozen=True)
class MeasurementMatrix:
    """M x N real sensing matrix."""

    entries: np.ndarray
    kind: MeasurementKind = MeasurementKind.CUSTOM
    seed: int = 0

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim != 2:
            raise DimensionError("measurement matrix must be 2-D")
        m, n = a.shape
        if not 1 <= m <= n:
            raise DimensionError(f"need 1 <= M <= N, got M={m}, N={n}")
        object.__setattr__(self, "entries", _frozen(a))
        object.__setattr__(self, "kind", MeasurementKind(self.kind))

    @classmethod
    def from_array(cls, entries):
        return cls(entries, MeasurementKind.CUSTOM, 0)

    @property
    def shape(self):
        return self.entries.shape

    @property
    def rows(self):
        return self.entries.shape[0]

    @property
    def cols(self):
        return self.entries.shape[1]

    def apply(self, x):
        x = _samples_of(x)
        if x.shape != (self.cols,):
            raise DimensionError(f"expected length {self.cols}, got shape {x.shape}")
        return self.entries @ x

    def adjoint(self, v):
        v = np.asarray(v)
        if v.shape != (self.rows,):
            raise DimensionError(f"expected length {self.rows}, got shape {v.shape}")
        return self.entries.T @ v


def real_fourier_basis(n):
    """Orthonormal real Fourier basis as an n x n orthogonal matrix.

    Rows are the cosine rows for bins 0..n//2 followed by the sine rows for
    bins 1..(n-1)//2, i.e. the non-redundant part of [Re(F); Im(F)] rescaled
    to unit norm.
    """
    t = np.arange(n)
    cos_bins = np.arange(n // 2 + 1)
    sin_bins = np.arange(1, (n - 1) // 2 + 1)
    c = np.cos(2 * np.pi * np.outer(cos_bins, t) / n)
    s = np.sin(2 * np.pi * np.outer(sin_bins, t) / n)
    basis = np.vstack([c, s])
    return basis / np.linalg.norm(basis, axis=1, keepdims=True)


def make_measurement_matrix(kind, m, n, seed):
    """Generate a seeded M x N sensing matrix.

    Gaussian and Bernoulli entries are scaled by 1/sqrt(M) so that
    E||Phi x||^2 = ||x||^2. Partial-Fourier picks M distinct rows of the
    orthonormal real Fourier basis and scales them by sqrt(N/M).
    """
    kind = MeasurementKind(kind)
    m, n = int(m), int(n)
    if not 1 <= m <= n:
        raise DimensionError(f"need 1 <= M <= N, got M={m}, N={n}")
    g = rng(seed)
    if kind is MeasurementKind.GAUSSIAN:
        a = g.standard_normal((m, n)) / np.sqrt(m)
    elif kind is MeasurementKind.BERNOULLI:
        a = np.where(g.integers(0, 2, size=(m, n)) == 1, 1.0, -1.0) / np.sqrt(m)
    elif kind is MeasurementKind.PARTIAL_FOURIER:
        rows = np.sort(g.choice(n, size=m, replace=False))
        a = real_fourier_basis(n)[rows] * np.sqrt(n / m)
    else:
        raise ValueError(f"cannot generate a {kind.value} matrix")
    return MeasurementMatrix(a, kind, int(seed) & _SEED_MASK)


class AnalysisKind(str, enum.Enum):
    IDENTITY = "identity"
    UNITARY_DFT = "unitary_dft"
    DENSE_REAL = "dense_real"
    DENSE_COMPLEX = "dense_complex"


@dataclass(frozen=True)
class AnalysisOperator:
    """L x N analysis operator Psi, with L >= N.

    Identity and UnitaryDFT are matrix-free; the dense kinds carry their
    entries explicitly.
    """

    kind: AnalysisKind
    rows: int
    cols: int
    entries: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        kind = AnalysisKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind in (AnalysisKind.IDENTITY, AnalysisKind.UNITARY_DFT):
            if self.rows != self.cols:
                raise DimensionError(f"{kind.value} operator must be square")
            if self.entries is not None:
                raise ValueError(f"{kind.value} operator takes no explicit entries")
        else:
            dtype = float if kind is AnalysisKind.DENSE_REAL else complex
            a = np.asarray(self.entries)
            if kind is AnalysisKind.DENSE_REAL and np.iscomplexobj(a):
                raise ValueError("dense_real operator given complex entries")
            a = _frozen(a, dtype=dtype)
            if a.shape != (self.rows, self.cols):
                raise DimensionError("entries do not match (rows, cols)")
            object.__setattr__(self, "entries", a)
        if self.cols < 1 or self.rows < self.cols:
            raise DimensionError(f"need L >= N >= 1, got L={self.rows}, N={self.cols}")

    @classmethod
    def identity(cls, n):
        return cls(AnalysisKind.IDENTITY, n, n)

    @classmethod
    def dft(cls, n):
        return cls(AnalysisKind.UNITARY_DFT, n, n)

    @classmethod
    def dense(cls, entries):
        a = np.asarray(entries)
        kind = AnalysisKind.DENSE_COMPLEX if np.iscomplexobj(a) else AnalysisKind.DENSE_REAL
        return cls(kind, a.shape[0], a.shape[1], a)

    @property
    def shape(self):
        return (self.rows, self.cols)

    @property
    def is_complex(self):
        return self.kind in (AnalysisKind.UNITARY_DFT, AnalysisKind.DENSE_COMPLEX)

    def apply(self, x):
        x = _samples_of(x)
        if x.shape != (self.cols,):
            raise DimensionError(f"expected length {self.cols}, got shape {x.shape}")
        if self.kind is AnalysisKind.IDENTITY:
            return x.copy()
        if self.kind is AnalysisKind.UNITARY_DFT:
            return np.fft.fft(x, norm="ortho")
        return self.entries @ x

    def adjoint(self, v):
        v = np.asarray(v)
        if v.shape != (self.rows,):
            raise DimensionError(f"expected length {self.rows}, got shape {v.shape}")
        if self.kind is AnalysisKind.IDENTITY:
            return v.copy()
        if self.kind is AnalysisKind.UNITARY_DFT:
            return np.fft.ifft(v, norm="ortho")
        return self.entries.conj().T @ v

    def real_gram(self):
        """Re(Psi^H Psi), the block this operator adds to a real normal matrix."""
        if self.kind in (AnalysisKind.IDENTITY, AnalysisKind.UNITARY_DFT):
            return np.eye(self.cols)
        return (self.entries.conj().T @ self.entries).real

    def to_dense(self):
        if self.kind is AnalysisKind.IDENTITY:
            return np.eye(self.cols)
        if self.kind is AnalysisKind.UNITARY_DFT:
            return np.fft.fft(np.eye(self.cols), axis=0, norm="ortho")
        return np.array(self.entries)

    def real_stacked(self):
        """Dense real operator [Re(Psi); Im(Psi)] (2L rows) for complex kinds."""
        a = self.to_dense()
        if not self.is_complex:
            return a
        return np.vstack([a.real, a.imag])


def sample(phi, x):
    """Sub-Nyquist measurements y = Phi x."""
    return phi.apply(x)


def analyze(psi, x):
    """Analysis coefficients theta = Psi x."""
    return psi.apply(x)


def adjoint_apply(op, v):
    """Conjugate-transpose application A^H v."""
    return op.adjoint(v)


def compressibility(theta, k):
    """Fraction of ||theta||^2 held by the k largest-magnitude entries."""
    mag = np.abs(np.asarray(theta).ravel())
    if mag.size == 0:
        raise UndefinedInputError("empty coefficient vector")
    peak = mag.max()
    if peak == 0.0:
        raise UndefinedInputError("zero coefficient vector")
    # rescale first so tiny or huge magnitudes neither underflow nor overflow
    mag2 = (mag / peak) ** 2
    total = mag2.sum()
    k = int(k)
    if not 1 <= k <= mag2.size:
        raise ValueError(f"need 1 <= k <= {mag2.size}, got {k}")
    if k == mag2.size:
        return 1.0
    top = np.partition(mag2, mag2.size - k)[mag2.size - k:]
    return float(min(top.sum() / total, 1.0))
