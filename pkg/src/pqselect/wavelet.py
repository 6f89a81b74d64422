"""Multi-level decimated DWT (Mallat pyramid) with periodic boundaries.

Each level filters the current approximation with the analysis pair and keeps
every other output. Odd-length inputs are zero-padded by one sample before
wrapping, which keeps the map an isometry (energy is preserved exactly) and
gives ``ceil(N / 2**j)`` coefficients at level ``j``. Reconstruction applies
the transpose of each analysis step and trims the padding.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

# 6th-order symlet, decomposition low-pass (12 taps).
SYM6_DEC_LO = (
    0.015404109327027373,
    0.0034907120842174702,
    -0.11799011114819057,
    -0.048311742585633,
    0.4910559419267466,
    0.787641141030194,
    0.3379294217276218,
    -0.07263752278646252,
    -0.021060292512300564,
    0.04472490177066578,
    0.0017677118642428036,
    -0.007800708325034148,
)


@dataclass(frozen=True)
class WaveletFilter:
    name: str
    dec_lo: np.ndarray
    dec_hi: np.ndarray
    rec_lo: np.ndarray
    rec_hi: np.ndarray

    @classmethod
    def from_lowpass(cls, name: str, dec_lo) -> "WaveletFilter":
        lo = np.asarray(dec_lo, dtype=float)
        k = np.arange(lo.size)
        rec_lo = lo[::-1].copy()
        rec_hi = ((-1.0) ** k) * lo
        dec_hi = rec_hi[::-1].copy()
        f = cls(name, lo, dec_hi, rec_lo, rec_hi)
        f.validate()
        return f

    @property
    def length(self) -> int:
        return self.dec_lo.size

    def validate(self, tol: float = 1e-10) -> None:
        """Check the orthonormal QMF conditions; raise ``ValueError`` if violated."""
        lo, hi = self.dec_lo, self.dec_hi
        n = lo.size
        if n % 2 or hi.size != n:
            raise ValueError("filters must have equal even length")
        k = np.arange(n)
        if not np.array_equal(hi, ((-1.0) ** (k + 1)) * lo[::-1]):
            raise ValueError("high-pass is not the quadrature mirror of the low-pass")
        if abs(lo.sum() - math.sqrt(2.0)) > tol:
            raise ValueError("low-pass taps must sum to sqrt(2)")
        if abs(np.dot(lo, lo) - 1.0) > tol:
            raise ValueError("low-pass taps must have unit energy")
        for m in range(1, n // 2):
            if abs(np.dot(lo[:-2 * m], lo[2 * m:])) > tol:
                raise ValueError(f"low-pass not orthogonal to its shift by {2 * m}")
        if abs(np.dot(lo, hi)) > tol:
            raise ValueError("low-pass and high-pass are not orthogonal")


SYM6 = WaveletFilter.from_lowpass("sym6", SYM6_DEC_LO)


@dataclass
class Decomposition:
    details: list  # level 1 (finest) .. level D
    approximation: np.ndarray
    levels: int
    input_lengths: list = field(default_factory=list)  # signal length entering each level

    def bands(self) -> list:
        """Details 1..D followed by the level-D approximation."""
        return [*self.details, self.approximation]


def required_levels(f: float, fs: float) -> int:
    """Smallest D with ``fs / 2**(D+1) <= f <= fs / 2**D``."""
    if not 0 < f <= fs / 2:
        raise ValueError(f"frequency {f} must lie in (0, fs/2] for fs={fs}")
    d = 1
    while fs / 2 ** (d + 1) > f:
        d += 1
    if not fs / 2 ** (d + 1) <= f <= fs / 2 ** d:
        raise ValueError(f"no integer decomposition level brackets f={f}")
    return d


def _index_matrix(m: int, length: int) -> np.ndarray:
    # output k reads x[(2k + 1 - n) mod m] for tap n
    k = np.arange(m // 2)[:, None]
    n = np.arange(length)[None, :]
    return (2 * k + 1 - n) % m


def dwt_step(x: np.ndarray, filt: WaveletFilter):
    """One analysis level; returns ``(approx, detail)``."""
    x = np.asarray(x, dtype=float)
    if x.size % 2:
        x = np.append(x, 0.0)
    idx = _index_matrix(x.size, filt.length)
    taps = x[idx]
    return taps @ filt.dec_lo, taps @ filt.dec_hi


def idwt_step(approx: np.ndarray, detail: np.ndarray, filt: WaveletFilter,
              length: int) -> np.ndarray:
    """Transpose of :func:`dwt_step`, trimmed to ``length`` samples."""
    if approx.size != detail.size:
        raise ValueError("approximation and detail lengths differ")
    m = 2 * approx.size
    if length not in (m, m - 1):
        raise ValueError(f"cannot reconstruct {length} samples from {approx.size} coefficients")
    idx = _index_matrix(m, filt.length)
    contrib = approx[:, None] * filt.dec_lo[None, :] + detail[:, None] * filt.dec_hi[None, :]
    x = np.bincount(idx.ravel(), weights=contrib.ravel(), minlength=m)
    return x[:length]


def decompose(x, filt: WaveletFilter = SYM6, levels: int = 8) -> Decomposition:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D sequence")
    if levels < 1:
        raise ValueError("levels must be >= 1")
    if x.size < 2 ** levels:
        raise ValueError(f"{x.size} samples is too short for {levels} levels")
    details, lengths = [], []
    a = x
    for _ in range(levels):
        lengths.append(a.size)
        a, d = dwt_step(a, filt)
        details.append(d)
    return Decomposition(details, a, levels, lengths)


def reconstruct(dec: Decomposition, filt: WaveletFilter = SYM6) -> np.ndarray:
    if len(dec.details) != dec.levels or len(dec.input_lengths) != dec.levels:
        raise ValueError("decomposition level bookkeeping is inconsistent")
    a = np.asarray(dec.approximation, dtype=float)
    for j in range(dec.levels - 1, -1, -1):
        d = np.asarray(dec.details[j], dtype=float)
        if d.size != a.size:
            raise ValueError(f"level {j + 1}: detail has {d.size} coefficients, "
                             f"approximation has {a.size}")
        a = idwt_step(a, d, filt, dec.input_lengths[j])
    return a


def band_lengths(n: int, levels: int) -> list:
    return [math.ceil(n / 2 ** j) for j in range(1, levels + 1)]
