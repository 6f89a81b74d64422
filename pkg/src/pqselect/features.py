"""Wavelet-domain statistical features and labelled datasets.

Each waveform is decomposed to 8 levels; the 8 detail bands and the final
approximation are each summarised by 11 statistics, giving 99 features in
band-major order (band 1 stats 1..11, band 2 stats 1..11, ...). Column ``j``
(0-based) is band ``j // 11 + 1``, statistic ``j % 11 + 1``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import wavelet
from .synth import N_CLASSES, Waveform, parse_class_id, parse_snr

N_STATS = 11
STAT_NAMES = (
    "min", "max", "median", "energy", "mean", "entropy",
    "skewness", "std", "mean_abs_dev", "variance", "kurtosis",
)
DEFAULT_LEVELS = 8


def stat_functions(c) -> np.ndarray:
    """The 11 band statistics of a coefficient sequence.

    Variance-type denominators are ``N - 1``; the mean absolute deviation uses
    ``N``. Entropy uses the natural log of the energy fractions, with
    ``0 log 0 = 0``. Skewness and kurtosis are 0 when the spread is 0.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    if n < 2:
        raise ValueError("need at least two coefficients")
    energy = float(np.dot(c, c))
    mean = float(c.mean())
    dev = c - mean
    var = float(np.dot(dev, dev)) / (n - 1)
    sd = math.sqrt(var)

    if energy > 0:
        p = c * c / energy
        nz = p[p > 0]
        entropy = float(-np.sum(nz * np.log(nz)))
    else:
        entropy = 0.0
    if sd > 0:
        z = dev / sd  # standardise first so tiny bands do not underflow
        skew = float(np.sum(z ** 3)) / (n - 1)
        kurt = float(np.sum(z ** 4)) / (n - 1)
    else:
        skew = kurt = 0.0

    return np.array([
        float(c.min()), float(c.max()), float(np.median(c)), energy, mean,
        entropy, skew, sd, float(np.mean(np.abs(dev))), var, kurt,
    ])


@dataclass
class FeatureVector:
    values: np.ndarray
    label: int  # 1..14


def band_features(dec: wavelet.Decomposition) -> np.ndarray:
    return np.concatenate([stat_functions(b) for b in dec.bands()])


def extract(w, filt: wavelet.WaveletFilter = wavelet.SYM6,
            levels: int = DEFAULT_LEVELS) -> FeatureVector:
    samples = w.samples if isinstance(w, Waveform) else np.asarray(w, dtype=float)
    values = band_features(wavelet.decompose(samples, filt, levels))
    label = w.class_id if isinstance(w, Waveform) else 0
    return FeatureVector(values, label)


def feature_names(levels: int = DEFAULT_LEVELS) -> list:
    return [f"f{i:03d}" for i in range(1, (levels + 1) * N_STATS + 1)]


def describe_feature(index: int, levels: int = DEFAULT_LEVELS) -> str:
    band, stat = divmod(index, N_STATS)
    where = f"d{band + 1}" if band < levels else f"a{levels}"
    return f"{where}:{STAT_NAMES[stat]}"


@dataclass
class Dataset:
    """Feature matrix ``X`` (rows x features), labels ``y`` in 1..14."""

    X: np.ndarray
    y: np.ndarray
    snr_db: float = math.inf
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.ascontiguousarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=np.intp)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be 2-D with one label per row")
        if self.y.size and (self.y.min() < 1 or self.y.max() > N_CLASSES):
            raise ValueError("labels must be in 1..14")

    @property
    def n_rows(self) -> int:
        return self.X.shape[0]

    @property
    def n_features(self) -> int:
        return self.X.shape[1]

    def rows(self):
        for x, lab in zip(self.X, self.y):
            yield FeatureVector(x, int(lab))


def featurize_dataset(waveforms, filt: wavelet.WaveletFilter = wavelet.SYM6,
                      levels: int = DEFAULT_LEVELS, provenance: dict | None = None) -> Dataset:
    waveforms = list(waveforms)
    if not waveforms:
        raise ValueError("no waveforms to featurize")
    X = np.vstack([extract(w, filt, levels).values for w in waveforms])
    y = np.array([w.class_id for w in waveforms])
    snrs = {w.snr_db for w in waveforms}
    snr = snrs.pop() if len(snrs) == 1 else math.nan
    return Dataset(X, y, snr, dict(provenance or {}))


def featurize_arrays(labels, samples, snr_db=math.inf, levels: int = DEFAULT_LEVELS,
                     filt: wavelet.WaveletFilter = wavelet.SYM6,
                     provenance: dict | None = None) -> Dataset:
    X = np.vstack([band_features(wavelet.decompose(s, filt, levels)) for s in samples])
    return Dataset(X, np.asarray(labels), snr_db, dict(provenance or {}))


# -- CSV ----------------------------------------------------------------------

def save_csv(ds: Dataset, path) -> None:
    """Header ``f001..fNNN,label,snr_db``; floats written with ``repr`` (exact)."""
    names = [f"f{i:03d}" for i in range(1, ds.n_features + 1)]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(names + ["label", "snr_db"])
        snr = repr(float(ds.snr_db))
        for x, lab in zip(ds.X, ds.y):
            w.writerow([repr(float(v)) for v in x] + [f"v{lab}", snr])


def load_csv(path) -> Dataset:
    with open(path, newline="") as fh:
        r = csv.reader(fh)
        header = next(r)
        if header[-2:] != ["label", "snr_db"]:
            raise ValueError(f"{path}: expected trailing label,snr_db columns")
        rows, labels, snrs = [], [], set()
        for rec in r:
            rows.append([float(v) for v in rec[:-2]])
            labels.append(parse_class_id(rec[-2]))
            snrs.add(parse_snr(rec[-1]))
    snr = snrs.pop() if len(snrs) == 1 else math.nan
    return Dataset(np.array(rows), np.array(labels), snr)
