"""Parametric power-quality event synthesis.

Fourteen single-phase disturbance classes (pure sinusoid, DC offset, sag,
swell, interruption, flicker, notching, harmonics, oscillatory transient and
their combinations) are generated in per-unit at a fixed sampling grid.
Zero-mean Gaussian white noise can then be added at a prescribed SNR.

Every instance draws its parameters from its own RNG stream keyed by
``(seed, class, index)``; the noise for an instance uses a second stream keyed
the same way, so the clean waveform is identical at every noise level.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

N_CLASSES = 14
CLASS_NAMES = {
    1: "pure sinusoid",
    2: "dc offset",
    3: "sag",
    4: "swell",
    5: "interruption",
    6: "flicker",
    7: "notching",
    8: "harmonics",
    9: "oscillatory transient",
    10: "sag with harmonics",
    11: "swell with harmonics",
    12: "flicker with harmonics",
    13: "sag with transient",
    14: "swell with transient",
}
HARMONIC_ORDERS = (1, 5, 7, 11, 13)
NOTCH_REPEATS = 60

_PARAM_STREAM = 0
_NOISE_STREAM = 1


@dataclass(frozen=True)
class SynthesisConfig:
    fundamental_frequency: float = 50.0
    sampling_frequency: float = 25000.0
    duration_cycles: int = 30
    rng_seed: int = 0

    def __post_init__(self):
        if not self.sampling_frequency > 2 * self.fundamental_frequency:
            raise ValueError("sampling frequency must exceed twice the fundamental")
        if self.duration_cycles < 1:
            raise ValueError("duration_cycles must be >= 1")
        n = self.duration_cycles * self.sampling_frequency / self.fundamental_frequency
        if abs(n - round(n)) > 1e-9:
            raise ValueError(f"sample count {n} is not an integer")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_cycles * self.sampling_frequency
                         / self.fundamental_frequency))

    @property
    def period(self) -> float:
        return 1.0 / self.fundamental_frequency

    @property
    def duration(self) -> float:
        return self.duration_cycles * self.period

    @property
    def samples_per_cycle(self) -> int:
        return int(round(self.sampling_frequency / self.fundamental_frequency))

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.sampling_frequency


@dataclass(frozen=True)
class EventSpec:
    """One event instance: class id (1..14) and its model parameters.

    Times (``t1``, ``t2``, ``t_tr``) are in seconds, ``f_tr`` in hertz, the
    rest in per-unit or dimensionless. Harmonic amplitudes are keyed
    ``d1, d5, d7, d11, d13``.
    """

    class_id: int
    params: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return f"v{self.class_id}"


@dataclass
class Waveform:
    samples: np.ndarray
    spec: EventSpec
    snr_db: float = math.inf

    @property
    def class_id(self) -> int:
        return self.spec.class_id


def parse_class_id(value) -> int:
    """Accept ``3``, ``"3"`` or ``"v3"``."""
    s = str(value).strip().lower()
    if s.startswith("v"):
        s = s[1:]
    cid = int(s)
    if not 1 <= cid <= N_CLASSES:
        raise ValueError(f"class id must be in v1..v{N_CLASSES}, got {value!r}")
    return cid


# -- parameter sampling -------------------------------------------------------

def _interval(config: SynthesisConfig, rng: np.random.Generator):
    """Event window with 0.5T <= t2 - t1 <= 30T, snapped to the sample grid."""
    fs = config.sampling_frequency
    n = config.n_samples
    spc = config.samples_per_cycle
    lo = int(math.ceil(0.5 * spc))
    hi = min(30 * spc, n)
    width = int(rng.integers(lo, hi + 1))
    start = int(rng.integers(0, n - width + 1))
    return start / fs, (start + width) / fs


def _harmonic_amplitudes(rng: np.random.Generator) -> dict:
    # 0 < d <= 0.2 for the upper orders; d1 closes the unit-energy constraint
    upper = 0.2 - rng.uniform(0.0, 0.2, size=4)
    d = {f"d{k}": float(v) for k, v in zip(HARMONIC_ORDERS[1:], upper)}
    d["d1"] = math.sqrt(1.0 - float(np.sum(upper ** 2)))
    return d


def _transient(config: SynthesisConfig, rng: np.random.Generator) -> dict:
    fs = config.sampling_frequency
    onset = rng.uniform(0.3, 0.9) * config.duration
    return {
        "gamma": float(rng.uniform(50.0, 100.0)),
        "beta": float(rng.uniform(1.0, 4.0)),
        "f_tr": float(rng.uniform(1000.0, 10000.0)),
        "t_tr": round(onset * fs) / fs,
    }


def sample_event_spec(class_id, config: SynthesisConfig,
                      rng: np.random.Generator) -> EventSpec:
    """Draw one instance of ``class_id`` uniformly within its parameter ranges."""
    cid = parse_class_id(class_id)
    p: dict = {}
    if cid == 1:
        p["alpha"] = float(rng.uniform(0.9, 1.1))
    elif cid == 2:
        p["alpha"] = float(rng.uniform(0.9, 1.1))
        p["beta"] = float(rng.uniform(0.0, 0.1))
    elif cid in (3, 10, 13):
        p["alpha"] = float(rng.uniform(0.1, 0.9))
        p["t1"], p["t2"] = _interval(config, rng)
    elif cid in (4, 11, 14):
        p["alpha"] = float(rng.uniform(0.1, 0.8))
        p["t1"], p["t2"] = _interval(config, rng)
    elif cid == 5:
        p["alpha"] = float(1.0 - rng.uniform(0.0, 0.1))  # (0.9, 1.0]
        p["t1"], p["t2"] = _interval(config, rng)
    elif cid in (6, 12):
        p["alpha_f"] = float(0.07 - rng.uniform(0.0, 0.07))  # (0, 0.07]
        p["beta_f"] = float(rng.uniform(1.0, 25.0))
    elif cid == 7:
        fs = config.sampling_frequency
        period = config.period
        t1 = rng.uniform(0.0, period)
        width = rng.uniform(0.01 * period, 0.05 * period)
        p["K"] = float(rng.uniform(0.1, 0.4))
        p["t1"] = round(t1 * fs) / fs
        p["t2"] = p["t1"] + max(1, round(width * fs)) / fs
    if cid in (8, 10, 11, 12):
        p.update(_harmonic_amplitudes(rng))
    if cid in (9, 13, 14):
        p.update(_transient(config, rng))
    return EventSpec(cid, p)


# -- rendering ----------------------------------------------------------------

def _u(x: np.ndarray) -> np.ndarray:
    return (x > 0).astype(float)


def _window(t, t1, t2):
    return _u(t - t1) - _u(t - t2)


def _harmonic_sum(t, w, p):
    return sum(p[f"d{k}"] * np.sin(k * w * t) for k in HARMONIC_ORDERS)


def _transient_term(t, p):
    after = t > p["t_tr"]
    tau = np.where(after, t - p["t_tr"], 0.0)
    return after * p["beta"] * np.exp(-p["gamma"] * tau) * np.sin(2 * np.pi * p["f_tr"] * t)


def render(spec: EventSpec, config: SynthesisConfig) -> Waveform:
    t = config.times()
    w = 2.0 * np.pi * config.fundamental_frequency
    p = spec.params
    cid = spec.class_id
    base = np.sin(w * t)

    if cid == 1:
        x = p["alpha"] * base
    elif cid == 2:
        x = p["beta"] + p["alpha"] * base
    elif cid in (3, 5):
        x = (1.0 - p["alpha"] * _window(t, p["t1"], p["t2"])) * base
    elif cid == 4:
        x = (1.0 + p["alpha"] * _window(t, p["t1"], p["t2"])) * base
    elif cid == 6:
        x = (1.0 + p["alpha_f"] * np.sin(p["beta_f"] * w * t)) * base
    elif cid == 7:
        period = config.period
        notch = np.zeros_like(t)
        for n in range(NOTCH_REPEATS + 1):
            notch += _window(t, p["t1"] + n * period, p["t2"] + n * period)
        x = base - np.sign(base) * p["K"] * notch
    elif cid == 8:
        x = _harmonic_sum(t, w, p)
    elif cid == 9:
        x = base + _transient_term(t, p)
    elif cid == 10:
        x = (1.0 - p["alpha"] * _window(t, p["t1"], p["t2"])) * _harmonic_sum(t, w, p)
    elif cid == 11:
        x = (1.0 + p["alpha"] * _window(t, p["t1"], p["t2"])) * _harmonic_sum(t, w, p)
    elif cid == 12:
        x = (1.0 + p["alpha_f"] * np.sin(p["beta_f"] * w * t)) * _harmonic_sum(t, w, p)
    elif cid == 13:
        x = (1.0 - p["alpha"] * _window(t, p["t1"], p["t2"])) * base + _transient_term(t, p)
    elif cid == 14:
        x = (1.0 + p["alpha"] * _window(t, p["t1"], p["t2"])) * base + _transient_term(t, p)
    else:
        raise ValueError(f"unknown class id {cid}")
    return Waveform(np.ascontiguousarray(x, dtype=float), spec, math.inf)


# -- noise --------------------------------------------------------------------

def noise_sigma(samples: np.ndarray, snr_db: float) -> float:
    power = float(np.mean(np.square(samples)))
    return math.sqrt(power / 10.0 ** (snr_db / 10.0))


def add_noise(w: Waveform, snr_db: float, rng: np.random.Generator) -> Waveform:
    """Return a copy of ``w`` with white Gaussian noise at ``snr_db``.

    ``snr_db = inf`` returns an unchanged copy.
    """
    if not np.all(np.isfinite(w.samples)):
        raise ValueError("waveform contains non-finite samples")
    if math.isnan(snr_db) or snr_db == -math.inf:
        raise ValueError(f"invalid SNR {snr_db}")
    if snr_db == math.inf:
        return Waveform(w.samples.copy(), w.spec, math.inf)
    sigma = noise_sigma(w.samples, snr_db)
    noisy = w.samples + sigma * rng.standard_normal(w.samples.shape[0])
    return Waveform(noisy, w.spec, float(snr_db))


# -- datasets -----------------------------------------------------------------

def instance_rng(seed: int, class_id: int, index: int,
                 stream: int = _PARAM_STREAM) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(class_id, index, stream))
    return np.random.default_rng(ss)


def parse_snr(value) -> float:
    s = str(value).strip().lower()
    if s in ("inf", "+inf", "infinity", "∞"):
        return math.inf
    v = float(s)
    if math.isnan(v):
        raise ValueError("SNR may not be NaN")
    return v


def build_dataset(config: SynthesisConfig, events_per_class: int,
                  snr_db: float = math.inf, classes=None) -> list[Waveform]:
    """Render ``events_per_class`` instances of each class, class-major order.

    Noise for instance ``(c, i)`` is one fixed standard-normal vector scaled to
    the requested SNR, so datasets at different SNRs differ only in noise level.
    """
    if events_per_class < 1:
        raise ValueError("events_per_class must be >= 1")
    ids = range(1, N_CLASSES + 1) if classes is None else [parse_class_id(c) for c in classes]
    out = []
    for cid in ids:
        for i in range(events_per_class):
            spec = sample_event_spec(cid, config, instance_rng(config.rng_seed, cid, i))
            w = render(spec, config)
            if snr_db != math.inf:
                w = add_noise(w, snr_db, instance_rng(config.rng_seed, cid, i, _NOISE_STREAM))
            out.append(w)
    return out


def with_seed(config: SynthesisConfig, seed: int) -> SynthesisConfig:
    return replace(config, rng_seed=int(seed))


# -- archive ------------------------------------------------------------------

def save_waveforms(path, waveforms: list[Waveform]) -> None:
    """Write ``.npz`` (default) or ``.csv``: one row per instance,
    ``class_id, snr_db, samples...``."""
    path = str(path)
    labels = np.array([w.class_id for w in waveforms], dtype=np.int64)
    snrs = np.array([w.snr_db for w in waveforms], dtype=float)
    samples = np.vstack([w.samples for w in waveforms])
    if path.endswith(".csv"):
        with open(path, "w") as fh:
            for lab, snr, row in zip(labels, snrs, samples):
                fh.write(f"v{lab},{float(snr)!r}," + ",".join(repr(float(v)) for v in row) + "\n")
    else:
        with open(path, "wb") as fh:
            np.savez_compressed(fh, class_id=labels, snr_db=snrs, samples=samples)


def load_waveforms(path):
    """Return ``(class_ids, snr_db, samples)`` arrays from an archive."""
    path = str(path)
    if path.endswith(".csv"):
        labels, snrs, rows = [], [], []
        with open(path) as fh:
            for line in fh:
                parts = line.rstrip("\n").split(",")
                labels.append(parse_class_id(parts[0]))
                snrs.append(parse_snr(parts[1]))
                rows.append([float(v) for v in parts[2:]])
        return np.array(labels), np.array(snrs), np.array(rows)
    with np.load(path) as z:
        return z["class_id"], z["snr_db"], z["samples"]
