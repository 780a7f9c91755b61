"""Signal analysis: trajectory similarity, EMG envelopes, reduction stats.

The cross-correlation index is the zero-mean, zero-padded normalized form:
both series are mean-removed, the raw correlation is divided by the product
of the full-series 2-norms, and the absolute value is taken, so the curve
lives in [0, 1] and the peak is invariant to positive affine scaling of
either input. The lag axis is normalized by the shorter series length.

Muscle activation series are full-wave rectified, low-pass filtered at 2 Hz
(2nd order Butterworth, forward-backward so the envelope has zero phase
lag), normalized by the maximum voluntary contraction, and expressed in
percent.

Reduction statistics compare an assisted recording against an unassisted
one: delta = (without - with) / without * 100, applied to means and maxima
separately. Subject summaries report the arithmetic mean and the sample
(N-1) standard deviation per column; the sample convention is what
reproduces the published six-subject reference summary, see the tests.
"""

import csv
from dataclasses import dataclass, fields

import numpy as np
from scipy.signal import butter, filtfilt

from .errors import ConfigError, ContractError


@dataclass
class SignalSeries:
    """Uniformly sampled scalar series."""

    samples: np.ndarray
    rate: float           # Hz
    label: str = ""

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1 or self.samples.shape[0] < 2:
            raise ContractError("series needs at least two samples")
        if not np.all(np.isfinite(self.samples)):
            raise ContractError("series samples must be finite")
        self.rate = float(self.rate)
        if not self.rate > 0.0:
            raise ContractError("sampling rate must be > 0")


@dataclass
class CorrelationResult:
    """Normalized cross-correlation curve over the normalized lag axis."""

    tau: np.ndarray       # normalized lag, within [-1, 1]
    r_curve: np.ndarray   # values in [0, 1]
    r_peak: float
    tau_peak: float


def cross_correlation(x: SignalSeries, y: SignalSeries) -> CorrelationResult:
    """Similarity in shape of two series as a scalar in [0, 1] per lag.

    A positive peak lag means y lags x (y looks like a delayed x).
    """
    if abs(x.rate - y.rate) > 1e-9 * max(x.rate, y.rate):
        raise ContractError(f"sampling rates differ: {x.rate} vs {y.rate}")
    xm = x.samples - x.samples.mean()
    ym = y.samples - y.samples.mean()
    sx = float(np.sqrt(np.sum(xm * xm)))
    sy = float(np.sqrt(np.sum(ym * ym)))
    if sx == 0.0 or sy == 0.0:
        raise ContractError("cross-correlation is undefined for constant series")
    nx = xm.shape[0]
    ny = ym.shape[0]
    # full correlation R(lag) = sum_i xm[i] * ym[i + lag], lag in [-(nx-1), ny-1]
    raw = np.correlate(ym, xm, mode="full")
    lags = np.arange(-(nx - 1), ny)
    shorter = min(nx, ny)
    keep = np.abs(lags) <= shorter          # normalized lag axis stays in [-1, 1]
    lags = lags[keep]
    curve = np.minimum(np.abs(raw[keep]) / (sx * sy), 1.0)
    tau = lags / float(shorter)
    peak = int(np.argmax(curve))
    return CorrelationResult(tau, curve, float(curve[peak]), float(tau[peak]))


def emg_envelope(raw: SignalSeries, mvc: float, cutoff_hz: float = 2.0) -> SignalSeries:
    """Rectified, low-pass filtered activation envelope in percent of MVC."""
    if not mvc > 0.0:
        raise ContractError("mvc must be > 0")
    nyquist = 0.5 * raw.rate
    if not 0.0 < cutoff_hz < nyquist:
        raise ContractError(f"cutoff {cutoff_hz} Hz must be below Nyquist {nyquist} Hz")
    rectified = np.abs(raw.samples)
    b, a = butter(2, cutoff_hz / nyquist, btype="low")
    envelope = filtfilt(b, a, rectified)
    percent = np.clip(envelope / mvc * 100.0, 0.0, 100.0)
    label = f"{raw.label} envelope" if raw.label else "envelope"
    return SignalSeries(percent, raw.rate, label)


@dataclass
class ReductionStats:
    """Assisted-vs-unassisted activation statistics, deltas in percent."""

    mean_with: float
    max_with: float
    mean_without: float
    max_without: float
    delta_mean: float
    delta_max: float

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def reduction_stats(with_r: SignalSeries, without_r: SignalSeries) -> ReductionStats:
    """delta = (without - with) / without * 100 for the mean and the max."""
    mean_with = float(with_r.samples.mean())
    max_with = float(with_r.samples.max())
    mean_without = float(without_r.samples.mean())
    max_without = float(without_r.samples.max())
    if mean_without == 0.0 or max_without == 0.0:
        raise ContractError("reduction is undefined when the unassisted mean/max is zero")
    return ReductionStats(
        mean_with,
        max_with,
        mean_without,
        max_without,
        (mean_without - mean_with) / mean_without * 100.0,
        (max_without - max_with) / max_without * 100.0,
    )


def subject_summary(stats: list) -> dict:
    """Column-wise mean and sample standard deviation over subjects.

    A single subject gets std 0 (the N-1 estimator is undefined there).
    """
    if not stats:
        raise ContractError("subject summary needs at least one subject")
    out = {}
    for f in fields(ReductionStats):
        column = np.array([getattr(s, f.name) for s in stats], dtype=float)
        std = float(column.std(ddof=1)) if column.shape[0] > 1 else 0.0
        out[f.name] = {"mean": float(column.mean()), "std": std}
    return out


def read_signal_csv(path, column: str, time_column: str | None = None) -> SignalSeries:
    """Load one column of a headered CSV; the time column sets the rate.

    The time column defaults to the first column. Sampling must be uniform.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if time_column is None:
            time_column = header[0]
        for name in (time_column, column):
            if name not in header:
                raise ConfigError(f"{path}: unknown column '{name}' (header: {header})")
        t_idx = header.index(time_column)
        v_idx = header.index(column)
        times = []
        values = []
        for rownum, row in enumerate(reader, start=2):
            if not row:
                continue
            try:
                times.append(float(row[t_idx]))
                values.append(float(row[v_idx]))
            except (ValueError, IndexError):
                raise ConfigError(f"{path}: malformed row {rownum}") from None
    if len(values) < 2:
        raise ConfigError(f"{path}: need at least two data rows")
    dt = np.diff(np.asarray(times))
    if np.any(dt <= 0.0) or np.max(np.abs(dt - dt[0])) > 1e-6 * max(dt[0], 1e-12):
        raise ConfigError(f"{path}: time column must be uniformly increasing")
    return SignalSeries(np.asarray(values), 1.0 / dt[0], column)
