"""Frequency-domain HRV: tachogram resampling, periodogram and band powers.

Each analysis window (5 minutes by default) is resampled onto a uniform
grid, detrended, Hann-tapered and transformed with a single FFT. Band
powers are trapezoidal integrals of the one-sided PSD.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline
from scipy.signal import detrend, get_window

from .errors import InsufficientDataError
from .rr import RRSeries

WINDOW_CSV_HEADER = "t_start_s,t_end_s,vlf,lf,hf,lf_hf,hf_peak_hz,hf_peak_psd"


@dataclass(frozen=True)
class FrequencyBands:
    vlf: tuple[float, float] = (0.0, 0.04)
    lf: tuple[float, float] = (0.04, 0.15)
    hf: tuple[float, float] = (0.15, 0.40)
    hf_peak_search_upper: float = 1.0

    def __post_init__(self):
        if self.vlf[0] != 0.0:
            raise ValueError("VLF band must start at 0 Hz")
        edges = [self.vlf, self.lf, self.hf]
        for lo, hi in edges:
            if not lo < hi:
                raise ValueError(f"empty band ({lo}, {hi})")
        if self.vlf[1] != self.lf[0] or self.lf[1] != self.hf[0]:
            raise ValueError("bands must be contiguous")
        if not self.hf[1] <= self.hf_peak_search_upper:
            raise ValueError("hf_peak_search_upper must not be below the HF upper edge")


@dataclass(frozen=True)
class SpectralConfig:
    window_len: float = 300.0
    window_stride: float = 300.0
    resample_rate: float = 4.0
    taper: bool = True

    def __post_init__(self):
        if self.window_len < 60:
            raise ValueError(f"window_len must be at least 60 s, got {self.window_len}")
        if not 0 < self.window_stride <= self.window_len:
            raise ValueError("window_stride must lie in (0, window_len]")
        if self.resample_rate <= 0:
            raise ValueError("resample_rate must be positive")

    @property
    def n_samples(self) -> int:
        return int(round(self.window_len * self.resample_rate))


def check_compatible(cfg: SpectralConfig, bands: FrequencyBands) -> None:
    nyquist = cfg.resample_rate / 2
    if not bands.hf_peak_search_upper < nyquist:
        raise ValueError(
            f"hf_peak_search_upper {bands.hf_peak_search_upper} Hz must be below Nyquist {nyquist} Hz"
        )
    if cfg.resample_rate < 2 * bands.hf_peak_search_upper:
        raise ValueError("resample_rate must be at least twice hf_peak_search_upper")


@dataclass(frozen=True, eq=False)
class Spectrum:
    freqs: np.ndarray
    psd: np.ndarray

    @property
    def df(self) -> float:
        return float(self.freqs[1] - self.freqs[0]) if self.freqs.size > 1 else 0.0

    @property
    def nyquist(self) -> float:
        return float(self.freqs[-1])


@dataclass(frozen=True)
class SpectralWindow:
    t_start: float
    t_end: float
    vlf_power: float
    lf_power: float
    hf_power: float
    lf_hf_ratio: float
    hf_peak_freq: float
    hf_peak_power: float
    beat_count: int

    def to_csv_row(self) -> str:
        return (
            f"{self.t_start:.6f},{self.t_end:.6f},{self.vlf_power:.9e},{self.lf_power:.9e},"
            f"{self.hf_power:.9e},{self.lf_hf_ratio:.9e},{self.hf_peak_freq:.6f},{self.hf_peak_power:.9e}"
        )


def lf_hf(lf_power: float, hf_power: float) -> float:
    if hf_power > 0:
        return lf_power / hf_power
    return math.inf if lf_power > 0 else math.nan


def resample_tachogram(series: RRSeries, cfg: SpectralConfig = SpectralConfig(), t_start=None):
    """Cubic-spline the tachogram onto a uniform grid and detrend it.

    The grid holds ``window_len * resample_rate`` samples starting at
    ``t_start`` (default: ``series.start``). Grid points outside the beat
    timestamps take the nearest edge value. The mean and linear trend are
    removed.

    Returns ``(t, values)``.
    """
    if len(series) < 2:
        raise InsufficientDataError(f"need at least 2 beats, got {len(series)}")
    t0 = series.start if t_start is None else float(t_start)
    ts = series.timestamps
    if ts[-1] - t0 < cfg.window_len - 1e-9:
        raise InsufficientDataError(
            f"recording spans {ts[-1] - t0:.1f} s, shorter than the {cfg.window_len:g} s window"
        )
    grid = t0 + np.arange(cfg.n_samples) / cfg.resample_rate
    spline = CubicSpline(ts, series.intervals)
    values = spline(np.clip(grid, ts[0], ts[-1]))
    return grid, detrend(values, type="linear")


def periodogram(values, cfg: SpectralConfig = SpectralConfig()) -> Spectrum:
    """One-sided, power-normalized single-taper periodogram in s^2/Hz.

    ``sum(psd) * df`` equals ``sum((x*w)**2) / sum(w**2)``, i.e. the
    variance of a zero-mean input when the taper is off.
    """
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 2:
        raise InsufficientDataError("periodogram needs at least 2 samples")
    fs = cfg.resample_rate
    w = get_window("hann", n) if cfg.taper else np.ones(n)
    spec = np.abs(np.fft.rfft(x * w)) ** 2 / (fs * np.sum(w**2))
    if n % 2 == 0:
        spec[1:-1] *= 2
    else:
        spec[1:] *= 2
    return Spectrum(np.fft.rfftfreq(n, d=1.0 / fs), spec)


def band_power(spec: Spectrum, lo: float, hi: float) -> float:
    """Trapezoidal integral of the PSD over ``[lo, hi)``.

    Band edges that fall between bins are handled by linear interpolation
    of the PSD, so adjacent bands add up exactly to their union.
    """
    nyq = spec.nyquist
    if not (0 <= lo < hi and hi <= nyq * (1 + 1e-12)):
        raise ValueError(f"invalid band [{lo}, {hi}) for Nyquist {nyq}")
    hi = min(hi, nyq)
    f, p = spec.freqs, spec.psd
    inner = (f > lo) & (f < hi)
    xs = np.concatenate(([lo], f[inner], [hi]))
    ys = np.concatenate(([np.interp(lo, f, p)], p[inner], [np.interp(hi, f, p)]))
    return float(trapezoid(ys, xs))


def total_power(spec: Spectrum) -> float:
    return float(trapezoid(spec.psd, spec.freqs))


def summarize_spectrum(spec: Spectrum, bands: FrequencyBands, t_start=0.0, t_end=0.0, beat_count=0):
    vlf = band_power(spec, *bands.vlf)
    lf = band_power(spec, *bands.lf)
    hf = band_power(spec, *bands.hf)
    search = np.flatnonzero((spec.freqs >= bands.hf[0]) & (spec.freqs <= bands.hf_peak_search_upper))
    if search.size == 0:
        raise ValueError("no spectral bins inside the HF peak search range")
    k = search[np.argmax(spec.psd[search])]
    return SpectralWindow(
        t_start=float(t_start),
        t_end=float(t_end),
        vlf_power=vlf,
        lf_power=lf,
        hf_power=hf,
        lf_hf_ratio=lf_hf(lf, hf),
        hf_peak_freq=float(spec.freqs[k]),
        hf_peak_power=float(spec.psd[k]),
        beat_count=int(beat_count),
    )


def analyze_window(
    series: RRSeries,
    cfg: SpectralConfig = SpectralConfig(),
    bands: FrequencyBands = FrequencyBands(),
    t_start=None,
) -> SpectralWindow:
    """Band powers, LF/HF ratio and HF peak for one window of ``cfg.window_len`` seconds."""
    check_compatible(cfg, bands)
    t0 = series.start if t_start is None else float(t_start)
    t1 = t0 + cfg.window_len
    _, values = resample_tachogram(series, cfg, t_start=t0)
    spec = periodogram(values, cfg)
    ts = series.timestamps
    beats = int(np.count_nonzero((ts >= t0) & (ts < t1)))
    return summarize_spectrum(spec, bands, t0, t1, beats)


def window_starts(series: RRSeries, cfg: SpectralConfig) -> np.ndarray:
    span = series.duration
    if len(series) < 2 or span < cfg.window_len - 1e-9:
        raise InsufficientDataError(
            f"recording spans {span:.1f} s, shorter than one {cfg.window_len:g} s window"
        )
    n = int(math.floor((span - cfg.window_len) / cfg.window_stride + 1e-9)) + 1
    return series.start + cfg.window_stride * np.arange(n)


def windowize(
    series: RRSeries,
    cfg: SpectralConfig = SpectralConfig(),
    bands: FrequencyBands = FrequencyBands(),
) -> list[SpectralWindow]:
    """Consecutive windows from the recording start; a trailing partial window is dropped."""
    check_compatible(cfg, bands)
    out = []
    for t0 in window_starts(series, cfg):
        chunk = series.between(t0, t0 + cfg.window_len)
        out.append(analyze_window(chunk, cfg, bands, t_start=t0))
    return out


def windows_to_csv(windows) -> str:
    return "\n".join([WINDOW_CSV_HEADER, *(w.to_csv_row() for w in windows)]) + "\n"
