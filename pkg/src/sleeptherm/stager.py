"""Rule-based sleep staging from smoothed spectral windows.

Every epoch starts as light sleep. LF/HF below the SWS threshold marks
deep sleep; a wide swing of the HF peak frequency over the trailing
windows marks REM, which overrides SWS. Optional wake detection flags
windows whose total LF+HF power is in the top percentile of the night.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import IntEnum

import numpy as np

from .errors import InsufficientDataError
from .spectral import SpectralWindow, lf_hf

HYPNOGRAM_CSV_HEADER = "t_start_s,t_end_s,stage,depth_code"


class SleepStage(IntEnum):
    """Sleep stage; the value is the depth code, deepest first."""

    SWS = 1
    LIGHT = 2
    REM = 3
    WAKE = 4

    @property
    def depth_code(self) -> int:
        return int(self)


@dataclass(frozen=True)
class Epoch:
    t_start: float
    t_end: float
    stage: SleepStage

    @property
    def duration(self) -> float:
        return self.t_end - self.t_start


@dataclass(frozen=True)
class Hypnogram:
    epochs: tuple[Epoch, ...]

    def __post_init__(self):
        epochs = tuple(self.epochs)
        object.__setattr__(self, "epochs", epochs)
        if not epochs:
            return
        width = epochs[0].duration
        if width <= 0:
            raise ValueError("epochs must have positive duration")
        for a, b in zip(epochs, epochs[1:]):
            if abs(b.t_start - a.t_end) > 1e-6:
                raise ValueError(f"epochs not contiguous at t={a.t_end}")
        for e in epochs:
            if abs(e.duration - width) > 1e-6:
                raise ValueError("epochs must have equal duration")

    @classmethod
    def from_stages(cls, stages, epoch_len: float = 300.0, start: float = 0.0) -> "Hypnogram":
        return cls(
            tuple(
                Epoch(start + i * epoch_len, start + (i + 1) * epoch_len, SleepStage(s))
                for i, s in enumerate(stages)
            )
        )

    def __len__(self):
        return len(self.epochs)

    def __iter__(self):
        return iter(self.epochs)

    @property
    def stages(self) -> list[SleepStage]:
        return [e.stage for e in self.epochs]

    def to_csv(self) -> str:
        rows = [HYPNOGRAM_CSV_HEADER]
        rows.extend(
            f"{e.t_start:.6f},{e.t_end:.6f},{e.stage.name},{e.stage.depth_code}" for e in self.epochs
        )
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "Hypnogram":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != HYPNOGRAM_CSV_HEADER:
            raise ValueError(f"expected header {HYPNOGRAM_CSV_HEADER!r}")
        epochs = []
        for ln in lines[1:]:
            t0, t1, name, _ = ln.split(",")
            epochs.append(Epoch(float(t0), float(t1), SleepStage[name]))
        return cls(tuple(epochs))


@dataclass(frozen=True)
class StagerConfig:
    sws_ratio_threshold: float = 1.0
    rem_peak_variability_threshold: float = 0.65
    smoothing_windows: int = 3
    wake_detection: bool = False
    wake_power_percentile: float = 90.0

    def __post_init__(self):
        if self.sws_ratio_threshold <= 0 or self.rem_peak_variability_threshold <= 0:
            raise ValueError("thresholds must be positive")
        if self.smoothing_windows < 1 or self.smoothing_windows % 2 == 0:
            raise ValueError("smoothing_windows must be odd and at least 1")
        if not 0 < self.wake_power_percentile <= 100:
            raise ValueError("wake_power_percentile must lie in (0, 100]")


def smooth_windows(windows, cfg: StagerConfig = StagerConfig()) -> list[SpectralWindow]:
    """Centered moving average of band powers over ``smoothing_windows`` windows.

    Edge windows average over whatever neighbours exist. The LF/HF ratio
    is recomputed from the averaged powers; HF peak frequency and power
    stay those of the center window.
    """
    windows = list(windows)
    span = cfg.smoothing_windows
    if len(windows) < span:
        raise InsufficientDataError(f"need at least {span} windows to smooth, got {len(windows)}")
    half = span // 2
    powers = np.array([[w.vlf_power, w.lf_power, w.hf_power] for w in windows])
    out = []
    for i, w in enumerate(windows):
        vlf, lf, hf = powers[max(0, i - half) : i + half + 1].mean(axis=0)
        out.append(
            replace(
                w,
                vlf_power=float(vlf),
                lf_power=float(lf),
                hf_power=float(hf),
                lf_hf_ratio=lf_hf(float(lf), float(hf)),
            )
        )
    return out


def classify(windows, cfg: StagerConfig = StagerConfig()) -> Hypnogram:
    """Label each (smoothed) window; precedence WAKE > REM > SWS > LIGHT."""
    windows = list(windows)
    if not windows:
        raise ValueError("classify needs at least one window")
    span = cfg.smoothing_windows
    peaks = np.array([w.hf_peak_freq for w in windows])
    if cfg.wake_detection:
        total = np.array([w.lf_power + w.hf_power for w in windows])
        wake_cut = float(np.percentile(total, cfg.wake_power_percentile))

    epochs = []
    for i, w in enumerate(windows):
        stage = SleepStage.LIGHT
        if w.lf_hf_ratio < cfg.sws_ratio_threshold:
            stage = SleepStage.SWS
        recent = peaks[max(0, i - span + 1) : i + 1]
        if recent.max() - recent.min() > cfg.rem_peak_variability_threshold:
            stage = SleepStage.REM
        if cfg.wake_detection and w.lf_power + w.hf_power > wake_cut:
            stage = SleepStage.WAKE
        epochs.append(Epoch(w.t_start, w.t_end, stage))
    return Hypnogram(tuple(epochs))


def stage_percentages(h: Hypnogram) -> dict[SleepStage, float]:
    if not len(h):
        raise ValueError("empty hypnogram")
    total = sum(e.duration for e in h)
    share = {s: 0.0 for s in SleepStage}
    for e in h:
        share[e.stage] += e.duration
    return {s: 100.0 * d / total for s, d in share.items()}


def percentages_to_json(pct: dict) -> str:
    return json.dumps({s.name: v for s, v in pct.items()}, indent=2) + "\n"
