"""Seeded ground-truth hypnograms, stage-conditioned RR series and the end-to-end harness.

The RR model is a two-tone sinusoid plus white noise whose LF and HF
amplitudes depend on the current stage. In REM the HF tone frequency is
redrawn every epoch near either the bottom or the top of the wander span
so the HF peak swings widely between neighbouring windows.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import controller as ctl
from .rr import RRSeries
from .spectral import FrequencyBands, SpectralConfig, SpectralWindow, windowize
from .stager import Hypnogram, SleepStage, StagerConfig, classify, smooth_windows, stage_percentages

EPOCH_S = 300.0

SWS_SHARE = (0.35, 0.05)
REM_SHARE = (0.10, 0.35)
# Fraction of the wander span used at each end by the alternating REM draw.
REM_EDGE = 0.02


def _default_amps():
    return {
        SleepStage.SWS: (0.01, 0.03),
        SleepStage.LIGHT: (0.025, 0.0125),
        SleepStage.REM: (0.035, 0.015),
        SleepStage.WAKE: (0.04, 0.03),
    }


@dataclass(frozen=True)
class SimConfig:
    seed: int = 42
    duration: float = 8.0
    cycle_mean: float = 90.0
    cycle_sd: float = 20.0
    base_rr: float = 0.45
    lf_freq: float = 0.10
    hf_freq: float = 0.25
    stage_amp: dict = field(default_factory=_default_amps)
    rem_peak_wander: float = 0.7
    noise_sd: float = 0.005

    def __post_init__(self):
        amps = {SleepStage[k] if isinstance(k, str) else SleepStage(k): tuple(map(float, v))
                for k, v in self.stage_amp.items()}
        missing = set(SleepStage) - set(amps)
        if missing:
            raise ValueError(f"stage_amp lacks {sorted(s.name for s in missing)}")
        object.__setattr__(self, "stage_amp", amps)
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.base_rr <= 0:
            raise ValueError("base_rr must be positive")
        for stage, (a_lf, a_hf) in amps.items():
            if a_lf < 0 or a_hf < 0 or max(a_lf, a_hf) >= self.base_rr / 4:
                raise ValueError(f"{stage.name} amplitudes must be in [0, base_rr/4)")
        if self.cycle_mean - 3 * self.cycle_sd <= 0 or self.cycle_sd < 0:
            raise ValueError("cycle_mean - 3*cycle_sd must be positive")
        if self.noise_sd < 0 or self.rem_peak_wander < 0:
            raise ValueError("noise_sd and rem_peak_wander must be nonnegative")

    @property
    def duration_s(self) -> float:
        return self.duration * 3600.0


@dataclass(frozen=True)
class CyclePlan:
    start_min: float
    length_min: float
    sws_share: float
    rem_share: float

    def segments(self):
        """``(stage, start_min, end_min)`` in the order LIGHT, SWS, LIGHT, REM."""
        light = 1.0 - self.sws_share - self.rem_share
        parts = [
            (SleepStage.LIGHT, light / 2),
            (SleepStage.SWS, self.sws_share),
            (SleepStage.LIGHT, light / 2),
            (SleepStage.REM, self.rem_share),
        ]
        t = self.start_min
        out = []
        for stage, share in parts:
            end = t + share * self.length_min
            out.append((stage, t, end))
            t = end
        return out


def plan_cycles(cfg: SimConfig) -> list[CyclePlan]:
    """Draw cycle lengths until the night is filled and assign each its stage shares."""
    rng = np.random.default_rng([cfg.seed, 0])
    total = cfg.duration * 60.0
    lo, hi = cfg.cycle_mean - 2 * cfg.cycle_sd, cfg.cycle_mean + 2 * cfg.cycle_sd
    lengths = []
    acc = 0.0
    while acc < total:
        length = float(np.clip(rng.normal(cfg.cycle_mean, cfg.cycle_sd), lo, hi))
        lengths.append(length)
        acc += length
    n = len(lengths)
    plans = []
    start = 0.0
    for k, length in enumerate(lengths):
        pos = k / (n - 1) if n > 1 else 0.0
        sws = SWS_SHARE[0] + (SWS_SHARE[1] - SWS_SHARE[0]) * pos
        rem = REM_SHARE[0] + (REM_SHARE[1] - REM_SHARE[0]) * pos
        plans.append(CyclePlan(start, length, sws, rem))
        start += length
    return plans


def _quantize(minutes: float) -> float:
    return 5.0 * round(minutes / 5.0)


def gen_hypnogram(cfg: SimConfig) -> Hypnogram:
    """Ground-truth hypnogram on 5-minute epochs, truncated to ``cfg.duration``."""
    n_epochs = max(1, int(round(cfg.duration * 60.0 / 5.0)))
    stages = [SleepStage.LIGHT] * n_epochs
    for plan in plan_cycles(cfg):
        for stage, t0, t1 in plan.segments():
            a, b = int(_quantize(t0) // 5), int(_quantize(t1) // 5)
            for j in range(max(a, 0), min(b, n_epochs)):
                stages[j] = stage
    return Hypnogram.from_stages(stages, EPOCH_S)


def rem_high_pattern(n: int) -> list[bool]:
    """Which epochs of an n-epoch REM run get the HF tone at the top of the wander span.

    The first epoch is high, then every third epoch counted back from the
    run end, so any three consecutive epochs hold one high and one low and
    runs of three or more end on two lows.
    """
    return [i == 0 or (n - 1 - i) % 3 == 2 for i in range(n)]


def _hf_frequencies(truth: Hypnogram, cfg: SimConfig, rng) -> np.ndarray:
    stages = truth.stages
    freqs = np.full(len(stages), cfg.hf_freq)
    j = 0
    while j < len(stages):
        if stages[j] is not SleepStage.REM:
            j += 1
            continue
        k = j
        while k < len(stages) and stages[k] is SleepStage.REM:
            k += 1
        for offset, high in enumerate(rem_high_pattern(k - j)):
            u = rng.uniform(0.0, REM_EDGE)
            freqs[j + offset] = cfg.hf_freq + cfg.rem_peak_wander * (1.0 - u if high else u)
        j = k
    return freqs


def gen_rr(truth: Hypnogram, cfg: SimConfig) -> RRSeries:
    """Integrate the stage-conditioned RR model into beats covering the hypnogram.

    Each beat's interval is the model evaluated at the previous beat plus
    Gaussian noise; beats are generated until the hypnogram end is passed.
    """
    rng = np.random.default_rng([cfg.seed, 1])
    phase = rng.uniform(0.0, 2 * math.pi)
    hf_freqs = _hf_frequencies(truth, cfg, rng)
    epochs = truth.epochs
    t_origin = epochs[0].t_start
    width = epochs[0].duration
    end = epochs[-1].t_end
    amps = [cfg.stage_amp[e.stage] for e in epochs]
    n_ep = len(epochs)
    two_pi = 2 * math.pi

    intervals = []
    t = t_origin
    while t < end:
        j = min(int((t - t_origin) // width), n_ep - 1)
        a_lf, a_hf = amps[j]
        rr = (
            cfg.base_rr
            + a_lf * math.sin(two_pi * cfg.lf_freq * t)
            + a_hf * math.sin(two_pi * hf_freqs[j] * t + phase)
            + cfg.noise_sd * rng.standard_normal()
        )
        intervals.append(rr)
        t += rr
    return RRSeries(np.array(intervals), subject_id=f"sim-{cfg.seed}", start=t_origin)


@dataclass(frozen=True)
class SessionReport:
    truth: Hypnogram
    detected: Hypnogram
    windows: list
    profile: ctl.TemperatureProfile
    epoch_accuracy: float
    stage_percentages: dict
    rr: RRSeries = None

    def summary(self) -> dict:
        temps = self.profile.temperatures
        return {
            "epoch_accuracy": self.epoch_accuracy,
            "stage_percentages": {s.name: v for s, v in self.stage_percentages.items()},
            "n_epochs": len(self.detected),
            "ta_min": min(temps) if temps else None,
            "ta_max": max(temps) if temps else None,
            "ta_final": temps[-1] if temps else None,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), indent=2) + "\n"


def epoch_accuracy(truth: Hypnogram, detected: Hypnogram) -> float:
    n = min(len(truth), len(detected))
    if n == 0:
        return 0.0
    hits = sum(a.stage is b.stage for a, b in zip(truth.epochs[:n], detected.epochs[:n]))
    return hits / n


def closed_loop_run(
    cfg: SimConfig = SimConfig(),
    scfg: SpectralConfig = SpectralConfig(),
    stcfg: StagerConfig = StagerConfig(),
    ccfg: ctl.ControllerConfig = None,
    bands: FrequencyBands = FrequencyBands(),
) -> SessionReport:
    """Simulate a night, stage it from the synthetic RR data and drive the controller."""
    if ccfg is None:
        raise ValueError("a ControllerConfig with baseline_ta is required")
    if abs(ccfg.tick - scfg.window_stride) > 1e-9:
        raise ValueError(f"controller tick {ccfg.tick} s must equal window stride {scfg.window_stride} s")
    truth = gen_hypnogram(cfg)
    rr = gen_rr(truth, cfg)
    windows: list[SpectralWindow] = windowize(rr, scfg, bands)
    detected = classify(smooth_windows(windows, stcfg), stcfg)
    n = min(len(truth), len(detected))
    truth = Hypnogram(truth.epochs[:n])
    detected = Hypnogram(detected.epochs[:n])
    windows = windows[:n]
    profile = ctl.run(detected, ccfg)
    return SessionReport(
        truth=truth,
        detected=detected,
        windows=windows,
        profile=profile,
        epoch_accuracy=epoch_accuracy(truth, detected),
        stage_percentages=stage_percentages(detected),
        rr=rr,
    )
