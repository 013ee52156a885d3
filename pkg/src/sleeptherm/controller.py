"""Three-state feedback automaton that turns a stage sequence into a temperature profile.

On every tick the slope between the previous and current stage depth
selects a state: deeper sleep (negative slope) cools by ``neg_delta``,
lighter sleep (positive slope) warms by ``pos_delta``, no change holds.
The two deltas start at 0.6/0.4 and converge linearly so that warming
steps outweigh cooling steps after ``crossover_hours``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields, replace
from enum import IntEnum
from typing import Iterable, Optional

from .stager import Hypnogram, SleepStage

PROFILE_CSV_HEADER = "t_s,ta_c,dfa,stage"


class DfaState(IntEnum):
    MINUS = -1
    NEUTRAL = 0
    PLUS = 1


@dataclass(frozen=True)
class ControllerConfig:
    baseline_ta: float
    neg_delta_0: float = 0.6
    pos_delta_0: float = 0.4
    crossover_hours: float = 3.5
    min_ta: float = 10.0
    max_offset: float = 3.0
    tick: float = 300.0

    def __post_init__(self):
        if not self.neg_delta_0 > self.pos_delta_0 > 0:
            raise ValueError("need neg_delta_0 > pos_delta_0 > 0")
        if self.crossover_hours <= 0:
            raise ValueError("crossover_hours must be positive")
        if not self.min_ta < self.baseline_ta:
            raise ValueError(f"baseline_ta {self.baseline_ta} must exceed min_ta {self.min_ta}")
        if self.max_offset <= 0:
            raise ValueError("max_offset must be positive")
        if self.tick <= 0:
            raise ValueError("tick must be positive")

    @property
    def lower_bound(self) -> float:
        return max(self.min_ta, self.baseline_ta - self.max_offset)

    @property
    def upper_bound(self) -> float:
        return self.baseline_ta + self.max_offset

    @classmethod
    def from_dict(cls, data: dict) -> "ControllerConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown controller settings: {sorted(unknown)}")
        if "baseline_ta" not in data:
            raise ValueError("baseline_ta is required")
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "ControllerConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class ControllerState:
    dfa: DfaState
    ta: float
    elapsed: float = 0.0
    prev_depth: Optional[int] = None

    @classmethod
    def initial(cls, cfg: ControllerConfig) -> "ControllerState":
        return cls(DfaState.NEUTRAL, cfg.baseline_ta)


@dataclass(frozen=True)
class ProfilePoint:
    t: float
    ta: float
    dfa: DfaState
    stage: SleepStage


@dataclass(frozen=True)
class TemperatureProfile:
    points: tuple[ProfilePoint, ...] = ()

    def __len__(self):
        return len(self.points)

    @property
    def temperatures(self) -> list[float]:
        return [p.ta for p in self.points]

    def to_csv(self) -> str:
        rows = [PROFILE_CSV_HEADER]
        rows.extend(f"{p.t:.6f},{p.ta:.6f},{p.dfa.name},{p.stage.name}" for p in self.points)
        return "\n".join(rows) + "\n"

    @classmethod
    def from_csv(cls, text: str) -> "TemperatureProfile":
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or lines[0].strip() != PROFILE_CSV_HEADER:
            raise ValueError(f"expected header {PROFILE_CSV_HEADER!r}")
        pts = []
        for ln in lines[1:]:
            t, ta, dfa, stage = ln.split(",")
            pts.append(ProfilePoint(float(t), float(ta), DfaState[dfa], SleepStage[stage]))
        return cls(tuple(pts))


def delta_schedule(elapsed: float, cfg: ControllerConfig) -> tuple[float, float]:
    """Return ``(pos_delta, neg_delta)`` at ``elapsed`` seconds into the night.

    Both move linearly at the rate that makes them equal at
    ``crossover_hours``; ``pos_delta`` stops growing at ``neg_delta_0`` and
    ``neg_delta`` stops shrinking at zero.
    """
    if elapsed < 0:
        raise ValueError(f"elapsed must be nonnegative, got {elapsed}")
    hours = elapsed / 3600.0
    rate = (cfg.neg_delta_0 - cfg.pos_delta_0) / (2.0 * cfg.crossover_hours)
    pos = min(cfg.pos_delta_0 + rate * hours, cfg.neg_delta_0)
    neg = max(0.0, cfg.neg_delta_0 - rate * hours)
    return pos, neg


def slope(prev_depth: int, curr_depth: int) -> int:
    return int(curr_depth) - int(prev_depth)


def step(state: ControllerState, stage: SleepStage, cfg: ControllerConfig):
    """Advance one tick. Returns ``(new_state, emitted_point)``.

    The point carries the time at which the tick started and the
    temperature commanded for it.
    """
    stage = SleepStage(stage)
    depth = stage.depth_code
    s = 0 if state.prev_depth is None else slope(state.prev_depth, depth)
    pos, neg = delta_schedule(state.elapsed, cfg)
    if s > 0:
        dfa, ta = DfaState.PLUS, state.ta + pos
    elif s < 0:
        dfa, ta = DfaState.MINUS, state.ta - neg
    else:
        dfa, ta = DfaState.NEUTRAL, state.ta
    ta = min(max(ta, cfg.lower_bound), cfg.upper_bound)
    point = ProfilePoint(state.elapsed, ta, dfa, stage)
    new = replace(state, dfa=dfa, ta=ta, elapsed=state.elapsed + cfg.tick, prev_depth=depth)
    return new, point


def run(stages: Hypnogram | Iterable[SleepStage], cfg: ControllerConfig) -> TemperatureProfile:
    if isinstance(stages, Hypnogram):
        stages = stages.stages
    state = ControllerState.initial(cfg)
    points = []
    for stage in stages:
        state, point = step(state, stage, cfg)
        points.append(point)
    return TemperatureProfile(tuple(points))
