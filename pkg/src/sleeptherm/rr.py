"""RR interval ingestion: parsing, validation, serialization and artifact filtering.

An RR series is the sequence of beat-to-beat intervals in seconds. Beat
``i`` occurs at ``start + sum(intervals[:i + 1])``; the implicit beat at
``start`` opens the first interval.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from .errors import DataQualityError, EmptyRecordingError, RRParseError, RRValidationError

CSV_HEADER = "t_s,rr_s"
MS_MEDIAN_CUTOFF = 10.0
MAX_REPLACED_FRACTION = 0.2
# Shorter series are too small for a replaced-fraction judgement.
MIN_BEATS_FOR_QUALITY_GATE = 10


@dataclass(frozen=True, eq=False)
class RRSeries:
    """Timestamped inter-beat intervals.

    ``timestamps`` is derived, never passed in, so it always equals the
    cumulative sum of ``intervals`` offset by ``start``.
    """

    intervals: np.ndarray
    subject_id: str = ""
    start: float = 0.0
    timestamps: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rr = np.asarray(self.intervals, dtype=float).copy()
        if rr.ndim != 1:
            raise RRValidationError("intervals must be one-dimensional")
        if not np.all(np.isfinite(rr)):
            raise RRValidationError("intervals must be finite")
        bad = np.flatnonzero(rr <= 0)
        if bad.size:
            raise RRValidationError(f"interval {int(bad[0])} is not positive ({rr[bad[0]]!r})")
        rr.setflags(write=False)
        ts = float(self.start) + np.cumsum(rr)
        ts.setflags(write=False)
        object.__setattr__(self, "intervals", rr)
        object.__setattr__(self, "start", float(self.start))
        object.__setattr__(self, "timestamps", ts)

    def __len__(self):
        return self.intervals.size

    @property
    def end(self) -> float:
        return float(self.timestamps[-1]) if len(self) else self.start

    @property
    def duration(self) -> float:
        return self.end - self.start

    def equals(self, other: "RRSeries", atol: float = 0.0) -> bool:
        return (
            len(self) == len(other)
            and self.subject_id == other.subject_id
            and abs(self.start - other.start) <= atol
            and np.allclose(self.intervals, other.intervals, rtol=0.0, atol=atol)
        )

    def with_intervals(self, intervals) -> "RRSeries":
        return RRSeries(intervals, subject_id=self.subject_id, start=self.start)

    def between(self, t0: float, t1: float, pad: int = 1) -> "RRSeries":
        """Beats with timestamps in ``[t0, t1]`` plus ``pad`` neighbours on each side.

        The padding gives interpolation support at the slice edges.
        """
        ts = self.timestamps
        i0 = int(np.searchsorted(ts, t0, side="left")) - pad
        i1 = int(np.searchsorted(ts, t1, side="right")) + pad
        i0 = max(i0, 0)
        i1 = min(i1, len(self))
        if i1 <= i0:
            raise RRValidationError(f"no beats between {t0} and {t1}")
        new_start = self.start if i0 == 0 else float(ts[i0 - 1])
        return RRSeries(self.intervals[i0:i1], subject_id=self.subject_id, start=new_start)


@dataclass(frozen=True)
class IngestConfig:
    min_rr: float = 0.3
    max_rr: float = 2.0
    max_relative_jump: float = 0.2

    def __post_init__(self):
        if not 0 < self.min_rr < self.max_rr:
            raise ValueError(f"need 0 < min_rr < max_rr, got {self.min_rr}, {self.max_rr}")
        if not 0 < self.max_relative_jump < 1:
            raise ValueError(f"max_relative_jump must lie in (0, 1), got {self.max_relative_jump}")


def _is_number(token: str) -> bool:
    try:
        float(token)
    except ValueError:
        return False
    return True


def parse_rr(text, subject_id: str = "") -> RRSeries:
    """Parse a line-oriented RR recording.

    Accepts one value per line, or the CSV form written by :func:`to_csv`
    (a header row is recognised and the ``rr_s`` column, or the last
    column, is used). ``#`` lines and blank lines are skipped. Values are
    taken as milliseconds when their median is 10 or more.

    Parameters
    ----------
    text : str or iterable of str
        File contents or an open text stream.
    subject_id : str
        Label stored on the returned series.

    Raises
    ------
    RRParseError
        A value is not numeric; carries the 1-based line number.
    EmptyRecordingError
        No values were found.
    RRValidationError
        A value is zero or negative; carries the line number.
    """
    lines = io.StringIO(text) if isinstance(text, str) else text
    values = []
    line_numbers = []
    column = None
    seen_data = False
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = [f.strip() for f in line.split(",")]
        if not seen_data and column is None and len(fields) > 1 and not any(map(_is_number, fields)):
            column = fields.index("rr_s") if "rr_s" in fields else len(fields) - 1
            seen_data = True
            continue
        seen_data = True
        idx = column if column is not None else len(fields) - 1
        if idx >= len(fields):
            raise RRParseError(f"expected at least {idx + 1} columns", line=lineno)
        token = fields[idx]
        try:
            value = float(token)
        except ValueError:
            raise RRParseError(f"not a number: {token!r}", line=lineno) from None
        if not np.isfinite(value):
            raise RRParseError(f"not a finite number: {token!r}", line=lineno)
        values.append(value)
        line_numbers.append(lineno)

    if not values:
        raise EmptyRecordingError("recording contains no RR values")
    rr = np.asarray(values, dtype=float)
    bad = np.flatnonzero(rr <= 0)
    if bad.size:
        raise RRValidationError(f"nonpositive interval {rr[bad[0]]!r}", line=line_numbers[bad[0]])
    if np.median(rr) >= MS_MEDIAN_CUTOFF:
        rr = rr / 1000.0
    return RRSeries(rr, subject_id=subject_id)


def to_csv(series: RRSeries) -> str:
    """Canonical ``t_s,rr_s`` serialization with 6 decimal places."""
    out = [CSV_HEADER]
    out.extend(f"{t:.6f},{r:.6f}" for t, r in zip(series.timestamps, series.intervals))
    return "\n".join(out) + "\n"


def filter_artifacts(series: RRSeries, cfg: IngestConfig = IngestConfig()) -> tuple[RRSeries, int]:
    """Replace out-of-range and jumpy beats by interpolating accepted neighbours.

    A beat is rejected when it lies outside ``[min_rr, max_rr]`` or differs
    from the previously accepted beat by more than ``max_relative_jump``
    of that beat. Rejected runs are linearly interpolated by beat index
    between the accepted beats around them (held flat at the ends).

    Returns the cleaned series and the number of replaced beats. Raises
    :class:`DataQualityError` when more than 20% of the beats are replaced
    (checked for series of 10 beats or more) or when no beat is usable.
    """
    rr = series.intervals
    n = rr.size
    accepted = np.zeros(n, dtype=bool)
    prev = None
    for i, x in enumerate(rr):
        if not cfg.min_rr <= x <= cfg.max_rr:
            continue
        if prev is not None and abs(x - prev) > cfg.max_relative_jump * prev:
            continue
        accepted[i] = True
        prev = x

    n_replaced = int(n - accepted.sum())
    if n_replaced == n or (n >= MIN_BEATS_FOR_QUALITY_GATE and n_replaced > MAX_REPLACED_FRACTION * n):
        raise DataQualityError(
            f"{n_replaced} of {n} beats ({100.0 * n_replaced / n:.1f}%) rejected as artifacts"
        )
    if n_replaced == 0:
        return series, 0

    idx = np.arange(n)
    cleaned = rr.copy()
    cleaned[~accepted] = np.interp(idx[~accepted], idx[accepted], rr[accepted])
    return series.with_intervals(cleaned), n_replaced
