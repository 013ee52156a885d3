"""HRV-based sleep staging and ambient-temperature feedback control."""

from .controller import ControllerConfig, ControllerState, DfaState, TemperatureProfile, delta_schedule, run, slope, step
from .errors import (
    DataQualityError,
    EmptyRecordingError,
    InsufficientDataError,
    RRParseError,
    RRValidationError,
    SleepThermError,
)
from .rr import IngestConfig, RRSeries, filter_artifacts, parse_rr, to_csv
from .simulator import SessionReport, SimConfig, closed_loop_run, gen_hypnogram, gen_rr
from .spectral import (
    FrequencyBands,
    SpectralConfig,
    SpectralWindow,
    Spectrum,
    analyze_window,
    band_power,
    periodogram,
    resample_tachogram,
    windowize,
)
from .stager import Hypnogram, SleepStage, StagerConfig, classify, smooth_windows, stage_percentages

__version__ = "0.1.0"
