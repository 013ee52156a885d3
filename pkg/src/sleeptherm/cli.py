"""Command-line entry point.

    sleeptherm analyze  --input rr.txt --out DIR     windows.csv
    sleeptherm stage    --input rr.txt --out DIR     detected.csv, percentages.json
    sleeptherm control  --input rr.txt --out DIR --baseline-ta 24   profile.csv
    sleeptherm simulate --out DIR --baseline-ta 24 [--seed N]   full session directory
    sleeptherm report   --input DIR                  summary table

``--config`` takes a JSON document with optional sections ``ingest``,
``spectral``, ``bands``, ``stager``, ``controller`` and ``sim`` whose keys
mirror the config dataclass fields. Command-line flags win over the file.
"""

from __future__ import annotations

import json
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

import click

from . import controller as ctl
from .errors import SleepThermError
from .rr import IngestConfig, filter_artifacts, parse_rr, to_csv
from .simulator import SimConfig, closed_loop_run
from .spectral import FrequencyBands, SpectralConfig, windowize, windows_to_csv
from .stager import SleepStage, StagerConfig, classify, percentages_to_json, smooth_windows, stage_percentages

SECTIONS = {
    "ingest": IngestConfig,
    "spectral": SpectralConfig,
    "bands": FrequencyBands,
    "stager": StagerConfig,
    "controller": None,
    "sim": SimConfig,
}


@dataclass
class PipelineConfig:
    ingest: IngestConfig = field(default_factory=IngestConfig)
    spectral: SpectralConfig = field(default_factory=SpectralConfig)
    bands: FrequencyBands = field(default_factory=FrequencyBands)
    stager: StagerConfig = field(default_factory=StagerConfig)
    sim: SimConfig = field(default_factory=SimConfig)
    controller: dict = field(default_factory=dict)

    def controller_config(self) -> ctl.ControllerConfig:
        data = dict(self.controller)
        data.setdefault("tick", self.spectral.window_stride)
        return ctl.ControllerConfig.from_dict(data)


def _build(cls, data: dict):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise click.UsageError(f"unknown {cls.__name__} settings: {sorted(unknown)}")
    data = {k: tuple(v) if isinstance(v, list) and k in ("vlf", "lf", "hf") else v for k, v in data.items()}
    return cls(**data)


def load_config(path, seed=None, baseline_ta=None) -> PipelineConfig:
    raw = {}
    if path is not None:
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise click.UsageError(f"cannot read config {path}: {exc}") from None
        if not isinstance(raw, dict):
            raise click.UsageError("config must be a JSON object")
    unknown = set(raw) - set(SECTIONS)
    if unknown:
        raise click.UsageError(f"unknown config sections: {sorted(unknown)}")
    sim = dict(raw.get("sim", {}))
    if seed is not None:
        sim["seed"] = seed
    controller = dict(raw.get("controller", {}))
    if baseline_ta is not None:
        controller["baseline_ta"] = baseline_ta
    try:
        return PipelineConfig(
            ingest=_build(IngestConfig, raw.get("ingest", {})),
            spectral=_build(SpectralConfig, raw.get("spectral", {})),
            bands=_build(FrequencyBands, raw.get("bands", {})),
            stager=_build(StagerConfig, raw.get("stager", {})),
            sim=_build(SimConfig, sim),
            controller=controller,
        )
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"invalid configuration: {exc}") from None


def write_outputs(out_dir: Path, files: dict[str, str]) -> None:
    """Write every file via a temporary sibling and rename, so none is left half-written."""
    out_dir.mkdir(parents=True, exist_ok=True)
    staged = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.", suffix=".tmp")
            with os.fdopen(fd, "w", newline="\n") as fh:
                fh.write(text)
            staged.append((tmp, out_dir / name))
        for tmp, dest in staged:
            os.replace(tmp, dest)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _load_series(path: str, cfg: PipelineConfig):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc.strerror or exc}") from None
    series = parse_rr(text, subject_id=Path(path).stem)
    series, n_replaced = filter_artifacts(series, cfg.ingest)
    if n_replaced:
        click.echo(f"replaced {n_replaced} artifact beats", err=True)
    return series


def _stage(series, cfg: PipelineConfig):
    windows = windowize(series, cfg.spectral, cfg.bands)
    detected = classify(smooth_windows(windows, cfg.stager), cfg.stager)
    return windows, detected


def _controller_or_usage(cfg: PipelineConfig) -> ctl.ControllerConfig:
    if "baseline_ta" not in cfg.controller:
        raise click.UsageError("--baseline-ta is required (or controller.baseline_ta in --config)")
    try:
        return cfg.controller_config()
    except (TypeError, ValueError) as exc:
        raise click.UsageError(f"invalid controller settings: {exc}") from None


config_option = click.option("--config", "config_path", type=click.Path(dir_okay=False), help="JSON config file.")
out_option = click.option("--out", "out_dir", required=True, type=click.Path(file_okay=False), help="Output directory.")
input_option = click.option("--input", "input_path", required=True, help="RR interval file.")
baseline_option = click.option("--baseline-ta", type=float, help="User comfort temperature in degrees C.")


@click.group()
def cli():
    """HRV sleep staging and ambient-temperature feedback control."""


@cli.command()
@input_option
@out_option
@config_option
def analyze(input_path, out_dir, config_path):
    """Per-window VLF/LF/HF band powers -> windows.csv."""
    cfg = load_config(config_path)
    series = _load_series(input_path, cfg)
    windows = windowize(series, cfg.spectral, cfg.bands)
    write_outputs(Path(out_dir), {"windows.csv": windows_to_csv(windows)})


@cli.command()
@input_option
@out_option
@config_option
def stage(input_path, out_dir, config_path):
    """Detected hypnogram -> detected.csv and percentages.json."""
    cfg = load_config(config_path)
    series = _load_series(input_path, cfg)
    _, detected = _stage(series, cfg)
    write_outputs(
        Path(out_dir),
        {
            "detected.csv": detected.to_csv(),
            "percentages.json": percentages_to_json(stage_percentages(detected)),
        },
    )


@cli.command()
@input_option
@out_option
@config_option
@baseline_option
def control(input_path, out_dir, config_path, baseline_ta):
    """Full pipeline through the controller -> profile.csv."""
    cfg = load_config(config_path, baseline_ta=baseline_ta)
    ccfg = _controller_or_usage(cfg)
    series = _load_series(input_path, cfg)
    _, detected = _stage(series, cfg)
    profile = ctl.run(detected, ccfg)
    write_outputs(Path(out_dir), {"profile.csv": profile.to_csv()})


@cli.command()
@out_option
@config_option
@baseline_option
@click.option("--seed", type=int, help="Simulator seed.")
def simulate(out_dir, config_path, baseline_ta, seed):
    """Simulate a night and write the full session directory."""
    cfg = load_config(config_path, seed=seed, baseline_ta=baseline_ta)
    ccfg = _controller_or_usage(cfg)
    try:
        report = closed_loop_run(cfg.sim, cfg.spectral, cfg.stager, ccfg, cfg.bands)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    write_outputs(
        Path(out_dir),
        {
            "rr.csv": to_csv(report.rr),
            "windows.csv": windows_to_csv(report.windows),
            "truth.csv": report.truth.to_csv(),
            "detected.csv": report.detected.to_csv(),
            "profile.csv": report.profile.to_csv(),
            "report.json": report.to_json(),
        },
    )
    click.echo(f"epoch_accuracy {report.epoch_accuracy:.6f}")


def _read_percentages(session: Path) -> dict:
    pct_file = session / "percentages.json"
    if pct_file.exists():
        return json.loads(pct_file.read_text())
    report_file = session / "report.json"
    if report_file.exists():
        return json.loads(report_file.read_text())["stage_percentages"]
    raise click.ClickException(f"missing percentages.json (or report.json) in {session}")


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(file_okay=False), help="Session directory.")
def report(input_path):
    """Print stage percentages and the temperature summary of a session directory."""
    session = Path(input_path)
    if not session.is_dir():
        raise click.ClickException(f"not a directory: {session}")
    pct = _read_percentages(session)
    profile_file = session / "profile.csv"
    if not profile_file.exists():
        raise click.ClickException(f"missing profile.csv in {session}")
    profile = ctl.TemperatureProfile.from_csv(profile_file.read_text())

    click.echo(f"{'stage':<8}{'percent':>22}")
    for s in SleepStage:
        click.echo(f"{s.name:<8}{pct.get(s.name, 0.0)!r:>22}")
    temps = profile.temperatures
    if temps:
        click.echo(f"ta min {min(temps):.3f} C, max {max(temps):.3f} C, final {temps[-1]:.3f} C")
    else:
        click.echo("ta: empty profile")


def main(argv=None):
    try:
        cli.main(args=argv, prog_name="sleeptherm", standalone_mode=False)
    except click.exceptions.Abort:
        click.echo("aborted", err=True)
        return 1
    except click.ClickException as exc:
        exc.show()
        return exc.exit_code
    except SleepThermError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
