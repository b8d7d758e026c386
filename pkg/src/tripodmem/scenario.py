"""Config-driven experiment runner.

Scenarios are INI files with a strict schema (unknown keys are fatal) and SI
units encoded in the key names (dark_time_us, slit_width_um, ...). A scenario
wires masks, probe pulses, the control schedule, and the camera into one
write/store/read run and emits trace.csv, PGM images, and metrics.json.

The imaged object plane is the cloud center: probe profiles are defined at
that plane, back-propagated half the medium length to the entrance, and the
camera is a 4-f relay conjugate to the same center plane, so ideal degenerate
retrieval reproduces the input image exactly.
"""

from __future__ import annotations

import configparser
import copy
import csv
import json
import math
import os
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import ConfigError, ValidationError
from .metrics import (
    CameraModel,
    beat_averaged_intensity,
    camera_render,
    crosstalk,
    image_correlation,
    interference_contrast,
    visibility,
)
from .model import (
    HBAR,
    C_LIGHT,
    R_795,
    READ_LEGS,
    ControlSchedule,
    LevelScheme,
    MediumParams,
    ProbeField,
    TimingSequence,
    gaussian_pulse,
    rabi_from_power,
    validate_scheme,
)
from .optics import (
    GridSpec,
    Image2D,
    angular_spectrum_propagate,
    apply_tilt,
    gaussian_beam,
    image_through_4f,
    make_mask,
    write_pgm16,
)
from . import dynamics

OUTPUT_DIR_ENV = "TRIPODMEM_OUT"

_REQUIRED = object()

# section -> key -> (type, default); _REQUIRED keys must appear, None-default
# keys may be absent.
SCHEMA = {
    "model": {
        "od_ch1": (float, 10.0),
        "od_ch2": (float, 10.0),
        "od_conv": (float, 10.0),
        "gamma_s_khz": (float, 1.0),
        "length_mm": (float, 30.0),
        "transverse_extent_mm": (float, 2.0),
        "atom_number": (float, 9.1e8),
        "density_profile": (str, "uniform"),
        "population_ch1": (float, 1.0),
        "population_ch2": (float, 1.0),
        "delta_p_mhz": (float, 0.0),
        "delta_two_photon_mhz": (float, 0.0),
        "temperature_uk": (float, None),
        "nz": (int, 128),
    },
    "grid": {
        "nx": (int, 128),
        "ny": (int, 128),
        "extent_mm": (float, 2.6),
    },
    "probe.1": {
        "mask": (str, "uniform"),
        "slit_width_um": (float, None),
        "slit_pitch_um": (float, None),
        "slit_height_um": (float, None),
        "bar_width_um": (float, None),
        "bar_length_um": (float, None),
        "height_um": (float, None),
        "mask_path": (str, None),
        "tilt_beta_deg": (float, 0.0),
        "photons": (float, 2.7e4),
        "pulse_fwhm_us": (float, 1.0),
        "beam_waist_mm": (float, 1.0),
    },
    "control": {
        "omega_write_mhz": (float, None),
        "omega_read_mhz": (float, None),
        "write_power_uw": (float, None),
        "read_power_uw": (float, None),
        "beam_diameter_mm": (float, 3.0),
        "alpha_deg": (float, 2.5),
        "read_angle_deg": (float, None),
        "read_leg": (str, R_795),
        "dark_time_us": (float, 6.7),
        "n_read_pulses": (int, 1),
        "read_pulse_duration_us": (float, None),
        "read_pulse_gap_us": (float, 0.0),
    },
    "timing": {
        "pulse_center_us": (float, 1.5),
        "write_off_us": (float, None),  # default: the pulse median (center)
        "write_settle_us": (float, 0.3),
        "read_window_us": (float, 2.0),
        "dt_ns": (float, 0.53),
    },
    "camera": {
        "quantum_efficiency": (float, 0.25),
        "n_frames": (int, 50),
        "exposure_s": (float, 1.0),
        "seed": (int, 0),
        "f1_mm": (float, 300.0),
        "f2_mm": (float, 300.0),
    },
    "sweep": {
        "param": (str, None),
        "values": (str, None),
    },
    "output": {
        "dir": (str, "out"),
    },
}
SCHEMA["probe.2"] = dict(SCHEMA["probe.1"])

METRIC_KEYS = (
    "eta_ch1",
    "eta_ch2",
    "visibility",
    "crosstalk_db",
    "correlation",
    "camera_total_counts",
)


@dataclass
class Scenario:
    """A parsed scenario: name plus typed per-section key/value maps.

    Values keep the units of the config keys; conversion to SI happens when
    the scenario is resolved into module inputs.
    """

    name: str
    sections: dict

    def get(self, section: str, key: str):
        if section in self.sections and key in self.sections[section]:
            return self.sections[section][key]
        _, default = SCHEMA[section][key]
        if default is _REQUIRED:
            raise ConfigError(f"{section}.{key} is required but missing")
        return default

    def probe_channels(self) -> list:
        return [ch for ch in (1, 2) if f"probe.{ch}" in self.sections]

    def with_value(self, section: str, key: str, value) -> "Scenario":
        out = copy.deepcopy(self)
        out.sections.setdefault(section, {})[key] = value
        return out


def load_config(path) -> Scenario:
    """Parse and validate a scenario file; unknown keys/sections are fatal."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(path.read_text(), source=str(path))
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc

    sections = {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{path}: unknown section [{section}]")
        sections[section] = {}
        for key, raw in parser[section].items():
            if key not in SCHEMA[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
            kind, _ = SCHEMA[section][key]
            try:
                sections[section][key] = kind(raw)
            except ValueError as exc:
                raise ConfigError(
                    f"{path}: {section}.{key} = {raw!r} is not a valid {kind.__name__}"
                ) from exc
    scenario = Scenario(name=path.stem, sections=sections)
    validate_scenario(scenario)
    return scenario


def write_config(scenario: Scenario, path) -> None:
    """Serialize a scenario so load_config round-trips it field-for-field."""
    lines = [f"# scenario: {scenario.name}"]
    for section in SCHEMA:
        if section not in scenario.sections:
            continue
        lines.append("")
        lines.append(f"[{section}]")
        for key in SCHEMA[section]:
            if key in scenario.sections[section]:
                lines.append(f"{key} = {scenario.sections[section][key]}")
    Path(path).write_text("\n".join(lines) + "\n")


def validate_scenario(scenario: Scenario) -> None:
    """Re-check every cross-field invariant, reporting the failing key path."""
    if not scenario.probe_channels():
        raise ConfigError("at least one [probe.N] section is required")
    try:
        model = build_model(scenario)
    except ValidationError as exc:
        raise ConfigError(f"[model]: {exc}") from exc
    try:
        grid = build_grid(scenario)
    except ValidationError as exc:
        raise ConfigError(f"[grid]: {exc}") from exc
    if grid.extent_x < model.medium.transverse_extent:
        raise ConfigError(
            "grid.extent_mm: grid must cover model.transverse_extent_mm"
        )
    for ch in scenario.probe_channels():
        sec = f"probe.{ch}"
        beta = math.radians(scenario.get(sec, "tilt_beta_deg"))
        if beta != 0.0:
            lam = model.scheme.lambda_p1
            if grid.dx >= lam / (4.0 * abs(math.sin(beta))):
                raise ConfigError(
                    f"{sec}.tilt_beta_deg: tilt carrier under-resolved by grid "
                    f"(dx = {grid.dx:.3g} m)"
                )
        if scenario.get(sec, "photons") < 0:
            raise ConfigError(f"{sec}.photons must be >= 0")
        if scenario.get(sec, "pulse_fwhm_us") <= 0:
            raise ConfigError(f"{sec}.pulse_fwhm_us must be > 0")
    try:
        build_controls(scenario)
        build_timing(scenario)
        build_camera(scenario)
    except ValidationError as exc:
        raise ConfigError(str(exc)) from exc
    sweep_sec = scenario.sections.get("sweep")
    if sweep_sec and sweep_sec.get("param"):
        _resolve_sweep_param(scenario.sections["sweep"]["param"])


# ---------------------------------------------------------------------------
# resolution into module inputs


def build_model(scenario: Scenario):
    temp_uk = scenario.get("model", "temperature_uk")
    scheme = LevelScheme(gamma_s=2 * math.pi * 1e3 * scenario.get("model", "gamma_s_khz"))
    medium = MediumParams(
        length_L=scenario.get("model", "length_mm") * 1e-3,
        transverse_extent=scenario.get("model", "transverse_extent_mm") * 1e-3,
        atom_number=scenario.get("model", "atom_number"),
        density_profile=scenario.get("model", "density_profile"),
        od1=scenario.get("model", "od_ch1"),
        od2=scenario.get("model", "od_ch2"),
        od_conv=scenario.get("model", "od_conv"),
        temperature=None if temp_uk is None else temp_uk * 1e-6,
    )
    return validate_scheme(
        scheme,
        medium,
        population_ch1=scenario.get("model", "population_ch1"),
        population_ch2=scenario.get("model", "population_ch2"),
        delta_p=2 * math.pi * 1e6 * scenario.get("model", "delta_p_mhz"),
        delta_two_photon=2 * math.pi * 1e6 * scenario.get("model", "delta_two_photon_mhz"),
    )


def build_grid(scenario: Scenario) -> GridSpec:
    nx = scenario.get("grid", "nx")
    ny = scenario.get("grid", "ny")
    extent = scenario.get("grid", "extent_mm") * 1e-3
    return GridSpec(nx=nx, ny=ny, dx=extent / nx, dy=extent / ny)


def build_controls(scenario: Scenario) -> ControlSchedule:
    def rabi(role: str) -> float:
        mhz = scenario.get("control", f"omega_{role}_mhz")
        uw = scenario.get("control", f"{role}_power_uw")
        if mhz is not None and uw is not None:
            raise ValidationError(
                f"control.omega_{role}_mhz and control.{role}_power_uw are exclusive"
            )
        if mhz is not None:
            return 2 * math.pi * 1e6 * mhz
        if uw is not None:
            diameter = scenario.get("control", "beam_diameter_mm") * 1e-3
            return rabi_from_power(uw * 1e-6, diameter)
        raise ValidationError(
            f"control: one of omega_{role}_mhz or {role}_power_uw is required"
        )

    read_angle_deg = scenario.get("control", "read_angle_deg")
    dur_us = scenario.get("control", "read_pulse_duration_us")
    return ControlSchedule(
        omega_write=rabi("write"),
        omega_read=rabi("read"),
        read_leg=scenario.get("control", "read_leg"),
        write_angle_alpha=math.radians(scenario.get("control", "alpha_deg")),
        read_angle=None if read_angle_deg is None else math.radians(read_angle_deg),
        dark_time=scenario.get("control", "dark_time_us") * 1e-6,
        n_read_pulses=scenario.get("control", "n_read_pulses"),
        read_pulse_duration=None if dur_us is None else dur_us * 1e-6,
        read_pulse_gap=scenario.get("control", "read_pulse_gap_us") * 1e-6,
    )


def build_timing(scenario: Scenario) -> TimingSequence:
    center = scenario.get("timing", "pulse_center_us") * 1e-6
    write_off = scenario.get("timing", "write_off_us")
    write_off = center if write_off is None else write_off * 1e-6
    settle = scenario.get("timing", "write_settle_us") * 1e-6
    dark = scenario.get("control", "dark_time_us") * 1e-6
    read_window = scenario.get("timing", "read_window_us") * 1e-6
    dt = scenario.get("timing", "dt_ns") * 1e-9
    if settle > dark:
        raise ValidationError("timing.write_settle_us must not exceed control.dark_time_us")
    t_read_on = write_off + dark
    nt = int(round((write_off + settle) / dt)) + 1
    return TimingSequence(
        t_write_start=0.0,
        t_write_off=write_off,
        t_read_on=t_read_on,
        t_end=t_read_on + read_window,
        nt=nt,
    )


def build_camera(scenario: Scenario) -> CameraModel:
    return CameraModel(
        quantum_efficiency=scenario.get("camera", "quantum_efficiency"),
        n_frames=scenario.get("camera", "n_frames"),
        exposure=scenario.get("camera", "exposure_s"),
        rng_seed=scenario.get("camera", "seed"),
    )


def build_mask(scenario: Scenario, channel: int, grid: GridSpec) -> Image2D:
    sec = f"probe.{channel}"
    kind = scenario.get(sec, "mask")
    params = {}
    um_keys = {
        "slit_width_um": "slit_width",
        "slit_pitch_um": "slit_pitch",
        "slit_height_um": "slit_height",
        "bar_width_um": "bar_width",
        "bar_length_um": "bar_length",
        "height_um": "height",
    }
    for key, name in um_keys.items():
        value = scenario.get(sec, key)
        if value is not None:
            params[name] = value * 1e-6
    mask_path = scenario.get(sec, "mask_path")
    if mask_path is not None:
        params["path"] = mask_path
    try:
        return make_mask(kind, params, grid)
    except (ValidationError, KeyError) as exc:
        raise ConfigError(f"{sec}.mask: {exc}") from exc


def build_probes(scenario: Scenario, grid: GridSpec, model, timing: TimingSequence) -> list:
    """Object-plane (cloud center) probe construction, back-propagated to z=0."""
    dt = scenario.get("timing", "dt_ns") * 1e-9
    t = np.arange(timing.nt) * dt
    center = scenario.get("timing", "pulse_center_us") * 1e-6
    probes = []
    for ch in scenario.probe_channels():
        sec = f"probe.{ch}"
        mask = build_mask(scenario, ch, grid)
        beam = gaussian_beam(grid, scenario.get(sec, "beam_waist_mm") * 1e-3)
        profile = Image2D(mask.data.astype(complex) * beam.data, grid)
        beta = math.radians(scenario.get(sec, "tilt_beta_deg"))
        if beta != 0.0:
            profile = apply_tilt(profile, beta, model.scheme.lambda_p1)
        entrance = angular_spectrum_propagate(
            profile, -model.medium.length_L / 2.0, model.scheme.lambda_p1
        )
        # photons = 0 declares a null probe: zero field in, zero everything out
        amplitude = 1.0 if scenario.get(sec, "photons") > 0 else 0.0
        pulse = gaussian_pulse(
            t, center, scenario.get(sec, "pulse_fwhm_us") * 1e-6, amplitude
        )
        probes.append(
            ProbeField(
                profiles=entrance.data[None],
                pulses=pulse[None],
                grid=grid,
                dtau=dt,
                carrier_wavelength=model.scheme.lambda_p1,
                channel=ch,
                tilt_angle=beta,
                tilt_applied=beta != 0.0,
                photons_per_pulse=scenario.get(sec, "photons"),
                carrier_offset=0.0 if ch == 1 else -model.scheme.delta_hf,
            )
        )
    return probes


def camera_plane_field(field: ProbeField, model, f1: float, f2: float) -> ProbeField:
    """Relay an exit-plane field to the camera (conjugate to the cloud center)."""
    out = np.empty_like(field.profiles)
    for i in range(field.n_modes):
        img = Image2D(field.profiles[i], field.grid)
        img = angular_spectrum_propagate(
            img, -model.medium.length_L / 2.0, field.carrier_wavelength
        )
        img = image_through_4f(img, f1, f2)
        out[i] = img.data
    return replace(field, profiles=out)


# ---------------------------------------------------------------------------
# execution


def run_scenario(scenario: Scenario, out_dir=None, seed=None) -> dict:
    """Execute one scenario and write trace.csv, PGM images, and metrics.json.

    Returns the metrics dict (the same flat object written to metrics.json).
    """
    validate_scenario(scenario)
    out_dir = _resolve_out_dir(scenario, out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    model = build_model(scenario)
    grid = build_grid(scenario)
    controls = build_controls(scenario)
    timing = build_timing(scenario)
    camera = build_camera(scenario)
    if seed is not None:
        camera = replace(camera, rng_seed=int(seed))
    probes = build_probes(scenario, grid, model, timing)

    record = dynamics.simulate_sequence(
        probes, controls, model, timing, nz=scenario.get("model", "nz")
    )

    f1 = scenario.get("camera", "f1_mm") * 1e-3
    f2 = scenario.get("camera", "f2_mm") * 1e-3
    cam_fields = {}
    for ch in (1, 2):
        ret = record.retrieved.get(ch)
        cam_fields[ch] = (
            None if ret is None else camera_plane_field(ret, model, f1, f2)
        )

    _write_trace(out_dir / "trace.csv", record)
    scales = {}
    total_counts = 0.0
    for ch in (1, 2):
        leak = record.transmitted.get(ch)
        if leak is not None:
            scales[f"pgm_scale_leak_ch{ch}"] = write_pgm16(
                out_dir / f"leak_ch{ch}.pgm", leak.intensity_image()
            )
        cam = cam_fields[ch]
        if cam is not None:
            intensity = cam.intensity_image()
            scales[f"pgm_scale_retrieved_ch{ch}"] = write_pgm16(
                out_dir / f"retrieved_ch{ch}.pgm", intensity
            )
            counts = camera_render(
                Image2D(intensity, grid),
                cam.photons_per_pulse,
                replace(camera, rng_seed=camera.rng_seed + ch),
            )
            scales[f"pgm_scale_camera_ch{ch}"] = write_pgm16(
                out_dir / f"camera_ch{ch}.pgm", counts
            )
            total_counts += float(counts.sum())

    metrics = _compute_metrics(scenario, model, grid, record, cam_fields, camera, f1, f2)
    metrics["camera_total_counts"] = total_counts
    metrics.update(scales)
    (out_dir / "metrics.json").write_text(_metrics_json(metrics))
    return metrics


def _compute_metrics(scenario, model, grid, record, cam_fields, camera, f1, f2) -> dict:
    metrics = {key: 0.0 for key in METRIC_KEYS}
    for ch in (1, 2):
        metrics[f"eta_ch{ch}"] = record.eta.get(ch, {}).get("ret", 0.0)

    driven = scenario.probe_channels()
    if len(driven) == 1:
        try:
            metrics["crosstalk_db"] = crosstalk(record, driven[0])
        except ValidationError:
            metrics["crosstalk_db"] = None
    else:
        metrics["crosstalk_db"] = None

    # visibility: slit contrast when a three-slit probe exists, otherwise the
    # interference contrast of the overlapped retrieved fields
    slit_ch = next(
        (ch for ch in driven if scenario.get(f"probe.{ch}", "mask") == "three_slit"),
        None,
    )
    present = [cam_fields[ch] for ch in (1, 2) if cam_fields[ch] is not None]
    if slit_ch is not None and cam_fields[slit_ch] is not None:
        pitch = scenario.get(f"probe.{slit_ch}", "slit_pitch_um") * 1e-6
        mag = f2 / f1
        centers = [-pitch * mag, 0.0, pitch * mag]
        metrics["visibility"] = visibility(
            Image2D(cam_fields[slit_ch].intensity_image(), grid),
            "x",
            {"centers": centers},
        )
    elif len(present) >= 2:
        metrics["visibility"] = min(1.0, interference_contrast(present, camera))

    ref_ch = slit_ch if slit_ch is not None else driven[0]
    cam = cam_fields.get(ref_ch)
    if cam is not None:
        mask = build_mask(scenario, ref_ch, grid)
        beam = gaussian_beam(grid, scenario.get(f"probe.{ref_ch}", "beam_waist_mm") * 1e-3)
        reference = image_through_4f(
            Image2D(mask.data.astype(complex) * beam.data, grid), f1, f2
        )
        try:
            metrics["correlation"] = image_correlation(
                np.abs(reference.data) ** 2, cam.intensity_image()
            )
        except ValidationError:
            metrics["correlation"] = 0.0
    return metrics


def _write_trace(path, record) -> None:
    """trace.csv: t_s, P_ch1_out_W, P_ch2_out_W over write then read samples."""
    blocks = []
    for times, fields in (
        (record.write_times, record.transmitted),
        (record.read_times, record.retrieved),
    ):
        if len(times) == 0:
            continue
        powers = {}
        for ch in (1, 2):
            f = fields.get(ch)
            if f is None:
                powers[ch] = np.zeros(len(times))
                continue
            trace = f.power_trace()
            area = float(np.sum(trace)) * f.dtau
            if area > 0 and f.photons_per_pulse > 0:
                omega = 2 * math.pi * C_LIGHT / f.carrier_wavelength
                powers[ch] = trace * (f.photons_per_pulse * HBAR * omega / area)
            else:
                powers[ch] = np.zeros(len(times))
        blocks.append((times, powers))
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t_s", "P_ch1_out_W", "P_ch2_out_W"])
        for times, powers in blocks:
            for i, t in enumerate(times):
                writer.writerow([f"{t:.9e}", f"{powers[1][i]:.9e}", f"{powers[2][i]:.9e}"])


def _metrics_json(metrics: dict) -> str:
    clean = {}
    for key, value in metrics.items():
        if value is None or (isinstance(value, float) and not math.isfinite(value)):
            clean[key] = None
        else:
            clean[key] = value
    return json.dumps(clean, indent=2, sort_keys=True) + "\n"


def _resolve_out_dir(scenario: Scenario, out_dir) -> Path:
    if out_dir is not None:
        return Path(out_dir)
    env = os.environ.get(OUTPUT_DIR_ENV)
    if env:
        return Path(env) / scenario.name
    return Path(scenario.get("output", "dir"))


# ---------------------------------------------------------------------------
# sweeps


def _resolve_sweep_param(param: str):
    if "." not in param:
        raise ConfigError(f"sweep parameter {param!r} must be section.key")
    section, key = param.rsplit(".", 1)
    if section not in SCHEMA or key not in SCHEMA[section]:
        raise ConfigError(f"unknown sweep parameter {param!r}")
    kind, _ = SCHEMA[section][key]
    if kind not in (float, int):
        raise ConfigError(f"sweep parameter {param!r} is not numeric")
    return section, key, kind


def sweep(scenario: Scenario, param: str, values: list, out_dir=None) -> Path:
    """Run the scenario once per value; write sweep.csv plus per-point artifacts."""
    section, key, kind = _resolve_sweep_param(param)
    for v in values:
        if not math.isfinite(v):
            raise ConfigError(f"sweep value {v!r} is not finite")
    base = _resolve_out_dir(scenario, out_dir)
    base.mkdir(parents=True, exist_ok=True)
    rows = []
    for v in values:
        point = scenario.with_value(section, key, kind(v))
        point.sections.pop("sweep", None)
        metrics = run_scenario(point, out_dir=base / f"{key}={v:g}")
        rows.append((v, metrics))
    path = base / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([param, *METRIC_KEYS])
        for v, metrics in rows:
            writer.writerow(
                [f"{v:g}"]
                + [
                    "" if metrics.get(k) is None else f"{metrics[k]:.9e}"
                    for k in METRIC_KEYS
                ]
            )
    return path


# ---------------------------------------------------------------------------
# presets


def preset_dir() -> Path:
    return Path(__file__).parent / "presets"


def list_presets() -> list:
    return sorted(p.stem for p in preset_dir().glob("*.ini"))


def load_preset(name: str) -> Scenario:
    path = preset_dir() / f"{name}.ini"
    if not path.is_file():
        raise ConfigError(
            f"unknown preset {name!r}; available: {', '.join(list_presets())}"
        )
    return load_config(path)


# ---------------------------------------------------------------------------
# oracle self-checks


def oracle(name: str):
    """Run a named analytic cross-check; returns (passed, report lines)."""
    checks = {
        "beer_lambert": _oracle_beer_lambert,
        "eit_delay": _oracle_eit_delay,
        "gaussian_waist": _oracle_gaussian_waist,
        "sinc_mismatch": _oracle_sinc_mismatch,
        "poisson_camera": _oracle_poisson_camera,
    }
    if name not in checks:
        raise ConfigError(f"unknown oracle {name!r}; available: {', '.join(sorted(checks))}")
    return checks[name]()


def _kernel_run(od, omega_w, omega_r, fwhm_g, t_off_g, dark_s, read_leg=R_795,
                alpha=0.0, gamma_s=2 * math.pi * 1e3, nz=128, read_extra_g=80.0,
                nx=8, dt_g=0.08):
    """Small uniform-profile kernel run used by the oracles."""
    gamma4 = 2 * math.pi * 6e6
    scheme = LevelScheme(gamma_s=gamma_s)
    medium = MediumParams(od1=od, od2=od, od_conv=od)
    model = validate_scheme(scheme, medium)
    grid = GridSpec(nx=nx, ny=nx, dx=2e-3 / nx, dy=2e-3 / nx)
    dtau = dt_g / gamma4
    center = 3.0 * fwhm_g / gamma4
    t_off = center + t_off_g / gamma4
    ntw = int(round((t_off + dtau) / dtau))
    t = np.arange(ntw) * dtau
    pulse = gaussian_pulse(t, center, fwhm_g / gamma4)
    probe = ProbeField(
        profiles=np.ones((1, nx, nx), complex),
        pulses=pulse[None],
        grid=grid,
        dtau=dtau,
        carrier_wavelength=795e-9,
        channel=1,
    )
    om_hat = max(omega_w, omega_r, gamma4) / gamma4
    t_read_on = t_off + max(dark_s, dtau)
    t_end = t_read_on + (3.0 * od / (4.0 * om_hat**2) + read_extra_g) / gamma4
    timing = TimingSequence(0.0, t_off, t_read_on, t_end, ntw)
    controls = ControlSchedule(
        omega_write=omega_w,
        omega_read=omega_r,
        read_leg=read_leg,
        write_angle_alpha=alpha,
        dark_time=max(dark_s, dtau),
    )
    record = dynamics.simulate_sequence([probe], controls, model, timing, nz=nz)
    return record, t, pulse, gamma4


def _oracle_beer_lambert():
    record, t, pulse, _ = _kernel_run(
        od=2.0, omega_w=0.0, omega_r=0.0, fwhm_g=400.0, t_off_g=1200.0,
        dark_s=0.0, gamma_s=0.0, dt_g=0.5,
    )
    measured = record.eta[1]["leak"]
    expected = math.exp(-2.0)
    ok = abs(measured / expected - 1.0) < 0.02
    return ok, [
        f"beer_lambert: transmission measured {measured:.5f} "
        f"expected {expected:.5f} tol 2% -> {'PASS' if ok else 'FAIL'}"
    ]


def _oracle_eit_delay():
    gamma4 = 2 * math.pi * 6e6
    od = 10.0
    record, t, pulse, _ = _kernel_run(
        od=od, omega_w=gamma4, omega_r=0.0, fwhm_g=40.0, t_off_g=160.0,
        dark_s=0.0, gamma_s=0.0, dt_g=0.05,
    )
    out = record.transmitted[1].pulses[0]
    w_in = np.abs(pulse) ** 2
    w_out = np.abs(out) ** 2
    delay = (np.sum(t * w_out) / np.sum(w_out) - np.sum(t * w_in) / np.sum(w_in)) * gamma4
    expected = od / 4.0  # od * Gamma4 / (4 Omega^2) in units of 1/Gamma4
    ok = abs(delay / expected - 1.0) < 0.10
    return ok, [
        f"eit_delay: delay measured {delay:.3f}/Gamma4 expected {expected:.3f}/Gamma4 "
        f"(od*Gamma4/(4 Omega^2)) tol 10% -> {'PASS' if ok else 'FAIL'}"
    ]


def _oracle_gaussian_waist():
    w0 = 0.25e-3
    lam = 795e-9
    zr = math.pi * w0**2 / lam
    grid = GridSpec(nx=256, ny=256, dx=3.2e-3 / 256, dy=3.2e-3 / 256)
    beam = gaussian_beam(grid, w0)
    out = angular_spectrum_propagate(beam, zr, lam)
    intensity = np.abs(out.data) ** 2
    x = grid.x
    profile = intensity[:, grid.ny // 2]
    # 1/e^2 radius from the second moment of a Gaussian: w = 2 sigma
    sigma = math.sqrt(float(np.sum(profile * x**2) / np.sum(profile)))
    measured = 2.0 * sigma
    expected = w0 * math.sqrt(2.0)
    ok = abs(measured / expected - 1.0) < 0.01
    return ok, [
        f"gaussian_waist: w(z_R) measured {measured * 1e3:.4f} mm "
        f"expected {expected * 1e3:.4f} mm tol 1% -> {'PASS' if ok else 'FAIL'}"
    ]


def _oracle_sinc_mismatch():
    gamma4 = 2 * math.pi * 6e6
    etas = {}
    for alpha_deg in (0.0, 2.5):
        record, _, _, _ = _kernel_run(
            od=0.4, omega_w=gamma4, omega_r=gamma4, fwhm_g=6.0, t_off_g=2.0,
            dark_s=0.5e-6, read_leg="Rprime_780", alpha=math.radians(alpha_deg),
            gamma_s=2 * math.pi * 1.0,
        )
        etas[alpha_deg] = record.eta[1]["ret"]
    measured = etas[2.5] / etas[0.0]
    expected = dynamics.phase_mismatch_factor(math.radians(2.5), 795e-9, 780e-9, 0.03)
    ok = abs(measured - expected) < 0.05
    return ok, [
        f"sinc_mismatch: normalized conversion at alpha=2.5deg measured {measured:.4f} "
        f"expected {expected:.4f} tol 5% absolute -> {'PASS' if ok else 'FAIL'}"
    ]


def _oracle_poisson_camera():
    grid = GridSpec(nx=128, ny=128, dx=2e-5, dy=2e-5)
    camera = CameraModel(quantum_efficiency=0.25, n_frames=50, rng_seed=7)
    counts = camera_render(
        Image2D(np.ones((128, 128)), grid), 2.7e4 * 128 * 128 / 50, camera
    )
    mean = float(np.mean(counts))
    var = float(np.var(counts))
    ratio = var / mean
    ok = 0.95 <= ratio <= 1.05
    return ok, [
        f"poisson_camera: variance/mean over {counts.size} pixels = {ratio:.4f} "
        f"required [0.95, 1.05] -> {'PASS' if ok else 'FAIL'}"
    ]
