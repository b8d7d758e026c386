"""Observables: efficiencies, visibility, crosstalk, interference, shot-noise camera.

Efficiencies are Rabi-squared (photon-flux proportional) energy ratios, so the
wavelength-converted output compares photon numbers rather than joules. Beat
averaging between carriers split by multiple GHz is done in closed form (the
cross term averages to sinc(dw T / 2) over an exposure T) instead of stepping
the beat in time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import ProbeField
from .optics import Image2D


@dataclass(frozen=True)
class MetricsReport:
    """Scalar observables of one run."""

    eta_ch1: float
    eta_ch2: float
    visibility: float
    crosstalk_db: float | None  # None encodes -inf (no cross-channel energy)
    correlation: float
    camera_total_counts: float

    def __post_init__(self):
        if self.eta_ch1 < 0 or self.eta_ch2 < 0:
            raise ValidationError("efficiencies must be >= 0")
        if not 0.0 <= self.visibility <= 1.0 + 1e-12:
            raise ValidationError("visibility must lie in [0, 1]")
        if not 0.0 <= self.correlation <= 1.0 + 1e-12:
            raise ValidationError("correlation must lie in [0, 1]")

    def to_dict(self) -> dict:
        return {
            "eta_ch1": self.eta_ch1,
            "eta_ch2": self.eta_ch2,
            "visibility": self.visibility,
            "crosstalk_db": self.crosstalk_db,
            "correlation": self.correlation,
            "camera_total_counts": self.camera_total_counts,
        }


@dataclass(frozen=True)
class CameraModel:
    """Photon-counting camera with Poisson shot noise, frame accumulation."""

    quantum_efficiency: float = 0.25
    n_frames: int = 50
    exposure: float = 1.0  # s
    rng_seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.quantum_efficiency <= 1.0:
            raise ValidationError("quantum_efficiency must lie in (0, 1]")
        if self.n_frames < 1:
            raise ValidationError("n_frames must be >= 1")
        if self.exposure <= 0:
            raise ValidationError("exposure must be > 0")


def efficiency(output: ProbeField, input_field: ProbeField) -> float:
    """eta = (integral |E_out|^2) / (integral |E_in|^2), Rabi-squared units."""
    if output.grid != input_field.grid:
        raise ValidationError("efficiency requires matching grids")
    e_in = input_field.energy()
    if e_in <= 0:
        raise ValidationError("efficiency is undefined for a zero-energy input")
    return output.energy() / e_in


def visibility(image: Image2D, axis: str, slit_geometry: dict) -> float:
    """Slit contrast (Imax - Imin)/(Imax + Imin) using the known geometry.

    Imax averages the intensity along the slit-center lines, Imin along the
    gap-center lines midway between adjacent slits. slit_geometry carries
    "centers": slit-center positions (m) along the given axis.
    """
    data = np.real(image.data)
    if np.any(data < -1e-12 * max(1.0, float(np.abs(data).max()))):
        raise ValidationError("visibility requires a non-negative image")
    data = np.clip(data, 0.0, None)
    centers = sorted(slit_geometry["centers"])
    if len(centers) < 2:
        raise ValidationError("degenerate slit geometry: need >= 2 slits for gaps")
    gaps = [0.5 * (a + b) for a, b in zip(centers, centers[1:])]
    if axis == "x":
        coords, lineout = image.grid.x, data.mean(axis=1)
    elif axis == "y":
        coords, lineout = image.grid.y, data.mean(axis=0)
    else:
        raise ValidationError("axis must be 'x' or 'y'")
    i_max = float(np.mean([lineout[_nearest(coords, c)] for c in centers]))
    i_min = float(np.mean([lineout[_nearest(coords, g)] for g in gaps]))
    if i_max + i_min == 0:
        return 0.0
    return (i_max - i_min) / (i_max + i_min)


def _nearest(coords: np.ndarray, value: float) -> int:
    idx = int(np.argmin(np.abs(coords - value)))
    if abs(coords[idx] - value) > (coords[1] - coords[0]):
        raise ValidationError(f"slit position {value:.3g} m lies outside the grid")
    return idx


def crosstalk(record, driven_channel: int) -> float:
    """Cross-channel leakage of the retrieved fields, 10 log10(E_other/E_driven) dB.

    Returns -inf when the other channel holds exactly zero energy.
    """
    if driven_channel not in (1, 2):
        raise ValidationError("driven_channel must be 1 or 2")
    other_channel = 2 if driven_channel == 1 else 1
    inputs = {ch: record.energy_ledger.get(ch, {}).get("input", 0.0) for ch in (1, 2)}
    if inputs[other_channel] > 0:
        raise ValidationError("crosstalk requires exactly one driven channel")
    if inputs[driven_channel] <= 0:
        raise ValidationError(f"channel {driven_channel} was not driven")
    driven = record.retrieved.get(driven_channel)
    other = record.retrieved.get(other_channel)
    e_driven = driven.energy() if driven is not None else 0.0
    e_other = other.energy() if other is not None else 0.0
    if e_driven <= 0:
        raise ValidationError("driven channel retrieved zero energy")
    if e_other == 0.0:
        return float("-inf")
    return 10.0 * math.log10(e_other / e_driven)


def crosstalk_from_energies(e_other: float, e_driven: float) -> float:
    """Definition-level helper for synthetic records and tests."""
    if e_driven <= 0:
        raise ValidationError("driven energy must be > 0")
    if e_other == 0.0:
        return float("-inf")
    return 10.0 * math.log10(e_other / e_driven)


def image_correlation(a: np.ndarray, b: np.ndarray) -> float:
    """Normalized overlap sum(a b) / sqrt(sum(a^2) sum(b^2)) of intensity images."""
    a = np.clip(np.real(np.asarray(a, dtype=float)), 0.0, None)
    b = np.clip(np.real(np.asarray(b, dtype=float)), 0.0, None)
    na, nb = float(np.sum(a * a)), float(np.sum(b * b))
    if na == 0 or nb == 0:
        raise ValidationError("correlation is undefined for an all-zero image")
    return float(np.sum(a * b) / math.sqrt(na * nb))


def beat_factor(delta_omega: float, exposure: float) -> complex:
    """Exposure average of exp(i dw t): exp(i dw T/2) sinc(dw T / 2)."""
    x = delta_omega * exposure / 2.0
    return complex(np.exp(1j * x) * np.sinc(x / np.pi))


def beat_averaged_intensity(fields: list, camera: CameraModel) -> Image2D:
    """Exposure-averaged intensity of overlapped fields with carrier offsets.

    Cross terms between fields whose carriers differ by dw pick up the
    closed-form factor sinc(dw T / 2); same-carrier fields interfere fully.
    """
    if not fields:
        raise ValidationError("at least one field is required")
    grid = fields[0].grid
    nt = fields[0].nt
    for f in fields[1:]:
        if f.grid != grid or f.nt != nt or f.dtau != fields[0].dtau:
            raise ValidationError("fields must share grid and time base")
    for i, fi in enumerate(fields):
        for fj in fields[i + 1 :]:
            dw = fi.carrier_offset - fj.carrier_offset
            if dw != 0 and abs(dw) * camera.exposure < 2.0 * math.pi:
                raise ValidationError(
                    "exposure shorter than one beat period: averaging is ill-defined"
                )
    total = np.zeros((grid.nx, grid.ny))
    for i, fi in enumerate(fields):
        total += fi.intensity_image()
        for fj in fields[i + 1 :]:
            dw = fi.carrier_offset - fj.carrier_offset
            cross = _cross_image(fi, fj)
            total += 2.0 * np.real(cross * beat_factor(dw, camera.exposure))
    return Image2D(np.clip(total, 0.0, None), grid)


def interference_contrast(fields: list, camera: CameraModel) -> float:
    """Fringe contrast of the exposure-averaged overlap along the tilt axis.

    Two or more fields: demodulated estimator 2 sum|<E_i E_j*>| / sum<|E|^2>,
    which is the visibility of the local fringe pattern. A single field:
    min/max contrast of its own spatial modulation over its support.
    """
    if not fields:
        raise ValidationError("at least one field is required")
    if len(fields) == 1:
        img = fields[0].intensity_image()
        lineout = img.mean(axis=1)
        support = lineout >= 0.5 * lineout.max() if lineout.max() > 0 else lineout >= 0
        region = img[support]
        hi, lo = float(region.max()), float(region.min())
        return (hi - lo) / (hi + lo) if hi + lo > 0 else 0.0
    grid = fields[0].grid
    cross_mag = np.zeros((grid.nx, grid.ny))
    base = np.zeros((grid.nx, grid.ny))
    for i, fi in enumerate(fields):
        if fi.grid != grid:
            raise ValidationError("fields must share a grid")
        base += fi.intensity_image()
        for fj in fields[i + 1 :]:
            dw = fi.carrier_offset - fj.carrier_offset
            if dw != 0 and abs(dw) * camera.exposure < 2.0 * math.pi:
                raise ValidationError(
                    "exposure shorter than one beat period: averaging is ill-defined"
                )
            cross = _cross_image(fi, fj)
            cross_mag += 2.0 * np.abs(cross * beat_factor(dw, camera.exposure))
    total_base = float(base.sum())
    if total_base <= 0:
        raise ValidationError("contrast is undefined for zero fields")
    return float(cross_mag.sum() / total_base)


def _cross_image(fi: ProbeField, fj: ProbeField) -> np.ndarray:
    """Time-integrated <E_i(x,y,t) conj(E_j(x,y,t))> over shared samples."""
    nt = min(fi.nt, fj.nt)
    h = (fi.pulses[:, :nt] @ fj.pulses[:, :nt].conj().T) * fi.dtau
    return np.einsum("mn,mxy,nxy->xy", h, fi.profiles, fj.profiles.conj())


def camera_render(intensity: Image2D, photons_per_pulse: float, camera: CameraModel) -> np.ndarray:
    """Accumulated Poisson counts image over camera.n_frames frames.

    Per frame, the expected count in a pixel is photons_per_pulse * QE times
    the unit-normalized intensity there. Deterministic for a fixed rng_seed
    (counter-based Philox generator).
    """
    data = np.real(intensity.data)
    if np.any(data < 0):
        raise ValidationError("camera_render requires a non-negative intensity")
    if photons_per_pulse < 0:
        raise ValidationError("photons_per_pulse must be >= 0")
    total = float(data.sum())
    if photons_per_pulse == 0 or total == 0:
        return np.zeros(data.shape, dtype=np.int64)
    expected = data / total * photons_per_pulse * camera.quantum_efficiency
    rng = np.random.Generator(np.random.Philox(camera.rng_seed))
    frames = rng.poisson(lam=expected, size=(camera.n_frames,) + data.shape)
    return frames.sum(axis=0, dtype=np.int64)
