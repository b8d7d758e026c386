"""Semiclassical simulator of multiplexed image storage and wavelength
conversion in a tripod cold-atom memory."""

from .errors import ConfigError, NumericsError, TripodmemError, ValidationError
from .model import (
    ControlSchedule,
    LevelScheme,
    MediumParams,
    ProbeField,
    TimingSequence,
    ValidatedModel,
    gaussian_pulse,
    optical_depth_from_atoms,
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
    read_pgm_mask,
    write_pgm16,
)
from .dynamics import (
    SimRecord,
    SpinWaveState,
    longitudinal_mismatch,
    phase_mismatch_factor,
    read_out,
    simulate_sequence,
    spin_wave_decay,
)
from .metrics import (
    CameraModel,
    MetricsReport,
    beat_averaged_intensity,
    camera_render,
    crosstalk,
    efficiency,
    image_correlation,
    interference_contrast,
    visibility,
)

__version__ = "0.1.0"

__all__ = [
    "CameraModel",
    "ConfigError",
    "ControlSchedule",
    "GridSpec",
    "Image2D",
    "LevelScheme",
    "MediumParams",
    "MetricsReport",
    "NumericsError",
    "ProbeField",
    "SimRecord",
    "SpinWaveState",
    "TimingSequence",
    "TripodmemError",
    "ValidatedModel",
    "ValidationError",
    "angular_spectrum_propagate",
    "apply_tilt",
    "beat_averaged_intensity",
    "camera_render",
    "crosstalk",
    "efficiency",
    "gaussian_beam",
    "gaussian_pulse",
    "image_correlation",
    "image_through_4f",
    "interference_contrast",
    "longitudinal_mismatch",
    "make_mask",
    "optical_depth_from_atoms",
    "phase_mismatch_factor",
    "rabi_from_power",
    "read_out",
    "read_pgm_mask",
    "simulate_sequence",
    "spin_wave_decay",
    "validate_scheme",
    "visibility",
    "write_pgm16",
]
