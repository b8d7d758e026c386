"""Physical data model: level scheme, medium, probe fields, control timing.

Five-level tripod: ground states |1>, |2>, |3> and excited states |4> (795 nm
legs) and |5> (780 nm legs). Channel 1 is the |2>-|4> probe, channel 2 the
|3>-|4> probe; the control drives |1>-|4> (write/read) or |1>-|5> (converting
read). All public quantities are SI; the integrator nondimensionalizes
internally (time in 1/Gamma4, z in units of L).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ValidationError
from .optics import GridSpec

HBAR = 1.054571817e-34  # J s
C_LIGHT = 299792458.0  # m/s
EPSILON_0 = 8.8541878128e-12  # F/m
K_BOLTZMANN = 1.380649e-23  # J/K

RB85_MASS = 1.40999e-25  # kg
RB_D1_DIPOLE = 2.5377e-29  # C m, effective |2>-|4> dipole moment

R_795 = "R_795"
RPRIME_780 = "Rprime_780"
READ_LEGS = (R_795, RPRIME_780)

DENSITY_PROFILES = ("uniform", "gaussian_cigar")


@dataclass(frozen=True)
class LevelScheme:
    """Wavelengths and decay rates of the tripod level structure."""

    lambda_p1: float = 795e-9  # |2>-|4| transition (m)
    lambda_p2: float = 795e-9  # |3>-|4| transition (m)
    lambda_conv: float = 780e-9  # |2>-|5| / |3>-|5| transitions (m)
    gamma4: float = 2 * math.pi * 6e6  # |4> population decay (rad/s)
    gamma5: float = 2 * math.pi * 6e6  # |5> population decay (rad/s)
    gamma_s: float = 2 * math.pi * 1e3  # ground-coherence decay (rad/s)
    delta_hf: float = 2 * math.pi * 3.0378e9  # ground hyperfine splitting (rad/s)


@dataclass(frozen=True)
class MediumParams:
    """Geometry and optical depths of the cigar-shaped cloud."""

    length_L: float = 0.03  # m
    transverse_extent: float = 0.002  # m
    atom_number: float = 9.1e8
    density_profile: str = "uniform"
    od1: float = 10.0  # |2>-|4| leg
    od2: float = 10.0  # |3>-|4| leg
    od_conv: float = 10.0  # |2>-|5| leg
    temperature: float | None = None  # K, enables motional dephasing


@dataclass(frozen=True)
class ProbeField:
    """A probe pulse carrying an image, as a sum of separable modes.

    The envelope is E(x, y, tau) = sum_m profiles[m](x, y) * pulses[m](tau)
    in Rabi-frequency units (rad/s). Most fields are single-mode; coherent
    superpositions on one channel (overlapped probes, linearity tests) use
    several modes.
    """

    profiles: np.ndarray  # complex (nm, nx, ny)
    pulses: np.ndarray  # complex (nm, nt)
    grid: GridSpec
    dtau: float  # s
    carrier_wavelength: float
    channel: int  # 1 or 2
    tilt_angle: float = 0.0  # rad, informational; the carrier lives in profiles
    tilt_applied: bool = False
    photons_per_pulse: float = 0.0
    carrier_offset: float = 0.0  # rad/s shift from the channel-1 carrier

    def __post_init__(self):
        profiles = np.atleast_3d(np.asarray(self.profiles, dtype=complex))
        pulses = np.atleast_2d(np.asarray(self.pulses, dtype=complex))
        object.__setattr__(self, "profiles", profiles)
        object.__setattr__(self, "pulses", pulses)
        if profiles.shape[0] != pulses.shape[0]:
            raise ValidationError("profiles and pulses must have the same mode count")
        if profiles.shape[1:] != (self.grid.nx, self.grid.ny):
            raise ValidationError("profile shape does not match grid")
        if self.channel not in (1, 2):
            raise ValidationError(f"channel must be 1 or 2, got {self.channel}")
        if self.dtau <= 0:
            raise ValidationError("dtau must be > 0")
        if self.carrier_wavelength <= 0:
            raise ValidationError("carrier_wavelength must be > 0")

    @property
    def n_modes(self) -> int:
        return self.profiles.shape[0]

    @property
    def nt(self) -> int:
        return self.pulses.shape[1]

    def profile_gram(self) -> np.ndarray:
        """G[i, j] = integral profiles_i * conj(profiles_j) dx dy."""
        flat = self.profiles.reshape(self.n_modes, -1)
        return (flat @ flat.conj().T) * self.grid.pixel_area

    def pulse_gram(self) -> np.ndarray:
        """H[i, j] = integral pulses_i * conj(pulses_j) dtau."""
        return (self.pulses @ self.pulses.conj().T) * self.dtau

    def energy(self) -> float:
        """Integral of |E|^2 dx dy dtau, Rabi-squared units.

        |sum_m p_m g_m|^2 expands into sum_ij G_ij H_ij with the Gram
        conventions above, so coherent cross terms between modes are kept.
        """
        g = self.profile_gram()
        h = self.pulse_gram()
        return float(np.real(np.sum(g * h)))

    def power_trace(self) -> np.ndarray:
        """Transverse-integrated |E|^2(tau) (rad^2/s^2 * m^2)."""
        g = self.profile_gram()
        cross = np.einsum("ij,it,jt->t", g, self.pulses, self.pulses.conj())
        return np.real(cross)

    def intensity_image(self) -> np.ndarray:
        """Time-integrated |E|^2(x, y)."""
        h = self.pulse_gram()
        cross = np.einsum("ij,ixy,jxy->xy", h, self.profiles, self.profiles.conj())
        return np.real(cross)

    def scaled(self, factor: complex) -> "ProbeField":
        return replace(self, pulses=self.pulses * factor)

    def combined_with(self, other: "ProbeField") -> "ProbeField":
        """Coherent superposition (same channel, grid, and time base)."""
        if (
            other.channel != self.channel
            or other.grid != self.grid
            or other.nt != self.nt
            or other.dtau != self.dtau
        ):
            raise ValidationError("can only combine probes on matching channel and grids")
        return replace(
            self,
            profiles=np.concatenate([self.profiles, other.profiles]),
            pulses=np.concatenate([self.pulses, other.pulses]),
            photons_per_pulse=self.photons_per_pulse + other.photons_per_pulse,
        )


@dataclass(frozen=True)
class ControlSchedule:
    """Plane-wave control amplitudes and geometry for write and read."""

    omega_write: float  # rad/s, flat amplitude during the write window
    omega_read: float  # rad/s, flat amplitude during read pulses
    read_leg: str = R_795
    write_angle_alpha: float = math.radians(2.5)  # control vs probe-1 axis
    read_angle: float | None = None  # defaults to write_angle_alpha
    dark_time: float = 6.7e-6  # s
    n_read_pulses: int = 1
    read_pulse_duration: float | None = None  # s; None = fill the read window
    read_pulse_gap: float = 0.0  # s between beamsplitter read pulses

    def __post_init__(self):
        if self.read_leg not in READ_LEGS:
            raise ValidationError(f"read_leg must be one of {READ_LEGS}")
        if self.omega_write < 0 or self.omega_read < 0:
            raise ValidationError("control Rabi amplitudes must be >= 0")
        if self.dark_time < 0:
            raise ValidationError("dark_time must be >= 0")
        if self.n_read_pulses < 1:
            raise ValidationError("n_read_pulses must be >= 1")
        if self.n_read_pulses > 1 and self.read_pulse_duration is None:
            raise ValidationError("multi-pulse readout needs read_pulse_duration")

    @property
    def effective_read_angle(self) -> float:
        return self.write_angle_alpha if self.read_angle is None else self.read_angle


@dataclass(frozen=True)
class TimingSequence:
    """Write/dark/read schedule in lab time."""

    t_write_start: float
    t_write_off: float
    t_read_on: float
    t_end: float
    nt: int

    def __post_init__(self):
        ts = (self.t_write_start, self.t_write_off, self.t_read_on, self.t_end)
        if not all(b > a for a, b in zip(ts, ts[1:])):
            raise ValidationError("timing instants must be strictly increasing")
        if self.nt < 16:
            raise ValidationError("nt must be >= 16")

    @property
    def dark_time(self) -> float:
        return self.t_read_on - self.t_write_off


@dataclass(frozen=True)
class ValidatedModel:
    """Invariant-checked model with derived coupling constants attached.

    kappa_j = od_j * gamma_ge / (2 L) with gamma_ge = Gamma4/2 so the
    resonant two-level intensity transmission is exp(-od_j). Ground-state
    populations (p2, p3) scale the couplings of channels 1 and 2.
    """

    scheme: LevelScheme
    medium: MediumParams
    population_ch1: float = 1.0  # fraction prepared in |2>
    population_ch2: float = 1.0  # fraction prepared in |3>
    delta_p: float = 0.0  # one-photon detuning (rad/s)
    delta_two_photon: float = 0.0  # rad/s

    @property
    def gamma_ge(self) -> float:
        return self.scheme.gamma4 / 2.0

    def kappa(self, leg: str, channel: int) -> float:
        """Local coupling constant (rad/s per meter) for a readout leg/channel."""
        population = self.population_ch1 if channel == 1 else self.population_ch2
        if leg == R_795:
            od = self.medium.od1 if channel == 1 else self.medium.od2
            gamma_half = self.scheme.gamma4 / 2.0
        else:
            od = self.medium.od_conv
            gamma_half = self.scheme.gamma5 / 2.0
        return population * od * gamma_half / (2.0 * self.medium.length_L)

    def effective_od(self, leg: str, channel: int) -> float:
        gamma_half = (self.scheme.gamma4 if leg == R_795 else self.scheme.gamma5) / 2.0
        return self.kappa(leg, channel) * 2.0 * self.medium.length_L / gamma_half


def validate_scheme(
    scheme: LevelScheme,
    medium: MediumParams,
    population_ch1: float = 1.0,
    population_ch2: float = 1.0,
    delta_p: float = 0.0,
    delta_two_photon: float = 0.0,
) -> ValidatedModel:
    """Check every data-model invariant and attach derived constants.

    Raises ValidationError naming the first violated invariant.
    """
    for name in ("lambda_p1", "lambda_p2", "lambda_conv"):
        if getattr(scheme, name) <= 0:
            raise ValidationError(f"{name} must be > 0")
    if not scheme.lambda_conv < scheme.lambda_p1:
        raise ValidationError(
            "lambda_conv must be shorter than lambda_p1 "
            f"({scheme.lambda_conv} >= {scheme.lambda_p1})"
        )
    if scheme.gamma4 <= 0 or scheme.gamma5 <= 0:
        raise ValidationError("gamma4 and gamma5 must be > 0")
    if scheme.gamma_s < 0:
        raise ValidationError("gamma_s must be >= 0")
    if scheme.gamma_s >= 1e-2 * scheme.gamma4:
        raise ValidationError(
            f"gamma_s/gamma4 = {scheme.gamma_s / scheme.gamma4:.3g} exceeds 1e-2"
        )
    if scheme.delta_hf <= 0:
        raise ValidationError("delta_hf must be > 0")
    if medium.length_L <= 0:
        raise ValidationError("length_L must be > 0")
    if medium.transverse_extent <= 0:
        raise ValidationError("transverse_extent must be > 0")
    if min(medium.od1, medium.od2, medium.od_conv) < 0:
        raise ValidationError("optical depths must be >= 0")
    if medium.density_profile not in DENSITY_PROFILES:
        raise ValidationError(f"density_profile must be one of {DENSITY_PROFILES}")
    if medium.temperature is not None and medium.temperature < 0:
        raise ValidationError("temperature must be >= 0")
    for name, p in (("population_ch1", population_ch1), ("population_ch2", population_ch2)):
        if not 0.0 <= p <= 1.0:
            raise ValidationError(f"{name} must lie in [0, 1]")
    return ValidatedModel(
        scheme=scheme,
        medium=medium,
        population_ch1=population_ch1,
        population_ch2=population_ch2,
        delta_p=delta_p,
        delta_two_photon=delta_two_photon,
    )


def optical_depth_from_atoms(atom_number: float, cloud_dims, wavelength: float) -> float:
    """Resonant optical depth n * sigma0 * L for a uniform cloud.

    cloud_dims = (L, w, h) in meters with L the longitudinal extent;
    sigma0 = 3 lambda^2 / (2 pi).
    """
    if atom_number < 0:
        raise ValidationError("atom_number must be >= 0")
    length, width, height = cloud_dims
    volume = length * width * height
    if volume <= 0:
        raise ValidationError("cloud volume must be > 0")
    density = atom_number / volume
    sigma0 = 3.0 * wavelength**2 / (2.0 * math.pi)
    return density * sigma0 * length


def rabi_from_power(power: float, beam_diameter: float, dipole_moment: float = RB_D1_DIPOLE) -> float:
    """Peak Rabi frequency of a flat-top beam: d * sqrt(2P / (eps0 c A)) / hbar."""
    if power < 0:
        raise ValidationError("power must be >= 0")
    if beam_diameter <= 0:
        raise ValidationError("beam_diameter must be > 0")
    area = math.pi * (beam_diameter / 2.0) ** 2
    e_field = math.sqrt(2.0 * power / (EPSILON_0 * C_LIGHT * area))
    return dipole_moment * e_field / HBAR


def gaussian_pulse(t: np.ndarray, center: float, fwhm: float, amplitude: float = 1.0) -> np.ndarray:
    """Gaussian amplitude envelope with the given amplitude FWHM."""
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    return amplitude * np.exp(-((t - center) ** 2) / (2.0 * sigma**2))
