"""Transverse-plane machinery: grids, image masks, free-space propagation, imaging.

All Fourier transforms use orthonormal scaling so Parseval's identity holds
exactly; the paraxial (Fresnel) transfer function is used throughout, which is
adequate for the few-degree geometries this simulator targets.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.ndimage import map_coordinates

from .errors import ValidationError

MASK_KINDS = ("three_slit", "digit_two", "bar_target", "uniform", "custom")

# 5x7 glyph used by the digit_two mask (1 = transparent).
_DIGIT_TWO_GLYPH = np.array(
    [
        [0, 1, 1, 1, 0],
        [1, 0, 0, 0, 1],
        [0, 0, 0, 0, 1],
        [0, 0, 0, 1, 0],
        [0, 0, 1, 0, 0],
        [0, 1, 0, 0, 0],
        [1, 1, 1, 1, 1],
    ],
    dtype=float,
)


@dataclass(frozen=True)
class GridSpec:
    """Uniform transverse sampling grid, FFT-centered (x=0 at index nx//2)."""

    nx: int
    ny: int
    dx: float
    dy: float

    def __post_init__(self):
        for name, n in (("nx", self.nx), ("ny", self.ny)):
            if n < 8:
                raise ValidationError(f"{name} must be >= 8, got {n}")
            if n & (n - 1):
                raise ValidationError(f"{name} must be a power of two, got {n}")
        if self.dx <= 0 or self.dy <= 0:
            raise ValidationError("dx, dy must be > 0")

    @property
    def extent_x(self) -> float:
        return self.nx * self.dx

    @property
    def extent_y(self) -> float:
        return self.ny * self.dy

    @property
    def x(self) -> np.ndarray:
        return (np.arange(self.nx) - self.nx // 2) * self.dx

    @property
    def y(self) -> np.ndarray:
        return (np.arange(self.ny) - self.ny // 2) * self.dy

    def mesh(self):
        return np.meshgrid(self.x, self.y, indexing="ij")

    def kmesh(self):
        """Angular spatial frequencies (rad/m) on the FFT grid."""
        kx = 2.0 * np.pi * np.fft.fftfreq(self.nx, self.dx)
        ky = 2.0 * np.pi * np.fft.fftfreq(self.ny, self.dy)
        return np.meshgrid(kx, ky, indexing="ij")

    @property
    def pixel_area(self) -> float:
        return self.dx * self.dy


@dataclass
class Image2D:
    """A real or complex 2-D field/intensity sample on a GridSpec."""

    data: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        self.data = np.asarray(self.data)
        if self.data.shape != (self.grid.nx, self.grid.ny):
            raise ValidationError(
                f"image shape {self.data.shape} does not match grid "
                f"({self.grid.nx}, {self.grid.ny})"
            )

    def power(self) -> float:
        return float(np.sum(np.abs(self.data) ** 2) * self.grid.pixel_area)

    def copy(self) -> "Image2D":
        return Image2D(self.data.copy(), self.grid)


def make_mask(kind: str, params: dict, grid: GridSpec) -> Image2D:
    """Render a binary {0,1} transmission mask.

    Feature sizes must span at least 4 pixels, otherwise the mask is
    rejected as under-resolved.
    """
    if kind not in MASK_KINDS:
        raise ValidationError(f"unknown mask kind {kind!r}")
    params = dict(params or {})
    xx, yy = grid.mesh()

    if kind == "uniform":
        return Image2D(np.ones((grid.nx, grid.ny)), grid)

    if kind == "custom":
        return read_pgm_mask(params["path"], grid)

    if kind == "three_slit":
        width = float(params["slit_width"])
        pitch = float(params["slit_pitch"])
        height = float(params.get("slit_height", 0.6 * grid.extent_y))
        _check_resolved("slit_width", width, grid.dx)
        if pitch <= width:
            raise ValidationError("slit_pitch must exceed slit_width")
        mask = np.zeros((grid.nx, grid.ny))
        for center in (-pitch, 0.0, pitch):
            mask[(np.abs(xx - center) < width / 2) & (np.abs(yy) < height / 2)] = 1.0
        return Image2D(mask, grid)

    if kind == "digit_two":
        height = float(params.get("height", 0.5 * grid.extent_y))
        cell = height / _DIGIT_TWO_GLYPH.shape[0]
        _check_resolved("glyph cell", cell, max(grid.dx, grid.dy))
        width = cell * _DIGIT_TWO_GLYPH.shape[1]
        col = np.clip(((xx + width / 2) / cell).astype(int), -1, _DIGIT_TWO_GLYPH.shape[1])
        row = np.clip(((yy + height / 2) / cell).astype(int), -1, _DIGIT_TWO_GLYPH.shape[0])
        inside = (
            (np.abs(xx) < width / 2)
            & (np.abs(yy) < height / 2)
            & (col >= 0)
            & (col < _DIGIT_TWO_GLYPH.shape[1])
            & (row >= 0)
            & (row < _DIGIT_TWO_GLYPH.shape[0])
        )
        mask = np.zeros((grid.nx, grid.ny))
        # glyph rows run top-to-bottom; y increases upward
        glyph = _DIGIT_TWO_GLYPH[::-1]
        mask[inside] = glyph[row[inside], col[inside]]
        return Image2D(mask, grid)

    # bar_target: USAF-style triplets, three vertical bars (lower half)
    # and three horizontal bars (upper half).
    width = float(params["bar_width"])
    length = float(params.get("bar_length", 5.0 * width))
    _check_resolved("bar_width", width, max(grid.dx, grid.dy))
    mask = np.zeros((grid.nx, grid.ny))
    pitch = 2.0 * width
    y_lo = -grid.extent_y / 4
    y_hi = grid.extent_y / 4
    for center in (-pitch, 0.0, pitch):
        mask[(np.abs(xx - center) < width / 2) & (np.abs(yy - y_lo) < length / 2)] = 1.0
        mask[(np.abs(yy - y_hi - center) < width / 2) & (np.abs(xx) < length / 2)] = 1.0
    return Image2D(mask, grid)


def _check_resolved(name: str, feature: float, pitch: float) -> None:
    if feature < 4.0 * pitch:
        raise ValidationError(
            f"{name} = {feature:.3g} m is under-resolved by the grid "
            f"(needs >= 4 pixels of {pitch:.3g} m)"
        )


def angular_spectrum_propagate(field: Image2D, distance: float, wavelength: float) -> Image2D:
    """Paraxial free-space propagation over `distance` (may be negative).

    Applies exp(-i (kx^2 + ky^2) d / (2k)) in the spatial-frequency domain.
    Unitary: total power is preserved to round-off.
    """
    if wavelength <= 0:
        raise ValidationError("wavelength must be > 0")
    k = 2.0 * np.pi / wavelength
    grid = field.grid
    kmax = np.hypot(np.pi / grid.dx, np.pi / grid.dy)
    if kmax >= 0.5 * k:
        raise ValidationError(
            "paraxial band limit violated: grid Nyquist frequency "
            f"{kmax:.3g} rad/m is not small against k = {k:.3g} rad/m"
        )
    if distance == 0.0:
        return field.copy()
    kxx, kyy = grid.kmesh()
    transfer = np.exp(-1j * (kxx**2 + kyy**2) * distance / (2.0 * k))
    spec = np.fft.fft2(field.data.astype(complex), norm="ortho")
    out = np.fft.ifft2(spec * transfer, norm="ortho")
    return Image2D(out, grid)


def apply_tilt(field: Image2D, angle: float, wavelength: float) -> Image2D:
    """Multiply by the in-plane tilt carrier exp(i k sin(angle) x)."""
    if abs(angle) >= 0.1:
        raise ValidationError(f"tilt angle {angle:.3g} rad exceeds the paraxial bound 0.1 rad")
    if angle == 0.0:
        return field.copy()
    if field.grid.dx >= wavelength / (4.0 * abs(np.sin(angle))):
        raise ValidationError(
            f"tilt carrier under-resolved: dx = {field.grid.dx:.3g} m but the "
            f"carrier needs dx < {wavelength / (4 * abs(np.sin(angle))):.3g} m"
        )
    k = 2.0 * np.pi / wavelength
    phase = np.exp(1j * k * np.sin(angle) * field.grid.x)
    return Image2D(field.data * phase[:, None], field.grid)


def image_through_4f(field: Image2D, f1: float, f2: float) -> Image2D:
    """Ideal 4-f relay: output is the input inverted and magnified by f2/f1.

    Resampling is bilinear; total power is renormalized to the input power
    afterwards (ideal lossless imaging). Rejects configurations where the
    magnified image no longer fits on the grid.
    """
    if f1 <= 0 or f2 <= 0:
        raise ValidationError("focal lengths must be > 0")
    grid = field.grid
    mag = f2 / f1
    p_in = field.power()
    if p_in == 0.0:
        return field.copy()

    if mag > 1.0:
        xx, yy = grid.mesh()
        window = (np.abs(xx) < grid.extent_x / (2 * mag)) & (
            np.abs(yy) < grid.extent_y / (2 * mag)
        )
        p_window = float(np.sum(np.abs(field.data[window]) ** 2) * grid.pixel_area)
        if 1.0 - p_window / p_in > 1e-6:
            raise ValidationError(
                f"magnified image (|M| = {mag:.3g}) exceeds the grid extent"
            )

    ix = (np.arange(grid.nx) - grid.nx // 2).astype(float)
    iy = (np.arange(grid.ny) - grid.ny // 2).astype(float)
    # output pixel at x maps to input sample at -x/M
    src_x = -ix / mag + grid.nx // 2
    src_y = -iy / mag + grid.ny // 2
    coords = np.meshgrid(src_x, src_y, indexing="ij")
    data = field.data.astype(complex)
    out = (
        map_coordinates(data.real, coords, order=1, mode="constant", cval=0.0)
        + 1j * map_coordinates(data.imag, coords, order=1, mode="constant", cval=0.0)
    ) / mag
    out_img = Image2D(out, grid)
    p_out = out_img.power()
    if p_out > 0:
        out_img.data *= np.sqrt(p_in / p_out)
    return out_img


def gaussian_beam(grid: GridSpec, waist: float, amplitude: float = 1.0) -> Image2D:
    """Fundamental Gaussian amplitude profile exp(-r^2 / w0^2)."""
    if waist <= 0:
        raise ValidationError("waist must be > 0")
    xx, yy = grid.mesh()
    return Image2D(amplitude * np.exp(-(xx**2 + yy**2) / waist**2), grid)


def read_pgm_mask(path, grid: GridSpec) -> Image2D:
    """Load an 8-bit binary PGM (P5) and binarize at threshold 128."""
    raw = Path(path).read_bytes()
    fields, offset = [], 0
    while len(fields) < 4:
        while offset < len(raw) and raw[offset : offset + 1].isspace():
            offset += 1
        if raw[offset : offset + 1] == b"#":
            offset = raw.index(b"\n", offset) + 1
            continue
        start = offset
        while offset < len(raw) and not raw[offset : offset + 1].isspace():
            offset += 1
        fields.append(raw[start:offset])
    if fields[0] != b"P5":
        raise ValidationError(f"{path}: not a binary PGM (P5) file")
    width, height, maxval = (int(v) for v in fields[1:])
    if maxval > 255:
        raise ValidationError(f"{path}: mask PGM must be 8-bit (maxval <= 255)")
    offset += 1  # single whitespace byte after the header
    pixels = np.frombuffer(raw, dtype=np.uint8, count=width * height, offset=offset)
    img = pixels.reshape(height, width)
    if (width, height) != (grid.nx, grid.ny):
        raise ValidationError(
            f"{path}: PGM size {width}x{height} does not match grid {grid.nx}x{grid.ny}"
        )
    # PGM rows run top-to-bottom; map to (x, y) with y increasing upward
    mask = (img.T[:, ::-1] >= 128).astype(float)
    return Image2D(mask, grid)


def write_pgm16(path, data: np.ndarray) -> float:
    """Write a non-negative array as 16-bit big-endian binary PGM.

    Returns the scale factor counts-per-input-unit used for rescaling.
    """
    data = np.asarray(data, dtype=float)
    if np.any(data < 0):
        raise ValidationError("PGM export requires non-negative data")
    peak = float(data.max())
    scale = 65535.0 / peak if peak > 0 else 1.0
    scaled = np.round(data * scale).astype(">u2")
    # (x, y) with y upward -> PGM rows top-to-bottom
    rows = scaled[:, ::-1].T
    header = f"P5\n{rows.shape[1]} {rows.shape[0]}\n65535\n".encode()
    Path(path).write_bytes(header + rows.tobytes())
    return scale
