import math

import numpy as np
import pytest

from tripodmem import (
    GridSpec,
    Image2D,
    ValidationError,
    angular_spectrum_propagate,
    apply_tilt,
    gaussian_beam,
    image_through_4f,
    make_mask,
    read_pgm_mask,
    write_pgm16,
)

LAMBDA = 795e-9


def grid128(extent=2.6e-3, n=128):
    return GridSpec(nx=n, ny=n, dx=extent / n, dy=extent / n)


def test_grid_invariants():
    with pytest.raises(ValidationError, match="power of two"):
        GridSpec(nx=100, ny=128, dx=1e-5, dy=1e-5)
    with pytest.raises(ValidationError, match=">= 8"):
        GridSpec(nx=4, ny=8, dx=1e-5, dy=1e-5)
    with pytest.raises(ValidationError, match="dx"):
        GridSpec(nx=8, ny=8, dx=0.0, dy=1e-5)


def test_uniform_mask_is_all_ones():
    grid = grid128()
    mask = make_mask("uniform", {}, grid)
    assert np.all(mask.data == 1.0)


def test_three_slit_open_fraction():
    grid = grid128()
    w, p = 1.2e-4, 3e-4
    mask = make_mask(
        "three_slit", {"slit_width": w, "slit_pitch": p, "slit_height": grid.extent_y}, grid
    )
    open_fraction = mask.data.mean()
    assert open_fraction == pytest.approx(3 * w / grid.extent_x, abs=3 * grid.dx / grid.extent_x)


def test_masks_are_binary():
    grid = grid128()
    for kind, params in (
        ("three_slit", {"slit_width": 1.2e-4, "slit_pitch": 3e-4}),
        ("digit_two", {"height": 1.3e-3}),
        ("bar_target", {"bar_width": 1.5e-4}),
    ):
        mask = make_mask(kind, params, grid)
        rebinarized = (mask.data >= 0.5).astype(float)
        assert np.array_equal(mask.data, rebinarized)


def test_under_resolved_mask_rejected():
    grid = grid128()
    with pytest.raises(ValidationError, match="under-resolved"):
        make_mask("three_slit", {"slit_width": 2e-5, "slit_pitch": 3e-4}, grid)


def test_propagate_zero_distance_identity():
    grid = grid128()
    beam = gaussian_beam(grid, 0.5e-3)
    out = angular_spectrum_propagate(beam, 0.0, LAMBDA)
    assert np.array_equal(out.data, beam.data)


def test_propagate_unitary_and_invertible():
    grid = grid128()
    beam = gaussian_beam(grid, 0.4e-3)
    out = angular_spectrum_propagate(beam, 0.05, LAMBDA)
    assert out.power() == pytest.approx(beam.power(), rel=1e-10)
    back = angular_spectrum_propagate(out, -0.05, LAMBDA)
    assert np.max(np.abs(back.data - beam.data)) < 1e-10 * np.max(np.abs(beam.data))


def test_propagate_composition():
    grid = grid128()
    beam = gaussian_beam(grid, 0.4e-3)
    one_hop = angular_spectrum_propagate(beam, 0.03, LAMBDA)
    two_hops = angular_spectrum_propagate(
        angular_spectrum_propagate(beam, 0.01, LAMBDA), 0.02, LAMBDA
    )
    assert np.max(np.abs(one_hop.data - two_hops.data)) < 1e-9 * np.max(np.abs(beam.data))


def test_gaussian_beam_waist_at_rayleigh_range():
    w0 = 0.25e-3
    zr = math.pi * w0**2 / LAMBDA  # 0.24698 m
    grid = GridSpec(nx=256, ny=256, dx=3.2e-3 / 256, dy=3.2e-3 / 256)
    out = angular_spectrum_propagate(gaussian_beam(grid, w0), zr, LAMBDA)
    profile = np.abs(out.data[:, 128]) ** 2
    sigma = math.sqrt(float(np.sum(profile * grid.x**2) / np.sum(profile)))
    assert 2 * sigma == pytest.approx(w0 * math.sqrt(2), rel=0.01)


def test_band_limit_violation_rejected():
    grid = GridSpec(nx=8, ny=8, dx=1e-7, dy=1e-7)
    with pytest.raises(ValidationError, match="band limit"):
        angular_spectrum_propagate(gaussian_beam(grid, 2e-7), 0.01, LAMBDA)


def test_tilt_is_pure_phase_and_cancels():
    grid = GridSpec(nx=128, ny=128, dx=8e-6, dy=8e-6)
    beam = gaussian_beam(grid, 0.3e-3)
    angle = math.radians(0.5)
    tilted = apply_tilt(beam, angle, LAMBDA)
    assert np.allclose(np.abs(tilted.data), np.abs(beam.data))
    restored = apply_tilt(tilted, -angle, LAMBDA)
    assert np.max(np.abs(restored.data - beam.data)) < 1e-15


def test_tilt_carrier_period():
    grid = GridSpec(nx=256, ny=256, dx=8e-6, dy=8e-6)
    angle = math.radians(0.5)
    tilted = apply_tilt(Image2D(np.ones((256, 256), complex), grid), angle, LAMBDA)
    spectrum = np.abs(np.fft.fft(tilted.data[:, 0]))
    kx = 2 * math.pi * np.fft.fftfreq(256, grid.dx)
    carrier = abs(kx[np.argmax(spectrum)])
    # expected spatial period lambda / sin(0.5 deg) = 91.1 um; the FFT grid
    # quantizes the carrier to the nearest bin (2048 um / 22 bins here)
    assert 2 * math.pi / carrier == pytest.approx(91.10e-6, rel=0.05)


def test_tilt_under_resolved_rejected():
    grid = grid128()  # dx = 20.3 um
    with pytest.raises(ValidationError, match="under-resolved"):
        apply_tilt(gaussian_beam(grid, 0.3e-3), math.radians(2.5), LAMBDA)


def test_4f_unit_magnification_inverts():
    grid = grid128()
    xx, yy = grid.mesh()
    spot = Image2D(np.exp(-((xx - 3e-4) ** 2 + yy**2) / (1e-4) ** 2).astype(complex), grid)
    out = image_through_4f(spot, 0.3, 0.3)
    assert out.power() == pytest.approx(spot.power(), rel=1e-9)
    intensity = np.abs(out.data) ** 2
    x_centroid = float(np.sum(intensity * xx) / np.sum(intensity))
    assert x_centroid == pytest.approx(-3e-4, abs=grid.dx)


def test_4f_magnification_5_over_3():
    grid = grid128()
    xx, yy = grid.mesh()
    spot = Image2D(np.exp(-((xx - 3e-4) ** 2 + yy**2) / (1e-4) ** 2).astype(complex), grid)
    out = image_through_4f(spot, 0.3, 0.5)
    intensity = np.abs(out.data) ** 2
    x_centroid = float(np.sum(intensity * xx) / np.sum(intensity))
    assert x_centroid == pytest.approx(-5e-4, abs=grid.dx)
    assert out.power() == pytest.approx(spot.power(), rel=1e-9)


def test_4f_overflow_rejected():
    grid = grid128()
    beam = gaussian_beam(grid, 0.8e-3)
    with pytest.raises(ValidationError, match="exceeds the grid"):
        image_through_4f(beam, 0.1, 0.5)


def test_pgm16_round_trip_scale(tmp_path):
    data = np.array([[0.0, 0.5], [1.0, 0.25]]).repeat(4, axis=0).repeat(4, axis=1)
    scale = write_pgm16(tmp_path / "img.pgm", data)
    assert scale == pytest.approx(65535.0)
    raw = (tmp_path / "img.pgm").read_bytes()
    assert raw.startswith(b"P5\n8 8\n65535\n")


def test_read_pgm_mask(tmp_path):
    grid = GridSpec(nx=8, ny=8, dx=1e-4, dy=1e-4)
    pixels = np.zeros((8, 8), dtype=np.uint8)  # (row from top, column)
    pixels[:4, :] = 255  # top half open
    (tmp_path / "mask.pgm").write_bytes(b"P5\n8 8\n255\n" + pixels.tobytes())
    mask = read_pgm_mask(tmp_path / "mask.pgm", grid)
    # top of the image maps to large y
    assert np.all(mask.data[:, 4:] == 1.0)
    assert mask.data.sum() == 32
