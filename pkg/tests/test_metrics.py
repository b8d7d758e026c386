import math

import numpy as np
import pytest
from scipy.ndimage import gaussian_filter

from tripodmem import (
    CameraModel,
    GridSpec,
    Image2D,
    ProbeField,
    ValidationError,
    camera_render,
    efficiency,
    image_correlation,
    interference_contrast,
    make_mask,
    visibility,
)
from tripodmem.metrics import beat_averaged_intensity, beat_factor, crosstalk_from_energies

from conftest import flat_probe


def grid128():
    return GridSpec(nx=128, ny=128, dx=2.6e-3 / 128, dy=2.6e-3 / 128)


def tilted_probe(grid, angle_deg, phase=0.0, carrier_offset=0.0, amplitude=1.0):
    k = 2 * math.pi / 795e-9
    carrier = np.exp(1j * (k * math.sin(math.radians(angle_deg)) * grid.x + phase))
    profiles = (amplitude * carrier[:, None] * np.ones(grid.ny)[None, :])[None]
    return ProbeField(
        profiles=profiles,
        pulses=np.ones((1, 32), complex),
        grid=grid,
        dtau=1e-9,
        carrier_wavelength=795e-9,
        channel=1,
        carrier_offset=carrier_offset,
    )


def test_efficiency_identity_and_zero(small_grid):
    probe = flat_probe(small_grid, np.ones(32), 1e-9)
    assert efficiency(probe, probe) == pytest.approx(1.0)
    assert efficiency(probe.scaled(0.0), probe) == 0.0
    with pytest.raises(ValidationError, match="zero-energy"):
        efficiency(probe, probe.scaled(0.0))


def test_efficiency_scale_invariance(small_grid):
    probe = flat_probe(small_grid, np.linspace(0, 1, 32), 1e-9)
    out = probe.scaled(0.3 + 0.4j)
    assert efficiency(out.scaled(2.7), probe.scaled(2.7)) == pytest.approx(
        efficiency(out, probe), rel=1e-12
    )


SLIT = {"slit_width": 1.2e-4, "slit_pitch": 3e-4}
CENTERS = [-3e-4, 0.0, 3e-4]


def test_visibility_of_binary_slits_is_one():
    grid = grid128()
    mask = make_mask("three_slit", SLIT, grid)
    assert visibility(mask, "x", {"centers": CENTERS}) == pytest.approx(1.0)


def test_visibility_of_uniform_image_is_zero():
    grid = grid128()
    assert visibility(make_mask("uniform", {}, grid), "x", {"centers": CENTERS}) == 0.0


def test_visibility_of_blurred_slits_pinned_by_convolution():
    grid = grid128()
    mask = make_mask("three_slit", SLIT, grid)
    sigma_px = (SLIT["slit_pitch"] / 4) / grid.dx
    blurred = gaussian_filter(mask.data, sigma=(sigma_px, 0))
    # direct evaluation of the definition, independent of the estimator
    lineout = blurred.mean(axis=1)
    idx = lambda v: int(np.argmin(np.abs(grid.x - v)))
    i_max = np.mean([lineout[idx(c)] for c in CENTERS])
    i_min = np.mean([lineout[idx(g)] for g in (-1.5e-4, 1.5e-4)])
    expected = (i_max - i_min) / (i_max + i_min)
    measured = visibility(Image2D(blurred, grid), "x", {"centers": CENTERS})
    assert measured == pytest.approx(expected, rel=1e-12)
    assert 0 < measured < 1


def test_visibility_decreases_with_uniform_offset():
    grid = grid128()
    mask = make_mask("three_slit", SLIT, grid)
    v0 = visibility(mask, "x", {"centers": CENTERS})
    v1 = visibility(Image2D(mask.data + 0.2, grid), "x", {"centers": CENTERS})
    assert v1 < v0


def test_visibility_degenerate_geometry_rejected():
    grid = grid128()
    with pytest.raises(ValidationError, match="degenerate"):
        visibility(make_mask("uniform", {}, grid), "x", {"centers": [0.0]})


def test_crosstalk_definition():
    assert crosstalk_from_energies(1e-3, 1.0) == pytest.approx(-30.0)
    assert crosstalk_from_energies(0.0, 1.0) == float("-inf")
    with pytest.raises(ValidationError):
        crosstalk_from_energies(1.0, 0.0)


def test_image_correlation_bounds():
    a = np.zeros((8, 8))
    b = np.zeros((8, 8))
    a[:4] = 1.0
    assert image_correlation(a, a) == pytest.approx(1.0)
    b[4:] = 1.0
    assert image_correlation(a, b) == 0.0
    with pytest.raises(ValidationError, match="all-zero"):
        image_correlation(a, np.zeros((8, 8)))


def test_equal_frequency_fringes_have_full_contrast():
    grid = GridSpec(nx=128, ny=128, dx=8e-6, dy=8e-6)
    camera = CameraModel()
    pair = [tilted_probe(grid, 0.25), tilted_probe(grid, -0.25)]
    assert interference_contrast(pair, camera) >= 0.99


def test_ghz_split_pair_contrast_collapses():
    grid = GridSpec(nx=128, ny=128, dx=8e-6, dy=8e-6)
    camera = CameraModel(exposure=1.0)
    pair = [
        tilted_probe(grid, 0.25),
        tilted_probe(grid, -0.25, carrier_offset=2 * math.pi * 3.0378e9),
    ]
    assert interference_contrast(pair, camera) < 1e-3


def test_short_exposure_beat_rejected():
    grid = GridSpec(nx=128, ny=128, dx=8e-6, dy=8e-6)
    camera = CameraModel(exposure=1e-12)
    pair = [
        tilted_probe(grid, 0.25),
        tilted_probe(grid, -0.25, carrier_offset=2 * math.pi * 3.0378e9),
    ]
    with pytest.raises(ValidationError, match="beat period"):
        interference_contrast(pair, camera)


def test_fringe_shift_tracks_relative_phase():
    grid = GridSpec(nx=256, ny=128, dx=8e-6, dy=8e-6)
    camera = CameraModel()
    carrier_k = 2 * (2 * math.pi / 795e-9) * math.sin(math.radians(0.25))
    phi = 1.3

    period_px = 2 * math.pi / carrier_k / grid.dx  # about 11.4 pixels

    def peak_x(phase):
        pair = [tilted_probe(grid, 0.25, phase=phase), tilted_probe(grid, -0.25)]
        img = beat_averaged_intensity(pair, camera)
        lineout = img.data.mean(axis=1)
        # peak of the fringe nearest x = 0, refined parabolically
        lo = 128 - int(period_px / 2) - 1
        hi = 128 + int(period_px / 2) + 2
        i = int(np.argmax(lineout[lo:hi])) + lo
        y0, y1, y2 = lineout[i - 1], lineout[i], lineout[i + 1]
        frac = 0.5 * (y0 - y2) / (y0 - 2 * y1 + y2)
        return grid.x[i] + frac * grid.dx

    shift = peak_x(phi) - peak_x(0.0)
    expected = -phi / carrier_k  # fringes move against the phase advance
    assert min(abs(shift - expected), abs(shift + expected)) < grid.dx


def test_beat_factor_limits():
    assert beat_factor(0.0, 1.0) == 1.0
    assert abs(beat_factor(2 * math.pi * 3.0378e9, 1.0)) < 1e-9


def test_camera_counts_statistics():
    grid = grid128()
    flat = Image2D(np.ones((128, 128)), grid)
    for photons, frames, expected in ((2.7e4, 50, 3.375e5), (1.3e3, 200, 6.5e4)):
        camera = CameraModel(quantum_efficiency=0.25, n_frames=frames, rng_seed=7)
        counts = camera_render(flat, photons, camera)
        assert counts.sum() == pytest.approx(expected, rel=0.01)


def test_camera_poisson_variance():
    grid = grid128()
    camera = CameraModel(quantum_efficiency=0.25, n_frames=50, rng_seed=3)
    counts = camera_render(Image2D(np.ones((128, 128)), grid), 2.7e4 * 128 * 128 / 50, camera)
    ratio = counts.var() / counts.mean()
    assert 0.95 <= ratio <= 1.05


def test_camera_determinism_and_edge_cases():
    grid = grid128()
    camera = CameraModel(rng_seed=5)
    img = Image2D(np.ones((128, 128)), grid)
    a = camera_render(img, 1e4, camera)
    b = camera_render(img, 1e4, camera)
    assert np.array_equal(a, b)
    assert a.dtype == np.int64
    assert np.all(camera_render(img, 0.0, camera) == 0)
    with pytest.raises(ValidationError, match="non-negative"):
        camera_render(Image2D(-img.data, grid), 1e4, camera)


def test_camera_model_invariants():
    with pytest.raises(ValidationError):
        CameraModel(quantum_efficiency=0.0)
    with pytest.raises(ValidationError):
        CameraModel(n_frames=0)
