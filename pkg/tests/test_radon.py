import time

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from imagegen import gaussian, mixture, random_smooth, rel_l2
from radoncdt.datasets import centroid
from radoncdt.errors import DegenerateInput, DomainError
from radoncdt.gridio import Sinogram, normalize_density
from radoncdt.radon import (
    RadonConfig,
    default_t_count,
    project,
    projection_matrix,
    radon_forward,
    radon_inverse,
)


def unit_pixel(size, row, col):
    img = np.zeros((size, size))
    img[row, col] = 1.0
    return normalize_density(img)


def test_default_offset_count_covers_diagonal():
    assert default_t_count((64, 64)) == 93
    assert default_t_count((65, 65)) == 93
    assert default_t_count((10, 3)) == 17


def test_config_validation():
    for bad in (dict(num_angles=0), dict(t_count=4), dict(t_count=1), dict(step=0.0)):
        with pytest.raises(DomainError):
            RadonConfig(**bad)


def test_sinogram_shape_and_angles():
    s = radon_forward(gaussian(64), RadonConfig(num_angles=90))
    assert s.shape == (93, 90)
    np.testing.assert_allclose(s.angles, np.arange(90) * 2.0)


def test_rejects_unnormalized_input():
    with pytest.raises(DomainError):
        radon_forward(np.ones((8, 8)))
    img = normalize_density(np.ones((8, 8)))
    img[0, 0] = 0.0
    with pytest.raises(DomainError):
        radon_forward(img / img.sum())


def test_isotropic_gaussian_projections_agree():
    s = radon_forward(gaussian(65, sigma=6.0)).values
    # max over angle pairs of the L2 profile difference
    spread = max(np.linalg.norm(s[:, i] - s[:, j]) for i in range(0, 180, 3) for j in range(i + 1, 180, 7))
    assert spread <= 1e-3


def test_centre_pixel_projects_to_zero_offset():
    img = np.zeros((65, 65))
    img[32, 32] = 1.0
    raw = project(img)
    k0 = raw.shape[0] // 2
    np.testing.assert_allclose(raw[k0], 1.0, rtol=0, atol=1e-12)
    # normalized: everything but the positivity floor sits at t = 0
    s = radon_forward(unit_pixel(65, 32, 32)).values
    assert np.all(s[k0] >= 1 - 65 * 65 * 1e-8)


def test_offset_pixel_centroid_follows_cosine():
    s = radon_forward(unit_pixel(65, 32, 42))  # x0 = 10, y0 = 0
    com = (s.t[:, None] * s.values).sum(axis=0)
    assert np.max(np.abs(com - 10 * np.cos(s.theta))) <= 0.5


@given(st.integers(0, 2**32 - 1))
def test_mass_identical_across_angles(seed):
    img = random_smooth(np.random.default_rng(seed), 32)
    mass = radon_forward(img).values.sum(axis=0)
    assert np.all(np.abs(mass - 1.0) <= 1e-6)
    assert np.ptp(mass) <= 1e-9


@given(st.integers(-6, 6), st.integers(-6, 6))
def test_shift_covariance(x0, y0):
    a = gaussian(48, sigma=4.0)
    b = gaussian(48, dx=x0, dy=y0, sigma=4.0)
    sa, sb = radon_forward(a), radon_forward(b)
    for m in range(0, 180, 15):
        corr = np.correlate(sb.values[:, m], sa.values[:, m], mode="full")
        lag = np.argmax(corr) - (sa.shape[0] - 1)
        expected = x0 * np.cos(sa.theta[m]) + y0 * np.sin(sa.theta[m])
        assert abs(lag - expected) <= 1.0


@given(st.floats(0.1, 10), st.floats(0.1, 10), st.integers(0, 2**32 - 1))
def test_linearity_of_raw_line_sums(alpha, beta, seed):
    rng = np.random.default_rng(seed)
    i, j = random_smooth(rng, 32), random_smooth(rng, 32)
    combo = project(alpha * i + beta * j, renormalize=False)
    parts = alpha * project(i, renormalize=False) + beta * project(j, renormalize=False)
    assert np.max(np.abs(combo - parts)) <= 1e-12 * max(1.0, np.abs(parts).max())


def test_stack_projection_matches_single():
    imgs = np.stack([gaussian(32, dx=d) for d in (-3, 0, 4)])
    stacked = project(imgs)
    for k in range(3):
        np.testing.assert_array_equal(stacked[k], project(imgs[k]))


def test_fbp_round_trip():
    img = mixture(64)
    rec = radon_inverse(radon_forward(img), 64, 64)
    assert rel_l2(rec, img) <= 0.05
    assert abs(rec.sum() - 1) <= 1e-12 and np.all(rec > 0)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_fbp_round_trip_random_smooth(seed):
    img = random_smooth(np.random.default_rng(seed))
    assert rel_l2(radon_inverse(radon_forward(img), 64, 64), img) <= 0.05


def test_fbp_centroid_of_translated_gaussian():
    rec = radon_inverse(radon_forward(gaussian(64, dx=8, dy=3)), 64, 64)
    cx, cy = centroid(rec)
    assert np.hypot(cx - 8, cy - 3) <= 0.5


def test_fbp_zero_sinogram():
    with pytest.raises(DegenerateInput):
        radon_inverse(Sinogram(np.zeros((93, 180))), 64, 64)


@pytest.mark.parametrize("k", [92, 91])
def test_fbp_offset_count_mismatch(k):
    with pytest.raises(DomainError):
        radon_inverse(Sinogram(np.ones((k, 180))), 64, 64)


def test_cost_scales_with_pixel_count():
    def best(n, reps=30):
        img = gaussian(n, sigma=n / 10)
        projection_matrix.cache_clear()
        project(img)  # build the operator once
        times = []
        for _ in range(reps):
            t0 = time.perf_counter()
            project(img)
            times.append(time.perf_counter() - t0)
        return min(times)

    ratio = best(128) / best(64)
    assert 2.5 <= ratio <= 6.0
