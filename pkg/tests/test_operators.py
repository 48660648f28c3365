import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mildns.operators import (
    LPBump,
    apply_Lk,
    fractional_laplacian,
    heat,
    leray,
    lk_antiderivative,
    lk_coefficients,
    lp_block,
    oseen_kernel,
)
from mildns.spectral_core import Grid, PhysicalField, SpectralError, forward_transform, random_small_field, single_mode


def sup(s):
    return float(np.max(np.abs(s.values())))


def test_heat_identity_and_mode_decay():
    grid = Grid(2, 16)
    s = random_small_field(1, -1.0, 1.0, grid)
    np.testing.assert_array_equal(heat(s, 0.0).coeffs, s.coeffs)
    mode = single_mode(grid, (2, 0), component=1, amplitude=3.0)
    out = heat(mode, 0.25)
    assert abs(out.coeffs[1, 2, 0]) == pytest.approx(1.5 * math.exp(-1.0), rel=1e-14)
    with pytest.raises(SpectralError):
        heat(s, -1.0)


def test_heat_semigroup():
    s = random_small_field(2, -1.0, 1.0, Grid(2, 32))
    err = sup(heat(heat(s, 0.1), 0.1) - heat(s, 0.2))
    assert err < 1e-12


def test_leray_gradient_and_solenoidal():
    grid = Grid(2, 16)
    grad = single_mode(grid, (1, 0), component=0)
    assert np.max(np.abs(leray(grad).coeffs)) < 1e-16
    shear = single_mode(grid, (0, 1), component=0)
    np.testing.assert_allclose(leray(shear).coeffs, shear.coeffs, atol=1e-16)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), dim=st.sampled_from([2, 3]))
def test_leray_idempotent(seed, dim):
    grid = Grid(dim, 8)
    vals = np.random.default_rng(seed).standard_normal((dim,) + grid.shape)
    s = forward_transform(PhysicalField(grid, vals))
    once = leray(s)
    assert sup(leray(once) - once) < 1e-12
    assert once.divergence_defect() < 1e-12


def test_fractional_laplacian():
    grid = Grid(2, 16)
    s = single_mode(grid, (1, 0), component=1)
    np.testing.assert_allclose(fractional_laplacian(s, 1.0).coeffs, s.coeffs, atol=1e-15)
    r = random_small_field(5, -1.0, 1.0, grid)
    half = fractional_laplacian(fractional_laplacian(r, 0.5), 0.5)
    assert sup(half - fractional_laplacian(r, 1.0)) < 1e-12
    restored = fractional_laplacian(fractional_laplacian(r, -0.5), 0.5)
    assert sup(restored - r) < 1e-12
    with pytest.raises(SpectralError):
        fractional_laplacian(r, -1.5)


def test_lp_blocks():
    grid = Grid(2, 64)
    bump = LPBump.for_grid(grid)
    four = single_mode(grid, (4, 0), component=1)
    np.testing.assert_allclose(lp_block(four, 2, bump).coeffs, four.coeffs)
    assert np.max(np.abs(lp_block(four, 0, bump).coeffs)) == 0
    assert bump.psi(1.0) == 1.0
    s = random_small_field(3, -1.0, 1.0, grid)
    total = sum((lp_block(s, j, bump) for j in bump.blocks()), start=s * 0.0)
    assert sup(total - s) < 1e-10
    with pytest.raises(SpectralError):
        lp_block(s, bump.j_max + 1, bump)


def test_lp_disjoint_supports():
    grid = Grid(2, 64)
    bump = LPBump.for_grid(grid)
    r = np.sqrt(grid.k2)
    for j in bump.blocks():
        a = bump.psi(r / 2.0**j) > 0
        b = bump.psi(r / 2.0 ** (j + 2)) > 0
        assert not np.any(a & b)


@pytest.mark.parametrize("k", range(5))
@pytest.mark.parametrize("lam", [1.0, 4.0, 9.0])
def test_lk_antiderivative_finite_difference(k, lam):
    t, h = 0.3, 1e-5
    fd = (lk_antiderivative(t + h, lam, k) - lk_antiderivative(t - h, lam, k)) / (2 * h)
    exact = t**k * lam ** (k + 1) * math.exp(-2 * t * lam)
    assert abs(fd - exact) <= 1e-6 * exact


def test_lk_zero_mode_and_coefficients():
    assert lk_antiderivative(0.5, 0.0, 3) == 0.0
    assert lk_antiderivative(0.0, 2.0, 0) == pytest.approx(-0.5)
    assert lk_coefficients(1) == [-0.25, -0.5]
    s = random_small_field(4, -1.0, 1.0, Grid(2, 16))
    out = apply_Lk(s, 0.2, 2)
    assert np.max(np.abs(out.coeffs[:, 0, 0])) == 0
    with pytest.raises(SpectralError):
        apply_Lk(s, 0.0, 1)


def test_oseen_kernel_peak_and_scaling():
    grid = Grid(2, 128, 16.0)
    k = 0
    a = oseen_kernel((1, 0), 0.5, grid)
    b = oseen_kernel((1, 0), 1.0, grid)
    peak = np.unravel_index(np.argmax(b.values[0]), grid.shape)
    assert grid.radius[peak] < 2.0
    ratio = b.values.max() / a.values.max()
    assert ratio == pytest.approx(2.0 ** (-(grid.dim + k + 1) / 2), rel=0.02)


def test_oseen_kernel_warns_for_large_time():
    with pytest.warns(UserWarning):
        oseen_kernel((1, 0), 4.0, Grid(2, 16, 1.0))
