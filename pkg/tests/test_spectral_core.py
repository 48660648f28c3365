import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mildns.spectral_core import (
    K_MAX,
    Grid,
    PhysicalField,
    SpectralError,
    SpectralField,
    dealias,
    derivative,
    forward_transform,
    hermitian_defect,
    inverse_transform,
    multi_indices,
    random_small_field,
    single_mode,
    taylor_green,
)


def direct_dft(values: np.ndarray) -> np.ndarray:
    """O(N^{2d}) Fourier sum with the same 1/N^d normalization."""
    dim = values.ndim
    n = values.shape[0]
    out = np.zeros(values.shape, dtype=complex)
    pts = list(itertools.product(range(n), repeat=dim))
    for xi in pts:
        acc = 0j
        for x in pts:
            acc += values[x] * np.exp(-2j * np.pi * np.dot(xi, x) / n)
        out[xi] = acc / n**dim
    return out


def direct_inverse(coeffs: np.ndarray) -> np.ndarray:
    dim = coeffs.ndim
    n = coeffs.shape[0]
    pts = list(itertools.product(range(n), repeat=dim))
    out = np.zeros(coeffs.shape, dtype=complex)
    for x in pts:
        out[x] = sum(coeffs[xi] * np.exp(2j * np.pi * np.dot(xi, x) / n) for xi in pts)
    return out


@pytest.fixture
def grid2():
    return Grid(2, 16)


def test_grid_validation():
    for bad in [(1, 16), (4, 16), (2, 6), (2, 15)]:
        with pytest.raises(SpectralError):
            Grid(*bad)
    with pytest.raises(SpectralError):
        Grid(2, 16, 0.0)


def test_constant_field_has_only_mean_mode(grid2):
    s = forward_transform(PhysicalField(grid2, np.ones(grid2.shape)))
    expected = np.zeros(grid2.shape, dtype=complex)
    expected[0, 0] = 1.0
    np.testing.assert_allclose(s.coeffs[0], expected, atol=1e-15)


def test_sine_coefficients():
    grid = Grid(2, 16, 2.0)
    x = grid.coords[0] / grid.box_scale * np.ones(grid.shape)
    s = forward_transform(PhysicalField(grid, np.sin(x)))
    assert s.coeffs[0, 1, 0] == pytest.approx(-0.5j, abs=1e-15)
    assert s.coeffs[0, -1, 0] == pytest.approx(0.5j, abs=1e-15)
    rest = s.coeffs[0].copy()
    rest[1, 0] = rest[-1, 0] = 0
    assert np.max(np.abs(rest)) < 1e-15


def test_single_mode_inverse_is_sine(grid2):
    p = inverse_transform(single_mode(grid2, (1, 0)))
    np.testing.assert_allclose(p.values[0], np.sin(grid2.coords[0]) * np.ones(grid2.shape), atol=1e-14)
    np.testing.assert_array_equal(p.values[1], 0.0)


def test_zero_field_inverse_zero(grid2):
    assert np.all(inverse_transform(SpectralField.zeros(grid2)).values == 0)


@pytest.mark.parametrize("dim", [2, 3])
def test_transforms_match_direct_sum(dim):
    grid = Grid(dim, 8)
    rng = np.random.default_rng(7)
    vals = rng.standard_normal(grid.shape)
    s = forward_transform(PhysicalField(grid, vals))
    np.testing.assert_allclose(s.coeffs[0], direct_dft(vals), atol=1e-13)
    back = inverse_transform(s).values[0]
    np.testing.assert_allclose(back, direct_inverse(s.coeffs[0]).real, atol=1e-12)
    assert np.max(np.abs(back - vals)) / np.max(np.abs(vals)) < 1e-12


def test_hermitian_violation_rejected(grid2):
    c = np.zeros((2,) + grid2.shape, dtype=complex)
    c[0, 1, 0] = 1.0
    with pytest.raises(SpectralError):
        inverse_transform(SpectralField(grid2, c))


def test_shape_mismatch_rejected(grid2):
    with pytest.raises(SpectralError):
        SpectralField(grid2, np.zeros((2, 8, 8)))


def test_derivatives_of_sines():
    grid = Grid(2, 32)
    x1, x2 = (c * np.ones(grid.shape) for c in grid.coords)
    s = single_mode(grid, (1, 0))
    np.testing.assert_allclose(derivative(s, (1, 0)).values()[0], np.cos(x1), atol=1e-13)
    np.testing.assert_allclose(derivative(s, (2, 0)).values()[0], -np.sin(x1), atol=1e-13)
    prod = forward_transform(PhysicalField(grid, np.sin(x1) * np.sin(x2)))
    np.testing.assert_allclose(derivative(prod, (1, 1)).values()[0], np.cos(x1) * np.cos(x2), atol=1e-13)


def test_derivative_order_limit(grid2):
    s = single_mode(grid2, (1, 0))
    with pytest.raises(SpectralError):
        derivative(s, (K_MAX + 1, 0))
    const = forward_transform(PhysicalField(grid2, 3.0 * np.ones(grid2.shape)))
    assert np.max(np.abs(derivative(const, (1, 0)).coeffs)) == 0


def test_multi_indices():
    assert multi_indices(2, 2) == [(2, 0), (1, 1), (0, 2)]
    assert len(multi_indices(3, 4)) == 15


def test_dealias_threshold():
    grid = Grid(2, 12)
    kept = dealias(single_mode(grid, (4, 0), component=1))
    dropped = dealias(single_mode(grid, (5, 0), component=1))
    assert np.max(np.abs(kept.coeffs)) == 0.5
    assert np.max(np.abs(dropped.coeffs)) == 0
    np.testing.assert_array_equal(dealias(kept).coeffs, kept.coeffs)


def test_dealiased_product_free_of_alias():
    """sin(3x)^2 on N=12 aliases its 6x part onto the Nyquist/-6 mode; the dealiased product does not."""
    coarse, fine = Grid(2, 12), Grid(2, 32)

    def product(grid, truncate):
        s = single_mode(grid, (3, 0), component=1)
        if truncate:
            s = dealias(s)
        v = s.values()[1]
        return forward_transform(PhysicalField(grid, v * v)).coeffs[0]

    raw = product(coarse, False)
    reference = product(fine, False)
    assert raw[-6, 0] == pytest.approx(reference[-6, 0] + reference[6, 0], abs=1e-14)
    cleaned = product(coarse, True) * coarse.dealias_mask
    assert abs(cleaned[-6, 0]) < 1e-15
    # surviving modes agree with the fine reference
    assert cleaned[0, 0] == pytest.approx(reference[0, 0], abs=1e-14)


def test_random_field_properties():
    grid = Grid(2, 32)
    a = random_small_field(3, -2.0, 0.01, grid)
    b = random_small_field(3, -2.0, 0.01, grid)
    np.testing.assert_array_equal(a.coeffs, b.coeffs)
    assert a.divergence_free and a.divergence_defect() < 1e-12
    assert a.is_mean_zero()
    assert hermitian_defect(a.coeffs, 2) < 1e-14
    assert np.max(np.abs(random_small_field(3, -2.0, 0.0, grid).coeffs)) == 0
    assert not np.array_equal(random_small_field(4, -2.0, 0.01, grid).coeffs, a.coeffs)


def test_random_field_resolution_independent():
    fine = random_small_field(9, -1.0, 0.01, Grid(2, 64), cutoff=8.0)
    coarse = random_small_field(9, -1.0, 0.01, Grid(2, 32), cutoff=8.0)
    for xi in [(1, 0), (3, -4), (-7, 2)]:
        np.testing.assert_allclose(fine.coeffs[(slice(None),) + xi], coarse.coeffs[(slice(None),) + xi])


def test_taylor_green_divergence_free():
    tg = taylor_green(Grid(2, 16))
    assert tg.divergence_defect() < 1e-14 and tg.is_mean_zero()
    with pytest.raises(SpectralError):
        taylor_green(Grid(3, 8))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), dim=st.sampled_from([2, 3]))
def test_parseval(seed, dim):
    grid = Grid(dim, 8)
    vals = np.random.default_rng(seed).standard_normal((dim,) + grid.shape)
    s = forward_transform(PhysicalField(grid, vals))
    lhs = np.sum(vals**2) / 8**dim
    assert abs(lhs - s.energy()) <= 1e-12 * lhs


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**31), slope=st.floats(-3, 0), dim=st.sampled_from([2, 3]))
def test_round_trip_and_hermitian(seed, slope, dim):
    grid = Grid(dim, 8)
    s = random_small_field(seed, slope, 1.0, grid)
    p = inverse_transform(s)
    back = forward_transform(p)
    assert np.max(np.abs(back.coeffs - s.coeffs)) <= 1e-12 * np.max(np.abs(s.coeffs))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**31), a=st.floats(-5, 5), b=st.floats(-5, 5))
def test_derivative_linear(seed, a, b):
    grid = Grid(2, 16)
    u = random_small_field(seed, -1.0, 1.0, grid)
    v = random_small_field(seed + 1, -1.0, 1.0, grid)
    lhs = derivative(u * a + v * b, (1, 2)).coeffs
    rhs = (derivative(u, (1, 2)) * a + derivative(v, (1, 2)) * b).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(1.0, np.max(np.abs(lhs)))
