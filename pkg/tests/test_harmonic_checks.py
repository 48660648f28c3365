import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mildns import harmonic_checks as hc
from mildns.norms import TimeMesh
from mildns.spectral_core import Grid, SpectralField, single_mode


@pytest.fixture(scope="module")
def grid():
    return Grid(2, 32)


@pytest.fixture(scope="module")
def mesh():
    return TimeMesh(1.0, 32)


def constant_density(grid, mesh, value):
    return hc.SpaceTimeDensity(grid, mesh, np.full((len(mesh),) + grid.shape, value))


def test_carleson_zero_density(grid, mesh):
    rep = hc.carleson_lemma_check(constant_density(grid, mesh, 0.0), 1)
    assert rep.lhs == rep.rhs == rep.ratio == 0.0 and rep.passed


def test_carleson_constant_density_A(mesh):
    """For N = 1 the Carleson constant is the unit-ball volume ``c_2 = pi``."""
    rep = hc.carleson_lemma_check(constant_density(Grid(2, 64), mesh, 1.0), 0)
    assert rep.details["A"] == pytest.approx(math.pi, rel=0.01)
    assert rep.lhs == pytest.approx(0.0, abs=1e-20)


@pytest.mark.parametrize("k", [0, 1, 2])
def test_carleson_two_routes_agree(grid, mesh, k):
    sample = hc.random_density(5, grid, mesh)
    rep = hc.carleson_lemma_check(sample, k)
    assert rep.lhs > 0
    assert rep.details["lhs_by_parts"] == pytest.approx(rep.lhs, rel=0.01)
    assert np.isfinite(rep.ratio)


def test_carleson_rejects_negative(grid, mesh):
    with pytest.raises(hc.VerificationError):
        hc.carleson_lemma_check(constant_density(grid, mesh, -1.0), 0)
    with pytest.raises(hc.VerificationError):
        hc.SpaceTimeDensity(grid, mesh, np.zeros((3,) + grid.shape))


def test_power_norm_matches_svd():
    rng = np.random.default_rng(0)
    mat = rng.standard_normal((40, 30))
    value, history = hc.power_norm(mat, tol=1e-10, steps=5000)
    assert value == pytest.approx(np.linalg.norm(mat, 2), rel=1e-5)
    assert all(b >= a * (1 - 1e-12) for a, b in zip(history, history[1:]))
    assert hc.power_norm(np.zeros((3, 3)))[0] == 0.0


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_power_norm_rayleigh_monotone(seed):
    mat = np.random.default_rng(seed).standard_normal((12, 12))
    value, history = hc.power_norm(mat, seed=seed, steps=20000)
    assert all(b >= a * (1 - 1e-12) for a, b in zip(history, history[1:]))
    assert value <= np.linalg.norm(mat, 2) * (1 + 1e-12)


@pytest.mark.parametrize("r", [0, 1, 2])
def test_maxreg_matrix_constant_input(r):
    """Constant input on a stiff mode: ``P_r 1 -> int_0^inf lam^{r+1} tau^r e^{-lam tau} = r!``."""
    edges, _ = hc.time_cells(1.0, 64)
    mat = hc.maxreg_matrix("P", r, 2500.0, edges)
    widths = np.diff(edges)
    assert (mat @ np.ones_like(widths))[-1] == pytest.approx(math.factorial(r), rel=1e-6)
    with pytest.raises(hc.VerificationError):
        hc.maxreg_matrix("R", r, 1.0, edges)


def test_maxreg_single_mode_bounds():
    rep = hc.maxreg_norm(0, 1.0, 64, lams=[400.0])
    assert 0.8 <= rep.lhs <= 1.05
    assert np.isfinite(rep.details["Q"])
    with pytest.raises(hc.VerificationError):
        hc.maxreg_norm(5, 1.0, 16, lams=[1.0])
    with pytest.raises(hc.VerificationError):
        hc.maxreg_norm(0, 1.0, 16)


def test_maxreg_zero_input_zero_output():
    edges, _ = hc.time_cells(1.0, 16)
    assert np.all(hc.maxreg_matrix("Q", 1, 10.0, edges) @ np.zeros(16) == 0)


def test_kahane_hand_cases():
    assert hc.kahane_sum((2,), 1.0) == 2.0
    assert hc.kahane_sum((3,), 1.0) == 12.0
    rep = hc.kahane_check(1.0, 1, 3)
    assert rep.details["per_order"] == [0.0, 1.0, pytest.approx(4 / 3, abs=1e-15)]
    assert rep.details["per_order"][2] == 4 / 3


def test_kahane_deterministic_and_bounded():
    a = hc.kahane_check(1.0, 2, 12)
    b = hc.kahane_check(1.0, 2, 12)
    assert a.ratio == b.ratio and np.isfinite(a.ratio)
    assert max(a.details["per_order"]) == a.ratio
    with pytest.raises(hc.VerificationError):
        hc.kahane_check(0.5, 1, 4)
    with pytest.raises(hc.VerificationError):
        hc.kahane_check(1.0, 1, 15)


def test_verify_oseen_ratios_finite():
    grid = Grid(2, 64, 8.0)
    k0 = hc.verify_oseen(0, 0.25, grid, oversample=2)
    k1 = hc.verify_oseen(1, 0.25, grid, oversample=2)
    assert np.isfinite(k0.sup_ratio_classic) and k0.sup_ratio_ms is None
    assert np.isfinite(k1.sup_ratio_classic) and np.isfinite(k1.sup_ratio_ms)
    assert set(k1.to_row()) == {"k", "t", "N", "L", "sup_ratio_classic", "sup_ratio_ms"}


def test_heat_gradient_single_mode(grid):
    lam = 4.0
    mode = single_mode(grid, (0, 2), 0)
    assert hc.heat_gradient_ratio(mode, 1 / (2 * lam)) == pytest.approx(math.exp(-0.5) / math.sqrt(2), rel=1e-12)
    assert hc.heat_gradient_ratio(SpectralField.zeros(grid), 0.1) == 0.0
    rep = hc.heat_gradient_bound(5, grid)
    assert rep.passed and rep.ensemble_size == 5


def test_besov_embedding(grid):
    rep = hc.besov_embedding_check(4, grid, fields=[SpectralField.zeros(grid), single_mode(grid, (0, 2), 0)])
    assert rep.ensemble_size == 1 and np.isfinite(rep.ratio)
    with pytest.raises(hc.VerificationError):
        hc.besov_embedding_check(1, grid, fields=[SpectralField.zeros(grid)])


def test_growth_fit_recovers_parameters():
    ks = np.arange(2, 8)
    values = np.exp(0.3 + ks * math.log(1.7) + 0.8 * ks * np.log(ks))
    fit = hc.growth_fit(ks, values)
    assert fit["beta"] == pytest.approx(0.8, abs=1e-10)
    assert fit["C"] == pytest.approx(1.7, rel=1e-10)


def test_linear_estimate_small(grid):
    rep = hc.linear_estimate_check(3, 3, grid, TimeMesh(1.0, 16))
    assert rep.passed and len(rep.details["C_k"]) == 4 and "fit" not in rep.details
    assert all(c > 0 for c in rep.details["C_k"])


def test_bilinear_fits_recover_synthetic_constants():
    rng = np.random.default_rng(3)
    samples = []
    for _ in range(20):
        u = list(rng.uniform(0.1, 2.0, 4))
        v = list(rng.uniform(0.1, 2.0, 4))
        b = [0.7 * u[0] * v[0]]
        for k in range(1, 4):
            b.append(2.0 * u[0] * v[0] + 0.5 * (u[0] * v[k] + v[0] * u[k]) + 0.1 * sum(u[:k]) * sum(v[:k]))
        samples.append(hc.BilinearSample(u, v, b))
    fits = hc.bilinear_fits(samples, 3)
    assert fits["C_x0"] == pytest.approx(0.7)
    for k in range(1, 4):
        assert fits["per_k"][k]["C1"] == pytest.approx(0.5, rel=1e-6)
    assert fits["pooled_C1"] == pytest.approx(0.5, rel=1e-6)
    assert fits["C1_trend_ok"]


def test_bilinear_zero_pair_and_degenerate(mesh):
    from mildns.norms import CarlesonBoxSet, Trajectory

    grid = Grid(2, 16)
    z = Trajectory.zeros(grid, mesh)
    sample = hc.bilinear_sample(z, z, 1, CarlesonBoxSet.geometric(1.0))
    assert sample.xk_b == [0.0, 0.0]


def test_bilinear_sweep_small():
    rep = hc.bilinear_sweep(4, 2, Grid(2, 16), TimeMesh(1.0, 16))
    assert np.isfinite(rep.ratio) and set(rep.details["per_k"]) == {1, 2}
