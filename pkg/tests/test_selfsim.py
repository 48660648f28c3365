import numpy as np
import pytest

from mildns.mild_solver import SolverConfig, heat_trajectory
from mildns.norms import NormError, TimeMesh, Trajectory
from mildns.selfsim import (
    ProfileError,
    boundary_mass,
    extract_profile,
    make_profile,
    profile_diagnostics,
    profile_operator_terms,
    profile_residual,
    scaling_covariance,
    scaling_covariance_check,
    stream_profile,
)
from mildns.spectral_core import Grid, SpectralField, random_small_field, single_mode, taylor_green

from fd_oracle import fd_operator, fd_residual

@pytest.fixture(scope="module")
def vanishing():
    return make_profile(stream_profile(Grid(2, 384, 2.0), "vanishing"))


@pytest.fixture(scope="module")
def nonvanishing():
    return make_profile(stream_profile(Grid(2, 384, 2.0), "nonvanishing"))


def test_profiles_localized_and_solenoidal(vanishing, nonvanishing):
    for p in (vanishing, nonvanishing):
        assert p.boundary_mass < 1e-6
        assert p.field.divergence_defect() < 1e-12
    vals = nonvanishing.field.values()
    centre = (0, 0)
    assert vals[0][centre] == pytest.approx(1.0, abs=1e-10)
    assert np.max(np.abs(vanishing.field.values()[:, 0, 0])) < 1e-12


def test_residual_matches_finite_difference_oracle(vanishing, nonvanishing):
    for p in (vanishing, nonvanishing):
        terms = profile_operator_terms(p.field)
        oracle_terms = fd_operator(p.field)
        assert np.max(np.abs(terms - oracle_terms)) < 1e-6
        assert abs(profile_residual(p) - fd_residual(p.field)) < 1e-6


def test_zero_profile():
    p = make_profile(SpectralField.zeros(Grid(2, 32)))
    assert p.boundary_mass == 0.0
    assert profile_residual(p) == 0.0
    d = profile_diagnostics(p, 0)
    assert (d.sup_norm, d.weighted_h, d.weighted_h2) == (0.0, 0.0, 0.0)
    assert d.drift == 0.0 and not d.flagged


def test_spread_profile_rejected():
    p = make_profile(single_mode(Grid(2, 32), (0, 1), 0))
    assert p.boundary_mass > 0.01
    with pytest.raises(ProfileError):
        profile_residual(p)


def test_extract_profile_identity_and_homogeneity():
    grid = Grid(2, 32)
    mesh = TimeMesh(1.0, 8)
    traj = heat_trajectory(random_small_field(1, -1.0, 0.01, grid), mesh)
    p = extract_profile(traj, 1.0)
    np.testing.assert_array_equal(p.field.coeffs, traj.coeffs[-1])
    assert p.field.grid == grid
    doubled = extract_profile(traj * 3.0, 1.0)
    np.testing.assert_allclose(doubled.field.coeffs, 3.0 * p.field.coeffs)
    quarter = extract_profile(traj, 0.25)
    assert quarter.field.grid.box_scale == pytest.approx(2.0)
    np.testing.assert_allclose(quarter.field.coeffs, 0.5 * traj.coeffs[4])
    zero = extract_profile(Trajectory.zeros(grid, mesh), 1.0)
    assert boundary_mass(zero.field) == 0.0


def test_heat_flow_is_not_self_similar(vanishing):
    mesh = TimeMesh(0.5, 4)
    traj = heat_trajectory(vanishing.field, mesh)
    p = extract_profile(traj, 0.5)
    assert profile_residual(p) > 1e-3


@pytest.mark.parametrize("k", [0, 1, 2, 3])
def test_vanishing_profile_weighted_integral_stable(vanishing, k):
    d = profile_diagnostics(vanishing, k)
    assert d.drift < 0.05 and not d.flagged


def test_nonvanishing_profile_flagged(nonvanishing):
    d = profile_diagnostics(nonvanishing, 0)
    assert d.flagged and d.drift > 0.25
    assert d.sup_norm == pytest.approx(1.0, rel=1e-6)


def test_covariance_zero_and_exact_heat_flow():
    cfg = SolverConfig(TimeMesh(1.0, 16))
    assert scaling_covariance_check(SpectralField.zeros(Grid(2, 16)), 2, cfg) == 0.0
    assert scaling_covariance_check(taylor_green(Grid(2, 32)), 2, cfg) < 1e-10


def test_covariance_small_random_datum():
    grid = Grid(2, 32)
    res = scaling_covariance(random_small_field(42, -1.0, 0.01, grid), 2, SolverConfig(TimeMesh(1.0, 16)))
    assert res.error < 1e-6 and res.reference_scale > 0


def test_covariance_needs_integer_factor():
    cfg = SolverConfig(TimeMesh(1.0, 4))
    u0 = SpectralField.zeros(Grid(2, 16))
    for lam in (1, 1.5, True):
        with pytest.raises(NormError):
            scaling_covariance(u0, lam, cfg)
