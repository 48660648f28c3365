"""Scaling covariance of the solver and the self-similar profile equation."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .mild_solver import SolverConfig, picard_solve
from .norms import CarlesonBoxSet, NormError, Trajectory, max_scale
from .spectral_core import (
    K_MAX,
    Grid,
    PhysicalField,
    SpectralError,
    SpectralField,
    derivative_symbol,
    forward_transform,
    multi_indices,
    to_physical,
    to_spectral,
)
from .mild_solver import leray_batch

SHELL_FRACTION = 0.1
BOUNDARY_MASS_LIMIT = 0.01
WINDOW_EDGE = 0.95
WINDOW_RAMP = 0.1
DRIFT_FLAG = 0.25


class ProfileError(ValueError):
    """Raised when a profile is too spread out for the windowed profile operator."""


@dataclass(frozen=True, eq=False)
class Profile:
    field: SpectralField
    t_star: float
    boundary_mass: float


def _sup_coordinate(grid: Grid) -> np.ndarray:
    """``max_i |y_i| / (pi L)`` at every sample."""
    half = math.pi * grid.box_scale
    return np.maximum.reduce([np.abs(y) * np.ones(grid.shape) for y in grid.signed_coords]) / half


def boundary_mass(s: SpectralField, shell: float = SHELL_FRACTION) -> float:
    """Fraction of ``sum |psi|^2`` carried by samples with ``|y|_inf > (1 - shell) pi L``."""
    mag2 = np.sum(to_physical(s.coeffs, s.grid.dim) ** 2, axis=0)
    total = float(np.sum(mag2))
    if total == 0.0:
        return 0.0
    return float(np.sum(mag2[_sup_coordinate(s.grid) > 1.0 - shell]) / total)


def make_profile(s: SpectralField, t_star: float = 1.0) -> Profile:
    return Profile(s, t_star, boundary_mass(s))


def extract_profile(traj: Trajectory, t_star: float) -> Profile:
    """``psi(y) = sqrt(t*) u(sqrt(t*) y, t*)``: same coefficients, box scale ``L / sqrt(t*)``."""
    m = traj.mesh.index_of(t_star)
    root = math.sqrt(traj.mesh.nodes[m])
    grid = traj.grid.with_box_scale(traj.grid.box_scale / root)
    return make_profile(SpectralField(grid, traj.coeffs[m] * root, divergence_free=True), float(traj.mesh.nodes[m]))


def shell_window(grid: Grid) -> np.ndarray:
    """Product of 1-d cos^2 ramps: 1 inside ``0.85 pi L``, 0 beyond ``0.95 pi L`` on each axis."""
    half = math.pi * grid.box_scale
    out = np.ones(grid.shape)
    inner = WINDOW_EDGE - WINDOW_RAMP
    for y in grid.signed_coords:
        s = np.abs(y) / half
        ramp = np.cos(0.5 * np.pi * np.clip((s - inner) / WINDOW_RAMP, 0.0, 1.0)) ** 2
        out = out * ramp
    return out


def profile_operator_terms(psi: SpectralField) -> np.ndarray:
    """Physical samples of ``-Lap psi - psi/2 - (y.grad) psi / 2 + (psi.grad) psi`` before projection."""
    grid = psi.grid
    d = grid.dim
    vals = to_physical(psi.coeffs, d)
    lap = to_physical(-grid.k2 * psi.coeffs * grid.nyquist_mask, d)
    window = shell_window(grid)
    out = -lap - 0.5 * vals
    for j in range(d):
        alpha = tuple(int(a == j) for a in range(d))
        grad_j = to_physical(psi.coeffs * derivative_symbol(grid, alpha), d)
        out -= 0.5 * window * grid.signed_coords[j] * grad_j
        out += vals[j] * grad_j
    return out


def profile_residual(profile: Profile) -> float:
    """``||P[-Lap psi - psi/2 - (y.grad) psi/2 + (psi.grad) psi]||_inf``."""
    if profile.boundary_mass >= BOUNDARY_MASS_LIMIT:
        raise ProfileError(f"profile not localized (boundary mass {profile.boundary_mass:.3g}); enlarge box")
    psi = profile.field
    grid = psi.grid
    terms = to_spectral(profile_operator_terms(psi), grid.dim)
    projected = leray_batch(grid, terms[None])[0] * grid.nyquist_mask
    vals = to_physical(projected, grid.dim)
    return float(np.sqrt(np.max(np.sum(vals**2, axis=0))))


def weighted_integral(s: SpectralField, k: int, offset: float) -> float:
    """``max_alpha int (|y| + offset)^{-d} |d^alpha s|^2 dy`` over ``|alpha| = k``."""
    grid = s.grid
    weight = (grid.radius + offset) ** (-grid.dim)
    best = 0.0
    for alpha in multi_indices(grid.dim, k):
        vals = to_physical(s.coeffs * derivative_symbol(grid, alpha), grid.dim)
        best = max(best, float(np.sum(weight * np.sum(vals**2, axis=0)) * grid.cell_volume))
    return best


@dataclass
class ProfileDiagnostics:
    k: int
    sup_norm: float
    weighted_h: float
    weighted_h2: float

    @property
    def drift(self) -> float:
        if self.weighted_h == 0:
            return 0.0
        return abs(self.weighted_h2 - self.weighted_h) / self.weighted_h

    @property
    def flagged(self) -> bool:
        return self.drift > DRIFT_FLAG

    def to_row(self) -> dict:
        return {"k": self.k, "sup_norm": self.sup_norm, "weighted_h": self.weighted_h,
                "weighted_h2": self.weighted_h2}


def profile_diagnostics(profile: Profile, k: int) -> ProfileDiagnostics:
    """Sup of ``grad^k psi`` and the regularized singular-weight integral at ``h`` and ``h/2``."""
    if not 0 <= k <= K_MAX:
        raise SpectralError(f"k={k} outside [0, {K_MAX}]")
    psi = profile.field
    grid = psi.grid
    sup = 0.0
    for alpha in multi_indices(grid.dim, k):
        vals = to_physical(psi.coeffs * derivative_symbol(grid, alpha), grid.dim)
        sup = max(sup, float(np.sqrt(np.max(np.sum(vals**2, axis=0)))))
    h = grid.spacing
    return ProfileDiagnostics(k, sup, weighted_integral(psi, k, h), weighted_integral(psi, k, h / 2))


def stream_profile(grid: Grid, kind: str = "vanishing") -> SpectralField:
    """Localized divergence-free 2-d profile ``(d_2 s, -d_1 s)``.

    ``vanishing``: ``s = |y|^6 e^{-|y|^2}``, so the profile is ``O(|y|^5)`` at 0.
    ``nonvanishing``: ``s = y_2 e^{-|y|^2}``, so the profile equals ``(1, 0)`` at 0.
    """
    if grid.dim != 2:
        raise SpectralError("stream-function profiles are two-dimensional")
    y1, y2 = grid.signed_coords
    r2 = y1**2 + y2**2
    if kind == "vanishing":
        stream = r2**3 * np.exp(-r2)
    elif kind == "nonvanishing":
        stream = y2 * np.exp(-r2)
    else:
        raise SpectralError(f"unknown profile kind {kind!r}")
    s = forward_transform(PhysicalField(grid, stream)).coeffs[0]
    comps = np.stack([s * derivative_symbol(grid, (0, 1)), -s * derivative_symbol(grid, (1, 0))])
    return SpectralField(grid, comps, divergence_free=True)


@dataclass
class CovarianceResult:
    error: float
    reference_scale: float
    iterations: tuple[int, int]


def _scaled_config(cfg: SolverConfig, grid: Grid, lam: int) -> SolverConfig:
    boxes = cfg.boxes_for(grid)
    scaled = CarlesonBoxSet(tuple(r / lam**2 for r in boxes.scales), boxes.centers_per_axis)
    return SolverConfig(cfg.mesh.rescaled(1.0 / lam**2), scaled, cfg.tol, cfg.max_iter, cfg.dealias)


def scaling_covariance(u0: SpectralField, lam: int, cfg: SolverConfig) -> CovarianceResult:
    """Solve from ``u0`` on box ``L`` and from ``lam u0(lam x)`` on box ``L/lam``; compare.

    The rescaled datum has the same coefficients times ``lam`` on the same
    ``N``, so grid points correspond one to one and no interpolation is needed.
    """
    if isinstance(lam, bool) or not isinstance(lam, (int, np.integer)) or lam < 2:
        raise NormError(f"scaling factor must be an integer >= 2, got {lam!r}")
    base_cfg = SolverConfig(cfg.mesh, cfg.boxes_for(u0.grid), cfg.tol, cfg.max_iter, cfg.dealias)
    ref, log_a = picard_solve(u0, base_cfg)
    small = u0.grid.with_box_scale(u0.grid.box_scale / lam)
    datum = SpectralField(small, u0.coeffs * lam, divergence_free=True)
    scaled_cfg = _scaled_config(base_cfg, u0.grid, lam)
    if scaled_cfg.boxes.r_max > max_scale(small) * (1 + 1e-12):
        raise NormError("scaled box family does not fit the smaller torus")
    run, log_b = picard_solve(datum, scaled_cfg)
    diff = to_physical(run.coeffs - lam * ref.coeffs, u0.grid.dim)
    err = float(np.max(np.sqrt(np.sum(diff**2, axis=1))))
    scale = float(np.max(np.sqrt(np.sum(to_physical(lam * ref.coeffs, u0.grid.dim) ** 2, axis=1))))
    return CovarianceResult(err, scale, (log_a.iterations, log_b.iterations))


def scaling_covariance_check(u0: SpectralField, lam: int, cfg: SolverConfig) -> float:
    """``max |u_lam(x, t) - lam u(lam x, lam^2 t)|`` over shared nodes and grid points."""
    return scaling_covariance(u0, lam, cfg).error
