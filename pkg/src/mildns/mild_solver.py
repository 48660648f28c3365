"""Duhamel bilinear operator and Picard iteration for mild solutions."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .norms import CHUNK, CarlesonBoxSet, TimeMesh, Trajectory, max_scale, nk_c, nk_inf, xk_norm
from .spectral_core import (
    DIVERGENCE_TOL,
    Grid,
    SpectralError,
    SpectralField,
    symmetrized,
    to_physical,
    to_spectral,
)

BLOWUP_LIMIT = 1e6
TAYLOR_CUTOFF = 1e-4


class BlowUpError(RuntimeError):
    """Picard iterates exceeded the blow-up guard; the log is attached."""

    def __init__(self, message: str, log: "IterationLog"):
        super().__init__(message)
        self.log = log


@dataclass(frozen=True)
class SolverConfig:
    mesh: TimeMesh
    boxes: CarlesonBoxSet | None = None
    tol: float = 1e-10
    max_iter: int = 30
    dealias: bool = True
    track_k: int = -1

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")

    def boxes_for(self, grid: Grid) -> CarlesonBoxSet:
        """Explicit boxes, or a geometric family up to ``min(T, (pi L)^2)``."""
        if self.boxes is not None:
            return self.boxes
        return CarlesonBoxSet.for_grid(grid, min(self.mesh.end, max_scale(grid)))

    def to_dict(self) -> dict:
        return {"mesh": self.mesh.to_dict(),
                "boxes": None if self.boxes is None else self.boxes.to_dict(),
                "tol": self.tol, "max_iter": self.max_iter, "dealias": self.dealias}


@dataclass
class IterationLog:
    entries: list[dict] = field(default_factory=list)
    converged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.entries)

    @property
    def ratios(self) -> list[float | None]:
        return [e["ratio"] for e in self.entries]

    def to_json(self) -> dict:
        return {"converged": self.converged, "iterations": self.iterations, "entries": self.entries}


def leray_batch(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    """Leray projection of a stack ``(m, d, N, ...)``."""
    k2 = grid.k2.copy()
    k2[(0,) * grid.dim] = 1.0
    ks = grid.wavenumbers
    proj = sum(ks[a] * coeffs[:, a] for a in range(grid.dim)) / k2
    return np.stack([coeffs[:, a] - ks[a] * proj for a in range(grid.dim)], axis=1)


def flux_batch(grid: Grid, u: np.ndarray, v: np.ndarray, dealias: bool = True) -> np.ndarray:
    """``P div(u (x) v)`` for coefficient stacks of shape ``(m, d, N, ...)``."""
    d = grid.dim
    if dealias:
        u = u * grid.dealias_mask
        v = v * grid.dealias_mask
    uu = to_physical(u, d)
    vv = uu if v is u else to_physical(v, d)
    ks = grid.wavenumbers
    div = np.zeros(u.shape, dtype=complex)
    for a in range(d):
        for b in range(d):
            div[:, a] += 1j * ks[b] * to_spectral(uu[:, a] * vv[:, b], d)
    mask = grid.nyquist_mask & grid.dealias_mask if dealias else grid.nyquist_mask
    return symmetrized(leray_batch(grid, div * mask), d)


def nonlinear_flux(u: SpectralField, v: SpectralField, dealias: bool = True) -> SpectralField:
    """``P div(u (x) v)``; the quadratic product is formed in physical space."""
    if u.grid != v.grid:
        raise SpectralError("fields live on different grids")
    if u.n_components != u.grid.dim or v.n_components != v.grid.dim:
        raise SpectralError("flux needs d-component fields")
    out = flux_batch(u.grid, u.coeffs[None], v.coeffs[None], dealias)[0]
    return SpectralField(u.grid, out, divergence_free=True)


def phi_functions(z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``phi1 = (e^z - 1)/z`` and ``phi2 = (e^z - 1 - z)/z^2`` with series near 0."""
    z = np.asarray(z, dtype=float)
    small = np.abs(z) < TAYLOR_CUTOFF
    safe = np.where(small, 1.0, z)
    em1 = np.expm1(safe)
    phi1 = np.where(small, 1.0 + z / 2.0 + z * z / 6.0 + z**3 / 24.0, em1 / safe)
    phi2 = np.where(small, 0.5 + z / 6.0 + z * z / 24.0 + z**3 / 120.0, (em1 - safe) / safe**2)
    return phi1, phi2


def duhamel_integrate(grid: Grid, mesh: TimeMesh, density: np.ndarray) -> np.ndarray:
    """``int_0^t e^{(t-s) Delta} F(s) ds`` at every node for piecewise-linear ``F``.

    ``density`` holds the coefficients of ``F`` at the nodes, shape ``(M+1, ...)``.
    """
    lam = grid.k2
    t = mesh.nodes
    out = np.zeros_like(density)
    for m in range(mesh.steps):
        h = t[m + 1] - t[m]
        z = -h * lam
        phi1, phi2 = phi_functions(z)
        out[m + 1] = (np.exp(z) * out[m] + h * (phi1 - phi2) * density[m]
                      + h * phi2 * density[m + 1])
    return out


def _flux_trajectory(u: Trajectory, v: Trajectory, dealias: bool) -> np.ndarray:
    if u.grid != v.grid or u.mesh != v.mesh:
        raise SpectralError("trajectories do not share grid and mesh")
    out = np.empty(u.coeffs.shape, dtype=complex)
    same = u is v
    for lo in range(0, len(u.mesh), CHUNK):
        sl = slice(lo, lo + CHUNK)
        a = u.coeffs[sl]
        out[sl] = flux_batch(u.grid, a, a if same else v.coeffs[sl], dealias)
    return out


def duhamel_B(u: Trajectory, v: Trajectory, dealias: bool = True) -> Trajectory:
    """``B(u, v)(t) = int_0^t e^{(t-s) Delta} P div(u (x) v)(s) ds``."""
    density = _flux_trajectory(u, v, dealias)
    return Trajectory(u.grid, u.mesh, duhamel_integrate(u.grid, u.mesh, density))


def _check_datum(u0: SpectralField):
    if u0.n_components != u0.grid.dim:
        raise SpectralError("initial datum must have d components")
    if u0.divergence_defect() > DIVERGENCE_TOL * 10:
        raise SpectralError(f"initial datum is not divergence-free (defect {u0.divergence_defect():.2e})")
    if not u0.is_mean_zero():
        raise SpectralError("initial datum must be mean-zero")


def heat_trajectory(u0: SpectralField, mesh: TimeMesh) -> Trajectory:
    """Snapshots of ``e^{t Delta} u0`` at every node."""
    _check_datum(u0)
    times = mesh.nodes.reshape((-1,) + (1,) * (u0.grid.dim + 1))
    return Trajectory(u0.grid, mesh, u0.coeffs[None] * np.exp(-times * u0.grid.k2))


def x0_norm(traj: Trajectory, boxes: CarlesonBoxSet) -> float:
    return nk_inf(traj, 0) + nk_c(traj, 0, boxes)


def picard_solve(u0: SpectralField, cfg: SolverConfig) -> tuple[Trajectory, IterationLog]:
    """Iterate ``u^{j+1} = e^{t Delta} u0 - B(u^j, u^j)`` until the X^0 step is below ``tol``."""
    free = heat_trajectory(u0, cfg.mesh)
    boxes = cfg.boxes_for(u0.grid)
    log = IterationLog()
    current = free
    previous_diff = None
    for j in range(cfg.max_iter):
        size = x0_norm(current, boxes)
        if not np.isfinite(size) or size > BLOWUP_LIMIT:
            raise BlowUpError(f"iterate {j} has X^0 norm {size:.3e}", log)
        new = free - duhamel_B(current, current, cfg.dealias)
        diff = x0_norm(new - current, boxes)
        ratio = diff / previous_diff if previous_diff else None
        entry = {"iteration": j, "x0_norm": size, "diff_x0": diff, "ratio": ratio}
        if cfg.track_k >= 0:
            entry["xk"] = [xk_norm(current, k, boxes) for k in range(cfg.track_k + 1)]
        log.entries.append(entry)
        current = new
        previous_diff = diff
        if diff <= cfg.tol:
            log.converged = True
            break
    return current, log


def convergence_radius(make_datum, cfg: SolverConfig, low: float, high: float, steps: int = 8
                       ) -> tuple[float, list[dict]]:
    """Largest amplitude with a converged solve, by bisection between ``low`` and ``high``.

    ``make_datum(amplitude)`` builds the datum.  Returns the last converged
    amplitude (``0.0`` if none) and the probe history.
    """
    def converges(amp: float) -> bool:
        try:
            _, log = picard_solve(make_datum(amp), cfg)
        except BlowUpError:
            return False
        return log.converged

    history = []
    best = 0.0
    for _ in range(steps):
        mid = math.sqrt(low * high)
        ok = converges(mid)
        history.append({"amplitude": mid, "converged": ok})
        if ok:
            best, low = mid, mid
        else:
            high = mid
    return best, history
