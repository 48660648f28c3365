"""Discrete critical-space norms on periodic grids.

Carleson-type quantities are evaluated for every centre at once: the time
integral of a squared density is accumulated in Fourier space, convolved with
a smoothed ball indicator and sampled on a sub-lattice of centres.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterator

import numpy as np

from .operators import LPBump, lp_symbol
from .spectral_core import (
    Grid,
    SpectralError,
    SpectralField,
    derivative_symbol,
    multi_indices,
    to_physical,
)

CHUNK = 16
BALL_CONSTANT = {2: math.pi, 3: 4.0 * math.pi / 3.0}


class NormError(SpectralError):
    """Raised for ill-posed norm evaluations (box outside the torus, non-mean-zero data)."""


@dataclass(frozen=True)
class TimeMesh:
    """Graded nodes ``t_m = T (m/M)**grading`` for ``m = 0..M``."""

    end: float
    steps: int
    grading: float = 2.0

    def __post_init__(self):
        if not self.end > 0:
            raise NormError("mesh end time must be positive")
        if self.steps < 1:
            raise NormError("mesh needs at least one step")
        if not self.grading >= 1.0:
            raise NormError("grading exponent must be >= 1")

    @cached_property
    def nodes(self) -> np.ndarray:
        m = np.arange(self.steps + 1, dtype=float)
        t = self.end * (m / self.steps) ** self.grading
        t[-1] = self.end
        t.flags.writeable = False
        return t

    def __len__(self) -> int:
        return self.steps + 1

    def refined(self, factor: int = 2) -> "TimeMesh":
        """Same pattern with ``factor`` times as many steps; old nodes are kept."""
        return TimeMesh(self.end, self.steps * factor, self.grading)

    def rescaled(self, factor: float) -> "TimeMesh":
        return TimeMesh(self.end * factor, self.steps, self.grading)

    def index_of(self, t: float, rtol: float = 1e-12) -> int:
        hit = np.nonzero(np.abs(self.nodes - t) <= rtol * max(abs(t), self.end * 1e-300))[0]
        if hit.size == 0:
            raise NormError(f"t={t} is not a mesh node")
        return int(hit[0])

    def to_dict(self) -> dict:
        return {"T": self.end, "M": self.steps, "gamma": self.grading}


@dataclass(frozen=True)
class CarlesonBoxSet:
    """Parabolic boxes ``B(x0, sqrt R) x (0, R)``.

    Centres are every ``N / centers_per_axis``-th grid point along each axis,
    so the physical centres do not move when the grid is refined.
    """

    scales: tuple[float, ...]
    centers_per_axis: int = 16

    def __post_init__(self):
        sc = tuple(sorted(float(r) for r in self.scales))
        if not sc or sc[0] <= 0:
            raise NormError("box scales must be positive")
        object.__setattr__(self, "scales", sc)

    @classmethod
    def geometric(cls, r_max: float, n_scales: int = 8, centers_per_axis: int = 16) -> "CarlesonBoxSet":
        return cls(tuple(r_max * 2.0 ** (-i) for i in range(n_scales)), centers_per_axis)

    @classmethod
    def for_grid(cls, grid: Grid, r_max: float | None = None, n_scales: int = 8) -> "CarlesonBoxSet":
        top = max_scale(grid) if r_max is None else min(r_max, max_scale(grid))
        return cls.geometric(top, n_scales)

    @property
    def r_max(self) -> float:
        return self.scales[-1]

    def stride(self, grid: Grid) -> int:
        return max(1, grid.n // self.centers_per_axis)

    def validate(self, grid: Grid, mesh_end: float | None = None):
        if self.r_max > max_scale(grid) * (1 + 1e-12):
            raise NormError(f"box scale {self.r_max} exceeds (pi L)^2 = {max_scale(grid)}")
        if mesh_end is not None and self.r_max > mesh_end * (1 + 1e-12):
            raise NormError(f"box scale {self.r_max} exceeds the time horizon {mesh_end}")

    def with_scales(self, scales) -> "CarlesonBoxSet":
        return CarlesonBoxSet(tuple(scales), self.centers_per_axis)

    def to_dict(self) -> dict:
        return {"scales": list(self.scales), "centers_per_axis": self.centers_per_axis}


def max_scale(grid: Grid) -> float:
    """Largest admissible ``R``: the ball of radius ``sqrt R`` fits the torus."""
    return (math.pi * grid.box_scale) ** 2


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of a field at every node of a time mesh, shape ``(M+1, nc, N, ...)``."""

    grid: Grid
    mesh: TimeMesh
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.ndim != self.grid.dim + 2 or c.shape[0] != len(self.mesh) or c.shape[2:] != self.grid.shape:
            raise NormError(f"trajectory shape {c.shape} does not fit grid and mesh")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid, mesh: TimeMesh, n_components: int | None = None) -> "Trajectory":
        nc = grid.dim if n_components is None else n_components
        return cls(grid, mesh, np.zeros((len(mesh), nc) + grid.shape, dtype=complex))

    @property
    def times(self) -> np.ndarray:
        return self.mesh.nodes

    def snapshot(self, m: int) -> SpectralField:
        return SpectralField(self.grid, self.coeffs[m])

    @property
    def snapshots(self) -> list[SpectralField]:
        return [self.snapshot(m) for m in range(len(self.mesh))]

    def _check_partner(self, other: "Trajectory"):
        if other.grid != self.grid or other.mesh != self.mesh:
            raise NormError("trajectories live on different grids or meshes")

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self._check_partner(other)
        return Trajectory(self.grid, self.mesh, self.coeffs + other.coeffs)

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self._check_partner(other)
        return Trajectory(self.grid, self.mesh, self.coeffs - other.coeffs)

    def __mul__(self, a: float) -> "Trajectory":
        return Trajectory(self.grid, self.mesh, self.coeffs * a)

    __rmul__ = __mul__

    def reweighted(self, alpha: tuple[int, ...]) -> "Trajectory":
        """``t**(|alpha|/2) d^alpha u``."""
        w = self.times ** (sum(alpha) / 2.0)
        sym = derivative_symbol(self.grid, tuple(alpha))
        shape = (-1,) + (1,) * (self.grid.dim + 1)
        return Trajectory(self.grid, self.mesh, self.coeffs * sym * w.reshape(shape))

    def values(self, alpha: tuple[int, ...] | None = None, start: int = 0) -> Iterator[tuple[slice, np.ndarray]]:
        """Yield node ranges with physical samples of ``d^alpha u`` in chunks."""
        sym = None if alpha is None or not sum(alpha) else derivative_symbol(self.grid, tuple(alpha))
        total = len(self.mesh)
        for lo in range(start, total, CHUNK):
            sl = slice(lo, min(lo + CHUNK, total))
            c = self.coeffs[sl] if sym is None else self.coeffs[sl] * sym
            yield sl, to_physical(c, self.grid.dim)


def linf_norm(s: SpectralField) -> float:
    """Max over grid samples of the pointwise Euclidean magnitude."""
    return float(np.max(np.sqrt(np.sum(s.values() ** 2, axis=0))))


def _magnitude_max(vals: np.ndarray, dim: int) -> np.ndarray:
    """Per-node max of ``|v(x)|`` for a chunk of shape ``(m, nc, N, ...)``."""
    mag2 = np.sum(vals**2, axis=1)
    return np.sqrt(np.max(mag2.reshape(mag2.shape[0], -1), axis=1))


def derivative_sup_profile(traj: Trajectory, k: int) -> np.ndarray:
    """``max_{|alpha|=k} ||d^alpha u(t_m)||_inf`` for every node."""
    out = np.zeros(len(traj.mesh))
    for alpha in multi_indices(traj.grid.dim, k):
        for sl, vals in traj.values(alpha):
            out[sl] = np.maximum(out[sl], _magnitude_max(vals, traj.grid.dim))
    return out


def nk_inf(traj: Trajectory, k: int) -> float:
    sup = derivative_sup_profile(traj, k)
    t = traj.times
    return float(np.max(t[1:] ** ((k + 1) / 2.0) * sup[1:]))


def trapezoid_weights(nodes: np.ndarray, upper: float) -> np.ndarray:
    """Weights ``w`` with ``sum w_m g(t_m) ~ int_0^upper g`` (trapezoid, linear in the last cell)."""
    nodes = np.asarray(nodes, dtype=float)
    if upper > nodes[-1] * (1 + 1e-12):
        raise NormError(f"integration limit {upper} beyond mesh end {nodes[-1]}")
    upper = min(upper, nodes[-1])
    w = np.zeros(nodes.size)
    j = int(np.searchsorted(nodes, upper, side="right")) - 1
    widths = np.diff(nodes[: j + 1])
    w[:j] += widths / 2.0
    w[1 : j + 1] += widths / 2.0
    extra = upper - nodes[j]
    if extra > 0 and j + 1 < nodes.size:
        theta = extra / (nodes[j + 1] - nodes[j])
        w[j] += extra / 2.0 * (2.0 - theta)
        w[j + 1] += extra / 2.0 * theta
    return w


def ball_weights(grid: Grid, radius: float) -> np.ndarray:
    """Cell weights of the periodic ball ``|y| < radius``, linearly smoothed over one cell."""
    h = grid.spacing
    return np.clip((radius - grid.radius) / h + 0.5, 0.0, 1.0)


@lru_cache(maxsize=64)
def _ball_hat(grid: Grid, radius: float) -> np.ndarray:
    out = np.fft.fftn(ball_weights(grid, radius))
    out.flags.writeable = False
    return out


def box_integrals(densities: Iterator[tuple[slice, np.ndarray]], nodes: np.ndarray,
                  grid: Grid, boxes: CarlesonBoxSet) -> np.ndarray:
    """``int_0^R int_{B(x0, sqrt R)} g`` for each scale ``R`` and each centre.

    ``densities`` yields node ranges with scalar samples of shape ``(m, N, ...)``.
    Returns an array ``(n_scales, n_centres)``.
    """
    weights = np.stack([trapezoid_weights(nodes, r) for r in boxes.scales])
    axes = tuple(range(1, grid.dim + 1))
    acc = np.zeros((len(boxes.scales),) + grid.shape, dtype=complex)
    for sl, g in densities:
        g_hat = np.fft.fftn(g, axes=axes)
        acc += np.tensordot(weights[:, sl], g_hat, axes=1)
    step = boxes.stride(grid)
    pick = (slice(None, None, step),) * grid.dim
    out = []
    for i, r in enumerate(boxes.scales):
        conv = np.fft.ifftn(acc[i] * _ball_hat(grid, math.sqrt(r))).real * grid.cell_volume
        out.append(conv[pick].ravel())
    return np.array(out)


def box_averages(densities, nodes, grid: Grid, boxes: CarlesonBoxSet) -> np.ndarray:
    """Box integrals divided by the continuum ball volume ``c_d R**(d/2)``."""
    ints = box_integrals(densities, nodes, grid, boxes)
    vol = np.array([BALL_CONSTANT[grid.dim] * r ** (grid.dim / 2.0) for r in boxes.scales])
    return ints / vol[:, None]


def _squared(traj: Trajectory, alpha, k: int):
    weight = traj.times**k
    for sl, vals in traj.values(alpha):
        yield sl, weight[sl].reshape((-1,) + (1,) * traj.grid.dim) * np.sum(vals**2, axis=1)


def nk_c(traj: Trajectory, k: int, boxes: CarlesonBoxSet) -> float:
    boxes.validate(traj.grid, traj.mesh.end)
    best = 0.0
    for alpha in multi_indices(traj.grid.dim, k):
        avg = box_averages(_squared(traj, alpha, k), traj.times, traj.grid, boxes)
        best = max(best, float(np.max(avg)))
    return math.sqrt(max(best, 0.0))


def xk_norm(traj: Trajectory, k: int, boxes: CarlesonBoxSet) -> float:
    return nk_inf(traj, k) + nk_c(traj, k, boxes)


def xtilde_norm(traj: Trajectory, k: int, boxes: CarlesonBoxSet) -> float:
    return sum(xk_norm(traj, level, boxes) for level in range(k + 1))


def default_quadrature(r_max: float) -> TimeMesh:
    """Quadrature in ``t`` for heat extensions up to ``r_max``."""
    return TimeMesh(r_max, 128, 3.0)


def heat_extension(s: SpectralField, mesh: TimeMesh) -> Trajectory:
    times = mesh.nodes.reshape((-1,) + (1,) * (s.grid.dim + 1))
    coeffs = s.coeffs[None] * np.exp(-times * s.grid.k2)
    return Trajectory(s.grid, mesh, coeffs)


def bmo_minus_one(s: SpectralField, boxes: CarlesonBoxSet, quad: TimeMesh | None = None) -> float:
    if not s.is_mean_zero():
        raise NormError("BMO^-1 on the torus needs a mean-zero field")
    quad = default_quadrature(boxes.r_max) if quad is None else quad
    boxes.validate(s.grid, quad.end)
    ext = heat_extension(s, quad)
    avg = box_averages(_squared(ext, None, 0), quad.nodes, s.grid, boxes)
    return math.sqrt(max(float(np.max(avg)), 0.0))


def besov_norm(s: SpectralField, bump: LPBump | None = None) -> float:
    """``max_j 2**-j ||P_j s||_inf``."""
    bump = LPBump.for_grid(s.grid) if bump is None else bump
    best = 0.0
    for j in bump.blocks():
        block = s.coeffs * lp_symbol(s.grid, j, bump)
        vals = to_physical(block, s.grid.dim)
        best = max(best, 2.0**-j * float(np.max(np.sqrt(np.sum(vals**2, axis=0)))))
    return best


@dataclass
class NormReport:
    n_inf: list[float]
    n_c: list[float]
    bmo_minus_one: float | None
    besov: float | None
    metadata: dict = field(default_factory=dict)

    @property
    def x(self) -> list[float]:
        return [a + b for a, b in zip(self.n_inf, self.n_c)]

    @property
    def k_max(self) -> int:
        return len(self.n_inf) - 1

    def to_json(self) -> dict:
        return {"k": list(range(self.k_max + 1)), "n_inf": self.n_inf, "n_c": self.n_c, "x": self.x,
                "bmo_minus_one": self.bmo_minus_one, "besov": self.besov, "metadata": self.metadata}

    def rows(self) -> list[dict]:
        out = []
        for k, (a, b, c) in enumerate(zip(self.n_inf, self.n_c, self.x)):
            out += [{"k": k, "kind": "n_inf", "value": a}, {"k": k, "kind": "n_c", "value": b},
                    {"k": k, "kind": "x", "value": c}]
        for name in ("bmo_minus_one", "besov"):
            value = getattr(self, name)
            if value is not None:
                out.append({"k": "", "kind": name, "value": value})
        return out

    def to_csv(self, extra: dict | None = None) -> str:
        buf = io.StringIO()
        rows = self.rows()
        cols = ["k", "kind", "value"] + sorted(extra or {})
        writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({**row, **(extra or {})})
        return buf.getvalue()

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True, indent=2)


def norm_report(traj: Trajectory, k_max: int, boxes: CarlesonBoxSet,
                bump: LPBump | None = None) -> NormReport:
    """Norms of a trajectory for ``k = 0..k_max``, plus BMO^-1 and Besov norms of its datum."""
    datum = traj.snapshot(0)
    bmo = besov = None
    if datum.is_mean_zero():
        bmo_boxes = boxes.with_scales(s for s in boxes.scales if s <= max_scale(traj.grid))
        bmo = bmo_minus_one(datum, bmo_boxes)
        besov = besov_norm(datum, bump)
    meta = {"grid": {"d": traj.grid.dim, "N": traj.grid.n, "L": traj.grid.box_scale},
            "mesh": traj.mesh.to_dict(), "boxes": boxes.to_dict()}
    return NormReport([nk_inf(traj, k) for k in range(k_max + 1)],
                      [nk_c(traj, k, boxes) for k in range(k_max + 1)], bmo, besov, meta)
