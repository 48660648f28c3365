"""Fourier-multiplier operators on spectral fields."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .spectral_core import (
    K_MAX,
    Grid,
    PhysicalField,
    SpectralError,
    SpectralField,
    _leray_coeffs,
    derivative_symbol,
    to_physical,
)


def heat_symbol(grid: Grid, t: float) -> np.ndarray:
    if t < 0:
        raise SpectralError(f"heat semigroup needs t >= 0, got {t}")
    return np.exp(-t * grid.k2)


def heat(s: SpectralField, t: float) -> SpectralField:
    """``e^{t Delta} s``."""
    return s.with_coeffs(s.coeffs * heat_symbol(s.grid, t))


def leray(s: SpectralField) -> SpectralField:
    """Projection ``I - xi xi^T / |xi|^2``; identity on the mean mode."""
    if s.n_components != s.grid.dim:
        raise SpectralError("Leray projection needs a d-component field")
    return s.with_coeffs(_leray_coeffs(s.grid, s.coeffs), divergence_free=True)


def fractional_symbol(grid: Grid, sigma: float) -> np.ndarray:
    if sigma < -1:
        raise SpectralError(f"fractional power sigma={sigma} below -1")
    k2 = grid.k2
    out = np.zeros(grid.shape)
    nz = k2 > 0
    out[nz] = k2[nz] ** sigma
    return out


def fractional_laplacian(s: SpectralField, sigma: float) -> SpectralField:
    """``(-Delta)^sigma``, zero on the mean mode."""
    return s.with_coeffs(s.coeffs * fractional_symbol(s.grid, sigma))


def lp_cutoff(r):
    """Smooth cutoff: 1 on [0, 1], cos^2 ramp on (1, 2), 0 beyond."""
    r = np.asarray(r, dtype=float)
    ramp = np.cos(0.5 * np.pi * (r - 1.0)) ** 2
    return np.where(r <= 1.0, 1.0, np.where(r >= 2.0, 0.0, ramp))


@dataclass(frozen=True)
class LPBump:
    """Littlewood-Paley blocks ``psi(r) = phi(r) - phi(2r)`` for ``j_min <= j <= j_max``."""

    j_min: int
    j_max: int

    @classmethod
    def for_grid(cls, grid: Grid) -> "LPBump":
        low = 1.0 / grid.box_scale
        high = math.sqrt(grid.dim) * (grid.n // 2) / grid.box_scale
        return cls(int(math.floor(math.log2(low))), int(math.ceil(math.log2(high))))

    @staticmethod
    def phi(r):
        return lp_cutoff(r)

    @staticmethod
    def psi(r):
        r = np.asarray(r, dtype=float)
        return lp_cutoff(r) - lp_cutoff(2.0 * r)

    def blocks(self) -> range:
        return range(self.j_min, self.j_max + 1)


def lp_symbol(grid: Grid, j: int, bump: LPBump) -> np.ndarray:
    if not bump.j_min <= j <= bump.j_max:
        raise SpectralError(f"block {j} outside [{bump.j_min}, {bump.j_max}]")
    return bump.psi(np.sqrt(grid.k2) / 2.0**j)


def lp_block(s: SpectralField, j: int, bump: LPBump) -> SpectralField:
    return s.with_coeffs(s.coeffs * lp_symbol(s.grid, j, bump))


def lk_antiderivative(t, lam, k: int):
    """Closed-form antiderivative in ``t`` of ``t^k lam^{k+1} e^{-2 t lam}``.

    ``A_k = -e^{-2 t lam} sum_m k!/m! (t lam)^m / 2^{k+1-m}``, with ``A_k = 0``
    on the zero mode.
    """
    if not 0 <= k <= K_MAX:
        raise SpectralError(f"k={k} outside [0, {K_MAX}]")
    t = np.asarray(t, dtype=float)
    lam = np.asarray(lam, dtype=float)
    tl = t * lam
    total = np.zeros(np.broadcast(t, lam).shape)
    for m in range(k + 1):
        total = total + math.factorial(k) / math.factorial(m) * tl**m / 2.0 ** (k + 1 - m)
    out = -np.exp(-2.0 * tl) * total
    return np.where(lam == 0, 0.0, out)


def lk_coefficients(k: int) -> list[float]:
    """``b_m(k)`` in ``L_k(t) = sum_m b_m(k) t^m (-Delta)^m e^{2 t Delta}``."""
    return [-math.factorial(k) / math.factorial(m) / 2.0 ** (k + 1 - m) for m in range(k + 1)]


def apply_Lk(s: SpectralField, t: float, k: int) -> SpectralField:
    if t <= 0:
        raise SpectralError(f"L_k needs t > 0, got {t}")
    return s.with_coeffs(s.coeffs * lk_antiderivative(t, s.grid.k2, k))


def oseen_symbol(grid: Grid, alpha: tuple[int, ...], t: float) -> np.ndarray:
    """Matrix symbol ``(i xi)^alpha (I - xi xi^T/|xi|^2) e^{-t |xi|^2}``, shape ``(d, d, ...)``."""
    if t <= 0:
        raise SpectralError(f"Oseen kernel needs t > 0, got {t}")
    k2 = grid.k2.copy()
    k2[(0,) * grid.dim] = 1.0
    ks = grid.wavenumbers
    base = derivative_symbol(grid, alpha) * np.exp(-t * grid.k2)
    d = grid.dim
    sym = np.empty((d, d) + grid.shape, dtype=complex)
    for a in range(d):
        for b in range(d):
            proj = (1.0 if a == b else 0.0) - ks[a] * ks[b] / k2
            sym[a, b] = base * proj
    return sym


def oseen_kernel(alpha: tuple[int, ...], t: float, grid: Grid, oversample: int = 1) -> PhysicalField:
    """Pointwise Frobenius magnitude of the kernel of ``d^alpha P e^{t Delta}``.

    The kernel is the inverse transform of the symbol divided by the box
    volume; ``oversample > 1`` evaluates it by zero-padded trigonometric
    interpolation on a grid ``oversample`` times finer.
    """
    if 16.0 * math.sqrt(t) > grid.box_scale:
        warnings.warn(f"t={t} is large for box scale L={grid.box_scale}; periodization may "
                      "pollute the kernel decay (want L >= 16 sqrt(t))", stacklevel=2)
    fine = Grid(grid.dim, grid.n * oversample, grid.box_scale) if oversample > 1 else grid
    sym = oseen_symbol(grid, alpha, t) / grid.volume
    mag2 = np.zeros(fine.shape)
    # one matrix entry at a time keeps the fine-grid footprint small
    for a in range(grid.dim):
        for b in range(grid.dim):
            entry = sym[a, b] if oversample == 1 else _zero_pad(sym[a, b], grid, fine)
            mag2 += to_physical(entry, grid.dim) ** 2
    return PhysicalField(fine, np.sqrt(mag2))


def _zero_pad(coeffs: np.ndarray, grid: Grid, fine: Grid) -> np.ndarray:
    lead = coeffs.shape[: coeffs.ndim - grid.dim]
    out = np.zeros(lead + fine.shape, dtype=complex)
    k = np.fft.fftfreq(grid.n, 1.0 / grid.n).astype(int)
    keep = np.abs(k) < grid.n // 2
    src = np.arange(grid.n)[keep]
    dst = k[keep] % fine.n
    sel = (Ellipsis,) + np.ix_(*([src] * grid.dim))
    put = (Ellipsis,) + np.ix_(*([dst] * grid.dim))
    out[put] = coeffs[sel]
    return out


@dataclass
class KernelReport:
    k: int
    t: float
    n: int
    box_scale: float
    sup_ratio_classic: float
    sup_ratio_ms: float | None

    def to_row(self) -> dict:
        return {"k": self.k, "t": self.t, "N": self.n, "L": self.box_scale,
                "sup_ratio_classic": self.sup_ratio_classic, "sup_ratio_ms": self.sup_ratio_ms}
