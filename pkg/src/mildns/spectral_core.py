"""Periodic grids, spectral vector fields and transforms.

Coefficients are Fourier-series coefficients: the forward transform divides
by ``N**d`` so that a multiplier ``m(xi / L)`` acts on them verbatim.  Vector
fields are stored with the component axis first, shape ``(d, N, ..., N)``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

K_MAX = 8
HERMITIAN_TOL = 1e-9
DIVERGENCE_TOL = 1e-12


class SpectralError(ValueError):
    """Raised when a field violates a structural precondition."""


@dataclass(frozen=True)
class Grid:
    """Uniform ``N**d`` sampling of the torus ``[0, 2 pi L)**d``."""

    dim: int
    n: int
    box_scale: float = 1.0

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise SpectralError(f"dimension must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise SpectralError(f"points per axis must be even and >= 8, got {self.n}")
        if not self.box_scale > 0:
            raise SpectralError("box scale must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * np.pi * self.box_scale / self.n

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return (2.0 * np.pi * self.box_scale) ** self.dim

    @cached_property
    def index(self) -> tuple[np.ndarray, ...]:
        """Integer wavenumbers per axis, broadcastable to ``shape``."""
        k = np.fft.fftfreq(self.n, 1.0 / self.n)
        out = []
        for axis in range(self.dim):
            s = [1] * self.dim
            s[axis] = self.n
            out.append(k.reshape(s))
        return tuple(out)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Effective wavenumbers ``xi / L``."""
        return tuple(k / self.box_scale for k in self.index)

    @cached_property
    def k2(self) -> np.ndarray:
        """``|xi / L|**2`` on the full grid."""
        return sum(k**2 for k in self.wavenumbers) * np.ones(self.shape)

    @cached_property
    def nyquist_mask(self) -> np.ndarray:
        """True away from the Nyquist planes."""
        mask = np.ones(self.shape, dtype=bool)
        for k in self.index:
            mask &= np.abs(k) < self.n // 2
        return mask

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        mask = np.ones(self.shape, dtype=bool)
        for k in self.index:
            mask &= np.abs(k) <= self.n / 3.0
        return mask

    @cached_property
    def coords(self) -> tuple[np.ndarray, ...]:
        """Sample positions in ``[0, 2 pi L)``, broadcastable to ``shape``."""
        x = np.arange(self.n) * self.spacing
        out = []
        for axis in range(self.dim):
            s = [1] * self.dim
            s[axis] = self.n
            out.append(x.reshape(s))
        return tuple(out)

    @cached_property
    def signed_coords(self) -> tuple[np.ndarray, ...]:
        """Sample positions wrapped to ``(-pi L, pi L]``."""
        half = np.pi * self.box_scale
        out = []
        for x in self.coords:
            y = np.where(x > half, x - 2 * half, x)
            out.append(y)
        return tuple(out)

    @cached_property
    def radius(self) -> np.ndarray:
        """Periodic distance of each sample from the origin."""
        return np.sqrt(sum(y**2 for y in self.signed_coords)) * np.ones(self.shape)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.dim, self.n * factor, self.box_scale)

    def with_box_scale(self, box_scale: float) -> "Grid":
        return Grid(self.dim, self.n, box_scale)


def _axes(dim: int) -> tuple[int, ...]:
    return tuple(range(-dim, 0))


def to_spectral(values: np.ndarray, dim: int) -> np.ndarray:
    """Forward FFT over the trailing ``dim`` axes, normalized by ``N**d``."""
    axes = _axes(dim)
    size = math.prod(values.shape[a] for a in axes)
    return np.fft.fftn(values, axes=axes) / size


def to_physical(coeffs: np.ndarray, dim: int) -> np.ndarray:
    """Inverse of :func:`to_spectral`, real part only (no symmetry check)."""
    axes = _axes(dim)
    size = math.prod(coeffs.shape[a] for a in axes)
    return np.fft.ifftn(coeffs, axes=axes).real * size


def reflect(coeffs: np.ndarray, dim: int) -> np.ndarray:
    """Return ``c(-xi)`` for every ``xi`` on the trailing ``dim`` axes."""
    axes = _axes(dim)
    return np.roll(np.flip(coeffs, axis=axes), 1, axis=axes)


def symmetrized(coeffs: np.ndarray, dim: int) -> np.ndarray:
    """Hermitian part ``(c(xi) + conj c(-xi)) / 2``; removes round-off asymmetry."""
    return 0.5 * (coeffs + np.conj(reflect(coeffs, dim)))


def hermitian_defect(coeffs: np.ndarray, dim: int) -> float:
    scale = np.max(np.abs(coeffs), initial=0.0)
    if scale == 0.0:
        return 0.0
    return float(np.max(np.abs(reflect(coeffs, dim) - np.conj(coeffs)), initial=0.0) / scale)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Real vector field held as Fourier coefficients on a periodic grid."""

    grid: Grid
    coeffs: np.ndarray
    divergence_free: bool = False

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex)
        if c.shape == self.grid.shape:
            c = c[None]
        if c.shape[1:] != self.grid.shape:
            raise SpectralError(f"coefficient shape {c.shape} does not match grid {self.grid.shape}")
        c.flags.writeable = False
        object.__setattr__(self, "coeffs", c)

    @property
    def n_components(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, grid: Grid, n_components: int | None = None) -> "SpectralField":
        nc = grid.dim if n_components is None else n_components
        return cls(grid, np.zeros((nc,) + grid.shape, dtype=complex), divergence_free=True)

    def with_coeffs(self, coeffs: np.ndarray, divergence_free: bool | None = None) -> "SpectralField":
        flag = self.divergence_free if divergence_free is None else divergence_free
        return SpectralField(self.grid, coeffs, flag)

    def _check_partner(self, other: "SpectralField"):
        if other.grid != self.grid:
            raise SpectralError("fields live on different grids")

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_partner(other)
        return SpectralField(self.grid, self.coeffs + other.coeffs,
                             self.divergence_free and other.divergence_free)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_partner(other)
        return SpectralField(self.grid, self.coeffs - other.coeffs,
                             self.divergence_free and other.divergence_free)

    def __mul__(self, a: float) -> "SpectralField":
        return SpectralField(self.grid, self.coeffs * a, self.divergence_free)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self * -1.0

    def mean(self) -> np.ndarray:
        return self.coeffs[(slice(None),) + (0,) * self.grid.dim].copy()

    def divergence(self) -> np.ndarray:
        """Spectral divergence coefficients ``sum_c i xi_c/L coeff_c``."""
        if self.n_components != self.grid.dim:
            raise SpectralError("divergence needs a d-component field")
        return sum(1j * k * c for k, c in zip(self.grid.wavenumbers, self.coeffs))

    def divergence_defect(self) -> float:
        """``max |xi . coeff| / max |coeff|``; zero for solenoidal fields."""
        scale = np.max(np.abs(self.coeffs), initial=0.0)
        if scale == 0.0:
            return 0.0
        return float(np.max(np.abs(self.divergence())) / scale)

    def is_mean_zero(self, tol: float = 1e-12) -> bool:
        scale = max(np.max(np.abs(self.coeffs), initial=0.0), 1e-300)
        return bool(np.max(np.abs(self.mean())) <= tol * scale)

    def energy(self) -> float:
        """Mean of ``|u|**2`` over the box (Parseval)."""
        return float(np.sum(np.abs(self.coeffs) ** 2))

    def values(self) -> np.ndarray:
        return inverse_transform(self).values


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape == self.grid.shape:
            v = v[None]
        if v.shape[1:] != self.grid.shape:
            raise SpectralError(f"value shape {v.shape} does not match grid {self.grid.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def magnitude(self) -> np.ndarray:
        return np.sqrt(np.sum(self.values**2, axis=0))


def forward_transform(p: PhysicalField) -> SpectralField:
    return SpectralField(p.grid, to_spectral(p.values, p.grid.dim))


def inverse_transform(s: SpectralField) -> PhysicalField:
    defect = hermitian_defect(s.coeffs, s.grid.dim)
    if defect > HERMITIAN_TOL:
        raise SpectralError(f"coefficients are not Hermitian symmetric (defect {defect:.2e})")
    return PhysicalField(s.grid, to_physical(s.coeffs, s.grid.dim))


def multi_indices(dim: int, order: int) -> list[tuple[int, ...]]:
    """All ``alpha`` in ``N_0**dim`` with ``|alpha| == order``, lexicographic."""
    out = [a for a in itertools.product(range(order + 1), repeat=dim) if sum(a) == order]
    return sorted(out, reverse=True)


def derivative_symbol(grid: Grid, alpha: tuple[int, ...]) -> np.ndarray:
    """Multiplier ``(i xi / L)**alpha`` with Nyquist planes zeroed."""
    if len(alpha) != grid.dim or any(a < 0 for a in alpha):
        raise SpectralError(f"bad multi-index {alpha} for dimension {grid.dim}")
    if sum(alpha) > K_MAX:
        raise SpectralError(f"derivative order {sum(alpha)} exceeds K_MAX={K_MAX}")
    sym = np.ones(grid.shape, dtype=complex)
    for k, a in zip(grid.wavenumbers, alpha):
        if a:
            sym = sym * (1j * k) ** a
    if sum(alpha):
        sym = sym * grid.nyquist_mask
    return sym


def derivative(s: SpectralField, alpha: tuple[int, ...]) -> SpectralField:
    return s.with_coeffs(s.coeffs * derivative_symbol(s.grid, tuple(alpha)))


def dealias(s: SpectralField) -> SpectralField:
    return s.with_coeffs(s.coeffs * s.grid.dealias_mask)


def _leray_coeffs(grid: Grid, coeffs: np.ndarray) -> np.ndarray:
    # Nyquist planes are dropped: their wavenumber sign is ambiguous
    coeffs = coeffs * grid.nyquist_mask
    k2 = grid.k2.copy()
    k2[(0,) * grid.dim] = 1.0
    ks = grid.wavenumbers
    proj = sum(k * c for k, c in zip(ks, coeffs)) / k2
    return np.stack([c - k * proj for k, c in zip(ks, coeffs)])


def random_small_field(seed: int, slope: float, amplitude: float, grid: Grid,
                       cutoff: float | None = None) -> SpectralField:
    """Seeded random solenoidal field with power-law coefficient magnitudes.

    Phases are drawn on a box of integer wavenumbers that depends only on the
    cutoff, so the same seed and cutoff give the same field on any grid with
    ``N/3 >= cutoff``.  The default cutoff is ``N/3``.
    """
    kc = grid.n / 3.0 if cutoff is None else float(cutoff)
    if kc > grid.n / 3.0:
        raise SpectralError(f"cutoff {kc} exceeds the dealiasing limit {grid.n / 3.0}")
    if amplitude == 0:
        return SpectralField.zeros(grid)
    m = int(np.floor(kc))
    side = 2 * m + 1
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2.0 * np.pi, size=(grid.dim,) + (side,) * grid.dim)
    # theta(xi) - theta(-xi) is odd in xi, which makes the field real
    axes = tuple(range(1, grid.dim + 1))
    theta = theta - np.flip(theta, axis=axes)
    k = np.arange(-m, m + 1)
    kk = np.meshgrid(*([k] * grid.dim), indexing="ij")
    rho = np.sqrt(sum(q.astype(float) ** 2 for q in kk))
    mag = amplitude * (1.0 + rho) ** slope
    mag[rho > kc] = 0.0
    mag[(m,) * grid.dim] = 0.0
    local = mag * np.exp(1j * theta)
    coeffs = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    idx = np.ix_(*([np.arange(-m, m + 1) % grid.n] * grid.dim))
    for c in range(grid.dim):
        coeffs[c][idx] = local[c]
    coeffs = _leray_coeffs(grid, coeffs)
    return SpectralField(grid, coeffs, divergence_free=True)


def single_mode(grid: Grid, xi: tuple[int, ...], component: int = 0,
                amplitude: float = 1.0, kind: str = "sin") -> SpectralField:
    """``amplitude * sin(xi . x / L)`` (or cos) in one component."""
    coeffs = np.zeros((grid.dim,) + grid.shape, dtype=complex)
    plus = tuple(q % grid.n for q in xi)
    minus = tuple((-q) % grid.n for q in xi)
    if kind == "sin":
        coeffs[(component,) + plus] += -0.5j * amplitude
        coeffs[(component,) + minus] += 0.5j * amplitude
    elif kind == "cos":
        coeffs[(component,) + plus] += 0.5 * amplitude
        coeffs[(component,) + minus] += 0.5 * amplitude
    else:
        raise SpectralError(f"unknown mode kind {kind!r}")
    field = SpectralField(grid, coeffs)
    return field.with_coeffs(field.coeffs, divergence_free=field.divergence_defect() <= DIVERGENCE_TOL)


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralField:
    """2-d Taylor-Green vortex ``(sin x cos y, -cos x sin y)`` at ``L = 1`` scaling."""
    if grid.dim != 2:
        raise SpectralError("Taylor-Green datum is two-dimensional")
    x, y = (c / grid.box_scale for c in grid.coords)
    u = amplitude * np.stack([np.sin(x) * np.cos(y), -np.cos(x) * np.sin(y)])
    s = forward_transform(PhysicalField(grid, u))
    return s.with_coeffs(s.coeffs, divergence_free=True)
