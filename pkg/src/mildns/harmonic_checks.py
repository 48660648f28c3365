"""Numerical verifiers for the harmonic-analysis estimates behind the solver.

Every check returns a :class:`LemmaReport` whose ratio is an empirical
constant; nothing here asserts a sharp value.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import nnls
from scipy.special import gammainc, gammaincc

from .mild_solver import duhamel_B, heat_trajectory
from .norms import (
    BALL_CONSTANT,
    CarlesonBoxSet,
    TimeMesh,
    Trajectory,
    besov_norm,
    bmo_minus_one,
    box_averages,
    max_scale,
    trapezoid_weights,
    xk_norm,
)
from .operators import KernelReport, heat, lk_antiderivative, oseen_kernel
from .spectral_core import (
    Grid,
    SpectralField,
    derivative,
    multi_indices,
    random_small_field,
    to_physical,
    to_spectral,
)

POWER_TOL = 1e-6
QUOTIENT_STEP_TOL = 1e-6
POWER_STEPS = 500


class VerificationError(ValueError):
    """Raised when a verifier cannot produce a meaningful estimate."""


@dataclass
class LemmaReport:
    lemma: str
    params: dict
    lhs: float
    rhs: float
    ratio: float
    passed: bool
    ensemble_size: int = 1
    stability: float | None = None
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return asdict(self)

    def to_row(self) -> dict:
        row = {"lemma": self.lemma, "lhs": self.lhs, "rhs": self.rhs, "ratio": self.ratio,
               "passed": self.passed, "ensemble_size": self.ensemble_size, "stability": self.stability}
        row.update({f"param_{k}": v for k, v in sorted(self.params.items())})
        return row


def relative_change(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    return 0.0 if scale == 0 else abs(a - b) / scale


def _finite_ratio(lhs: float, rhs: float) -> float:
    return 0.0 if lhs == 0 and rhs == 0 else lhs / rhs


# --- Carleson-type lemma -------------------------------------------------


@dataclass(frozen=True, eq=False)
class SpaceTimeDensity:
    """Nonnegative scalar samples on ``grid`` at every node of ``mesh``, shape ``(M+1, N, ...)``."""

    grid: Grid
    mesh: TimeMesh
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (len(self.mesh),) + self.grid.shape:
            raise VerificationError(f"density shape {v.shape} does not fit grid and mesh")
        object.__setattr__(self, "values", v)


def random_density(seed: int, grid: Grid, mesh: TimeMesh, cutoff: float = 6.0) -> SpaceTimeDensity:
    """``|e^{s Delta} f|^2`` for a seeded random field ``f``; independent of ``N`` for fixed cutoff."""
    f = random_small_field(seed, -1.0, 1.0, grid, cutoff=min(cutoff, grid.n / 3.0))
    times = mesh.nodes.reshape((-1,) + (1,) * (grid.dim + 1))
    vals = to_physical(f.coeffs[None] * np.exp(-times * grid.k2), grid.dim)
    return SpaceTimeDensity(grid, mesh, np.sum(vals**2, axis=1))


def _carleson_parts(sample: SpaceTimeDensity, k: int):
    grid, nodes = sample.grid, sample.mesh.nodes
    dens = to_spectral(sample.values, grid.dim)
    h = np.diff(nodes).reshape((-1,) + (1,) * grid.dim)
    run = np.concatenate([np.zeros((1,) + grid.shape), np.cumsum(h * (dens[1:] + dens[:-1]) / 2, axis=0)])
    return grid, nodes, dens, run


def carleson_lhs(sample: SpaceTimeDensity, k: int) -> float:
    """``int_0^1 int |t^{k/2} (-Delta)^{(k+1)/2} e^{t Delta} int_0^t N|^2`` by direct quadrature."""
    grid, nodes, _, run = _carleson_parts(sample, k)
    lam = grid.k2
    t = nodes.reshape((-1,) + (1,) * grid.dim)
    beta = t ** (k / 2) * lam ** ((k + 1) / 2) * np.exp(-t * lam) * run
    energy = grid.volume * np.sum(np.abs(beta) ** 2, axis=tuple(range(1, grid.dim + 1)))
    return float(trapezoid_weights(nodes, nodes[-1]) @ energy)


def carleson_lhs_by_parts(sample: SpaceTimeDensity, k: int) -> float:
    """Same quantity through the closed-form antiderivative in ``t`` (integration by parts)."""
    grid, nodes, dens, run = _carleson_parts(sample, k)
    lam = grid.k2
    t = nodes.reshape((-1,) + (1,) * grid.dim)
    anti = lk_antiderivative(t, lam, k)
    axes = tuple(range(1, grid.dim + 1))
    flux = np.sum(anti * 2.0 * np.real(np.conj(run) * dens), axis=axes)
    end = np.sum(anti[-1] * np.abs(run[-1]) ** 2)
    return float(grid.volume * (end - trapezoid_weights(nodes, nodes[-1]) @ flux))


def carleson_A(sample: SpaceTimeDensity, boxes: CarlesonBoxSet | None = None) -> float:
    """``sup t^{-d/2} int_0^t int_{|x - x0| < sqrt t} N`` over centres and scales ``t``."""
    boxes = CarlesonBoxSet.geometric(sample.mesh.end) if boxes is None else boxes
    dens = iter([(slice(0, len(sample.mesh)), sample.values)])
    avg = box_averages(dens, sample.mesh.nodes, sample.grid, boxes)
    return BALL_CONSTANT[sample.grid.dim] * float(np.max(avg))


def carleson_lemma_check(sample: SpaceTimeDensity, k: int, boxes: CarlesonBoxSet | None = None) -> LemmaReport:
    if np.min(sample.values) < 0:
        raise VerificationError("density must be nonnegative")
    lhs = carleson_lhs(sample, k)
    mass = float(trapezoid_weights(sample.mesh.nodes, sample.mesh.end)
                 @ (np.sum(sample.values, axis=tuple(range(1, sample.grid.dim + 1))) * sample.grid.cell_volume))
    a_value = carleson_A(sample, boxes)
    rhs = a_value * mass
    return LemmaReport("carleson", {"k": k, "d": sample.grid.dim, "T": sample.mesh.end}, lhs, rhs,
                       _finite_ratio(lhs, rhs), bool(np.isfinite(_finite_ratio(lhs, rhs))),
                       details={"A": a_value, "mass": mass, "lhs_by_parts": carleson_lhs_by_parts(sample, k)})


def carleson_ensemble(ensemble_size: int, k: int, grid: Grid, mesh: TimeMesh, seed: int = 42) -> LemmaReport:
    ratios = [carleson_lemma_check(random_density(seed + i, grid, mesh), k).ratio for i in range(ensemble_size)]
    worst = max(ratios)
    return LemmaReport("carleson", {"k": k, "d": grid.dim, "N": grid.n, "M": mesh.steps}, worst, 1.0,
                       worst, bool(np.isfinite(worst)), ensemble_size, details={"ratios": ratios})


# --- maximal regularity --------------------------------------------------


def _gamma_mass(order: int, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """``P(order, hi) - P(order, lo)`` for the regularized lower incomplete gamma, cancellation-safe."""
    upper = gammaincc(order, lo) - gammaincc(order, hi)
    lower = gammainc(order, hi) - gammainc(order, lo)
    return np.where(lo > order, upper, lower)


def time_cells(end: float, cells: int, grading: float = 3.0) -> tuple[np.ndarray, np.ndarray]:
    edges = TimeMesh(end, cells, grading).nodes
    return edges, 0.5 * (edges[1:] + edges[:-1])


def maxreg_matrix(kind: str, r: int, lam: float, edges: np.ndarray) -> np.ndarray:
    """Quadrature matrix of ``P_r`` or ``Q_r`` for one mode ``lam``.

    Inputs are constant on the cells, outputs are sampled at cell midpoints.
    ``P_r`` entries are exact cell integrals of ``lam^{r+1} tau^r e^{-lam tau}``;
    ``Q_r`` additionally carries ``sqrt(lam) (sqrt t - sqrt s)``, interpolated
    linearly in ``s`` on each piece.
    """
    mids = 0.5 * (edges[1:] + edges[:-1])
    n = mids.size
    c = mids[:, None]
    a = np.broadcast_to(edges[:-1][None, :], (n, n))
    b = np.minimum(edges[1:][None, :], c)
    active = a < c
    s0 = np.where(active, a, 0.0)
    s1 = np.where(active, b, 0.0)
    tau_hi = np.where(active, c - s0, 0.0)
    tau_lo = np.where(active, c - s1, 0.0)
    m0 = math.factorial(r) * _gamma_mass(r + 1, lam * tau_lo, lam * tau_hi)
    if kind == "P":
        return np.where(active, m0, 0.0)
    if kind != "Q":
        raise VerificationError(f"unknown operator {kind!r}")
    root = math.sqrt(lam)
    m0 = root * m0
    m1 = math.factorial(r + 1) * _gamma_mass(r + 2, lam * tau_lo, lam * tau_hi) / root
    g_lo = np.sqrt(c) - np.sqrt(s1)
    g_hi = np.sqrt(c) - np.sqrt(s0)
    width = np.where(active, tau_hi - tau_lo, 1.0)
    slope = (g_hi - g_lo) / width
    return np.where(active, g_lo * m0 + slope * (m1 - tau_lo * m0), 0.0)


def power_norm(matrix: np.ndarray, seed: int = 0, tol: float = POWER_TOL,
               steps: int = POWER_STEPS, start: np.ndarray | None = None) -> tuple[float, list[float]]:
    """Largest singular value by power iteration on ``A^T A``.

    Stops when the residual ``||A^T A v - q v|| / q`` falls below ``tol`` or the
    Rayleigh quotient ``q`` grows by less than ``QUOTIENT_STEP_TOL`` relative per step.
    Returns the estimate and the quotient history, nondecreasing for a
    positive semidefinite composition.
    """
    rng = np.random.default_rng(seed)
    vec = rng.standard_normal(matrix.shape[1])
    if start is not None:
        vec = start / np.linalg.norm(start) + 1e-3 * vec / np.linalg.norm(vec)
    history: list[float] = []
    resid = math.inf
    for _ in range(steps):
        vec = vec / np.linalg.norm(vec)
        image = matrix @ vec
        quotient = float(image @ image)
        history.append(quotient)
        if quotient == 0.0:
            return 0.0, history
        back = matrix.T @ image
        resid = float(np.linalg.norm(back - quotient * vec)) / quotient
        if resid <= tol or (len(history) > 1 and history[-1] - history[-2] <= QUOTIENT_STEP_TOL * quotient):
            return math.sqrt(quotient), history
        vec = back
    raise VerificationError(f"power iteration did not converge in {steps} steps (residual {resid:.3e})")


def block_power_norm(blocks: list[np.ndarray], seed: int = 0, start: np.ndarray | None = None) -> float:
    """Norm of a block-diagonal operator: the largest block norm."""
    return max((power_norm(blk, seed + i, start=start)[0] for i, blk in enumerate(blocks)), default=0.0)


def _mode_operators(kind: str, r: int, lams: np.ndarray, edges: np.ndarray) -> list[np.ndarray]:
    root_w = np.sqrt(np.diff(edges))
    return [root_w[:, None] * maxreg_matrix(kind, r, float(lam), edges) / root_w[None, :] for lam in lams]


def maxreg_norm(r: int, end: float, cells: int, grid: Grid | None = None,
                lams: list[float] | None = None, grading: float = 3.0, seed: int = 0) -> LemmaReport:
    """Operator norms of ``P_r`` and ``Q_r`` on ``L^2([0, T], L^2)``.

    The spatial factor is diagonalized by the Fourier transform, so the
    space-time operator is block diagonal with one quadrature matrix per
    distinct wavenumber magnitude of ``grid`` (or per entry of ``lams``).
    """
    if not 0 <= r <= 4:
        raise VerificationError(f"r={r} outside [0, 4]")
    if lams is None:
        if grid is None:
            raise VerificationError("need a grid or an explicit list of modes")
        values = np.unique(np.round(grid.k2[grid.nyquist_mask], 12))
        values = values[values > 0]
    else:
        values = np.asarray(lams, dtype=float)
    edges, _ = time_cells(end, cells, grading)
    norms = {}
    for kind in ("P", "Q"):
        ops = _mode_operators(kind, r, values, edges)
        norms[kind] = block_power_norm(ops, seed, start=np.sqrt(np.diff(edges)))
    reference = float(math.factorial(r))
    return LemmaReport("maxreg", {"r": r, "T": end, "cells": cells}, norms["P"], reference,
                       norms["P"] / reference, bool(np.isfinite(norms["P"]) and np.isfinite(norms["Q"])),
                       details={"P": norms["P"], "Q": norms["Q"], "modes": int(values.size)})


# --- Kahane combinatorial lemma -------------------------------------------


def _power(n: int, exponent: float) -> float:
    return float(n) ** exponent


def kahane_sum(alpha: tuple[int, ...], delta: float) -> float:
    """Interior sum over ``0 < gamma < alpha`` (componentwise, both endpoints excluded)."""
    order = sum(alpha)
    terms = []
    for gamma in itertools.product(*(range(a + 1) for a in alpha)):
        g = sum(gamma)
        if g == 0 or g == order:
            continue
        binom = math.prod(math.comb(a, c) for a, c in zip(alpha, gamma))
        terms.append(binom * _power(g, g - delta) * _power(order - g, order - g - delta))
    return math.fsum(terms)


def kahane_check(delta: float, dim: int, order_max: int) -> LemmaReport:
    if not delta > 0.5:
        raise VerificationError(f"delta={delta} must exceed 1/2")
    if not 1 <= order_max <= 14:
        raise VerificationError("order_max must lie in [1, 14]")
    per_order = []
    best, arg = 0.0, None
    for order in range(1, order_max + 1):
        top = 0.0
        for alpha in multi_indices(dim, order):
            ratio = kahane_sum(alpha, delta) / _power(order, order - delta)
            if ratio > top:
                top = ratio
            if ratio > best:
                best, arg = ratio, alpha
        per_order.append(top)
    return LemmaReport("kahane", {"delta": delta, "d": dim, "order_max": order_max}, best, 1.0, best,
                       bool(np.isfinite(best)), details={"per_order": per_order, "argmax": arg})


# --- Oseen kernel --------------------------------------------------------


def verify_oseen(k: int, t: float, grid: Grid, oversample: int = 4, window: float = 0.5) -> KernelReport:
    """Weighted sups of the kernel of ``grad^{k+1} P e^{t Delta}``.

    The sups run over ``|x|_inf <= window * pi L`` so that periodic images do
    not dominate the far field.
    """
    mag = None
    for alpha in multi_indices(grid.dim, k + 1):
        field_ = oseen_kernel(alpha, t, grid, oversample).values[0]
        mag = field_ if mag is None else np.maximum(mag, field_)
    fine = Grid(grid.dim, grid.n * oversample, grid.box_scale)
    coords = fine.signed_coords
    inner = np.ones(fine.shape, dtype=bool)
    for y in coords:
        inner &= np.abs(y) <= window * math.pi * grid.box_scale
    radius = fine.radius
    d = grid.dim
    classic = float(np.max((mag * (math.sqrt(t) + radius) ** (d + k + 1))[inner]))
    ms = None
    if k >= 1:
        ms = float(np.max((mag * t ** (k / 2) * (math.sqrt(t / k) + radius) ** (d + 1))[inner]))
    return KernelReport(k, t, grid.n, grid.box_scale, classic, ms)


# --- heat gradient, Besov embedding, linear estimate ---------------------


def _ensemble(seed: int, size: int, grid: Grid, cutoff: float, slope: float | None = None) -> list[SpectralField]:
    slope = 1.0 - grid.dim if slope is None else slope
    kc = min(cutoff, grid.n / 3.0)
    return [random_small_field(seed + i, slope, 1.0, grid, cutoff=kc) for i in range(size)]


def _grad_sup(s: SpectralField) -> float:
    total = np.zeros(s.grid.shape)
    for axis in range(s.grid.dim):
        alpha = tuple(int(a == axis) for a in range(s.grid.dim))
        total += np.sum(to_physical(derivative(s, alpha).coeffs, s.grid.dim) ** 2, axis=0)
    return float(np.sqrt(np.max(total)))


def _sup(s: SpectralField) -> float:
    return float(np.sqrt(np.max(np.sum(to_physical(s.coeffs, s.grid.dim) ** 2, axis=0))))


def heat_gradient_ratio(s: SpectralField, t: float) -> float:
    """``sqrt t ||grad e^{t Delta} s||_inf / ||s||_inf``."""
    base = _sup(s)
    if base == 0:
        return 0.0
    return math.sqrt(t) * _grad_sup(heat(s, t)) / base


def heat_gradient_bound(ensemble_size: int, grid: Grid, t_set=None, seed: int = 42,
                        cutoff: float = 8.0, fields: list[SpectralField] | None = None) -> LemmaReport:
    t_set = list(np.logspace(-3, 0, 13)) if t_set is None else list(t_set)
    members = _ensemble(seed, ensemble_size, grid, cutoff) if fields is None else fields
    worst = 0.0
    for s in members:
        for t in t_set:
            worst = max(worst, heat_gradient_ratio(s, t))
    return LemmaReport("heatgrad", {"N": grid.n, "d": grid.dim}, worst, 1.0, worst,
                       bool(np.isfinite(worst)), len(members), details={"t_set": [float(t) for t in t_set]})


def besov_embedding_check(ensemble_size: int, grid: Grid, seed: int = 42, cutoff: float = 8.0,
                          fields: list[SpectralField] | None = None) -> LemmaReport:
    members = _ensemble(seed, ensemble_size, grid, cutoff) if fields is None else fields
    boxes = CarlesonBoxSet.for_grid(grid)
    ratios = []
    for s in members:
        bmo = bmo_minus_one(s, boxes)
        if bmo > 0:
            ratios.append(besov_norm(s) / bmo)
    if not ratios:
        raise VerificationError("ensemble has no nonzero member")
    worst = max(ratios)
    return LemmaReport("besov", {"N": grid.n, "d": grid.dim}, worst, 1.0, worst, bool(np.isfinite(worst)),
                       len(ratios), details={"ratios": ratios})


def growth_fit(ks, values) -> dict:
    """Least-squares fit ``log v_k = c0 + k log C + beta k log k``."""
    ks = np.asarray(ks, dtype=float)
    y = np.log(np.asarray(values, dtype=float))
    design = np.stack([np.ones_like(ks), ks, ks * np.log(ks)], axis=1)
    coef, *_ = np.linalg.lstsq(design, y, rcond=None)
    return {"intercept": float(coef[0]), "log_C": float(coef[1]), "C": float(np.exp(coef[1])),
            "beta": float(coef[2])}


def linear_estimate_check(ensemble_size: int, k_max: int, grid: Grid, mesh: TimeMesh,
                          boxes: CarlesonBoxSet | None = None, seed: int = 42, cutoff: float = 8.0) -> LemmaReport:
    """Empirical ``C(k) = max ||e^{t Delta} u0||_{X^k} / ||u0||_{BMO^-1}`` and its growth in ``k``."""
    boxes = CarlesonBoxSet.for_grid(grid, min(mesh.end, max_scale(grid))) if boxes is None else boxes
    bmo_boxes = CarlesonBoxSet.for_grid(grid)
    consts = [0.0] * (k_max + 1)
    for u0 in _ensemble(seed, ensemble_size, grid, cutoff):
        bmo = bmo_minus_one(u0, bmo_boxes)
        traj = heat_trajectory(u0, mesh)
        for k in range(k_max + 1):
            consts[k] = max(consts[k], xk_norm(traj, k, boxes) / bmo)
    details = {"C_k": consts}
    ks = [k for k in range(2, k_max + 1)]
    if len(ks) >= 3:
        details["fit"] = growth_fit(ks, [consts[k] for k in ks])
    worst = max(consts)
    return LemmaReport("linear", {"k_max": k_max, "N": grid.n, "M": mesh.steps}, worst, 1.0, worst,
                       bool(np.all(np.isfinite(consts))), ensemble_size, details=details)


# --- bilinear estimate ---------------------------------------------------


def random_pair(seed: int, grid: Grid, mesh: TimeMesh) -> tuple[Trajectory, Trajectory]:
    """Heat trajectories of two independent data with varied spectra, amplitudes and bandwidths."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(2):
        slope = float(rng.uniform(-3.0, 0.0))
        amp = float(10 ** rng.uniform(-1.0, 0.0))
        cut = float(rng.uniform(2.0, min(8.0, grid.n / 3.0)))
        sub = int(rng.integers(0, 2**31))
        out.append(heat_trajectory(random_small_field(sub, slope, amp, grid, cutoff=cut), mesh))
    return out[0], out[1]


@dataclass
class BilinearSample:
    xk_u: list[float]
    xk_v: list[float]
    xk_b: list[float]


def bilinear_sample(u: Trajectory, v: Trajectory, k_max: int, boxes: CarlesonBoxSet) -> BilinearSample:
    b = duhamel_B(u, v)
    return BilinearSample([xk_norm(u, k, boxes) for k in range(k_max + 1)],
                          [xk_norm(v, k, boxes) for k in range(k_max + 1)],
                          [xk_norm(b, k, boxes) for k in range(k_max + 1)])


def _design(samples: list[BilinearSample], k: int) -> tuple[np.ndarray, np.ndarray]:
    rows, y = [], []
    for s in samples:
        tu = sum(s.xk_u[:k])
        tv = sum(s.xk_v[:k])
        rows.append([s.xk_u[0] * s.xk_v[0], s.xk_u[0] * s.xk_v[k] + s.xk_v[0] * s.xk_u[k], tu * tv])
        y.append(s.xk_b[k])
    return np.array(rows), np.array(y)


def bilinear_fits(samples: list[BilinearSample], k_max: int) -> dict:
    """Nonnegative least-squares constants of the bilinear estimate family.

    Per ``k >= 1`` the regressors are ``X^0 X^0``, the symmetric ``X^0 X^k``
    pair and ``X~^{k-1} X~^{k-1}``; the pooled fit shares the middle constant
    across all ``k``.
    """
    ratios0 = [s.xk_b[0] / (s.xk_u[0] * s.xk_v[0]) for s in samples if s.xk_u[0] * s.xk_v[0] > 0]
    out = {"C_x0": max(ratios0), "per_k": {}}
    blocks = []
    for k in range(1, k_max + 1):
        a, y = _design(samples, k)
        scale = np.maximum(y, 1e-300)
        coef, _ = nnls(a / scale[:, None], np.ones_like(y))
        out["per_k"][k] = {"C0": float(coef[0]), "C1": float(coef[1]), "Ck": float(coef[2])}
        blocks.append((a / scale[:, None], k))
    if blocks:
        n_k = len(blocks)
        rows = []
        for i, (a, _) in enumerate(blocks):
            full = np.zeros((a.shape[0], 1 + 2 * n_k))
            full[:, 0] = a[:, 1]
            full[:, 1 + 2 * i] = a[:, 0]
            full[:, 2 + 2 * i] = a[:, 2]
            rows.append(full)
        design = np.vstack(rows)
        coef, _ = nnls(design, np.ones(design.shape[0]))
        out["pooled_C1"] = float(coef[0])
        c1 = np.array([out["per_k"][k]["C1"] for k in range(1, k_max + 1)])
        ks = np.arange(1, k_max + 1, dtype=float)
        slope = float(np.polyfit(ks, c1, 1)[0]) if k_max >= 2 else 0.0
        out["C1_slope"] = slope
        scale = max(float(np.mean(np.abs(c1))), out["pooled_C1"], 1e-300)
        out["C1_trend_ok"] = bool(slope <= 0.1 * scale)
    return out


def bilinear_sweep(ensemble_size: int, k_max: int, grid: Grid, mesh: TimeMesh,
                   boxes: CarlesonBoxSet | None = None, seed: int = 42) -> LemmaReport:
    boxes = CarlesonBoxSet.for_grid(grid, min(mesh.end, max_scale(grid))) if boxes is None else boxes
    samples = []
    for i in range(ensemble_size):
        u, v = random_pair(seed + i, grid, mesh)
        samples.append(bilinear_sample(u, v, k_max, boxes))
    if all(s.xk_b[0] == 0 for s in samples):
        raise VerificationError("degenerate ensemble: every bilinear term vanishes")
    fits = bilinear_fits(samples, k_max)
    c = fits["C_x0"]
    ok = bool(np.isfinite(c)) and fits.get("C1_trend_ok", True)
    return LemmaReport("bilinear", {"k_max": k_max, "N": grid.n, "M": mesh.steps}, c, 1.0, c, ok,
                       ensemble_size, details=fits)
