"""Command-line experiment runner.

Every run is described by an :class:`ExperimentSpec`; its canonical JSON hash
is stamped on every artifact, and no artifact carries a timestamp, so equal
specs give byte-identical outputs.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import harmonic_checks as hc
from .io import write_snapshot
from .mild_solver import BlowUpError, IterationLog, SolverConfig, convergence_radius, picard_solve
from .norms import CarlesonBoxSet, NormError, TimeMesh, Trajectory, bmo_minus_one, derivative_sup_profile, norm_report
from .operators import SpectralError
from .selfsim import ProfileError, make_profile, profile_diagnostics, profile_residual, scaling_covariance, stream_profile, extract_profile
from .spectral_core import Grid, SpectralField, derivative, multi_indices, random_small_field, single_mode, taylor_green

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_FAILED = 0, 1, 2, 3
VERIFIERS = ("carleson", "maxreg", "kahane", "oseen", "heatgrad", "besov", "linear", "bilinear")
SELFSIM_MODES = ("covariance", "profile")
BETA_RANGE = (0.5, 1.2)


class UsageError(Exception):
    pass


@dataclass
class ExperimentSpec:
    command: str = "solve"
    targets: list[str] = field(default_factory=list)
    dim: int = 2
    n: int = 64
    box_scale: float = 1.0
    end_time: float = 1.0
    steps: int = 64
    grading: float = 2.0
    seed: int = 42
    amplitude: float = 0.01
    slope: float | None = None
    cutoff: float | None = None
    datum: str = "random"
    mode: list[int] = field(default_factory=lambda: [1, 0])
    ensemble: int = 50
    k_max: int = 6
    tol: float = 1e-10
    max_iter: int = 30
    n_scales: int = 8
    t_min: float = 0.05
    ceiling: float = 3.0
    decay_k_max: int = 4
    snapshot_stride: int = 8
    radius_probes: int = 0
    carleson_ks: list[int] = field(default_factory=lambda: [0, 1, 2])
    maxreg_r: list[int] = field(default_factory=lambda: [0, 1, 2])
    maxreg_T: list[float] = field(default_factory=lambda: [1.0, 10.0, 100.0])
    maxreg_cells: int = 64
    maxreg_n: int = 16
    kahane_delta: float = 1.0
    kahane_order: int = 12
    oseen_t: float = 1.0
    oseen_n: int = 256
    oseen_box: float = 16.0
    oseen_k_max: int = 4
    bilinear_n: int = 32
    bilinear_k_max: int = 3
    scale_factor: int = 2
    profile_kind: str = "vanishing"
    profile_n: int = 384
    profile_box: float = 2.0
    out: str = "runs"

    @property
    def spectrum_slope(self) -> float:
        """Default power law ``1 - d``: the decay of a homogeneous degree -1 field."""
        return 1.0 - self.dim if self.slope is None else self.slope

    def canonical(self) -> dict:
        data = asdict(self)
        data.pop("out")
        return data

    def digest(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentSpec":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise UsageError(f"unknown spec keys: {sorted(unknown)}")
        return cls(**data)


# --- building blocks -----------------------------------------------------


def build_grid(spec: ExperimentSpec) -> Grid:
    return Grid(spec.dim, spec.n, spec.box_scale)


def build_mesh(spec: ExperimentSpec) -> TimeMesh:
    return TimeMesh(spec.end_time, spec.steps, spec.grading)


def build_datum(spec: ExperimentSpec, grid: Grid | None = None) -> SpectralField:
    grid = build_grid(spec) if grid is None else grid
    if spec.datum == "random":
        return random_small_field(spec.seed, spec.spectrum_slope, spec.amplitude, grid, spec.cutoff)
    if spec.datum == "taylor_green":
        return taylor_green(grid, spec.amplitude)
    if spec.datum == "zero":
        return SpectralField.zeros(grid)
    if spec.datum == "mode":
        xi = tuple(spec.mode)
        if len(xi) != grid.dim:
            raise UsageError(f"mode {xi} does not match dimension {grid.dim}")
        comp = next(c for c in range(grid.dim) if xi[c] == 0) if 0 in xi else 0
        return single_mode(grid, xi, component=comp, amplitude=spec.amplitude)
    raise UsageError(f"unknown datum {spec.datum!r}")


def build_config(spec: ExperimentSpec, grid: Grid, mesh: TimeMesh | None = None) -> SolverConfig:
    mesh = build_mesh(spec) if mesh is None else mesh
    boxes = CarlesonBoxSet.for_grid(grid, mesh.end, spec.n_scales)
    return SolverConfig(mesh, boxes, spec.tol, spec.max_iter)


def solve(spec: ExperimentSpec, grid: Grid | None = None, mesh: TimeMesh | None = None
          ) -> tuple[Trajectory, IterationLog, SolverConfig]:
    grid = build_grid(spec) if grid is None else grid
    cfg = build_config(spec, grid, mesh)
    traj, log = picard_solve(build_datum(spec, grid), cfg)
    return traj, log, cfg


def derivative_bmo(s: SpectralField, k: int, boxes: CarlesonBoxSet) -> float:
    """``max_{|alpha|=k} ||d^alpha s||_{BMO^-1}``."""
    return max(bmo_minus_one(derivative(s, a), boxes) for a in multi_indices(s.grid.dim, k))


def decay_table(traj: Trajectory, k_max: int, t_min: float, boxes: CarlesonBoxSet | None = None) -> dict:
    """Rows ``t^{k/2} ||grad^k u(t)||_{BMO^-1}`` over nodes ``t >= t_min`` and their max/min spread."""
    boxes = CarlesonBoxSet.for_grid(traj.grid) if boxes is None else boxes
    nodes = [m for m, t in enumerate(traj.times) if t >= t_min * (1 - 1e-12) and t > 0]
    rows = {}
    for k in range(k_max + 1):
        rows[k] = [float(traj.times[m] ** (k / 2) * derivative_bmo(traj.snapshot(m), k, boxes)) for m in nodes]
    spread = {k: (max(r) / min(r) if min(r) > 0 else math.inf) for k, r in rows.items()}
    return {"times": [float(traj.times[m]) for m in nodes], "rows": rows, "spread": spread}


def taylor_sups(traj: Trajectory, k_max: int) -> np.ndarray:
    """``max_alpha ||d^alpha u(t_m)||_inf`` for ``k = 0..k_max``, shape ``(k_max+1, M+1)``."""
    return np.array([derivative_sup_profile(traj, k) for k in range(k_max + 1)])


def analyticity_fit(traj: Trajectory, k_max: int, fit_from: int = 2) -> dict:
    """Growth fit of ``a_k = sup_t t^{(k+1)/2} ||grad^k u||_inf`` and the radius proxy per node.

    The radius proxy is ``min_k (k! ||u||_inf / ||grad^k u||_inf)^{1/k}``; for a
    single Fourier mode it equals ``L / |xi|`` at every time.
    """
    sups = taylor_sups(traj, k_max)
    t = traj.times
    a = [float(np.max(t[1:] ** ((k + 1) / 2) * sups[k, 1:])) for k in range(k_max + 1)]
    usable = [k for k in range(fit_from, k_max + 1) if a[k] > 0 and np.isfinite(a[k])]
    if len(usable) < 4:
        raise NormError("no data: fewer than 4 usable derivative orders for the growth fit")
    fit = hc.growth_fit(usable, [a[k] for k in usable])
    radius = []
    for m in range(len(t)):
        if sups[0, m] == 0:
            radius.append(None)
            continue
        cands = [(math.factorial(k) * sups[0, m] / sups[k, m]) ** (1.0 / k)
                 for k in range(1, k_max + 1) if sups[k, m] > 0]
        radius.append(min(cands) if cands else None)
    return {"a_k": a, "fit_k": usable, "fit": fit, "beta": fit["beta"], "radius": radius}


# --- commands ------------------------------------------------------------


@dataclass
class Outcome:
    code: int
    manifest: dict


def _csv(rows: list[dict], digest: str) -> str:
    buf = io.StringIO()
    if not rows:
        return "spec_hash\n" + digest + "\n"
    cols = list(dict.fromkeys(k for row in rows for k in row)) + ["spec_hash"]
    writer = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({**{k: _fmt(v) for k, v in row.items()}, "spec_hash": digest})
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings, int keys to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return str(obj)
    return obj


class Writer:
    def __init__(self, spec: ExperimentSpec):
        self.spec = spec
        self.digest = spec.digest()
        self.root = Path(spec.out)
        self.files: list[str] = []

    def text(self, name: str, content: str):
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(content)
        self.files.append(name)

    def table(self, name: str, rows: list[dict]):
        self.text(name, _csv(rows, self.digest))

    def manifest(self, body: dict) -> dict:
        doc = _clean({"command": self.spec.command, "spec": self.spec.canonical(), "spec_hash": self.digest,
                      **body, "files": sorted(self.files)})
        self.text("manifest.json", json.dumps(doc, sort_keys=True, indent=2) + "\n")
        return doc

    def snapshots(self, traj: Trajectory, stride: int):
        picks = sorted(set(range(0, len(traj.mesh), max(1, stride))) | {len(traj.mesh) - 1})
        for m in picks:
            name = f"snapshots/u_{m:04d}.mnsf"
            write_snapshot(self.root / name, SpectralField(traj.grid, traj.coeffs[m], divergence_free=True),
                           {"node": m, "t": float(traj.times[m]), "spec_hash": self.digest})
            self.files.append(name)


def run_solve(spec: ExperimentSpec) -> Outcome:
    out = Writer(spec)
    traj, log, cfg = solve(spec)
    report = norm_report(traj, spec.k_max, cfg.boxes)
    out.table("norms.csv", report.rows())
    out.table("iterations.csv", [{k: v for k, v in e.items() if k != "xk"} for e in log.entries])
    out.snapshots(traj, spec.snapshot_stride)
    body = {"iteration_log": log.to_json(), "norms": report.to_json(), "config": cfg.to_dict()}
    if spec.radius_probes > 0:
        grid = traj.grid
        radius, probes = convergence_radius(
            lambda amp: build_datum(replace(spec, amplitude=amp), grid), cfg, 1e-3, 1e2, spec.radius_probes)
        body["convergence_radius"] = {"amplitude": radius, "probes": probes}
    doc = out.manifest(body)
    return Outcome(EXIT_OK if log.converged else EXIT_NUMERICAL, doc)


def run_decay(spec: ExperimentSpec) -> Outcome:
    out = Writer(spec)
    traj, log, _ = solve(spec)
    table = decay_table(traj, spec.decay_k_max, spec.t_min)
    rows = [{"k": k, "t": t, "value": v} for k, vals in table["rows"].items() for t, v in zip(table["times"], vals)]
    out.table("decay.csv", rows)
    bounded = all(s < spec.ceiling for s in table["spread"].values())
    doc = out.manifest({"iteration_log": log.to_json(), "decay": table, "ceiling": spec.ceiling, "passed": bounded})
    return Outcome(EXIT_OK if bounded else EXIT_FAILED, doc)


def run_analyticity(spec: ExperimentSpec) -> Outcome:
    out = Writer(spec)
    traj, log, _ = solve(spec)
    result = analyticity_fit(traj, spec.k_max)
    out.table("a_k.csv", [{"k": k, "a_k": v} for k, v in enumerate(result["a_k"])])
    out.table("radius.csv", [{"t": float(t), "radius": r} for t, r in zip(traj.times, result["radius"])])
    passed = BETA_RANGE[0] <= result["beta"] <= BETA_RANGE[1]
    doc = out.manifest({"iteration_log": log.to_json(), "analyticity": result, "passed": passed})
    return Outcome(EXIT_OK if passed else EXIT_FAILED, doc)


def _verify_one(name: str, spec: ExperimentSpec) -> list:
    grid = build_grid(spec)
    mesh = build_mesh(spec)
    if name == "carleson":
        unit = TimeMesh(1.0, spec.steps, spec.grading)
        return [hc.carleson_ensemble(spec.ensemble, k, grid, unit, spec.seed) for k in spec.carleson_ks]
    if name == "maxreg":
        small = Grid(spec.dim, spec.maxreg_n)
        return [hc.maxreg_norm(r, t, spec.maxreg_cells, small) for r in spec.maxreg_r for t in spec.maxreg_T]
    if name == "kahane":
        return [hc.kahane_check(spec.kahane_delta, d, spec.kahane_order) for d in (1, 2, 3)]
    if name == "oseen":
        big = Grid(spec.dim, spec.oseen_n, spec.oseen_box)
        return [hc.verify_oseen(k, spec.oseen_t, big) for k in range(spec.oseen_k_max + 1)]
    if name == "heatgrad":
        return [hc.heat_gradient_bound(spec.ensemble, grid, seed=spec.seed)]
    if name == "besov":
        return [hc.besov_embedding_check(spec.ensemble, grid, seed=spec.seed)]
    if name == "linear":
        return [hc.linear_estimate_check(spec.ensemble, spec.k_max, grid, mesh, seed=spec.seed)]
    if name == "bilinear":
        small = Grid(spec.dim, spec.bilinear_n, spec.box_scale)
        return [hc.bilinear_sweep(spec.ensemble, spec.bilinear_k_max, small, mesh, seed=spec.seed)]
    raise UsageError(f"unknown verifier {name!r}")


def _report_ok(rep) -> bool:
    if isinstance(rep, hc.LemmaReport):
        return rep.passed
    values = [rep.sup_ratio_classic] + ([] if rep.sup_ratio_ms is None else [rep.sup_ratio_ms])
    return all(math.isfinite(v) and v >= 0 for v in values)


def run_verify(spec: ExperimentSpec) -> Outcome:
    if not spec.targets:
        raise UsageError("verify needs at least one verifier")
    out = Writer(spec)
    results, passed = {}, True
    for name in spec.targets:
        reports = _verify_one(name, spec)
        rows = [r.to_row() for r in reports]
        out.table(f"verify_{name}.csv", rows)
        ok = all(_report_ok(r) for r in reports)
        passed &= ok
        results[name] = {"passed": ok, "reports": [r.to_json() if hasattr(r, "to_json") else r.to_row()
                                                   for r in reports]}
    doc = out.manifest({"results": results, "passed": passed})
    return Outcome(EXIT_OK if passed else EXIT_FAILED, doc)


def run_selfsim(spec: ExperimentSpec) -> Outcome:
    if len(spec.targets) != 1 or spec.targets[0] not in SELFSIM_MODES:
        raise UsageError(f"selfsim needs exactly one of {SELFSIM_MODES}")
    out = Writer(spec)
    if spec.targets[0] == "covariance":
        grid = build_grid(spec)
        result = scaling_covariance(build_datum(spec, grid), spec.scale_factor, build_config(spec, grid))
        passed = result.error < 1e-6
        out.table("covariance.csv", [{"lambda": spec.scale_factor, "error": result.error,
                                      "reference_scale": result.reference_scale}])
        doc = out.manifest({"covariance": asdict(result), "passed": passed})
        return Outcome(EXIT_OK if passed else EXIT_FAILED, doc)
    if spec.profile_kind == "solve":
        traj, _, _ = solve(spec)
        profile = extract_profile(traj, float(traj.times[-1]))
    else:
        profile = make_profile(stream_profile(Grid(2, spec.profile_n, spec.profile_box), spec.profile_kind))
    residual = profile_residual(profile)
    diags = [profile_diagnostics(profile, k) for k in range(spec.k_max + 1)]
    out.table("profile.csv", [d.to_row() for d in diags])
    doc = out.manifest({"residual": residual, "boundary_mass": profile.boundary_mass,
                        "diagnostics": [{**d.to_row(), "drift": d.drift, "flagged": d.flagged} for d in diags]})
    return Outcome(EXIT_OK, doc)


COMMANDS = {"solve": run_solve, "decay": run_decay, "analyticity": run_analyticity,
            "verify": run_verify, "selfsim": run_selfsim}


def run(spec: ExperimentSpec) -> Outcome:
    if spec.command not in COMMANDS:
        raise UsageError(f"unknown command {spec.command!r}")
    return COMMANDS[spec.command](spec)


# --- argument parsing ----------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentSpec fields")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seed", type=int)
    common.add_argument("--n", type=int, help="grid points per axis")
    common.add_argument("--dim", type=int, choices=(2, 3))
    common.add_argument("--kmax", type=int, dest="k_max")
    common.add_argument("--tol", type=float)
    parser = _Parser(prog="mildns", description="Mild Navier-Stokes solutions and norm verification")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("solve", "decay", "analyticity"):
        sub.add_parser(name, parents=[common])
    verify = sub.add_parser("verify", parents=[common])
    verify.add_argument("targets", nargs="+", choices=VERIFIERS)
    selfsim = sub.add_parser("selfsim", parents=[common])
    selfsim.add_argument("targets", nargs=1, choices=SELFSIM_MODES)
    return parser


def spec_from_args(argv: list[str]) -> ExperimentSpec:
    args = build_parser().parse_args(argv)
    data: dict = {}
    if args.config:
        try:
            data.update(json.loads(Path(args.config).read_text()))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    data["command"] = args.command
    if getattr(args, "targets", None):
        data["targets"] = list(args.targets)
    for key in ("out", "seed", "n", "dim", "k_max", "tol"):
        value = getattr(args, key)
        if value is not None:
            data[key] = value
    return ExperimentSpec.from_dict(data)


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        spec = spec_from_args(argv)
        outcome = run(spec)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BlowUpError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (SpectralError, ProfileError, hc.VerificationError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(json.dumps({"command": spec.command, "exit": outcome.code, "out": spec.out,
                      "spec_hash": outcome.manifest["spec_hash"]}))
    return outcome.code


if __name__ == "__main__":
    sys.exit(main())
