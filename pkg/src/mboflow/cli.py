"""Command line driver: runs, diagnostics sweeps, and all file emission.

Subcommands
    run         threshold-dynamics trajectory with CSV ledger and snapshots
    interp      intermediate-time minimizers and descent checks on one step
    slope       slope sandwich (lower/upper bound) along the r grid
    measures    pair-correlation / perimeter / dissipation estimates
    identities  free-Gaussian quadrature identity suite
    converge    radius-error sweep over step sizes against the exact law

Configuration can come from a JSON file (--config) with the same keys as
the flags; explicit flags win.  Every CSV starts with a comment line
carrying the sha256 hash of the resolved configuration.  Exit codes:
0 success, 1 validation error, 2 a numerical check failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import math
import os
import sys
from pathlib import Path

from . import __version__
from .interpolate import default_r_grid, degiorgi_step_check, solve_nodes
from .kernel import gaussian_identity_suite
from .measures import ZQuadSpec, dissipation_density, perimeter_estimate, sample_pair_measure
from .reference import ReferenceSolution, disc_dissipation_rate
from .scheme import run as run_scheme
from .torus import (
    Disc,
    Dumbbell,
    FullTorus,
    RandomBinary,
    ScalarField,
    Stripe,
    make_grid,
    sample_shape,
    save_snapshot,
)
from .variation import make_trig_basis, slope_lower

__all__ = ["main", "RunConfig", "write_csv", "read_csv"]

OUTPUT_ROOT_ENV = "MBOFLOW_OUTPUT_ROOT"

RUN_LEDGER_COLUMNS = [
    "step", "time", "energy", "metric_increment", "dissipation", "volume",
    "radius_est", "radius_ref",
]
INTERP_COLUMNS = ["step", "r", "e", "dist", "slope_upper", "slope_lower", "iters", "residual"]
MEASURES_COLUMNS = ["h", "quantity", "estimate", "comparator", "rel_err"]
CONVERGE_COLUMNS = ["h", "n", "final_radius", "ref_radius", "rel_err", "pinning_ratio"]


@dataclasses.dataclass
class RunConfig:
    d: int = 2
    n: int = 256
    h: float = 1e-3
    T: float = 0.04
    shape: str = "disc"
    radius: float = 0.3
    width: float = 0.5
    fill: float = 0.5
    seed: int = 0
    out: str = "out"
    snapshot_stride: int = 0  # 0 disables snapshots
    r_nodes: int = 16
    r_span: float = 256.0
    qp_tol: float = 1e-8
    K: int = 4
    step_index: int = -1  # interp/slope step; -1 means the middle step
    z_extent: float = 6.0
    z_points: int = 160
    extent: float = 8.0
    points: int = 400
    h_list: tuple[float, ...] = ()
    n_list: tuple[int, ...] = ()

    def validated(self) -> "RunConfig":
        if self.shape not in ("disc", "stripe", "dumbbell", "random", "full"):
            raise ValueError(f"unknown shape {self.shape!r}")
        if self.T <= 0 or self.h <= 0:
            raise ValueError("h and T must be positive")
        make_grid(self.d, self.n)  # validates d and n
        return self

    def shape_spec(self):
        return {
            "disc": Disc(self.radius),
            "stripe": Stripe(self.width),
            "dumbbell": Dumbbell(),
            "random": RandomBinary(self.fill, self.seed),
            "full": FullTorus(),
        }[self.shape]

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)

    def config_hash(self) -> str:
        payload = self.as_dict()
        payload.pop("out")  # identify the experiment, not its location
        blob = json.dumps(payload, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _fmt(x) -> str:
    if isinstance(x, float):
        return "%.17g" % x
    return str(x)


def write_csv(path: Path, columns: list[str], rows: list[list], config_hash: str) -> None:
    lines = [f"# config_hash={config_hash}", ",".join(columns)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: Path) -> tuple[list[str], list[list[str]]]:
    """Raw CSV reader matching write_csv; values stay as strings."""
    header = None
    rows = []
    for line in Path(path).read_text().splitlines():
        if not line or line.startswith("#"):
            continue
        if header is None:
            header = line.split(",")
        else:
            rows.append(line.split(","))
    if header is None:
        raise ValueError(f"no header row in {path}")
    return header, rows


def _outdir(cfg: RunConfig) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV, ".")
    path = Path(root) / cfg.out
    path.mkdir(parents=True, exist_ok=True)
    return path


def _extracted_radius(volume: float, d: int) -> float:
    if d == 2:
        return math.sqrt(max(volume, 0.0) / math.pi)
    if d == 3:
        return (max(volume, 0.0) * 3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)
    return volume / 2.0  # 1D interval: half-length


def _reference_for(cfg: RunConfig) -> ReferenceSolution | None:
    if cfg.shape == "disc" and cfg.d >= 2:
        return ReferenceSolution("disc" if cfg.d == 2 else "sphere", cfg.radius, cfg.d)
    if cfg.shape == "stripe":
        return ReferenceSolution("stripe", cfg.width, cfg.d)
    return None


def _make_initial(cfg: RunConfig) -> ScalarField:
    return sample_shape(cfg.shape_spec(), make_grid(cfg.d, cfg.n))


def _run_trajectory(cfg: RunConfig):
    return run_scheme(_make_initial(cfg), cfg.h, cfg.T)


def cmd_run(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    traj = _run_trajectory(cfg)
    ref = _reference_for(cfg)
    rows = []
    for entry in traj.ledger:
        r_est = _extracted_radius(entry.volume, cfg.d)
        if ref is None:
            r_ref = math.nan
        elif ref.is_extinct(entry.time):
            r_ref = 0.0
        else:
            r_ref = ref.radius(entry.time)
        rows.append(
            [entry.step, entry.time, entry.energy, entry.metric_increment,
             entry.dissipation, entry.volume, r_est, r_ref]
        )
    write_csv(out / "run_ledger.csv", RUN_LEDGER_COLUMNS, rows, cfg.config_hash())
    if cfg.snapshot_stride > 0:
        for entry in traj.ledger:
            if entry.step % cfg.snapshot_stride == 0:
                save_snapshot(
                    traj.fields[entry.step], out / f"snapshot_{entry.step:05d}.f64",
                    name=f"{cfg.shape}_{entry.step}", time=entry.time,
                )
    (out / "run_meta.json").write_text(json.dumps({
        "config": cfg.as_dict(), "config_hash": cfg.config_hash(),
        "pinning_ratio": traj.pinning_ratio,
        "energy_initial": traj.ledger[0].energy, "energy_final": traj.ledger[-1].energy,
        "dissipation_sum": traj.dissipation_sum(), "version": __version__,
    }, indent=2))
    # descent bookkeeping must hold on every run
    energies = [e.energy for e in traj.ledger]
    mono_ok = all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    apriori_ok = energies[-1] + traj.dissipation_sum() <= energies[0] + 1e-10
    if not (mono_ok and apriori_ok):
        (out / "failure.json").write_text(json.dumps({
            "check": "trajectory_descent", "energy_monotone": mono_ok, "a_priori": apriori_ok,
        }, indent=2))
        print("run: trajectory descent check FAILED", file=sys.stderr)
        return 2
    print(f"run: {traj.steps} steps, ledger -> {out / 'run_ledger.csv'}")
    return 0


def _mid_step_state(cfg: RunConfig):
    traj = _run_trajectory(cfg)
    idx = cfg.step_index if cfg.step_index >= 1 else max(1, traj.steps // 2)
    if idx > traj.steps:
        raise ValueError(f"step index {idx} beyond trajectory length {traj.steps}")
    return traj.fields[idx - 1], traj.fields[idx], idx


def cmd_interp(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    chi_prev, chi_next, idx = _mid_step_state(cfg)
    r_grid = default_r_grid(cfg.h, cfg.r_nodes, cfg.r_span)
    report = degiorgi_step_check(chi_prev, chi_next, cfg.h, r_grid, tol=cfg.qp_tol)
    rows = [
        [idx, rec.r, rec.objective, rec.dist, rec.slope_upper, math.nan, rec.iterations, rec.residual]
        for rec in report.records
    ]
    write_csv(out / "interp_nodes.csv", INTERP_COLUMNS, rows, cfg.config_hash())
    summary = {
        "step": idx,
        "energy_prev": report.energy_prev,
        "energy_next": report.energy_next,
        "dist_monotone_worst": report.dist_monotone_worst,
        "objective_monotone_worst": report.objective_monotone_worst,
        "difference_quotient_worst": report.difference_quotient_worst,
        "descent_slack": report.descent_slack,
        "descent_slack_trapezoid": report.descent_slack_trapezoid,
        "quadrature_gap": report.quadrature_gap,
        "per_step_budget_slack": report.per_step_budget_slack,
        "energy_bound_worst": report.energy_bound_worst,
    }
    (out / "interp_report.json").write_text(json.dumps(summary, indent=2))
    tol = 1e-6 * report.energy_prev
    ok = (
        report.dist_monotone_worst >= -1e-10
        and report.difference_quotient_worst >= -1e-9
        and report.descent_slack >= -tol
        and report.energy_bound_worst >= -1e-8
    )
    print(f"interp: step {idx}, descent slack {report.descent_slack:.3e}, "
          f"quadrature gap {report.quadrature_gap:.3e}")
    return 0 if ok else 2


def cmd_slope(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    chi_prev, _, idx = _mid_step_state(cfg)
    r_grid = default_r_grid(cfg.h, cfg.r_nodes, cfg.r_span)
    records = solve_nodes(chi_prev, cfg.h, r_grid, tol=cfg.qp_tol)
    basis = make_trig_basis(cfg.d, cfg.K)
    rows = []
    worst_gap = math.inf
    for rec in records:
        low = slope_lower(rec.u, cfg.h, basis)
        rows.append([idx, rec.r, rec.objective, rec.dist, rec.slope_upper,
                     low.value, rec.iterations, rec.residual])
        worst_gap = min(worst_gap, rec.slope_upper - low.value)
    write_csv(out / "slope_nodes.csv", INTERP_COLUMNS, rows, cfg.config_hash())
    print(f"slope: step {idx}, worst upper-lower gap {worst_gap:.3e} (K={cfg.K})")
    return 0 if worst_gap >= -1e-8 else 2


def cmd_measures(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    rows = []
    quad = ZQuadSpec(cfg.z_extent, cfg.z_points)
    grid = make_grid(cfg.d, cfg.n)
    chi = sample_shape(cfg.shape_spec(), grid)
    from .energy import energy as energy_fn

    p_plus = sample_pair_measure(chi, cfg.h, lambda z: 1.0, "1", z_quad=quad)
    p_minus = sample_pair_measure(chi, cfg.h, lambda z: 1.0, "1", z_quad=quad, swap=True)
    pair_sum = p_plus.value + p_minus.value
    two_E = 2.0 * energy_fn(chi, cfg.h)
    rows.append([cfg.h, "pair_sum_vs_2E", pair_sum, two_E,
                 abs(pair_sum - two_E) / max(two_E, 1e-300)])
    per = perimeter_estimate(chi, cfg.h)
    ref = _reference_for(cfg)
    if cfg.shape == "disc" and cfg.d == 2:
        per_ref = 2.0 * math.pi * cfg.radius
    elif cfg.shape == "stripe":
        per_ref = 2.0
    else:
        per_ref = math.nan
    rows.append([cfg.h, "perimeter", per, per_ref,
                 abs(per - per_ref) / per_ref if per_ref == per_ref else math.nan])
    if cfg.shape == "disc" and cfg.d == 2 and ref is not None:
        traj = _run_trajectory(cfg)
        vols = [e.volume for e in traj.ledger]
        target = next((k for k, v in enumerate(vols) if _extracted_radius(v, 2) <= 0.25), None)
        if target is not None and target >= 1:
            _, integral = dissipation_density(traj.fields[target], traj.fields[target - 1], cfg.h)
            R = _extracted_radius(vols[target], 2)
            comp = disc_dissipation_rate(R)
            rows.append([cfg.h, "dissipation_rate", integral, comp, abs(integral - comp) / comp])
    write_csv(out / "measures.csv", MEASURES_COLUMNS, rows, cfg.config_hash())
    worst = max(r[4] for r in rows if r[4] == r[4])
    print(f"measures: {len(rows)} rows, worst rel err {worst:.3e}")
    return 0


def cmd_identities(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    report = gaussian_identity_suite(cfg.extent, cfg.points)
    payload = {
        "extent": report.extent, "points": report.points,
        "values": report.values, "expected": report.expected,
        "residuals": report.residuals, "max_abs_residual": report.max_abs_residual,
    }
    (out / "identities.json").write_text(json.dumps(payload, indent=2))
    print(f"identities: max |residual| = {report.max_abs_residual:.3e}")
    return 0 if report.max_abs_residual < 1e-6 else 2


def cmd_converge(cfg: RunConfig) -> int:
    out = _outdir(cfg)
    if cfg.shape != "disc" or cfg.d != 2:
        raise ValueError("converge sweeps are defined for the 2D disc")
    hs = cfg.h_list or (4e-3, 2e-3, 1e-3)
    ns = cfg.n_list or (cfg.n,) * len(hs)
    if len(ns) != len(hs):
        raise ValueError("n list must match h list")
    ref = ReferenceSolution("disc", cfg.radius, 2)
    rows = []
    for h, n in zip(hs, ns):
        sub = dataclasses.replace(cfg, h=h, n=int(n))
        traj = _run_trajectory(sub)
        r_est = _extracted_radius(traj.ledger[-1].volume, 2)
        r_ref = 0.0 if ref.is_extinct(cfg.T) else ref.radius(cfg.T)
        rel = abs(r_est - r_ref) / r_ref if r_ref > 0 else math.nan
        rows.append([h, int(n), r_est, r_ref, rel, traj.pinning_ratio])
    write_csv(out / "converge.csv", CONVERGE_COLUMNS, rows, cfg.config_hash())
    errs = [r[4] for r in sorted(rows, key=lambda r: -r[0])]
    monotone = all(a > b for a, b in zip(errs, errs[1:]))
    if not monotone:
        (out / "failure.json").write_text(json.dumps({
            "check": "converge_monotonicity",
            "errors_coarse_to_fine": errs,
            "note": "radius error did not decrease monotonically in h",
        }, indent=2))
        print("converge: error trend NOT monotone (flagged)", file=sys.stderr)
        return 2
    print(f"converge: errors {', '.join('%.4g' % e for e in errs)} (monotone)")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mboflow", description=__doc__,
                                formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)
    defaults = RunConfig()

    def add_common(sp):
        sp.add_argument("--config", type=str, help="JSON file with RunConfig keys")
        sp.add_argument("--d", type=int)
        sp.add_argument("--n", type=int)
        sp.add_argument("--h", type=float)
        sp.add_argument("--T", type=float)
        sp.add_argument("--shape", type=str, choices=["disc", "stripe", "dumbbell", "random", "full"])
        sp.add_argument("--R0", dest="radius", type=float)
        sp.add_argument("--width", type=float)
        sp.add_argument("--fill", type=float)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--out", type=str)

    sp = sub.add_parser("run", help="threshold-dynamics trajectory")
    add_common(sp)
    sp.add_argument("--snapshot-stride", dest="snapshot_stride", type=int)

    sp = sub.add_parser("interp", help="intermediate-time minimizers on one step")
    add_common(sp)
    sp.add_argument("--step", dest="step_index", type=int)
    sp.add_argument("--r-nodes", dest="r_nodes", type=int)
    sp.add_argument("--qp-tol", dest="qp_tol", type=float)

    sp = sub.add_parser("slope", help="slope sandwich along the r grid")
    add_common(sp)
    sp.add_argument("--step", dest="step_index", type=int)
    sp.add_argument("--r-nodes", dest="r_nodes", type=int)
    sp.add_argument("--qp-tol", dest="qp_tol", type=float)
    sp.add_argument("--K", type=int)

    sp = sub.add_parser("measures", help="pair-correlation and dissipation estimates")
    add_common(sp)
    sp.add_argument("--z-extent", dest="z_extent", type=float)
    sp.add_argument("--z-points", dest="z_points", type=int)

    sp = sub.add_parser("identities", help="free-Gaussian identity suite")
    add_common(sp)
    sp.add_argument("--extent", type=float)
    sp.add_argument("--points", type=int)

    sp = sub.add_parser("converge", help="radius error sweep over h")
    add_common(sp)
    sp.add_argument("--h-list", dest="h_list", type=str,
                    help="comma separated step sizes, e.g. 4e-3,2e-3,1e-3")
    sp.add_argument("--n-list", dest="n_list", type=str,
                    help="comma separated grid sizes matching --h-list")
    return p


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    base = {}
    if getattr(args, "config", None):
        base = json.loads(Path(args.config).read_text())
    merged = dataclasses.asdict(RunConfig())
    for key, value in base.items():
        if key not in merged:
            raise ValueError(f"unknown config key {key!r}")
        merged[key] = value
    for key in merged:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    if isinstance(merged["h_list"], str):
        merged["h_list"] = tuple(float(x) for x in merged["h_list"].split(",") if x)
    else:
        merged["h_list"] = tuple(merged["h_list"])
    if isinstance(merged["n_list"], str):
        merged["n_list"] = tuple(int(x) for x in merged["n_list"].split(",") if x)
    else:
        merged["n_list"] = tuple(int(x) for x in merged["n_list"])
    return RunConfig(**merged).validated()


COMMANDS = {
    "run": cmd_run,
    "interp": cmd_interp,
    "slope": cmd_slope,
    "measures": cmd_measures,
    "identities": cmd_identities,
    "converge": cmd_converge,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = _config_from_args(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        return COMMANDS[args.command](cfg)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
