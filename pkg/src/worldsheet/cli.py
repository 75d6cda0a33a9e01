"""Command-line surface: verify catalog residuals, evolve strings, scan parameters.

Outputs are deterministic: CSV numbers use 12 significant digits with LF line
endings, and every run writes a JSON manifest keyed by a stable digest of its
canonicalized configuration.  A re-run into the same directory with the same
digest refuses to overwrite unless forced.

Exit codes: 0 success or physical termination, 1 numerical/physics failure,
2 usage or validation error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import datetime
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .boundary import boundary_data, edge_equation_residual
from .catalog import catalog_ids, entry_from_id, evaluate_entry, planar_hole
from .dynamics import (
    ConstraintBlowup,
    SimulationConfig,
    diagnostics,
    evolve,
    rotating_orbit_omega,
)
from .errors import InvalidParameters, WorldsheetError

FLOAT_FMT = "%.12e"

_EVOLVE_KEYS = {"schema_version", "initial_data", "grid_points", "dt_fraction",
                "duration", "constraint_tol", "output_stride"}
_SCAN_KEYS = {"schema_version", "scan", "start", "stop", "points",
              "mu0", "mub", "radius"}


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([c if isinstance(c, str) else _fmt(c) for c in row])


def config_digest(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def _prepare_out_dir(out_dir: Path, digest: str, force: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = out_dir / "manifest.json"
    if manifest.exists() and not force:
        try:
            existing = json.loads(manifest.read_text())
        except json.JSONDecodeError:
            return
        if existing.get("config_digest") == digest:
            raise UsageError(
                f"{out_dir} already holds results for digest {digest}; use --force to overwrite")


def _write_manifest(out_dir: Path, command: str, digest: str, started: str,
                    terminal_event: str, outputs: list[Path]) -> None:
    manifest = {
        "command": command,
        "config_digest": digest,
        "code_version": __version__,
        "started_at": started,
        "finished_at": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "terminal_event": terminal_event,
        "outputs": sorted(str(p.name) for p in outputs),
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _utc_now() -> str:
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def _load_config(path: str, allowed_keys: set[str]) -> dict:
    try:
        config = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(config, dict):
        raise UsageError("config must be a JSON object")
    if config.get("schema_version") != 1:
        raise UsageError("config requires schema_version = 1")
    unknown = set(config) - allowed_keys
    if unknown:
        raise UsageError(f"unknown config keys: {sorted(unknown)}")
    return config


def cmd_verify(args) -> int:
    started = _utc_now()
    entries = []
    for entry_id in args.entries:
        try:
            entries.append((entry_id, entry_from_id(entry_id)))
        except (KeyError, InvalidParameters) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    digest = config_digest({"command": "verify", "entries": sorted(args.entries)})
    out_dir = Path(args.out_dir)
    _prepare_out_dir(out_dir, digest, args.force)

    rows = []
    all_pass = True
    for entry_id, entry in entries:
        for quantity, value, expected, residual, ok in evaluate_entry(entry):
            rows.append([entry_id, quantity, value, expected, residual,
                         "true" if ok else "false"])
            all_pass &= ok
    table = out_dir / "residuals.csv"
    _write_csv(table, ["entry", "quantity", "value", "expected", "residual", "pass"],
               rows)
    _write_manifest(out_dir, "verify", digest, started,
                    "all_pass" if all_pass else "residual_failure", [table])
    for row in rows:
        label = "pass" if row[5] == "true" else "FAIL"
        print(f"{label} {row[0]:24s} {row[1]:28s} residual={_fmt(row[4])}")
    return 0 if all_pass else 1


def cmd_evolve(args) -> int:
    started = _utc_now()
    config = _load_config(args.config, _EVOLVE_KEYS)
    digest = config_digest(config)
    out_dir = Path(args.out_dir)
    _prepare_out_dir(out_dir, digest, args.force)
    sim = SimulationConfig(
        initial_data=config["initial_data"],
        duration=float(config["duration"]),
        grid_points=int(config.get("grid_points", 200)),
        dt_fraction=float(config.get("dt_fraction", 0.5)),
        constraint_tol=float(config.get("constraint_tol", 1e-4)),
        output_stride=int(config.get("output_stride", 10)),
    )
    event = None
    try:
        traj = evolve(sim)
        event = traj.terminal_event
        snapshots = traj.snapshots
        status = 0
    except ConstraintBlowup as exc:
        event = "constraint_blowup"
        snapshots = exc.trajectory.snapshots
        status = 1

    n_comp = snapshots[0].positions.shape[1]
    traj_rows, end_rows, diag_rows = [], [], []
    for s in snapshots:
        for idx in range(s.grid_points):
            traj_rows.append([s.time, str(idx)] + list(s.positions[idx]))
        for name, ep in zip(("left", "right"), s.endpoints):
            end_rows.append([s.time, name] + list(ep.position) + list(ep.four_velocity)
                            + [ep.proper_time])
        d = diagnostics(s)
        acc = [e.acceleration_magnitude for e in d.endpoints]
        diag_rows.append([s.time, d.constraint_norms[0], d.constraint_norms[1],
                          d.total_energy, d.angular_momentum,
                          acc[0] if acc[0] is not None else float("nan"),
                          acc[1] if acc[1] is not None else float("nan")])
    comp_names = [f"x{i}" for i in range(n_comp)]
    f_traj = out_dir / "trajectory.csv"
    f_ends = out_dir / "endpoints.csv"
    f_diag = out_dir / "diagnostics.csv"
    _write_csv(f_traj, ["t", "node"] + comp_names, traj_rows)
    _write_csv(f_ends, ["t", "side"] + comp_names + [f"u{i}" for i in range(n_comp)]
               + ["proper_time"], end_rows)
    _write_csv(f_diag, ["t", "constraint_mixed", "constraint_norm", "energy",
                        "angular_momentum", "acc_left", "acc_right"], diag_rows)
    _write_manifest(out_dir, "evolve", digest, started, event,
                    [f_traj, f_ends, f_diag])
    print(f"evolve finished: event={event}, snapshots={len(snapshots)}")
    return status


def _scan_point_hole(rho: float, mu0: float, mub: float) -> tuple[float, float]:
    entry = planar_hole(rho)
    bd = boundary_data(entry.boundary, np.array([[0.0, 0.0]]))
    k = float(bd.edge_trace[0])
    return k, float(edge_equation_residual(bd, mu0, mub)[0])


def cmd_scan(args) -> int:
    started = _utc_now()
    config = _load_config(args.config, _SCAN_KEYS)
    kind = config.get("scan")
    if kind not in ("hole_radius", "orbit_omega"):
        raise UsageError(f"unknown scan kind {kind!r}")
    start, stop = float(config["start"]), float(config["stop"])
    points = int(config["points"])
    if points < 2 or not stop > start:
        raise UsageError("scan needs points >= 2 and stop > start")
    digest = config_digest(config)
    out_dir = Path(args.out_dir)
    _prepare_out_dir(out_dir, digest, args.force)

    values = np.linspace(start, stop, points)
    mu0 = float(config.get("mu0", 1.0))
    mub = float(config.get("mub", 1.0))
    radius = float(config.get("radius", 1.0))

    def hole_row(rho: float) -> list:
        k, residual = _scan_point_hole(rho, mu0, mub)
        return [rho, k, residual, "ok"]

    def orbit_row(ratio: float) -> list:
        w = rotating_orbit_omega(ratio * mub, mub, radius)
        # cross-check: the edge law holds on the matching rotating worldsheet
        entry = entry_from_id(f"helicoid:omega={w},R={radius}")
        bd = boundary_data(entry.boundary, np.array([[0.0]]))
        residual = float(edge_equation_residual(bd, ratio * mub, mub)[0])
        return [ratio, w, w * radius, residual, "ok"]

    if kind == "hole_radius":
        worker = hole_row
        header = ["rho", "edge_trace", "edge_residual", "status"]
    else:
        worker = orbit_row
        header = ["tension_ratio", "omega", "omega_radius", "edge_residual", "status"]
    rows = []
    failures = 0
    with concurrent.futures.ThreadPoolExecutor(max_workers=max(1, args.threads)) as pool:
        futures = [pool.submit(worker, float(v)) for v in values]
        for v, fut in zip(values, futures):
            try:
                rows.append(fut.result())
            except WorldsheetError as exc:
                failures += 1
                rows.append([float(v)] + ["nan"] * (len(header) - 2)
                            + [f"failed: {exc}"])
    table = out_dir / "scan.csv"
    _write_csv(table, header, rows)
    _write_manifest(out_dir, "scan", digest, started,
                    "complete" if failures == 0 else "partial_failure", [table])
    print(f"scan wrote {len(rows)} points to {table}")
    return 0 if failures == 0 else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="worldsheet",
        description="Geometry and dynamics of relativistic sheets with massive edges")
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", help="check catalog residual tables")
    p_verify.add_argument("--entries", nargs="+", required=True,
                          metavar="ID[:k=v,...]",
                          help=f"catalog ids, e.g. {', '.join(catalog_ids())}")
    p_verify.add_argument("--out-dir", default="out", help="output directory")
    p_verify.add_argument("--force", action="store_true")
    p_verify.set_defaults(func=cmd_verify)

    p_evolve = sub.add_parser("evolve", help="run a string simulation")
    p_evolve.add_argument("--config", required=True, help="JSON simulation config")
    p_evolve.add_argument("--out-dir", default="out", help="output directory")
    p_evolve.add_argument("--force", action="store_true")
    p_evolve.set_defaults(func=cmd_evolve)

    p_scan = sub.add_parser("scan", help="scan a parameter range")
    p_scan.add_argument("--config", required=True, help="JSON scan definition")
    p_scan.add_argument("--out-dir", default="out", help="output directory")
    p_scan.add_argument("--force", action="store_true")
    p_scan.add_argument("--threads", type=int, default=1, help="scan worker threads")
    p_scan.set_defaults(func=cmd_scan)

    parser.add_argument("--seed", type=int, default=None,
                        help="reserved; no stochastic components yet")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidParameters as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except WorldsheetError as exc:
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
