"""Command-line front end.

    sqgsheets solve --eps 0 --d 1
    sqgsheets continue --eps-max 0.1 --eps-step 0.01
    sqgsheets probe-multipliers
    sqgsheets point-vortex --m 2 --d 1
    sqgsheets verify --eps 0.05

Settings may also come from a flat ``key = value`` file (``--config``) whose
keys are the flag names; flags given on the command line win.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import diagnostics as dg
from .contour import (
    F_from_velocity,
    eval_F,
    eval_F_literal,
    eval_G,
    eval_G_literal,
    verify_strength,
    verify_tangency,
)
from .errors import NonConvergenceError, NumericError
from .kernels import measure_multipliers, write_multipliers_csv
from .linop import assemble_blocks, write_blocks_csv
from .numfmt import fmt, to_json
from .pointvortex import PointSystem, integrate_rk4, rhs, wstar, write_trajectory_csv
from .solver import SolverConfig, continuation, eps_grid, max_threads, newton_solve, make_record
from .trig import Grid

EXIT_OK, EXIT_USAGE, EXIT_NONCONVERGENCE, EXIT_NUMERIC = 0, 2, 3, 4

SUBCOMMANDS = ("solve", "continue", "probe-multipliers", "point-vortex", "verify")


@dataclass
class RunConfig:
    subcommand: str = ""
    eps: float = 0.0
    eps_max: float = 0.1
    eps_step: float = 0.01
    d: float = 1.0
    modes: int = 32
    grid: int = 256
    tol: float = 1e-9
    max_iter: int = 25
    eps_switch: float = 0.02
    out_dir: str = "."
    format: str = "json"
    strict_display_formulas: bool = False
    threads: int = 1
    record_timings: bool = False
    m: int = 2
    t_end: float = 10.0
    h: float = 1e-3
    stride: int = 1

    def solver(self) -> SolverConfig:
        threads = max_threads() if self.threads == 0 else self.threads
        return SolverConfig(
            N=self.modes, M=self.grid, tol=self.tol, max_iter=self.max_iter, eps_switch=self.eps_switch, threads=threads
        )


class UsageError(Exception):
    pass


_FLAG_TYPES = {f.name: f.type for f in fields(RunConfig)}
_BOOL_FLAGS = {"strict_display_formulas", "record_timings"}


def _key(name: str) -> str:
    return name.strip().replace("-", "_")


def _convert(name: str, raw: str):
    kind = _FLAG_TYPES[name]
    try:
        if name in _BOOL_FLAGS:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw.strip()
    except ValueError:
        raise UsageError(f"malformed value for {name.replace('_', '-')}: {raw!r}") from None


def read_config_file(path: str | Path) -> dict:
    out = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from None
    for n, line in enumerate(text.splitlines(), 1):
        s = line.split("#", 1)[0].strip()
        if not s:
            continue
        if "=" not in s:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        k, v = s.split("=", 1)
        name = _key(k)
        if name not in _FLAG_TYPES or name == "subcommand":
            raise UsageError(f"{path}:{n}: unknown key {k.strip()!r}")
        out[name] = _convert(name, v)
    return out


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="flat key = value file; flags override its values")
    common.add_argument("--eps", type=float, help="scale parameter (start of the sweep for continue)")
    common.add_argument("--eps-max", type=float, help="last eps of a sweep (default 0.1)")
    common.add_argument("--eps-step", type=float, help="sweep increment (default 0.01)")
    common.add_argument("--d", type=float, help="half-distance between the sheet centres (default 1)")
    common.add_argument("--modes", type=int, help="Fourier modes N (default 32)")
    common.add_argument("--grid", type=int, help="grid nodes M (default 256)")
    common.add_argument("--tol", type=float, help="residual sup-norm tolerance (default 1e-9)")
    common.add_argument("--max-iter", type=int, help="Newton iteration cap (default 25)")
    common.add_argument("--eps-switch", type=float, help="|eps| below which the regularized path is used (0.02)")
    common.add_argument("--out-dir", help="output directory (default .)")
    common.add_argument("--format", choices=("json", "csv"), help="record file format (default json)")
    common.add_argument(
        "--strict-display-formulas",
        action="store_const",
        const=True,
        help="also evaluate the literal r'(xb) transcription of F, G and report its gap",
    )
    common.add_argument("--threads", type=int, help="Jacobian worker threads; 0 = all cores (default 1)")
    common.add_argument(
        "--record-timings", action="store_const", const=True, help="store wall_ms in records (breaks byte-identity)"
    )
    common.add_argument("--m", type=int, help="number of point vortices (default 2)")
    common.add_argument("--t-end", type=float, help="point-vortex end time (default 10)")
    common.add_argument("--h", type=float, help="RK4 step (default 1e-3)")
    common.add_argument("--stride", type=int, help="write every stride-th trajectory sample (default 1)")

    p = argparse.ArgumentParser(prog="sqgsheets", description="Traveling SQG vortex-sheet pairs.")
    sub = p.add_subparsers(dest="subcommand", metavar="{" + ",".join(SUBCOMMANDS) + "}")
    helps = {
        "solve": "Newton solve at one eps; writes one record and its curve file",
        "continue": "warm-started sweep in eps; writes records, curves and wtable.csv",
        "probe-multipliers": "kernel multipliers and origin blocks; writes multipliers.csv and blocks.csv",
        "point-vortex": "RK4 point-vortex run; writes trajectory.csv and wstar.json",
        "verify": "solve, then cross-check through the velocity path; writes verify.json",
    }
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=helps[name], argument_default=argparse.SUPPRESS)
    return p


def parse_config(args: Sequence[str]) -> RunConfig:
    parser = build_parser()
    if not args:
        parser.print_usage(sys.stderr)
        raise UsageError("a subcommand is required")
    ns = vars(parser.parse_args(list(args)))
    sub = ns.pop("subcommand", None)
    if sub is None:
        parser.print_usage(sys.stderr)
        raise UsageError("a subcommand is required")
    merged: dict = {}
    if "config" in ns:
        merged.update(read_config_file(ns.pop("config")))
    given = {_key(k): v for k, v in ns.items()}
    merged.update(given)
    if sub == "solve" and ("eps_max" in merged or "eps_step" in merged):
        raise UsageError("solve takes a single --eps; --eps-max/--eps-step belong to continue")
    cfg = RunConfig(subcommand=sub, **merged)
    try:
        cfg.solver()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if sub == "continue" and cfg.eps_max < cfg.eps:
        raise UsageError("--eps-max must not be below --eps")
    if cfg.d < 1.0:
        raise UsageError("--d must be at least 1")
    if cfg.stride < 1:
        raise UsageError("--stride must be positive")
    return cfg


# subcommands -------------------------------------------------------------------


def _out(cfg: RunConfig) -> Path:
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_records(cfg: RunConfig, records, out: Path) -> Path:
    if cfg.format == "csv":
        path = out / "records.csv"
        dg.write_records_csv(records, path, cfg.record_timings)
    else:
        path = out / "records.json"
        dg.write_records_json(records, path, cfg.record_timings)
    return path


def _speed_report(W: float, d: float) -> str:
    a, b = 1.0 / (2.0 * d) ** 2, 1.0 / (2.0 * d**2)
    sign = "+" if W > 0 else "-" if W < 0 else "0"
    closest = "1/(2d)^2" if abs(abs(W) - a) <= abs(abs(W) - b) else "1/(2d^2)"
    return (
        f"W = {fmt(W)} (sign {sign}, translation along {sign}e2); |W| is closest to {closest}\n"
        f"  candidate 1/(2d)^2 = {fmt(a)}\n  candidate 1/(2d^2) = {fmt(b)}"
    )


def cmd_solve(cfg: RunConfig) -> int:
    sc = cfg.solver()
    sol = newton_solve(cfg.eps, cfg.d, None, sc)
    rec = make_record(sol, sc)
    out = _out(cfg)
    path = _write_records(cfg, [rec], out)
    dg.write_curve_csv(sol.state, sc.grid, out / dg.curve_filename(cfg.eps))
    print(f"eps = {fmt(cfg.eps)}, d = {fmt(cfg.d)}: converged in {sol.iterations} iterations, residual {sol.residual_sup:.3e}")
    print(_speed_report(rec.W, cfg.d))
    print(f"max |p_j| = {fmt(np.max(np.abs(rec.p_coeffs)))}, max |q_j| = {fmt(np.max(np.abs(rec.q_coeffs)))}")
    print(f"wrote {path}")
    return EXIT_OK


def cmd_continue(cfg: RunConfig) -> int:
    sc = cfg.solver()
    values = eps_grid(cfg.eps, cfg.eps_max, cfg.eps_step)
    records = continuation(values, cfg.d, sc)
    seed, steps = records[0], records[1:]
    out = _out(cfg)
    path = _write_records(cfg, steps, out)
    for r in steps:
        dg.write_curve_csv(r.state(), sc.grid, out / dg.curve_filename(r.eps))
    dg.write_wtable_csv(steps, out / "wtable.csv")
    print(f"seed eps = {fmt(seed.eps)}: " + _speed_report(seed.W, cfg.d))
    print(f"{len(steps)} records written to {path}")
    if steps:
        print(f"last accepted eps = {fmt(steps[-1].eps)}")
    try:
        fit = dg.wslope_fit([r.eps for r in steps], [r.W for r in steps], W0=seed.W)
        print(f"W - W0 ~ {fit.slope:.6g} |eps|^{fit.exponent:.4f}")
    except ValueError as exc:
        print(f"speed fit skipped: {exc}")
    if len(records) < len(values):
        print(f"sweep stopped before eps_max; next eps {fmt(values[len(records)])} did not converge", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    return EXIT_OK


def cmd_probe(cfg: RunConfig) -> int:
    grid = Grid(cfg.grid)
    table = measure_multipliers(cfg.modes, grid)
    out = _out(cfg)
    write_multipliers_csv(table, out / "multipliers.csv")
    ops = [assemble_blocks(table, "paper-form"), assemble_blocks(table, "measured")]
    write_blocks_csv(ops, out / "blocks.csv")
    fine = measure_multipliers(min(8, cfg.modes), Grid(2 * cfg.grid))
    print(f"c_M = {fmt(table.c_M)} at M = {cfg.grid}")
    print("j  mu_j(M)  mu_j(2M)  drift  lambda_j(M)  lambda_j(2M)")
    for k in range(fine.N):
        print(
            f"{k + 1}  {table.mu[k]:.10g}  {fine.mu[k]:.10g}  {fine.mu[k] - table.mu[k]:.6g}"
            f"  {table.lam[k]:.10g}  {fine.lam[k]:.10g}"
        )
    det = ops[1].det()
    print(f"measured |det Q_1| = {abs(det[0]):.3e} (translation mode); min |det Q_j|, j >= 2: {np.min(np.abs(det[1:])):.6g}")
    print(f"wrote {out / 'multipliers.csv'} and {out / 'blocks.csv'}")
    return EXIT_OK


def cmd_point_vortex(cfg: RunConfig) -> int:
    sys0 = PointSystem.lattice(cfg.m, cfg.d)
    traj = integrate_rk4(sys0, cfg.t_end, cfg.h)
    out = _out(cfg)
    write_trajectory_csv(traj, out / "trajectory.csv", cfg.stride)
    Wv = wstar(cfg.m, cfg.d, form="derivation")
    Wd = wstar(cfg.m, cfg.d, form="displayed")
    v0 = rhs(sys0)
    expected = sys0.positions + Wv * traj.t[-1] * np.array([0.0, 1.0])
    dist0 = np.linalg.norm(traj.z[:, 0] - traj.z[:, 1], axis=1)
    report = {
        "m": cfg.m,
        "d": cfg.d,
        "wstar": Wv,
        "wstar_displayed_form": Wd,
        "initial_velocities": v0.tolist(),
        "uniform_translation": bool(np.allclose(v0, v0[0], rtol=0, atol=1e-14)),
        "t_end": float(traj.t[-1]),
        "endpoint_deviation": float(np.max(np.abs(traj.z[-1] - expected))),
        "distance_drift_01": float(np.max(np.abs(dist0 - dist0[0]))),
    }
    (out / "wstar.json").write_text(to_json(report) + "\n")
    print(f"wstar = {fmt(Wv)} (displayed-sum form {fmt(Wd)})")
    print(f"endpoint deviation from z(0) + wstar t e2: {report['endpoint_deviation']:.3e}")
    print(f"distance drift |z0 - z1|: {report['distance_drift_01']:.3e}")
    if not report["uniform_translation"]:
        print("initial velocities differ between points: the lattice does not translate rigidly")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    sc = cfg.solver()
    if cfg.eps == 0.0:
        raise UsageError("verify needs eps != 0 (the velocity path is singular at eps = 0)")
    n = max(1, int(np.ceil(abs(cfg.eps) / cfg.eps_step - 1e-9)))
    values = [cfg.eps * k / n for k in range(n + 1)]
    records = continuation(values, cfg.d, sc)
    if len(records) < len(values):
        print(f"could not reach eps = {fmt(cfg.eps)}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    st = records[-1].state()
    grid = sc.grid
    tang = verify_tangency(st, grid)
    vals, K = verify_strength(st, grid)
    Fd, Fr = eval_F(st, grid, "direct"), eval_F(st, grid, "regularized")
    (Gd, _), (Gr, _) = eval_G(st, grid, "direct"), eval_G(st, grid, "regularized")
    Fauto = eval_F(st, grid, "auto", sc.eps_switch)
    report = {
        "eps": st.eps,
        "d": st.d,
        "W": st.W,
        "tangency_sup": float(np.max(np.abs(tang))),
        "strength_mean": float(np.mean(vals)),
        "strength_std": float(np.std(vals)),
        "strength_rel_std": float(np.std(vals) / abs(np.mean(vals))),
        "K": K,
        "dual_path_gap_F": float(np.max(np.abs(Fd - Fr))),
        "dual_path_gap_G": float(np.max(np.abs(Gd - Gr))),
        "cross_path_gap_F": float(np.max(np.abs(F_from_velocity(st, grid) - Fauto))),
        "min_curvature": records[-1].min_curvature,
    }
    if cfg.strict_display_formulas:
        report["literal_gap_F"] = float(np.max(np.abs(eval_F_literal(st, grid) - Fauto)))
        report["literal_gap_G"] = float(np.max(np.abs(eval_G_literal(st, grid)[0] - eval_G(st, grid)[0])))
    out = _out(cfg)
    (out / "verify.json").write_text(to_json(report) + "\n")
    for k, v in report.items():
        print(f"{k} = {fmt(v) if isinstance(v, float) else v}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "continue": cmd_continue,
    "probe-multipliers": cmd_probe,
    "point-vortex": cmd_point_vortex,
    "verify": cmd_verify,
}


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        cfg = parse_config(argv)
        return COMMANDS[cfg.subcommand](cfg)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code) if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"sqgsheets: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"sqgsheets: error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        print(f"sqgsheets: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"sqgsheets: numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
