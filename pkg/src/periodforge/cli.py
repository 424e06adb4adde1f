"""Command-line entry point: solve, sweep, limits, mesh and verify.

Exit codes: 0 success, 1 other errors, 2 no bracket, 3 accuracy or
closure failure, 4 limit threshold failure, 64 usage errors.
"""

import argparse
import csv
import json
import logging
import math
import sys
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, TextIO, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic import ValidationError as PydanticValidationError

from . import __version__
from .core.config import ExportFormat, PeriodForgeConfig, get_config, set_config
from .core.exceptions import (
    AccuracyError,
    BracketError,
    ConfigurationError,
    LimitCheckError,
    PeriodForgeError,
    SymmetryError,
)
from .core.params import SurfaceParams
from .curve import residue_dh
from .limits import (
    check_I2_I4_limits,
    check_residue_limit,
    check_weierstrass_convergence,
    check_x1_limits,
    limit_c_at_x1,
)
from .mesh import (
    assemble_piece,
    build_grid,
    discrete_checks,
    export_mesh,
    fit_catenoidal_end,
    integrate_surface,
    tile_surface,
)
from .period_solver import SolveConfig, solve_lambda, sweep_x, verify_periods

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_BRACKET = 2
EXIT_ACCURACY = 3
EXIT_LIMIT = 4
EXIT_USAGE = 64

PARAMS_SCHEMA = "periodforge.params/1"
SWEEP_SCHEMA = "periodforge.sweep/1"
MESH_SCHEMA = "periodforge.mesh_checks/1"
VERIFY_SCHEMA = "periodforge.verify/1"

SWEEP_COLUMNS = (
    "schema",
    "x",
    "lambda",
    "y_re",
    "y_im",
    "alpha",
    "c",
    "c1",
    "c2",
    "res_p1",
    "res_p2",
    "res_p3",
    "res_residue",
    "scaled_residue",
)

DEFAULT_X_SEQ = {
    "x0": (1e-2, 1e-3, 1e-4),
    "wdata": (1e-2, 1e-3, 1e-4),
    "residue": (1e-4, 1e-3, 1e-2),
    "x1": (0.9, 0.99, 0.999),
}


class UsageError(Exception):
    """Malformed or inconsistent command-line flags."""

    pass


class Command(str, Enum):
    SOLVE = "solve"
    SWEEP = "sweep"
    LIMITS = "limits"
    MESH = "mesh"
    VERIFY = "verify"


class LimitKind(str, Enum):
    X0 = "x0"
    X1 = "x1"
    WDATA = "wdata"
    RESIDUE = "residue"


class RunConfig(BaseModel):
    """Validated flags of one invocation."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    command: Command
    x: Optional[float] = Field(None, gt=0.0, lt=1.0)
    rho: float = Field(0.0, gt=-math.pi / 2, le=0.0)
    lambda_lo: Optional[float] = Field(None, gt=1.0)
    lambda_hi: Optional[float] = Field(None, gt=1.0)
    tol: Optional[float] = Field(None, gt=0.0)
    root_tol: Optional[float] = Field(None, gt=0.0)

    x_min: Optional[float] = Field(None, gt=0.0, lt=1.0)
    x_max: Optional[float] = Field(None, gt=0.0, lt=1.0)
    steps: int = Field(1, ge=1)
    spacing: str = Field("log", pattern="^(log|linear)$")

    which: Optional[LimitKind] = None
    lam: float = Field(2.0, gt=1.0)
    y: complex = complex(0.0, 0.5)
    x_seq: Optional[Tuple[float, ...]] = None
    C: float = Field(1.0, gt=0.0)

    params_path: Optional[Path] = None
    resolution: int = Field(64, ge=8)
    copies: int = Field(0, ge=0)
    format: ExportFormat = ExportFormat.OBJ
    eps_end: Optional[float] = Field(None, gt=0.0)
    tree: str = Field("bfs", pattern="^(bfs|dfs)$")

    out: Optional[Path] = None

    @field_validator("y")
    @classmethod
    def check_y(cls, v: complex) -> complex:
        if not (v.imag > 0.0 and abs(v) < 1.0):
            raise ValueError(f"--y must satisfy Im y > 0 and |y| < 1, got {v}")
        return v

    @model_validator(mode="after")
    def check_consistency(self) -> "RunConfig":
        if self.command == Command.SOLVE and self.x is None:
            raise ValueError("solve requires --x")
        if (self.lambda_lo is None) != (self.lambda_hi is None):
            raise ValueError("--lambda-lo and --lambda-hi go together")
        if self.lambda_lo is not None and not self.lambda_lo < self.lambda_hi:
            raise ValueError("--lambda-lo must be below --lambda-hi")
        if self.command == Command.SWEEP:
            if self.x_min is None or self.x_max is None:
                raise ValueError("sweep requires --x-min and --x-max")
            if self.x_min > self.x_max or (self.steps > 1 and self.x_min == self.x_max):
                raise ValueError("sweep requires --x-min < --x-max")
        if self.command == Command.LIMITS and self.which is None:
            raise ValueError("limits requires --which")
        if self.command in (Command.MESH, Command.VERIFY) and self.params_path is None:
            raise ValueError(f"{self.command.value} requires --params")
        if self.x_seq is not None and not all(0.0 < v < 1.0 for v in self.x_seq):
            raise ValueError("--x-seq values must lie in (0, 1)")
        return self

    @property
    def bracket(self) -> Optional[Tuple[float, float]]:
        if self.lambda_lo is None:
            return None
        return (self.lambda_lo, self.lambda_hi)

    def solve_config(self, x: float) -> SolveConfig:
        data: Dict[str, Any] = {"x": x, "rho": self.rho, "lambda_bracket": self.bracket}
        if self.tol is not None:
            data["tol_quad"] = self.tol
        if self.root_tol is not None:
            data["tol_root"] = self.root_tol
        return SolveConfig(**data)

    def x_grid(self) -> List[float]:
        if self.steps == 1:
            return [self.x_min]
        if self.spacing == "log":
            return np.geomspace(self.x_min, self.x_max, self.steps).tolist()
        return np.linspace(self.x_min, self.x_max, self.steps).tolist()


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        self.print_usage(sys.stderr)
        raise UsageError(message)


def parse_complex(text: str) -> complex:
    """Parse values like ``0.5i``, ``0.3+0.5j`` or ``-0.2+0.4i``."""
    try:
        return complex(text.strip().replace(" ", "").replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a complex number: {text!r}")


def parse_float_list(text: str) -> Tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated list of numbers: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="periodforge", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"periodforge {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="-v info, -vv debug")
    parser.add_argument("--config", type=Path, help="JSON or YAML configuration overrides")
    parser.add_argument("--threads", type=int, help="Worker processes for limit sequences")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    solve = sub.add_parser("solve", help="Solve lambda at fixed x and rho")
    _add_solver_flags(solve)
    solve.add_argument("--x", type=float, required=True)
    solve.add_argument("--out", type=Path, help="Params JSON path, stdout when omitted")

    sweep = sub.add_parser("sweep", help="Continue the solution along x")
    _add_solver_flags(sweep)
    sweep.add_argument("--x-min", type=float, required=True)
    sweep.add_argument("--x-max", type=float, required=True)
    sweep.add_argument("--steps", type=int, default=1)
    sweep.add_argument("--spacing", choices=("log", "linear"), default="log")
    sweep.add_argument("--out", type=Path, help="CSV path, stdout when omitted")

    limits = sub.add_parser("limits", help="Check the closed-form limits")
    limits.add_argument("--which", choices=[k.value for k in LimitKind], required=True)
    limits.add_argument("--rho", type=float, default=0.0)
    limits.add_argument("--lambda", dest="lam", type=float, default=2.0)
    limits.add_argument("--y", type=parse_complex, default=complex(0.0, 0.5))
    limits.add_argument("--x-seq", type=parse_float_list)
    limits.add_argument("--C", dest="C", type=float, default=1.0)
    limits.add_argument("--out", type=Path, help="Output directory for CSV reports")

    mesh = sub.add_parser("mesh", help="Mesh the fundamental piece of a solved tuple")
    mesh.add_argument("--params", dest="params_path", type=Path, required=True)
    mesh.add_argument("--resolution", type=int, default=64)
    mesh.add_argument("--copies", type=int, default=0)
    mesh.add_argument("--format", choices=[f.value for f in ExportFormat], default="obj")
    mesh.add_argument("--eps-end", type=float)
    mesh.add_argument("--tree", choices=("bfs", "dfs"), default="bfs")
    mesh.add_argument("--out", type=Path, required=True)

    verify = sub.add_parser("verify", help="Recompute period residuals of a params file")
    verify.add_argument("--params", dest="params_path", type=Path, required=True)
    verify.add_argument("--tol", type=float)
    verify.add_argument("--out", type=Path)
    return parser


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--rho", type=float, default=0.0)
    parser.add_argument("--lambda-lo", type=float)
    parser.add_argument("--lambda-hi", type=float)
    parser.add_argument("--tol", type=float, help="Quadrature tolerance")
    parser.add_argument("--root-tol", type=float, help="Root tolerance on lambda")


_GLOBAL_FLAGS = ("verbose", "config", "threads")


def parse_run(argv: Optional[Sequence[str]] = None) -> Tuple[RunConfig, argparse.Namespace]:
    """Parse and validate flags.

    Raises:
        UsageError: If flags are missing, malformed or inconsistent
    """
    ns = build_parser().parse_args(argv)
    if ns.command is None:
        raise UsageError("a command is required")
    fields = {k: v for k, v in vars(ns).items() if k not in _GLOBAL_FLAGS and v is not None}
    try:
        return RunConfig(**fields), ns
    except PydanticValidationError as e:
        raise UsageError(_first_error(e))


def _first_error(error: PydanticValidationError) -> str:
    first = error.errors()[0]
    where = ".".join(str(p) for p in first.get("loc", ()))
    return f"{where}: {first['msg']}" if where else first["msg"]


def configure_logging(verbosity: int, config: PeriodForgeConfig) -> None:
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, config.log_level)
    logging.basicConfig(
        level=level,
        stream=sys.stderr,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def _dump_json(record: Dict[str, Any], path: Optional[Path]) -> None:
    text = json.dumps(record, indent=2, sort_keys=True) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")


def load_params(path: Path) -> SurfaceParams:
    """Read a params JSON written by ``solve``.

    Raises:
        ConfigurationError: If the file is missing or not a params record
    """
    try:
        record = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as e:
        raise ConfigurationError(f"Cannot read params file {path}: {e}")
    if record.get("schema") != PARAMS_SCHEMA:
        raise ConfigurationError(f"{path} is not a {PARAMS_SCHEMA} document")
    try:
        return SurfaceParams.from_record(record)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigurationError(f"Invalid params in {path}: {e}")


def params_document(params: SurfaceParams, tol: float) -> Dict[str, Any]:
    """Solve output: the tuple, its period residuals and the tolerances used."""
    report = verify_periods(params, tol)
    return {
        "schema": PARAMS_SCHEMA,
        "version": __version__,
        **params.to_record(),
        "c1": report.c1,
        "c2": report.c2,
        "residuals": report.to_record(),
        "quadrature_tol": tol,
    }


# ---------------------------------------------------------------------------
# commands


def cmd_solve(run: RunConfig) -> int:
    config = run.solve_config(run.x)
    params = solve_lambda(config)
    document = params_document(params, config.tol_quad)
    _dump_json(document, run.out)
    residuals = document["residuals"]
    worst = max(abs(residuals[k]) for k in ("p1", "p2", "p3", "residue"))
    if worst >= get_config().verify_tol:
        raise AccuracyError("period closure", worst, get_config().verify_tol)
    return EXIT_OK


def sweep_rows(run: RunConfig) -> List[List[str]]:
    """CSV rows of a sweep, ending with a truncation marker when cut short."""
    grid = run.x_grid()
    base = run.solve_config(grid[0])
    curve = sweep_x(run.rho, grid, base)
    rows: List[List[str]] = []
    for params in curve:
        report = verify_periods(params, base.tol_quad)
        res = residue_dh(params).real
        rows.append(
            [
                SWEEP_SCHEMA,
                repr(params.x),
                repr(params.lam),
                repr(params.y.real),
                repr(params.y.imag),
                repr(params.alpha),
                repr(params.c),
                repr(report.c1),
                repr(report.c2),
                repr(report.period_residuals[0]),
                repr(report.period_residuals[1]),
                repr(report.period_residuals[2]),
                repr(report.residue_reality),
                repr(params.lam / params.x * res),
            ]
        )
    if curve.truncated:
        marker = [SWEEP_SCHEMA, repr(curve.truncated_at), "truncated"]
        marker += [""] * (len(SWEEP_COLUMNS) - len(marker) - 1) + [curve.reason or ""]
        rows.append(marker)
    return rows


def _write_csv(header: Sequence[str], rows: List[List[str]], handle: TextIO) -> None:
    writer = csv.writer(handle, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)


def cmd_sweep(run: RunConfig) -> int:
    rows = sweep_rows(run)
    if run.out is None:
        _write_csv(SWEEP_COLUMNS, rows, sys.stdout)
    else:
        run.out.parent.mkdir(parents=True, exist_ok=True)
        with open(run.out, "w", encoding="utf-8", newline="") as fh:
            _write_csv(SWEEP_COLUMNS, rows, fh)
    logger.info(f"Sweep wrote {len(rows)} rows")
    return EXIT_OK


def run_limit_check(run: RunConfig):
    """LimitReport of the selected check with default sequences filled in."""
    which = run.which
    x_seq = list(run.x_seq or DEFAULT_X_SEQ[which.value])
    if which == LimitKind.X0:
        return check_I2_I4_limits(run.rho, run.lam, x_seq)
    if which == LimitKind.WDATA:
        return check_weierstrass_convergence(run.rho, run.lam, run.C, x_seq)
    if which == LimitKind.X1:
        report = check_x1_limits(run.y, x_seq)
        logger.info(f"c2 at x = 1 for y={run.y}: {limit_c_at_x1(run.y):.12g}")
        return report
    curve = sweep_x(run.rho, sorted(x_seq), run.solve_config(min(x_seq)))
    return check_residue_limit(run.rho, list(curve))


def cmd_limits(run: RunConfig) -> int:
    report = run_limit_check(run)
    if run.out is None:
        report.write_csv(sys.stdout)
    else:
        run.out.mkdir(parents=True, exist_ok=True)
        with open(run.out / f"limits_{report.check}.csv", "w", encoding="utf-8", newline="") as fh:
            report.write_csv(fh)
    report.assert_passed()
    return EXIT_OK


def cmd_mesh(run: RunConfig) -> int:
    params = load_params(run.params_path)
    grid = build_grid(params, run.resolution, eps_end=run.eps_end)
    half = integrate_surface(params, grid, tree=run.tree)
    piece = assemble_piece(half, params)
    report = discrete_checks(piece, params)
    end = fit_catenoidal_end(piece, params)

    export_mesh(piece, run.format, run.out)
    outputs = [str(run.out)]
    if run.copies > 0:
        tiled = tile_surface(piece, run.copies)
        tiled_path = run.out.with_name(f"{run.out.stem}_tiled{run.out.suffix}")
        export_mesh(tiled, run.format, tiled_path)
        outputs.append(str(tiled_path))

    sidecar = {
        "schema": MESH_SCHEMA,
        "version": __version__,
        "params": params.to_record(),
        "resolution": run.resolution,
        "copies": run.copies,
        "outputs": outputs,
        "axis": piece.info["axis_name"],
        "cycle_residual": piece.info["cycle_residual"],
        "cut_residual": piece.info["cut_residual"],
        "weld_mismatch": piece.info["weld_mismatch"],
        "checks": report.to_dict(),
        "end_fit": {"eta": end.eta, "mu": end.mu, "rms": end.rms, "predicted_eta": end.predicted_eta},
    }
    _dump_json(sidecar, run.out.with_name(f"{run.out.stem}.checks.json"))
    return EXIT_OK


def cmd_verify(run: RunConfig) -> int:
    params = load_params(run.params_path)
    tol = run.tol if run.tol is not None else get_config().quad_tol
    report = verify_periods(params, tol)
    document = {
        "schema": VERIFY_SCHEMA,
        "version": __version__,
        "params": params.to_record(),
        "residuals": report.to_record(),
        "contributions": {k: list(v) for k, v in report.contributions.items()},
        "passed": report.passed(),
    }
    _dump_json(document, run.out)
    if not report.passed():
        worst = max(report.max_period_residual(), report.residue_reality)
        raise AccuracyError("period closure", worst, get_config().verify_tol)
    return EXIT_OK


COMMANDS = {
    Command.SOLVE: cmd_solve,
    Command.SWEEP: cmd_sweep,
    Command.LIMITS: cmd_limits,
    Command.MESH: cmd_mesh,
    Command.VERIFY: cmd_verify,
}


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, (UsageError, ConfigurationError)):
        return EXIT_USAGE
    if isinstance(error, BracketError):
        return EXIT_BRACKET
    if isinstance(error, (AccuracyError, SymmetryError)):
        return EXIT_ACCURACY
    if isinstance(error, LimitCheckError):
        return EXIT_LIMIT
    return EXIT_FAILURE


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one command and return its exit code."""
    try:
        run, ns = parse_run(argv)
        config = PeriodForgeConfig.from_file(ns.config, apply_env=True) if ns.config else get_config()
        if ns.threads is not None:
            config = config.model_copy(update={"threads": max(1, ns.threads)})
        set_config(config)
        configure_logging(ns.verbose, config)
        return COMMANDS[run.command](run)
    except UsageError as e:
        print(f"periodforge: usage error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as e:
        # pydantic ValidationError included: inputs rejected past flag parsing
        print(f"periodforge: invalid input: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PeriodForgeError as e:
        code = exit_code_for(e)
        print(f"periodforge: {type(e).__name__}: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
