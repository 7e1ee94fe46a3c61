"""
Command-line frontend: ringlab <subcommand> [flags].

Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure.
Errors are reported on stderr as one JSON line.
"""

import argparse
import json
import logging
import math
import os
import sys
from typing import Any, Callable, Dict, List, Optional

from dotenv import dotenv_values
from pydantic import BaseModel

from ringlab.config import settings
from ringlab.elliptic import complete_E, complete_K, invert_product, jacobi_sn_cn_dn
from ringlab.exceptions import NUMERICAL_ERRORS, BelowCriticalError, NoLumpError
from ringlab.gpe_dynamics import (
    align_to_profile,
    boost,
    boost_energy,
    boost_levels,
    boost_residual,
    default_seed_descriptor,
    eigen_residual,
    evolve,
    fit_drift,
    make_seed,
    measure,
    read_snapshot,
    relax_ground_state,
    track_moving_lump,
    write_snapshot,
)
from ringlab.ring_particle import (
    ground_level,
    level_energy,
    level_velocity,
    modified_time_reversal,
    spectrum,
)
from ringlab.schemas import (
    Branch,
    BoostRunConfig,
    ConvergeRunConfig,
    EllipticRunConfig,
    EvolutionConfig,
    EvolutionMode,
    EvolveRunConfig,
    RelaxRunConfig,
    RingRunConfig,
    RunConfig,
    ScanRunConfig,
    StationaryRunConfig,
    SweepConfig,
    SweepMode,
)
from ringlab.soliton_analytic import (
    CRITICAL_COUPLING,
    energy_functional,
    profile_norm,
    sample_profile,
    select_ground_branch,
    solve_soliton_branch,
    uniform_branch,
)
from ringlab.storage import records_to_csv, write_json, write_records
from ringlab.tasks.convergence_tasks import convergence_table
from ringlab.tasks.sweep_tasks import relax_lump, scan_alpha, scan_lambda, uniform_energy_at_flux

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NUMERICAL = 2

# Config-file spellings that differ from the model field names
KEY_ALIASES = {
    "lambda": "coupling",
    "n": "grid_size",
    "ns": "grid_sizes",
}
FLOAT_LIST_KEYS = {"lambdas", "alphas", "dts"}
INT_LIST_KEYS = {"grid_sizes"}


class UsageError(Exception):
    def __init__(self, message: str, usage: str):
        self.usage = usage
        super().__init__(message)


class RingLabArgumentParser(argparse.ArgumentParser):
    """Parser that raises instead of exiting so run() can map the exit code"""

    def error(self, message):
        raise UsageError(message, self.format_usage())


# Value parsing
def parse_values(text: str, cast: Callable[[str], Any] = float) -> List[Any]:
    """
    Parse "start:step:stop" (inclusive within half a step) or a comma list

    Args:
        text: range or list text
        cast: element type

    Returns:
        List of values
    """
    text = text.strip()
    if not text:
        raise ValueError("empty value list")
    if ":" not in text:
        return [cast(part.strip()) for part in text.split(",") if part.strip()]

    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"range must be start:step:stop, got {text!r}")
    start, step, stop = (float(part) for part in parts)
    if step == 0 or not all(math.isfinite(v) for v in (start, step, stop)):
        raise ValueError(f"invalid range {text!r}")
    span = (stop - start) / step
    if span < -0.5:
        raise ValueError(f"range {text!r} steps away from its stop value")
    count = int(math.floor(span + 0.5)) + 1
    values = [round(start + k * step, 12) for k in range(count)]
    return [cast(value) if cast is not float else value for value in values]


def _float_list(text: str) -> List[float]:
    try:
        return parse_values(text, float)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


def _int_list(text: str) -> List[int]:
    try:
        return parse_values(text, lambda value: int(float(value)))
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e))


# Parser
def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value file; flags override its values")
    parser.add_argument("--output", help="output path")


def _add_grid(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--lambda", dest="coupling", type=float, help="coupling lambda")
    parser.add_argument("--alpha", type=float, help="flux alpha")
    parser.add_argument("--N", "--grid-size", dest="grid_size", type=int, help="grid size (power of two)")
    parser.add_argument("--dt", type=float, help="time step")


def build_parser() -> RingLabArgumentParser:
    parser = RingLabArgumentParser(
        prog="ringlab",
        description="Ring particle spectrum, mean-field solitons and rotating lumps",
        argument_default=argparse.SUPPRESS,
    )
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=RingLabArgumentParser)

    elliptic = subparsers.add_parser("elliptic", help="K, E, Jacobi functions or invert E(m)K(m)",
                                     argument_default=argparse.SUPPRESS)
    _add_common(elliptic)
    elliptic.add_argument("--m", type=float, help="parameter m in [0, 1)")
    elliptic.add_argument("--u", type=float, help="argument of sn, cn, dn")
    elliptic.add_argument("--target", type=float, help="solve E(m)K(m) = target")

    ring = subparsers.add_parser("ring", help="ring particle levels at flux alpha",
                                 argument_default=argparse.SUPPRESS)
    _add_common(ring)
    ring.add_argument("--alpha", type=float)
    ring.add_argument("--l", type=int, help="report a single level")
    ring.add_argument("--l-min", dest="l_min", type=int)
    ring.add_argument("--l-max", dest="l_max", type=int)
    ring.add_argument("--tie-tol", dest="tie_tol", type=float)

    stationary = subparsers.add_parser("stationary", help="analytic branches at lambda",
                                       argument_default=argparse.SUPPRESS)
    _add_common(stationary)
    stationary.add_argument("--lambda", dest="coupling", type=float)
    stationary.add_argument("--offset", type=float)
    stationary.add_argument("--N", "--grid-size", dest="grid_size", type=int)

    relax = subparsers.add_parser("relax", help="imaginary-time ground state",
                                  argument_default=argparse.SUPPRESS)
    _add_common(relax)
    _add_grid(relax)
    relax.add_argument("--tol", type=float)
    relax.add_argument("--max-steps", dest="max_steps", type=int)
    relax.add_argument("--seed")

    evolve_parser = subparsers.add_parser("evolve", help="real-time run with snapshots",
                                          argument_default=argparse.SUPPRESS)
    _add_common(evolve_parser)
    _add_grid(evolve_parser)
    evolve_parser.add_argument("--steps", type=int)
    evolve_parser.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    evolve_parser.add_argument("--seed")
    evolve_parser.add_argument("--input", help="start from a snapshot file")

    boost_parser = subparsers.add_parser("boost", help="construct and verify a moving lump",
                                         argument_default=argparse.SUPPRESS)
    _add_common(boost_parser)
    _add_grid(boost_parser)
    boost_parser.add_argument("--level", type=int, help="winding l, default minimizes |l + alpha|")
    boost_parser.add_argument("--t", type=float, help="time of the written state")
    boost_parser.add_argument("--steps", type=int)
    boost_parser.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    boost_parser.add_argument("--tol", type=float)
    boost_parser.add_argument("--max-steps", dest="max_steps", type=int)

    scan = subparsers.add_parser("scan", help="lambda or alpha sweep to CSV",
                                 argument_default=argparse.SUPPRESS)
    _add_common(scan)
    scan.add_argument("--mode", choices=[mode.value for mode in SweepMode])
    scan.add_argument("--lambdas", type=_float_list)
    scan.add_argument("--alphas", type=_float_list)
    scan.add_argument("--lambda", dest="coupling", type=float)
    scan.add_argument("--N", "--grid-size", dest="grid_size", type=int)
    scan.add_argument("--dt", type=float)
    scan.add_argument("--tol", type=float)
    scan.add_argument("--max-steps", dest="max_steps", type=int)
    scan.add_argument("--seed")
    scan.add_argument("--t-final", dest="t_final", type=float)
    scan.add_argument("--snapshot-every", dest="snapshot_every", type=int)

    converge = subparsers.add_parser("converge", help="discretization convergence table",
                                     argument_default=argparse.SUPPRESS)
    _add_common(converge)
    converge.add_argument("--lambda", dest="coupling", type=float)
    converge.add_argument("--alpha", type=float)
    converge.add_argument("--Ns", "--grid-sizes", dest="grid_sizes", type=_int_list)
    converge.add_argument("--dts", type=_float_list)
    converge.add_argument("--t-final", dest="t_final", type=float)

    return parser


# Configuration
def normalize_key(key: str) -> str:
    key = key.strip().lower().replace("-", "_")
    return KEY_ALIASES.get(key, key)


def load_config_file(path: str) -> Dict[str, Any]:
    """Flat key=value file with # comments, list values in range or comma syntax"""
    if not os.path.isfile(path):
        raise ValueError(f"config file not found: {path}")
    values: Dict[str, Any] = {}
    for raw_key, raw_value in dotenv_values(path).items():
        if raw_value is None:
            raise ValueError(f"config key {raw_key!r} has no value")
        key = normalize_key(raw_key)
        if key in FLOAT_LIST_KEYS:
            values[key] = parse_values(raw_value, float)
        elif key in INT_LIST_KEYS:
            values[key] = parse_values(raw_value, lambda value: int(float(value)))
        else:
            values[key] = raw_value
    return values


def effective_settings(args: argparse.Namespace) -> Dict[str, Any]:
    flags = {key: value for key, value in vars(args).items() if key not in ("command", "config")}
    merged = load_config_file(args.config) if getattr(args, "config", None) else {}
    merged.update(flags)
    return merged


def resolve_output(path: Optional[str]) -> Optional[str]:
    if path and settings.OUTPUT_DIR and not os.path.isabs(path):
        return os.path.join(settings.OUTPUT_DIR, path)
    return path


def _dump(model: BaseModel) -> Dict[str, Any]:
    return model.model_dump(mode="json", by_alias=True)


def _emit(command: str, cfg: RunConfig, result: Dict[str, Any]) -> Dict[str, Any]:
    payload = {"command": command, "config": _dump(cfg), "result": result}
    output = resolve_output(cfg.output)
    if output:
        write_json(output, payload)
    print(json.dumps(payload, sort_keys=True))
    return payload


# Subcommands
def run_elliptic(cfg: EllipticRunConfig) -> Dict[str, Any]:
    if cfg.target is not None:
        param = invert_product(cfg.target)
        k_value, e_value = complete_K(param), complete_E(param)
        return {
            "target": cfg.target,
            "m": param.m,
            "m_complement": param.complement,
            "K": k_value,
            "E": e_value,
            "residual": e_value * k_value - cfg.target,
        }

    result = {"m": cfg.m, "K": complete_K(cfg.m), "E": complete_E(cfg.m)}
    result["product"] = result["K"] * result["E"]
    if cfg.u is not None:
        sn, cn, dn = jacobi_sn_cn_dn(cfg.u, cfg.m)
        result.update({"u": cfg.u, "sn": sn, "cn": cn, "dn": dn})
    return result


def run_ring(cfg: RingRunConfig) -> Dict[str, Any]:
    ground = ground_level(cfg.alpha, cfg.tie_tol)
    result: Dict[str, Any] = {
        "alpha": cfg.alpha,
        "levels": ground.levels,
        "energy": ground.energy,
        "degenerate": ground.degenerate,
        "velocities": [level_velocity(l, cfg.alpha) for l in ground.levels],
    }
    if abs(2 * cfg.alpha - round(2 * cfg.alpha)) <= 1e-12:
        result["modified_time_reversal"] = {
            str(l): modified_time_reversal(l, cfg.alpha) for l in ground.levels
        }
    if cfg.l is not None:
        result["level"] = {
            "l": cfg.l,
            "energy": level_energy(cfg.l, cfg.alpha),
            "velocity": level_velocity(cfg.l, cfg.alpha),
        }
    if cfg.l_min is not None or cfg.l_max is not None:
        centre = ground.levels[0]
        l_min = cfg.l_min if cfg.l_min is not None else min(centre - 3, cfg.l_max)
        l_max = cfg.l_max if cfg.l_max is not None else max(centre + 3, l_min)
        result["spectrum"] = [_dump(level) for level in spectrum(cfg.alpha, l_min, l_max)]
    return result


def run_stationary(cfg: StationaryRunConfig) -> Dict[str, Any]:
    uniform = uniform_branch(cfg.coupling)
    result: Dict[str, Any] = {
        "lambda": cfg.coupling,
        "critical_coupling": CRITICAL_COUPLING,
        "uniform": {"chem_potential": uniform.chem_potential, "energy": energy_functional(uniform)},
    }
    try:
        soliton = solve_soliton_branch(cfg.coupling, offset=cfg.offset)
        result["soliton"] = {
            "m": soliton.m,
            "m_complement": soliton.m_complement,
            "r": soliton.r,
            "offset": soliton.offset,
            "chem_potential": soliton.chem_potential,
            "energy": energy_functional(soliton),
            "norm": profile_norm(soliton),
        }
    except BelowCriticalError as e:
        result["soliton"] = None
        result["soliton_reason"] = str(e)

    selected = select_ground_branch(cfg.coupling)
    if selected.branch == Branch.SOLITON:
        selected = selected.with_offset(cfg.offset)
    result["selected"] = selected.branch.value
    if cfg.grid_size is not None:
        psi = sample_profile(selected, cfg.grid_size)
        result["profile"] = {
            "grid_size": cfg.grid_size,
            "norm": psi.norm,
            "stationary_residual": eigen_residual(psi, 0.0, cfg.coupling, selected.chem_potential),
        }
    return result


def run_relax(cfg: RelaxRunConfig) -> Dict[str, Any]:
    seed = cfg.seed or default_seed_descriptor(cfg.coupling)
    evolution = EvolutionConfig(
        dt=cfg.dt,
        steps=cfg.max_steps,
        alpha=cfg.alpha,
        coupling=cfg.coupling,
        mode=EvolutionMode.IMAGINARY_TIME,
    )
    psi, observables = relax_ground_state(make_seed(seed, cfg.grid_size, cfg.coupling), evolution, cfg.tol)
    result: Dict[str, Any] = {
        "seed": seed,
        "observables": _dump(observables),
        "eigen_residual": eigen_residual(psi, cfg.alpha, cfg.coupling),
    }
    if cfg.alpha == 0.0 and cfg.coupling > 0:
        reference = select_ground_branch(cfg.coupling)
        result["analytic"] = {
            "branch": reference.branch.value,
            "chem_potential": reference.chem_potential,
            "mu_gap": abs(observables.chem_potential - reference.chem_potential),
        }
        if reference.branch == Branch.SOLITON:
            result["alignment"] = _dump(align_to_profile(psi, reference))

    output = resolve_output(cfg.output)
    if output:
        write_snapshot(output, psi, 0.0, cfg.alpha, cfg.coupling, cfg.dt, config=_dump(cfg))
    return result


def _indexed_path(prefix: str, index: int) -> str:
    return f"{prefix}_{index:04d}.dat"


def run_evolve(cfg: EvolveRunConfig) -> Dict[str, Any]:
    if cfg.input:
        psi, _ = read_snapshot(cfg.input)
        seed = f"file:{cfg.input}"
    else:
        seed = cfg.seed or default_seed_descriptor(cfg.coupling)
        psi = make_seed(seed, cfg.grid_size, cfg.coupling)

    evolution = EvolutionConfig(
        dt=cfg.dt,
        steps=cfg.steps,
        alpha=cfg.alpha,
        coupling=cfg.coupling,
        mode=EvolutionMode.REAL_TIME,
    )
    snapshots = evolve(psi, evolution, cfg.snapshot_every)
    first = measure(snapshots[0][1], cfg.alpha, cfg.coupling)
    last = measure(snapshots[-1][1], cfg.alpha, cfg.coupling)
    result: Dict[str, Any] = {
        "seed": seed,
        "snapshots": len(snapshots),
        "t_final": snapshots[-1][0],
        "norm_drift": abs(last.norm - first.norm),
        "energy_drift": abs(last.energy - first.energy),
        "final": _dump(last),
    }
    try:
        result["drift"] = _dump(fit_drift(snapshots))
    except NoLumpError as e:
        logger.info(f"No drift reported: {e}")
        result["drift"] = None

    output = resolve_output(cfg.output)
    if output:
        config = _dump(cfg)
        result["files"] = [
            write_snapshot(_indexed_path(output, index), state, t, cfg.alpha, cfg.coupling, cfg.dt, config)["snapshot"]
            for index, (t, state) in enumerate(snapshots)
        ]
    return result


def run_boost(cfg: BoostRunConfig) -> Dict[str, Any]:
    soliton = solve_soliton_branch(cfg.coupling)
    sweep = SweepConfig(grid_size=cfg.grid_size, dt=cfg.dt, tol=cfg.tol, max_steps=cfg.max_steps)
    psi_tilde, rest = relax_lump(cfg.coupling, sweep)
    levels = boost_levels(cfg.alpha)
    level = cfg.level if cfg.level is not None else levels[0]
    e0 = rest.chem_potential

    state = boost(psi_tilde, level, cfg.alpha, cfg.t, e0)
    snapshots = track_moving_lump(
        psi_tilde, level, cfg.alpha, cfg.coupling, e0, cfg.dt, cfg.steps, min(cfg.snapshot_every, cfg.steps)
    )
    fit = fit_drift(snapshots)
    result = {
        "level": level,
        "levels": levels,
        "expected_drift": -(level + cfg.alpha),
        "drift": _dump(fit),
        "boost_residual": boost_residual(psi_tilde, level, cfg.alpha, cfg.coupling, e0, cfg.t),
        "energy": boost_energy(rest.energy, level, cfg.alpha),
        "uniform_energy": uniform_energy_at_flux(cfg.coupling, cfg.alpha),
        "mu_gap": abs(e0 - soliton.chem_potential),
    }

    output = resolve_output(cfg.output)
    if output:
        write_snapshot(output, state, cfg.t, cfg.alpha, cfg.coupling, cfg.dt, config=_dump(cfg))
    return result


def _sweep_config(cfg: ScanRunConfig) -> SweepConfig:
    return SweepConfig(
        grid_size=cfg.grid_size,
        dt=cfg.dt,
        tol=cfg.tol,
        max_steps=cfg.max_steps,
        seed=cfg.seed,
        t_final=cfg.t_final,
        snapshot_every=cfg.snapshot_every,
    )


def run_scan(cfg: ScanRunConfig) -> int:
    sweep = _sweep_config(cfg)
    if cfg.mode == SweepMode.LAMBDA:
        records = scan_lambda(cfg.lambdas, sweep)
    else:
        records = scan_alpha(cfg.alphas, cfg.coupling, sweep)

    output = resolve_output(cfg.output)
    if output:
        paths = write_records(output, records, config=_dump(cfg))
        print(json.dumps({"command": "scan", "rows": len(records), "files": paths}, sort_keys=True))
    else:
        sys.stdout.write(records_to_csv(records))
    return EXIT_OK


def run_converge(cfg: ConvergeRunConfig) -> int:
    table = convergence_table(cfg.coupling, cfg.alpha, cfg.grid_sizes, cfg.dts, cfg.t_final)
    output = resolve_output(cfg.output)
    if output:
        paths = write_records(
            output,
            table.records,
            config=_dump(cfg),
            extra={"spatial_decay": table.spatial_decay, "temporal_orders": table.temporal_orders},
        )
        print(json.dumps({"command": "converge", "rows": len(table.records), "files": paths}, sort_keys=True))
    else:
        print(json.dumps({"command": "converge", "config": _dump(cfg), "result": _dump(table)}, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "elliptic": (EllipticRunConfig, run_elliptic),
    "ring": (RingRunConfig, run_ring),
    "stationary": (StationaryRunConfig, run_stationary),
    "relax": (RelaxRunConfig, run_relax),
    "evolve": (EvolveRunConfig, run_evolve),
    "boost": (BoostRunConfig, run_boost),
    "scan": (ScanRunConfig, run_scan),
    "converge": (ConvergeRunConfig, run_converge),
}


def _report_error(error: BaseException, exit_code: int) -> int:
    message = " ".join(str(error).split())
    sys.stderr.write(
        json.dumps({"error": error.__class__.__name__, "exit_code": exit_code, "message": message}) + "\n"
    )
    return exit_code


def configure_logging() -> None:
    logging.basicConfig(
        level=getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    )


def run(argv: Optional[List[str]] = None) -> int:
    """Parse argv, validate, execute one subcommand and return the exit code"""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        sys.stderr.write(e.usage)
        return _report_error(e, EXIT_INVALID)
    except SystemExit as e:
        # --help
        return int(e.code or 0)

    model, handler = COMMANDS[args.command]
    try:
        cfg = model.model_validate(effective_settings(args))
        logger.info(f"Running {args.command}")
        outcome = handler(cfg)
        if isinstance(outcome, dict):
            _emit(args.command, cfg, outcome)
        return EXIT_OK
    except NUMERICAL_ERRORS as e:
        logger.error(f"{args.command} failed: {e}")
        return _report_error(e, EXIT_NUMERICAL)
    except (ValueError, OSError) as e:
        logger.error(f"{args.command} rejected its input: {e}")
        return _report_error(e, EXIT_INVALID)


def main():
    configure_logging()
    sys.exit(run(sys.argv[1:]))
