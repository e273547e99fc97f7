"""Command line interface.

Every command reads one JSON config, applies the flag overrides and
prints a JSON document on standard output. Exit codes are 0 on success,
1 when the numerics fail to converge and 2 for invalid input.
"""
import argparse
import json
import re
import sys
from pathlib import PurePosixPath
from typing import List, Mapping, Optional

from loguru import logger
from pydantic import Field, ValidationError

from . import __version__
from .errors import ConvergenceError, IntegrationError, InvalidParametersError
from .integrator import (
    IntegratorSettings,
    State,
    find_periodic_orbit,
    monodromy_at,
    sample_basins,
    simulate,
)
from .params import ParameterFile, ValidationReport, rescale, validate
from .scalar import map_limit_ratio, period_map, scalar_classify, fixed_point
from .stability import classify, multipliers, thresholds
from .sweep import AUDIT_STARTS, GridSpec, audit, export, sweep_regions
from .types import Interval, Species
from .utils import dumps, read_json

BASIN_STARTS = AUDIT_STARTS + (State(u=2.0, v=0.1), State(u=0.4, v=0.2))


class RunConfig(ParameterFile):
    species: Optional[Species] = None
    initial_state: Optional[State] = None
    initial_states: List[State] = []
    periods: int = Field(100, ge=0)
    grid: Optional[GridSpec] = None
    output: Optional[str] = None
    sidecar: Optional[str] = None
    integrator: IntegratorSettings = IntegratorSettings()
    n_jobs: int = 1
    audit_cells: int = Field(0, ge=0)

    @classmethod
    def from_url(cls, url: str) -> "RunConfig":
        data = read_json(url)
        if not isinstance(data, Mapping):
            raise InvalidParametersError(f"{url} must contain a JSON object")
        return cls(**data)


def _emit(obj):
    sys.stdout.write(dumps(obj))
    sys.stdout.write("\n")


def _parse_grid(text: str):
    match = re.fullmatch(r"\s*(\d+)\s*[xX]\s*(\d+)\s*", text)
    if match is None:
        raise argparse.ArgumentTypeError(f"grid must look like NxM, got {text!r}")
    return int(match.group(1)), int(match.group(2))


def _nonnegative_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}")
    if value < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {value}")
    return value


def _schedule_overrides(args) -> dict:
    return {
        name: getattr(args, name)
        for name in ("tau1", "tau2")
        if getattr(args, name, None) is not None
    }


def load_inputs(args):
    """Config, parameters and schedule with flag overrides applied"""
    config = RunConfig.from_url(args.config)
    p, s = config.resolve()
    overrides = _schedule_overrides(args)
    if overrides:
        s = type(s)(**{**s.dict(), **overrides})
    return config, p, s


def _header(p, s) -> dict:
    return {"parameters": p, "schedule": s}


def _species_list(args, config) -> List[Species]:
    species = getattr(args, "species", None) or config.species
    if species is None:
        return [Species.U, Species.V]
    return [Species(species)]


def cmd_thresholds(args) -> int:
    _, p, s = load_inputs(args)
    _emit({**_header(p, s), "thresholds": thresholds(p, s)})
    return 0


def cmd_classify(args) -> int:
    _, p, s = load_inputs(args)
    result = classify(p, s)
    _emit({**_header(p, s), **result.dict()})
    return 0


def _initial_state(args, config) -> State:
    if getattr(args, "initial", None) is not None:
        u, v = args.initial
        return State(u=u, v=v)
    if config.initial_state is None:
        raise InvalidParametersError("an initial state is required (--initial U V)")
    return config.initial_state


def cmd_simulate(args) -> int:
    config, p, s = load_inputs(args)
    state = _initial_state(args, config)
    periods = args.periods if args.periods is not None else config.periods
    output = args.out or config.output

    trajectory = simulate(state, p, s, periods, config.integrator)
    if output:
        trajectory.to_csv(output)

    _emit(
        {
            **_header(p, s),
            "periods": periods,
            "samples": len(trajectory),
            "initial_state": trajectory.initial_state,
            "final_state": trajectory.final_state,
            "output": output,
        }
    )
    return 0


def cmd_fixed_point(args) -> int:
    config, p, s = load_inputs(args)
    results = {}
    for species in _species_list(args, config):
        m = period_map(p, s, species)
        results[species.value] = {
            "map": m,
            "limit_ratio": map_limit_ratio(m),
            "fixed_point": fixed_point(m),
            "regime": scalar_classify(p, s, species),
        }
    _emit({**_header(p, s), "species": results})
    return 0


def cmd_multipliers(args) -> int:
    config, p, s = load_inputs(args)
    output = {**_header(p, s), "multipliers": multipliers(p, s)}

    if args.check:
        points = {"E0": State(u=0.0, v=0.0)}
        u_regime = scalar_classify(p, s, Species.U)
        v_regime = scalar_classify(p, s, Species.V)
        if u_regime.persistent:
            points["u_boundary"] = State(u=u_regime.fixed_point, v=0.0)
        if v_regime.persistent:
            points["v_boundary"] = State(u=0.0, v=v_regime.fixed_point)

        checks = {}
        for name, omega in points.items():
            monodromy = monodromy_at(omega, p, s, config.integrator)
            checks[name] = {
                "state": omega,
                "monodromy": monodromy,
                "diagonal": [monodromy.m11, monodromy.m22],
                "eigenvalues": monodromy.eigenvalues.real,
                "determinant": monodromy.determinant,
            }
        output["monodromy"] = checks

    _emit(output)
    return 0


def _grid_spec(args, config, s) -> GridSpec:
    spec = config.grid
    if spec is None:
        spec = GridSpec(range1=Interval(left=0, right=s.T), range2=(0, s.T))
    update = {}
    if args.grid is not None:
        update["n1"], update["n2"] = args.grid
    species = args.species or (config.species if config.grid is None else None)
    if species is not None:
        update["species"] = Species(species)
    if update:
        spec = GridSpec(**{**spec.dict(), **update})
    return spec


def _sidecar_path(output: str) -> str:
    path = PurePosixPath(output)
    return str(path.with_suffix(".json")) if path.suffix != ".json" else output + ".json"


def cmd_sweep(args) -> int:
    config, p, s = load_inputs(args)
    spec = _grid_spec(args, config, s)
    n_jobs = args.jobs if args.jobs is not None else config.n_jobs

    grid = sweep_regions(p, s, spec, n_jobs=n_jobs)

    output = {**_header(p, s), "grid": spec, "counts": grid.counts()}
    csv_url = args.out or config.output
    if csv_url:
        json_url = config.sidecar or _sidecar_path(csv_url)
        export(grid, csv_url, json_url)
        output["files"] = {"csv": csv_url, "json": json_url}

    k = args.audit if args.audit is not None else config.audit_cells
    if k:
        report = audit(grid, p, s, k, config.integrator)
        output["audit"] = {
            "checked": len(report.cells),
            "mismatches": report.mismatches,
        }

    _emit(output)
    return 0


def cmd_orbit(args) -> int:
    config, p, s = load_inputs(args)
    start = _initial_state(args, config)
    orbit = find_periodic_orbit(p, s, start, config.integrator)

    output = {**_header(p, s), "start": start}
    if orbit is None:
        output.update({"collapsed": True, "state": None})
    else:
        output.update(
            {
                "collapsed": False,
                "state": orbit.state,
                "iterations": orbit.iterations,
            }
        )
        out = args.out or config.output
        if out:
            orbit.trajectory.to_csv(out)
            output["output"] = out

    _emit(output)
    return 0


def cmd_basins(args) -> int:
    config, p, s = load_inputs(args)
    starts = config.initial_states or list(BASIN_STARTS)
    if getattr(args, "initial", None) is not None:
        starts = [State(u=args.initial[0], v=args.initial[1])]
    max_periods = args.periods if args.periods is not None else None

    samples = sample_basins(p, s, starts, config.integrator, max_periods=max_periods)
    _emit(
        {
            **_header(p, s),
            "region": classify(p, s).region,
            "samples": samples,
        }
    )
    return 0


def _report_from_error(error: ValidationError) -> ValidationReport:
    report = ValidationReport()
    for item in error.errors():
        location = ".".join(str(part) for part in item["loc"])
        report.violations.append(f"{location}: {item['msg']}")
    return report


def cmd_validate(args) -> int:
    data = read_json(args.config)
    if not isinstance(data, Mapping):
        raise InvalidParametersError(f"{args.config} must contain a JSON object")

    overrides = _schedule_overrides(args)
    raw = "raw_parameters" in data
    blocks = ("raw_parameters",) if raw else ("parameters", "schedule")
    for name in blocks:
        if not isinstance(data.get(name, {}), Mapping):
            raise InvalidParametersError(
                f"'{name}' in {args.config} must be a JSON object"
            )

    if raw:
        try:
            p, s = rescale(data["raw_parameters"])
        except ValidationError as e:
            report = _report_from_error(e)
        else:
            report = validate(p, {**s.dict(), **overrides})
    else:
        schedule = {**data.get("schedule", {}), **overrides}
        report = validate(data.get("parameters", {}), schedule)

    for warning in report.warnings:
        logger.warning(warning)
    _emit({"valid": report.valid, **report.dict()})
    return 0 if report.valid else 2


COMMANDS = {
    "thresholds": (cmd_thresholds, "print the persistence thresholds"),
    "classify": (cmd_classify, "classify the long-run dynamics"),
    "simulate": (cmd_simulate, "integrate the system over whole periods"),
    "fixed-point": (cmd_fixed_point, "closed-form single-species periodic states"),
    "multipliers": (cmd_multipliers, "closed-form Floquet multipliers"),
    "sweep": (cmd_sweep, "map the regions over a parameter plane"),
    "orbit": (cmd_orbit, "locate a two-species periodic orbit"),
    "basins": (cmd_basins, "sample long-run outcomes of several starts"),
    "validate": (cmd_validate, "check a config for invalid parameters"),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="JSON config file (local path or fsspec URL)")
    common.add_argument("--tau1", type=float, help="override the dry season length")
    common.add_argument("--tau2", type=float, help="override the grazing onset")
    common.add_argument(
        "-v", "--verbose", action="count", default=0, help="-v info, -vv debug"
    )

    parser = argparse.ArgumentParser(
        prog="seasonal-lv",
        description="Seasonal Lotka-Volterra competition with dry, growth "
        "and grazing phases.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    subparsers = parser.add_subparsers(dest="command", required=True)

    parsers = {}
    for name, (func, help) in COMMANDS.items():
        sub = subparsers.add_parser(name, parents=[common], help=help)
        sub.set_defaults(func=func)
        parsers[name] = sub

    for name in ("simulate", "orbit", "basins"):
        parsers[name].add_argument(
            "--initial", nargs=2, type=float, metavar=("U", "V"), help="initial state"
        )
    for name in ("simulate", "basins"):
        parsers[name].add_argument(
            "--periods",
            type=_nonnegative_int,
            help="periods to simulate (basins: at most)",
        )
    for name in ("simulate", "orbit", "sweep"):
        parsers[name].add_argument("--out", help="CSV output path")
    for name in ("fixed-point", "sweep"):
        parsers[name].add_argument(
            "--species", type=Species, choices=list(Species), help="single species"
        )

    parsers["multipliers"].add_argument(
        "--check",
        action="store_true",
        help="add monodromy eigenvalues at the available periodic states",
    )
    parsers["sweep"].add_argument("--grid", type=_parse_grid, help="cells as NxM")
    parsers["sweep"].add_argument("--jobs", type=int, help="parallel workers")
    parsers["sweep"].add_argument(
        "--audit",
        type=_nonnegative_int,
        metavar="K",
        help="simulate K cells to cross-check",
    )
    return parser


def configure_logging(verbosity: int) -> int:
    """Add a stderr sink for the package and return its id.
    Only loguru's own default handler is removed, other sinks stay.
    """
    level = {0: "WARNING", 1: "INFO"}.get(verbosity, "DEBUG")
    try:
        logger.remove(0)
    except ValueError:
        pass
    logger.enable("seasonal_lv")
    return logger.add(sys.stderr, level=level, format="{level}: {message}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    sink = configure_logging(args.verbose)
    try:
        return args.func(args)
    except (ValidationError, InvalidParametersError) as e:
        logger.error(f"Invalid input: {e}")
        return 2
    except json.JSONDecodeError as e:
        logger.error(f"Malformed JSON in {args.config}: {e}")
        return 2
    except FileNotFoundError as e:
        logger.error(f"File not found: {e}")
        return 2
    except (ConvergenceError, IntegrationError) as e:
        logger.error(f"Numerical failure: {e}")
        return 1
    finally:
        logger.remove(sink)
        logger.disable("seasonal_lv")


if __name__ == "__main__":
    sys.exit(main())
