"""
Command-line front end

    locc-usd discriminate --protocol locc --config run.json
    locc-usd optimize --config table1.json --resolution 1e-4
    locc-usd verify all --seed 7
    locc-usd figure fig6 -o fig6.csv

Exit codes: 0 ok, 1 verification failure, 2 validation error, 3 parse error.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Optional, Sequence

import pandas as pd
from pydantic import BaseModel, ValidationError

from config import get_settings
from models.schemas import RunConfig, SampleReport
from services.analysis import run_claims
from services.closedform import optimal_global_mixed, optimal_global_pure, optimal_ssd_stage, ssd_delta
from services.errors import DiscriminationError, GapViolationError, ParameterError
from services.figures import emit_figure
from services.montecarlo import sample_appendixC_case_iii, sample_protocol
from services.protocols import run_global, run_locc, run_protocol
from services.search import (
    global_mixed_problem,
    global_pure_problem,
    grid_search_optimum,
    random_search_optimum,
    ssd_stage_problem,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_VERIFY_FAILED, EXIT_INVALID, EXIT_PARSE = 0, 1, 2, 3

OPTIMIZE_TARGETS = ("global_mixed", "global_pure", "ssd_stage")


class ConfigParseError(Exception):
    def __init__(self, path: Path, error: json.JSONDecodeError):
        self.line, self.column = error.lineno, error.colno
        super().__init__(f"{path}: {error.msg} at line {error.lineno} column {error.colno}")


# Configuration
def load_config(command: str, path: Optional[str]) -> RunConfig:
    """Read a JSON run configuration for `command`; no path gives an empty configuration."""
    data: Dict[str, Any] = {}
    if path is not None:
        text = Path(path).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigParseError(Path(path), exc) from exc
        if not isinstance(data, dict):
            raise ParameterError("configuration must be a JSON object", [f"got {type(data).__name__}"])
    if data.setdefault("command", command) != command:
        raise ParameterError("configuration belongs to another command",
                             [f"config command={data['command']!r}, invoked {command!r}"])
    return RunConfig.model_validate(data)


def _require(config: RunConfig, *keys: str) -> None:
    missing = [k for k in keys if getattr(config, k) is None]
    if missing:
        raise ParameterError(f"{config.command} needs configuration keys", [f"missing key {k}" for k in missing])


# Output
def _to_frame(payload: Any) -> pd.DataFrame:
    if hasattr(payload, "to_frame"):
        return payload.to_frame()
    if isinstance(payload, list):
        return pd.DataFrame([item.model_dump(mode="json", exclude={"witness", "parameters"}) for item in payload])
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return pd.json_normalize(payload)


def _to_json(payload: Any) -> str:
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    elif isinstance(payload, list):
        payload = [item.model_dump(mode="json") if isinstance(item, BaseModel) else item for item in payload]
    return json.dumps(payload, indent=2, sort_keys=True, default=str)


def emit(payload: Any, out: Optional[str], fmt: str) -> None:
    """Write payload as JSON or CSV to `out` (stdout when omitted)."""
    text = _to_frame(payload).to_csv(index=False) if fmt == "csv" else _to_json(payload) + "\n"
    if out is None:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    logger.info("wrote %s", path)


def _output(args: argparse.Namespace, config: RunConfig) -> tuple:
    return args.out or config.output, args.format or config.format


# Commands
def cmd_discriminate(args: argparse.Namespace) -> int:
    config = load_config("discriminate", args.config)
    _require(config, "params")
    protocol = args.protocol or config.protocol or "locc"
    schedules = dict(config.schedules)
    if args.q_from_locc:
        if "A" not in schedules or "B" not in schedules:
            raise ParameterError("--q-from-locc needs schedules", ["schedules A and B"])
        locc = run_locc(config.params, schedules["A"], schedules["B"])
        report = run_global(config.params, schedules["A"].product(schedules["B"]), operational=args.operational)
        report.details.update({"locc_total_success": locc.total_success,
                               "delta": report.total_success - locc.total_success})
        if protocol != "global":
            logger.info("--q-from-locc reports the global protocol (requested %s)", protocol)
    else:
        report = run_protocol(protocol, config.params, schedules, operational=args.operational)
    emit(report, *_output(args, config))
    return EXIT_OK


def _optimize_pair(config: RunConfig, target: str):
    if target == "global_mixed":
        _require(config, "params")
        return optimal_global_mixed(config.params), global_mixed_problem(config.params)
    if target == "global_pure":
        _require(config, "params")
        closed = optimal_global_pure(config.params)
        return closed, global_pure_problem(config.params.P1, config.params.P2, closed.details["overlap"])
    if target == "ssd_stage":
        _require(config, "s")
        prior = config.params.P1 if config.params is not None else 0.5
        return optimal_ssd_stage(prior, config.s), ssd_stage_problem(prior, config.s)
    raise ParameterError("unknown optimize target", [f"target={target!r}; expected one of {', '.join(OPTIMIZE_TARGETS)}"])


def cmd_optimize(args: argparse.Namespace) -> int:
    config = load_config("optimize", args.config)
    search = config.optimizer
    target = args.target or config.target or "global_mixed"
    closed, problem = _optimize_pair(config, target)
    result: Dict[str, Any] = {"target": target, "closed_form": closed.model_dump(mode="json")}
    if not (args.formula_only or search.formula_only):
        if args.random:
            oracle = random_search_optimum(problem, n_samples=args.n or search.n_samples,
                                           seed=args.seed if args.seed is not None else search.seed)
        else:
            oracle = grid_search_optimum(problem, resolution=args.resolution or search.resolution,
                                         refinement_rounds=search.refinement_rounds)
        difference = abs(closed.value - oracle.value)
        result.update({"oracle": oracle.model_dump(mode="json"), "difference": difference,
                       "within_tolerance": difference < 1e-6})
    emit(result, *_output(args, config))
    return EXIT_OK


def cmd_ssd(args: argparse.Namespace) -> int:
    """Sequential discrimination: a scheduled run when params and schedules are given, else the optimal gap."""
    config = load_config("ssd", args.config)
    if config.params is not None and {"A", "C"} <= set(config.schedules):
        report = run_protocol("ssd", config.params, config.schedules, operational=args.operational)
    else:
        s = args.s if args.s is not None else config.s
        s_prime = args.s_prime if args.s_prime is not None else config.s_prime
        if s is None or s_prime is None:
            raise ParameterError("ssd needs params with schedules A and C, or the overlaps s and s_prime",
                                 ["missing key s" if s is None else "missing key s_prime"])
        report = ssd_delta(s, s_prime)
    emit(report, *_output(args, config))
    return EXIT_OK


def cmd_hybrid(args: argparse.Namespace) -> int:
    config = load_config("hybrid", args.config)
    _require(config, "params")
    protocol = args.protocol or config.protocol or "reproduce"
    if protocol not in ("reproduce", "broadcast", "hybrid_ssd"):
        raise ParameterError("unknown hybrid protocol", [f"protocol={protocol!r}"])
    report = run_protocol(protocol, config.params, config.schedules, operational=args.operational)
    emit(report, *_output(args, config))
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    config = load_config("verify", args.config)
    claim = args.claim or config.target or "all"
    seed = args.seed if args.seed is not None else config.optimizer.seed
    results = run_claims(claim, seed=seed, quick=args.quick)
    emit(results, *_output(args, config))
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY_FAILED


def cmd_figure(args: argparse.Namespace) -> int:
    config = load_config("figure", args.config)
    figure_id = args.figure or config.target
    if figure_id is None:
        raise ParameterError("figure needs an id", ["missing key target"])
    figure = emit_figure(figure_id, params=config.figure_params, points=args.n)
    out, fmt = _output(args, config)
    emit(figure, out, args.format or ("csv" if out and out.endswith(".csv") else fmt))
    return EXIT_OK


def cmd_sample(args: argparse.Namespace) -> int:
    config = load_config("sample", args.config)
    protocol = args.protocol or config.protocol or "locc"
    seed = args.seed if args.seed is not None else config.optimizer.seed
    if protocol == "case_iii":
        report = sample_appendixC_case_iii(n_points=args.n or config.optimizer.n_samples, seed=seed)
    else:
        _require(config, "params")
        n = args.n or config.optimizer.n_samples or get_settings().random_samples
        report = sample_protocol(config.params, config.schedules, protocol, n, seed)
    out, fmt = _output(args, config)
    if fmt == "csv" and not isinstance(report, SampleReport):
        raise ParameterError("csv output is per-pattern counts", ["case_iii reports JSON only"])
    emit(report, out, fmt)
    return EXIT_OK


COMMANDS = {
    "discriminate": cmd_discriminate,
    "optimize": cmd_optimize,
    "ssd": cmd_ssd,
    "hybrid": cmd_hybrid,
    "verify": cmd_verify,
    "figure": cmd_figure,
    "sample": cmd_sample,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--out", "-o", help="output path (stdout when omitted)")
    common.add_argument("--format", choices=("json", "csv"), help="output format")
    common.add_argument("--verbose", "-v", action="store_true", help="debug logging")

    parser = argparse.ArgumentParser(prog="locc-usd", description="Unambiguous discrimination of bipartite states")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("discriminate", parents=[common], help="evaluate one protocol")
    p.add_argument("--protocol", help="locc, global, ssd, pure_local, reproduce, broadcast or hybrid_ssd")
    p.add_argument("--q-from-locc", action="store_true", help="global run with q^G = q^A q^B")
    p.add_argument("--operational", action="store_true", help="cross-check against the trace rule")

    p = sub.add_parser("optimize", parents=[common], help="closed-form optimum against the numerical oracle")
    p.add_argument("--target", choices=OPTIMIZE_TARGETS)
    p.add_argument("--resolution", type=float, help="grid spacing at which refinement stops")
    p.add_argument("--formula-only", action="store_true", help="skip the oracle")
    p.add_argument("--random", action="store_true", help="seeded random search instead of the grid")
    p.add_argument("--n", type=int, help="random-search samples")

    p = sub.add_parser("ssd", parents=[common], help="sequential discrimination")
    p.add_argument("--s", type=float)
    p.add_argument("--s-prime", type=float)
    p.add_argument("--operational", action="store_true")

    p = sub.add_parser("hybrid", parents=[common], help="reproducing, broadcasting or sequential hybrids")
    p.add_argument("--protocol", choices=("reproduce", "broadcast", "hybrid_ssd"))
    p.add_argument("--operational", action="store_true")

    p = sub.add_parser("verify", parents=[common], help="run verification claims")
    p.add_argument("claim", nargs="?", help="claim id or all")
    p.add_argument("--quick", action="store_true", help="reduced draw counts")

    p = sub.add_parser("figure", parents=[common], help="figure data")
    p.add_argument("figure", nargs="?", help="fig3, fig6, fig7 or fig8")
    p.add_argument("--n", type=int, help="points per curve")

    p = sub.add_parser("sample", parents=[common], help="Monte Carlo sampling")
    p.add_argument("--protocol", help="protocol tag, or case_iii for the hybrid-gap sampler")
    p.add_argument("--n", type=int, help="number of trials")
    return parser


def _fail(code: int, kind: str, message: str, **extra: Any) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, **extra}) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    settings = get_settings()
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else getattr(logging, settings.log_level.upper(), logging.INFO),
        format=settings.log_format,
        stream=sys.stderr,
    )
    try:
        return COMMANDS[args.command](args)
    except ConfigParseError as exc:
        return _fail(EXIT_PARSE, "parse", str(exc), line=exc.line, column=exc.column)
    except ValidationError as exc:
        return _fail(EXIT_INVALID, "validation", str(exc),
                     keys=[".".join(str(p) for p in err["loc"]) for err in exc.errors()])
    except GapViolationError as exc:
        return _fail(EXIT_VERIFY_FAILED, type(exc).__name__, str(exc), witness=exc.witness)
    except (DiscriminationError, FileNotFoundError) as exc:
        return _fail(EXIT_INVALID, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
