"""Command-line front end.

JSON reports go to stdout and logs to stderr. Exit codes: 0 WellSpecified,
1 Misspecified, 2 Degenerate, 64 usage, 65 data or estimation, 70 internal.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from . import __version__, config
from .errors import EXIT_INTERNAL, EXIT_USAGE, InvalidArgument, NetMisfitError, ParseError, UsageError
from .graph import graph_summary, read_graph, write_graph, write_labels
from .montecarlo import ModelKind, ScenarioKind, ScenarioSpec, TestOptions, format_csv, run_scenario
from .pipeline import draw_sample, resolve_mode, resolve_size_factor, run_test
from .reports import JsonReport
from .samplers import MultiplierRule
from .sbm import FitMethod, IsolatedPolicy

logger = logging.getLogger("netmisfit")


class CliParser(argparse.ArgumentParser):
    """ArgumentParser that raises instead of exiting with status 2."""

    def error(self, message):
        raise UsageError(message)


def _probability(text: str) -> float:
    value = float(text)
    if not (0.0 < value < 1.0):
        raise argparse.ArgumentTypeError(f"{text} is not in (0, 1)")
    return value


def _add_test_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha", type=_probability, default=config.DEFAULT_ALPHA)
    p.add_argument("--mode", choices=["general", "paper", "reduced"], default=None,
                   help="erg: general|paper (default general); sbm: paper|reduced (default reduced)")
    p.add_argument("--size-factor", choices=["pairs", "paper", "vertices"], default=None,
                   help="erg: pairs|paper; sbm: pairs|paper|vertices (paper = vertices)")
    p.add_argument("--clamp", type=float, default=None, metavar="EPS",
                   help="clip boundary edge-probability estimates into [EPS, 1-EPS]")
    p.add_argument("--restarts", type=int, default=config.VEM_RESTARTS)
    p.add_argument("--drop-isolated", action="store_true",
                   help="exclude pairs touching isolated vertices instead of failing")


def build_parser() -> CliParser:
    parser = CliParser(prog="netmisfit", description="Information-matrix misspecification tests for random graphs")
    parser.add_argument("--version", action="version", version=f"netmisfit {__version__}")
    parser.add_argument("--log-level", default=config.LOG_LEVEL)
    sub = parser.add_subparsers(dest="command", required=True)

    test = sub.add_parser("test", help="test a graph file")
    test.add_argument("--model", choices=["erg", "sbm"], required=True)
    test.add_argument("--graph", type=Path, required=True)
    test.add_argument("--labels", type=Path, default=None)
    test.add_argument("--blocks", type=int, default=None)
    test.add_argument("--seed", type=int, default=None)
    _add_test_options(test)
    test.set_defaults(func=cmd_test)

    sample = sub.add_parser("sample", help="draw a graph from a scenario")
    sample.add_argument("--model", choices=["erg", "sbm"], required=True)
    sample.add_argument("--scenario", choices=["null", "perturbed"], default="null")
    sample.add_argument("--n", type=int, required=True)
    sample.add_argument("--m", type=int, default=None)
    sample.add_argument("--alpha", type=float, default=None, help="edge probability (erg)")
    sample.add_argument("--eta-file", type=Path, default=None, help="JSON m x m edge-probability matrix (sbm)")
    sample.add_argument("--variant", choices=[r.value for r in MultiplierRule], default=MultiplierRule.LOWER.value)
    sample.add_argument("--seed", type=int, default=None)
    sample.add_argument("--out", type=Path, required=True)
    sample.set_defaults(func=cmd_sample)

    simulate = sub.add_parser("simulate", help="run a Monte Carlo scenario")
    simulate.add_argument("--model", choices=["erg", "sbm"], required=True)
    simulate.add_argument("--scenario", choices=["null", "perturbed"], default="null")
    simulate.add_argument("--n", type=int, required=True)
    simulate.add_argument("--m", type=int, default=None)
    simulate.add_argument("--reps", type=int, required=True)
    simulate.add_argument("--seed", type=int, default=None)
    simulate.add_argument("--workers", type=int, default=config.DEFAULT_WORKERS)
    simulate.add_argument("--fit", choices=["observed", "vem"], default="observed")
    simulate.add_argument("--variant", choices=[r.value for r in MultiplierRule], default=MultiplierRule.LOWER.value)
    simulate.add_argument("--out-csv", type=Path, default=None)
    simulate.add_argument("--out-json", type=Path, default=None)
    simulate.add_argument("--keep-records", action="store_true")
    simulate.add_argument("--store", action="store_true", help="save the run in the database at NETMISFIT_DB_URL")
    _add_test_options(simulate)
    simulate.set_defaults(func=cmd_simulate)
    return parser


def _seed(args) -> int:
    return config.DEFAULT_SEED if args.seed is None else args.seed


def _echo(args) -> dict:
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k != "func"}


def _emit(report: JsonReport) -> None:
    sys.stdout.write(report.to_json() + "\n")
    sys.stdout.flush()


def cmd_test(args) -> int:
    g = read_graph(args.graph, labels_path=args.labels)
    report, decision = run_test(
        g,
        args.model,
        mode=args.mode,
        size_factor=args.size_factor,
        alpha=args.alpha,
        clamp=args.clamp,
        blocks=args.blocks,
        restarts=args.restarts,
        seed=_seed(args),
        drop_isolated=args.drop_isolated,
        command=_echo(args),
    )
    _emit(report)
    logger.info("%s test on %s: %s", args.model, args.graph, decision.value)
    return decision.exit_code


def _read_eta(path: Optional[Path]):
    if path is None:
        return None
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: not a JSON matrix ({exc})")


def cmd_sample(args) -> int:
    seed = _seed(args)
    g = draw_sample(
        args.model, args.scenario, args.n, seed,
        m=args.m, alpha=args.alpha, eta=_read_eta(args.eta_file), variant=MultiplierRule(args.variant),
    )
    out = args.out
    write_graph(g, out)
    written = [str(out)]
    if g.labels is not None:
        write_labels(g, f"{out}.labels")
        written.append(f"{out}.labels")
    command = {k: v for k, v in _echo(args).items() if k != "out"}
    meta = {"command": command, "seed": seed, "version": __version__, **dict(g.meta)}
    Path(f"{out}.meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(f"{out}.meta.json")

    summary = {"graph": graph_summary(g), "files": written}
    _emit(JsonReport.build(_echo(args), args.model.upper(), summary=summary, seed=seed))
    logger.info("wrote %s", ", ".join(written))
    return 0


def _scenario_spec(args) -> ScenarioSpec:
    options = {"clamp": args.clamp, "restarts": args.restarts, "fit": FitMethod.VEM if args.fit == "vem" else FitMethod.OBSERVED,
               "isolated": IsolatedPolicy.DROP if args.drop_isolated else IsolatedPolicy.ERROR}
    if args.model == "erg":
        options.update(erg_mode=resolve_mode("erg", args.mode), erg_size_factor=resolve_size_factor("erg", args.size_factor))
    else:
        options.update(sbm_mode=resolve_mode("sbm", args.mode), sbm_size_factor=resolve_size_factor("sbm", args.size_factor))
    return ScenarioSpec(
        model=ModelKind(args.model.upper()),
        scenario=ScenarioKind.PERTURBED if args.scenario == "perturbed" else ScenarioKind.NULL,
        n=args.n,
        m=args.m,
        replications=args.reps,
        alpha=args.alpha,
        options=TestOptions(**options),
        master_seed=_seed(args),
        variant=MultiplierRule(args.variant),
    )


def cmd_simulate(args) -> int:
    if args.workers < 1:
        raise InvalidArgument("--workers must be >= 1")
    spec = _scenario_spec(args)
    summary = run_scenario(spec, workers=args.workers, keep_records=args.keep_records)
    csv_text = format_csv([summary])
    if args.out_csv is not None:
        args.out_csv.write_text(csv_text, encoding="utf-8", newline="")

    payload = summary.as_dict()
    payload["csv_row"] = summary.csv_row()
    if args.store:
        from .audit import save_run
        from .db import init_db

        session = init_db(config.DB_URL)()
        try:
            payload["run_id"] = save_run(session, summary)
        finally:
            session.close()

    report = JsonReport.build(_echo(args), spec.model.value, summary=payload, seed=spec.master_seed)
    if args.out_json is not None:
        args.out_json.write_text(report.to_json() + "\n", encoding="utf-8")
    _emit(report)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        sys.stderr.write(f"netmisfit: {exc}\n")
        return EXIT_USAGE

    logging.basicConfig(stream=sys.stderr, level=getattr(logging, str(args.log_level).upper(), logging.INFO), format=config.LOG_FORMAT)
    try:
        return args.func(args)
    except ValidationError as exc:
        logger.error("invalid arguments: %s", exc)
        return EXIT_USAGE
    except NetMisfitError as exc:
        logger.error("%s: %s", exc.reason, exc)
        return exc.exit_code
    except OSError as exc:
        logger.error("i/o error: %s", exc)
        return ParseError.exit_code
    except Exception:
        logger.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    raise SystemExit(main())
