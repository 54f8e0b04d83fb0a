"""Command-line front end: ``aorta-mc run|check|explore|check-model``.

Exit codes: 0 every verdict as expected, 1 some verdict differs from its
expectation, 2 unreadable or malformed input, 3 state cap exceeded.
Verdict reports are JSON lines on standard output.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .checker import (
    MasSystem, ModelSystem, StateSpaceModel, check, explore_full, negated_automaton,
    validate_counterexample,
)
from .errors import AortaMCError, ConfigError, ResourceLimit
from .logic import term
from .psl import PslContext, parse_properties
from .runtime import format_step, load_config, run

EXIT_OK, EXIT_MISMATCH, EXIT_INPUT, EXIT_LIMIT = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aorta-mc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="MAS configuration (JSON)")
        p.add_argument("--state-cap", type=int, default=None, help="maximum number of program states")

    p = sub.add_parser("run", help="execute one seeded interleaving and print its trace")
    common(p)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("check", help="check properties on the fly")
    common(p)
    p.add_argument("--properties", help="property file (default: the one named in the config)")
    p.add_argument("--out", default="counterexamples", help="directory for counterexample files")

    p = sub.add_parser("explore", help="explore the full state space and write it to a file")
    common(p)
    p.add_argument("--out", default="model.json", help="model file to write")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("check-model", help="check properties against an explored state space")
    common(p, config_required=False)
    p.add_argument("--model", required=True, help="model file written by explore")
    p.add_argument("--properties", help="property file (default: the one named in the config)")
    p.add_argument("--out", default="counterexamples", help="directory for counterexample files")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ResourceLimit as exc:
        _error(str(exc))
        return EXIT_LIMIT
    except (AortaMCError, OSError) as exc:
        _error(f"{type(exc).__name__}: {exc}")
        return EXIT_INPUT


def _error(message: str) -> None:
    print(f"aorta-mc: error: {message}", file=sys.stderr)


def cmd_run(args) -> int:
    cfg = load_config(args.config)

    def show(n, s, info):
        print(format_step(n, info), flush=True)

    final = run(cfg.initial, seed=args.seed, state_cap=args.state_cap, on_step=show)
    for a in final.agents:
        beliefs = ", ".join(str(b) for b in a.beliefs.sorted())
        print(f"end: {a.name} | beliefs=[{beliefs}]")
    return EXIT_OK


def _properties(args, cfg, context):
    path = args.properties or (cfg.properties if cfg is not None else None)
    if path is None:
        raise ConfigError("no property file given and none named in the configuration")
    return parse_properties(Path(path).read_text(encoding="utf-8"), context)


def _check_all(system, props, out_dir) -> int:
    status = EXIT_OK
    for prop in props:
        start = time.perf_counter()
        verdict = check(system, prop.formula, negated_automaton(prop.formula))
        elapsed = time.perf_counter() - start
        expected = not verdict.satisfied if prop.expect_fail else verdict.satisfied
        report = {
            "property": prop.name,
            "expect_fail": prop.expect_fail,
            "verdict": verdict.result,
            "as_expected": expected,
            "states": verdict.states,
            "product_states": verdict.product_states,
            "seconds": round(elapsed, 4),
            "counterexample": None,
        }
        if verdict.counterexample is not None:
            report["counterexample_valid"] = validate_counterexample(
                system, prop.formula, verdict.counterexample,
            )
            out = Path(out_dir)
            out.mkdir(parents=True, exist_ok=True)
            path = out / f"{prop.name}.json"
            data = {"property": prop.name, "formula": str(prop.formula)}
            data.update(verdict.counterexample.to_dict())
            path.write_text(json.dumps(data, indent=1, sort_keys=True) + "\n", encoding="utf-8")
            report["counterexample"] = str(path)
        print(json.dumps(report, sort_keys=True), flush=True)
        if not expected:
            status = EXIT_MISMATCH
    return status


def cmd_check(args) -> int:
    cfg = load_config(args.config)
    s0 = cfg.initial
    props = _properties(args, cfg, PslContext.from_org(s0.names, s0.program.org.facts))
    return _check_all(MasSystem(s0, args.state_cap), props, args.out)


def cmd_explore(args) -> int:
    cfg = load_config(args.config)
    start = time.perf_counter()
    model = explore_full(cfg.initial, workers=args.workers, state_cap=args.state_cap)
    model.save(args.out)
    print(json.dumps({
        "model": str(args.out),
        "states": len(model.states),
        "edges": len(model.edges),
        "end_states": len(model.end_states),
        "seconds": round(time.perf_counter() - start, 4),
    }, sort_keys=True))
    return EXIT_OK


def cmd_check_model(args) -> int:
    cfg = load_config(args.config) if args.config else None
    model = StateSpaceModel.load(args.model)
    first = model.states[model.initial]
    org = [term(f) for f in first["agents"][first["order"][0]]["org"]]
    props = _properties(args, cfg, PslContext.from_org(first["order"], org))
    return _check_all(ModelSystem(model), props, args.out)


_COMMANDS = {
    "run": cmd_run,
    "check": cmd_check,
    "explore": cmd_explore,
    "check-model": cmd_check_model,
}


if __name__ == "__main__":
    sys.exit(main())
