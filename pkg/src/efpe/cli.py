"""Command line entry point: ``efpe {run,compare,oracle,validate-game,dump-sizes}``.

Exit status is 0 on success, 1 when the input (config, game file, schedule)
is invalid and 2 when a run fails at runtime.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import bench
from .game import StructuralError, validate_game
from .oracle import OracleSizeError, lp_oracle
from .sequence_form import SequenceFormGame
from .solvers import ScheduleError
from .textformat import GameParseError, load
from .zoo import GAME_NAMES, GameSpec

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
ZOO_DEFAULT = ("kuhn", "leduc3", "leduc5", "goofspiel3", "drps", "matrix")


def _load_one(source: str):
    """A preset name, or a path to an INI file."""
    if source.endswith(".ini") or Path(source).exists():
        return bench.load_config(source)
    return bench.load_preset(source)


def _overrides(config, args):
    kw = dict(iterations=args.iterations, seconds=args.seconds, reference=args.reference)
    if args.game:
        kw["game"] = GameSpec.parse(args.game)
    if args.metrics:
        kw["metrics"] = tuple(m.strip() for m in args.metrics.split(",") if m.strip())
    if args.cadence:
        kw["cadence"] = bench._parse_cadence(args.cadence)
    if args.no_timing:
        kw["timing"] = False
    if getattr(args, "dump_strategies", False):
        kw["dump_strategies"] = True
    return bench.with_overrides(config, **kw)


def _game_from(args) -> tuple:
    if args.file:
        tree = load(args.file)
        return tree, None
    spec = GameSpec.parse(args.game)
    return spec.build(), spec


class _RunFailure(Exception):
    """Wraps an exception raised after validation succeeded."""


def _compute(fn, *a):
    try:
        return fn(*a)
    except Exception as e:
        raise _RunFailure(f"{type(e).__name__}: {e}") from e


def cmd_run(args) -> int:
    config = _overrides(_load_one(args.config), args)
    game = bench.preflight(config)
    outcome = _compute(bench.execute, config, game)
    target = args.output or config.output
    if target:
        _compute(bench.write_outputs, outcome, target)
    summary = outcome.summary()
    if not config.timing:
        summary["final"]["elapsed_s"] = 0.0
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_compare(args) -> int:
    configs = [_overrides(_load_one(c), args) for c in args.configs]
    bench.check_comparable(configs)
    summary = _compute(bench.compare, configs, args.output)
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def cmd_oracle(args) -> int:
    tree, spec = _game_from(args)
    game = SequenceFormGame.from_tree(tree)
    n = game.idx1.n_sequences * game.idx2.n_sequences
    if n > args.size_cap:
        raise OracleSizeError(f"|S1|*|S2| = {n} exceeds the cap {args.size_cap}")
    if spec is None:
        lp = _compute(lp_oracle, game, args.size_cap)
        ref = {"schema_version": bench.SCHEMA_VERSION, "game": tree.name or args.file, "value": lp.value,
               "x": lp.x.tolist(), "y": lp.y.tolist(), "nash_gap": lp.gap, "kind": "nash (LP)"}
    else:
        ref = _compute(bench.oracle_reference, game, spec)
    text = json.dumps(ref, indent=2, sort_keys=True) + "\n"
    if args.output:
        Path(args.output).write_text(text, encoding="utf-8")
        print(json.dumps({k: ref[k] for k in ("game", "value", "nash_gap", "kind")}, sort_keys=True))
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_validate(args) -> int:
    tree, _ = _game_from(args)
    problems = validate_game(tree)
    if problems:
        for p in problems:
            print(p)
        return EXIT_INVALID
    game = SequenceFormGame.from_tree(tree)
    print(f"ok: {tree.name or args.file}: {json.dumps(game.sizes(), sort_keys=True)}")
    return EXIT_OK


def cmd_sizes(args) -> int:
    rows = []
    for name in args.games or ZOO_DEFAULT:
        spec = GameSpec.parse(name)
        s = SequenceFormGame.from_tree(spec.build()).sizes()
        rows.append({"game": spec.label(), "I1": s["infosets"][0], "I2": s["infosets"][1],
                     "S1": s["sequences"][0], "S2": s["sequences"][1], "nodes": s["nodes"]})
    if args.json:
        print(json.dumps(rows, indent=2))
        return EXIT_OK
    # per player; sequence counts include the empty sequence
    keys = ("I1", "I2", "S1", "S2", "nodes")
    width = max(4, max(len(r["game"]) for r in rows))
    print("game".ljust(width) + "".join(f"{k:>8}" for k in keys))
    for r in rows:
        print(r["game"].ljust(width) + "".join(f"{r[k]:>8}" for k in keys))
    return EXIT_OK


def _add_run_overrides(p):
    p.add_argument("--game", help="override the game, e.g. kuhn, leduc:ranks=4, drps")
    p.add_argument("--iterations", type=lambda v: int(float(v)), help="iteration budget")
    p.add_argument("--seconds", type=float, help="wall-clock budget")
    p.add_argument("--metrics", help="comma separated subset of nash_gap,avg_infoset_regret,l2_ref")
    p.add_argument("--cadence", help="phase:N, log:N or stride:N")
    p.add_argument("--reference", help="reference equilibrium JSON, or 'oracle'")
    p.add_argument("--no-timing", action="store_true", help="write elapsed_s as 0 for reproducible files")
    p.add_argument("--output", "-o", help="CSV path; a JSON summary is written next to it")


def _add_game_source(p):
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("game", nargs="?", help=f"zoo game ({', '.join(GAME_NAMES)})")
    g.add_argument("--file", "-f", help="game in the text format")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="efpe", description="Perfect-equilibrium solvers and benchmarks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run one configuration")
    p.add_argument("config", help="INI file or preset name (" + ", ".join(bench.preset_names()) + ")")
    p.add_argument("--dump-strategies", action="store_true", help="also write every recorded profile")
    _add_run_overrides(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="run several configurations on one game")
    p.add_argument("configs", nargs="+", help="INI files or preset names")
    _add_run_overrides(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("oracle", help="LP equilibrium of a small game")
    _add_game_source(p)
    p.add_argument("--size-cap", type=int, default=100_000)
    p.add_argument("--output", "-o")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("validate-game", help="check a game for structural problems")
    _add_game_source(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("dump-sizes", help="infoset and sequence counts")
    p.add_argument("games", nargs="*")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_sizes)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _RunFailure as e:
        print(f"runtime error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except bench.ConfigError as e:
        for path, reason in e.errors:
            print(f"error: {path}: {reason}", file=sys.stderr)
        return EXIT_INVALID
    except GameParseError as e:
        for line, reason in e.errors:
            print(f"error: line {line}: {reason}", file=sys.stderr)
        return EXIT_INVALID
    except (ScheduleError, StructuralError, OracleSizeError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
