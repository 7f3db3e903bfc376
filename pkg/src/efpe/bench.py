"""Configuration-driven experiment runner.

A run is described by one INI file with a ``[run]`` section::

    [run]
    game = kuhn
    algorithm = efpe          # efpe | cfr | oomd | oomd_eps
    iterations = 100000
    beta = 1.001
    eta = 2.0
    eps0 = 1e-4
    rho = 0.9999
    d = 2
    cadence = log:10
    output = kuhn_efpe.csv

Unknown keys and malformed values are reported with their ``section.key``
path before any computation starts.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields, replace
from importlib import resources
from pathlib import Path

import numpy as np

from .oracle import lp_oracle, matrix_to_sequence, weak_dominance_equilibrium
from .regularizer import max_perturbation
from .sequence_form import SequenceFormGame
from .solvers import (CSV_HEADER, Cadence, SolveResult, cfr, compute_efpe, make_schedule,
                      oomd_baseline, rho_for_budget)
from .zoo import GameSpec

SCHEMA_VERSION = 1
ALGORITHMS = ("efpe", "cfr", "oomd", "oomd_eps")

DEFAULTS = {
    "beta": 1.001,
    "eta": 2.0,
    "eps0": 1e-4,
    "rho": 0.9999,
    "eps_final": None,
    "d": 2.0,
    "theorem_mode": False,
    "eps_fixed": 0.0,
    "iterations": None,
    "seconds": None,
    "cadence": "log:10",
    "metrics": "nash_gap,avg_infoset_regret,l2_ref",
    "output": None,
    "reference": None,
    "timing": True,
    "dump_strategies": False,
    "label": None,
}


class ConfigError(ValueError):
    """Invalid run configuration; ``errors`` lists ``(path, reason)``."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(f"{p}: {r}" for p, r in self.errors))


@dataclass
class RunConfig:
    game: GameSpec
    algorithm: str
    beta: float = 1.001
    eta: float = 2.0
    eps0: float = 1e-4
    rho: float = 0.9999
    eps_final: float | None = None
    d: float = 2.0
    theorem_mode: bool = False
    eps_fixed: float = 0.0
    iterations: int | None = None
    seconds: float | None = None
    cadence: Cadence = field(default_factory=lambda: Cadence("log", 10))
    metrics: tuple = ("nash_gap", "avg_infoset_regret", "l2_ref")
    output: str | None = None
    reference: str | None = None
    timing: bool = True
    dump_strategies: bool = False
    label: str | None = None

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.algorithm == "oomd_eps":
            return f"oomd({self.eps_fixed:g})"
        return self.algorithm


def _parse_bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _parse_cadence(v: str) -> Cadence:
    kind, _, val = v.partition(":")
    return Cadence(kind.strip(), float(val) if val else 100.0)


def config_from_mapping(values: dict, section: str = "run", base_dir: Path | None = None) -> RunConfig:
    """Build a :class:`RunConfig` from string values, collecting every error."""
    errors = []
    known = set(DEFAULTS) | {"game", "algorithm"}
    for k in values:
        if k not in known:
            errors.append((f"{section}.{k}", "unknown key"))
    out = {}

    def get(key, conv):
        if key not in values or values[key] in (None, ""):
            return
        try:
            out[key] = conv(values[key])
        except (TypeError, ValueError) as e:
            errors.append((f"{section}.{key}", str(e)))

    get("game", lambda v: GameSpec.parse(v) if isinstance(v, str) else v)
    if "game" not in values:
        errors.append((f"{section}.game", "required"))
    alg = values.get("algorithm")
    if alg is None:
        errors.append((f"{section}.algorithm", "required"))
    elif alg not in ALGORITHMS:
        errors.append((f"{section}.algorithm", f"must be one of {', '.join(ALGORITHMS)}"))
    for key in ("beta", "eta", "eps0", "rho", "eps_final", "d", "eps_fixed", "seconds"):
        get(key, float)
    get("iterations", lambda v: int(float(v)))
    get("theorem_mode", lambda v: v if isinstance(v, bool) else _parse_bool(v))
    get("timing", lambda v: v if isinstance(v, bool) else _parse_bool(v))
    get("dump_strategies", lambda v: v if isinstance(v, bool) else _parse_bool(v))
    get("cadence", lambda v: v if isinstance(v, Cadence) else _parse_cadence(v))
    get("metrics", lambda v: tuple(m.strip() for m in v.split(",") if m.strip()) if isinstance(v, str) else tuple(v))
    for key in ("output", "reference", "label"):
        if values.get(key):
            p = str(values[key])
            if key != "label" and base_dir is not None and p != "oracle" and not Path(p).is_absolute():
                p = str(base_dir / p)
            out[key] = p

    it, sec = out.get("iterations"), out.get("seconds")
    if it is None and sec is None:
        errors.append((f"{section}.iterations", "a budget (iterations and/or seconds) is required"))
    if it is not None and it <= 0:
        errors.append((f"{section}.iterations", "must be positive"))
    if sec is not None and sec <= 0:
        errors.append((f"{section}.seconds", "must be positive"))
    if alg in ("cfr", "oomd", "oomd_eps") and it is None:
        errors.append((f"{section}.iterations", f"required for {alg}"))
    for key in ("eta", "beta", "d"):
        if key in out and not out[key] > 0:
            errors.append((f"{section}.{key}", "must be positive"))
    bad = set(out.get("metrics", ())) - {"nash_gap", "avg_infoset_regret", "l2_ref"}
    if bad:
        errors.append((f"{section}.metrics", f"unknown metrics {sorted(bad)}"))
    if "eps_final" in out:
        if "rho" in out:
            errors.append((f"{section}.eps_final", "give either rho or eps_final, not both"))
        if it is None:
            errors.append((f"{section}.eps_final", "needs an iteration budget"))
    if alg == "oomd" and out.get("eps_fixed", 0.0) != 0.0:
        errors.append((f"{section}.eps_fixed", "plain oomd runs unperturbed; use oomd_eps"))
    if errors:
        raise ConfigError(errors)
    return RunConfig(algorithm=alg, **out)


def load_config(path) -> RunConfig:
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except configparser.Error as e:
        raise ConfigError([(str(path), str(e))]) from None
    if "run" not in cp:
        raise ConfigError([(f"{path}", "missing [run] section")])
    return config_from_mapping(dict(cp["run"]), "run", path.parent)


def preset_names() -> list[str]:
    return sorted(p.name[:-4] for p in resources.files("efpe.presets").iterdir() if p.name.endswith(".ini"))


def load_preset(name: str) -> RunConfig:
    res = resources.files("efpe.presets") / f"{name}.ini"
    if not res.is_file():
        raise ConfigError([("preset", f"unknown preset {name!r}; available: {', '.join(preset_names())}")])
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.read_string(res.read_text(encoding="utf-8"))
    return config_from_mapping(dict(cp["run"]), "run")


# -- references ------------------------------------------------------------------

def oracle_reference(game: SequenceFormGame, spec: GameSpec) -> dict:
    """LP equilibrium; for the matrix game the weak-dominance perfect equilibrium."""
    lp = lp_oracle(game)
    out = {"schema_version": SCHEMA_VERSION, "game": spec.label(), "value": lp.value,
           "x": lp.x.tolist(), "y": lp.y.tolist(), "nash_gap": lp.gap, "kind": "nash (LP)"}
    if spec.name == "matrix":
        M = game.payoff.dense()[1:, 1:]
        v, px, py, removed = weak_dominance_equilibrium(M)
        out.update(value=v, x=matrix_to_sequence(px).tolist(), y=matrix_to_sequence(py).tolist(),
                   kind="perfect (weak dominance + LP)", eliminated=[list(map(list, r)) for r in removed])
    return out


def load_reference(path_or_keyword, game, spec):
    if path_or_keyword is None:
        return None
    if path_or_keyword == "oracle":
        ref = oracle_reference(game, spec)
    else:
        with open(path_or_keyword, encoding="utf-8") as fh:
            ref = json.load(fh)
    x, y = np.asarray(ref["x"], float), np.asarray(ref["y"], float)
    if x.shape != (game.idx1.n_sequences,) or y.shape != (game.idx2.n_sequences,):
        raise ConfigError([("run.reference", "strategy lengths do not match the game")])
    return x, y


# -- running ---------------------------------------------------------------------

@dataclass
class RunOutcome:
    config: RunConfig
    result: SolveResult
    schedule_report: tuple = ()
    schedule_label: str = ""

    def summary(self) -> dict:
        last = self.result.trace.last
        return {
            "algorithm": self.config.name,
            "game": self.config.game.label(),
            "iterations": self.result.iterations,
            "phases": self.result.phases,
            "final": {k: _num(v) for k, v in asdict(last).items()},
            "schedule": self.schedule_label,
            "schedule_report": list(self.schedule_report),
        }


def _num(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return v


def _rho(config: RunConfig) -> float:
    if config.eps_final is None:
        return config.rho
    return rho_for_budget(config.beta, config.eps0, config.eps_final, config.iterations)


def preflight(config: RunConfig, game: SequenceFormGame | None = None) -> SequenceFormGame:
    """Everything that can be rejected before computing: game, schedule, reference."""
    game = game or SequenceFormGame.from_tree(config.game.build())
    if config.algorithm == "efpe":
        make_schedule(config.beta, config.eta, config.eps0, _rho(config), config.d, config.theorem_mode, game)
    if config.algorithm == "oomd_eps":
        cap = min(max_perturbation(game.idx1), max_perturbation(game.idx2))
        if not 0 < config.eps_fixed <= cap:
            raise ConfigError([("run.eps_fixed", f"must lie in (0, {cap!r}] for this game")])
    if config.reference not in (None, "oracle"):
        load_reference(config.reference, game, config.game)
    return game


def execute(config: RunConfig, game: SequenceFormGame | None = None) -> RunOutcome:
    game = game or SequenceFormGame.from_tree(config.game.build())
    ref = load_reference(config.reference, game, config.game)
    metrics = tuple(m for m in config.metrics if m != "l2_ref" or ref is not None)
    common = dict(cadence=config.cadence, reference=ref, metrics=metrics,
                  keep_strategies=config.dump_strategies)
    if config.algorithm == "efpe":
        sched = make_schedule(config.beta, config.eta, config.eps0, _rho(config), config.d,
                              config.theorem_mode, game)
        res = compute_efpe(game, sched, config.iterations, config.seconds, **common)
        return RunOutcome(config, res, sched.report, sched.label)
    if config.algorithm == "cfr":
        return RunOutcome(config, cfr(game, config.iterations, config.seconds, **common))
    eps = 0.0 if config.algorithm == "oomd" else config.eps_fixed
    return RunOutcome(config, oomd_baseline(game, eps, config.eta, config.iterations, config.seconds, **common))


def trace_csv(result: SolveResult, timing: bool = True, prefix: tuple = ()) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    for rec in result.trace.records:
        w.writerow(list(prefix) + rec.row(timing))
    return buf.getvalue()


def write_outputs(outcome: RunOutcome, path) -> None:
    """CSV trace at ``path``, JSON summary next to it, strategies if requested."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(CSV_HEADER) + "\n")
        fh.write(trace_csv(outcome.result, outcome.config.timing))
    summary = {"schema_version": SCHEMA_VERSION, **outcome.summary()}
    if not outcome.config.timing:
        summary["final"]["elapsed_s"] = 0.0
    path.with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    if outcome.config.dump_strategies:
        strat = [{"iter": r.iter, "x": z[0].tolist(), "y": z[1].tolist()}
                 for r, z in zip(outcome.result.trace.records, outcome.result.trace.strategies)]
        path.with_suffix(".strategies.json").write_text(json.dumps(strat) + "\n", encoding="utf-8")


def run(config: RunConfig, output=None) -> RunOutcome:
    game = preflight(config)
    outcome = execute(config, game)
    target = output or config.output
    if target:
        write_outputs(outcome, target)
    return outcome


def check_comparable(configs: list) -> SequenceFormGame:
    """Reject comparisons that cannot run; returns the shared game."""
    if len(configs) < 2:
        raise ConfigError([("compare", "needs at least two configurations")])
    games = {c.game.label() for c in configs}
    if len(games) != 1:
        raise ConfigError([("compare", f"all configurations must use the same game, got {sorted(games)}")])
    names = [c.name for c in configs]
    if len(set(names)) != len(names):
        raise ConfigError([("compare", f"run names must be unique, got {names}")])
    game = SequenceFormGame.from_tree(configs[0].game.build())
    for c in configs:
        preflight(c, game)
    return game


def compare(configs: list, output=None) -> dict:
    """Run several configurations on one game and summarize the final metrics.

    The merged CSV has the run name as an extra leading column.  The summary
    lists the final metrics per run and which run is best on each metric.
    """
    game = check_comparable(configs)
    outcomes = [execute(c, game) for c in configs]
    finals = {o.config.name: o.summary()["final"] for o in outcomes}
    best = {}
    for metric in ("nash_gap", "avg_infoset_regret", "l2_ref"):
        vals = {n: f[metric] for n, f in finals.items() if isinstance(f[metric], float)}
        if vals:
            best[metric] = min(vals, key=vals.get)
    orderings = {}
    if "efpe" in finals:
        for metric in ("avg_infoset_regret", "l2_ref"):
            vals = {n: f[metric] for n, f in finals.items() if isinstance(f[metric], float)}
            if "efpe" in vals and len(vals) > 1:
                orderings[f"efpe_smallest_{metric}"] = all(vals["efpe"] < v for n, v in vals.items() if n != "efpe")
    eps_runs = sorted((o.config.eps_fixed, o.config.name) for o in outcomes if o.config.algorithm == "oomd_eps")
    if len(eps_runs) >= 2 and all(isinstance(finals[n]["l2_ref"], float) for _, n in eps_runs):
        orderings["oomd_eps_l2_ordered"] = all(finals[a[1]]["l2_ref"] <= finals[b[1]]["l2_ref"]
                                               for a, b in zip(eps_runs, eps_runs[1:]))
    summary = {"schema_version": SCHEMA_VERSION, "game": configs[0].game.label(), "runs": finals, "best": best,
               "orderings": orderings}
    if output:
        path = Path(output)
        path.parent.mkdir(parents=True, exist_ok=True)
        timing = all(c.timing for c in configs)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("algorithm," + ",".join(CSV_HEADER) + "\n")
            for o in outcomes:
                fh.write(trace_csv(o.result, timing, (o.config.name,)))
        path.with_suffix(".json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                             encoding="utf-8")
    return summary


def with_overrides(config: RunConfig, **kw) -> RunConfig:
    """Replace fields and validate the result like a freshly loaded config."""
    merged = replace(config, **{k: v for k, v in kw.items() if v is not None})
    values = {}
    for f in fields(RunConfig):
        v = getattr(merged, f.name)
        if f.name in ("game", "algorithm") or (v is not None and v != DEFAULTS.get(f.name)):
            values[f.name] = v
    return config_from_mapping(values)
