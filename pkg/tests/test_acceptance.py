"""Acceptance criteria, one test each.

Each test prints and records a single ``criterion N: PASS|FAIL`` line with
the measured numbers; the lines are repeated at the end of the pytest run.
Run alone with ``pytest tests/test_acceptance.py -v``; the long runs
(criteria 7 and 8) take several minutes.
"""

import math
import time

import numpy as np
import pytest

from efpe import bench
from efpe.oracle import regularized_equilibrium
from efpe.regularizer import (PerturbedDGF, ProxParams, bregman, composite_prox, compute_weights, dgf_gradient,
                              dgf_value, local_conjugate_gradient, local_dgf, local_conjugate_value,
                              max_perturbation)
from efpe.sequence_form import is_sequence_strategy, operator_norm, validate_perturbed
from efpe.solvers import Cadence, PhaseState, make_schedule, solve_phase

from conftest import ACCEPTANCE_LINES, GAMES_UP_TO_LEDUC3, interior_strategy, load_game
from oracles import constrained_prox_oracle, grid_conjugate_value

FLOW_TOL = 1e-9

# filled by criteria 6-9, checked by criterion 10: label -> (records checked, violations)
FEASIBILITY = {}


def report(n, title, ok, detail, started=None, limit=None):
    if started is not None:
        elapsed = time.perf_counter() - started
        in_time = elapsed < limit
        detail = f"{detail}; runtime {elapsed:.1f}s (limit {limit:.0f}s)"
        ok = ok and in_time
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    print(line)
    ACCEPTANCE_LINES[n] = line
    assert ok, line


def check_profiles(label, game, pairs):
    """Flow conservation and eps-feasibility of recorded ``(eps, x, y)`` triples."""
    bad = 0
    for eps, x, y in pairs:
        for v, idx in ((x, game.idx1), (y, game.idx2)):
            if not is_sequence_strategy(v, idx, FLOW_TOL):
                bad += 1
            elif eps > 0 and not validate_perturbed(v, eps, idx):
                bad += 1
    FEASIBILITY[label] = (len(pairs), bad)


def trace_profiles(result):
    return [(rec.epsilon if np.isfinite(rec.epsilon) else 0.0, x, y)
            for rec, (x, y) in zip(result.trace.records, result.trace.strategies)]


# -- 1 ------------------------------------------------------------------------------

EXPECTED_SIZES = {  # (infosets, sequences)
    "kuhn": (6, 13),
    "leduc3": (114, 337),
    "leduc5": (390, 911),
    "goofspiel3": (57, 118),
    "drps": (3, 10),
}


def test_criterion_01_size_table():
    t0 = time.perf_counter()
    got, wrong = {}, []
    for name, expected in EXPECTED_SIZES.items():
        s = load_game(name).sizes()
        got[name] = (s["infosets"][0], s["sequences"][0])
        if s["infosets"] != (expected[0],) * 2 or s["sequences"] != (expected[1],) * 2:
            wrong.append(f"{name} has {got[name]}, expected {expected}")
    detail = "all sizes exact" if not wrong else "; ".join(wrong)
    report(1, "size table", not wrong, detail, t0, 1.0)


# -- 2 ------------------------------------------------------------------------------

def test_criterion_02_local_conjugate_against_grid():
    t0 = time.perf_counter()
    rng = np.random.default_rng(20)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(2, 5))
        eps = float(rng.uniform(0, 1 / (2 * n))) if rng.random() < 0.8 else 0.0
        g = rng.normal(scale=2.0, size=n)
        grid_best, _ = grid_conjugate_value(g, eps)
        w = local_conjugate_gradient(g, eps)
        val = w @ g - local_dgf(w, eps) if w.min() > eps else local_conjugate_value(g, eps)
        worst = max(worst, abs(val - grid_best))
    report(2, "closed-form local conjugate vs grid", worst <= 1e-4,
           f"max objective difference {worst:.2e} (tol 1e-4) over 200 cases", t0, 10.0)


# -- 3 ------------------------------------------------------------------------------

def test_criterion_03_prox_against_constrained_ascent():
    t0 = time.perf_counter()
    idx = load_game("kuhn").idx1
    w = compute_weights(idx)
    rng = np.random.default_rng(30)
    worst = 0.0
    for _ in range(50):
        eps = float(rng.uniform(0, max_perturbation(idx))) if rng.random() < 0.7 else 0.0
        lam = float(10 ** rng.uniform(-1, 3)) if rng.random() < 0.8 else math.inf
        eta = float(10 ** rng.uniform(-1, 1))
        g = rng.normal(scale=2.0, size=idx.n_sequences)
        anchor = interior_strategy(idx, rng, eps)
        x_lib = composite_prox(PerturbedDGF(idx, eps, w), ProxParams(lam, eta), g, anchor)
        _, val_ref, objective = constrained_prox_oracle(idx, w, eps, lam, eta, g, anchor)
        worst = max(worst, abs(objective(x_lib) - val_ref))
    report(3, "composite prox vs constrained ascent on Kuhn", worst <= 1e-6,
           f"max objective difference {worst:.2e} (tol 1e-6) over 50 draws", t0, 60.0)


# -- 4 ------------------------------------------------------------------------------

def test_criterion_04_gradient_finite_differences():
    t0 = time.perf_counter()
    rng = np.random.default_rng(40)
    h = 1e-6
    worst, where = 0.0, ""
    for name in GAMES_UP_TO_LEDUC3:
        game = load_game(name)
        for idx in (game.idx1, game.idx2):
            for frac in (0.0, 0.5):
                eps = frac * max_perturbation(idx)
                dgf = PerturbedDGF(idx, eps)
                x = interior_strategy(idx, rng, eps)
                grad = dgf_gradient(dgf, x)
                fd = np.empty_like(x)
                for i in range(x.size):
                    e = np.zeros_like(x)
                    e[i] = h
                    fd[i] = (dgf_value(dgf, x + e) - dgf_value(dgf, x - e)) / (2 * h)
                err = float(np.max(np.abs(fd - grad)))
                if err > worst:
                    worst, where = err, f"{name} player {idx.player} eps={eps:.3g}"
    report(4, "gradient vs central differences", worst <= 1e-4,
           f"max componentwise error {worst:.2e} (tol 1e-4, worst at {where})", t0, 60.0)


# -- 5 ------------------------------------------------------------------------------

def test_criterion_05_strong_convexity_and_bound():
    t0 = time.perf_counter()
    rng = np.random.default_rng(50)
    min_slack, max_ratio = math.inf, 0.0
    for name in GAMES_UP_TO_LEDUC3 + ("leduc5",):
        game = load_game(name)
        for idx in (game.idx1, game.idx2):
            cap = max_perturbation(idx)
            for k in range(500):
                eps = cap * (k % 5) / 5
                dgf = PerturbedDGF(idx, eps)
                conc = (0.3, 1.0, 3.0)[k % 3]
                x = interior_strategy(idx, rng, eps, conc)
                a = interior_strategy(idx, rng, eps, conc)
                min_slack = min(min_slack, bregman(dgf, x, a) - 0.5 * float(np.sum((x - a) ** 2)))
                max_ratio = max(max_ratio, abs(dgf_value(dgf, x)) / dgf.bound())
    ok = min_slack >= -1e-12 and max_ratio <= 1.0
    report(5, "strong convexity and boundedness", ok,
           f"min D - |x-a|^2/2 = {min_slack:.2e}, max |d|/bound = {max_ratio:.3f} "
           f"(1000 strategies per game)", t0, 60.0)


# -- 6 ------------------------------------------------------------------------------

def test_criterion_06_linear_last_iterate_rate():
    t0 = time.perf_counter()
    game = load_game("matrix")
    lam, eps, eta = 10.0, 0.01, 0.1
    limit = 1 / (math.sqrt(2) * operator_norm(game.payoff))
    d1, d2 = PerturbedDGF(game.idx1, eps), PerturbedDGF(game.idx2, eps)
    xs, ys, _ = regularized_equilibrium(game, d1, d2, lam)
    dist, profiles = [], []

    def on_round(t, x, y):
        dist.append(math.sqrt(float(np.sum((x - xs) ** 2) + np.sum((y - ys) ** 2))))
        profiles.append((eps, x.copy(), y.copy()))

    x0, y0 = game.idx1.uniform(), game.idx2.uniform()
    solve_phase(game, d1, d2, lam, eta, 2000, PhaseState(x0, y0, x0.copy(), y0.copy()), on_round=on_round)
    check_profiles("criterion 6", game, profiles)
    t = np.arange(1, 2001)
    bound_shape = (lam / (lam + eta)) ** (t / 2)
    ratio = np.asarray(dist) / bound_shape
    c = float(np.max(ratio[49:100]))  # fitted on t in [50, 100]
    after = ratio[100:]  # t in (100, 2000]
    frac = float(np.mean(after > c))
    ok = eta <= limit and frac <= 0.05
    report(6, "linear last-iterate rate", ok,
           f"eta={eta} <= {limit:.4f}, c={c:.3g}, {100 * frac:.1f}% of t in (100, 2000] above "
           f"c (lam/(lam+eta))^(t/2) (max 5%), distance at t=2000 {dist[-1]:.2e}", t0, 30.0)


# -- 7 ------------------------------------------------------------------------------

def test_criterion_07_distance_to_perfect_equilibrium():
    t0 = time.perf_counter()
    game = load_game("matrix")
    cadence = Cadence("log", 10)
    efpe_cfg = bench.with_overrides(bench.load_preset("matrix_distance"), cadence=cadence, dump_strategies=True)
    assert efpe_cfg.iterations == 1_000_000
    efpe = bench.execute(efpe_cfg, game)
    plateaus = {}
    for e in ("0.01", "0.001"):
        # same budget as the tracking run, so the final value is the terminal plateau
        cfg = bench.with_overrides(bench.load_preset(f"oomd_eps_{e}"), game=efpe_cfg.game, reference="oracle",
                                   metrics=("l2_ref",), cadence=cadence, dump_strategies=True,
                                   iterations=efpe_cfg.iterations)
        res = bench.execute(cfg, game).result
        it, l2 = res.trace.column("iter"), res.trace.column("l2_ref")
        tail = l2[it >= it[-1] / 10]
        plateaus[e] = (float(l2[-1]), float((tail.max() - tail.min()) / l2[-1]))
        check_profiles(f"criterion 7 oomd({e})", game, trace_profiles(res))
    check_profiles("criterion 7 efpe", game, trace_profiles(efpe.result))
    final = efpe.result.trace.last.l2_ref
    ok = all(final * 10 <= p for p, _ in plateaus.values()) and all(s < 0.05 for _, s in plateaus.values())
    parts = ", ".join(f"oomd({e}) plateau {p:.3g} (last-decade spread {100 * s:.1f}%)"
                      for e, (p, s) in plateaus.items())
    report(7, "EFPE tracking on the matrix game", ok,
           f"efpe l2 {final:.3g} after {efpe.result.iterations} iterations; {parts}; need 10x below both",
           t0, 300.0)


# -- 8 ------------------------------------------------------------------------------

BASELINES = ("cfr", "oomd", "oomd_eps_0.01", "oomd_eps_0.001")


def test_criterion_08_refinement_ordering():
    t0 = time.perf_counter()
    cadence = Cadence("log", 1)
    lines, ok = [], True
    for name in ("kuhn", "drps"):
        game = load_game(name)
        spec = bench.GameSpec.parse(name)
        finals = {}
        for preset in ("refinement",) + BASELINES:
            cfg = bench.with_overrides(bench.load_preset(preset), game=spec, cadence=cadence,
                                       metrics=("avg_infoset_regret",), dump_strategies=True)
            assert cfg.iterations == 100_000
            res = bench.execute(cfg, game).result
            finals[cfg.name] = res.trace.last.avg_infoset_regret
            check_profiles(f"criterion 8 {name} {cfg.name}", game, trace_profiles(res))
        mine = finals.pop("efpe")
        losses = [k for k, v in finals.items() if not mine < v]
        ok = ok and not losses
        others = ", ".join(f"{k} {v:.3g}" for k, v in finals.items())
        verdict = "below all" if not losses else "not below " + ", ".join(losses)
        lines.append(f"{name}: efpe {mine:.3g} vs {others} ({verdict})")
    report(8, "average infoset regret ordering at 1e5 iterations", ok, "; ".join(lines), t0, 600.0)


# -- 9 ------------------------------------------------------------------------------

def test_criterion_09_gap_trend():
    t0 = time.perf_counter()
    game = load_game("matrix")
    cfg = bench.with_overrides(bench.load_preset("gap_trend"), dump_strategies=True)
    sched = make_schedule(cfg.beta, cfg.eta, cfg.eps0, cfg.rho, cfg.d, cfg.theorem_mode, game)
    lam_growth = [sched.lam(k) / 1.001 ** (k / 2) for k in (0, 1000, 5000)]
    outcome = bench.execute(cfg, game)
    res = outcome.result
    check_profiles("criterion 9", game, trace_profiles(res))
    it, gap = res.trace.column("iter"), res.trace.column("nash_gap")
    window = (it >= 1e3) & (it <= 1e5)
    slope = float(np.polyfit(np.log(it[window]), np.log(gap[window]), 1)[0])
    theta = np.allclose(lam_growth, lam_growth[0], rtol=1e-6)
    ok = theta and slope <= -0.4 and cfg.theorem_mode
    report(9, "Nash gap trend in theorem mode", ok,
           f"log-log slope {slope:.3f} over T in [1e3, 1e5] (need <= -0.4), final gap {gap[-1]:.2e}, "
           f"lam_k / beta^(k/2) constant: {theta}; {outcome.schedule_label}", t0, 300.0)


# -- 10 -----------------------------------------------------------------------------

def test_criterion_10_feasibility_invariants():
    expected = ("criterion 6", "criterion 7", "criterion 8", "criterion 9")
    missing = [e for e in expected if not any(k.startswith(e) for k in FEASIBILITY)]
    checked = sum(n for n, _ in FEASIBILITY.values())
    bad = sum(b for _, b in FEASIBILITY.values())
    ok = not missing and bad == 0 and checked > 0
    detail = f"{checked} recorded profiles from {len(FEASIBILITY)} runs, {bad} violations"
    if missing:
        detail += f"; no records from {', '.join(missing)}"
    report(10, "flow conservation and eps-feasibility", ok, detail)


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-v"]))
