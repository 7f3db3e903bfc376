"""
Refinement quality on Kuhn poker
================================

A Nash equilibrium only has to be sensible where play actually goes.  The
average infoset regret asks every infoset to be sensible, reached or not.
Here we compare the perturbed solver with CFR and OOMD on both measures.
"""
from efpe import GameSpec, SequenceFormGame, avg_infoset_regret, cfr, compute_efpe, make_schedule, oomd_baseline
from efpe.solvers import Cadence, rho_for_budget

game = SequenceFormGame.from_tree(GameSpec.parse("kuhn").build())
print(game.sizes())
T = 20_000
cad = Cadence("log", 1)

###############################################################################
# Runs at an equal budget
# -----------------------
# The decay rate is chosen so ``eps`` reaches 1e-4 exactly when the budget
# runs out.

rho = rho_for_budget(1.001, 0.1, 1e-4, T)
sched = make_schedule(beta=1.001, eta=2.0, eps0=0.1, rho=rho, d=2.0, game=game)
runs = {
    "efpe": compute_efpe(game, sched, T, cadence=cad),
    "cfr": cfr(game, T, cadence=cad),
    "oomd": oomd_baseline(game, 0.0, 2.0, T, cadence=cad),
    "oomd(0.01)": oomd_baseline(game, 0.01, 2.0, T, cadence=cad),
}

print(f"{'run':<12}{'nash gap':>12}{'infoset regret':>16}")
for name, r in runs.items():
    print(f"{name:<12}{r.trace.last.nash_gap:>12.2e}{r.trace.last.avg_infoset_regret:>16.2e}")

###############################################################################
# Where the regret sits
# ---------------------
# The largest per-infoset regrets of CFR's average strategy.

rep = avg_infoset_regret(game, runs["cfr"].x, runs["cfr"].y)
for (player, label), r in sorted(rep.regrets.items(), key=lambda kv: -kv[1])[:4]:
    print(f"  player {player} at {label!r}: {r:.2e}")
