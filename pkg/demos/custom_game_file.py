"""
Solving a game from a text file
===============================

Games do not have to come from the built-in generators.  Here we write a
small bluffing game in the text format, validate it and solve it.
"""
import tempfile
from pathlib import Path

from efpe import SequenceFormGame, lp_oracle, validate_game
from efpe.solvers import Cadence, compute_efpe, make_schedule
from efpe.textformat import load

###############################################################################
# The game
# --------
# Player 1 draws a high or low card and may raise or fold; player 2 sees only
# the raise and calls or gives up.  Payoffs are for player 1.

TEXT = """\
root 0
0 chance 0.5:1:high 0.5:2:low
1 decision 1 1|high raise:3 fold:4
2 decision 1 1|low raise:5 fold:6
3 decision 2 2|r call:7 give:8
4 terminal -0.5
5 decision 2 2|r call:9 give:10
6 terminal -0.5
7 terminal 1.0
8 terminal 0.5
9 terminal -1.0
10 terminal 0.5
"""
path = Path(tempfile.mkdtemp()) / "bluff.txt"
path.write_text(TEXT)
tree = load(path)
print("problems:", validate_game(tree) or "none")

###############################################################################
# Solve it
# --------

game = SequenceFormGame.from_tree(tree)
lp = lp_oracle(game)
print(f"value {lp.value:.4f}")
sched = make_schedule(eps0=0.1, rho=0.995, game=game)
res = compute_efpe(game, sched, 20_000, cadence=Cadence("log", 1))
print(f"last iterate: gap {res.trace.last.nash_gap:.2e}, infoset regret {res.trace.last.avg_infoset_regret:.2e}")
bluff = game.idx1.sequence_index("1|low", "raise")
print(f"player 1 raises a low card with probability {res.x[bluff]:.3f}")
