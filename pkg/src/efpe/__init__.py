"""Last-iterate computation of extensive-form perfect equilibria.

Typical use::

    from efpe import GameSpec, SequenceFormGame, make_schedule, compute_efpe

    game = SequenceFormGame.from_tree(GameSpec.parse("kuhn").build())
    sched = make_schedule(eps0=0.1, rho=0.9985, game=game)
    result = compute_efpe(game, sched, max_iters=20_000)
    result.trace.last.avg_infoset_regret
"""

from .game import Chance, Decision, GameTree, StructuralError, Terminal, validate_game
from .metrics import avg_infoset_regret, best_response, l2_distance, nash_gap
from .oracle import lp_oracle, regularized_equilibrium, weak_dominance_equilibrium
from .regularizer import (PerturbedDGF, ProxParams, composite_prox, compute_weights, conjugate_gradient,
                          dgf_gradient, dgf_value, local_conjugate_gradient)
from .sequence_form import SequenceFormGame, behavioral_to_sequence, sequence_to_behavioral
from .solvers import Cadence, Schedule, cfr, compute_efpe, make_schedule, oomd_baseline, solve_phase
from .zoo import GameSpec

__version__ = "0.1.0"

__all__ = [
    "Cadence", "Chance", "Decision", "GameSpec", "GameTree", "PerturbedDGF", "ProxParams", "Schedule",
    "SequenceFormGame", "StructuralError", "Terminal", "avg_infoset_regret", "behavioral_to_sequence",
    "best_response", "cfr", "composite_prox", "compute_efpe", "compute_weights", "conjugate_gradient",
    "dgf_gradient", "dgf_value", "l2_distance", "local_conjugate_gradient", "lp_oracle", "make_schedule",
    "nash_gap", "oomd_baseline", "regularized_equilibrium", "sequence_to_behavioral", "solve_phase",
    "validate_game", "weak_dominance_equilibrium",
]
