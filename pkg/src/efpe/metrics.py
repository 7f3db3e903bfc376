"""Best responses, Nash gap, average infoset regret and distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .game import Chance, Decision, Terminal
from .sequence_form import SequenceFormGame, TreeplexIndex, sequence_to_behavioral

REGRET_TOL = 1e-10


@dataclass
class BestResponseResult:
    """``value`` is the responder's own expected utility (player 2 gets ``-x @ U @ y``)."""

    value: float
    strategy: np.ndarray
    infoset_values: dict


@dataclass
class InfosetRegretReport:
    regrets: dict  # (player, infoset) -> regret
    mean: float
    uniform_belief: list  # infosets whose reach normalizer was 0


def utility_vector(game: SequenceFormGame, responder: int, opponent: np.ndarray) -> np.ndarray:
    """Per-sequence payoff of ``responder`` against ``opponent`` (chance included)."""
    if responder == 1:
        return game.payoff.matrix @ np.asarray(opponent, float)
    return -(game.payoff.matrix_t @ np.asarray(opponent, float))


def _best_pass(idx: TreeplexIndex, g: np.ndarray):
    """Bottom-up maximization; returns rolled-up sequence values and per-infoset best."""
    val = np.array(g, dtype=float)
    best = np.zeros(idx.n_infosets)
    for lv in reversed(idx.levels):
        b = np.maximum.reduceat(val[lv.seqs], lv.offsets)
        best[lv.infosets] = b
        np.add.at(val, lv.parents, b)
    return val, best


def _current_pass(idx: TreeplexIndex, g: np.ndarray, beh: np.ndarray):
    val = np.array(g, dtype=float)
    cur = np.zeros(idx.n_infosets)
    for lv in reversed(idx.levels):
        c = np.add.reduceat(beh[lv.seqs] * val[lv.seqs], lv.offsets)
        cur[lv.infosets] = c
        np.add.at(val, lv.parents, c)
    return val, cur


def best_response(game: SequenceFormGame, responder: int, opponent) -> BestResponseResult:
    idx = game.index(responder)
    g = utility_vector(game, responder, opponent)
    val, best = _best_pass(idx, g)
    # pure strategy: first maximizing action at each infoset
    x = np.zeros(idx.n_sequences)
    x[0] = 1.0
    for lv in idx.levels:
        block = val[lv.seqs]
        hit = block == best[lv.infosets][lv.seg]
        first = np.zeros_like(hit)
        seen = np.zeros(len(lv.offsets), dtype=bool)
        for k in np.flatnonzero(hit):  # short loop over candidate maxima
            j = lv.seg[k]
            if not seen[j]:
                seen[j] = True
                first[k] = True
        x[lv.seqs] = first * x[idx.seq_parent[lv.seqs]]
    return BestResponseResult(float(val[0]), x, dict(zip(idx.infosets, best)))


def nash_gap(game: SequenceFormGame, x, y) -> float:
    """``max_x' x' U y - min_y' x U y'``."""
    return best_response(game, 1, y).value + best_response(game, 2, x).value


def expected_payoff(game: SequenceFormGame, x, y) -> float:
    return float(np.asarray(x, float) @ (game.payoff.matrix @ np.asarray(y, float)))


def _uniform_belief_payoff(game: SequenceFormGame, player: int, label: str, opp_beh: np.ndarray) -> np.ndarray:
    """Payoff vector of ``player`` restricted to the subtrees below ``label``.

    Every node of the infoset gets the same weight; chance and the opponent's
    behavioral strategy then weigh the terminals below.
    """
    tree = game.tree
    idx = game.index(player)
    oidx = game.index(3 - player)
    seq_pos = {lab: k for k, lab in enumerate(idx.seq_labels) if lab is not None}
    opp_pos = {lab: k for k, lab in enumerate(oidx.seq_labels) if lab is not None}
    starts = [i for i, node in enumerate(tree.nodes)
              if isinstance(node, Decision) and node.player == player and node.infoset == label]
    g = np.zeros(idx.n_sequences)
    sign = 1.0 if player == 1 else -1.0
    for h in starts:
        stack = [(h, 1.0 / len(starts), None)]
        while stack:
            i, w, own = stack.pop()
            node = tree.nodes[i]
            if isinstance(node, Terminal):
                g[0 if own is None else own] += sign * w * node.payoff
            elif isinstance(node, Chance):
                stack.extend((c, w * p, own) for p, c in zip(node.probs, node.children))
            elif node.player == player:
                stack.extend((c, w, seq_pos[(node.infoset, a)]) for a, c in zip(node.actions, node.children))
            else:
                for a, c in zip(node.actions, node.children):
                    stack.append((c, w * opp_beh[opp_pos[(node.infoset, a)]], own))
    return g


def infoset_regrets(game: SequenceFormGame, player: int, x, y):
    """Per-infoset regrets of ``player``; also returns the zero-reach infosets."""
    mine, other = (x, y) if player == 1 else (y, x)
    idx = game.index(player)
    beh, _ = sequence_to_behavioral(mine, idx)
    g = utility_vector(game, player, other)
    _, best = _best_pass(idx, g)
    _, cur = _current_pass(idx, g, beh)
    reach = (game.reach1 if player == 1 else game.reach2) @ np.asarray(other, float)
    out = {}
    fallback = []
    opp_beh = None
    for j, label in enumerate(idx.infosets):
        if reach[j] > 0:
            b, c, norm = best[j], cur[j], reach[j]
        else:
            if opp_beh is None:
                opp_beh, _ = sequence_to_behavioral(other, game.index(3 - player))
            gl = _uniform_belief_payoff(game, player, label, opp_beh)
            _, bl = _best_pass(idx, gl)
            _, cl = _current_pass(idx, gl, beh)
            b, c, norm = bl[j], cl[j], 1.0
            fallback.append((player, label))
        r = (b - c) / norm
        scale = max(1.0, (abs(b) + abs(c)) / norm)
        if r < -REGRET_TOL * scale:
            raise AssertionError(f"negative regret {r!r} at infoset {label!r}")
        out[(player, label)] = max(r, 0.0)
    return out, fallback


def avg_infoset_regret(game: SequenceFormGame, x, y) -> InfosetRegretReport:
    """Mean over both players' infosets of the regret under a Bayes belief.

    Each infoset is assumed reached; the belief over its nodes is
    proportional to chance times opponent reach.  Infosets the opponent never
    reaches use a uniform belief and are listed in ``uniform_belief``.
    """
    r1, f1 = infoset_regrets(game, 1, x, y)
    r2, f2 = infoset_regrets(game, 2, x, y)
    regrets = {**r1, **r2}
    mean = float(np.mean(list(regrets.values()))) if regrets else 0.0
    return InfosetRegretReport(regrets, mean, f1 + f2)


def l2_distance(z, z_ref) -> float:
    """Euclidean distance between concatenated strategy profiles."""
    a = np.concatenate([np.ravel(v) for v in z]) if isinstance(z, (tuple, list)) else np.ravel(z)
    b = np.concatenate([np.ravel(v) for v in z_ref]) if isinstance(z_ref, (tuple, list)) else np.ravel(z_ref)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.linalg.norm(a - b))
