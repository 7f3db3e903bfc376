"""Benchmark game generators.

Every generator returns a :class:`~efpe.game.GameTree` with payoffs already
scaled into [-1, 1] by the largest absolute raw payoff of the game.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import permutations

import numpy as np

from .game import Chance, Decision, GameTree, Terminal

# Player-1 payoffs of the 3x3 benchmark matrix game.
BENCH_MATRIX = ((0.3, 0.5, 0.3), (0.7, 0.3, 0.7), (0.6, 0.2, 0.2))

GAME_NAMES = ("kuhn", "leduc", "goofspiel3", "drps", "matrix")


class _Builder:
    def __init__(self):
        self.nodes = []

    def reserve(self) -> int:
        self.nodes.append(None)
        return len(self.nodes) - 1

    def terminal(self, payoff: float) -> int:
        i = self.reserve()
        self.nodes[i] = Terminal(float(payoff))
        return i

    def tree(self, name: str) -> GameTree:
        return GameTree(tuple(self.nodes), 0, name)


def gen_kuhn() -> GameTree:
    """Three-card Kuhn poker, ante 1, single bet of 1; payoffs divided by 2."""
    cards = "JQK"
    b = _Builder()
    root = b.reserve()

    def showdown(c1, c2, amount):
        return b.terminal((amount if c1 > c2 else -amount) / 2.0)

    def decision(player, label, acts):
        i = b.reserve()
        kids = tuple(fn() for _, fn in acts)
        b.nodes[i] = Decision(player, label, tuple(a for a, _ in acts), kids)
        return i

    outcomes = []
    for c1, c2 in permutations(range(3), 2):
        k1, k2 = cards[c1], cards[c2]
        sub = decision(1, f"1|{k1}|", [
            ("check", lambda: decision(2, f"2|{k2}|c", [
                ("check", lambda: showdown(c1, c2, 1)),
                ("bet", lambda: decision(1, f"1|{k1}|cb", [
                    ("fold", lambda: b.terminal(-0.5)),
                    ("call", lambda: showdown(c1, c2, 2)),
                ])),
            ])),
            ("bet", lambda: decision(2, f"2|{k2}|b", [
                ("fold", lambda: b.terminal(0.5)),
                ("call", lambda: showdown(c1, c2, 2)),
            ])),
        ])
        outcomes.append((1.0 / 6.0, sub, k1 + k2))
    b.nodes[root] = Chance(tuple(p for p, _, _ in outcomes), tuple(c for _, c, _ in outcomes),
                           tuple(lab for _, _, lab in outcomes))
    return b.tree("kuhn")


@dataclass(frozen=True)
class LeducRules:
    ante: int = 1
    raise_sizes: tuple[int, int] = (2, 4)
    max_raises: int = 2  # a bet plus one re-raise per round

    @property
    def max_swing(self) -> int:
        return self.ante + self.max_raises * sum(self.raise_sizes)


def gen_leduc(ranks: int = 3, rules: LeducRules = LeducRules()) -> GameTree:
    """Leduc hold'em with ``2 * ranks`` cards (two suits per rank).

    Two betting rounds separated by a public card.  A pair with the public
    card wins, otherwise the higher private card; equal ranks split.
    """
    if ranks < 2:
        raise ValueError("Leduc needs at least 2 ranks")
    n = ranks
    scale = float(rules.max_swing)
    b = _Builder()

    def hand_value(r, pub):
        return (n + r) if r == pub else r

    def betting(rnd, hist_prev, r1, r2, pub, h, contrib, raises, to_act, on_round_end):
        own = r1 if to_act == 1 else r2
        if rnd == 0:
            label = f"{to_act}|{own}|{h}"
        else:
            label = f"{to_act}|{own}|{pub}|{hist_prev}|{h}"
        facing = contrib[0] != contrib[1]
        acts = []
        if facing:
            acts.append(("f", None))
        acts.append(("c", None))
        if raises < rules.max_raises:
            acts.append(("r", None))
        i = b.reserve()
        kids = []
        me, other = to_act - 1, 2 - to_act
        for a, _ in acts:
            if a == "f":
                loss = contrib[me]
                kids.append(b.terminal((-loss if to_act == 1 else loss) / scale))
            elif a == "c":
                if facing or h == "c":
                    c = max(contrib)
                    kids.append(on_round_end(h + "c", (c, c)))
                else:
                    kids.append(betting(rnd, hist_prev, r1, r2, pub, h + "c", contrib, raises,
                                        3 - to_act, on_round_end))
            else:
                new = list(contrib)
                new[me] = contrib[other] + rules.raise_sizes[rnd]
                kids.append(betting(rnd, hist_prev, r1, r2, pub, h + "r", tuple(new), raises + 1,
                                    3 - to_act, on_round_end))
        b.nodes[i] = Decision(to_act, label, tuple(a for a, _ in acts), tuple(kids))
        return i

    def deal_public(r1, r2, h1, contrib):
        i = b.reserve()
        outs = []
        for pub in range(n):
            left = 2 - (r1 == pub) - (r2 == pub)
            if left == 0:
                continue

            def showdown(h2, c, pub=pub):
                v1, v2 = hand_value(r1, pub), hand_value(r2, pub)
                amt = c[0]
                return b.terminal((amt if v1 > v2 else -amt if v1 < v2 else 0) / scale)

            child = betting(1, h1, r1, r2, pub, "", contrib, 0, 1, showdown)
            outs.append((left / (2 * n - 2), child, str(pub)))
        b.nodes[i] = Chance(tuple(o[0] for o in outs), tuple(o[1] for o in outs), tuple(o[2] for o in outs))
        return i

    root = b.reserve()
    outs = []
    for r1 in range(n):
        for r2 in range(n):
            p = (1.0 / n) * ((1 if r1 == r2 else 2) / (2 * n - 1))
            child = betting(0, "", r1, r2, None, "", (rules.ante, rules.ante), 0, 1,
                            lambda h, c, r1=r1, r2=r2: deal_public(r1, r2, h, c))
            outs.append((p, child, f"{r1}{r2}"))
    b.nodes[root] = Chance(tuple(o[0] for o in outs), tuple(o[1] for o in outs), tuple(o[2] for o in outs))
    return b.tree(f"leduc{ranks}")


def gen_goofspiel3() -> GameTree:
    """Goofspiel with 3 cards per hand and 3 prize cards in random order.

    Bids are simultaneous (the second bidder's infoset pools the first
    bidder's possible bids) and revealed after each turn.  The third turn is
    forced, so only the first two turns are decisions.  Payoff is the point
    difference divided by 6.
    """
    b = _Builder()
    cards = (1, 2, 3)

    def score(prizes, bids1, bids2):
        pts = 0
        for p, x, y in zip(prizes, bids1, bids2):
            pts += p if x > y else -p if x < y else 0
        return pts / 6.0

    def turn(prizes, bids1, bids2, deck):
        if len(bids1) == 2:
            last_p = deck[0]
            l1 = next(c for c in cards if c not in bids1)
            l2 = next(c for c in cards if c not in bids2)
            return b.terminal(score(prizes + (last_p,), bids1 + (l1,), bids2 + (l2,)))
        # chance reveals the next prize
        i = b.reserve()
        kids = []
        for p in deck:
            rest = tuple(c for c in deck if c != p)
            prz = prizes + (p,)
            past = "".join(f"{x}{y}" for x, y in zip(bids1, bids2))
            tag = "".join(map(str, prz))
            j = b.reserve()
            kids1 = []
            hand1 = [c for c in cards if c not in bids1]
            hand2 = [c for c in cards if c not in bids2]
            for x in hand1:
                k = b.reserve()
                kids2 = tuple(turn(prz, bids1 + (x,), bids2 + (y,), rest) for y in hand2)
                b.nodes[k] = Decision(2, f"2|{tag}|{past}", tuple(str(y) for y in hand2), kids2)
                kids1.append(k)
            b.nodes[j] = Decision(1, f"1|{tag}|{past}", tuple(str(x) for x in hand1), tuple(kids1))
            kids.append(j)
        b.nodes[i] = Chance(tuple(1.0 / len(deck) for _ in deck), tuple(kids), tuple(str(p) for p in deck))
        return i

    turn((), (), (), cards)
    return b.tree("goofspiel3")


def gen_drps() -> GameTree:
    """Deep rock-paper-scissors.

    Player 1 may stop at once with ``l1`` (worth 0.5).  Otherwise the players
    alternate one more decision each and then play rock-paper-scissors whose
    value is -0.2.  Every other terminal is worth at most 0.4, so every Nash
    equilibrium plays ``l1`` and the deep infosets never matter for the value;
    each deep infoset still has a unique best action.
    """
    b = _Builder()

    def dec(player, label, acts):
        i = b.reserve()
        kids = tuple(fn() for _, fn in acts)
        b.nodes[i] = Decision(player, label, tuple(a for a, _ in acts), kids)
        return i

    beats = {("R", "S"), ("S", "P"), ("P", "R")}

    def rps():
        def p2_node(m1):
            return dec(2, "2|rps", [(m2, lambda m2=m2: b.terminal(
                -0.2 + 0.3 * (1 if (m1, m2) in beats else -1 if (m2, m1) in beats else 0)))
                for m2 in "RPS"])
        return dec(1, "1|rps", [(m1, lambda m1=m1: p2_node(m1)) for m1 in "RPS"])

    dec(1, "1|first", [
        ("l1", lambda: b.terminal(0.5)),
        ("m1", lambda: dec(2, "2|first", [
            ("l2", lambda: b.terminal(0.4)),
            ("m2", lambda: dec(1, "1|second", [
                ("l3", lambda: b.terminal(-0.4)),
                ("m3", lambda: dec(2, "2|second", [
                    ("l4", lambda: b.terminal(0.3)),
                    ("m4", rps),
                    ("r4", lambda: b.terminal(0.1)),
                ])),
                ("r3", lambda: b.terminal(-0.6)),
            ])),
            ("r2", lambda: b.terminal(0.0)),
        ])),
        ("r1", lambda: b.terminal(-0.5)),
    ])
    return b.tree("drps")


def gen_matrix(M=BENCH_MATRIX) -> GameTree:
    """One-shot simultaneous game with player-1 payoff matrix ``M``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.size == 0:
        raise ValueError("payoff matrix must be a non-empty 2-d grid")
    if np.any(np.abs(M) > 1.0) or not np.all(np.isfinite(M)):
        raise ValueError("matrix payoffs must lie in [-1, 1]")
    b = _Builder()
    root = b.reserve()
    rows = []
    for i in range(M.shape[0]):
        k = b.reserve()
        kids = tuple(b.terminal(M[i, j]) for j in range(M.shape[1]))
        b.nodes[k] = Decision(2, "2", tuple(f"b{j}" for j in range(M.shape[1])), kids)
        rows.append(k)
    b.nodes[root] = Decision(1, "1", tuple(f"a{i}" for i in range(M.shape[0])), tuple(rows))
    return b.tree("matrix")


@dataclass(frozen=True)
class GameSpec:
    name: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.name not in GAME_NAMES:
            raise ValueError(f"unknown game {self.name!r}; expected one of {', '.join(GAME_NAMES)}")
        allowed = {"leduc": {"ranks"}, "matrix": {"matrix"}}.get(self.name, set())
        extra = set(self.params) - allowed
        if extra:
            raise ValueError(f"game {self.name!r} does not take parameters {sorted(extra)}")
        if self.name == "leduc" and int(self.params.get("ranks", 3)) < 2:
            raise ValueError("leduc ranks must be >= 2")

    @classmethod
    def parse(cls, text: str) -> "GameSpec":
        """Parse ``kuhn``, ``leduc3``, ``leduc5``, ``leduc:ranks=4`` and similar."""
        text = text.strip()
        if text.startswith("leduc") and text[5:].isdigit():
            return cls("leduc", {"ranks": int(text[5:])})
        name, _, rest = text.partition(":")
        params = {}
        for item in filter(None, rest.split(",")):
            k, _, v = item.partition("=")
            params[k.strip()] = int(v) if v.strip().lstrip("-").isdigit() else v.strip()
        return cls(name, params)

    def build(self) -> GameTree:
        if self.name == "kuhn":
            return gen_kuhn()
        if self.name == "leduc":
            return gen_leduc(int(self.params.get("ranks", 3)))
        if self.name == "goofspiel3":
            return gen_goofspiel3()
        if self.name == "drps":
            return gen_drps()
        return gen_matrix(self.params.get("matrix", BENCH_MATRIX))

    def label(self) -> str:
        if self.name == "leduc":
            return f"leduc{self.params.get('ranks', 3)}"
        return self.name
