"""Explicit extensive-form game trees and their validation.

A :class:`GameTree` is a flat, immutable list of nodes addressed by integer
id.  Node kinds are decision nodes (player 1 or 2), chance nodes and
terminal nodes.  Payoffs are always stated for player 1; player 2 receives
the negation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

STRUCTURE_TOL = 1e-12


class StructuralError(ValueError):
    """The tree cannot be resolved (dangling child ids, cycles, shared children)."""


@dataclass(frozen=True)
class Decision:
    player: int
    infoset: str
    actions: tuple[str, ...]
    children: tuple[int, ...]


@dataclass(frozen=True)
class Chance:
    probs: tuple[float, ...]
    children: tuple[int, ...]
    labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class Terminal:
    payoff: float


Node = Union[Decision, Chance, Terminal]


@dataclass(frozen=True)
class GameTree:
    nodes: tuple[Node, ...]
    root: int = 0
    name: str = ""

    def __len__(self) -> int:
        return len(self.nodes)

    def __getitem__(self, i: int) -> Node:
        return self.nodes[i]

    def children(self, i: int) -> tuple[int, ...]:
        node = self.nodes[i]
        if isinstance(node, Terminal):
            return ()
        return node.children

    def preorder(self):
        """Yield ``(node_id, parent_id, edge_index)`` in depth-first preorder.

        Children are visited in declaration order, which fixes every
        downstream ordering (infosets, sequences, payoff entries).
        """
        stack = [(self.root, -1, -1)]
        while stack:
            i, parent, edge = stack.pop()
            yield i, parent, edge
            kids = self.children(i)
            for k in range(len(kids) - 1, -1, -1):
                stack.append((kids[k], i, k))

    def infosets(self, player: int) -> list[str]:
        """Infoset labels of ``player`` in first-encounter preorder."""
        seen = {}
        for i, _, _ in self.preorder():
            node = self.nodes[i]
            if isinstance(node, Decision) and node.player == player:
                seen.setdefault(node.infoset, None)
        return list(seen)


def check_structure(tree: GameTree) -> None:
    """Raise :class:`StructuralError` unless ``tree`` is a proper tree.

    Every referenced id must exist, every non-root node must have exactly one
    parent and the root must have none.
    """
    n = len(tree.nodes)
    if n == 0:
        raise StructuralError("game has no nodes")
    if not 0 <= tree.root < n:
        raise StructuralError(f"root id {tree.root} does not exist")
    parent = [-1] * n
    for i, node in enumerate(tree.nodes):
        if isinstance(node, Terminal):
            continue
        if isinstance(node, Decision) and len(node.actions) != len(node.children):
            raise StructuralError(f"node {i}: {len(node.actions)} actions but {len(node.children)} children")
        if isinstance(node, Chance) and len(node.probs) != len(node.children):
            raise StructuralError(f"node {i}: {len(node.probs)} probabilities but {len(node.children)} children")
        if len(node.children) == 0:
            raise StructuralError(f"node {i}: non-terminal node without children")
        for c in node.children:
            if not 0 <= c < n:
                raise StructuralError(f"node {i}: child id {c} does not exist")
            if c == tree.root:
                raise StructuralError(f"node {i}: points back at the root")
            if parent[c] != -1:
                raise StructuralError(f"node {c} has two parents ({parent[c]} and {i})")
            parent[c] = i


def validate_game(tree: GameTree) -> list[str]:
    """Return every invariant violation of ``tree``; an empty list means valid.

    Checks chance distributions, payoff range, player/action consistency
    inside infosets, perfect recall and reachability.  Structural defects are
    not reported here but raised as :class:`StructuralError`.
    """
    check_structure(tree)
    problems: list[str] = []

    # own (infoset, action) history of each player at every node
    history = {tree.root: ((), ())}
    infoset_owner: dict[str, int] = {}
    infoset_actions: dict[str, tuple[str, ...]] = {}
    infoset_history: dict[str, tuple] = {}
    reached = set()

    for i, parent, edge in tree.preorder():
        reached.add(i)
        node = tree.nodes[i]
        if parent >= 0:
            hist = list(history[parent])
            pnode = tree.nodes[parent]
            if isinstance(pnode, Decision):
                p = pnode.player - 1
                hist[p] = hist[p] + ((pnode.infoset, pnode.actions[edge]),)
            history[i] = tuple(hist)
        if isinstance(node, Terminal):
            if not np.isfinite(node.payoff) or abs(node.payoff) > 1.0 + STRUCTURE_TOL:
                problems.append(f"node {i}: payoff {node.payoff!r} outside [-1, 1]")
        elif isinstance(node, Chance):
            probs = np.asarray(node.probs, dtype=float)
            if np.any(probs < 0) or np.any(probs > 1):
                problems.append(f"node {i}: chance probability outside [0, 1]")
            if abs(probs.sum() - 1.0) > STRUCTURE_TOL:
                problems.append(f"node {i}: chance probabilities sum to {probs.sum()!r}")
        else:
            if node.player not in (1, 2):
                problems.append(f"node {i}: player {node.player!r} is not 1 or 2")
                continue
            label = node.infoset
            own = history[i][node.player - 1]
            if label not in infoset_owner:
                infoset_owner[label] = node.player
                infoset_actions[label] = node.actions
                infoset_history[label] = own
                continue
            if infoset_owner[label] != node.player:
                problems.append(f"infoset {label!r}: node {i} belongs to player {node.player}, "
                                f"infoset belongs to player {infoset_owner[label]}")
            elif infoset_actions[label] != node.actions:
                problems.append(f"infoset {label!r}: node {i} has actions {list(node.actions)}, "
                                f"expected {list(infoset_actions[label])} (perfect recall)")
            elif infoset_history[label] != own:
                problems.append(f"infoset {label!r}: node {i} is reached by a different own "
                                f"action sequence (perfect recall)")

    for i in range(len(tree.nodes)):
        if i not in reached:
            problems.append(f"node {i}: unreachable from the root")
    return problems
