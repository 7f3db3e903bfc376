"""Sequence-form strategy spaces (treeplexes) and the bilinear payoff operator.

Sequences are numbered level by level: index 0 is the empty sequence, then
the infosets of depth 0 (no earlier own decision), then depth 1, and so on.
Within a level infosets keep first-encounter preorder and each infoset owns a
contiguous block of sequences in action-declaration order.  Every bottom-up
or top-down pass over a treeplex therefore works on contiguous slices.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .game import Chance, Decision, GameTree, Terminal, check_structure

FLOW_TOL = 1e-9
FEASIBILITY_TOL = 1e-12


@dataclass(frozen=True)
class Level:
    """Infosets of one depth and the sequence block they own."""

    infosets: slice
    seqs: slice
    offsets: np.ndarray  # reduceat offsets of each infoset inside ``seqs``
    parents: np.ndarray  # parent sequence of each infoset
    seg: np.ndarray  # local infoset id of every sequence in ``seqs``


@dataclass(frozen=True, eq=False)
class TreeplexIndex:
    player: int
    infosets: tuple[str, ...]
    n_actions: np.ndarray
    start: np.ndarray
    parent: np.ndarray
    depth: np.ndarray
    seq_labels: tuple  # (infoset, action) per sequence, None for the empty one
    seq_parent: np.ndarray
    seq_infoset: np.ndarray
    children: dict  # (infoset, action) -> tuple of immediately following infosets
    levels: tuple[Level, ...] = field(repr=False)

    @property
    def n_sequences(self) -> int:
        return len(self.seq_labels)

    @property
    def n_infosets(self) -> int:
        return len(self.infosets)

    def infoset_index(self, label: str) -> int:
        return self.infosets.index(label)

    def sequence_index(self, infoset: str, action: str) -> int:
        return self.seq_labels.index((infoset, action))

    def infoset_slice(self, j: int) -> slice:
        return slice(int(self.start[j]), int(self.start[j] + self.n_actions[j]))

    def uniform(self) -> np.ndarray:
        """Sequence form of the uniform behavioral strategy."""
        b = np.ones(self.n_sequences)
        b[1:] = 1.0 / self.n_actions[self.seq_infoset[1:]]
        return behavioral_to_sequence(b, self)


def build_treeplex(tree: GameTree, player: int) -> TreeplexIndex:
    """Index the sequences and infosets of ``player`` in ``tree``."""
    check_structure(tree)
    # parent sequence as (infoset, action) or None, per infoset, in preorder
    parent_pair: dict[str, tuple | None] = {}
    actions: dict[str, tuple[str, ...]] = {}
    last = {tree.root: None}
    for i, par, edge in tree.preorder():
        if par >= 0:
            pnode = tree.nodes[par]
            if isinstance(pnode, Decision) and pnode.player == player:
                last[i] = (pnode.infoset, pnode.actions[edge])
            else:
                last[i] = last[par]
        node = tree.nodes[i]
        if isinstance(node, Decision) and node.player == player and node.infoset not in parent_pair:
            parent_pair[node.infoset] = last[i]
            actions[node.infoset] = node.actions

    order0 = list(parent_pair)
    depth0 = {}
    for label in order0:
        p = parent_pair[label]
        depth0[label] = 0 if p is None else depth0[p[0]] + 1
    order = sorted(order0, key=lambda s: depth0[s])  # stable: preorder within a depth

    n_inf = len(order)
    n_actions = np.array([len(actions[s]) for s in order], dtype=np.int64)
    start = np.empty(n_inf, dtype=np.int64)
    seq_labels: list = [None]
    for j, label in enumerate(order):
        start[j] = len(seq_labels)
        seq_labels.extend((label, a) for a in actions[label])
    seq_pos = {lab: k for k, lab in enumerate(seq_labels) if lab is not None}

    parent = np.array([0 if parent_pair[s] is None else seq_pos[parent_pair[s]] for s in order],
                      dtype=np.int64)
    depth = np.array([depth0[s] for s in order], dtype=np.int64)
    n_seq = len(seq_labels)
    seq_infoset = np.full(n_seq, -1, dtype=np.int64)
    for j in range(n_inf):
        seq_infoset[start[j]:start[j] + n_actions[j]] = j
    seq_parent = np.full(n_seq, -1, dtype=np.int64)
    seq_parent[1:] = parent[seq_infoset[1:]]

    children: dict = {lab: [] for lab in seq_labels if lab is not None}
    for j, label in enumerate(order):
        if parent_pair[label] is not None:
            children[parent_pair[label]].append(label)
    children = {k: tuple(v) for k, v in children.items()}

    levels = []
    for d in range(int(depth.max()) + 1 if n_inf else 0):
        js = np.flatnonzero(depth == d)
        lo, hi = int(js[0]), int(js[-1]) + 1
        s_lo = int(start[lo])
        s_hi = int(start[hi - 1] + n_actions[hi - 1])
        levels.append(Level(
            infosets=slice(lo, hi),
            seqs=slice(s_lo, s_hi),
            offsets=start[lo:hi] - s_lo,
            parents=parent[lo:hi].copy(),
            seg=seq_infoset[s_lo:s_hi] - lo,
        ))

    return TreeplexIndex(
        player=player, infosets=tuple(order), n_actions=n_actions, start=start, parent=parent,
        depth=depth, seq_labels=tuple(seq_labels), seq_parent=seq_parent,
        seq_infoset=seq_infoset, children=children, levels=tuple(levels),
    )


def behavioral_to_sequence(b: np.ndarray, idx: TreeplexIndex) -> np.ndarray:
    """Multiply local action probabilities along root-to-infoset paths.

    ``b`` is indexed like the sequences; ``b[s]`` is the probability of the
    action of sequence ``s`` at its infoset (``b[0]`` is ignored).
    """
    b = np.asarray(b, dtype=float)
    if b.shape != (idx.n_sequences,):
        raise ValueError(f"expected {idx.n_sequences} entries, got {b.shape}")
    x = np.empty(idx.n_sequences)
    x[0] = 1.0
    for lv in idx.levels:
        s = lv.seqs
        x[s] = b[s] * x[idx.seq_parent[s]]
    return x


def sequence_to_behavioral(x: np.ndarray, idx: TreeplexIndex) -> tuple[np.ndarray, list[str]]:
    """Local action probabilities of a sequence-form strategy.

    Infosets whose parent sequence has zero probability get the uniform
    distribution; their labels are returned as the second element.
    """
    x = np.asarray(x, dtype=float)
    b = np.ones(idx.n_sequences)
    if idx.n_sequences == 1:
        return b, []
    par = x[idx.seq_parent[1:]]
    unreached = par <= 0.0
    with np.errstate(divide="ignore", invalid="ignore"):
        b[1:] = np.where(unreached, 1.0 / idx.n_actions[idx.seq_infoset[1:]], x[1:] / np.where(unreached, 1.0, par))
    flagged = sorted({idx.infosets[j] for j in idx.seq_infoset[1:][unreached]},
                     key=idx.infosets.index)
    return b, flagged


def infoset_sums(x: np.ndarray, idx: TreeplexIndex) -> np.ndarray:
    """Sum of the action sequences of every infoset."""
    if idx.n_infosets == 0:
        return np.zeros(0)
    return np.add.reduceat(x[1:], idx.start - 1)


def is_sequence_strategy(x: np.ndarray, idx: TreeplexIndex, tol: float = FLOW_TOL) -> bool:
    """Flow conservation, unit root mass and entries in [0, 1]."""
    x = np.asarray(x, dtype=float)
    if x.shape != (idx.n_sequences,) or not np.all(np.isfinite(x)):
        return False
    if abs(x[0] - 1.0) > tol or np.any(x < -tol) or np.any(x > 1.0 + tol):
        return False
    return bool(np.all(np.abs(infoset_sums(x, idx) - x[idx.parent]) <= tol))


def validate_perturbed(x: np.ndarray, eps: float, idx: TreeplexIndex) -> bool:
    """True iff every action keeps at least ``eps`` of its parent's mass."""
    x = np.asarray(x, dtype=float)
    return bool(np.all(x[1:] >= eps * x[idx.seq_parent[1:]] - FEASIBILITY_TOL))


@dataclass(frozen=True, eq=False)
class PayoffOperator:
    """Sparse sequence-form payoff matrix of player 1."""

    rows: np.ndarray
    cols: np.ndarray
    vals: np.ndarray
    shape: tuple[int, int]
    matrix: sp.csr_matrix = field(repr=False)
    matrix_t: sp.csr_matrix = field(repr=False)

    @classmethod
    def from_entries(cls, rows, cols, vals, shape) -> "PayoffOperator":
        m = sp.coo_matrix((np.asarray(vals, float), (np.asarray(rows), np.asarray(cols))), shape=shape).tocsr()
        m.sum_duplicates()
        m.sort_indices()
        coo = m.tocoo()
        return cls(coo.row.astype(np.int64), coo.col.astype(np.int64), coo.data.copy(), tuple(shape),
                   m, m.T.tocsr())

    @property
    def nnz(self) -> int:
        return len(self.vals)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()


def apply_payoff(op: PayoffOperator, y: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    if y.shape != (op.shape[1],):
        raise ValueError(f"dimension mismatch: operator has {op.shape[1]} columns, got {y.shape}")
    return op.matrix @ y


def apply_payoff_transposed(op: PayoffOperator, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (op.shape[0],):
        raise ValueError(f"dimension mismatch: operator has {op.shape[0]} rows, got {x.shape}")
    return op.matrix_t @ x


def _node_sequences(tree: GameTree, idx1: TreeplexIndex, idx2: TreeplexIndex):
    """Yield ``(node_id, node, seq1, seq2, chance_reach)`` in preorder."""
    pos = ({lab: k for k, lab in enumerate(idx1.seq_labels)},
           {lab: k for k, lab in enumerate(idx2.seq_labels)})
    state = {tree.root: (0, 0, 1.0)}
    for i, par, edge in tree.preorder():
        if par >= 0:
            s1, s2, p = state[par]
            pnode = tree.nodes[par]
            if isinstance(pnode, Decision):
                k = pos[pnode.player - 1][(pnode.infoset, pnode.actions[edge])]
                if pnode.player == 1:
                    s1 = k
                else:
                    s2 = k
            elif isinstance(pnode, Chance):
                p = p * pnode.probs[edge]
            state[i] = (s1, s2, p)
        s1, s2, p = state[i]
        yield i, tree.nodes[i], s1, s2, p


def build_payoff_operator(tree: GameTree, idx1: TreeplexIndex, idx2: TreeplexIndex) -> PayoffOperator:
    """Aggregate chance-weighted terminal payoffs by sequence pair."""
    rows, cols, vals = [], [], []
    for _, node, s1, s2, p in _node_sequences(tree, idx1, idx2):
        if isinstance(node, Terminal):
            rows.append(s1)
            cols.append(s2)
            vals.append(p * node.payoff)
    return PayoffOperator.from_entries(rows, cols, vals, (idx1.n_sequences, idx2.n_sequences))


def operator_norm(op: PayoffOperator, tol: float = 1e-10, max_iter: int = 100_000) -> float:
    """Spectral norm of the payoff matrix by power iteration on U^T U.

    Raises ``RuntimeError`` carrying the best estimate when the iteration has
    not settled to relative tolerance ``tol`` within ``max_iter`` steps.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if op.nnz == 0 or not np.any(op.vals):
        return 0.0
    v = np.ones(op.shape[1]) + np.linspace(0.0, 0.5, op.shape[1])  # deterministic, generic
    v /= np.linalg.norm(v)
    est = 0.0
    for _ in range(max_iter):
        w = op.matrix_t @ (op.matrix @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        new = np.sqrt(nw)
        v = w / nw
        if abs(new - est) <= tol * new:
            return float(new)
        est = new
    raise RuntimeError(f"power iteration did not converge; best estimate {est!r}")


@dataclass(frozen=True, eq=False)
class SequenceFormGame:
    """A game tree bundled with both treeplexes and its payoff operator.

    ``reach1`` maps player 1's infosets to player 2's sequences: entry
    ``(I, s)`` is the total chance probability of the nodes of ``I`` whose
    player-2 sequence is ``s``; ``reach2`` is the mirror image.  Multiplying
    by the opponent's strategy gives the (own-strategy-free) reach mass of
    every infoset.
    """

    tree: GameTree
    idx1: TreeplexIndex
    idx2: TreeplexIndex
    payoff: PayoffOperator
    reach1: sp.csr_matrix = field(repr=False)
    reach2: sp.csr_matrix = field(repr=False)

    @classmethod
    def from_tree(cls, tree: GameTree) -> "SequenceFormGame":
        idx1 = build_treeplex(tree, 1)
        idx2 = build_treeplex(tree, 2)
        op = build_payoff_operator(tree, idx1, idx2)
        pos = ({s: j for j, s in enumerate(idx1.infosets)}, {s: j for j, s in enumerate(idx2.infosets)})
        entries = ([], [])
        for _, node, s1, s2, p in _node_sequences(tree, idx1, idx2):
            if isinstance(node, Decision):
                opp = s2 if node.player == 1 else s1
                entries[node.player - 1].append((pos[node.player - 1][node.infoset], opp, p))
        mats = []
        for k, (idx, oidx) in enumerate(((idx1, idx2), (idx2, idx1))):
            e = entries[k]
            r = [t[0] for t in e]
            c = [t[1] for t in e]
            v = [t[2] for t in e]
            mats.append(sp.coo_matrix((v, (r, c)), shape=(idx.n_infosets, oidx.n_sequences)).tocsr())
        return cls(tree, idx1, idx2, op, mats[0], mats[1])

    def index(self, player: int) -> TreeplexIndex:
        return self.idx1 if player == 1 else self.idx2

    def sizes(self) -> dict:
        """Per-player infoset and sequence counts (the empty sequence included)."""
        return {
            "infosets": (self.idx1.n_infosets, self.idx2.n_infosets),
            "sequences": (self.idx1.n_sequences, self.idx2.n_sequences),
            "nodes": len(self.tree),
            "payoff_nnz": self.payoff.nnz,
        }
