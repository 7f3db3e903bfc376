"""Reference solutions for small games.

* :func:`lp_oracle` solves the sequence-form linear program with HiGHS.
* :func:`weak_dominance_equilibrium` removes weakly dominated pure
  strategies of a matrix game and solves what is left, which isolates the
  perfect equilibrium when the reduced game has a unique equilibrium.
* :func:`regularized_equilibrium` finds the unique equilibrium of the
  regularized and perturbed game as a fixed point of smoothed best responses.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog, root

from .metrics import nash_gap
from .regularizer import PerturbedDGF, conjugate_gradient
from .sequence_form import SequenceFormGame, TreeplexIndex

DEFAULT_SIZE_CAP = 100_000


class OracleSizeError(ValueError):
    pass


@dataclass
class LPResult:
    value: float
    x: np.ndarray
    y: np.ndarray
    gap: float


def constraint_matrix(idx: TreeplexIndex) -> tuple[sp.csr_matrix, np.ndarray]:
    """``F x = f`` rows: ``x[empty] = 1`` then one flow row per infoset."""
    rows, cols, vals = [0], [0], [1.0]
    for j in range(idx.n_infosets):
        r = j + 1
        rows.append(r)
        cols.append(int(idx.parent[j]))
        vals.append(-1.0)
        for s in range(idx.start[j], idx.start[j] + idx.n_actions[j]):
            rows.append(r)
            cols.append(int(s))
            vals.append(1.0)
    F = sp.csr_matrix((vals, (rows, cols)), shape=(idx.n_infosets + 1, idx.n_sequences))
    f = np.zeros(idx.n_infosets + 1)
    f[0] = 1.0
    return F, f


def _solve_side(U: sp.csr_matrix, own: TreeplexIndex, opp: TreeplexIndex):
    """max_x min_y x U y over the treeplexes; returns (value, x)."""
    F1, f1 = constraint_matrix(own)
    F2, f2 = constraint_matrix(opp)
    n1, m2 = own.n_sequences, F2.shape[0]
    # variables [x, q]; maximize f2 q  s.t.  F2^T q - U^T x <= 0,  F1 x = f1
    c = np.concatenate([np.zeros(n1), -f2])
    A_ub = sp.hstack([-U.T, F2.T]).tocsr()
    b_ub = np.zeros(opp.n_sequences)
    A_eq = sp.hstack([F1, sp.csr_matrix((F1.shape[0], m2))]).tocsr()
    bounds = [(0, None)] * n1 + [(None, None)] * m2
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=f1, bounds=bounds, method="highs",
                  options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
    if res.status != 0:
        raise RuntimeError(f"LP failed: {res.message}")
    x = np.clip(res.x[:n1], 0.0, None)
    return -res.fun, x


def lp_oracle(game: SequenceFormGame, size_cap: int = DEFAULT_SIZE_CAP) -> LPResult:
    """Nash equilibrium and value of a small game from the sequence-form LP."""
    n1, n2 = game.idx1.n_sequences, game.idx2.n_sequences
    if n1 * n2 > size_cap:
        raise OracleSizeError(f"|S1|*|S2| = {n1 * n2} exceeds the cap {size_cap}")
    U = game.payoff.matrix
    v1, x = _solve_side(U, game.idx1, game.idx2)
    v2, y = _solve_side(-U.T.tocsr(), game.idx2, game.idx1)
    return LPResult(0.5 * (v1 - v2), x, y, nash_gap(game, x, y))


def dominated(M: np.ndarray, rows, cols, maximize: bool, tol: float = 1e-12) -> list:
    """Rows (of ``rows``) weakly dominated by another remaining pure row."""
    out = []
    for r in rows:
        for s in rows:
            if s == r:
                continue
            d = M[s, cols] - M[r, cols] if maximize else M[r, cols] - M[s, cols]
            if np.all(d >= -tol) and np.any(d > tol):
                out.append(r)
                break
    return out


def weak_dominance_equilibrium(M) -> tuple[float, np.ndarray, np.ndarray, list]:
    """Iterated removal of weakly dominated pure strategies, then an LP.

    Each round removes every dominated row and column of the current game at
    once; removing one side first can make the other side's strategies tie
    and hide the dominance.  The row player maximizes, the column player
    minimizes.  Returns ``(value, x, y, removed)`` with ``x, y`` mixed
    strategies of the full game and ``removed`` the elimination log.
    """
    M = np.asarray(M, dtype=float)
    rows, cols = list(range(M.shape[0])), list(range(M.shape[1]))
    removed = []
    while True:
        dr = dominated(M, rows, cols, maximize=True)
        dc = dominated(M.T, cols, rows, maximize=False)
        if not dr and not dc:
            break
        rows = [r for r in rows if r not in dr]
        cols = [c for c in cols if c not in dc]
        removed.append(([("row", r) for r in dr] + [("col", c) for c in dc]))
    sub = M[np.ix_(rows, cols)]
    value, xs, ys = matrix_game_lp(sub)
    x = np.zeros(M.shape[0])
    y = np.zeros(M.shape[1])
    x[rows] = xs
    y[cols] = ys
    return value, x, y, removed


def matrix_game_lp(M) -> tuple[float, np.ndarray, np.ndarray]:
    """Value and optimal mixed strategies of ``max_x min_y x M y``."""
    M = np.asarray(M, dtype=float)
    m, n = M.shape

    def side(A):
        # variables [p, v]: maximize v s.t. v - p A[:, j] <= 0, sum p = 1
        k = A.shape[0]
        c = np.zeros(k + 1)
        c[-1] = -1.0
        A_ub = np.hstack([-A.T, np.ones((A.shape[1], 1))])
        A_eq = np.concatenate([np.ones(k), [0.0]])[None, :]
        res = linprog(c, A_ub=A_ub, b_ub=np.zeros(A.shape[1]), A_eq=A_eq, b_eq=[1.0],
                      bounds=[(0, None)] * k + [(None, None)], method="highs",
                      options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10})
        if res.status != 0:
            raise RuntimeError(res.message)
        return -res.fun, np.clip(res.x[:k], 0, None)

    v, x = side(M)
    _, y = side(-M.T)
    return v, x / x.sum(), y / y.sum()


def matrix_to_sequence(p: np.ndarray) -> np.ndarray:
    """Sequence form of a mixed strategy of the one-shot matrix game."""
    return np.concatenate([[1.0], np.asarray(p, float)])


def smoothed_best_responses(game: SequenceFormGame, dgf1: PerturbedDGF, dgf2: PerturbedDGF, lam: float, z):
    n1 = game.idx1.n_sequences
    x, y = z[:n1], z[n1:]
    bx = conjugate_gradient(dgf1, lam * (game.payoff.matrix @ y))
    by = conjugate_gradient(dgf2, -lam * (game.payoff.matrix_t @ x))
    return np.concatenate([bx, by])


def regularized_equilibrium(game: SequenceFormGame, dgf1: PerturbedDGF, dgf2: PerturbedDGF, lam: float,
                            tol: float = 1e-12, warm_iters: int = 2000):
    """Equilibrium of ``x U y - d1(x)/lam + d2(y)/lam`` over the perturbed treeplexes.

    First-order conditions say each strategy is the conjugate gradient of
    ``lam`` times its payoff vector, so the equilibrium is the fixed point of
    :func:`smoothed_best_responses`.  A damped iteration gets close and
    Powell's hybrid method polishes to ``tol``.
    """
    n1 = game.idx1.n_sequences
    z = np.concatenate([game.idx1.uniform(), game.idx2.uniform()])
    step = 1.0 / (1.0 + lam)
    for _ in range(warm_iters):
        z = (1 - step) * z + step * smoothed_best_responses(game, dgf1, dgf2, lam, z)
    sol = root(lambda v: v - smoothed_best_responses(game, dgf1, dgf2, lam, v), z, method="hybr",
               options={"xtol": 1e-15, "maxfev": 100_000})
    z = smoothed_best_responses(game, dgf1, dgf2, lam, sol.x)
    resid = float(np.max(np.abs(z - smoothed_best_responses(game, dgf1, dgf2, lam, z))))
    if resid > tol:
        raise RuntimeError(f"fixed point residual {resid!r} above {tol!r}")
    return z[:n1], z[n1:], resid
