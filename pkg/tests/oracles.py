"""Slow, independent reference implementations used by the tests."""

import itertools

import numpy as np
from scipy.optimize import minimize


def naive_weights(idx):
    """alpha_I = 2 + 2 max_a sum_{J below (I, a)} alpha_J, by plain recursion."""
    below = {s: [] for s in range(idx.n_sequences)}
    for j in range(idx.n_infosets):
        below[int(idx.parent[j])].append(j)
    memo = {}

    def alpha(j):
        if j not in memo:
            sl = idx.infoset_slice(j)
            memo[j] = 2 + 2 * max(sum(alpha(k) for k in below[s]) for s in range(sl.start, sl.stop))
        return memo[j]

    return np.array([alpha(j) for j in range(idx.n_infosets)], dtype=float)


def naive_dgf(idx, weights, eps, x):
    """Loop-by-loop dilated perturbed entropy; works on complex input for complex-step derivatives."""
    total = 0
    for j in range(idx.n_infosets):
        sl = idx.infoset_slice(j)
        par = x[int(idx.parent[j])]
        for s in range(sl.start, sl.stop):
            u = x[s] / par - eps
            total = total + weights[j] * par * u * np.log(u)
    return total


def complex_step_gradient(f, x, h=1e-30):
    g = np.empty(len(x))
    for i in range(len(x)):
        z = np.array(x, dtype=complex)
        z[i] += 1j * h
        g[i] = f(z).imag / h
    return g


def naive_conjugate_value(idx, weights, eps, g):
    """max_x x @ g - d(x) by recursing over the infoset tree with local closed forms."""
    below = {s: [] for s in range(idx.n_sequences)}
    for j in range(idx.n_infosets):
        below[int(idx.parent[j])].append(j)

    def seq_value(s):
        return g[s] + sum(info_value(j) for j in below[s])

    def info_value(j):
        sl = idx.infoset_slice(j)
        n = sl.stop - sl.start
        h = np.array([seq_value(s) for s in range(sl.start, sl.stop)]) / weights[j]
        m = 1 - eps * n
        lse = np.log(np.sum(np.exp(h - h.max()))) + h.max()
        return weights[j] * (eps * h.sum() + m * (lse - np.log(m)))

    return seq_value(0)


def simplex_grid(n, steps):
    """All points of the probability simplex with coordinates in multiples of 1/steps."""
    for c in itertools.product(range(steps + 1), repeat=n - 1):
        if sum(c) <= steps:
            yield np.array(list(c) + [steps - sum(c)], dtype=float) / steps


def logit_prox_oracle(idx, weights, eps, lam, eta, g, anchor):
    """Maximize the composite prox objective over behavioral logits with BFGS.

    The parametrization ``b = eps + (1 - n eps) softmax(theta)`` covers the
    interior of the perturbed treeplex, so an unconstrained method applies.
    Returns ``(x, objective)`` with the objective evaluated by the naive code.
    """
    grad_anchor = complex_step_gradient(lambda z: naive_dgf(idx, weights, eps, z), anchor)
    d_anchor = naive_dgf(idx, weights, eps, anchor)

    def to_x(theta):
        b = np.ones(idx.n_sequences)
        for j in range(idx.n_infosets):
            sl = idx.infoset_slice(j)
            t = theta[sl.start - 1:sl.stop - 1]
            e = np.exp(t - t.max())
            b[sl] = eps + (1 - (sl.stop - sl.start) * eps) * e / e.sum()
        x = b.copy()
        for j in range(idx.n_infosets):  # parents come before children in the index
            sl = idx.infoset_slice(j)
            x[sl] = b[sl] * x[int(idx.parent[j])]
        return x

    def objective(x):
        d = naive_dgf(idx, weights, eps, x)
        breg = d - d_anchor - grad_anchor @ (x - anchor)
        val = x @ g - breg / eta
        if np.isfinite(lam):
            val -= d / lam
        return val

    best = None
    for start in (np.zeros(idx.n_sequences - 1), np.log(np.clip(anchor[1:], 1e-12, None))):
        res = minimize(lambda th: -objective(to_x(th)), start, method="BFGS",
                       options={"gtol": 1e-10, "maxiter": 20_000})
        if best is None or res.fun < best.fun:
            best = res
    x = to_x(best.x)
    return x, objective(x), objective


def pure_strategies(idx):
    """Every pure sequence-form strategy (one action per infoset), as arrays."""
    choices = [range(idx.infoset_slice(j).start, idx.infoset_slice(j).stop) for j in range(idx.n_infosets)]
    for pick in itertools.product(*choices):
        b = np.zeros(idx.n_sequences)
        b[0] = 1.0
        b[list(pick)] = 1.0
        x = b.copy()
        for j in range(idx.n_infosets):
            sl = idx.infoset_slice(j)
            x[sl] = b[sl] * x[int(idx.parent[j])]
        yield x


def conditional_infoset_regret(game, player, label, own_b, opp_b):
    """Regret at ``label`` from a tree walk over the infoset's nodes.

    Nodes are weighted by chance times opponent reach (uniformly if that is
    zero everywhere); the best continuation is found by enumerating pure
    choices at the player's infosets below.
    """
    from efpe.game import Chance, Decision, Terminal

    tree = game.tree
    idx, oidx = game.index(player), game.index(3 - player)
    sign = 1.0 if player == 1 else -1.0

    weights = {}

    def reach(i, w):
        node = tree.nodes[i]
        if isinstance(node, Terminal):
            return
        if isinstance(node, Decision) and node.player == player and node.infoset == label:
            weights[i] = weights.get(i, 0.0) + w
            return
        if isinstance(node, Chance):
            for p, c in zip(node.probs, node.children):
                reach(c, w * p)
        elif node.player == player:
            for c in node.children:
                reach(c, w)
        else:
            for a, c in zip(node.actions, node.children):
                reach(c, w * opp_b[oidx.sequence_index(node.infoset, a)])

    reach(tree.root, 1.0)
    total = sum(weights.values())
    if total <= 0:
        weights = {h: 1.0 for h in weights}
        total = float(len(weights))

    def value(i, policy):
        node = tree.nodes[i]
        if isinstance(node, Terminal):
            return sign * node.payoff
        if isinstance(node, Chance):
            return sum(p * value(c, policy) for p, c in zip(node.probs, node.children))
        if node.player == player:
            return sum(policy(node.infoset, a) * value(c, policy) for a, c in zip(node.actions, node.children))
        return sum(opp_b[oidx.sequence_index(node.infoset, a)] * value(c, policy)
                   for a, c in zip(node.actions, node.children))

    def cond(policy):
        return sum(w * value(h, policy) for h, w in weights.items()) / total

    current = cond(lambda info, a: own_b[idx.sequence_index(info, a)])
    best = -np.inf
    for j_pick in itertools.product(*[range(idx.n_actions[j])
                                      for j in range(idx.n_infosets)]):
        chosen = {idx.infosets[j]: k for j, k in enumerate(j_pick)}

        def policy(info, a, chosen=chosen):
            j = idx.infoset_index(info)
            return 1.0 if idx.sequence_index(info, a) - idx.infoset_slice(j).start == chosen[info] else 0.0

        best = max(best, cond(policy))
    return best - current


def grid_conjugate_value(g, eps, steps=40, rounds=25):
    """Maximize ``w @ g - h_eps(w)`` on the perturbed simplex by zooming grids.

    Starts from a uniform grid over the whole simplex, then repeatedly lays
    a finer grid over a shrinking box around the best point found so far.
    """
    g = np.asarray(g, dtype=float)
    n = g.size
    m = 1.0 - n * eps

    def f(U):  # rows of U are points of the unit simplex
        u = m * U
        with np.errstate(divide="ignore", invalid="ignore"):
            ent = np.where(u > 0, u * np.log(np.where(u > 0, u, 1.0)), 0.0).sum(axis=1)
        return (eps + u) @ g - ent

    U = np.array(list(simplex_grid(n, steps)))
    vals = f(U)
    best_u, best = U[np.argmax(vals)], vals.max()
    radius = 2.0 / steps
    axes = np.linspace(-1.0, 1.0, 9)
    for _ in range(rounds):
        offs = np.array(list(itertools.product(axes, repeat=n - 1))) * radius
        head = best_u[:-1] + offs
        U = np.column_stack([head, 1.0 - head.sum(axis=1)])
        U = U[np.all(U >= 0.0, axis=1)]
        vals = f(U)
        if vals.max() >= best:
            best_u, best = U[np.argmax(vals)], vals.max()
        radius *= 0.5
    return best, m * best_u + eps


def constrained_prox_oracle(idx, weights, eps, lam, eta, g, anchor):
    """Composite prox by SLSQP directly on the perturbed treeplex polytope.

    Constraints are the flow equations ``F x = f`` and ``x_s >= eps x_parent(s)``;
    the objective and its gradient come from the naive loop code (gradient by
    complex step).  Returns ``(x, objective)``.
    """
    from scipy.optimize import LinearConstraint

    from efpe.oracle import constraint_matrix

    F, f = constraint_matrix(idx)
    G = np.zeros((idx.n_sequences - 1, idx.n_sequences))
    for s in range(1, idx.n_sequences):
        G[s - 1, s] = 1.0
        G[s - 1, idx.seq_parent[s]] -= eps
    dfun = lambda z: naive_dgf(idx, weights, eps, z)  # noqa: E731
    grad_anchor = complex_step_gradient(dfun, anchor)
    d_anchor = dfun(anchor)

    def objective(x):
        d = dfun(x)
        val = x @ g - (d - d_anchor - grad_anchor @ (x - anchor)) / eta
        return val - d / lam if np.isfinite(lam) else val

    def gradient(x):
        gd = complex_step_gradient(dfun, x)
        val = g - (gd - grad_anchor) / eta
        return val - gd / lam if np.isfinite(lam) else val

    with np.errstate(invalid="ignore", divide="ignore"):
        res = minimize(lambda x: -objective(x), anchor, jac=lambda x: -gradient(x), method="SLSQP",
                       constraints=[LinearConstraint(F.toarray(), f, f), LinearConstraint(G, 1e-12, np.inf)],
                       options={"ftol": 1e-15, "maxiter": 1000})
    return res.x, objective(res.x), objective
