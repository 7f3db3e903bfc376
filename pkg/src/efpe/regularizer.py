"""Perturbed dilated entropy on a treeplex.

The local regularizer on a simplex is the negative entropy shifted by ``eps``::

    h_eps(w) = sum_a (w_a - eps) * log(w_a - eps)

and the dilated version sums ``alpha_I * x[parent(I)] * h_eps(x[I] / x[parent(I)])``
over the infosets of one player.  Its conjugate gradient (the maximizer of
``x @ g - d(x)``) decomposes into one closed-form softmax per infoset, done
bottom-up, and everything in this module is built on that pass.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sequence_form import FEASIBILITY_TOL, TreeplexIndex

LOG_FLOOR = 1e-15


class DomainError(ValueError):
    """A strategy is on or outside the boundary of the regularizer's domain."""


def compute_weights(idx: TreeplexIndex) -> np.ndarray:
    """Infoset weights ``alpha_I = 2 + 2 * max_a sum_{J after (I, a)} alpha_J``.

    Returned in the infoset order of ``idx``; all values are exact integers.
    """
    alpha = np.zeros(idx.n_infosets)
    child_sum = np.zeros(idx.n_sequences)
    for lv in reversed(idx.levels):
        a = 2.0 + 2.0 * np.maximum.reduceat(child_sum[lv.seqs], lv.offsets)
        alpha[lv.infosets] = a
        np.add.at(child_sum, lv.parents, a)
    return alpha


def max_perturbation(idx: TreeplexIndex) -> float:
    """Largest admissible perturbation, ``min_I 1 / (2 n_I)``."""
    if idx.n_infosets == 0:
        return 0.5
    return float(1.0 / (2.0 * idx.n_actions.max()))


# -- local (single simplex) pieces --------------------------------------------

def _check_local(w, eps):
    w = np.asarray(w, dtype=float)
    if np.any(w - eps <= 0.0):
        raise DomainError(f"every coordinate must exceed eps={eps!r}")
    return w


def local_dgf(w, eps: float = 0.0) -> float:
    w = _check_local(w, eps)
    u = w - eps
    return float(np.dot(u, np.log(u)))


def local_gradient(w, eps: float = 0.0) -> np.ndarray:
    w = _check_local(w, eps)
    return 1.0 + np.log(w - eps)


def local_conjugate_gradient(g, eps: float = 0.0, n: int | None = None) -> np.ndarray:
    """Maximizer of ``w @ g - h_eps(w)`` over the simplex: ``(1 - eps*n) softmax(g) + eps``."""
    g = np.asarray(g, dtype=float)
    n = g.size if n is None else n
    if n != g.size:
        raise ValueError("n does not match the length of g")
    if eps < 0 or eps > 1.0 / (2 * n) + 1e-15:
        raise ValueError(f"eps must lie in [0, 1/(2n)] = [0, {1.0 / (2 * n)}]")
    e = np.exp(g - g.max())
    return (1.0 - eps * n) * e / e.sum() + eps


def local_conjugate_value(g, eps: float = 0.0) -> float:
    """``max_w w @ g - h_eps(w)`` in closed form."""
    g = np.asarray(g, dtype=float)
    m = 1.0 - eps * g.size
    top = g.max()
    lse = top + math.log(np.exp(g - top).sum())
    return float(eps * g.sum() + m * (lse - math.log(m)))


# -- dilated regularizer -------------------------------------------------------

@dataclass(frozen=True)
class _LevelCache:
    seqs: slice
    offsets: np.ndarray
    seg: np.ndarray
    parents: np.ndarray
    seq_parent: np.ndarray
    alpha: np.ndarray  # per infoset of the level
    alpha_seq: np.ndarray  # per sequence of the level
    n: np.ndarray  # action counts per infoset
    mass: np.ndarray  # 1 - eps * n


@dataclass(frozen=True, eq=False)
class PerturbedDGF:
    """Perturbed dilated entropy of one player for a fixed ``eps``."""

    idx: TreeplexIndex
    eps: float = 0.0
    weights: np.ndarray | None = None
    _levels: tuple = field(init=False, repr=False)

    def __post_init__(self):
        eps = float(self.eps)
        if not np.isfinite(eps) or eps < 0:
            raise ValueError("eps must be a finite non-negative number")
        cap = max_perturbation(self.idx)
        if eps > cap * (1 + 1e-12):
            raise ValueError(f"eps={eps!r} exceeds 1/(2 max n_I) = {cap!r}")
        object.__setattr__(self, "eps", eps)
        alpha = compute_weights(self.idx) if self.weights is None else np.asarray(self.weights, float)
        if alpha.shape != (self.idx.n_infosets,) or np.any(alpha <= 0):
            raise ValueError("weights must be positive, one per infoset")
        object.__setattr__(self, "weights", alpha)
        levels = []
        for lv in self.idx.levels:
            a = alpha[lv.infosets]
            n = self.idx.n_actions[lv.infosets].astype(float)
            levels.append(_LevelCache(lv.seqs, lv.offsets, lv.seg, lv.parents,
                                      self.idx.seq_parent[lv.seqs], a, a[lv.seg], n, 1.0 - eps * n))
        object.__setattr__(self, "_levels", tuple(levels))

    @property
    def player(self) -> int:
        return self.idx.player

    def with_eps(self, eps: float) -> "PerturbedDGF":
        return PerturbedDGF(self.idx, eps, self.weights)

    def bound(self) -> float:
        """``sum_I alpha_I log(2 n_I)``, an upper bound on ``|d(x)|``."""
        return float(np.sum(self.weights * np.log(2.0 * self.idx.n_actions)))


@dataclass(frozen=True)
class ProxParams:
    """Regularization strength ``lam`` (``inf`` disables it) and step size ``eta``."""

    lam: float
    eta: float

    def __post_init__(self):
        if not self.lam > 0 or not (np.isfinite(self.eta) and self.eta > 0):
            raise ValueError("lam and eta must be positive (lam may be inf)")

    @property
    def gamma(self) -> float:
        if math.isinf(self.lam):
            return float(self.eta)
        return 1.0 / (1.0 / self.eta + 1.0 / self.lam)


def _behavioral(dgf: PerturbedDGF, x: np.ndarray, lv: _LevelCache, strict: bool):
    par = x[lv.seq_parent]
    if strict and np.any(par <= 0.0):
        raise DomainError("gradient needs every infoset reached with positive mass")
    with np.errstate(divide="ignore", invalid="ignore"):
        b = np.where(par > 0, x[lv.seqs] / np.where(par > 0, par, 1.0), 1.0)
    low = (b < dgf.eps - FEASIBILITY_TOL) & (par > 0)
    if np.any(low):
        raise DomainError(f"behavioral probability {b[low].min()!r} below eps={dgf.eps!r}")
    return b, par


def dgf_value(dgf: PerturbedDGF, x) -> float:
    """Value of the dilated regularizer; unreached infosets contribute 0."""
    x = np.asarray(x, dtype=float)
    total = 0.0
    for lv in dgf._levels:
        b, par = _behavioral(dgf, x, lv, strict=False)
        u = np.maximum(b - dgf.eps, 0.0)
        with np.errstate(divide="ignore", invalid="ignore"):
            ulogu = np.where(u > 0, u * np.log(np.where(u > 0, u, 1.0)), 0.0)
        total += float(np.dot(lv.alpha_seq * par, ulogu))
    return total


def dgf_gradient(dgf: PerturbedDGF, x) -> np.ndarray:
    """Gradient of :func:`dgf_value` at an interior strategy.

    Action entries get ``alpha_I * (1 + log(b - eps))`` and the parent entry
    of each infoset collects ``alpha_I * (h(b) - b @ grad h(b))``.
    Behavioral points are clamped to ``[eps + 1e-15, 1]`` before the logs.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (dgf.idx.n_sequences,):
        raise ValueError(f"expected {dgf.idx.n_sequences} entries, got {x.shape}")
    grad = np.zeros_like(x)
    eps = dgf.eps
    for lv in dgf._levels:
        b, _ = _behavioral(dgf, x, lv, strict=True)
        b = np.clip(b, eps + LOG_FLOOR, 1.0)
        logu = np.log(b - eps)
        local_grad = 1.0 + logu
        grad[lv.seqs] = lv.alpha_seq * local_grad
        h = np.add.reduceat((b - eps) * logu, lv.offsets)
        bg = np.add.reduceat(b * local_grad, lv.offsets)
        np.add.at(grad, lv.parents, lv.alpha * (h - bg))
    return grad


def _conjugate_pass(dgf: PerturbedDGF, g: np.ndarray, check: bool = True):
    g = np.array(g, dtype=float)  # accumulates rolled-up child values
    if check:
        if g.shape != (dgf.idx.n_sequences,):
            raise ValueError(f"expected {dgf.idx.n_sequences} entries, got {g.shape}")
        if not np.all(np.isfinite(g)):
            raise ValueError("gradient has non-finite entries")
    b = np.empty_like(g)
    eps = dgf.eps
    for lv in reversed(dgf._levels):
        h = g[lv.seqs] / lv.alpha_seq
        top = np.maximum.reduceat(h, lv.offsets)
        e = np.exp(h - top[lv.seg])
        s = np.add.reduceat(e, lv.offsets)
        b[lv.seqs] = lv.mass[lv.seg] * e / s[lv.seg] + eps
        lse = top + np.log(s)
        best = lv.mass * (lse - np.log(lv.mass))
        if eps:
            best = best + eps * np.add.reduceat(h, lv.offsets)
        np.add.at(g, lv.parents, lv.alpha * best)
    x = b
    x[0] = 1.0
    for lv in dgf._levels:
        x[lv.seqs] *= x[lv.seq_parent]
    return x, float(g[0])


def conjugate_gradient(dgf: PerturbedDGF, g) -> np.ndarray:
    """Maximizer of ``x @ g - d(x)`` over the treeplex.

    Always interior: every behavioral component is at least ``eps``.
    """
    return _conjugate_pass(dgf, g)[0]


def conjugate_value(dgf: PerturbedDGF, g) -> float:
    """``max_x x @ g - d(x)``, read off the root of the bottom-up pass."""
    return _conjugate_pass(dgf, g)[1]


def bregman(dgf: PerturbedDGF, x, anchor) -> float:
    """``d(x) - d(anchor) - grad d(anchor) @ (x - anchor)``."""
    x = np.asarray(x, dtype=float)
    anchor = np.asarray(anchor, dtype=float)
    return dgf_value(dgf, x) - dgf_value(dgf, anchor) - float(dgf_gradient(dgf, anchor) @ (x - anchor))


def prox_dual(params: ProxParams, g, anchor_dual) -> np.ndarray:
    """Dual point whose conjugate gradient is the composite prox step.

    ``anchor_dual`` is any vector mapping to the anchor under
    :func:`conjugate_gradient`, e.g. ``dgf_gradient(dgf, anchor)``.
    """
    gam = params.gamma
    return gam * np.asarray(g, dtype=float) + (gam / params.eta) * np.asarray(anchor_dual, dtype=float)


def composite_prox(dgf: PerturbedDGF, params: ProxParams, g, anchor) -> np.ndarray:
    """``argmax_x x @ g - d(x) / lam - D(x | anchor) / eta`` over the treeplex."""
    return conjugate_gradient(dgf, prox_dual(params, g, dgf_gradient(dgf, anchor)))


def prox_objective(dgf: PerturbedDGF, params: ProxParams, g, anchor, x) -> float:
    """Objective maximized by :func:`composite_prox`, evaluated at ``x``."""
    x = np.asarray(x, dtype=float)
    val = float(np.dot(x, g)) - bregman(dgf, x, anchor) / params.eta
    if not math.isinf(params.lam):
        val -= dgf_value(dgf, x) / params.lam
    return val
