"""
The dilated regularizer by hand
===============================

Everything the solver does reduces to one bottom-up softmax pass over the
infoset tree.  This script takes that pass apart on Kuhn poker.
"""
import numpy as np

from efpe import GameSpec, PerturbedDGF, ProxParams, SequenceFormGame, composite_prox
from efpe.regularizer import bregman, conjugate_gradient, conjugate_value, dgf_gradient, dgf_value

game = SequenceFormGame.from_tree(GameSpec.parse("kuhn").build())
idx = game.idx1
dgf = PerturbedDGF(idx, eps=0.05)

###############################################################################
# Weights
# -------
# Infosets deeper in the tree get smaller weights; a leaf infoset weighs 2.

for label, a in zip(idx.infosets, dgf.weights):
    print(f"  {label:<8} alpha = {a:g}")

###############################################################################
# Conjugate gradient and its inverse
# ----------------------------------
# The gradient of the regularizer maps a strategy to a dual vector; the
# conjugate pass maps it straight back.

rng = np.random.default_rng(0)
g = rng.normal(size=idx.n_sequences)
x = conjugate_gradient(dgf, g)
print("behavioral floor respected:", bool(np.all(x[1:] >= 0.05 * x[idx.seq_parent[1:]] - 1e-15)))
print("round trip error:", np.abs(conjugate_gradient(dgf, dgf_gradient(dgf, x)) - x).max())
print("Fenchel-Young gap:", conjugate_value(dgf, g) - (x @ g - dgf_value(dgf, x)))

###############################################################################
# One prox step
# -------------
# ``lam`` weighs the regularizer, ``eta`` the distance to the anchor.

anchor = idx.uniform()
for lam in (1.0, 100.0, np.inf):
    step = composite_prox(dgf, ProxParams(lam, eta=0.5), g, anchor)
    print(f"lam={lam:>5}: moved {np.linalg.norm(step - anchor):.4f}, Bregman {bregman(dgf, step, anchor):.4f}")
