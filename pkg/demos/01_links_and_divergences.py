# # Transfer functions and their Bregman divergences
#
# Every link f is the gradient of a convex potential F. The divergence
# D_F(u, v) measures distance between pre-activations, and its mirror image
# D_{F*}(x, y) measures distance between the post-activations x = f(u).

# %%
import numpy as np

from bregpca.links import (
    apply_inverse_link,
    apply_link,
    bregman_divergence,
    conjugate_potential,
    dual_divergence,
    parse_link,
    potential,
)

rng = np.random.default_rng(0)

# %% [markdown]
# Link strings are what the CLI and model bundles use.

# %%
links = [parse_link(s) for s in ("identity", "leaky-relu:0.1", "sigmoid", "tanh", "softmax")]
for link in links:
    print(f"{link.spec:16s} f(0.5, -1, 2) = {apply_link(link, [0.5, -1.0, 2.0]).round(4)}")

# %% [markdown]
# Swapping arguments and moving to the other side of the link gives the same
# number: D_F(u, v) = D_{F*}(f(v), f(u)).

# %%
u, v = rng.normal(size=(2, 4))
for link in links:
    primal = bregman_divergence(link, u, v)
    dual = dual_divergence(link, apply_link(link, v), apply_link(link, u))
    print(f"{link.spec:16s} D_F = {primal:.10f}   D_F* = {dual:.10f}")

# %% [markdown]
# The Fenchel-Young equality F(u) + F*(f(u)) = u . f(u) holds for each link,
# with the constants chosen so that F(0) = 0.

# %%
for link in links:
    fu = apply_link(link, u)
    gap = potential(link, u) + conjugate_potential(link, fu) - u @ fu
    print(f"{link.spec:16s} Fenchel gap = {gap:.2e}")

# %% [markdown]
# For softmax the inverse is only defined up to adding a constant; the zero-sum
# representative is returned, and the dual divergence is the KL divergence.

# %%
sm = parse_link("softmax")
p = np.array([0.7, 0.2, 0.1])
z = apply_inverse_link(sm, p)
print("logits", z.round(4), "sum", round(z.sum(), 15))
q = np.array([0.5, 0.25, 0.25])
print("D_F*(p, q) =", dual_divergence(sm, p, q), " KL =", np.sum(p * np.log(p / q)))
