# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Correlated clocks and dependent rounding
#
# Each left-node of a bipartite instance owns a vector of exponential clocks.
# The clocks are Exp(1) one at a time but negatively correlated in pairs, and
# every right-node picks the edge whose clock, scaled by the edge mass,
# rings first.  This walk-through checks the clock law empirically and then
# runs the rounding on a small instance.

# %%
import numpy as np

from strongneg.biround import depround_many, normalize
from strongneg.corr_exp import joint_mgf
from strongneg.instances import shared_left_instance, star_instance
from strongneg.mcverify import StatContract, draw_samples, test_depround, test_sampler
from strongneg.negcorr import phi
from strongneg.rng import RngStream

# %% [markdown]
# ## Clock marginals and pair covariance

# %%
rho = [0.4, 0.3, 0.2]
Z = draw_samples(rho, RngStream(0), 200_000)
print("means", Z.mean(axis=0).round(4), "variances", Z.var(axis=0).round(4))
print("covariance matrix\n", np.cov(Z.T).round(4))

# %% [markdown]
# The joint moment generating function has a closed form.  At rates 1/2 and
# `q = (-1, -1)` it equals 3/16, whereas independent clocks would give 1/4.

# %%
Z2 = draw_samples([0.5, 0.5], RngStream(1), 200_000)
print(np.exp(-Z2.sum(axis=1)).mean(), joint_mgf(0.5, 0.5, -1, -1))

# %%
rep = test_sampler(rho, StatContract(100_000), seed=2)
print(rep.ok, len(rep.rows), "measurements")

# %% [markdown]
# ## Rounding
#
# Two right-nodes hanging off one left-node with masses and rates 1/2.  The
# probability that both are chosen is shrunk by the factor `1 - phi`.

# %%
inst = shared_left_instance()
rows = depround_many(normalize(inst), RngStream(3), 200_000)
both = np.mean((rows[:, 0] == 0) & (rows[:, 1] == 1))
print("P(both)", both, "bound", (1 - phi(0.5, 0.5, 0.5, 0.5)) * 0.25)

# %%
star = star_instance(4)
rows = depround_many(normalize(star), RngStream(4), 200_000)
freq = np.bincount(rows[:, 0], minlength=len(star.edges)) / len(rows)
print("frequencies", freq.round(4), "masses", [round(e.x, 4) for e in star.edges])

# %%
rep = test_depround(inst, StatContract(100_000), seed=5)
for r in rep.rows:
    print(f"{r.name:28s} {r.estimate:.5f} target {r.target:.5f} margin {r.margin:.5f} {'ok' if r.passed else 'FAIL'}")
