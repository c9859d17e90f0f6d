# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Certifying the approximation ratio
#
# The ratio follows from seven parameters through a chain of grid
# optimisations.  Each grid result carries a refinement margin, and a separate
# report checks the inequalities the chain relies on.  `params.DEFAULT` is the
# winner of the search run at the end of this script.

# %%
import numpy as np

from strongneg import constants as C
from strongneg.params import DEFAULT

# %%
dc = C.derive_constants(DEFAULT)
for k in ("c0", "c1", "c2", "c3", "c4", "c5", "c6", "ratio"):
    print(f"{k:6s} {getattr(dc, k):.7f}")

# %%
rep = C.verify_internal_inequalities(DEFAULT, dc)
for c in rep.checks:
    print(f"{c.name:28s} margin {c.margin:+.3e} {'ok' if c.ok else 'FAIL'}")

# %% [markdown]
# ## Sensitivity of the final ratio
#
# The ratio as a function of the processing-time scale `v` rises to a
# maximum and flattens out; the certified value is that maximum.

# %%
v = np.linspace(0, 20, 9)
print(np.round(C.ratio_function(v, DEFAULT.beta * dc.c3, dc.c3, dc.c6), 5))
print(C.max_ratio(DEFAULT.beta * dc.c3, dc.c3, dc.c6))

# %% [markdown]
# ## One-variable certificate

# %%
for c in C.verify_appendix_a().checks:
    print(f"{c.name:24s} {c.margin:+.4e}")

# %% [markdown]
# ## Search
#
# A short run is shown; `budget=300, seed=0` reproduces `DEFAULT` in about two
# minutes.

# %%
res = C.parameter_search(1.40, budget=12, seed=0)
print(res.params, res.constants.ratio, res.reached)
