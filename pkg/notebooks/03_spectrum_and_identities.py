# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Discrete spectrum and identities
#
# Radial P1 elements on [delta, 1] give upper bounds for the interior Hardy
# constant. The bias decays only like (pi / log(1/delta))^2.

# %%
import math

from hardylab.spectrum import hardy_constant_estimate

for delta in (1e-4, 1e-6, 1e-8, 1e-12):
    est = hardy_constant_estimate(3, nodes=2048, delta=delta)
    print(delta, round(est.value, 6), round(0.25 + (math.pi / math.log(1 / delta)) ** 2, 6),
          est.iterations)

# %% [markdown]
# ## Identities on random test functions
#
# Test functions are a quadratic polynomial times (1 - |y|^2)^6 with exact
# derivatives. A tensor Gauss rule on the support ball integrates them to
# near machine precision.

# %%
from hardylab.identities import run_suite

for which, d in (("expansion_square", 3), ("second_derivative_sum", 3), ("identIP2", 5)):
    res = [r for _, r in run_suite(which, d, count=10)]
    print(which, max(r.value / max(abs(r.lhs), 1e-300) for r in res), all(r.passed for r in res))

# %% [markdown]
# The inequalities should hold with a positive margin. A random search for
# counterexamples with an inflated constant usually finds none, because the
# near-extremal functions concentrate at the origin.

# %%
res = [r for _, r in run_suite("HardyRellich", 3, count=20, params={"constant": 25 / 36 + 0.5})]
print(min(r.value / r.lhs for r in res))
