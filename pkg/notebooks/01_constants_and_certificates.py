# ---
# jupyter:
#   jupytext:
#     formats: py:percent
#     text_representation:
#       extension: .py
#       format_name: percent
# ---

# %% [markdown]
# # Sharp constants and super-solution certificates
#
# The closed-form constants come back as exact fractions. A certificate is
# sampled evidence that (-Laplacian - W) phi >= 0 for a positive phi, which
# rules out any W with a larger coefficient.

# %%
from hardylab import constants as C
from hardylab.constants import Placement

for d in range(3, 8):
    print(d, C.hardy_interior_constant(d).exact, C.hardy_boundary_constant(d).exact,
          C.hardy_rellich_constant(d).exact)

# %% [markdown]
# Multipolar constants depend on where the poles sit: anywhere in R^d, or on
# the boundary of a ball or half-space.

# %%
for n in range(2, 6):
    print(n, C.multipolar_constant(3, n, Placement.INTERIOR).exact,
          C.multipolar_constant(3, n, Placement.BOUNDARY).exact,
          C.multipolar_constant(3, n, Placement.BOUNDARY).attained_claim.value)

# %% [markdown]
# The Rellich constant is the maximum of a quartic in the exponent alpha over
# the admissible interval. The maximiser is -(d-4)/2.

# %%
import numpy as np

d = 7
opt = C.maximize_rellich_quartic(d)
alphas = np.linspace(-(d - 2), 0, 11)
print(opt.argmax, opt.max_value, C.rellich_constant(d).value)
print(np.round(C.rellich_quartic(d, alphas), 3))

# %% [markdown]
# ## Certificates
#
# The extremal pair makes the residual vanish identically. Raising the
# coefficient by 1% is enough to get a Violated verdict.

# %%
from hardylab.geometry import PotentialSpec
from hardylab.supersolution import SupersolutionAnsatz, certify_hardy

d = 5
phi = SupersolutionAnsatz.power_only(-(d - 2) / 2)
for factor in (1.0, 1.01):
    cert = certify_hardy(PotentialSpec.inverse_square(d, factor * (d - 2) ** 2 / 4), phi)
    print(factor, cert.verdict.value, cert.min_residual, cert.samples_checked)

# %% [markdown]
# The local boundary ansatz has no closed-form Laplacian, so it is checked
# with Richardson-extrapolated finite differences. It certifies only on a very
# small neighbourhood of the boundary point.

# %%
from hardylab.supersolution import certify_fall_local

for r in (1e-3, 3e-3, 5e-2):
    cert = certify_fall_local(3, r)
    print(r, cert.verdict.value, f"{cert.min_residual:.2e}", f"tol {cert.tolerance:.1e}")
