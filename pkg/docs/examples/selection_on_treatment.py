# -*- coding: utf-8 -*-
# ---
# jupyter:
#   jupytext:
#     formats: py:light,md:myst
#     text_representation:
#       extension: .py
#       format_name: light
#       format_version: '1.5'
#       jupytext_version: 1.14.4
#   kernelspec:
#     display_name: Python 3
#     name: python3
# ---

# # Selection on the treatment

# Units enter the primary sample with probability $\mathrm{expit}(0.5 A)$.
# The auxiliary sample then over-represents small treatment values.
# We compare the plain two-sample estimator with the estimator for selection on the treatment,
# which rebuilds E(A|Z) from the pooled treatment density.

# + tags=["hide-input"]
import matplotlib.pyplot as plt
import numpy as np
from tqdm import tqdm

from fusioniv.estimator import estimate_two_sample
from fusioniv.mar import MarConfig, estimate_alpha_mar
from fusioniv.simulation import DGPSpec, LogisticSelection, rep_seeds, sample_dgp

# -

spec = DGPSpec(l=0.5, n1=5000, n2=5000, selection=LogisticSelection(coef=0.5))
mar = MarConfig(a_grid_size=256, nw_method="binned")

# + tags=["remove-stderr"]
plain, adjusted = [], []
for k in tqdm(range(30)):
    ds = sample_dgp(spec, rep_seeds(0, k)[0]).dataset
    plain.append(estimate_two_sample(ds, spec.basis)[0].alpha_hat[0])
    adjusted.append(estimate_alpha_mar(ds, spec.basis, mar).alpha_hat[0])
print(f"two-sample: {np.mean(plain):.4f}, selection on treatment: {np.mean(adjusted):.4f}")
# -

# + tags=["hide-input"]
plt.hist(plain, alpha=0.5, label="two-sample")
plt.hist(adjusted, alpha=0.5, label="selection on treatment")
plt.axvline(spec.alpha, color="k")
plt.xlabel("estimate of alpha")
plt.legend()
plt.show()
# -
