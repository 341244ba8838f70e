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

# # Control function projection

# We draw both samples from the linear scenario with an exponential instrument
# and compare the estimated projection $\hat C(A)$ with the control function $A - m(Z)$,
# which is only available here because the simulation keeps the joint draws.

# + tags=["hide-input"]
import matplotlib.pyplot as plt
import numpy as np

from fusioniv import BootstrapConfig, bootstrap_inference, estimate_two_sample
from fusioniv.estimator import full_data_cf_estimate
from fusioniv.simulation import get_setting, sample_dgp

# -

spec = get_setting("table1-scenario1", "Setting 4", n1=5000, n2=5000)
sim = sample_dgp(spec, seed=1)
report, cp = estimate_two_sample(sim.dataset, spec.basis)
print(f"alpha_hat = {report.alpha_hat[0]:.4f}, xi_hat = {report.xi_hat:.4f}")
print(report.diagnostics)

# The classical control function estimate needs $Z$ and $Y$ on the same units:

baseline = full_data_cf_estimate(sim.joint, spec.basis)
print(f"full data alpha = {baseline.alpha[0]:.4f}")

# + tags=["hide-input"]
z, a, _ = sim.joint.T
tm = cp.treatment_model
grid_a, grid_c = cp.grid()
plt.scatter(a, a - tm(z), s=1, alpha=0.1, label="A - m(Z)")
plt.plot(grid_a, grid_c, color="C1", label="projection")
plt.xlabel("A")
plt.ylabel("control function")
plt.legend()
plt.show()
# -

# Percentile bootstrap of both samples:

# + tags=["remove-stderr"]
inference = bootstrap_inference(
    sim.dataset, spec.basis, BootstrapConfig(replicates=200, seed=2, threads=4), progress=True
)
lower, upper = inference.ci_lower[0], inference.ci_upper[0]
print(f"se = {inference.se[0]:.4f}, CI = [{lower:.4f}, {upper:.4f}]")
# -
