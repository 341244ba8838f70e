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

# # Simulated bias and MSE

# A small version of the linear scenario table: every setting at the smallest sample sizes,
# with few repetitions and without intervals so that it runs in a few minutes.
# Use `fusioniv simulate --catalog table1-scenario1 --reps 500` for the full table.

# + tags=["hide-input"]
import matplotlib.pyplot as plt
import pandas as pd
from tqdm import tqdm

from fusioniv.estimator import EstimatorOptions
from fusioniv.simulation import iter_catalog, run_monte_carlo

# -

# + tags=["remove-stderr"]
rows = []
for entry in tqdm(iter_catalog("table1-scenario1")[:6]):
    result = run_monte_carlo(
        entry.spec,
        reps=50,
        inference="none",
        threads=4,
        options=EstimatorOptions(nw_method="binned"),
    )
    row = result.to_row()
    row["published_mse_x100"] = entry.reference.mse_x100
    rows.append(row)
table = pd.DataFrame(rows)
table
# -

# + tags=["hide-input"]
plt.scatter(table["published_mse_x100"], table["mse_x100"])
for _, row in table.iterrows():
    plt.annotate(row["setting"], (row["published_mse_x100"], row["mse_x100"]))
plt.xscale("log")
plt.yscale("log")
plt.xlabel("published MSE x 100")
plt.ylabel("simulated MSE x 100")
plt.show()
# -
