"""Unheralded g2(0): theory table, Monte-Carlo counting and the efficiency budget."""
# %%
import numpy as np

from pdcsim import (
    RectFilter,
    GaussianPump,
    calibrated_model,
    efficiency_budget,
    g2_prediction_table,
    mc_g2,
    mean_photon,
    schmidt_decompose,
    source_jsa,
)
from pdcsim.measurement import truncate_probabilities

model = calibrated_model()
table = g2_prediction_table(model, bandwidths_nm=(0.5, 1.5, 3.0))
for n, row in zip(table.orders, table.g2):
    print(f"HG{n}: " + "  ".join(f"{v:.3f}" for v in row))

# %% Counting simulation with the Schmidt weights of the filtered source
jsa = source_jsa(model, GaussianPump(670.0, 2.0), idler_filter=RectFilter(1276.0, 3.0))
lam = truncate_probabilities(schmidt_decompose(jsa).probabilities)
for n_mean in (0.1, 1.0):
    run = mc_g2(lam, n_mean, 500_000, seed=3)
    print(f"N = {n_mean}: g2 = {run.g2:.4f} +/- {run.stderr:.4f} (analytic {run.analytic_g2:.4f})")
print("many modes:", mc_g2(np.full(200, 1 / 200), 1.0, 200_000, seed=4).g2)

# %% Heralding efficiencies and brightness
print("intrinsic signal", round(efficiency_budget(0.08, 0.26, 0.55), 3))
print("intrinsic idler", round(efficiency_budget(0.05, 0.30, 0.41), 3))
print("mean photon number at 37.5 pJ:", round(float(mean_photon(37.5, 0.28)), 2))
