"""Heralded purity as a function of pump bandwidth and waveguide length.

A coarse 8 x 8 map runs in a few seconds; the CLI preset ``fig2b`` runs the
full 25 x 25 version.
"""
# %%
import numpy as np

from _common import plt, save
from pdcsim import calibrated_model, purity_map

model = calibrated_model()
pm = purity_map(model, bandwidths_nm=np.linspace(0.5, 5, 8), lengths_mm=np.linspace(4, 40, 8))
i, j = pm.argmax()
print(f"best purity {pm.purity[i, j]:.3f} at {pm.bandwidths_nm[i]:.2f} nm, {pm.lengths_mm[j]:.1f} mm")

fig, ax = plt.subplots()
im = ax.pcolormesh(pm.lengths_mm, pm.bandwidths_nm, pm.purity, shading="auto", vmin=0, vmax=1)
fig.colorbar(im, label="purity")
ax.set_xlabel("waveguide length (mm)")
ax.set_ylabel("pump FWHM (nm)")
save(fig, "purity_map.png")
