"""The joint spectral amplitude at the design point and its Schmidt modes."""
# %%
import os

import numpy as np

from _common import OUT, plt, save
from pdcsim import GaussianPump, calibrated_model, marginals, schmidt_decompose, source_jsa
from pdcsim.jsa import fwhm

model = calibrated_model()
jsa = source_jsa(model, GaussianPump(670.0, 2.0))
s = schmidt_decompose(jsa)
print(f"K = {s.schmidt_number:.4f}, purity = {s.purity:.4f}, g2 = {s.g2:.4f}")
print("leading Schmidt weights:", np.round(s.probabilities[:5], 5))

# %% Marginal spectra: the signal inherits the broad pump, the idler the narrow sinc.
ms, mi = marginals(jsa)
print(f"signal FWHM {fwhm(jsa.grid.signal_nm, ms):.2f} nm, idler FWHM {fwhm(jsa.grid.idler_nm, mi):.2f} nm")

fig, ax = plt.subplots(1, 2, figsize=(10, 4))
extent = [jsa.grid.idler_nm.max(), jsa.grid.idler_nm.min(), jsa.grid.signal_nm.max(), jsa.grid.signal_nm.min()]
ax[0].imshow(jsa.intensity, extent=extent, aspect="auto", origin="upper")
ax[0].set_xlabel("idler (nm)")
ax[0].set_ylabel("signal (nm)")
ax[1].bar(range(8), s.probabilities[:8])
ax[1].set_yscale("log")
ax[1].set_xlabel("Schmidt mode")
save(fig, "jsa.png")

# %% Writing the JSA for an external plotter
jsa.write(os.path.join(OUT, "jsa"))
