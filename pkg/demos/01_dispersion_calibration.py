"""Calibrating the waveguide dispersion and tracing the phasematching curve.

Bulk KTP Sellmeier equations put the type-II phasematching a few nm away
from where the waveguide actually phasematches, so a small linear index
correction per polarization is fitted to two measured anchors.
"""
# %%
import numpy as np

from _common import plt, save
from pdcsim import SIGNAL, PUMP, calibrate, group_velocity, solve_pm_curve
from pdcsim.dispersion import DispersionModel

res = calibrate()
print("corrections:", res.correction.to_dict())
print("residuals (dk star, dk degeneracy, relative GV mismatch):", res.residuals)

# %% The uncorrected bulk model misses the anchors by a wide margin.
bulk = solve_pm_curve(DispersionModel(), (620, 700), 81)
curve = solve_pm_curve(res.model, (620, 700), 81)
for p in curve.at(670.0):
    print(f"670 nm pump -> {p.signal_nm:.2f} nm signal, {p.idler_nm:.2f} nm idler")

fig, ax = plt.subplots()
ax.plot(bulk.pump_nm, bulk.signal_nm, "C7--", label="bulk signal")
ax.plot(bulk.pump_nm, bulk.idler_nm, "C7:", label="bulk idler")
ax.plot(curve.pump_nm, curve.signal_nm, "C0", label="signal (TM)")
ax.plot(curve.pump_nm, curve.idler_nm, "C1", label="idler (TE)")
ax.plot([670, 670, 637.5], [1411, 1276, 1275], "kx")
ax.set_xlabel("pump wavelength (nm)")
ax.set_ylabel("daughter wavelength (nm)")
ax.legend()
save(fig, "pm_curve.png")

# %% Group velocities near the design point
lam = np.linspace(1300, 1500, 5)
vp = [group_velocity(res.model, PUMP, 1 / (1 / l + 1 / 1276.0)) for l in lam]
vs = [group_velocity(res.model, SIGNAL, l) for l in lam]
for l, a, b in zip(lam, vp, vs):
    print(f"signal {l:.0f} nm: v_pump = {a:.5e} m/s, v_signal = {b:.5e} m/s")
