"""How a narrow idler bandpass removes the sinc sidelobes, and what it costs."""
# %%
from pdcsim import FrequencyGrid, GaussianPump, RectFilter, apply_filters, calibrated_model, schmidt_decompose
from pdcsim import source_jsa

model = calibrated_model()
grid = FrequencyGrid.from_wavelengths((1366, 1456), (1236, 1316))
jsa = source_jsa(model, GaussianPump(670.0, 2.0), grid=grid)
print(f"unfiltered: K = {schmidt_decompose(jsa).schmidt_number:.4f}")

for width in (1.0, 3.0, 6.0, 12.0):
    out, frac = apply_filters(jsa, None, RectFilter(1276.0, width))
    print(f"idler {width:4.1f} nm: K = {schmidt_decompose(out).schmidt_number:.4f}, pairs kept {frac:.3f}")

# %% A signal filter as wide as the signal marginal leaves the state alone.
out, frac = apply_filters(jsa, RectFilter(1411.0, 45.0), None)
print(f"signal 45 nm: K = {schmidt_decompose(out).schmidt_number:.4f}, pairs kept {frac:.3f}")
