"""How robust is a small reduced state to losing or scrambling amplitudes?

First keep only the largest fraction of configurations and measure the
infidelity of the 4-site reduced density matrix.  Then multiply every
amplitude by a lognormal factor of growing width and average the fidelity
over 40 seeded trials.
"""
from ferrichain import LatticeSpec, distortion_fidelity, ground_state, truncation_infidelity_scan

lat = LatticeSpec.alternating(12, field=0.1)
gs, _ = ground_state(lat, lat.neel_sz)
sites = [0, 1, 2, 3]

print("kept fraction -> 1 - F")
for frac, inf in truncation_infidelity_scan(gs, sites, [0.01, 0.02, 0.05, 0.1, 0.25, 1.0]):
    print(f"  {frac:5.2f}  {inf:.3e}")

print("\nsigma -> mean F (stderr)")
for sigma in (0.0, 0.2, 0.4, 0.6, 0.8, 1.0):
    r = distortion_fidelity(gs, sites, sigma, trials=40, seed=0)
    print(f"  {sigma:.1f}  {r.mean_fidelity:.5f} ({r.stderr:.1e})")
