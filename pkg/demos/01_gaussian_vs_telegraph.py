"""
Gaussian versus telegraph dephasing
===================================

A qubit driven by classical noise X(t) loses coherence as
D(t) = |E exp(-2i omega0 int_0^t X)|.  Ornstein-Uhlenbeck noise decays
monotonically; random telegraph noise with slow switching makes D cross
zero and come back (revivals).

Run with ``python3 demos/01_gaussian_vs_telegraph.py``.
"""
import numpy as np

from qdephase import NoiseSpec, TimeGrid, d_ou, d_rtn, detect_revivals, simulate_curve

grid = TimeGrid(40.0, 201)

# Monte Carlo with exact transitions; the seed fixes every number below
ou = simulate_curve(NoiseSpec.ou(0.1, 0.63), grid, 1.0, 20_000, master_seed=0)
rtn = simulate_curve(NoiseSpec.rtn(0.1), grid, 1.0, 20_000, master_seed=1)

# compare to the closed forms
for name, curve, exact in (("OU", ou, d_ou(grid.times, 0.1, 0.63)),
                           ("RTN", rtn, d_rtn(grid.times, 0.1))):
    z = np.abs(curve.d_values - exact) / np.maximum(curve.std_err, 1e-12)
    print(f"{name:>3}: max |MC - exact| = {np.max(np.abs(curve.d_values - exact)):.4f}, "
          f"{np.mean(z <= 4):.1%} of points within 4 stderr")

# revival detection on the Monte Carlo curves
for name, curve in (("OU", ou), ("RTN", rtn)):
    rep = detect_revivals(curve)
    print(f"{name:>3}: verdict={rep.verdict.value} measure={rep.nm_measure:.3f} "
          f"revivals={len(rep.revivals)} first onset={rep.first_onset}")

# the first RTN revival starts at the first zero of the closed form
print("closed-form RTN first onset:",
      detect_revivals(type(rtn).from_function(lambda t: d_rtn(t, 0.1), grid)).first_onset)
