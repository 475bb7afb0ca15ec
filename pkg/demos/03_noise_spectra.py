"""
Noise spectra
=============

The periodogram of long stationary trajectories estimates the two-sided
spectral density S(omega), normalised so that 2 * int_0^inf S = variance.
Filtering telegraph noise removes power at omega = 0 and produces a peak
near sqrt(2 gamma mu).

Run with ``python3 demos/03_noise_spectra.py``.
"""
import math

import numpy as np

from qdephase import NoiseSpec, TimeGrid, periodogram, sample, spectral_shape, spectrum_y
from qdephase.spectral import peak_frequency

grid = TimeGrid(400.0, 4001)

# filtered OU against its closed form
gamma, kappa, sigma = 0.1, 1.0, 0.63
est = periodogram(sample(NoiseSpec.filtered_ou(gamma, sigma, kappa), grid, 0, 1000), transient_cut=40.0)
band = est.band(0.05, 5.0)
ratio = est.s_values[band] / spectrum_y(est.omegas[band], gamma, kappa, sigma)
print(f"filtered OU: S_est / S_exact in [{ratio.min():.2f}, {ratio.max():.2f}], "
      f"peak {peak_frequency(est):.3f} (expected {math.sqrt(gamma * kappa):.3f})")

# filtered telegraph noise: dip at zero and a single peak
for mu in (0.5, 1.0):
    ens = sample(NoiseSpec.filtered_rtn(0.5, mu), grid, 1, 500)
    est = periodogram(ens, transient_cut=40.0)
    shape = spectral_shape(est, omega_max=5.0)
    variance = np.var(ens.values[:, grid.times >= 40.0])
    print(f"filtered RTN mu={mu}: dip at zero={shape['dip_at_zero']}, "
          f"peak {peak_frequency(est):.3f} vs sqrt(2 gamma mu)={math.sqrt(2 * 0.5 * mu):.3f}, "
          f"2*int S = {est.total_power():.4f} vs sample variance {variance:.4f}")
