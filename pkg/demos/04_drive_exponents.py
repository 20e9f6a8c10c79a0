"""How the drive-induced terms grow with amplitude.

At weak drive the ZX rate is linear and the drive ZZ quadratic.  Past a few
MHz the next terms show up; we fit their power laws on device 6.
"""

import numpy as np

from pfgate import fit_exponents, load_preset, total_zz

dev = load_preset(2)
p = dev.at(4.8)
for O in (0.5, 1.0, 2.0, 4.0):
    d = total_zz(p, O)
    print(f"device 2, Omega {O:3.1f} MHz: ZX {d.zx:8.4f} MHz, drive ZZ {d.zz_dynamic:9.4f} kHz")

fit = fit_exponents(load_preset(6), 4.5, np.geomspace(5.0, 60.0, 16))
print(f"device 6 at 4.5 GHz: eta2 = {fit.eta2:.4g} kHz/MHz^2, mu1 = {fit.mu1:.4g}")
print(f"  ZZ beyond quadratic ~ Omega^{fit.a:.2f}, ZX beyond linear ~ Omega^{fit.b:.2f}")
