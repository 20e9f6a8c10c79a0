"""Cancelling static ZZ with the drive itself.

Away from the idle point the static ZZ is large, but a cross-resonance drive
adds a ZZ of its own.  The freedom amplitude is the drive strength at which the
two cancel; the ZX rate there sets how fast the entangling gate can be.
"""

import numpy as np

from pfgate import freedom_curve, load_preset

for n in (2, 6):
    curve = freedom_curve(load_preset(n), np.arange(4.6, 5.61, 0.1), (0.0, 100.0))
    print(f"device {n}")
    for s in curve.samples:
        print(f"  omega_c {s.omegaC:5.2f} GHz  Omega* {s.omegaStar:6.2f} MHz  ZX {s.alphaZXAtStar:6.3f} MHz")
    for g in curve.gaps:
        print(f"  no freedom amplitude up to 100 MHz for {g.start:.2f}-{g.end:.2f} GHz")
