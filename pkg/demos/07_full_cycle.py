"""A complete idle -> entangle -> idle cycle on device 6.

Ramp down, drive a calibrated ZX90, ramp back, all with decoherence, and
report how far the result is from an ideal ZX90 up to virtual Z phases.
"""

from pfgate import CoherenceSpec, find_idle_point, load_preset
from pfgate.dynamics import cycle_at_duration

dev = load_preset(6)
scan = cycle_at_duration(dev, 145.0, find_idle_point(dev).omegaCI, 4.8,
                         CoherenceSpec.benchmark(), [60.0, 70.0, 80.0, 90.0, 100.0])
for tg, tau0, err in zip(scan.tg, scan.tau0, scan.error):
    print(f"drive {tg:5.1f} ns, ramps {tau0:5.1f} ns each: error {100 * err:.3f}%")
print(f"leakage of the best split: {scan.result.leakage:.2e}")
