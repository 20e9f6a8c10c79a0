"""ZX90 error against gate length.

Short gates need strong drives, which the ZX rate eventually cannot deliver
(the cutoff); long gates lose to decoherence.  In between sits one optimum.
"""

from pfgate import CoherenceSpec, load_preset, zx90_gate_error

for n in (2, 6):
    curve = zx90_gate_error(load_preset(n), 4.8, CoherenceSpec.benchmark())
    tg, err = curve.minimum()
    print(f"device {n}: shortest feasible gate {curve.tg[curve.feasible][0]:.2f} ns, "
          f"best {err:.2e} at {tg:.2f} ns")
