"""Checking the rotating-frame drive elements against leading-order formulas.

With symmetric couplings, no direct qubit coupling and only exchange terms,
each driven transition has a closed-form rate per unit drive.  The numbers
below are numeric over closed form; most sit within a few percent of 1.
"""

from pfgate import find_idle_point, load_preset
from pfgate.effective import numeric_transition_rates, symmetrized, transition_rates

dev = load_preset(2)
p = symmetrized(dev.at(find_idle_point(dev).omegaCI))
closed, numeric = transition_rates(p), numeric_transition_rates(p, Omega=1.0)
for k in range(1, 12):
    print(f"lambda{k:<2} closed {closed[k]: .5f}  numeric {numeric[k]: .5f}  "
          f"ratio {numeric[k] / closed[k]: .3f}")
