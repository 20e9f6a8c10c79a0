"""Moving the coupler between the idle and entangling points without leaking.

A tanh ramp of the coupler frequency is simulated in the lab frame with all
transmon levels; the score is how much of each dressed computational state
arrives in its counterpart at the far end.
"""

import numpy as np

from pfgate import RampEnvelope, find_idle_point, load_preset, ramp_fidelities

dev = load_preset(2)
idle = find_idle_point(dev).omegaCI
for shape in ("tanh", "flatTopGaussian"):
    print(shape)
    for tau0 in np.linspace(5.0, 50.0, 10):
        F = ramp_fidelities(dev, RampEnvelope(shape, tau0, idle, 4.8))
        print(f"  tau0 {tau0:5.1f} ns  worst fidelity {min(F['01'], F['10'], F['11']):.6f}")
