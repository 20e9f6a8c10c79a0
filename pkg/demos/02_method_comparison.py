"""Three ways to get the static ZZ: dense eigensolver, Jacobi sweeps, perturbation.

The Jacobi (NPAD) route should agree with the dense solver to round-off; the
perturbative closed form is good far from the qubits but loses its relative
accuracy wherever the ZZ itself goes through zero.
"""

import numpy as np

from pfgate import load_preset, static_zz

dev = load_preset(2)
print(f"{'omega_c':>8} {'exact kHz':>11} {'npad - exact':>13} {'swt kHz':>10}")
for w in np.linspace(4.6, 7.4, 15):
    p = dev.at(w)
    exact = static_zz(p, "exact")
    print(f"{w:8.2f} {exact:11.3f} {static_zz(p, 'npad') - exact:13.2e} {static_zz(p, 'swt'):10.3f}")
