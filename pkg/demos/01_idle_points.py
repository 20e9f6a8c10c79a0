"""Where does the coupler switch the qubits off?

For each preset device we look for the coupler frequency at which the static
ZZ vanishes on the smooth branch, and set it beside the two-level closed form
that ignores higher coupler levels.
"""

from pfgate import decoupling_frequency, find_idle_point, load_preset

print(f"{'device':>6} {'numeric GHz':>12} {'closed form':>12} {'ZZ left kHz':>12} {'g_eff MHz':>10}")
for n in range(1, 7):
    dev = load_preset(n)
    ip = find_idle_point(dev)
    if ip.absent:
        print(f"{n:>6} {'absent':>12} {'absent':>12}")
        continue
    print(f"{n:>6} {ip.omegaCI:12.4f} {decoupling_frequency(dev):12.4f} "
          f"{ip.residualZZ:12.2e} {ip.residualGeff:10.3f}")

# Device 1's capacitances allow no real decoupling point: its qubits always
# see some exchange, and the one static ZZ zero it has is not an idle point.
