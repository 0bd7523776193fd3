"""
Thermal occupation and PB1 fidelity
===================================

A warm centre-of-mass mode spreads the carrier Rabi rate across Fock
states.  PB1 tolerates this up to a point, and the tolerance grows with
chain length because each ion's coupling to the mode shrinks.
"""
import numpy as np

from ionbv.experiments import thermal_scan, thermal_thresholds

nbars = np.arange(0, 13, 2)
two, three = thermal_scan(2, nbars), thermal_scan(3, nbars)
print(" nbar   2 ions     3 ions")
for a, b in zip(two, three):
    print(f" {a['nbar']:4.0f}  {a['infidelity']:.2e}  {b['infidelity']:.2e}")

# %%
th = thermal_thresholds(1e-4)
print(f"\nnbar at 1e-4 infidelity: 2 ions {th[2]:.2f}, 3 ions {th[3]:.2f}")
