"""
PB1 composite pulses: what they buy and what they cost
======================================================

A PB1 pulse replaces one square rotation by four, chosen so that small
errors in the pulse area cancel to high order.  The same property makes the
sequence act almost like the identity on an ion that only sees a weak tail
of the addressing beam.
"""
import numpy as np

from ionbv.gates import HALF_PI, naive_infidelity, pb1_expand, pb1_infidelity

# %%
# The expanded sequence for a pi/2 rotation about x.
seq = pb1_expand(HALF_PI, 0.0)
for p in seq.pulses:
    print(f"  area {p.theta / np.pi:4.1f} pi   phase {p.phi:+.4f} rad")
print(f"total duration: {seq.duration:.0f} us")

# %%
# Amplitude errors.  The naive pulse degrades quadratically, the composite
# one only at sixth order, so the gap widens quickly as errors shrink.
print("\n eps      naive       PB1")
for eps in (0.2, 0.1, 0.05, 0.02):
    print(f" {eps:4.2f}  {naive_infidelity(rabi_scale=1 + eps):.3e}  "
          f"{pb1_infidelity(rabi_scale=1 + eps):.3e}")

# %%
# A neighbouring ion illuminated at 20% of the Rabi rate should be left
# alone.  The error is a rotation about an equatorial axis, so the average
# infidelity does not care which phase the target pulse used.
phis = np.linspace(0, 2 * np.pi, 7)
neigh = [pb1_infidelity(phi=p, rabi_scale=0.2, target=np.eye(2)) for p in phis]
print("\nneighbour infidelity vs target phase")
for p, v in zip(phis, neigh):
    print(f"  phi = {p:5.2f}   {v:.2e}")
print(f"worst case {max(neigh):.2e}")

# %%
# Light shifts act as a detuning during the whole 102 us sequence.
for hz in (100, 650, 2000):
    print(f"detuning {hz:5d} Hz -> infidelity {pb1_infidelity(detuning_hz=hz):.2e}")
