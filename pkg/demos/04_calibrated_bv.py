"""
Bernstein-Vazirani under the calibrated noise model
===================================================

The "calibrated" preset was tuned once against single-qubit benchmarking
numbers.  Here it is applied untouched to the algorithm.
"""
from ionbv.analysis import error_budget, solve_pb1_fidelity
from ionbv.experiments import bell_experiment, bv_suite, largest_error_state, preset

noise = preset("calibrated")

# %%
# Entangling gate quality on its own.
for pair, n in (((0, 1), 2), ((0, 1), 3), ((1, 2), 3)):
    r = bell_experiment(pair, n, noise)
    extra = f", spectator P1 {r['p1']:.3f}" if "p1" in r else ""
    print(f"{n} ions, pair {pair}: Bell fidelity {r['bell_fidelity']:.3f}{extra}")

# %%
# One data bit, then two.
for n in (1, 2):
    runs, m = bv_suite(n, noise)
    print(f"\nn = {n}")
    for s, r in runs.items():
        print(f"  s={s}: success {r.success:.3f}, largest error |{largest_error_state(r)}>")
    print(f"  mean {m['mean_success']:.3f}, classical {m['classical_baseline']:.2f}, "
          f"MI {m['mutual_information']:.3f} bits")

# %%
# A multiplicative error budget predicts the s=1 success from the pulse
# count alone.
f = solve_pb1_fidelity(0.89, 15, 0.961)
print(f"\nper-pulse fidelity implied by 0.89: {f:.5f}")
pred, _ = error_budget({"pb1_count": 15, "ms_count": 1}, {"pb1": f, "ms": 0.961})
print(f"budget with that value: {pred:.4f}")
