"""
Why voting over noisy views helps
=================================

Suppose every view of an input is classified correctly with probability p,
independently of the others. A majority over m views is then right more
often than any single view, as long as p > 0.5.
"""

import numpy as np

from ttagate.harness import majority_accuracy, simulate_noisy_tta

print(" p    m   simulated  analytic")
for p in (0.55, 0.6, 0.7, 0.8):
    for m in (1, 3, 5, 9):
        sim = simulate_noisy_tta(p, m, trials=10_000, seed=0)
        print(f"{p:.2f} {m:3d}   {sim:.4f}     {majority_accuracy(p, m):.4f}")

# below chance the same mechanism hurts: the majority is wrong more often
print("p=0.4, m=5:", simulate_noisy_tta(0.4, 5, 10_000), "vs single view 0.4")

# the gain grows with m but saturates
gains = [majority_accuracy(0.7, m) - 0.7 for m in range(1, 22, 2)]
print("gain over one view, m = 1, 3, ..., 21:", np.round(gains, 3))
