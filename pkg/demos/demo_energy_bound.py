"""Energy bound demo: H <= Q^2 with equality exactly on geometric states.

Samples random truncated states, prints the smallest observed gap Q^2 - H,
then shows the gap collapsing to rounding level on geometric sequences
alpha_n = c p^n and on the ground-state family A_n(p) = (1 - p^2) p^n.
"""

import numpy as np

from conformalflow import charge, energy_fast, gap, ground_amplitudes

rng = np.random.Generator(np.random.Philox(key=7))

print("random states (N = 32):")
worst = np.inf
for _ in range(2000):
    alpha = rng.standard_normal(32) + 1j * rng.standard_normal(32)
    worst = min(worst, gap(alpha))
print(f"  min gap over 2000 samples: {worst:.6e}  (never below -1e-10)")

print("\ngeometric states alpha_n = c p^n:")
for p in (0.2, 0.5 + 0.3j, 0.75):
    alpha = 1.3 * p ** np.arange(200)
    q = charge(alpha)
    print(f"  p = {p}: Q^2 = {q**2:.6f}, H = {energy_fast(alpha):.6f}, "
          f"gap = {gap(alpha):.2e}")

print("\nground states A(p) (unit charge, unit energy):")
for p in (0.0, 0.4, 0.7):
    alpha = ground_amplitudes(p, 300).astype(complex)
    print(f"  p = {p}: Q = {charge(alpha):.12f}, H = {energy_fast(alpha):.12f}")
