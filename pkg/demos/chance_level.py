"""How often does a coin-flipper pass the human protocol?

Subjects pass a problem after 7 correct answers in a row within 35 trials.
A machine with single-trial accuracy alpha passes with probability
beta*(alpha).  This script prints that curve next to the naive
accuracy-to-success mapping 2*alpha - 1, which badly underrates machines.
"""

import numpy as np

from svrtsynth.stats import alpha_star, beta_star, simulate_beta_star

print("beta*(0.5) =", round(beta_star(0.5), 6), "(a chance agent still passes ~11% of the time)")
p, se = simulate_beta_star(0.5, trials=200_000)
print(f"Monte Carlo check: {p:.4f} +/- {se:.4f}")
print()

print(" alpha   beta*(alpha)   2*alpha-1")
for a in np.linspace(0.5, 1.0, 11):
    print(f" {a:5.2f}   {beta_star(a):11.4f}   {max(2 * a - 1, 0):9.4f}")
print()

# a human success fraction read back as an accuracy
for b in (0.4, 0.65, 0.95):
    print(f"human beta {b:.2f} ~ accuracy {alpha_star(b):.3f}")
