#!/usr/bin/env python3
"""Emergence of a thermodynamic potential on the Ising chain.

For an i.i.d. product state against the truncated Gibbs state of a
nearest-neighbor Ising chain, the per-site smoothed min- and max-relative
entropies close in on the per-site KL divergence as the chain grows: the
reversibility gap shrinks and a single number (the KL rate) starts pricing
both formation and distillation.  The likelihood-ratio dynamic program makes
n = 64 and beyond exact-to-certified at millisecond cost; small quantum
chains (the |+> product state) are handled by exact diagonalization with
certified brackets.
"""

import math

import numpy as np

from oneshot_thermo import (
    DensityOperator,
    IIDMixed,
    IIDPure,
    gap_scan,
    ising_chain,
    relative_entropy_rate,
)

beta, eps = 1.0, 0.05
spec = ising_chain(1.0, 0.5)
fam = IIDMixed(DensityOperator.diagonal([0.8, 0.2]))

rc = relative_entropy_rate(fam, spec, beta)
print(f"Ising J = 1, h = 0.5, beta = 1, state = iid diag(0.8, 0.2)")
print(f"KL rate limit (transfer matrix): {rc.limit:.6f} nats/site")
print()

print(" n   d_min/n    D/n      d_max/n   gap/n    |D/n - limit|")
rows = gap_scan(fam, spec, beta, eps, [8, 16, 32, 64, 128])
for r in rows:
    print(f"{r.n:3d}  {r.d_min_rate:.5f}  {r.umegaki_rate:.5f}  "
          f"{r.d_max_rate:.5f}  {r.gap_rate:.5f}  "
          f"{abs(r.umegaki_rate - rc.limit):.5f}")
print()
print("the gap falls off like 1/sqrt(n) (central-limit fluctuations of the")
print("likelihood ratio); the KL rate converges like 1/n (boundary terms).")
print()

print("=== closed-form anchor: decoupled chain ===")
spec0 = ising_chain(0.0, 1.0)
rc0 = relative_entropy_rate(IIDPure(np.array([1.0, 0.0])), spec0, beta)
print(f"J = 0, h = 1, iid |up>: limit = {rc0.limit:.9f} "
      f"(= 1 + ln(2 cosh 1) = {1 + math.log(2 * math.cosh(1.0)):.9f})")
print()

print("=== coherent product state |+>^n on small chains (exact diag) ===")
plus = IIDPure(np.array([1.0, 1.0]) / math.sqrt(2))
for r in gap_scan(plus, spec, beta, eps, [2, 4, 6, 8]):
    print(f"  n = {r.n}: D/n = {r.umegaki_rate:.4f}, D_H/n = {r.d_hyp_rate:.4f}, "
          f"d_min/d_max rates bracketed within +/-{r.err_bound:.3f}")
print("the |+> chain evolves nontrivially under H, yet its KL rate exists and")
print("prices reversible conversion; only the smoothed extremes need brackets.")
