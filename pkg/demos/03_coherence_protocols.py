#!/usr/bin/env python3
"""Handling coherence: discretization, dephase-then-distill, and the
internal reference frame.

A coherent qubit cannot be processed by energy-conserving operations alone.
This script (i) discretizes a Hamiltonian onto a spacing grid while logging
the coherence budget, (ii) runs the dephase-then-distill protocol and
inspects the wasted work, and (iii) encodes a coherent state as a fully
incoherent joint state with a ladder reference, then externalizes the
reference and watches the recovery error shrink as the ladder grows.
"""

import numpy as np

from oneshot_thermo import (
    DensityOperator,
    HermitianOperator,
    LadderReference,
    dephase_distill_protocol,
    discretize_hamiltonian,
    gibbs,
    offdiagonal_profile,
    reference_frame_describe,
    reference_frame_externalize,
    reference_frame_formation_protocol,
    trace_distance,
)

beta = 1.0

print("=== Hamiltonian discretization ===")
h = HermitianOperator.diagonal([0.0, 0.37, 1.18])
for delta in (0.5, 0.1, 0.02):
    h2, ledger = discretize_hamiltonian(h, delta)
    print(f"  delta = {delta:4.2f}: levels {np.round(h2.diag, 3)}  "
          f"coherence budget {ledger.energy_range}")
print()

print("=== off-diagonal profile (diagnostic) ===")
hq = HermitianOperator.diagonal([0.0, 1.0])
plus = DensityOperator.pure([1.0, 1.0])
prof = offdiagonal_profile(plus, hq, beta=beta)
for gap, amp in prof.csv_rows():
    print(f"  gap {gap:.1f}: max |element| = {amp:.3f}")
print()

print("=== dephase-then-distill on a mostly-coherent qubit ===")
ens = gibbs(HermitianOperator.diagonal([0.0, 0.2]), beta)
rho = DensityOperator(0.95 * plus.matrix() + 0.05 * np.eye(2) / 2)
for delta in (0.2, 0.05):
    work, ledger, diag = dephase_distill_protocol(rho, ens, eps=0.05, delta=delta)
    print(f"  delta = {delta:4.2f}: work {work:+.4f}, "
          f"waste {diag['waste_nats']:+.4f} nats "
          f"(>= -beta*delta = {-beta * delta:.2f}), budget {ledger.energy_range}")
print("dephasing erases the off-diagonal value of the state; what's left is")
print("the semiclassical part, recovered up to the discretization loss.")
print()

print("=== internal reference frame: describe, then externalize ===")
for levels in (2, 4, 8, 16, 32):
    ref = LadderReference(levels, 1.0)
    rt = reference_frame_describe(plus, hq, ref)
    rec = reference_frame_externalize(rt, hq, ref)
    print(f"  L = {levels:2d}: recovered |+> up to trace distance "
          f"{trace_distance(rec, plus):.4f}")
print("the joint state is exactly incoherent, yet the ladder lets the")
print("coherence come back; error falls like 1/(2L).")
print()

print("=== full formation pipeline with the coherence ledger ===")
ens_q = gibbs(hq, beta)
work, ledger, diag = reference_frame_formation_protocol(
    plus, ens_q, eps=0.0, delta=1.0, levels=16)
print(f"  joint formation work {work:+.4f}")
print(f"  recovery distance {diag['recovery_trace_distance']:.4f}")
for label, rng in ledger.per_step:
    print(f"  ledger: {label:16s} {rng}")
print(f"  total coherence budget {ledger.energy_range} (= delta*L)")
