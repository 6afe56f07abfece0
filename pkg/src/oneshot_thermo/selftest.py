"""Built-in oracle suites for the CLI --selftest mode.

Each suite replays a module's core operations on dim <= 6 inputs against
slow, structurally independent references (subset enumeration, bisection on
feasibility predicates, exhaustive test enumeration) at tolerance 1e-6 and
returns (name, ok, detail) triples.
"""

import itertools
import math

import numpy as np

from . import divergences as dv
from . import lattice as lat
from .operators import DensityOperator, HermitianOperator, dephase, eig, tensor
from .spectrum import divergences_from_spectrum
from .thermo import BatteryLadder, battery_transition_feasible, gibbs, work_distillable, work_formation

TOL = 1e-6


def brute_dmin_eps(p, q, eps):
    """Exhaustive sub-support search: remove whole atoms with total rho-mass
    <= eps, minimizing the kept sigma-mass (fractional truncations cannot
    shrink the surviving support, so subsets are exhaustive)."""
    idx = [i for i in range(len(p)) if p[i] > 1e-12 * max(p)]
    best = None
    for r in range(len(idx) + 1):
        for removed in itertools.combinations(idx, r):
            if sum(p[i] for i in removed) <= eps + 1e-12:
                kept = sum(q[i] for i in idx if i not in removed)
                if best is None or kept < best:
                    best = kept
    if best is None or best <= 0:
        return math.inf
    return -math.log(best)


def brute_dmax_eps(p, q, eps):
    """Bisection on the excess-mass feasibility predicate."""
    def feasible(lam):
        t = math.exp(lam)
        return float(np.sum(np.maximum(p - t * q, 0.0))) <= eps

    lo, hi = -60.0, 60.0
    if feasible(lo):
        return lo
    if not feasible(hi):
        return math.inf
    while hi - lo > 1e-9:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return hi


def brute_dhyp_eps(p, q, eps):
    """Exhaustive Neyman-Pearson over diagonal tests: every subset kept fully
    plus a fractional weight on every remaining atom."""
    n = len(p)
    target = 1.0 - eps
    best = None
    for keep in itertools.product([0, 1], repeat=n):
        kp = sum(p[i] for i in range(n) if keep[i])
        kq = sum(q[i] for i in range(n) if keep[i])
        if kp >= target - 1e-12:
            best = kq if best is None else min(best, kq)
        for j in range(n):
            if keep[j]:
                continue
            if p[j] > 0 and kp < target <= kp + p[j]:
                w = (target - kp) / p[j]
                cand = kq + w * q[j]
                best = cand if best is None else min(best, cand)
            elif p[j] == 0 and kp >= target - 1e-12:
                best = kq if best is None else min(best, kq)
    if best is None or best <= 0:
        return math.inf
    return -math.log(best)


def _random_probs(rng, d):
    w = rng.gamma(1.0, 1.0, size=d)
    return w / w.sum()


def selftest_divergences(seed=7, cases=40):
    rng = np.random.RandomState(seed)
    checks = []
    worst = {"d_min": 0.0, "d_max": 0.0, "d_hyp": 0.0}
    for _ in range(cases):
        d = rng.randint(2, 7)
        p = _random_probs(rng, d)
        q = _random_probs(rng, d)
        if rng.rand() < 0.3:
            p[rng.randint(d)] = 0.0
            p = p / p.sum()
        for eps in (0.0, 0.05, 0.1, 0.25):
            a = dv.dmin_eps_diag(p, q, eps).value
            b = brute_dmin_eps(p, q, eps)
            worst["d_min"] = max(worst["d_min"], abs(a - b))
            a = dv.dmax_eps_diag(p, q, eps)
            b = brute_dmax_eps(p, q, eps)
            worst["d_max"] = max(worst["d_max"], abs(a - b))
            a = dv.dhyp_eps_diag(p, q, eps)
            b = brute_dhyp_eps(p, q, eps)
            worst["d_hyp"] = max(worst["d_hyp"], abs(a - b))
    for k, v in worst.items():
        checks.append((f"{k} vs brute force", v <= TOL, f"max |diff| = {v:.2e}"))
    return checks


def selftest_operators(seed=11, cases=25):
    rng = np.random.RandomState(seed)
    worst_rec = 0.0
    worst_deph = 0.0
    for _ in range(cases):
        d = rng.randint(2, 7)
        a = rng.randn(d, d) + 1j * rng.randn(d, d)
        h = HermitianOperator(0.5 * (a + a.conj().T))
        sd = eig(h)
        rec = sd.reconstruct()
        worst_rec = max(worst_rec, float(np.linalg.norm(rec - h.matrix(), "fro") /
                                          max(np.linalg.norm(h.matrix(), "fro"), 1e-300)))
        b = rng.randn(d, d) + 1j * rng.randn(d, d)
        rho = DensityOperator((b @ b.conj().T) / np.trace(b @ b.conj().T).real)
        once = dephase(rho, h)
        twice = dephase(once, h)
        worst_deph = max(worst_deph, float(np.linalg.norm(once.matrix() - twice.matrix(), "fro")))
    return [
        ("eig reconstruction", worst_rec <= 1e-9, f"max rel err = {worst_rec:.2e}"),
        ("dephase idempotent", worst_deph <= 1e-10, f"max err = {worst_deph:.2e}"),
    ]


def selftest_thermo(seed=13, cases=12):
    rng = np.random.RandomState(seed)
    step = 1e-3
    ladder = BatteryLadder(delta=step)
    worst = 0.0
    ok_rev = True
    for _ in range(cases):
        d = rng.randint(2, 5)
        h = HermitianOperator.diagonal(np.sort(rng.uniform(0, 2, size=d)))
        ens = gibbs(h, 1.0)
        rho = DensityOperator.diagonal(_random_probs(rng, d))
        quote = work_formation(rho, ens, 0.0).work
        # battery bisection over the ladder
        lo, hi = 0.0, math.ceil((abs(quote) + 1.0) / step) * step
        while hi - lo > step * 1.01:
            mid = step * round(((lo + hi) / 2) / step)
            if battery_transition_feasible(ens.gamma, rho, mid, 0.0, ens, ladder):
                hi = mid
            else:
                lo = mid
        worst = max(worst, abs(hi - quote))
        ok_rev &= battery_transition_feasible(rho, rho, 1.0, 1.0, ens, ladder)
    return [
        ("battery bisection vs formation quote", worst <= step * 1.01 + 1e-9,
         f"max |diff| = {worst:.2e}"),
        ("identity transition feasible", ok_rev, ""),
    ]


def selftest_coherence(seed=17):
    from .coherence import (
        LadderReference,
        dephase_distill_protocol,
        reference_frame_describe,
        reference_frame_externalize,
    )

    rng = np.random.RandomState(seed)
    h = HermitianOperator.diagonal([0.0, 1.0, 2.0])
    ens = gibbs(h, 1.0)
    checks = []
    worst = 0.0
    for _ in range(8):
        rho = DensityOperator.diagonal(_random_probs(rng, 3))
        ref = LadderReference(4, 1.0)
        rt = reference_frame_describe(rho, h, ref)
        rec = reference_frame_externalize(rt, h, ref)
        from .operators import trace_distance

        worst = max(worst, trace_distance(rec, rho))
    checks.append(("semiclassical describe/externalize round trip", worst <= 1e-9,
                   f"max dist = {worst:.2e}"))
    work, ledger, diag = dephase_distill_protocol(ens.gamma, ens, 0.0, 0.1)
    checks.append(("thermal state distills zero work", abs(work) <= 1e-9, f"work = {work:.2e}"))
    return checks


def selftest_lattice(seed=19):
    rng = np.random.RandomState(seed)
    checks = []
    spec = lat.ising_chain(1.0, 0.5)
    worst_z = 0.0
    for n in range(2, 9):
        exact = float(np.log(np.sum(np.exp(-1.0 * lat.truncate(spec, n).diag))))
        worst_z = max(worst_z, abs(lat.log_partition_chain(spec, n, 1.0) - exact))
    checks.append(("transfer matrix vs exact ln Z", worst_z <= 1e-9, f"max |diff| = {worst_z:.2e}"))
    fam = lat.IIDMixed(DensityOperator.diagonal([0.8, 0.2]))
    worst_d = 0.0
    for n in (4, 6):
        sp = lat.chain_ratio_spectrum(fam, spec, 1.0, n, 1e-3)
        rep = divergences_from_spectrum(sp, 0.05)
        rc = lat.relative_entropy_rate(fam, spec, 1.0)
        worst_d = max(worst_d, abs(rep.umegaki.value - rc.finite_n(n)))
    checks.append(("DP spectrum KL vs closed form", worst_d <= 1e-6, f"max |diff| = {worst_d:.2e}"))
    return checks


SUITES = {
    "divergence": (selftest_divergences, selftest_operators),
    "lorenz": (selftest_thermo, selftest_operators),
    "work": (selftest_thermo, selftest_divergences),
    "protocol": (selftest_coherence,),
    "gap-scan": (selftest_lattice, selftest_divergences),
    "mixture-scan": (selftest_lattice,),
    "variance": (selftest_lattice,),
}


def run_selftest(command):
    """Run the suites for a subcommand; returns (all_ok, lines)."""
    lines = []
    all_ok = True
    for suite in SUITES[command]:
        for name, ok, detail in suite():
            all_ok &= bool(ok)
            status = "ok" if ok else "FAIL"
            lines.append(f"[{status}] {name}" + (f" ({detail})" if detail else ""))
    return all_ok, lines
