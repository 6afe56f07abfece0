"""Shared test helpers: random state generators and independent oracles.

The oracles here deliberately avoid the production code paths: subset
enumeration for the smoothed min-relative entropy, feasibility bisection for
the smoothed max-relative entropy, and an LP solver (scipy linprog) for the
hypothesis-testing relative entropy.
"""

import itertools
import math

import numpy as np
from scipy.optimize import linprog

from oneshot_thermo.operators import DensityOperator, HermitianOperator


def random_probs(rng, d, allow_zero=False):
    w = rng.gamma(1.0, 1.0, size=d)
    w = w / w.sum()
    if allow_zero and rng.rand() < 0.4:
        w[rng.randint(d)] = 0.0
        w = w / w.sum()
    return w


def random_hermitian(rng, d, scale=1.0):
    a = rng.randn(d, d) + 1j * rng.randn(d, d)
    return HermitianOperator(scale * 0.5 * (a + a.conj().T))


def random_density(rng, d):
    a = rng.randn(d, d) + 1j * rng.randn(d, d)
    m = a @ a.conj().T
    return DensityOperator(m / np.real(np.trace(m)))


def random_semiclassical(rng, hamiltonian):
    """Random state diagonal in the Hamiltonian eigenbasis."""
    vals, vecs = np.linalg.eigh(hamiltonian.matrix())
    p = random_probs(rng, len(vals))
    mat = (vecs * p) @ vecs.conj().T
    return DensityOperator(0.5 * (mat + mat.conj().T))


def oracle_dmin_subset(p, q, eps):
    """Exhaustive search over sub-supports (removal mass <= eps)."""
    supp = [i for i in range(len(p)) if p[i] > 1e-12 * max(p)]
    best = math.inf
    for r in range(len(supp) + 1):
        for drop in itertools.combinations(supp, r):
            if sum(p[i] for i in drop) <= eps + 1e-12:
                kept = sum(q[i] for i in supp if i not in drop)
                best = min(best, kept)
    if best <= 0 or math.isinf(best):
        return math.inf
    return -math.log(best)


def oracle_dmax_bisect(p, q, eps, tol=1e-9):
    """Bisection on the excess-mass feasibility predicate."""
    p = np.asarray(p, float)
    q = np.asarray(q, float)

    def feasible(lam):
        return float(np.sum(np.maximum(p - math.exp(lam) * q, 0.0))) <= eps

    lo, hi = -80.0, 80.0
    if feasible(lo):
        return lo
    if not feasible(hi):
        return math.inf
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if feasible(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def oracle_dhyp_lp(p, q, eps):
    """LP: minimize q.x subject to p.x = 1 - eps, 0 <= x <= 1."""
    n = len(p)
    res = linprog(
        c=np.asarray(q, float),
        A_eq=np.asarray(p, float)[None, :],
        b_eq=[1.0 - eps],
        bounds=[(0.0, 1.0)] * n,
        method="highs",
    )
    assert res.success, res.message
    beta = float(res.fun)
    if beta <= 0:
        return math.inf
    return -math.log(beta)
