"""Umegaki, min-, max-, and hypothesis-testing relative entropies with
trace-distance smoothing.

All quantities are in nats.  The smoothing ball is the set of *normalized*
states within trace distance eps of the input (subnormalized smoothing is out
of scope; values under other conventions may differ by bounded
smoothing-equivalence terms).

Commuting pairs get exact fast paths on the joint eigenvalue pairs
(p_i, q_i):

* smoothed max-relative entropy: the optimal smoothing truncates rho at
  e^lam * sigma and redistributes the removed mass onto the remaining slack.
  Proof sketch: pinching in the joint eigenbasis is CPTP, fixes sigma, and can
  only shrink both the trace distance and the max-relative entropy, so a
  diagonal optimizer exists; for diagonal rho~ the constraint rho~ <= e^lam q
  caps each entry, removing excess mass sum_i max(p_i - e^lam q_i, 0), which
  must fit in the budget eps.  The least feasible lam solves the piecewise
  linear excess-mass equation exactly (no bisection needed).  The rule is
  applied unclamped, so the value can dip below zero once rho is eps-close to
  sigma.
* smoothed min-relative entropy: the optimizer removes whole eigenvalue atoms
  (support is all-or-nothing), i.e. maximize the removed sigma-mass subject to
  removed rho-mass <= eps -- a 0/1 knapsack solved exactly by branch-and-bound
  with a fractional bound.  Fractional removal of a boundary atom is allowed
  but does not shrink the surviving support, so it never helps.
* hypothesis-testing relative entropy: exact Neyman-Pearson.  Commuting pairs
  keep atoms by descending likelihood ratio with a fractional boundary weight;
  non-commuting pairs bisect the threshold t and put a fractional weight on
  the zero eigenspace of rho - t*sigma so that tr(Q rho) = 1 - eps exactly.

Non-commuting smoothed quantities are returned as certified brackets
(exact=False): d_min in [d_min0, d_hyp_eps] (standard interleaving), d_max in
[least lam with tr[(rho - e^lam sigma)_+] <= eps, d_max0].

Caveat (documented, see ledger): at eps exceeding the smallest rho-eigenvalue
mass, d_min_eps(rho, sigma) can exceed d_max_eps(rho, sigma) for rho close to
sigma, so "formation >= distillation" is guaranteed only below that regime.
"""

import math
from typing import NamedTuple

import numpy as np

from .errors import InvalidSmoothing, ShapeError
from .operators import (
    DensityOperator,
    HermitianOperator,
    commutes,
    eig,
)

INF = math.inf

SIGMA_SUPPORT_RTOL = 1e-14
RHO_SUPPORT_RTOL = 1e-12
BISECT_TOL = 1e-10
KNAPSACK_NODE_CAP = 500_000


class Estimate(NamedTuple):
    """A divergence value with its certification.

    ``exact`` entries have lo == value == hi; bracketed entries certify
    lo <= true value <= hi and report the midpoint.
    """

    value: float
    lo: float
    hi: float
    exact: bool

    @classmethod
    def point(cls, v):
        return cls(v, v, v, True)

    @classmethod
    def bracket(cls, lo, hi):
        lo, hi = min(lo, hi), max(lo, hi)
        if lo == hi:
            return cls(lo, lo, hi, True)
        mid = 0.5 * (lo + hi) if math.isfinite(lo) and math.isfinite(hi) else lo
        return cls(mid, lo, hi, False)

    @property
    def width(self):
        if self.lo == self.hi:
            return 0.0
        return self.hi - self.lo


class DivergenceReport(NamedTuple):
    umegaki: Estimate
    d_min: Estimate
    d_max: Estimate
    d_hyp: Estimate
    epsilon: float

    @property
    def bracket_width(self):
        return max(
            self.umegaki.width, self.d_min.width, self.d_max.width, self.d_hyp.width
        )

    def to_json_dict(self):
        def entry(e):
            d = {"value": e.value, "exact": e.exact}
            if not e.exact:
                d["bracket"] = [e.lo, e.hi]
            return d

        return {
            "epsilon": self.epsilon,
            "umegaki": entry(self.umegaki),
            "d_min": entry(self.d_min),
            "d_max": entry(self.d_max),
            "d_hyp": entry(self.d_hyp),
            "bracket_width": self.bracket_width,
        }


def _check_eps(eps):
    if not (0.0 <= eps < 1.0):
        raise InvalidSmoothing(f"epsilon must lie in [0, 1), got {eps!r}")


def _check_dims(rho, sigma):
    if rho.dim != sigma.dim:
        raise ShapeError(f"dims {rho.dim} and {sigma.dim} differ")


# ---------------------------------------------------------------------------
# joint diagonalization of a commuting pair
# ---------------------------------------------------------------------------

def joint_eigenprobs(rho, sigma):
    """Eigenvalue pairs (p_i, q_i) of a commuting pair, or None otherwise.

    Diagonalizes sigma with degeneracy merging and the rho-blocks within each
    sigma-eigenspace, so the pairs are exact for any commuting pair.
    """
    if rho.is_diagonal and sigma.is_diagonal:
        return np.array(rho.diag, dtype=float), np.array(sigma.diag, dtype=float)
    rd, sd = rho.diag_or_none(), sigma.diag_or_none()
    if rd is not None and sd is not None:
        return np.asarray(rd, float), np.asarray(sd, float)
    if not commutes(rho, sigma):
        return None
    svals, svecs = np.linalg.eigh(sigma.matrix())
    order = np.argsort(svals)[::-1]
    svals, svecs = svals[order], svecs[:, order]
    spread = float(svals[0] - svals[-1]) if svals.size > 1 else 0.0
    tol = 1e-10 * max(spread, 1e-300)
    rmat = rho.matrix()
    p_out, q_out = [], []
    i = 0
    while i < svals.size:
        j = i + 1
        while j < svals.size and svals[j - 1] - svals[j] <= tol:
            j += 1
        block = svecs[:, i:j]
        rblk = block.conj().T @ rmat @ block
        p_out.extend(np.linalg.eigvalsh(rblk))
        q_out.extend([float(np.mean(svals[i:j]))] * (j - i))
        i = j
    return np.array(p_out, dtype=float), np.array(q_out, dtype=float)


# ---------------------------------------------------------------------------
# diagonal cores (also used by the ratio-spectrum path)
# ---------------------------------------------------------------------------

def umegaki_diag(p, q):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    psupp = p > RHO_SUPPORT_RTOL * max(p.max(), 1e-300)
    qzero = q <= SIGMA_SUPPORT_RTOL * max(q.max(), 1e-300)
    if np.any(psupp & qzero):
        return INF
    m = psupp & ~qzero
    pp, qq = p[m], q[m]
    return float(np.sum(pp * (np.log(pp) - np.log(qq))))


def dmin0_diag(p, q):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    supp = p > RHO_SUPPORT_RTOL * max(p.max(), 1e-300)
    s = float(np.sum(q[supp]))
    if s <= 0.0:
        return INF
    return -math.log(s)


def dmax0_diag(p, q):
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    psupp = p > RHO_SUPPORT_RTOL * max(p.max(), 1e-300)
    qzero = q <= SIGMA_SUPPORT_RTOL * max(q.max(), 1e-300)
    if np.any(psupp & qzero):
        return INF
    m = psupp & ~qzero
    if not np.any(m):
        return -INF
    return float(np.log(np.max(p[m] / q[m])))


def dmax_eps_diag(p, q, eps, exact_masses=False):
    """Least lam with sum_i max(p_i - e^lam q_i, 0) <= eps, solved exactly.

    The excess mass is piecewise linear and strictly decreasing in t = e^lam
    wherever positive, with kinks at the likelihood ratios; scan the sorted
    kinks for the segment containing the solution.

    ``exact_masses`` disables the relative sigma support cut (meant for
    eigensolver noise): DP spectra carry exact masses spanning hundreds of
    orders of magnitude, where only true zeros are outside the support.
    """
    _check_eps(eps)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    psupp = p > RHO_SUPPORT_RTOL * max(p.max(), 1e-300)
    if exact_masses:
        psupp = p > 0.0
        qzero = q <= 0.0
    else:
        qzero = q <= SIGMA_SUPPORT_RTOL * max(q.max(), 1e-300)
    stuck = float(np.sum(p[psupp & qzero]))  # mass that can never be capped
    if stuck > eps:
        return INF
    m = psupp & ~qzero
    pp, qq = p[m], q[m]
    if pp.size == 0:
        return -INF
    r = pp / qq
    order = np.argsort(r)[::-1]
    pp, qq, r = pp[order], qq[order], r[order]
    cp = np.cumsum(pp)
    cq = np.cumsum(qq)
    # on t in [r_{k+1}, r_k]: excess(t) = stuck + cp[k-1] - t*cq[k-1] (k atoms active)
    budget = eps - stuck
    for k in range(1, r.size + 1):
        t = (cp[k - 1] - budget) / cq[k - 1]
        hi = r[k - 1]
        lo = r[k] if k < r.size else 0.0
        if t > hi + 1e-15 * max(hi, 1.0):
            continue
        if t >= lo - 1e-15 * max(lo, 1.0):
            t = min(max(t, lo), hi)
            if t <= 0.0:
                return -INF
            return float(np.log(t))
    # excess never exceeds budget even at t -> 0+ (impossible for eps < sum p)
    return -INF


def _knapsack_removed_sigma(pp, qq, eps):
    """Max sigma-mass removable by deleting whole atoms with rho-cost <= eps.

    Branch-and-bound over atoms sorted by density q/p.  Returns
    (removed_mask, upper_bound, certified) in the original atom order, where
    certified means the mask attains the true subset optimum; the caller sums
    the *kept* atoms directly, which avoids cancellation when nearly all
    sigma-mass is removable.
    """
    density = np.where(pp > 0, qq / pp, INF)
    order = np.argsort(density)[::-1]
    ps, qs = pp[order], qq[order]
    n = ps.size
    suffix_p = np.concatenate([np.cumsum(ps[::-1])[::-1], [0.0]])
    slack = eps * 1e-12 + 1e-15

    def frac_bound(i, cap):
        """Fractional-relaxation value of filling cap from atoms i.."""
        total = 0.0
        for j in range(i, n):
            if ps[j] <= cap + slack:
                cap -= ps[j]
                total += qs[j]
            else:
                total += qs[j] * (cap / ps[j]) if ps[j] > 0 else 0.0
                return total
        return total

    best = -1.0
    best_link = None
    nodes = 0
    certified = True
    # iterative DFS: (index, remaining budget, value, taken-linked-list)
    stack = [(0, eps, 0.0, None)]
    root_bound = frac_bound(0, eps)
    while stack:
        i, cap, val, link = stack.pop()
        nodes += 1
        if nodes > KNAPSACK_NODE_CAP:
            certified = False
            break
        if val > best:
            best, best_link = val, link
        if i >= n or cap <= -slack:
            continue
        if suffix_p[i] <= cap + slack:
            # everything left fits
            rest = float(np.sum(qs[i:]))
            if val + rest > best:
                tail = link
                for j in range(i, n):
                    tail = (j, tail)
                best, best_link = val + rest, tail
            continue
        if val + frac_bound(i, cap) <= best + 1e-15:
            continue
        # branch: skip atom i / take atom i (take pushed last -> explored first)
        stack.append((i + 1, cap, val, link))
        if ps[i] <= cap + slack:
            stack.append((i + 1, cap - ps[i], val + qs[i], (i, link)))
    mask = np.zeros(n, dtype=bool)
    while best_link is not None:
        j, best_link = best_link
        mask[j] = True
    out = np.zeros(n, dtype=bool)
    out[order] = mask
    return out, root_bound, certified


def dmin_eps_diag(p, q, eps, divisible=False, exact_masses=False):
    """Smoothed min-relative entropy on eigenvalue pairs.

    With ``divisible=False`` atoms are indivisible eigenvalues and the subset
    optimum is computed exactly (branch-and-bound).  With ``divisible=True``
    (binned spectra whose atoms aggregate many micro-configurations) the
    fractional tail rule applies: removed sigma-mass is proportional within
    the boundary atom.  Returns an Estimate.
    """
    _check_eps(eps)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    if exact_masses:
        supp = p > 0.0
    else:
        supp = p > RHO_SUPPORT_RTOL * max(p.max(), 1e-300)
    pp, qq = p[supp], q[supp]
    total = float(np.sum(qq))
    if total <= 0.0:
        return Estimate.point(INF)
    if eps == 0.0 or pp.size == 0:
        return Estimate.point(-math.log(total))
    keep_anyway = qq <= 0.0
    pk, qk = pp[~keep_anyway], qq[~keep_anyway]
    zero_q_total = float(np.sum(qq[keep_anyway]))  # exactly 0 unless q has zeros
    if pk.size == 0:
        return Estimate.point(-math.log(total))
    if divisible:
        # fractional tail removal; sum the kept side directly (the removed
        # side can carry nearly all the mass, so total-removed would cancel)
        order = np.argsort(pk / qk)  # ascending ratio: remove tail first
        ps, qs = pk[order], qk[order]
        cap = eps
        cut = ps.size
        frac_kept = 0.0
        for j in range(ps.size):
            if ps[j] <= cap + 1e-15:
                cap -= ps[j]
            else:
                cut = j
                frac_kept = qs[j] * (1.0 - cap / ps[j])
                break
        else:
            cut = ps.size
        kept = float(np.sum(qs[cut + 1:])) + frac_kept + zero_q_total \
            if cut < ps.size else zero_q_total
        kept = max(kept, 1e-300)
        return Estimate.point(-math.log(kept))
    removed_mask, upper, certified = _knapsack_removed_sigma(pk, qk, eps)
    kept = float(np.sum(qk[~removed_mask])) + zero_q_total
    kept = max(kept, 1e-300)
    val = -math.log(kept)
    if certified:
        return Estimate.point(val)
    hi = -math.log(max(total - upper, 1e-300))
    return Estimate.bracket(val, hi)


def dhyp_eps_diag(p, q, eps):
    """Exact Neyman-Pearson on eigenvalue pairs: keep atoms by descending
    likelihood ratio until tr(Q rho) = 1 - eps, fractional boundary weight."""
    _check_eps(eps)
    p = np.asarray(p, float)
    q = np.asarray(q, float)
    m = p > 0.0
    pp, qq = p[m], q[m]
    with np.errstate(divide="ignore"):
        ratio = np.where(qq > 0.0, pp / np.where(qq > 0.0, qq, 1.0), INF)
    order = np.argsort(ratio)[::-1]
    pp, qq = pp[order], qq[order]
    target = 1.0 - eps
    acc_p = 0.0
    beta = 0.0
    for j in range(pp.size):
        if acc_p + pp[j] < target - 1e-15:
            acc_p += pp[j]
            beta += qq[j]
        else:
            w = (target - acc_p) / pp[j]
            beta += w * qq[j]
            acc_p = target
            break
    if beta <= 0.0:
        return INF
    return -math.log(beta)


# ---------------------------------------------------------------------------
# dense (non-commuting) paths
# ---------------------------------------------------------------------------

def _sigma_support_basis(sigma):
    vals, vecs = np.linalg.eigh(sigma.matrix())
    cut = SIGMA_SUPPORT_RTOL * max(vals.max(), 1e-300)
    keep = vals > cut
    return vals[keep], vecs[:, keep]


def _umegaki_dense(rho, sigma):
    rvals, rvecs = np.linalg.eigh(rho.matrix())
    svals, svecs = np.linalg.eigh(sigma.matrix())
    rcut = RHO_SUPPORT_RTOL * max(rvals.max(), 1e-300)
    scut = SIGMA_SUPPORT_RTOL * max(svals.max(), 1e-300)
    szero = svecs[:, svals <= scut]
    if szero.shape[1]:
        outside = float(np.real(np.trace(szero.conj().T @ rho.matrix() @ szero)))
        if outside > RHO_SUPPORT_RTOL:
            return INF
    rpos = rvals > rcut
    s_rho = float(np.sum(rvals[rpos] * np.log(rvals[rpos])))
    skeep = svecs[:, svals > scut]
    lq = np.log(svals[svals > scut])
    ov = np.real(np.einsum("ij,ji->i", skeep.conj().T @ rho.matrix(), skeep))
    return s_rho - float(np.sum(ov * lq))


def _dmin0_dense(rho, sigma):
    vals, vecs = np.linalg.eigh(rho.matrix())
    keep = vals > RHO_SUPPORT_RTOL * max(vals.max(), 1e-300)
    basis = vecs[:, keep]
    s = float(np.real(np.trace(basis.conj().T @ sigma.matrix() @ basis)))
    if s <= 0.0:
        return INF
    return -math.log(s)


def _dmax0_dense(rho, sigma):
    svals, svecs = _sigma_support_basis(sigma)
    full = sigma.dim
    if svals.size < full:
        # rho mass outside supp(sigma)?
        comp = np.eye(full, dtype=complex) - svecs @ svecs.conj().T
        outside = float(np.real(np.trace(comp @ rho.matrix())))
        if outside > RHO_SUPPORT_RTOL:
            return INF
    a = svecs.conj().T @ rho.matrix() @ svecs
    d = 1.0 / np.sqrt(svals)
    m = (d[:, None] * a) * d[None, :]
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    top = float(w.max())
    if top <= 0.0:
        return -INF
    return math.log(top)


def _excess_mass_dense(rho, sigma, lam):
    w = np.linalg.eigvalsh(rho.matrix() - math.exp(lam) * sigma.matrix())
    return float(np.sum(w[w > 0.0]))


def _dmax_eps_lower_dense(rho, sigma, eps, hi):
    """Least lam with tr[(rho - e^lam sigma)_+] <= eps (spectral NP test)."""
    if not math.isfinite(hi):
        hi = 50.0
    lo = min(-50.0, hi - 1.0)
    if _excess_mass_dense(rho, sigma, lo) <= eps:
        return lo
    while hi - lo > BISECT_TOL:
        mid = 0.5 * (lo + hi)
        if _excess_mass_dense(rho, sigma, mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def _dhyp_dense(rho, sigma, eps):
    """Exact quantum Neyman-Pearson via threshold bisection.

    Q(t) keeps the strictly positive eigenspace of rho - t*sigma plus a
    fractional weight on the (near-)zero eigenspace tuned so that
    tr(Q rho) = 1 - eps exactly.
    """
    target = 1.0 - eps
    rmat, smat = rho.matrix(), sigma.matrix()
    svals, svecs = np.linalg.eigh(smat)
    scut = SIGMA_SUPPORT_RTOL * max(svals.max(), 1e-300)
    comp = svecs[:, svals <= scut]
    free_mass = float(np.real(np.trace(comp.conj().T @ rmat @ comp))) if comp.shape[1] else 0.0
    if free_mass >= target - 1e-12:
        return INF  # a zero-sigma-cost test already reaches the target

    def masses(t):
        vals, vecs = np.linalg.eigh(rmat - t * smat)
        ztol = 1e-9 * max(1.0, abs(t)) * max(np.abs(vals).max(), 1.0)
        pos = vals > ztol
        zero = np.abs(vals) <= ztol
        vp = vecs[:, pos]
        vz = vecs[:, zero]
        rp = float(np.real(np.trace(vp.conj().T @ rmat @ vp)))
        sp = float(np.real(np.trace(vp.conj().T @ smat @ vp)))
        rz = float(np.real(np.trace(vz.conj().T @ rmat @ vz)))
        sz = float(np.real(np.trace(vz.conj().T @ smat @ vz)))
        return rp, sp, rz, sz

    hi = 1.0
    while True:
        rp, _, rz, _ = masses(hi)
        if rp + rz < target or hi > 1e15:
            break
        hi *= 4.0
    lo = 0.0
    while hi - lo > BISECT_TOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        rp, _, rz, _ = masses(mid)
        if rp + rz >= target:
            lo = mid
        else:
            hi = mid
    rp, sp, rz, sz = masses(lo)
    if rz > 0.0 and rp <= target:
        w = min(max((target - rp) / rz, 0.0), 1.0)
        beta = sp + w * sz
    elif rp > 0.0:
        # finite-width bisection left no zero eigenspace; scale the whole test
        beta = sp * min(target / rp, 1.0)
    else:
        beta = sp + sz
    if beta <= 0.0:
        return INF
    return -math.log(beta)


# ---------------------------------------------------------------------------
# public API
# ---------------------------------------------------------------------------

def relative_entropy(rho, sigma):
    """Umegaki relative entropy tr(rho(ln rho - ln sigma)) in nats.

    Returns the +inf sentinel when supp(rho) is not contained in supp(sigma)
    (sigma eigenvalues below 1e-14 of the largest count as zero).
    """
    _check_dims(rho, sigma)
    pq = joint_eigenprobs(rho, sigma)
    if pq is not None:
        return umegaki_diag(*pq)
    return _umegaki_dense(rho, sigma)


def min_relative_entropy(rho, sigma):
    """D_min(rho||sigma) = -ln tr(Pi_rho sigma) at eps = 0."""
    _check_dims(rho, sigma)
    pq = joint_eigenprobs(rho, sigma)
    if pq is not None:
        return dmin0_diag(*pq)
    return _dmin0_dense(rho, sigma)


def max_relative_entropy(rho, sigma):
    """D_max(rho||sigma): the least lam with rho <= e^lam sigma, at eps = 0."""
    _check_dims(rho, sigma)
    pq = joint_eigenprobs(rho, sigma)
    if pq is not None:
        return dmax0_diag(*pq)
    return _dmax0_dense(rho, sigma)


def smoothed_min_relative_entropy(rho, sigma, eps):
    """eps-smoothed min-relative entropy.

    Exact for commuting pairs; certified bracket [d_min0, d_hyp_eps] otherwise.
    """
    _check_dims(rho, sigma)
    _check_eps(eps)
    pq = joint_eigenprobs(rho, sigma)
    if pq is not None:
        return dmin_eps_diag(pq[0], pq[1], eps)
    lo = _dmin0_dense(rho, sigma)
    hi = _dhyp_dense(rho, sigma, eps)
    return Estimate.bracket(lo, hi)


def smoothed_max_relative_entropy(rho, sigma, eps):
    """eps-smoothed max-relative entropy.

    Exact for commuting pairs (excess-mass rule); certified bracket
    [spectral excess-mass test, d_max0] otherwise.
    """
    _check_dims(rho, sigma)
    _check_eps(eps)
    pq = joint_eigenprobs(rho, sigma)
    if pq is not None:
        return Estimate.point(dmax_eps_diag(pq[0], pq[1], eps))
    hi = _dmax0_dense(rho, sigma)
    if eps == 0.0:
        return Estimate.point(hi)
    lo = _dmax_eps_lower_dense(rho, sigma, eps, hi)
    return Estimate.bracket(lo, hi)


def hypothesis_testing_relative_entropy(rho, sigma, eps):
    """D_H^eps(rho||sigma) = -ln min tr(Q sigma) over tests 0 <= Q <= 1 with
    tr(Q rho) >= 1 - eps.  Exact in both the commuting and quantum cases."""
    _check_dims(rho, sigma)
    _check_eps(eps)
    pq = joint_eigenprobs(rho, sigma)
    if pq is not None:
        return dhyp_eps_diag(pq[0], pq[1], eps)
    return _dhyp_dense(rho, sigma, eps)


def divergence_report(rho, sigma, eps):
    """All four divergences for a (rho, sigma, eps) triple."""
    _check_dims(rho, sigma)
    _check_eps(eps)
    pq = joint_eigenprobs(rho, sigma)
    if pq is not None:
        p, q = pq
        return DivergenceReport(
            umegaki=Estimate.point(umegaki_diag(p, q)),
            d_min=dmin_eps_diag(p, q, eps),
            d_max=Estimate.point(dmax_eps_diag(p, q, eps)),
            d_hyp=Estimate.point(dhyp_eps_diag(p, q, eps)),
            epsilon=eps,
        )
    return DivergenceReport(
        umegaki=Estimate.point(_umegaki_dense(rho, sigma)),
        d_min=smoothed_min_relative_entropy(rho, sigma, eps),
        d_max=smoothed_max_relative_entropy(rho, sigma, eps),
        d_hyp=Estimate.point(_dhyp_dense(rho, sigma, eps)),
        epsilon=eps,
    )
