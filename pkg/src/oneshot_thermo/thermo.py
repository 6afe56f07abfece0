"""Thermal states, thermo-majorization, battery-coupled transitions, and the
work-of-formation / distillable-work functionals.

Sign convention: positive work = invested; negative work consumption
corresponds to work extraction.  Work is beta^{-1} times a divergence in
nats, so it carries energy units.

The battery is a finite ladder with a configurable step; transition
feasibility is decided by thermo-majorization on the joint system (tie
comparisons count as domination, tolerance 1e-10).  Battery levels only enter
through the Gibbs weight of the occupied level, so unoccupied ladder levels
never need to be materialized.
"""

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import logsumexp

from .divergences import (
    Estimate,
    smoothed_max_relative_entropy,
    smoothed_min_relative_entropy,
    joint_eigenprobs,
)
from .errors import InvalidBatteryLevel, InvalidTemperature, NotSemiclassical, ShapeError
from .operators import DensityOperator, HermitianOperator, commutes, eig

CURVE_TOL = 1e-10


@dataclass(frozen=True)
class GibbsEnsemble:
    """Hamiltonian, inverse temperature, thermal state, and ln Z."""

    hamiltonian: HermitianOperator
    beta: float
    gamma: DensityOperator
    log_partition: float


def gibbs(hamiltonian, beta):
    """Thermal ensemble gamma = e^{-beta H}/Z with a max-shifted log-sum-exp
    partition function."""
    if beta <= 0:
        raise InvalidTemperature(f"beta must be > 0, got {beta!r}")
    if hamiltonian.is_diagonal:
        e = hamiltonian.diag
        log_z = float(logsumexp(-beta * e))
        gamma = DensityOperator.diagonal(np.exp(-beta * e - log_z))
        return GibbsEnsemble(hamiltonian, float(beta), gamma, log_z)
    vals, vecs = np.linalg.eigh(hamiltonian.matrix())
    log_z = float(logsumexp(-beta * vals))
    w = np.exp(-beta * vals - log_z)
    mat = (vecs * w) @ vecs.conj().T
    gamma = DensityOperator._from_matrix_unchecked(0.5 * (mat + mat.conj().T))
    return GibbsEnsemble(hamiltonian, float(beta), gamma, log_z)


def semiclassical_probs(rho, ens):
    """Eigenvalue pairs (p_i, g_i) of a state commuting with the Hamiltonian.

    Raises NotSemiclassical when [rho, H] != 0 within tolerance.
    """
    if rho.dim != ens.hamiltonian.dim:
        raise ShapeError(f"dims {rho.dim} and {ens.hamiltonian.dim} differ")
    if not commutes(rho, ens.hamiltonian):
        raise NotSemiclassical("state does not commute with the Hamiltonian")
    pq = joint_eigenprobs(rho, ens.gamma)
    if pq is None:
        raise NotSemiclassical("state does not commute with the thermal state")
    return pq


@dataclass(frozen=True)
class LorenzCurve:
    """Piecewise-linear thermo-majorization curve.

    Vertices run from (0, 0) to (1, 1): x accumulates Gibbs weight, y
    accumulates state probability, atoms sorted by p/g descending with ties
    merged into one segment.  Concave by construction.
    """

    x: np.ndarray
    y: np.ndarray

    def evaluate(self, xs):
        return np.interp(xs, self.x, self.y)

    def csv_rows(self):
        return list(zip(self.x.tolist(), self.y.tolist()))


def _curve_vertices(p, g):
    """Cumulative vertices for atoms (p_i, g_i), ratio-sorted, ties merged."""
    p = np.asarray(p, float)
    g = np.asarray(g, float)
    with np.errstate(divide="ignore"):
        ratio = np.where(g > 0, p / np.where(g > 0, g, 1.0), np.inf)
    order = np.argsort(ratio)[::-1]
    p, g, ratio = p[order], g[order], ratio[order]
    # merge ratio ties so each segment has a distinct slope
    keys = np.round(np.log1p(ratio), 12)
    xs, ys = [0.0], [0.0]
    cx = cy = 0.0
    i = 0
    while i < p.size:
        j = i + 1
        while j < p.size and keys[j] == keys[i]:
            j += 1
        cx += float(np.sum(g[i:j]))
        cy += float(np.sum(p[i:j]))
        xs.append(cx)
        ys.append(cy)
        i = j
    return np.asarray(xs), np.asarray(ys)


def lorenz_curve(rho, ens):
    """Thermo-majorization curve of a semiclassical state against gamma."""
    p, g = semiclassical_probs(rho, ens)
    xs, ys = _curve_vertices(p, g)
    # normalize away accumulated float drift at the endpoint
    xs = xs / xs[-1]
    ys = ys / ys[-1]
    return LorenzCurve(xs, ys)


def _dominates(xa, ya, xb, yb, tol=CURVE_TOL):
    """curve A >= curve B at the union of vertex x's (ties dominate).

    Curves may end at different x (unnormalized weights); both are flat at
    their final y beyond their last vertex.
    """
    grid = np.union1d(xa, xb)
    va = np.interp(grid, xa, ya, right=ya[-1])
    vb = np.interp(grid, xb, yb, right=yb[-1])
    return bool(np.all(va >= vb - tol))


def thermo_majorizes(rho, rho_prime, ens):
    """True iff rho's curve dominates rho_prime's pointwise (preorder)."""
    pa, ga = semiclassical_probs(rho, ens)
    pb, gb = semiclassical_probs(rho_prime, ens)
    xa, ya = _curve_vertices(pa, ga)
    xb, yb = _curve_vertices(pb, gb)
    return _dominates(xa, ya, xb, yb)


@dataclass(frozen=True)
class BatteryLadder:
    """Finite energy ladder with step ``delta`` covering [e_min, e_max]."""

    delta: float = 1e-3
    e_min: float = -50.0
    e_max: float = 50.0

    def validate(self, energy):
        if energy < self.e_min - 1e-12 or energy > self.e_max + 1e-12:
            raise InvalidBatteryLevel(f"energy {energy!r} outside ladder range")
        k = energy / self.delta
        if abs(k - round(k)) > 1e-9 * max(1.0, abs(k)):
            raise InvalidBatteryLevel(
                f"energy {energy!r} is not a multiple of the ladder step {self.delta!r}"
            )
        return self.delta * round(k)


def battery_transition_feasible(rho, rho_prime, e_in, e_out, ens, battery=None):
    """Decide rho (x) |E><E|  ->  rho' (x) |E'><E'| under thermal operations.

    Builds the joint thermo-majorization comparison with total Hamiltonian
    H (x) 1 + 1 (x) H_battery.  Only the occupied battery levels matter: the
    unoccupied ladder atoms carry zero probability and extend both curves
    flat at 1, so they cancel from the domination check.
    """
    battery = battery or BatteryLadder()
    e_in = battery.validate(e_in)
    e_out = battery.validate(e_out)
    pa, ga = semiclassical_probs(rho, ens)
    pb, gb = semiclassical_probs(rho_prime, ens)
    beta = ens.beta
    xa, ya = _curve_vertices(pa, ga * math.exp(-beta * e_in))
    xb, yb = _curve_vertices(pb, gb * math.exp(-beta * e_out))
    return _dominates(xa, ya, xb, yb)


class WorkKind(str, Enum):
    FORMATION = "formation"
    DISTILLATION = "distillation"


@dataclass(frozen=True)
class WorkQuote:
    """An optimal work quote in energy units (positive = invested)."""

    work: float
    epsilon: float
    quantity: WorkKind
    exact: bool = True
    lo: float = math.nan
    hi: float = math.nan

    def to_json_dict(self):
        d = {
            "work": self.work,
            "epsilon": self.epsilon,
            "quantity": self.quantity.value,
            "exact": self.exact,
        }
        if not self.exact:
            d["bracket"] = [self.lo, self.hi]
        return d


def _quote(est, beta, eps, kind):
    if est.exact:
        return WorkQuote(est.value / beta, eps, kind)
    return WorkQuote(est.value / beta, eps, kind, exact=False,
                     lo=est.lo / beta, hi=est.hi / beta)


def work_formation(rho, ens, eps=0.0):
    """Optimal work to prepare rho from gamma: beta^{-1} D_max^eps(rho||gamma).

    Exact for semiclassical rho; certified bracket otherwise.
    """
    est = smoothed_max_relative_entropy(rho, ens.gamma, eps)
    return _quote(est, ens.beta, eps, WorkKind.FORMATION)


def work_distillable(rho, ens, eps=0.0):
    """Optimal work extractable from rho: beta^{-1} D_min^eps(rho||gamma)."""
    est = smoothed_min_relative_entropy(rho, ens.gamma, eps)
    return _quote(est, ens.beta, eps, WorkKind.DISTILLATION)


def reversibility_gap(rho, ens, eps=0.0):
    """(S, Delta) with S = (d_max + d_min)/2 and Delta = (d_max - d_min)/2,
    in nats.  Near-zero Delta is the equipartition regime where formation and
    distillation prices coincide; Delta can dip slightly negative at large
    eps for states eps-close to gamma (see module notes)."""
    lo = smoothed_min_relative_entropy(rho, ens.gamma, eps)
    hi = smoothed_max_relative_entropy(rho, ens.gamma, eps)
    s = 0.5 * (hi.value + lo.value)
    delta = 0.5 * (hi.value - lo.value)
    return s, delta
