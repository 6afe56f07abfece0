"""Likelihood-ratio spectra: the classical sufficient statistic for all four
divergences of a commuting pair.

An atom (log_ratio, rho_mass, sigma_mass) collects the probability mass that
rho and sigma place on outcomes with that value of ln(rho/sigma).  Mass of
sigma outside the support of rho is collected in a single atom at
log_ratio = -inf with rho_mass 0.

Spectra built from explicit vectors are exact and their atoms are indivisible
(each atom is one eigenvalue).  Spectra built by the chain dynamic program
aggregate exponentially many micro-configurations per atom and are marked
divisible; they carry a bin width and a certified displacement bound on the
atom positions (masses are always exact up to float accumulation).
"""

import math
from dataclasses import dataclass

import numpy as np

from .divergences import (
    Estimate,
    DivergenceReport,
    dhyp_eps_diag,
    dmax_eps_diag,
    dmin_eps_diag,
    umegaki_diag,
)
from .errors import InvalidOperator

MASS_ATOL = 1e-9


@dataclass(frozen=True)
class RatioSpectrum:
    """Atoms sorted by log_ratio descending; masses each sum to 1."""

    log_ratio: np.ndarray
    rho_mass: np.ndarray
    sigma_mass: np.ndarray
    bin_width: float = 0.0
    displacement_bound: float = 0.0
    divisible: bool = False

    def __post_init__(self):
        lr = np.asarray(self.log_ratio, dtype=float)
        rm = np.asarray(self.rho_mass, dtype=float)
        sm = np.asarray(self.sigma_mass, dtype=float)
        if not (lr.shape == rm.shape == sm.shape):
            raise InvalidOperator("spectrum arrays must share one shape")
        if np.any(np.diff(lr) > 0):
            order = np.argsort(lr)[::-1]
            lr, rm, sm = lr[order], rm[order], sm[order]
        if abs(rm.sum() - 1.0) > MASS_ATOL or abs(sm.sum() - 1.0) > MASS_ATOL:
            raise InvalidOperator(
                f"masses must sum to 1 (got {rm.sum()!r}, {sm.sum()!r})"
            )
        for name, arr in (("log_ratio", lr), ("rho_mass", rm), ("sigma_mass", sm)):
            arr.setflags(write=False)
        object.__setattr__(self, "log_ratio", lr)
        object.__setattr__(self, "rho_mass", rm)
        object.__setattr__(self, "sigma_mass", sm)

    def __len__(self):
        return self.log_ratio.size

    def csv_rows(self):
        """(log_ratio, rho_mass, sigma_mass) rows; -inf renders as '-inf'."""
        return [
            (float(l), float(r), float(s))
            for l, r, s in zip(self.log_ratio, self.rho_mass, self.sigma_mass)
        ]


def ratio_spectrum(p, q):
    """Exact spectrum of a pair of probability vectors diagonal in one basis.

    Atoms with equal log-ratio are merged; sigma-mass outside supp(rho) goes
    to the -inf atom.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise InvalidOperator("p and q must have equal length")
    supp = p > 1e-12 * max(p.max(), 1e-300)
    pp, qq = p[supp], q[supp]
    with np.errstate(divide="ignore"):
        lr = np.where(qq > 0.0, np.log(pp) - np.log(np.where(qq > 0.0, qq, 1.0)), np.inf)
    key = np.round(lr, 12)
    vals, inv = np.unique(key, return_inverse=True)
    rm = np.bincount(inv, weights=pp, minlength=vals.size)
    sm = np.bincount(inv, weights=qq, minlength=vals.size)
    rest = 1.0 - sm.sum()
    if rest > 1e-15:
        vals = np.concatenate([vals, [-math.inf]])
        rm = np.concatenate([rm, [0.0]])
        sm = np.concatenate([sm, [rest]])
    order = np.argsort(vals)[::-1]
    return RatioSpectrum(vals[order], rm[order], sm[order])


def divergences_from_spectrum(spec, eps):
    """All four divergences as functionals of a ratio spectrum.

    For binned spectra each entry carries an error bar from the certified
    displacement bound (positions may be off by at most that much; masses are
    exact), and the tail rules treat atoms as divisible.
    """
    lr, rm, sm = spec.log_ratio, spec.rho_mass, spec.sigma_mass
    delta = spec.displacement_bound
    um = float(np.sum(rm[rm > 0.0] * lr[rm > 0.0]))
    p_atoms, q_atoms = _as_pairs(lr, rm, sm)
    d_min = dmin_eps_diag(p_atoms, q_atoms, eps, divisible=spec.divisible,
                          exact_masses=True)
    d_max = dmax_eps_diag(p_atoms, q_atoms, eps, exact_masses=True)
    d_hyp = dhyp_eps_diag(p_atoms, q_atoms, eps)

    if delta > 0.0:
        um_e = Estimate.bracket(um - delta, um + delta)
        d_min_e = Estimate(d_min.value, d_min.lo - 2 * delta, d_min.hi + 2 * delta, False)
        d_max_e = Estimate.bracket(d_max - delta, d_max + delta)
        d_hyp_e = Estimate.bracket(d_hyp - 2 * delta, d_hyp + 2 * delta)
    else:
        um_e = Estimate.point(um)
        d_min_e = d_min
        d_max_e = Estimate.point(d_max)
        d_hyp_e = Estimate.point(d_hyp)
    return DivergenceReport(umegaki=um_e, d_min=d_min_e, d_max=d_max_e,
                            d_hyp=d_hyp_e, epsilon=eps)


def _as_pairs(lr, rm, sm):
    """Represent atoms as (p, q) pairs preserving masses and ratio order.

    The diag cores only use p_i, q_i and their ratios; an atom with masses
    (r, s) at log-ratio lam behaves exactly like a diagonal entry pair
    p_i = r, q_i = s (the aggregate ratio r/s may differ from e^lam only
    through binning, which the displacement bound covers); -inf atoms have
    r = 0, so any positive s keeps them at the bottom of the ratio order.
    """
    return np.asarray(rm, float), np.asarray(sm, float)


class BinAccumulator:
    """Merge (position, rho_mass, sigma_mass) atoms onto a bin_width grid.

    Bin representatives are total-mass-weighted mean positions; the caller
    tracks how many binning rounds occurred to certify the displacement
    bound (at most bin_width per round).  With bin_width = 0 positions are
    merged only when equal to ~1e-12.
    """

    def __init__(self, bin_width):
        self.bin_width = float(bin_width)

    def key(self, pos):
        if self.bin_width > 0.0:
            return np.round(pos / self.bin_width).astype(np.int64)
        return np.round(pos * 1e12).astype(np.int64)

    def merge(self, pos, rho, sig):
        """Combine atoms sharing a grid key; returns (pos, rho, sig) arrays."""
        k = self.key(pos)
        vals, inv = np.unique(k, return_inverse=True)
        rho_m = np.bincount(inv, weights=rho, minlength=vals.size)
        sig_m = np.bincount(inv, weights=sig, minlength=vals.size)
        w = rho + sig
        wsum = np.bincount(inv, weights=w, minlength=vals.size)
        wpos = np.bincount(inv, weights=w * pos, minlength=vals.size)
        safe = np.where(wsum > 0.0, wsum, 1.0)
        mean_pos = np.where(wsum > 0.0, wpos / safe, vals * (self.bin_width or 1e-12))
        return mean_pos, rho_m, sig_m
