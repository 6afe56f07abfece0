import math

import numpy as np
import pytest
from scipy.special import logsumexp

from oneshot_thermo.divergences import divergence_report
from oneshot_thermo.errors import ChainTooShort, DimensionLimit, UnsupportedStructure
from oneshot_thermo.lattice import (
    FiniteMixture,
    IIDMixed,
    IIDPure,
    LocalHamiltonianSpec,
    MarkovFamily,
    chain_ratio_spectrum,
    free_energy_rate,
    gap_scan,
    gibbs_lattice,
    ising_chain,
    log_partition_chain,
    mixture_class_spectrum,
    mixture_scan,
    mixture_umegaki,
    relative_entropy_rate,
    spatial_variance,
    truncate,
)
from oneshot_thermo.operators import DensityOperator, HermitianOperator
from oneshot_thermo.spectrum import divergences_from_spectrum
from oneshot_thermo.thermo import gibbs

SZ = HermitianOperator.diagonal([1.0, -1.0])
UP = IIDPure(np.array([1.0, 0.0]))
DOWN = IIDPure(np.array([0.0, 1.0]))
PLUS = IIDPure(np.array([1.0, 1.0]) / math.sqrt(2))


def test_truncate_term_counts():
    # r = 1 on-site field: n terms exactly
    field = LocalHamiltonianSpec(2, 1, HermitianOperator.diagonal([1.0, -1.0]))
    h4 = truncate(field, 4)
    np.testing.assert_allclose(h4.diag.min(), -4.0)
    np.testing.assert_allclose(h4.diag.max(), 4.0)
    # Ising n = 3: 2 coupling windows + 3 field terms
    spec = ising_chain(1.0, 0.5)
    h3 = truncate(spec, 3)
    # all-up config: -(2)(1) + 3(0.5)
    assert h3.diag[0] == pytest.approx(-2.0 + 1.5)


def test_truncate_ising_spectrum_pattern():
    h3 = truncate(ising_chain(1.0, 0.0), 3)
    vals = np.sort(h3.diag)
    np.testing.assert_allclose(vals, [-2, -2, 0, 0, 0, 0, 2, 2])


def test_truncate_too_short():
    with pytest.raises(ChainTooShort):
        truncate(ising_chain(1.0, 0.0), 1)


def test_ising_j_zero_factorizes():
    spec = ising_chain(0.0, 1.0)
    h = truncate(spec, 5)
    # energies are sums of single-site fields only
    sz_sum = truncate(LocalHamiltonianSpec(2, 1, SZ), 5)
    np.testing.assert_allclose(h.diag, sz_sum.diag)


def test_ising_two_site_eigenvalues():
    h2 = truncate(ising_chain(1.0, 0.0), 2)
    np.testing.assert_allclose(np.sort(h2.diag), [-1, -1, 1, 1])


def test_all_up_energy_convention():
    for n in (2, 4, 7):
        spec = ising_chain(1.3, 0.4)
        h = truncate(spec, n)
        assert h.diag[0] == pytest.approx(-(n - 1) * 1.3 + n * 0.4)


def test_log_partition_examples():
    # J = 0: ln Z_n = n ln(2 cosh(beta h))  [factorization oracle]
    spec = ising_chain(0.0, 1.0)
    for n in (2, 7, 40):
        assert log_partition_chain(spec, n, 1.0) == pytest.approx(
            n * math.log(2 * math.cosh(1.0)), abs=1e-9
        )
    # Ising J=1 h=0 n=2: ln(2e + 2/e)  [4-config sum]
    spec = ising_chain(1.0, 0.0)
    assert log_partition_chain(spec, 2, 1.0) == pytest.approx(
        math.log(2 * math.e + 2 / math.e), abs=1e-12
    )


def test_log_partition_transfer_vs_exact_diagonalization():
    spec = ising_chain(0.8, 0.3)
    for n in range(2, 11):
        exact = float(logsumexp(-1.1 * truncate(spec, n).diag))
        assert log_partition_chain(spec, n, 1.1) == pytest.approx(exact, abs=1e-9)


def test_gibbs_lattice_matches_transfer():
    spec = ising_chain(1.0, 0.5)
    ens = gibbs_lattice(spec, 6, 1.0)
    assert ens.log_partition == pytest.approx(
        log_partition_chain(spec, 6, 1.0), abs=1e-9
    )


def test_gibbs_lattice_dimension_limit():
    with pytest.raises(DimensionLimit):
        gibbs_lattice(ising_chain(1.0, 0.0), 20, 1.0)


def test_rate_closed_form_anchor():
    # J = 0, h = 1, beta = 1, iid up: limit = 1 + ln(2 cosh 1)
    spec = ising_chain(0.0, 1.0)
    rc = relative_entropy_rate(UP, spec, 1.0)
    assert rc.limit == pytest.approx(1.0 + math.log(2 * math.cosh(1.0)), abs=1e-9)
    for n in (3, 9):
        assert rc.finite_n(n) / n == pytest.approx(rc.limit, abs=1e-12)


def test_rate_thermal_family_is_zero():
    # single-site Gibbs of the J = 0 chain reproduces gamma_n exactly
    beta, h_field = 1.0, 0.7
    spec = ising_chain(0.0, h_field)
    w = np.exp(-beta * np.array([h_field, -h_field]))
    w /= w.sum()
    fam = IIDMixed(DensityOperator.diagonal(w))
    rc = relative_entropy_rate(fam, spec, beta)
    assert rc.limit == pytest.approx(0.0, abs=1e-12)
    for n in (2, 5, 20):
        assert rc.finite_n(n) == pytest.approx(0.0, abs=1e-9)


def test_rate_finite_n_boundary_bounded():
    spec = ising_chain(1.0, 0.5)
    fam = IIDMixed(DensityOperator.diagonal([0.8, 0.2]))
    rc = relative_entropy_rate(fam, spec, 1.0)
    offsets = [rc.finite_n(n) - n * rc.limit for n in range(8, 65, 8)]
    assert max(offsets) - min(offsets) <= 2 * abs(offsets[0]) + 1e-6
    assert max(abs(o) for o in offsets) < 5.0


def test_rate_matches_exact_diagonalization():
    spec = ising_chain(1.0, 0.5)
    beta = 1.0
    fam = IIDMixed(DensityOperator.diagonal([0.8, 0.2]))
    rc = relative_entropy_rate(fam, spec, beta)
    for n in (2, 4, 6):
        ens = gibbs_lattice(spec, n, beta)
        p = np.array([0.8, 0.2])
        chain = p
        for _ in range(n - 1):
            chain = np.kron(chain, p)
        rep = divergence_report(DensityOperator.diagonal(chain), ens.gamma, 0.0)
        assert rc.finite_n(n) == pytest.approx(rep.umegaki.value, abs=1e-9)


def test_markov_rate_matches_exact():
    m = MarkovFamily.from_transition(np.array([[0.7, 0.3], [0.4, 0.6]]))
    spec = ising_chain(0.6, 0.2)
    beta = 0.9
    rc = relative_entropy_rate(m, spec, beta)
    for n in (2, 4, 6):
        # explicit chain distribution
        probs = {}
        for cfg in range(2 ** n):
            bits = [(cfg >> (n - 1 - i)) & 1 for i in range(n)]
            pr = m.stationary[bits[0]]
            for a, b in zip(bits, bits[1:]):
                pr *= m.transition[a, b]
            probs[cfg] = pr
        p = np.array([probs[c] for c in range(2 ** n)])
        ens = gibbs_lattice(spec, n, beta)
        rep = divergence_report(DensityOperator.diagonal(p), ens.gamma, 0.0)
        assert rc.finite_n(n) == pytest.approx(rep.umegaki.value, abs=1e-9)


def test_chain_spectrum_matches_explicit():
    spec = ising_chain(1.0, 0.5)
    fam = IIDMixed(DensityOperator.diagonal([0.8, 0.2]))
    for n, eps in ((4, 0.05), (8, 0.1)):
        sp = chain_ratio_spectrum(fam, spec, 1.0, n, 1e-3)
        rep = divergences_from_spectrum(sp, eps)
        ens = gibbs_lattice(spec, n, 1.0)
        p = np.array([0.8, 0.2])
        chain = p
        for _ in range(n - 1):
            chain = np.kron(chain, p)
        exact = divergence_report(DensityOperator.diagonal(chain), ens.gamma, eps)
        assert rep.umegaki.value == pytest.approx(exact.umegaki.value, abs=1e-9)
        assert rep.d_max.value == pytest.approx(exact.d_max.value, abs=1e-9)
        assert rep.d_hyp.value == pytest.approx(exact.d_hyp.value, abs=1e-9)
        # displacement bound certifies the positions
        assert rep.umegaki.width / 2 <= sp.displacement_bound + 1e-12


def test_chain_spectrum_markov_matches_explicit():
    m = MarkovFamily.from_transition(np.array([[0.6, 0.4], [0.25, 0.75]]))
    spec = ising_chain(0.5, -0.3)
    n, eps, beta = 6, 0.05, 1.2
    sp = chain_ratio_spectrum(m, spec, beta, n, 1e-3)
    rep = divergences_from_spectrum(sp, eps)
    probs = {}
    for cfg in range(2 ** n):
        bits = [(cfg >> (n - 1 - i)) & 1 for i in range(n)]
        pr = m.stationary[bits[0]]
        for a, b in zip(bits, bits[1:]):
            pr *= m.transition[a, b]
        probs[cfg] = pr
    p = np.array([probs[c] for c in range(2 ** n)])
    ens = gibbs_lattice(spec, n, beta)
    exact = divergence_report(DensityOperator.diagonal(p), ens.gamma, eps)
    assert rep.umegaki.value == pytest.approx(exact.umegaki.value, abs=1e-9)
    assert rep.d_hyp.value == pytest.approx(exact.d_hyp.value, abs=1e-9)


def test_iid_additivity_against_dp():
    # n = 20 i.i.d.: DP divergence matches n * single-copy KL within the
    # certified error (analytic additivity oracle)
    spec = ising_chain(0.0, 0.5)
    fam = IIDMixed(DensityOperator.diagonal([0.9, 0.1]))
    n = 20
    sp = chain_ratio_spectrum(fam, spec, 1.0, n, 1e-3)
    rep = divergences_from_spectrum(sp, 0.0)
    w1 = np.exp(-np.array([0.5, -0.5]))
    w1 /= w1.sum()
    single = float(np.sum([0.9, 0.1] * (np.log([0.9, 0.1]) - np.log(w1))))
    assert abs(rep.umegaki.value - n * single) <= sp.displacement_bound + 1e-9


def test_gap_scan_classical_trends():
    spec = ising_chain(0.0, 1.0)
    fam = IIDMixed(DensityOperator.diagonal([0.85, 0.15]))
    rows = gap_scan(fam, spec, 1.0, 0.05, [8, 64])
    assert rows[0].gap_rate > rows[1].gap_rate > 0
    assert all(r.method == "classical_dp" for r in rows)


def test_gap_scan_thermal_family_near_zero():
    beta, h_field, eps = 1.0, 0.7, 0.05
    spec = ising_chain(0.0, h_field)
    w = np.exp(-beta * np.array([h_field, -h_field]))
    w /= w.sum()
    fam = IIDMixed(DensityOperator.diagonal(w))
    rows = gap_scan(fam, spec, beta, eps, [8, 16, 64])
    bound = 2 * (-math.log(1 - eps))
    for r in rows:
        assert abs(r.gap_rate) <= bound / r.n + 1e-9
        assert abs(r.umegaki_rate) <= 1e-9


def test_gap_scan_row_ordering_at_eps_zero():
    spec = ising_chain(1.0, 0.5)
    fam = IIDMixed(DensityOperator.diagonal([0.8, 0.2]))
    for r in gap_scan(fam, spec, 1.0, 0.0, [8, 32]):
        assert r.d_min_rate <= r.umegaki_rate + r.err_bound + 1e-8
        assert r.umegaki_rate <= r.d_max_rate + r.err_bound + 1e-8


def test_gap_scan_quantum_path():
    rows = gap_scan(PLUS, ising_chain(1.0, 0.5), 1.0, 0.05, [2, 4])
    rc = relative_entropy_rate(PLUS, ising_chain(1.0, 0.5), 1.0)
    for r in rows:
        assert r.method == "quantum_exact"
        assert r.umegaki_rate == pytest.approx(rc.finite_n(r.n) / r.n, abs=1e-8)
        assert r.d_min_rate <= r.d_hyp_rate + 1e-9
        assert r.err_bound > 0
    with pytest.raises(DimensionLimit):
        gap_scan(PLUS, ising_chain(1.0, 0.5), 1.0, 0.05, [12])


def test_quantum_vs_classical_on_diagonal_family():
    # the two paths agree where both apply
    spec = ising_chain(0.7, 0.2)
    fam = IIDMixed(DensityOperator.diagonal([0.75, 0.25]))
    sp = chain_ratio_spectrum(fam, spec, 1.0, 5, 1e-3)
    rep = divergences_from_spectrum(sp, 0.05)
    ens = gibbs_lattice(spec, 5, 1.0)
    p = np.array([0.75, 0.25])
    chain = p
    for _ in range(4):
        chain = np.kron(chain, p)
    quantum = divergence_report(DensityOperator.diagonal(chain), ens.gamma, 0.05)
    assert rep.umegaki.value == pytest.approx(quantum.umegaki.value, abs=1e-8)
    assert rep.d_hyp.value == pytest.approx(quantum.d_hyp.value, abs=1e-8)


def test_unsupported_structures():
    with pytest.raises(UnsupportedStructure):
        chain_ratio_spectrum(PLUS, ising_chain(1.0, 0.0), 1.0, 4, 1e-3)
    bad = LocalHamiltonianSpec(2, 3, HermitianOperator.diagonal(np.zeros(8)))
    with pytest.raises(UnsupportedStructure):
        log_partition_chain(bad, 5, 1.0)


def test_mixture_umegaki_exact_small_n():
    spec = ising_chain(0.4, 0.6)
    beta = 1.0
    comps = [IIDMixed(DensityOperator.diagonal([0.9, 0.1])),
             IIDMixed(DensityOperator.diagonal([0.3, 0.7]))]
    weights = [0.6, 0.4]
    for n in (2, 4, 6):
        got = mixture_umegaki(weights, comps, spec, beta, n)
        # explicit mixture distribution
        chains = []
        for c in comps:
            p1 = c.site_probs()
            chain = p1
            for _ in range(n - 1):
                chain = np.kron(chain, p1)
            chains.append(chain)
        mix = weights[0] * chains[0] + weights[1] * chains[1]
        ens = gibbs_lattice(spec, n, beta)
        rep = divergence_report(DensityOperator.diagonal(mix), ens.gamma, 0.0)
        assert got == pytest.approx(rep.umegaki.value, abs=1e-9)


def test_mixture_class_spectrum_exact_small_n():
    spec = ising_chain(0.5, 0.2)
    beta = 1.0
    weights = [0.5, 0.5]
    comps = [UP, DOWN]
    for n in (3, 6):
        sp = mixture_class_spectrum(weights, comps, spec, beta, n)
        rep = divergences_from_spectrum(sp, 0.0)
        p = np.zeros(2 ** n)
        p[0] = 0.5
        p[-1] = 0.5
        ens = gibbs_lattice(spec, n, beta)
        exact = divergence_report(DensityOperator.diagonal(p), ens.gamma, 0.0)
        assert rep.umegaki.value == pytest.approx(exact.umegaki.value, abs=1e-9)
        assert rep.d_min.value == pytest.approx(exact.d_min.value, abs=1e-9)
        assert rep.d_max.value == pytest.approx(exact.d_max.value, abs=1e-9)


def test_mixture_identical_components_reduce_to_single():
    spec = ising_chain(1.0, 0.5)
    fam = IIDMixed(DensityOperator.diagonal([0.8, 0.2]))
    res = mixture_scan([(0.5, fam), (0.5, fam)], spec, 1.0, 0.05, [8, 16])
    assert res.potential_spread == pytest.approx(0.0, abs=1e-12)
    assert res.reversible
    single = gap_scan(fam, spec, 1.0, 0.05 / 4, [8, 16])
    for r_mix, r_one in zip(res.rows, single):
        assert r_mix.d_min_rate == pytest.approx(r_one.d_min_rate, abs=1e-9)
        assert r_mix.d_max_rate == pytest.approx(r_one.d_max_rate, abs=1e-9)


def test_mixture_equal_potential_symmetric():
    res = mixture_scan([(0.5, UP), (0.5, DOWN)], ising_chain(1.0, 0.0), 1.0,
                       0.05, [8, 16, 32, 64])
    assert res.potential_spread == pytest.approx(0.0, abs=1e-12)
    assert res.reversible
    gaps = [abs(r.gap_rate) for r in res.rows]
    assert all(a >= b for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 0.1


def test_mixture_unequal_potential():
    res = mixture_scan([(0.5, UP), (0.5, DOWN)], ising_chain(0.0, 1.0), 1.0,
                       0.05, [8, 64])
    assert res.potential_spread == pytest.approx(2.0, abs=1e-9)  # 2 beta h
    assert not res.reversible
    assert res.rows[-1].gap_rate == pytest.approx(2.0, abs=0.1)
    # relation values vs direct computation stay within an n-independent offset
    direct = {r.n: r for r in res.direct_rows}
    assert 8 in direct
    assert abs(direct[8].gap_rate * 8 - res.rows[0].gap_rate * 8) < 1.5


def test_spatial_variance_examples():
    assert spatial_variance(PLUS, SZ, 10) == pytest.approx(0.1, abs=1e-12)
    assert spatial_variance(UP, SZ, 16) == pytest.approx(0.0, abs=1e-15)
    mix = FiniteMixture((0.5, 0.5), (UP, DOWN))
    for n in (4, 50):
        assert spatial_variance(mix, SZ, n) == pytest.approx(1.0, abs=1e-12)


def test_spatial_variance_markov_matches_enumeration():
    m = MarkovFamily.from_transition(np.array([[0.6, 0.4], [0.3, 0.7]]))
    n = 8
    got = spatial_variance(m, SZ, n)
    vals = np.array([1.0, -1.0])
    total_mean = 0.0
    total_sq = 0.0
    for cfg in range(2 ** n):
        bits = [(cfg >> (n - 1 - i)) & 1 for i in range(n)]
        pr = m.stationary[bits[0]]
        for a, b in zip(bits, bits[1:]):
            pr *= m.transition[a, b]
        avg = float(np.mean(vals[bits]))
        total_mean += pr * avg
        total_sq += pr * avg ** 2
    assert got == pytest.approx(total_sq - total_mean ** 2, abs=1e-12)


def test_spatial_variance_iid_scaling():
    fam = IIDMixed(DensityOperator.diagonal([0.3, 0.7]))
    base = spatial_variance(fam, SZ, 1)
    for n in (2, 16, 64):
        assert spatial_variance(fam, SZ, n) == pytest.approx(base / n, abs=1e-12)


def test_markov_validation():
    with pytest.raises(Exception):
        MarkovFamily(np.array([[0.5, 0.6], [0.5, 0.5]]), np.array([0.5, 0.5]))
    # reducible chain: two stationary distributions
    with pytest.raises(Exception):
        MarkovFamily.from_transition(np.eye(2))


def test_finite_mixture_validation():
    with pytest.raises(Exception):
        FiniteMixture((0.5, 0.6), (UP, DOWN))
