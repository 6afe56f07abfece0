import math

import numpy as np
import pytest

from oneshot_thermo.divergences import (
    dhyp_eps_diag,
    dmax_eps_diag,
    dmin_eps_diag,
    umegaki_diag,
)
from oneshot_thermo.errors import InvalidOperator
from oneshot_thermo.spectrum import RatioSpectrum, divergences_from_spectrum, ratio_spectrum

from util import random_probs


def test_identical_states_single_atom():
    p = np.array([0.4, 0.35, 0.25])
    sp = ratio_spectrum(p, p)
    assert len(sp) == 1
    assert sp.log_ratio[0] == pytest.approx(0.0, abs=1e-12)
    assert sp.rho_mass[0] == pytest.approx(1.0)
    assert sp.sigma_mass[0] == pytest.approx(1.0)


def test_two_iid_copies_three_atoms():
    # exhaustive enumeration over the 4 outcomes: log-ratios ln(4*0.81),
    # ln(4*0.09) twice (merged), ln(4*0.01)
    p1 = np.array([0.9, 0.1])
    q1 = np.array([0.5, 0.5])
    p = np.kron(p1, p1)
    q = np.kron(q1, q1)
    sp = ratio_spectrum(p, q)
    assert len(sp) == 3
    np.testing.assert_allclose(sp.rho_mass, [0.81, 0.18, 0.01])
    np.testing.assert_allclose(sp.sigma_mass, [0.25, 0.5, 0.25])
    np.testing.assert_allclose(
        sp.log_ratio,
        [math.log(0.81 / 0.25), math.log(0.09 / 0.25), math.log(0.01 / 0.25)],
        atol=1e-12,
    )


def test_sigma_remainder_atom():
    p = np.array([1.0, 0.0])
    q = np.array([0.3, 0.7])
    sp = ratio_spectrum(p, q)
    assert sp.log_ratio[-1] == -math.inf
    assert sp.rho_mass[-1] == 0.0
    assert sp.sigma_mass[-1] == pytest.approx(0.7)


def test_single_atom_spectrum_all_divergences_equal():
    # a point mass at log-ratio c carries sigma-mass e^{-c} on the support;
    # the rest of sigma sits outside supp(rho) at -inf
    c = 0.7
    sp = RatioSpectrum(
        np.array([c, -math.inf]),
        np.array([1.0, 0.0]),
        np.array([math.exp(-c), 1.0 - math.exp(-c)]),
    )
    rep = divergences_from_spectrum(sp, 0.0)
    for est in (rep.umegaki, rep.d_min, rep.d_max, rep.d_hyp):
        assert est.value == pytest.approx(c, abs=1e-12)


def test_mass_validation():
    with pytest.raises(InvalidOperator):
        RatioSpectrum(np.array([0.0]), np.array([0.5]), np.array([1.0]))


def test_ordering_inequality_on_generated_spectra():
    rng = np.random.RandomState(21)
    for _ in range(30):
        d = rng.randint(2, 8)
        p = random_probs(rng, d)
        q = random_probs(rng, d)
        rep = divergences_from_spectrum(ratio_spectrum(p, q), 0.0)
        assert rep.d_min.value <= rep.umegaki.value + 1e-8
        assert rep.umegaki.value <= rep.d_max.value + 1e-8


@pytest.mark.parametrize("eps", [0.0, 0.05, 0.1, 0.25])
def test_matches_matrix_path_on_explicit_inputs(eps):
    """Spectrum functionals agree with the direct diagonal computations on
    explicit vectors up to dim 64 (generic ratios, no aggregation)."""
    rng = np.random.RandomState(22)
    for d in (4, 16, 64):
        p = random_probs(rng, d)
        q = random_probs(rng, d)
        sp = ratio_spectrum(p, q)
        rep = divergences_from_spectrum(sp, eps)
        assert rep.umegaki.value == pytest.approx(umegaki_diag(p, q), abs=1e-9)
        assert rep.d_min.value == pytest.approx(
            dmin_eps_diag(p, q, eps).value, abs=1e-9
        )
        assert rep.d_max.value == pytest.approx(dmax_eps_diag(p, q, eps), abs=1e-9)
        assert rep.d_hyp.value == pytest.approx(dhyp_eps_diag(p, q, eps), abs=1e-9)


def test_csv_rows_render_negative_infinity():
    sp = ratio_spectrum(np.array([1.0, 0.0]), np.array([0.4, 0.6]))
    rows = sp.csv_rows()
    assert rows[-1][0] == -math.inf
    assert rows[-1][1] == 0.0
