import math

import numpy as np
import pytest
from scipy import special

from bubblescatter.medium import PDMS, nondimensionalize
from bubblescatter.spectra import (NEAR_SINGULAR, a_n_leading, acoustic_layer_eigenvalue, alpha_n, alpha_n_leading,
                                   alpha_n_limit, beta_n, beta_n0, beta_n_asymptotic, elastic_layer_coeffs,
                                   alpha_from_coeffs, layer_radial_terms, modal_determinant)

NM = nondimensionalize(PDMS)


def test_acoustic_eigenvalue_against_scipy():
    j, y = special.spherical_jn(2, 0.5), special.spherical_yn(2, 0.5)
    assert acoustic_layer_eigenvalue(2, 0.5) == pytest.approx(-0.5j * j * (j + 1j * y), rel=1e-13)


def test_alpha_limits():
    # the printed closed form is the low-frequency limit only at n = 1
    assert alpha_n(1, NM).real == pytest.approx(alpha_n_leading(1, NM.lam, NM.mu), rel=1e-5)
    for n in (3, 10):
        assert alpha_n(n, NM).real == pytest.approx(alpha_n_limit(n, NM.lam, NM.mu), rel=1e-5)
    assert alpha_n_limit(2, NM.lam, NM.mu) != pytest.approx(alpha_n_leading(2, NM.lam, NM.mu), rel=1e-3)


def test_alpha_precision_paths_agree():
    for n in (1, 3):
        assert alpha_n(n, NM, "double") == pytest.approx(alpha_n(n, NM), rel=1e-8)
    c = elastic_layer_coeffs(3, NM)
    assert alpha_from_coeffs(3, c) == pytest.approx(alpha_n(3, NM), rel=1e-12)


@pytest.mark.parametrize("n", [1, 3, 10, 40])
def test_beta_matches_low_frequency_expansion(n):
    b = beta_n(n, NM)
    assert b.real == pytest.approx(beta_n_asymptotic(n, NM), rel=1e-8)
    assert abs(b.real - beta_n0(n, NM.lam, NM.mu)) < 1e-5


def test_determinant_scale_and_range():
    for n in (5, 20, 60):
        d = modal_determinant(n, NM)
        assert NEAR_SINGULAR not in d.flags
        lim = n * beta_n0(n, NM.lam, NM.mu) / math.exp(sum(math.log(k) for k in range(2 * n + 1, 0, -2)))
        rel = abs(complex((d.value / (NM.k ** n)).to_complex()) / lim - 1)
        assert rel < 1e-6
    assert float(modal_determinant(60, NM).value.log10_magnitude) < -300
    assert a_n_leading(60, NM.lam, NM.mu) > 0


def test_layer_terms_shape_and_cache_consistency():
    t1 = layer_radial_terms(3, NM, [1.0, 1.5])
    t2 = layer_radial_terms(3, NM, [1.5])
    assert t1.shape[0] == 5
    np.testing.assert_array_equal(t1[:, :, 1], t2[:, :, 0])
