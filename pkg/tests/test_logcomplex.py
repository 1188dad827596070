import numpy as np
import pytest

from bubblescatter.logcomplex import LogComplex, lc_stack, lc_where


def test_roundtrip_and_arithmetic():
    z = np.array([1.5 - 2j, -3e-5, 7e100j])
    a = LogComplex.from_complex(z)
    np.testing.assert_allclose(a.to_complex(), z, rtol=1e-15)
    np.testing.assert_allclose((a * a).to_complex()[:2], (z * z)[:2], rtol=1e-15)
    assert float((a * a).log10_magnitude[2]) == pytest.approx(2 * np.log10(7e100), rel=1e-15)
    np.testing.assert_allclose((a + a).to_complex(), 2 * z, rtol=1e-15)
    np.testing.assert_allclose((a / a).to_complex(), np.ones(3), rtol=1e-15)


def test_range_beyond_double():
    big = LogComplex.from_log10(400.0, 0.3)
    small = LogComplex.from_log10(-400.0)
    prod = big * small
    assert abs(prod.to_complex() - np.exp(0.3j)) < 1e-12
    assert float((big ** 3).log10_magnitude) == pytest.approx(1200.0, rel=1e-14)
    assert np.isinf(abs(big.to_complex()))
    assert small.to_complex() == 0


def test_zero_and_selection():
    z = LogComplex.from_complex(0.0)
    assert bool(z.is_zero) and float(z.log10_magnitude) == -np.inf
    s = lc_stack([LogComplex.from_complex(1.0), LogComplex.from_complex(2.0)])
    w = lc_where(np.array([True, False]), s, LogComplex.from_complex(np.array([5.0, 6.0])))
    np.testing.assert_allclose(w.to_complex(), [1.0, 6.0])


def test_from_int_exact():
    n = 3 ** 40
    assert float(LogComplex.from_int(n).log10_magnitude) == pytest.approx(40 * np.log10(3), rel=1e-15)
