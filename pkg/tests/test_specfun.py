import math

import mpmath
import numpy as np
import pytest
from scipy import special

from bubblescatter.specfun import (DomainError, SingularityError, SphericalHarmonicIndex, cylindrical_bessel,
                                   lambert_w0, log_double_factorial, spherical_bessel_j, spherical_bessel_y,
                                   spherical_frame, spherical_harmonic, spherical_hankel_h1,
                                   vector_spherical_harmonics)


@pytest.mark.parametrize("n", [0, 1, 5, 20, 60])
def test_spherical_bessel_against_scipy(n):
    z = np.array([0.05, 0.7, 3.0, 25.0, 90.0])
    j, jd = spherical_bessel_j(n, z)
    ref = special.spherical_jn(n, z)
    ok = np.abs(ref) > 1e-300
    np.testing.assert_allclose(np.asarray(j.to_complex()).real[ok], ref[ok], rtol=1e-12)
    y, _ = spherical_bessel_y(n, z)
    refy = special.spherical_yn(n, z)
    fin = np.isfinite(refy)
    np.testing.assert_allclose(np.asarray(y.to_complex()).real[fin], refy[fin], rtol=1e-12)


def test_bessel_far_outside_double_range():
    # j_60(1e-4) ~ 1e-324 and y_60(1e-4) ~ 1e+319: only the log-scaled values exist
    with mpmath.workdps(40):
        ref_j = mpmath.log10(abs(mpmath.sqrt(mpmath.pi / 2e-4) * mpmath.besselj(60.5, 1e-4)))
        ref_y = mpmath.log10(abs(mpmath.sqrt(mpmath.pi / 2e-4) * mpmath.bessely(60.5, 1e-4)))
    j, _ = spherical_bessel_j(60, 1e-4)
    y, _ = spherical_bessel_y(60, 1e-4)
    assert float(j.log10_magnitude) == pytest.approx(float(ref_j), abs=1e-12)
    assert float(y.log10_magnitude) == pytest.approx(float(ref_y), abs=1e-12)


def test_hankel_and_cylindrical():
    h, _ = spherical_hankel_h1(3, 2.0)
    assert complex(h.to_complex()) == pytest.approx(special.spherical_jn(3, 2.0) + 1j * special.spherical_yn(3, 2.0),
                                                   rel=1e-13)
    for kind, ref in (("J", special.jv), ("Y", special.yv)):
        v, d = cylindrical_bessel(kind, 7, np.array([0.3, 4.0]))
        np.testing.assert_allclose(np.asarray(v.to_complex()).real, ref(7, [0.3, 4.0]), rtol=1e-12)
    with pytest.raises(SingularityError):
        cylindrical_bessel("Y", 2, 0.0)
    with pytest.raises(DomainError):
        spherical_bessel_j(-1, 1.0)


def test_spherical_harmonic_against_scipy():
    th, ph = np.array([0.2, 1.1, 2.9]), np.array([0.4, 3.0, 5.5])
    for n, m in ((0, 0), (4, -3), (10, 7), (25, 25)):
        y = spherical_harmonic(SphericalHarmonicIndex(n, m), th, ph)
        # orders m < 0 follow Y_n^{-m} = conj(Y_n^m), without the Condon-Shortley (-1)^m
        ref = special.sph_harm_y(n, m, th, ph) * (-1) ** m if m < 0 else special.sph_harm_y(n, m, th, ph)
        np.testing.assert_allclose(y, ref, rtol=1e-12, atol=1e-14)
    with pytest.raises(DomainError):
        SphericalHarmonicIndex(2, 3)


def test_vector_harmonic_normal_components():
    th, ph = np.array([0.3, 1.7]), np.array([2.0, 0.1])
    nu, _, _ = spherical_frame(th, ph)
    n, m = 4, 2
    v = vector_spherical_harmonics(n, m, th, ph)
    y = lambda l: spherical_harmonic(SphericalHarmonicIndex(l, m), th, ph)
    np.testing.assert_allclose(np.sum(v.I * nu, -1), (n + 1) * y(n + 1), atol=1e-14)
    np.testing.assert_allclose(np.sum(v.N * nu, -1), n * y(n - 1), atol=1e-14)
    np.testing.assert_allclose(np.sum(v.T * nu, -1), 0, atol=1e-14)


@pytest.mark.parametrize("x", [-1 / math.e, -0.2, 1e-10, 1.0, 50.0, 1e12, 1e300])
def test_lambert_against_scipy(x):
    assert lambert_w0(x) == pytest.approx(float(mpmath.lambertw(x).real), rel=1e-14, abs=1e-14)
    with pytest.raises(DomainError):
        lambert_w0(-1.0)


def test_log_double_factorial():
    assert log_double_factorial(9) == pytest.approx(math.log(945), rel=1e-15)
    assert log_double_factorial(301) == pytest.approx(float(mpmath.log(mpmath.fac2(301))), rel=1e-14)
