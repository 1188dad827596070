"""Spectral coefficients of the acoustic and elastic single layers on the unit sphere.

The elastic coefficients are transcribed term by term.  Several of them are
differences of two terms of size O(1/(k tau)^2) whose leading parts cancel,
so the default route evaluates them with mpmath at a working precision that
grows with log10(1/(k tau)).  A double-precision route built on the
log-scaled special functions is kept for cross-checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np

from .logcomplex import LogComplex
from .medium import NondimensionalMedium
from .specfun import spherical_bessel_j, spherical_hankel_h1, spherical_jh_mp

NEAR_SINGULAR = "NEAR_SINGULAR"
NEAR_SINGULAR_REL = 1e-3


@dataclass(frozen=True)
class ElasticLayerCoeffs:
    """Single-layer coefficients on (T_n, I_{n-1}, N_{n+1})."""

    b_n: complex
    c_1n: complex
    d_1n: complex
    c_2n: complex
    d_2n: complex


@dataclass(frozen=True)
class TractionCoeffs:
    """Exterior traction coefficients of the same single layers."""

    frak_b_n: complex
    frak_c_1n: complex
    frak_d_1n: complex
    frak_c_2n: complex
    frak_d_2n: complex


# ---------------------------------------------------------------------------
# acoustic single layer
# ---------------------------------------------------------------------------

def acoustic_layer_eigenvalue(n: int, k: float) -> complex:
    """Eigenvalue -i k j_n(k) h_n(k) of the acoustic single layer on Y_n^m."""
    if not k > 0:
        raise ValueError("k must be positive")
    j, _ = spherical_bessel_j(n, k)
    h, _ = spherical_hankel_h1(n, k)
    return complex(((-1j * k) * j * h).to_complex())


def acoustic_interior_profile(n: int, k: float, r) -> LogComplex:
    """-i k j_n(k r) h_n(k) for r < 1."""
    j, _ = spherical_bessel_j(n, k * np.asarray(r, dtype=float))
    h, _ = spherical_hankel_h1(n, k)
    return (-1j * k) * j * h


def acoustic_exterior_profile(n: int, k: float, r) -> LogComplex:
    """-i k j_n(k) h_n(k r) for r > 1."""
    j, _ = spherical_bessel_j(n, k)
    h, _ = spherical_hankel_h1(n, k * np.asarray(r, dtype=float))
    return (-1j * k) * j * h


# ---------------------------------------------------------------------------
# working precision
# ---------------------------------------------------------------------------

def working_dps(nm: NondimensionalMedium) -> int:
    """Decimal digits needed to absorb the O(1/(k tau)^2) cancellation."""
    small = min(nm.k_p, nm.k_s, 1.0)
    return 30 + int(math.ceil(2 * max(0.0, -math.log10(small))))


def _mp_pair(n, kk, dps):
    """j_{n-1}, j_n, j_{n+1} and h_{n-1}, h_n, h_{n+1} at kk (mpmath)."""
    out = {}
    for l in (n - 1, n, n + 1):
        j, _, h, _ = spherical_jh_mp(l, kk, dps)
        out[l] = (j, h)
    return out


# ---------------------------------------------------------------------------
# elastic single layer
# ---------------------------------------------------------------------------

def _layer_terms(n, ks, kp, lam, mu, j, h):
    """Literal single-layer formulas.

    ``j(l, kk)`` and ``h(l, kk)`` supply the radial functions, so the same
    transcription serves the mpmath and LogComplex routes.
    """
    L = lam + 2 * mu
    q = 2 * n + 1
    b = -1j * ks * j(n, ks) * h(n, ks) / mu
    c1 = -1j * ((n + 1) * j(n - 1, ks) * h(n - 1, ks) * ks / (mu * q)
                + n * j(n - 1, kp) * h(n - 1, kp) * kp / (L * q))
    d1 = -1j * (n * j(n - 1, ks) * h(n + 1, ks) * ks / (mu * q)
                - n * j(n - 1, kp) * h(n + 1, kp) * kp / (L * q))
    c2 = -1j * ((n + 1) * j(n + 1, ks) * h(n - 1, ks) * ks / (mu * q)
                - (n + 1) * j(n + 1, kp) * h(n - 1, kp) * kp / (L * q))
    d2 = -1j * (n * j(n + 1, ks) * h(n + 1, ks) * ks / (mu * q)
                + (n + 1) * j(n + 1, kp) * h(n + 1, kp) * kp / (L * q))
    return b, c1, d1, c2, d2


def _traction_terms(n, ks, kp, lam, mu, j, h, hd):
    """Literal traction formulas (same calling convention as _layer_terms)."""
    L = lam + 2 * mu
    q = 2 * n + 1
    fb = -1j * ks * j(n, ks) * (ks * hd(n, ks) - h(n, ks))
    fc1 = (-2 * (n - 1) * 1j * (j(n - 1, ks) * h(n - 1, ks) * ks * (n + 1) / q
                                + j(n - 1, kp) * h(n - 1, kp) * kp * mu * n / (L * q))
           + 1j * ((j(n - 1, ks) * h(n, ks) * ks ** 2 * (n + 1) + j(n - 1, kp) * h(n, kp) * kp ** 2 * n) / q))
    fd1 = (2 * n * (n + 2) * 1j * (j(n - 1, ks) * h(n + 1, ks) * ks / q
                                   - j(n - 1, kp) * h(n + 1, kp) * kp * mu / (L * q))
           + n * 1j * ((-j(n - 1, ks) * h(n, ks) * ks ** 2 + j(n - 1, kp) * h(n, kp) * kp ** 2) / q))
    fc2 = (-2 * (n ** 2 - 1) * 1j * (j(n + 1, ks) * h(n - 1, ks) * ks / q
                                     - j(n + 1, kp) * h(n - 1, kp) * kp * mu / (L * q))
           - (n + 1) * 1j * ((-j(n + 1, ks) * h(n, ks) * ks ** 2 + j(n + 1, kp) * h(n, kp) * kp ** 2) / q))
    fd2 = (2 * (n + 2) * 1j * (j(n + 1, ks) * h(n + 1, ks) * ks * n / q
                               + j(n + 1, kp) * h(n + 1, kp) * kp * mu * (n + 1) / (L * q))
           - 1j * ((j(n + 1, ks) * h(n, ks) * ks ** 2 * n + j(n + 1, kp) * h(n, kp) * kp ** 2 * (n + 1)) / q))
    return fb, fc1, fd1, fc2, fd2


def _mp_funcs(dps):
    cache = {}

    def get(l, kk):
        key = (l, kk)
        if key not in cache:
            cache[key] = spherical_jh_mp(l, kk, dps)
        return cache[key]

    return (lambda l, kk: get(l, kk)[0], lambda l, kk: get(l, kk)[2], lambda l, kk: get(l, kk)[3])


def _lc_funcs():
    cache = {}

    def get(l, kk):
        key = (l, kk)
        if key not in cache:
            j, _ = spherical_bessel_j(l, kk)
            h, hd = spherical_hankel_h1(l, kk)
            cache[key] = (j, h, hd)
        return cache[key]

    return (lambda l, kk: get(l, kk)[0], lambda l, kk: get(l, kk)[1], lambda l, kk: get(l, kk)[2])


def _check_n(n):
    if n < 1:
        raise ValueError("elastic layer coefficients need n >= 1")


@lru_cache(maxsize=512)
def _elastic_mp(n, nm):
    dps = working_dps(nm)
    j, h, _ = _mp_funcs(dps)
    with mpmath.workdps(dps):
        ks, kp = mpmath.mpf(nm.k_s), mpmath.mpf(nm.k_p)
        vals = _layer_terms(n, ks, kp, mpmath.mpf(nm.lam), mpmath.mpf(nm.mu), j, h)
        return tuple(vals)


@lru_cache(maxsize=512)
def _traction_mp(n, nm):
    dps = working_dps(nm)
    j, h, hd = _mp_funcs(dps)
    with mpmath.workdps(dps):
        ks, kp = mpmath.mpf(nm.k_s), mpmath.mpf(nm.k_p)
        vals = _traction_terms(n, ks, kp, mpmath.mpf(nm.lam), mpmath.mpf(nm.mu), j, h, hd)
        return tuple(vals)


def elastic_layer_coeffs(n: int, nm: NondimensionalMedium, precision: str = "extended") -> ElasticLayerCoeffs:
    """b_n, c_1n, d_1n, c_2n, d_2n of the elastic single layer.

    Args:
        n: degree, n >= 1.
        nm: nondimensional medium.
        precision: "extended" (mpmath, default) or "double" (log-scaled
            float functions; loses about 2 log10(1/(k tau)) digits).
    """
    _check_n(n)
    if precision == "double":
        j, h, _ = _lc_funcs()
        vals = [v.to_complex() for v in _layer_terms(n, nm.k_s, nm.k_p, nm.lam, nm.mu, j, h)]
    else:
        vals = _elastic_mp(n, nm)
    return ElasticLayerCoeffs(*(complex(v) for v in vals))


def traction_coeffs(n: int, nm: NondimensionalMedium, precision: str = "extended") -> TractionCoeffs:
    """Traction coefficients of the single layer on the sphere (see elastic_layer_coeffs)."""
    _check_n(n)
    if precision == "double":
        j, h, hd = _lc_funcs()
        vals = [v.to_complex() for v in _traction_terms(n, nm.k_s, nm.k_p, nm.lam, nm.mu, j, h, hd)]
    else:
        vals = _traction_mp(n, nm)
    return TractionCoeffs(*(complex(v) for v in vals))


# ---------------------------------------------------------------------------
# alpha_n, beta_n
# ---------------------------------------------------------------------------

def alpha_from_coeffs(n: int, c: ElasticLayerCoeffs) -> complex:
    return (n * (c.c_1n + c.c_2n) + (n + 1) * (c.d_1n + c.d_2n)) / (2 * n + 1)


def beta_from_coeffs(n: int, t: TractionCoeffs) -> complex:
    return (n * (t.frak_c_1n + t.frak_c_2n) + (n + 1) * (t.frak_d_1n + t.frak_d_2n)) / (2 * n + 1)


def alpha_n(n: int, nm: NondimensionalMedium, precision: str = "extended") -> complex:
    """Normal component of the single layer acting on Y_n^m nu."""
    if precision == "double":
        return alpha_from_coeffs(n, elastic_layer_coeffs(n, nm, "double"))
    _check_n(n)
    v = _elastic_mp(n, nm)
    with mpmath.workdps(working_dps(nm)):
        return complex((n * (v[1] + v[3]) + (n + 1) * (v[2] + v[4])) / (2 * n + 1))


def beta_n(n: int, nm: NondimensionalMedium, precision: str = "extended") -> complex:
    """Normal component of the exterior traction of the single layer on Y_n^m nu."""
    if precision == "double":
        return beta_from_coeffs(n, traction_coeffs(n, nm, "double"))
    _check_n(n)
    v = _traction_mp(n, nm)
    with mpmath.workdps(working_dps(nm)):
        return complex((n * (v[1] + v[3]) + (n + 1) * (v[2] + v[4])) / (2 * n + 1))


def alpha_n_leading(n: int, lam: float, mu: float) -> float:
    """Closed form printed as the k -> 0 value of alpha_n."""
    L = lam + 2 * mu
    return -(2 * (lam + mu) * n * (n + 1) + mu * (4 * n ** 4 + 4 * n - 1)) / (
        mu * L * (2 * n + 3) * (2 * n + 1) * (2 * n - 1))


def alpha_n_limit(n: int, lam: float, mu: float) -> float:
    """k -> 0 limit of alpha_n from the leading terms of j_n and h_n.

    Only the c_1n and d_2n terms survive; d_1n tends to a finite value after
    its O(1/k^2) parts cancel.
    """
    L = lam + 2 * mu
    q = 2 * n + 1
    return -(n * ((n + 1) / mu + n / L) / (q * (2 * n - 1))
             + (n + 1) * (n / mu + (n + 1) / L) / (q * (2 * n + 3))) / q


def beta_n0(n: int, lam: float, mu: float) -> float:
    L = lam + 2 * mu
    num = L * (2 * n + 3) * (2 * n ** 3 + 2 * n ** 2 * mu - 2 * n ** 3 * mu + n) \
        + 2 * (n * lam + mu * (3 * n + 1)) * (n + 2) * (n + 1) * (2 * n - 1)
    return num / (L * (2 * n + 3) * (2 * n + 1) ** 2 * (2 * n - 1))


def beta_n2s(n: int) -> float:
    return (12 * n ** 3 + 18 * n ** 2 + 6 * n) / (
        (2 * n + 5) * (2 * n + 3) * (2 * n + 1) ** 2 * (2 * n - 1) * (-2 * n + 3))


def beta_n2p(n: int, lam: float, mu: float) -> float:
    """Printed k_p^2 coefficient, transcribed verbatim."""
    L = lam + 2 * mu
    p1 = mu * (-4 * n ** 4 + 2 * n ** 3 + 22 * n ** 2 - 8 * n - 24)
    num = L * mu * (4 * n ** 4 + 18 * n ** 3 + 8 * n ** 2 - 30 * n) \
        + L * (-8 * n ** 3 - 12 * n ** 2 + 26 * n + 15) + p1
    return num / (L * (2 * n + 5) * (2 * n + 3) * (2 * n + 1) ** 2 * (2 * n - 1) * (-2 * n + 3))


def beta_n_asymptotic(n: int, nm: NondimensionalMedium) -> float:
    """beta_n0 + beta_n2s k_s^2 + beta_n2p k_p^2."""
    return (beta_n0(n, nm.lam, nm.mu) + beta_n2s(n) * nm.k_s ** 2
            + beta_n2p(n, nm.lam, nm.mu) * nm.k_p ** 2)


# ---------------------------------------------------------------------------
# modal determinant
# ---------------------------------------------------------------------------

def a_n_leading(n: int, lam: float, mu: float) -> float:
    """Printed coefficient a_{n,lambda,mu} of k^n in the determinant."""
    L = lam + 2 * mu
    a1 = 2 * n ** 5 + 7 * n ** 4 + 6 * n ** 3 - n ** 2 - 2 * n
    num = L * mu * (-4 * n ** 5 - 2 * n ** 4 + 6 * n ** 3) + L * (8 * n ** 5 + 16 * n ** 4 + 12 * n ** 3 - 5 * n ** 2) \
        + 2 * mu * a1
    log_den = math.log(L * (2 * n + 1) ** 2 * (2 * n - 1)) + _log_dfact(2 * n + 3)
    return math.copysign(math.exp(math.log(abs(num)) - log_den), num) if num else 0.0


def determinant_limit(n: int, lam: float, mu: float) -> LogComplex:
    """k -> 0 limit of D_n / k^n, namely n beta_n0 / (2n+1)!!."""
    from .specfun import double_factorial_lc
    return LogComplex.from_complex(n * beta_n0(n, lam, mu)) / double_factorial_lc(2 * n + 1)


def _log_dfact(m):
    from .specfun import log_double_factorial
    return log_double_factorial(m)


@dataclass(frozen=True)
class Determinant:
    value: LogComplex
    flags: tuple


def modal_determinant(n: int, nm: NondimensionalMedium) -> Determinant:
    """D_n = k j_n'(k) beta_n(k) + delta tau^2 k^2 alpha_n(k) j_n(k).

    The NEAR_SINGULAR flag is raised (not an exception) when |D_n| falls
    below 1e-3 |a_n k^n| with a_n the printed leading coefficient.
    """
    j, jd = spherical_bessel_j(n, nm.k)
    al = alpha_n(n, nm)
    be = beta_n(n, nm)
    D = nm.k * jd * be + (nm.delta * nm.tau ** 2 * nm.k ** 2 * al) * j
    scale = abs(a_n_leading(n, nm.lam, nm.mu)) * LogComplex.from_complex(nm.k) ** n
    flags = ()
    if np.all(D.is_zero) or float(D.log10_magnitude) < float(scale.log10_magnitude) - 3.0:
        flags = (NEAR_SINGULAR,)
    return Determinant(value=D, flags=flags)


# ---------------------------------------------------------------------------
# radial profiles of the single layer off the sphere
# ---------------------------------------------------------------------------

def _mp_h_upward(lmax, z):
    """h_0 .. h_lmax at z via the stable forward recurrence (current mp precision)."""
    e = mpmath.expj(z)
    h = [-1j * e / z, -(z + 1j) * e / z ** 2]
    for l in range(1, lmax):
        h.append((2 * l + 1) / z * h[l] - h[l - 1])
    return h


@lru_cache(maxsize=64)
def _layer_weights(n: int, nm: NondimensionalMedium):
    """mp weights (s-wave, order), (p-wave, order) of the five coefficients."""
    dps = working_dps(nm)
    with mpmath.workdps(dps):
        ks, kp = mpmath.mpf(nm.k_s), mpmath.mpf(nm.k_p)
        lam, mu = mpmath.mpf(nm.lam), mpmath.mpf(nm.mu)
        L = lam + 2 * mu
        q = 2 * n + 1
        js = {l: spherical_jh_mp(l, ks, dps)[0] for l in (n - 1, n, n + 1)}
        jp = {l: spherical_jh_mp(l, kp, dps)[0] for l in (n - 1, n, n + 1)}
        rows = (
            ((-1j * ks * js[n] / mu, n), (0, n)),
            ((-1j * (n + 1) * js[n - 1] * ks / (mu * q), n - 1), (-1j * n * jp[n - 1] * kp / (L * q), n - 1)),
            ((-1j * n * js[n - 1] * ks / (mu * q), n + 1), (1j * n * jp[n - 1] * kp / (L * q), n + 1)),
            ((-1j * (n + 1) * js[n + 1] * ks / (mu * q), n - 1), (1j * (n + 1) * jp[n + 1] * kp / (L * q), n - 1)),
            ((-1j * n * js[n + 1] * ks / (mu * q), n + 1), (-1j * (n + 1) * jp[n + 1] * kp / (L * q), n + 1)),
        )
    return dps, ks, kp, rows


@lru_cache(maxsize=8192)
def _layer_terms_at(n: int, nm: NondimensionalMedium, rr: float) -> np.ndarray:
    dps, ks, kp, rows = _layer_weights(n, nm)
    out = np.zeros((5, 2), dtype=complex)
    with mpmath.workdps(dps):
        rr = mpmath.mpf(rr)
        hs = _mp_h_upward(n + 2, ks * rr)
        hp = _mp_h_upward(n + 2, kp * rr)
        for row, ((ws, ls), (wp, lp)) in enumerate(rows):
            val = ws * hs[ls] + wp * hp[lp]
            der = (ws * ks * (ls / (ks * rr) * hs[ls] - hs[ls + 1])
                   + wp * kp * (lp / (kp * rr) * hp[lp] - hp[lp + 1]))
            out[row] = complex(val), complex(der)
    out.flags.writeable = False
    return out


def layer_radial_terms(n: int, nm: NondimensionalMedium, r) -> np.ndarray:
    """Off-sphere extension of the five single-layer coefficients.

    Each coefficient keeps its j_l(k_a) factors and has h_l(k_a) replaced by
    h_l(k_a r); the result describes the exterior field of the layer with
    T_n^m, I_{n-1}^m and N_{n+1}^m densities:

        S[T] = b(r) T,  S[I] = c_1(r) I + d_1(r) N,  S[N] = c_2(r) I + d_2(r) N.

    Values are cached per radius, so repeated quadrature on the same nodes
    costs one extended-precision evaluation.

    Returns:
        complex array (5, 2, len(r)): rows b, c_1, d_1, c_2, d_2; second
        axis holds the value and the r-derivative.
    """
    _check_n(n)
    r = np.atleast_1d(np.asarray(r, dtype=float))
    out = np.zeros((5, 2, r.size), dtype=complex)
    for i, rr in enumerate(r):
        out[:, :, i] = _layer_terms_at(n, nm, float(rr))
    return out


def layer_radial_profiles(n: int, nm: NondimensionalMedium, r):
    """Radial profiles of the exterior single layer with density Y_n^m nu.

    S[Y nu](x) = [c(r) I_{n-1}(x_hat) + d(r) N_{n+1}(x_hat)]/(2n+1) with
    c = c_1 + c_2 and d = d_1 + d_2 from layer_radial_terms.

    Returns:
        (c, dc/dr, d, dd/dr) as complex arrays shaped like r.
    """
    t = layer_radial_terms(n, nm, r)
    c = t[1] + t[3]
    d = t[2] + t[4]
    return c[0], c[1], d[0], d[1]
