"""Special functions with log-scaled output.

Radial functions (spherical and cylindrical Bessel/Hankel) return
:class:`LogComplex` values so that orders up to ~100 at arguments near
1e-4 stay representable.  Angular functions (Legendre, scalar and vector
spherical harmonics) are ordinary complex arrays.

Spherical harmonics follow Y_n^m = C_n^m P_n^{|m|}(cos t) e^{i m p} with the
Condon-Shortley phase inside P, so Y_n^{-m} = conj(Y_n^m).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
import scipy.special as sps

from .logcomplex import LogComplex

EULER_GAMMA = 0.57721566490153286061
_RESCALE_BITS = 600
_BIG = 2.0 ** _RESCALE_BITS


class DomainError(ValueError):
    """Argument outside the domain of a special function."""


class SingularityError(ValueError):
    """Evaluation at a pole of a special function."""


# ---------------------------------------------------------------------------
# double factorial
# ---------------------------------------------------------------------------

@lru_cache(maxsize=None)
def _double_factorial_int(n: int) -> int:
    if n <= 0:
        return 1
    return n * _double_factorial_int(n - 2) if n < 400 else math.prod(range(n, 0, -2))


def log_double_factorial(n: int) -> float:
    """Natural log of n!! with (-1)!! = 0!! = 1.

    Exact integer arithmetic is used up to n = 10**4, lgamma above.
    """
    n = int(n)
    if n < -1:
        raise DomainError("double factorial needs n >= -1")
    if n <= 0:
        return 0.0
    if n <= 10000:
        return math.log(_double_factorial_int(n))
    k = n // 2
    if n % 2 == 0:
        return k * math.log(2.0) + math.lgamma(k + 1)
    # (2k+1)!! = (2k+1)! / (2^k k!)
    return math.lgamma(n + 1) - k * math.log(2.0) - math.lgamma(k + 1)


def double_factorial_lc(n: int) -> LogComplex:
    """n!! as a LogComplex built from the exact integer."""
    if n < -1:
        raise DomainError("double factorial needs n >= -1")
    return LogComplex.from_int(_double_factorial_int(max(int(n), 0)))


# ---------------------------------------------------------------------------
# spherical Bessel / Hankel
# ---------------------------------------------------------------------------

def _shift_down(v, mask):
    """Multiply entries selected by mask by 2**-_RESCALE_BITS."""
    return np.where(mask, np.ldexp(v.real, -_RESCALE_BITS) + 1j * np.ldexp(v.imag, -_RESCALE_BITS), v)


def _as_complex_array(z):
    return np.atleast_1d(np.asarray(z, dtype=np.complex128))


def _series_threshold(n: int) -> float:
    return 1e-2 * math.sqrt(2 * n + 3)


def _sph_j_series(n: int, z: np.ndarray):
    """Truncated small-argument series through the z**4 term."""
    c = 1.0 / double_factorial_lc(2 * n + 1)
    a = 1.0 / (2 * (2 * n + 3))
    b = 1.0 / (8 * (2 * n + 3) * (2 * n + 5))
    z2 = z * z
    zl = LogComplex.from_complex(z)
    val = c * (zl ** n) * (1 - a * z2 + b * z2 * z2)
    if n == 0:
        der = LogComplex.from_complex(-2 * a * z + 4 * b * z2 * z)
    else:
        der = c * (zl ** (n - 1)) * (n - (n + 2) * a * z2 + (n + 4) * b * z2 * z2)
    return val, der


def _miller_start(n: int, zmax: float) -> int:
    top = max(n, int(zmax) + 1)
    return top + 20 + int(math.sqrt(40.0 * top))


def _sph_j_miller(n: int, z: np.ndarray):
    """Downward recurrence, rescaled, normalized against j0 and j1."""
    nstart = _miller_start(n, float(np.max(np.abs(z))))
    f_next = np.zeros_like(z)
    f = np.full_like(z, 1e-30)
    ex = np.zeros(z.shape, dtype=np.int64)
    s_n = s_np1 = e_n = None
    for l in range(nstart, 0, -1):
        f_prev = (2 * l + 1) / z * f - f_next
        big = np.abs(f_prev) > _BIG
        if np.any(big):
            f_prev, f = _shift_down(f_prev, big), _shift_down(f, big)
            ex = ex + big * _RESCALE_BITS
        f_next, f = f, f_prev
        if l - 1 == n:
            s_n, s_np1, e_n = f.copy(), f_next.copy(), ex.copy()
    s0, s1 = f, f_next
    j0 = np.sin(z) / z
    j1 = np.sin(z) / z ** 2 - np.cos(z) / z
    small = np.abs(z) < 0.5
    if np.any(small):
        zs = z[small]
        z2 = zs * zs
        j1s = zs / 3 * (1 - z2 / 10 * (1 - z2 / 28 * (1 - z2 / 54 * (1 - z2 / 88))))
        j1 = j1.copy()
        j1[small] = j1s
    t = np.maximum(np.abs(s0), np.abs(s1))
    u0, u1 = s0 / t, s1 / t
    scale = (np.conj(u0) * j0 + np.conj(u1) * j1) / ((np.abs(u0) ** 2 + np.abs(u1) ** 2) * t)
    rel = e_n - ex  # true s_n = stored * 2**(e_n) relative to the common base
    val = LogComplex(s_n * scale, rel)
    nxt = LogComplex(s_np1 * scale, rel)
    der = (n / z) * val - nxt if n > 0 else -nxt
    return val, der


def spherical_bessel_j(n: int, z):
    """Spherical Bessel function j_n and its derivative.

    Args:
        n: order, n >= 0.
        z: complex argument (scalar or array); z = 0 is allowed.

    Returns:
        (value, derivative) as LogComplex arrays shaped like ``z``.
    """
    if n < 0:
        raise DomainError("order must be >= 0")
    zin = np.asarray(z, dtype=np.complex128)
    z = _as_complex_array(zin)
    m = LogComplex.zeros(z.shape)
    d = LogComplex.zeros(z.shape)
    zero = z == 0
    ser = (np.abs(z) < _series_threshold(n)) & ~zero
    rec = ~(ser | zero)
    if np.any(ser):
        v, dv = _sph_j_series(n, z[ser])
        m.m[ser], m.e[ser], d.m[ser], d.e[ser] = v.m, v.e, dv.m, dv.e
    if np.any(rec):
        v, dv = _sph_j_miller(n, z[rec])
        m.m[rec], m.e[rec], d.m[rec], d.e[rec] = v.m, v.e, dv.m, dv.e
    if np.any(zero):
        m0 = LogComplex.from_complex(np.where(zero, 1.0 if n == 0 else 0.0, 0.0))
        d0 = LogComplex.from_complex(np.where(zero, 1.0 / 3.0 if n == 1 else 0.0, 0.0))
        m = _select(zero, m0, m)
        d = _select(zero, d0, d)
    return _reshape(m, zin.shape), _reshape(d, zin.shape)


def _select(mask, a: LogComplex, b: LogComplex) -> LogComplex:
    return LogComplex(np.where(mask, a.m, b.m), np.where(mask, a.e, b.e))


def _reshape(x: LogComplex, shape) -> LogComplex:
    return LogComplex(x.m.reshape(shape), x.e.reshape(shape))


def _upward(n: int, z, c0, c1, coef):
    """Rescaled forward recurrence c_{l+1} = coef(l)/z c_l - c_{l-1}.

    Returns (c_n, c_{n+1}) as LogComplex.
    """
    a, b = c0.astype(np.complex128), c1.astype(np.complex128)
    ex = np.zeros(z.shape, dtype=np.int64)
    if n == 0:
        return LogComplex(a, ex), LogComplex(b, ex)
    for l in range(1, n + 1):
        c = coef(l) / z * b - a
        big = np.abs(c) > _BIG
        if np.any(big):
            c, b = _shift_down(c, big), _shift_down(b, big)
            ex = ex + big * _RESCALE_BITS
        a, b = b, c
    return LogComplex(a, ex), LogComplex(b, ex)


def spherical_bessel_y(n: int, z):
    """Spherical Bessel function of the second kind y_n and its derivative."""
    zin = np.asarray(z, dtype=np.complex128)
    z = _as_complex_array(zin)
    if np.any(z == 0):
        raise SingularityError("y_n is singular at z = 0")
    y0 = -np.cos(z) / z
    y1 = -np.cos(z) / z ** 2 - np.sin(z) / z
    val, nxt = _upward(n, z, y0, y1, lambda l: 2 * l + 1)
    der = (n / z) * val - nxt if n > 0 else -nxt
    return _reshape(val, zin.shape), _reshape(der, zin.shape)


def spherical_hankel_h1(n: int, z):
    """Spherical Hankel function h_n = j_n + i y_n and its derivative.

    The first-kind part comes from :func:`spherical_bessel_j` so the real
    part stays accurate where j_n is tiny.
    """
    if n < 0:
        raise DomainError("order must be >= 0")
    zin = np.asarray(z, dtype=np.complex128)
    if np.any(zin == 0):
        raise SingularityError("h_n is singular at z = 0")
    j, jd = spherical_bessel_j(n, zin)
    y, yd = spherical_bessel_y(n, zin)
    return j + 1j * y, jd + 1j * yd


def spherical_jh_mp(n: int, z, dps: int = 50):
    """j_n(z), j_n'(z), h_n(z), h_n'(z) as mpmath numbers at ``dps`` digits.

    Used where literal coefficient formulas cancel to many digits.
    """
    with mpmath.workdps(dps):
        z = mpmath.mpmathify(z)
        pre = mpmath.sqrt(mpmath.pi / (2 * z))
        nu = mpmath.mpf(n) + mpmath.mpf(1) / 2
        j = pre * mpmath.besselj(nu, z)
        y = pre * mpmath.bessely(nu, z)
        jp = pre * mpmath.besselj(nu + 1, z)
        yp = pre * mpmath.bessely(nu + 1, z)
        jd = (n / z) * j - jp
        yd = (n / z) * y - yp
        h = j + 1j * y
        hd = jd + 1j * yd
        return +j, +jd, +h, +hd


# ---------------------------------------------------------------------------
# cylindrical Bessel / Hankel
# ---------------------------------------------------------------------------

def _cyl_j_series(n: int, z):
    """Power series of J_n with log-scaled prefactor (z/2)^n / n!."""
    w = -(z * z) / 4
    total = np.zeros_like(z)
    dtotal = np.zeros_like(z)
    term = np.ones_like(z)
    for k in range(0, 200):
        if k > 0:
            term = term * w / (k * (n + k))
        total = total + term
        dtotal = dtotal + term * (n + 2 * k)
        if np.all(np.abs(term) <= 1e-18 * np.abs(total)):
            break
    half = LogComplex.from_complex(z / 2)
    pre = (half ** n) / LogComplex.from_int(math.factorial(n))
    val = pre * total
    if n == 0:
        der = None
    else:
        # d/dz (z/2)^{n+2k} = (n+2k)/2 (z/2)^{n+2k-1}
        der = (half ** (n - 1)) / LogComplex.from_int(math.factorial(n)) * (dtotal / 2)
    return val, der


def _cyl_j_recurrence(n: int, z):
    nstart = _miller_start(n, float(np.max(np.abs(z))))
    f_next = np.zeros_like(z)
    f = np.full_like(z, 1e-30)
    ex = np.zeros(z.shape, dtype=np.int64)
    norm = np.zeros_like(z)  # running 2 sum J_2k on the current scale
    s_n = s_np1 = e_n = None
    for l in range(nstart, 0, -1):
        if l % 2 == 0:
            norm = norm + 2 * f
        f_prev = 2 * l / z * f - f_next
        big = np.abs(f_prev) > _BIG
        if np.any(big):
            f_prev, f, norm = _shift_down(f_prev, big), _shift_down(f, big), _shift_down(norm, big)
            ex = ex + big * _RESCALE_BITS
        f_next, f = f, f_prev
        if l - 1 == n:
            s_n, s_np1, e_n = f.copy(), f_next.copy(), ex.copy()
    norm = norm + f
    rel = e_n - ex
    return LogComplex(s_n / norm, rel), LogComplex(s_np1 / norm, rel)


def _cyl_y01_series(z):
    """Y0 and Y1 from their logarithmic power series (|z| <= 8)."""
    w = -(z * z) / 4
    j0 = np.zeros_like(z)
    j1 = np.zeros_like(z)
    s0 = np.zeros_like(z)
    s1 = np.zeros_like(z)
    t0 = np.ones_like(z)  # w^k/(k!)^2
    t1 = z / 2  # (z/2) w^k/(k!(k+1)!)
    hk = 0.0
    for k in range(0, 120):
        if k > 0:
            t0 = t0 * w / (k * k)
            t1 = t1 * w / (k * (k + 1))
            hk += 1.0 / k
        j0 = j0 + t0
        j1 = j1 + t1
        s0 = s0 + hk * t0
        psi_sum = 2 * hk - 2 * EULER_GAMMA + 1.0 / (k + 1)
        s1 = s1 + psi_sum * t1
        if k > 4 and np.all(np.abs(t0) < 1e-18) and np.all(np.abs(t1) < 1e-18):
            break
    lg = np.log(z / 2)
    y0 = 2 / np.pi * (lg + EULER_GAMMA) * j0 - 2 / np.pi * s0
    y1 = -2 / (np.pi * z) + 2 / np.pi * lg * j1 - s1 / np.pi
    return y0, y1


def _cyl_y01(z):
    y0 = np.empty_like(z)
    y1 = np.empty_like(z)
    small = np.abs(z) <= 8
    if np.any(small):
        y0[small], y1[small] = _cyl_y01_series(z[small])
    if np.any(~small):
        y0[~small] = sps.yv(0, z[~small])
        y1[~small] = sps.yv(1, z[~small])
    return y0, y1


def _cyl_j(n: int, z):
    """J_n and J_{n+1} as LogComplex arrays (z nonzero entries allowed to be 0)."""
    val = LogComplex.zeros(z.shape)
    nxt = LogComplex.zeros(z.shape)
    ser = np.abs(z) <= 2 * math.sqrt(n + 1)
    for mask, fn in ((ser, "series"), (~ser, "rec")):
        if not np.any(mask):
            continue
        if fn == "series":
            v, _ = _cyl_j_series(n, z[mask])
            w, _ = _cyl_j_series(n + 1, z[mask])
        else:
            v, w = _cyl_j_recurrence(n, z[mask])
        val.m[mask], val.e[mask], nxt.m[mask], nxt.e[mask] = v.m, v.e, w.m, w.e
    return val, nxt


def cylindrical_bessel(kind: str, n: int, z):
    """Cylindrical Bessel J, Y or Hankel H1 of integer order with derivative.

    Args:
        kind: one of "J", "Y", "H1".
        n: order >= 0.
        z: argument (scalar or array).

    Returns:
        (value, derivative) as LogComplex.
    """
    if n < 0:
        raise DomainError("order must be >= 0")
    kind = kind.upper()
    if kind not in ("J", "Y", "H1"):
        raise ValueError(f"unknown kind {kind!r}")
    zin = np.asarray(z, dtype=np.complex128)
    z = _as_complex_array(zin)
    zero = z == 0
    if kind != "J" and np.any(zero):
        raise SingularityError(f"{kind}_n is singular at z = 0")
    zsafe = np.where(zero, 1.0, z)
    jv, jn1 = _cyl_j(n, z)
    if np.any(zero):
        jv = _select(zero, LogComplex.from_complex(np.where(zero, 1.0 if n == 0 else 0.0, 0)), jv)
        jn1 = _select(zero, LogComplex.zeros(z.shape), jn1)
    jd = (n / zsafe) * jv - jn1
    if np.any(zero):
        jd = _select(zero, LogComplex.from_complex(np.where(zero, 0.5 if n == 1 else 0.0, 0)), jd)
    if kind == "J":
        return _reshape(jv, zin.shape), _reshape(jd, zin.shape)
    y0, y1 = _cyl_y01(z)
    yv, yn1 = _upward(n, z, y0, y1, lambda l: 2 * l)
    yd = (n / z) * yv - yn1
    if kind == "Y":
        return _reshape(yv, zin.shape), _reshape(yd, zin.shape)
    return _reshape(jv + 1j * yv, zin.shape), _reshape(jd + 1j * yd, zin.shape)


# ---------------------------------------------------------------------------
# Legendre functions and spherical harmonics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SphericalHarmonicIndex:
    """Degree/order pair with |m| <= n."""

    n: int
    m: int

    def __post_init__(self):
        if self.n < 0 or abs(self.m) > self.n:
            raise DomainError(f"invalid harmonic index (n={self.n}, m={self.m})")


@dataclass(frozen=True)
class VectorHarmonicTriple:
    """Cartesian values of the I, T, N vector harmonics at sample points."""

    I: np.ndarray
    T: np.ndarray
    N: np.ndarray


def normalized_legendre(lmax: int, theta):
    """Table of Pbar_l^m(cos theta) for 0 <= m <= l <= lmax.

    Pbar_l^m = C_l^m P_l^m with the Condon-Shortley phase, so that
    Y_l^m = Pbar_l^m e^{i m phi} is orthonormal on the sphere.

    Returns:
        array of shape (lmax+1, lmax+1) + theta.shape.
    """
    theta = np.asarray(theta, dtype=float)
    x = np.cos(theta)
    s = np.sin(theta)
    P = np.zeros((lmax + 1, lmax + 1) + theta.shape)
    P[0, 0] = 1.0 / math.sqrt(4 * math.pi)
    for m in range(1, lmax + 1):
        P[m, m] = -math.sqrt((2 * m + 1) / (2.0 * m)) * s * P[m - 1, m - 1]
    for m in range(0, lmax):
        P[m + 1, m] = math.sqrt(2 * m + 3) * x * P[m, m]
    for m in range(0, lmax + 1):
        for l in range(m + 2, lmax + 1):
            a = math.sqrt((4.0 * l * l - 1) / (l * l - m * m))
            b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1) ** 2 - 1))
            P[l, m] = a * (x * P[l - 1, m] - b * P[l - 2, m])
    return P


def _pbar(P, l, m):
    """Pbar_l^m from a table, with Pbar_l^{-m} = (-1)^m Pbar_l^m."""
    if abs(m) > l or l < 0:
        return np.zeros(P.shape[2:])
    v = P[l, abs(m)]
    return v if m >= 0 else (-1) ** m * v


def _check_theta(theta):
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < -1e-14) or np.any(theta > math.pi + 1e-14):
        raise DomainError("theta must lie in [0, pi]")
    return theta


def spherical_harmonic(idx: SphericalHarmonicIndex, theta, phi):
    """Y_n^m(theta, phi) with Y_n^{-m} = conj(Y_n^m)."""
    if not isinstance(idx, SphericalHarmonicIndex):
        idx = SphericalHarmonicIndex(*idx)
    theta = _check_theta(theta)
    P = normalized_legendre(idx.n, theta)
    out = P[idx.n, abs(idx.m)] * np.exp(1j * abs(idx.m) * np.asarray(phi, dtype=float))
    return out if idx.m >= 0 else np.conj(out)


def harmonic_derivatives(n: int, m: int, theta, phi):
    """Y_n^m, dY/dtheta and (1/sin theta) dY/dphi, finite at the poles.

    dPbar/dtheta uses the ladder relation, which has no pole.  The phi term
    uses the analytic limit when sin(theta) < 1e-8.
    """
    theta = _check_theta(theta)
    phi = np.asarray(phi, dtype=float)
    am = abs(m)
    if am > n:
        z = np.zeros(np.broadcast(theta, phi).shape, dtype=complex)
        return z, z, z
    P = normalized_legendre(n, theta)
    p = P[n, am]
    up = _pbar(P, n, am + 1)
    dn = _pbar(P, n, am - 1)
    dp = 0.5 * (math.sqrt((n - am) * (n + am + 1)) * up - math.sqrt((n + am) * (n - am + 1)) * dn)
    s = np.sin(theta)
    pole = s < 1e-8
    # away from theta = 0, pi the quotient is exact; P_n^m carries sin^m, so for
    # m >= 2 it stays accurate inside the pole band too, and vanishes at the pole
    with np.errstate(divide="ignore", invalid="ignore"):
        p_over_s = np.where(s > 0, p / np.where(s > 0, s, 1.0), 0.0)
    if am == 1 and np.any(pole):
        cn = math.sqrt((2 * n + 1) / (4 * math.pi) / (n * (n + 1)))
        north = -cn * n * (n + 1) / 2
        south = -cn * (-1) ** (n + 1) * n * (n + 1) / 2
        p_over_s = np.where(pole, np.where(np.cos(theta) > 0, north, south), p_over_s)
    e = np.exp(1j * am * phi)
    y = p * e
    dth = dp * e
    dph = 1j * am * p_over_s * e
    if m < 0:
        y, dth, dph = np.conj(y), np.conj(dth), np.conj(dph)
    return y, dth, dph


def spherical_frame(theta, phi):
    """Unit vectors (r_hat, theta_hat, phi_hat) stacked on the last axis."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st, ct, sp, cp = np.sin(theta), np.cos(theta), np.sin(phi), np.cos(phi)
    rh = np.stack([st * cp, st * sp, ct * np.ones_like(cp)], axis=-1)
    th = np.stack([ct * cp, ct * sp, -st * np.ones_like(cp)], axis=-1)
    ph = np.stack([-sp * np.ones_like(ct), cp * np.ones_like(ct), np.zeros_like(ct * cp)], axis=-1)
    return rh, th, ph


def surface_gradient(n: int, m: int, theta, phi):
    """Cartesian surface gradient of Y_n^m on the unit sphere."""
    _, dth, dph = harmonic_derivatives(n, m, theta, phi)
    _, th, ph = spherical_frame(theta, phi)
    return dth[..., None] * th + dph[..., None] * ph


def vector_spherical_harmonics(n: int, m: int, theta, phi) -> VectorHarmonicTriple:
    """The triple (I_n^m, T_n^m, N_n^m) in Cartesian components.

    I_n^m = grad Y_{n+1}^m + (n+1) Y_{n+1}^m nu,
    T_n^m = grad Y_n^m x nu,
    N_n^m = -grad Y_{n-1}^m + n Y_{n-1}^m nu.
    Components whose harmonic index is out of range are returned as zero.
    """
    rh, _, _ = spherical_frame(theta, phi)

    def y_and_grad(l):
        if l < 0 or abs(m) > l:
            z = np.zeros(rh.shape[:-1], dtype=complex)
            return z, np.zeros(rh.shape, dtype=complex)
        y, _, _ = harmonic_derivatives(l, m, theta, phi)
        return y, surface_gradient(l, m, theta, phi)

    yp, gp = y_and_grad(n + 1)
    y0, g0 = y_and_grad(n)
    ym, gm = y_and_grad(n - 1)
    I = gp + (n + 1) * yp[..., None] * rh
    T = np.cross(g0, rh)
    N = -gm + n * ym[..., None] * rh
    return VectorHarmonicTriple(I=I, T=T, N=N)


# ---------------------------------------------------------------------------
# solid harmonics R_l^m = r^l Y_l^m: Cartesian gradients and Hessians
# ---------------------------------------------------------------------------

def _ladder(l: int, coeffs: np.ndarray):
    """Apply d/dx, d/dy, d/dz to sum_m c_m R_l^m (standard CS harmonics).

    Args:
        l: degree of the input solid harmonic combination.
        coeffs: array of length 2l+1 indexed by m + l.

    Returns:
        array (3, 2l-1) of coefficients on R_{l-1}^{m'} (index m' + l - 1).
    """
    out = np.zeros((3, max(2 * l - 1, 0)), dtype=complex)
    if l == 0:
        return out
    a = math.sqrt((2 * l + 1) / (2 * l - 1))
    for m in range(-l, l + 1):
        c = coeffs[m + l]
        if c == 0:
            continue
        dz = a * math.sqrt((l - m) * (l + m))
        dp = a * math.sqrt(max((l - m) * (l - m - 1), 0))
        dm = -a * math.sqrt(max((l + m) * (l + m - 1), 0))
        if abs(m) <= l - 1:
            out[2, m + l - 1] += c * dz
        if abs(m + 1) <= l - 1:
            out[0, m + 1 + l - 1] += c * dp / 2
            out[1, m + 1 + l - 1] += c * dp / 2j
        if abs(m - 1) <= l - 1:
            out[0, m - 1 + l - 1] += c * dm / 2
            out[1, m - 1 + l - 1] -= c * dm / 2j
    return out


def basis_to_standard(n: int, f) -> np.ndarray:
    """Convert coefficients on Y_n^m (this module) to CS-standard coefficients."""
    f = np.asarray(f, dtype=complex)
    ms = np.arange(-n, n + 1)
    return np.where(ms < 0, (-1.0) ** np.abs(ms), 1.0) * f


def standard_harmonic_table(l: int, theta, phi):
    """Array (2l+1, ...) of CS-standard Y_l^m for m = -l..l."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    shape = np.broadcast(theta, phi).shape
    if l < 0:
        return np.zeros((0,) + shape, dtype=complex)
    P = normalized_legendre(l, theta)
    out = np.zeros((2 * l + 1,) + shape, dtype=complex)
    for m in range(0, l + 1):
        y = P[l, m] * np.exp(1j * m * phi)
        out[m + l] = y
        if m:
            out[-m + l] = (-1) ** m * np.conj(y)
    return out


@dataclass(frozen=True)
class AngularBundle:
    """Angular data of a degree-n combination sum_m f_m Y_n^m at unit vectors.

    Y: scalar combination; G: Cartesian gradient of the solid harmonic at the
    unit vector (equals grad_S Y + n Y x_hat); H: Hessian of the solid harmonic.
    """

    n: int
    Y: np.ndarray
    G: np.ndarray
    H: np.ndarray
    xhat: np.ndarray


def angular_bundle(n: int, f, theta, phi) -> AngularBundle:
    """Evaluate Y, solid-harmonic gradient and Hessian for coefficients f_m."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c = basis_to_standard(n, f)
    rh, _, _ = spherical_frame(theta, phi)
    y = np.tensordot(c, standard_harmonic_table(n, theta, phi), axes=(0, 0))
    shape = y.shape
    G = np.zeros(shape + (3,), dtype=complex)
    H = np.zeros(shape + (3, 3), dtype=complex)
    if n >= 1:
        g = _ladder(n, c)
        t1 = standard_harmonic_table(n - 1, theta, phi)
        for i in range(3):
            G[..., i] = np.tensordot(g[i], t1, axes=(0, 0))
        if n >= 2:
            t2 = standard_harmonic_table(n - 2, theta, phi)
            for i in range(3):
                hh = _ladder(n - 1, g[i])
                for j in range(3):
                    H[..., i, j] = np.tensordot(hh[j], t2, axes=(0, 0))
    return AngularBundle(n=n, Y=y, G=G, H=H, xhat=rh)


# ---------------------------------------------------------------------------
# Lambert W, principal branch
# ---------------------------------------------------------------------------

def lambert_w0(x: float) -> float:
    """Principal branch W0 of w e^w = x for x >= -1/e (Halley iteration)."""
    x = float(x)
    branch = -math.exp(-1.0)
    if x < branch:
        if x > branch - 1e-15:
            x = branch
        else:
            raise DomainError("lambert_w0 needs x >= -1/e")
    if x == 0.0:
        return 0.0
    if x == branch:
        return -1.0
    if x < -0.25:
        p = math.sqrt(2.0 * (math.e * x + 1.0))
        w = -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p ** 3
    elif x < 3.0:
        w = math.log1p(x) * (1.0 - math.log1p(math.log1p(x)) / (2.0 + math.log1p(x)))
    else:
        lx = math.log(x)
        w = lx - math.log(lx)
    for _ in range(60):
        ew = math.exp(w)
        f = w * ew - x
        wp1 = w + 1.0
        if wp1 == 0.0:
            break
        step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1))
        w -= step
        if abs(step) <= 1e-16 * (1.0 + abs(w)):
            break
    return w
