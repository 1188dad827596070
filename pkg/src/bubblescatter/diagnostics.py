"""Shell norms, localization and resonance ratios, stress energies and regime flags.

Regions are radial shells r0 < |x| < r1.  For a ShellRegion (zeta1, zeta2, R)
the interior boundary layer is zeta1 < r < 1, the exterior boundary layer is
1 < r < zeta2 and the exterior reference ball is 1 < r < R.

Two integration paths are provided for every shell norm:

* ``modal_closed_form``: the angular integral is done exactly through the
  orthogonality of the harmonics and the radial integral by Gauss-Legendre
  quadrature of the exact radial profiles (64 nodes, doubled until two
  successive values agree to 1e-10);
* ``quadrature``: a full product rule, Gauss in r and cos(theta) and the
  trapezoid rule in phi, sampling the pointwise field evaluators.

All magnitudes are carried as LogComplex so that unnormalized solutions at
n = 60 stay representable; ratios are returned as floats.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .logcomplex import LogComplex
from .medium import NondimensionalMedium
from .solver2d import (ModalSolution2D, _interior_sq, _scattered_sq, eval_interior_2d,
                       eval_scattered_2d)
from .solver3d import (ModalSolution3D, _gauss, energy_density, incident_profiles,
                       interior_profiles, lame_stress, scalar_field, scattered_profiles, vector_field)
from .specfun import angular_bundle, lambert_w0

METHODS = ("modal_closed_form", "quadrature")
FIELDS = ("u", "us", "ui", "total")
PHENOMENA = ("BL", "SR", "QMR", "SC")
REGIME_FIELDS = ("u_interior", "us_exterior", "u_exterior")
ZETA2_TAU_NOT_SUBUNIT = "ZETA2_TAU_NOT_SUBUNIT"

RADIAL_NODES = 64
RADIAL_RTOL = 1e-10
RADIAL_MAX_NODES = 1024


# ---------------------------------------------------------------------------
# regions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ShellRegion:
    """Boundary layers zeta1 < r < 1 and 1 < r < zeta2 inside the ball B_R."""

    zeta1: float
    zeta2: float
    R: float

    def __post_init__(self):
        if not (0 < self.zeta1 < 1 < self.zeta2 < self.R):
            raise ValueError("need 0 < zeta1 < 1 < zeta2 < R")

    def stress_assumption(self, nm: NondimensionalMedium) -> bool:
        """True when zeta2 * tau < 1, the standing assumption of the energy bounds."""
        return self.zeta2 * nm.tau < 1

    @property
    def interior_shell(self):
        return (self.zeta1, 1.0)

    @property
    def interior_core(self):
        return (0.0, self.zeta1)

    @property
    def exterior_shell(self):
        return (1.0, self.zeta2)

    @property
    def exterior_far(self):
        return (self.zeta2, self.R)

    @property
    def exterior_ball(self):
        return (1.0, self.R)


# ---------------------------------------------------------------------------
# radial integration helpers
# ---------------------------------------------------------------------------

def _radial_integral_vec(fun, a: float, b: float, m0: int = RADIAL_NODES, rtol: float = RADIAL_RTOL,
                         max_nodes: int = RADIAL_MAX_NODES):
    """Gauss-Legendre integral of a vector-valued fun(r) -> (len(r), K), with node doubling."""
    m = m0
    x, w = _gauss(a, b, m)
    prev = w @ np.asarray(fun(x))
    while m < max_nodes:
        m *= 2
        x, w = _gauss(a, b, m)
        cur = w @ np.asarray(fun(x))
        # components are compared against the largest one, so a small cross
        # term that cancels to rounding does not force further doubling
        if np.max(np.abs(cur - prev)) <= rtol * max(np.max(np.abs(cur)), 1e-300):
            return cur
        prev = cur
    return prev


def _check_region(field_name: str, r0: float, r1: float):
    if not 0 <= r0 < r1:
        raise ValueError("need 0 <= r0 < r1")
    if field_name == "u" and r1 > 1:
        raise ValueError("the interior field lives in |x| <= 1")
    if field_name in ("us", "total") and r0 < 1:
        raise ValueError("the exterior fields live in |x| >= 1")


# ---------------------------------------------------------------------------
# modal closed form (3D)
# ---------------------------------------------------------------------------

def vector_gradient_integrand(n: int, a, da, b, db, r):
    """Angular integral of |grad(a Y x_hat + b G)|^2 per unit sum |f_m|^2."""
    ar, br = a / r, b / r
    p = da - (n + 1) * ar
    q = db - (n - 1) * br
    q2 = n * (2 * n + 1)
    cross = ((n + 1) * p * np.conj(ar) + n * p * np.conj(q) + n * (n - 1) * p * np.conj(br)
             + n * np.abs(ar) ** 2 + (n * n + n) * ar * np.conj(q)
             + (n - 1) * q2 * ar * np.conj(br) + (n - 1) * q2 * q * np.conj(br))
    return (np.abs(p) ** 2 + (q2 + 3) * np.abs(ar) ** 2 + q2 * np.abs(q) ** 2
            + (n - 1) * (2 * n - 1) * q2 * np.abs(br) ** 2 + 2 * cross.real)


def vector_value_integrand(n: int, a, b):
    """Angular integral of |a Y x_hat + b G|^2 per unit sum |f_m|^2."""
    return np.abs(a + n * b) ** 2 + n * (n + 1) * np.abs(b) ** 2


def scalar_integrands(n: int, g, dg, r):
    """Angular integrals of |g Y|^2 and |grad(g Y)|^2 per unit sum |f_m|^2."""
    return np.abs(g) ** 2, np.abs(dg) ** 2 + n * (n + 1) * np.abs(g) ** 2 / r ** 2


def _rel(s: LogComplex, ref: LogComplex) -> complex:
    if bool(s.is_zero):
        return 0.0
    return complex((s / ref).to_complex())


def _field_scale(sol: ModalSolution3D, name: str) -> LogComplex:
    """Scale used to report the field (the larger of the parts for the total)."""
    probe = np.array([1.0])
    if name == "u":
        return interior_profiles(sol, probe)[0]
    us = scattered_profiles(sol, probe)[0]
    ui = incident_profiles(sol.incident, sol.medium, probe)[0] * sol.output_scale
    if name == "us":
        return us
    if name == "ui":
        return ui
    return us if float(us.log10_magnitude) >= float(ui.log10_magnitude) else ui


def _vector_profiles(sol: ModalSolution3D, name: str, r, ref: LogComplex):
    """(a, a', b, b') of a vector field relative to the scale ref."""
    out = np.zeros((4,) + np.shape(r), dtype=complex)
    if name in ("us", "total"):
        s, *prof = scattered_profiles(sol, r)
        out += _rel(s, ref) * np.array(prof)
    if name in ("ui", "total"):
        s, *prof = incident_profiles(sol.incident, sol.medium, r)
        out += _rel(s * sol.output_scale, ref) * np.array(prof)
    return out


def _modal_sq(sol: ModalSolution3D, name: str, r0: float, r1: float, gradient: bool) -> LogComplex:
    n = sol.n
    ref = _field_scale(sol, name)
    fsq = sol.incident.f_norm_sq

    if name == "u":
        def fun(r):
            _, g, dg = interior_profiles(sol, r)
            val, grd = scalar_integrands(n, g, dg, r)
            return ((grd if gradient else val) * r ** 2)[:, None]
    else:
        def fun(r):
            a, da, b, db = _vector_profiles(sol, name, r, ref)
            f = vector_gradient_integrand(n, a, da, b, db, r) if gradient else vector_value_integrand(n, a, b)
            return (f * r ** 2)[:, None]

    val = float(_radial_integral_vec(fun, r0, r1)[0]) * fsq
    return ref.abs() ** 2 * max(val, 0.0)


# ---------------------------------------------------------------------------
# full product quadrature
# ---------------------------------------------------------------------------

def angular_nodes(n: int, order: int | None = None):
    """Unit vectors and weights of Gauss(cos theta) x trapezoid(phi), order >= 2n + 8."""
    order = max(order or 0, 2 * n + 8)
    t, wt = np.polynomial.legendre.leggauss(order)
    phi = 2 * np.pi * np.arange(order) / order
    th = np.arccos(t)
    T, P = np.meshgrid(th, phi, indexing="ij")
    xh = np.stack([np.sin(T) * np.cos(P), np.sin(T) * np.sin(P), np.cos(T)], axis=-1)
    w = np.broadcast_to(wt[:, None] * (2 * np.pi / order), T.shape)
    return xh, w


def _pointwise(sol: ModalSolution3D, name: str, r: float, ang, ref: LogComplex):
    """(value, grad, div) of a field at radius r on the angular grid, relative to ref.

    The harmonics in ``ang`` are sampled pointwise once and reused for every
    radius; the radial profiles are the same ones the field evaluators use.
    """
    rr = np.array([r])
    if name == "u":
        s, g, dg = interior_profiles(sol, rr)
        val, grad = scalar_field(sol.n, g[0], dg[0], r, ang)
        c = _rel(s, ref)
        return c * val, c * grad, None
    a, da, b, db = _vector_profiles(sol, name, rr, ref)[:, 0]
    return vector_field(sol.n, a, da, b, db, r, ang)


def _relative(fs, ref: LogComplex):
    c = _rel(fs.scale, ref)
    div = None if fs.div is None else c * fs.div
    return c * fs.value, c * fs.grad, div


def _angular_setup(sol: ModalSolution3D, order: int | None):
    xh, w = angular_nodes(sol.n, order)
    theta = np.arccos(np.clip(xh[..., 2], -1, 1))
    phi = np.arctan2(xh[..., 1], xh[..., 0])
    return angular_bundle(sol.n, sol.incident.f, theta, phi), w


def _quadrature_sq(sol: ModalSolution3D, name: str, r0: float, r1: float, gradient: bool,
                   order: int | None = None) -> LogComplex:
    ang, w = _angular_setup(sol, order)
    ref = _field_scale(sol, name)

    def fun(rs):
        out = np.empty((len(rs), 1))
        for i, r in enumerate(rs):
            val, grad, _ = _pointwise(sol, name, r, ang, ref)
            dens = np.abs(grad) ** 2 if gradient else np.abs(val) ** 2
            axes = tuple(range(2, dens.ndim))
            if axes:
                dens = dens.sum(axis=axes)
            out[i, 0] = np.sum(w * dens) * r * r
        return out

    return ref.abs() ** 2 * float(_radial_integral_vec(fun, r0, r1)[0])


# ---------------------------------------------------------------------------
# 2D shell norms
# ---------------------------------------------------------------------------

def _quadrature_sq_2d(sol: ModalSolution2D, name: str, r0: float, r1: float, gradient: bool,
                      order: int | None = None) -> LogComplex:
    m = max(order or 0, 2 * sol.n + 8)
    th = 2 * np.pi * np.arange(m) / m
    xh = np.stack([np.cos(th), np.sin(th)], axis=-1)
    ev = eval_interior_2d if name == "u" else eval_scattered_2d
    ref = ev(sol, np.array([[1.0, 0.0]])).scale

    def fun(rs):
        rs = np.asarray(rs, dtype=float)
        val, grad, _ = _relative(ev(sol, rs[:, None, None] * xh[None]), ref)
        dens = np.abs(grad) ** 2 if gradient else np.abs(val) ** 2
        dens = dens.reshape(len(rs), -1).sum(axis=1)
        return (dens * (2 * np.pi / m) * rs)[:, None]

    return ref.abs() ** 2 * float(_radial_integral_vec(fun, r0, r1)[0])


def _modal_sq_2d(sol: ModalSolution2D, name: str, r0: float, r1: float) -> LogComplex:
    val = _interior_sq(sol, r0, r1) if name == "u" else _scattered_sq(sol, r0, r1)
    return sol.scale.abs() ** 2 * float(val)


# ---------------------------------------------------------------------------
# public norms and ratios
# ---------------------------------------------------------------------------

def shell_norm(sol, field_name: str, r0: float, r1: float, method: str = "modal_closed_form",
               gradient: bool = False, order: int | None = None) -> LogComplex:
    """L^2 norm of a field (or its gradient) over r0 < |x| < r1.

    Args:
        sol: ModalSolution3D or ModalSolution2D.
        field_name: "u" (interior), "us" (scattered), "ui" (incident, 3D only)
            or "total" (exterior total field, 3D only).
        method: "modal_closed_form" or "quadrature".
        gradient: integrate |grad v|^2 instead of |v|^2.
        order: minimum angular node count for the quadrature path.

    Raises:
        ValueError: unknown field or method, a region outside the field's
            domain, or a method not available for the solution's dimension.
    """
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    if field_name not in FIELDS:
        raise ValueError(f"field must be one of {FIELDS}")
    _check_region(field_name, r0, r1)
    if isinstance(sol, ModalSolution2D):
        if field_name not in ("u", "us"):
            raise ValueError("2D solutions expose the fields 'u' and 'us'")
        if method == "modal_closed_form":
            if gradient:
                raise ValueError("modal_closed_form gradient norms are implemented for 3D solutions")
            return _modal_sq_2d(sol, field_name, r0, r1).sqrt()
        return _quadrature_sq_2d(sol, field_name, r0, r1, gradient, order).sqrt()
    if not isinstance(sol, ModalSolution3D):
        raise TypeError("expected a ModalSolution3D or ModalSolution2D")
    if method == "modal_closed_form":
        return _modal_sq(sol, field_name, r0, r1, gradient).sqrt()
    return _quadrature_sq(sol, field_name, r0, r1, gradient, order).sqrt()


def _ratio(num: LogComplex, den: LogComplex) -> float:
    return float((num / den).to_complex().real)


def incident_domain_norm(sol) -> LogComplex:
    """||u^i||_{L^2(D)} in the units of the returned fields."""
    if isinstance(sol, ModalSolution2D):
        return sol.ui_norm if not sol.incident.normalized else LogComplex.from_complex(1.0)
    return sol.ui_norm * sol.output_scale


def localization_ratios(sol, region: ShellRegion, method: str = "modal_closed_form") -> tuple:
    """(eta_u, eta_us): the norm outside the boundary layer over the norm of the whole domain.

    eta_u = ||u||_{|x| < zeta1} / ||u||_D and
    eta_us = ||u^s||_{zeta2 < |x| < R} / ||u^s||_{1 < |x| < R}.
    """
    eta_u = _ratio(shell_norm(sol, "u", *region.interior_core, method=method),
                   shell_norm(sol, "u", 0.0, 1.0, method=method))
    eta_us = _ratio(shell_norm(sol, "us", *region.exterior_far, method=method),
                    shell_norm(sol, "us", *region.exterior_ball, method=method))
    return eta_u, eta_us


def localization_reference(n: int, region: ShellRegion) -> tuple:
    """Squared-ratio references zeta1^(2n+3) and (1-(zeta2/R)^(2n-1))/(zeta2^(2n-1)(1-R^(1-2n)))."""
    z1, z2, R = region.zeta1, region.zeta2, region.R
    m = 2 * n - 1
    return z1 ** (2 * n + 3), (1 - (z2 / R) ** m) / (z2 ** m * (1 - R ** (-m)))


def resonance_ratios(sol: ModalSolution3D, region: ShellRegion, method: str = "modal_closed_form") -> tuple:
    """(||grad u||_{interior layer}, ||grad u^s||_{exterior layer}) divided by ||u^i||_D."""
    ui = incident_domain_norm(sol)
    gu = shell_norm(sol, "u", *region.interior_shell, method=method, gradient=True)
    gs = shell_norm(sol, "us", *region.exterior_shell, method=method, gradient=True)
    return _ratio(gu, ui), _ratio(gs, ui)


def resonance_bounds(n: int, region: ShellRegion, nm: NondimensionalMedium) -> tuple:
    """Analytic lower bounds for the two resonance ratios.

    n^2 sqrt(1 - zeta1) / (3 tau^(n+2) delta) and
    n k sqrt(10 (zeta2 - 1)) / (3 sqrt(3 zeta2) L^(3/2) tau^(n-1)).
    """
    z1, z2 = region.zeta1, region.zeta2
    lt = math.log(nm.tau)
    b_u = math.exp(math.log(n * n * math.sqrt(1 - z1) / (3 * nm.delta)) - (n + 2) * lt)
    b_s = math.exp(math.log(n * nm.k * math.sqrt(10 * (z2 - 1)) / (3 * math.sqrt(3 * z2) * nm.L ** 1.5))
                   - (n - 1) * lt)
    return b_u, b_s


# ---------------------------------------------------------------------------
# stress energies
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StressEnergies:
    """Energies over the exterior boundary layer (LogComplex, fields' units).

    E_u, E_us, E_ui use Re[sigma(v) : conj(grad v)]; Rest is the real part of
    the two cross integrals sigma(u^s) : conj(grad u^i) + sigma(u^i) : conj(grad u^s);
    E_u_complex keeps the imaginary part of the total.
    """

    E_u: LogComplex
    E_us: LogComplex
    E_ui: LogComplex
    Rest: LogComplex
    E_u_complex: LogComplex
    identity_residual: float


def stress_energies(sol: ModalSolution3D, region: ShellRegion, order: int | None = None) -> StressEnergies:
    """Quadrature of the energy integrands over 1 < |x| < zeta2."""
    nm = sol.medium
    ang, w = _angular_setup(sol, order)
    s_s = _field_scale(sol, "us")
    s_i = _field_scale(sol, "ui")
    ref = s_s if float(s_s.log10_magnitude) >= float(s_i.log10_magnitude) else s_i

    def fun(rs):
        out = np.empty((len(rs), 5), dtype=complex)
        for i, r in enumerate(rs):
            _, gs, ds = _pointwise(sol, "us", r, ang, ref)
            _, gi, di = _pointwise(sol, "ui", r, ang, ref)
            ss = lame_stress(gs, nm.lam, nm.mu, ds)
            si = lame_stress(gi, nm.lam, nm.mu, di)
            gt, st = gs + gi, ss + si
            dens = [np.sum(st * np.conj(gt), axis=(-2, -1)),
                    np.sum(ss * np.conj(gs), axis=(-2, -1)),
                    np.sum(si * np.conj(gi), axis=(-2, -1)),
                    np.sum(ss * np.conj(gi) + si * np.conj(gs), axis=(-2, -1)),
                    energy_density(gt, nm.lam, nm.mu, ds + di, real=False)]
            out[i] = [np.sum(w * d) * r * r for d in dens]
        return out

    tot, es, ei, rest, tot_c = _radial_integral_vec(fun, *region.exterior_shell)
    s2 = ref.abs() ** 2
    identity = abs(tot.real - (es.real + ei.real + rest.real)) / max(abs(tot.real), 1e-300)
    return StressEnergies(E_u=s2 * tot.real, E_us=s2 * es.real, E_ui=s2 * ei.real, Rest=s2 * rest.real,
                          E_u_complex=s2 * tot_c, identity_residual=identity)


def _lc_real(x: float) -> LogComplex:
    return LogComplex.from_complex(complex(x))


def closed_form_energies(n: int, f_norm_sq: float, zeta2: float, nm: NondimensionalMedium) -> dict:
    """Leading-order shell energies for the unnormalized incident wave (LogComplex).

    E_us = 4 pi S (lam + 3 mu) n^6 k^(2n+2) tau^2 (z^(2n+1) - 1)
           / (((2n+1)!!)^2 L^(n+3) (2n+1)^3 z^(2n+1))
    E_ui = 4 pi S n^2 (k tau)^(2n) (z^(2n+1) - 1) P(n)
           / ((2n+1)^3 ((2n-1)!!)^2 L^n),
           P(n) = 4n^3 + (lam+8) n^2 + (2 mu+5) n + (mu+1)
    Rest = S 2 n^2 (2n+1) (k tau)^(2n+2) (lam n(n+1) + 2 mu (n^2+n+1)) (z - 1)
           / (((2n+1)!!)^3 (2n-3)!! L^(2n+2))
    with S = sum |f_m|^2 and z = zeta2.  For n = 1 the factor (2n-3)!! is
    taken as (-1)!! = 1.
    """
    from .specfun import double_factorial_lc
    lam, mu, L, k, tau = nm.lam, nm.mu, nm.L, nm.k, nm.tau
    K = _lc_real(k)
    KT = _lc_real(k * tau)
    z = zeta2
    zq = z ** (2 * n + 1)
    q = 2 * n + 1
    e_us = _lc_real(4 * math.pi * f_norm_sq * (lam + 3 * mu) * n ** 6 * tau ** 2 * (zq - 1)
                    / (L ** (n + 3) * q ** 3 * zq)) * K ** (2 * n + 2) / double_factorial_lc(q) ** 2
    poly = 4 * n ** 3 + (lam + 8) * n ** 2 + (2 * mu + 5) * n + (mu + 1)
    e_ui = _lc_real(4 * math.pi * f_norm_sq * n * n * (zq - 1) * poly / (q ** 3 * L ** n)) \
        * KT ** (2 * n) / double_factorial_lc(2 * n - 1) ** 2
    df3 = double_factorial_lc(2 * n - 3) if n >= 2 else _lc_real(1.0)
    rest = _lc_real(f_norm_sq * 2 * n * n * q * (lam * n * (n + 1) + 2 * mu * (n * n + n + 1)) * (z - 1)
                    / L ** (2 * n + 2)) * KT ** (2 * n + 2) / (double_factorial_lc(q) ** 3 * df3)
    return {"E_us": e_us, "E_ui": e_ui, "Rest": rest}


def stress_lower_bound(n: int, zeta2: float, nm: NondimensionalMedium) -> float:
    """beta = n^2 (zeta2 - 1) k^2 / (27 zeta2 L^2 tau^(2n-2))."""
    if n < 1 or not zeta2 > 1:
        raise ValueError("need n >= 1 and zeta2 > 1")
    lb = math.log(n * n * (zeta2 - 1) * nm.k ** 2 / (27 * zeta2 * nm.L ** 2)) - (2 * n - 2) * math.log(nm.tau)
    return math.exp(lb)


# ---------------------------------------------------------------------------
# thresholds and regimes
# ---------------------------------------------------------------------------

def thresholds(eta: float, M: float, zeta1: float, zeta2: float, nm: NondimensionalMedium) -> dict:
    """Index and oscillation thresholds of the localization and resonance statements.

    n1 = (ln eta / ln zeta1 - 3)/2,  n2 = (1 - ln eta / ln zeta2)/2,
    n3 = (2/(-ln tau)) W0(-tau ln tau sqrt(3 M delta) / (2 (1 - zeta1)^(1/4))),
    n4 = (1/(-ln tau)) W0(-3 sqrt(3 zeta2) ln tau L^(3/2) M / (k tau sqrt(10 (zeta2 - 1)))),
    N1 = max(n1, n2), N2 = max(n3, n4), and the oscillation levels M0, M1 above
    which surface resonance forces boundary localization.
    """
    if not 0 < eta < 1:
        raise ValueError("eta must lie in (0, 1)")
    if not M > 1:
        raise ValueError("M must exceed 1")
    if not (0 < zeta1 < 1 < zeta2):
        raise ValueError("need 0 < zeta1 < 1 < zeta2")
    tau, delta, k, L = nm.tau, nm.delta, nm.k, nm.L
    lt = math.log(tau)
    n1 = 0.5 * (math.log(eta) / math.log(zeta1) - 3)
    n2 = 0.5 * (1 - math.log(eta) / math.log(zeta2))
    n3 = (2 / -lt) * lambert_w0(-tau * lt * math.sqrt(3 * M * delta) / (2 * (1 - zeta1) ** 0.25))
    n4 = (1 / -lt) * lambert_w0(-3 * math.sqrt(3 * zeta2) * lt * L ** 1.5 * M
                                / (k * tau * math.sqrt(10 * (zeta2 - 1))))
    log_z1 = lambda v: math.log(v) / math.log(zeta1)
    log_z2 = lambda v: math.log(v) / math.log(zeta2)
    M0 = (log_z1(eta / zeta1 ** 3) ** 2 * math.sqrt(1 - zeta1)
          * tau ** (-0.5 * log_z1(zeta1 * eta)) / (12 * delta))
    M1 = (k * log_z2(zeta2 / eta) * math.sqrt(10 * (zeta2 - 1) / (3 * zeta2))
          * tau ** (0.5 * log_z2(zeta2 * eta)) / (6 * L ** 1.5))
    return {"n1": n1, "n2": n2, "n3": n3, "n4": n4, "N1": max(n1, n2), "N2": max(n3, n4),
            "M0": M0, "M1": M1}


def classify_regime(n: int, M: float, thr: dict) -> dict:
    """Phenomena per field from the table of conditions on n and M.

    Rows: n >= N1 gives BL for u and u^s; n >= N2 gives SR for u and u^s;
    n > max(N1, N2) gives QMR for both; n > max(n2, n4) gives QMR for u^s;
    n > max(n1, n3) gives QMR for u; n > n3 with M > M0 gives QMR for u;
    n > n4 with M > M1 gives QMR for u^s, and the same condition gives SC for
    u^s and for the exterior total field.
    """
    flags = {f: set() for f in REGIME_FIELDS}
    u, us, ue = (flags[f] for f in REGIME_FIELDS)
    if n >= thr["N1"]:
        u.add("BL")
        us.add("BL")
    if n >= thr["N2"]:
        u.add("SR")
        us.add("SR")
    if n > max(thr["N1"], thr["N2"]):
        u.add("QMR")
        us.add("QMR")
    if n > max(thr["n2"], thr["n4"]):
        us.add("QMR")
    if n > max(thr["n1"], thr["n3"]):
        u.add("QMR")
    if n > thr["n3"] and M > thr["M0"]:
        u.add("QMR")
    if n > thr["n4"] and M > thr["M1"]:
        us.update(("QMR", "SC"))
        ue.add("SC")
    return {f: tuple(p for p in PHENOMENA if p in s) for f, s in flags.items()}


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------

def _lc_json(x: LogComplex) -> dict:
    return {"log10_mag": float(x.log10_magnitude), "phase": float(x.phase)}


def _finite(x: LogComplex):
    v = complex(x.to_complex())
    return v.real if math.isfinite(v.real) else None


@dataclass
class DiagnosticsReport:
    """Diagnostics for one 3D mode; energies and gradient ratios are per ||u^i||_D."""

    n: int
    eta_u: float
    eta_us: float
    eta_u_sq_reference: float
    eta_us_sq_reference: float
    grad_ratio_u: float
    grad_ratio_us: float
    grad_bound_u: float
    grad_bound_us: float
    E_u: float
    E_us: float
    E_ui: float
    Rest: float
    E_closed_form: dict
    identity_residual: float
    beta_bound: float
    thresholds: dict
    regime_flags: dict
    provenance: dict
    flags: list = field(default_factory=list)
    log_scaled: dict = field(default_factory=dict)

    def to_json(self) -> str:
        d = asdict(self)
        d["schema"] = 1
        return json.dumps(d, sort_keys=True, indent=2)

    def to_table(self) -> str:
        rows = [("n", self.n), ("eta_u", self.eta_u), ("eta_us", self.eta_us),
                ("eta_u^2 reference", self.eta_u_sq_reference),
                ("eta_us^2 reference", self.eta_us_sq_reference),
                ("grad ratio u", self.grad_ratio_u), ("grad bound u", self.grad_bound_u),
                ("grad ratio us", self.grad_ratio_us), ("grad bound us", self.grad_bound_us),
                ("E(u)", self.E_u), ("E(us)", self.E_us), ("E(ui)", self.E_ui), ("Rest", self.Rest),
                ("identity residual", self.identity_residual), ("beta", self.beta_bound)]
        rows += [(k, v) for k, v in sorted(self.thresholds.items())]
        rows += [(f"regime {k}", ",".join(v) or "-") for k, v in self.regime_flags.items()]
        width = max(len(k) for k, _ in rows)
        fmt = lambda v: f"{v:.6e}" if isinstance(v, float) else str(v)
        return "\n".join(f"{k:<{width}}  {fmt(v)}" for k, v in rows)


def _both(a: float, b: float) -> str:
    return f"both({abs(a - b) / max(abs(a), 1e-300):.1e})"


def diagnose(sol: ModalSolution3D, region: ShellRegion, eta: float = 0.01, M: float = 1e3,
             cross_check: bool = True) -> DiagnosticsReport:
    """Assemble every diagnostic for a 3D solution.

    With cross_check the ratios are computed by both integration paths and
    the relative difference is recorded in the provenance map.
    """
    nm, n = sol.medium, sol.n
    eta_u, eta_us = localization_ratios(sol, region)
    g_u, g_us = resonance_ratios(sol, region)
    prov = {}
    if cross_check:
        q_eta = localization_ratios(sol, region, method="quadrature")
        q_g = resonance_ratios(sol, region, method="quadrature")
        for key, a, b in (("eta_u", eta_u, q_eta[0]), ("eta_us", eta_us, q_eta[1]),
                          ("grad_ratio_u", g_u, q_g[0]), ("grad_ratio_us", g_us, q_g[1])):
            prov[key] = _both(a, b)
    else:
        prov.update({k: "closed_form" for k in ("eta_u", "eta_us", "grad_ratio_u", "grad_ratio_us")})
    ref_u, ref_us = localization_reference(n, region)
    b_u, b_us = resonance_bounds(n, region, nm)
    en = stress_energies(sol, region)
    ui2 = incident_domain_norm(sol) ** 2
    closed = closed_form_energies(n, sol.incident.f_norm_sq, region.zeta2, nm)
    ui2_raw = sol.ui_norm ** 2
    per = lambda x: float((x / ui2).to_complex().real)
    closed_per = {k: float((v / ui2_raw).to_complex().real) for k, v in closed.items()}
    for key in ("E_u", "E_us", "E_ui", "Rest"):
        prov[key] = "quadrature"
    for key in closed_per:
        prov[f"E_closed_form.{key}"] = "closed_form"
    prov.update({"beta_bound": "closed_form", "grad_bound_u": "closed_form", "grad_bound_us": "closed_form",
                 "thresholds": "closed_form"})
    thr = thresholds(eta, M, region.zeta1, region.zeta2, nm)
    flags = list(sol.flags)
    if not region.stress_assumption(nm):
        flags.append(ZETA2_TAU_NOT_SUBUNIT)
    log_scaled = {k: _lc_json(getattr(en, k) / ui2) for k in ("E_u", "E_us", "E_ui", "Rest")}
    log_scaled["E_u_complex"] = _lc_json(en.E_u_complex / ui2)
    return DiagnosticsReport(
        n=n, eta_u=eta_u, eta_us=eta_us, eta_u_sq_reference=ref_u, eta_us_sq_reference=ref_us,
        grad_ratio_u=g_u, grad_ratio_us=g_us, grad_bound_u=b_u, grad_bound_us=b_us,
        E_u=per(en.E_u), E_us=per(en.E_us), E_ui=per(en.E_ui), Rest=per(en.Rest),
        E_closed_form=closed_per, identity_residual=en.identity_residual,
        beta_bound=stress_lower_bound(n, region.zeta2, nm), thresholds=thr,
        regime_flags=classify_regime(n, M, thr), provenance=prov, flags=flags, log_scaled=log_scaled)
