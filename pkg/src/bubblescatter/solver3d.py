"""Modal transmission solve for a spherical bubble in an elastic medium.

Fields are returned as :class:`FieldSample` objects: a LogComplex scale times
moderate complex arrays.  At n = 60 the raw amplitudes (k_p^n ~ 1e-240 and
below) leave double range, while the shapes relative to the unit sphere stay
representable.

Vector fields of degree n are written v = a(r) Y x_hat + b(r) G(x_hat), where
Y = sum_m f_m Y_n^m and G = I_{n-1} = grad_S Y + n Y x_hat.  The incident wave,
the exact single-layer field and the radial single-layer form all fit this
shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .logcomplex import LogComplex
from .medium import NondimensionalMedium
from .spectra import (NEAR_SINGULAR, alpha_n, beta_n, layer_radial_profiles, layer_radial_terms,
                      modal_determinant)
from .specfun import angular_bundle, spherical_bessel_j, spherical_frame, spherical_hankel_h1

INCIDENT_KINDS = ("printed", "p_wave")


class SingularSystemError(ArithmeticError):
    """The modal determinant vanished."""


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class IncidentSpec3D:
    """Incident wave of degree n with coefficients f_{n,m}, m = -n..n.

    Attributes:
        n: degree, n >= 1.
        f: complex coefficients ordered m = -n..n.
        normalized: divide every field by ||u^i||_{L^2(D)}.
        kind: "printed" is sum_m f_m j_n(k_p r) I_{n-1}^m; "p_wave" is
            (1/k_p) grad(j_n(k_p r) Y), an exact entire Navier solution.
    """

    n: int
    f: np.ndarray
    normalized: bool = False
    kind: str = "printed"

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("incident degree n must be an integer >= 1")
        f = np.asarray(self.f, dtype=complex).ravel()
        if f.size != 2 * self.n + 1:
            raise ValueError(f"need {2 * self.n + 1} coefficients, got {f.size}")
        if not np.any(f != 0):
            raise ValueError("incident coefficient vector must be nonzero")
        if self.kind not in INCIDENT_KINDS:
            raise ValueError(f"kind must be one of {INCIDENT_KINDS}")
        object.__setattr__(self, "f", f)

    @classmethod
    def single(cls, n: int, m: int | None = None, **kw) -> "IncidentSpec3D":
        """Unit coefficient on one order m (default m = n)."""
        m = n if m is None else m
        f = np.zeros(2 * n + 1, dtype=complex)
        f[m + n] = 1.0
        return cls(n, f, **kw)

    @property
    def f_norm_sq(self) -> float:
        return float(np.sum(np.abs(self.f) ** 2))

    def scaled(self, c) -> "IncidentSpec3D":
        return IncidentSpec3D(self.n, c * self.f, self.normalized, self.kind)


@dataclass
class FieldSample:
    """scale * value with value (..., 3) for vectors or (...) for scalars.

    ``grad`` has a trailing (3, 3) block with grad[..., i, j] = d_j v_i for
    vectors and a trailing 3 for scalars; ``div`` is present for vectors.
    """

    scale: LogComplex
    value: np.ndarray
    grad: np.ndarray
    div: np.ndarray | None = None

    def _rel(self, other: "FieldSample"):
        # ratio of the other scale to self, as a plain complex (may underflow to 0)
        if bool(other.scale.is_zero):
            return 0.0
        if bool(self.scale.is_zero):
            raise ValueError("cannot rescale a zero-scale field")
        return complex((other.scale / self.scale).to_complex())

    def __add__(self, other: "FieldSample") -> "FieldSample":
        if float(other.scale.log10_magnitude) > float(self.scale.log10_magnitude):
            return other + self
        if bool(self.scale.is_zero):
            return self
        c = self._rel(other)
        div = None
        if self.div is not None and other.div is not None:
            div = self.div + c * other.div
        return FieldSample(self.scale, self.value + c * other.value, self.grad + c * other.grad, div)

    def scaled_by(self, s) -> "FieldSample":
        return FieldSample(self.scale * s, self.value, self.grad, self.div)

    def value_lc(self) -> LogComplex:
        return self.scale * self.value

    def grad_lc(self) -> LogComplex:
        return self.scale * self.grad

    def to_complex(self):
        """(value, grad, div) as plain complex arrays (may over/underflow)."""
        s = complex(self.scale.to_complex())
        return s * self.value, s * self.grad, None if self.div is None else s * self.div


@dataclass(frozen=True)
class ModalSolution3D:
    """Per-mode densities; phi_e,m = psi_e f_m and phi_b,m = psi_b f_m."""

    incident: IncidentSpec3D
    medium: NondimensionalMedium
    psi_e: LogComplex
    psi_b: LogComplex
    psi_b_printed: LogComplex
    determinant: LogComplex
    alpha: complex
    beta: complex
    ui_norm: LogComplex
    flags: tuple = field(default=())

    @property
    def n(self) -> int:
        return self.incident.n

    @property
    def phi_e(self) -> LogComplex:
        return self.psi_e * self.incident.f

    @property
    def phi_b(self) -> LogComplex:
        return self.psi_b * self.incident.f

    @property
    def phi_b_printed(self) -> LogComplex:
        return self.psi_b_printed * self.incident.f

    @property
    def output_scale(self) -> LogComplex:
        """Factor applied to every returned field (1/||u^i|| when normalized)."""
        if self.incident.normalized:
            return 1.0 / self.ui_norm
        return LogComplex.from_complex(1.0)


# ---------------------------------------------------------------------------
# generic vector field machinery
# ---------------------------------------------------------------------------

SPHERE_SNAP = 1e-12


def _points(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 3:
        raise ValueError("points must have a trailing dimension of 3")
    r = np.linalg.norm(x, axis=-1)
    # radii within rounding of the unit sphere are treated as on it
    r = np.where(np.abs(r - 1.0) <= SPHERE_SNAP, 1.0, r)
    with np.errstate(invalid="ignore", divide="ignore"):
        theta = np.arccos(np.clip(np.where(r > 0, x[..., 2] / np.where(r > 0, r, 1), 1.0), -1, 1))
    phi = np.arctan2(x[..., 1], x[..., 0])
    return r, theta, phi


def vector_field(n: int, a, da, b, db, r, ang):
    """Value, gradient and divergence of a(r) Y x_hat + b(r) G.

    grad[..., i, j] = d_j v_i.  All inputs broadcast against ang.Y.
    """
    Y, G, H, xh = ang.Y, ang.G, ang.H, ang.xhat
    a, da, b, db, r = (np.broadcast_to(np.asarray(v), Y.shape) for v in (a, da, b, db, r))
    val = (a * Y)[..., None] * xh + b[..., None] * G
    ar = a / r
    br = b / r
    p = (da - (n + 1) * ar) * Y
    q = db - (n - 1) * br
    outer = lambda u, v: u[..., :, None] * v[..., None, :]
    grad = (p[..., None, None] * outer(xh, xh) + ar[..., None, None] * outer(xh, G)
            + (ar * Y)[..., None, None] * np.eye(3) + q[..., None, None] * outer(G, xh)
            + br[..., None, None] * H)
    div = Y * (da + 2 * ar + n * db - n * (n - 1) * br)
    return val, grad, div


def scalar_field(n: int, g, dg, r, ang):
    """Value and gradient of g(r) Y."""
    Y, G, xh = ang.Y, ang.G, ang.xhat
    g, dg, r = (np.broadcast_to(np.asarray(v), Y.shape) for v in (g, dg, r))
    val = g * Y
    grad = (dg * Y - n * g / r * Y)[..., None] * xh + (g / r)[..., None] * G
    return val, grad


def lame_stress(grad, lam: float, mu: float, div=None):
    """sigma = lam (div u) I + mu (grad u + grad u^T) for a trailing (d, d) block."""
    d = grad.shape[-1]
    if div is None:
        div = np.trace(grad, axis1=-2, axis2=-1)
    return lam * div[..., None, None] * np.eye(d) + mu * (grad + np.swapaxes(grad, -1, -2))


def energy_density(grad, lam: float, mu: float, div=None, real: bool = True):
    """sigma(u) : conj(grad u); the real part unless real=False."""
    s = lame_stress(grad, lam, mu, div)
    e = np.sum(s * np.conj(grad), axis=(-2, -1))
    return e.real if real else e


# ---------------------------------------------------------------------------
# incident wave
# ---------------------------------------------------------------------------

def _ratio(num: LogComplex, den: LogComplex):
    return np.asarray((num / den).to_complex())


def incident_profiles(spec: IncidentSpec3D, nm: NondimensionalMedium, r):
    """Scale and radial profiles (a, a', b, b') of the incident wave.

    Profiles are divided by the scale j_n(k_p) so they stay O(r^n).
    """
    n, kp = spec.n, nm.k_p
    r = np.asarray(r, dtype=float)
    z = kp * r
    jn_ref, _ = spherical_bessel_j(n, kp)
    jn, jnd = spherical_bessel_j(n, z)
    zero = np.zeros(r.shape)
    if spec.kind == "printed":
        b = _ratio(jn, jn_ref)
        db = kp * _ratio(jnd, jn_ref)
        return jn_ref, zero + 0j, zero + 0j, b, db
    # p_wave: (1/k_p) grad(j_n(k_p r) Y) = -j_{n+1} Y x_hat + (j_n/z) G
    jp, jpd = spherical_bessel_j(n + 1, z)
    a = -_ratio(jp, jn_ref)
    da = -kp * _ratio(jpd, jn_ref)
    with np.errstate(invalid="ignore", divide="ignore"):
        b = _ratio(jn, jn_ref) / z
        db = kp * ((n - 1) * _ratio(jn, jn_ref) / z - _ratio(jp, jn_ref)) / z
    return jn_ref, a, da, b, db


def _boundary_data(spec, nm):
    """Normal displacement g and normal traction t of u^i on the unit sphere (LogComplex)."""
    n = spec.n
    s, a, da, b, db = incident_profiles(spec, nm, np.array(1.0))
    a, da, b, db = (complex(v) for v in (a, da, b, db))
    g = a + n * b
    t = nm.L * (da + n * db) + nm.lam * (2 * a - n * (n - 1) * b)
    return s * g, s * t


def eval_incident(spec: IncidentSpec3D, nm: NondimensionalMedium, x, sol: ModalSolution3D | None = None) -> FieldSample:
    """Incident wave value, gradient and divergence at points x (..., 3).

    The origin is handled by its limit: u^i(0) = 0 for every n >= 1 (the
    gradient there is reported as zero).
    """
    r, theta, phi = _points(x)
    ang = angular_bundle(spec.n, spec.f, theta, phi)
    rs = np.where(r > 0, r, 1.0)
    s, a, da, b, db = incident_profiles(spec, nm, rs)
    val, grad, div = vector_field(spec.n, a, da, b, db, rs, ang)
    at0 = r == 0
    if np.any(at0):
        val[at0] = 0
        grad[at0] = 0
        div[at0] = 0
    out = FieldSample(s, val, grad, div)
    if sol is not None:
        out = out.scaled_by(sol.output_scale)
    elif spec.normalized:
        out = out.scaled_by(1.0 / incident_norm(spec, nm))
    return out


def _gauss(a: float, b: float, m: int):
    t, w = np.polynomial.legendre.leggauss(m)
    return 0.5 * (b - a) * t + 0.5 * (b + a), 0.5 * (b - a) * w


def radial_integral(fun, a: float, b: float, m0: int = 64, rtol: float = 1e-10, max_nodes: int = 1024):
    """Gauss-Legendre integral of fun on [a, b], doubling nodes until converged."""
    m = m0
    x, w = _gauss(a, b, m)
    prev = np.sum(w * fun(x))
    while m < max_nodes:
        m *= 2
        x, w = _gauss(a, b, m)
        cur = np.sum(w * fun(x))
        if abs(cur - prev) <= rtol * abs(cur):
            return cur
        prev = cur
    return prev


def vector_shell_integrand(n: int, a, b):
    """Angular integral of |a Y x_hat + b G|^2 per unit sum |f_m|^2."""
    return np.abs(a + n * b) ** 2 + n * (n + 1) * np.abs(b) ** 2


def incident_norm(spec: IncidentSpec3D, nm: NondimensionalMedium, r0: float = 0.0, r1: float = 1.0) -> LogComplex:
    """||u^i||_{L^2} over r0 < |x| < r1 by radial Gauss quadrature (angles exact)."""
    n = spec.n

    def fun(r):
        s, a, _, b, _ = incident_profiles(spec, nm, r)
        return vector_shell_integrand(n, a, b) * r ** 2

    val = radial_integral(fun, r0, r1) * spec.f_norm_sq
    s, *_ = incident_profiles(spec, nm, np.array(1.0))
    return s.abs() * math.sqrt(val)


def incident_norm_sq_leading(spec: IncidentSpec3D, nm: NondimensionalMedium) -> LogComplex:
    """Leading k -> 0 value of ||u^i||^2_{L^2(D)} for the printed incident.

    n(2n+1) k_p^{2n} / ((2n+3) ((2n+1)!!)^2) sum |f_m|^2.
    """
    from .specfun import double_factorial_lc
    n = spec.n
    kp = LogComplex.from_complex(nm.k_p)
    return (n * (2 * n + 1) * spec.f_norm_sq / (2 * n + 3)) * kp ** (2 * n) / double_factorial_lc(2 * n + 1) ** 2


def incident_norm_sq_printed(spec: IncidentSpec3D, nm: NondimensionalMedium) -> LogComplex:
    """The printed leading form 4 pi n(n+1)(k tau)^{2n}/((2n+3)((2n+1)!!)^2 L^n) sum |f_m|^2."""
    from .specfun import double_factorial_lc
    n = spec.n
    kt = LogComplex.from_complex(nm.k * nm.tau)
    return (4 * math.pi * n * (n + 1) * spec.f_norm_sq / ((2 * n + 3) * nm.L ** n)) * kt ** (2 * n) \
        / double_factorial_lc(2 * n + 1) ** 2


# ---------------------------------------------------------------------------
# modal solve
# ---------------------------------------------------------------------------

def solve_modes(spec: IncidentSpec3D, nm: NondimensionalMedium) -> ModalSolution3D:
    """Solve the transmission problem for the density amplitudes.

    psi_e = -(delta tau^2 k^2 g j_n(k) + t k j_n'(k)) / D_n, where g and t are
    the normal displacement and normal traction of u^i on the sphere; for
    the printed incident g = n j_n(k_p), t = L n k_p j_n'(k_p) + lam n(1-n) j_n(k_p).
    psi_b follows from the normal-displacement condition,
    psi_b = i (alpha psi_e + g) / (j_n'(k) h_n(k)).
    """
    n, k = spec.n, nm.k
    det = modal_determinant(n, nm)
    D = det.value
    if bool(D.is_zero):
        raise SingularSystemError(f"modal determinant vanishes at n={n}")
    al = alpha_n(n, nm)
    be = beta_n(n, nm)
    g, t = _boundary_data(spec, nm)
    j, jd = spherical_bessel_j(n, k)
    h, _ = spherical_hankel_h1(n, k)
    dt2 = nm.delta * nm.tau ** 2
    psi_e = -((dt2 * k * k) * g * j + (t * k) * jd) / D
    psi_b = (1j * (al * psi_e + g)) / (jd * h)
    psi_b_printed = (be * psi_e) / ((1j * dt2 * k) * j * h) - g
    sol = ModalSolution3D(incident=spec, medium=nm, psi_e=psi_e, psi_b=psi_b,
                          psi_b_printed=psi_b_printed, determinant=D, alpha=al, beta=be,
                          ui_norm=incident_norm(spec, nm), flags=det.flags)
    return sol


def traction_row_residual(sol: ModalSolution3D) -> float:
    """Relative mismatch of the normal-traction row, |beta psi_e + t - i dt^2 k j h psi_b| / |t|.

    Evaluating psi_b from this row instead loses about log10(1/(delta tau^2 k^2))
    digits, which is why the displacement row is used.
    """
    nm, n = sol.medium, sol.n
    _, t = _boundary_data(sol.incident, nm)
    j, _ = spherical_bessel_j(n, nm.k)
    h, _ = spherical_hankel_h1(n, nm.k)
    lhs = sol.beta * sol.psi_e + t
    rhs = (1j * nm.delta * nm.tau ** 2 * nm.k) * j * h * sol.psi_b
    return float(((lhs - rhs) / t).abs().to_complex().real)


# ---------------------------------------------------------------------------
# field evaluation
# ---------------------------------------------------------------------------

def _unique_profiles(fun, r):
    """Evaluate an expensive 1-D radial function once per distinct radius."""
    flat = np.asarray(r, dtype=float).ravel()
    uniq, inv = np.unique(flat, return_inverse=True)
    res = fun(uniq)
    return [np.asarray(v)[inv].reshape(np.shape(r)) for v in res]


def interior_profiles(sol: ModalSolution3D, r):
    """Scale and (g, g') with u = scale * g(r) Y; g(1) = 1."""
    n, k = sol.n, sol.medium.k
    j1, _ = spherical_bessel_j(n, k)
    h, _ = spherical_hankel_h1(n, k)
    jr, jrd = spherical_bessel_j(n, k * np.asarray(r, dtype=float))
    scale = sol.psi_b * (-1j * k) * h * j1 * sol.output_scale
    return scale, _ratio(jr, j1), k * _ratio(jrd, j1)


def eval_interior(sol: ModalSolution3D, x) -> FieldSample:
    """u(x) = sum_m phi_b,m (-i k j_n(k|x|) h_n(k)) Y_n^m and its gradient, |x| <= 1.

    Points on the sphere give the interior trace.
    """
    r, theta, phi = _points(x)
    if np.any(r > 1):
        raise ValueError("interior evaluation needs |x| <= 1")
    ang = angular_bundle(sol.n, sol.incident.f, theta, phi)
    rs = np.where(r > 0, r, 1.0)
    scale, g, dg = interior_profiles(sol, rs)
    val, grad = scalar_field(sol.n, g, dg, rs, ang)
    at0 = r == 0
    if np.any(at0):
        val[at0] = 0
        grad[at0] = 0
    return FieldSample(scale, val, grad)


def scattered_profiles(sol: ModalSolution3D, r):
    """Scale and (a, a', b, b') of the exact exterior single-layer field."""
    n = sol.n

    def fun(rr):
        c, dc, d, dd = layer_radial_profiles(n, sol.medium, rr)
        return d, dd, (c - d) / (2 * n + 1), (dc - dd) / (2 * n + 1)

    a, da, b, db = _unique_profiles(fun, r)
    return sol.psi_e * sol.output_scale, a, da, b, db


def eval_exterior_scattered(sol: ModalSolution3D, x) -> FieldSample:
    """Scattered field psi_e S[Y nu] at |x| > 1 with gradient and divergence.

    Uses the full single-layer field [c(r) I_{n-1} + d(r) N_{n+1}]/(2n+1),
    which solves the Navier equation exactly; the purely radial form is
    available as eval_exterior_scattered_radial.  Points on the sphere give
    the exterior trace.
    """
    r, theta, phi = _points(x)
    if np.any(r < 1):
        raise ValueError("exterior evaluation needs |x| >= 1")
    ang = angular_bundle(sol.n, sol.incident.f, theta, phi)
    scale, a, da, b, db = scattered_profiles(sol, r)
    val, grad, div = vector_field(sol.n, a, da, b, db, r, ang)
    return FieldSample(scale, val, grad, div)


def eval_exterior_scattered_radial(sol: ModalSolution3D, x) -> FieldSample:
    """Radial form psi_e (-i k_p^2/L) j_n(k_p) h_n(k_p r) Y x_hat of the scattered field."""
    nm, n = sol.medium, sol.n
    r, theta, phi = _points(x)
    if np.any(r < 1):
        raise ValueError("exterior evaluation needs |x| >= 1")
    ang = angular_bundle(n, sol.incident.f, theta, phi)
    jp, _ = spherical_bessel_j(n, nm.k_p)
    h1, _ = spherical_hankel_h1(n, nm.k_p)
    hr, hrd = spherical_hankel_h1(n, nm.k_p * r)
    scale = sol.psi_e * (-1j * nm.k_p ** 2 / nm.L) * jp * h1 * sol.output_scale
    a = _ratio(hr, h1)
    da = nm.k_p * _ratio(hrd, h1)
    zero = np.zeros(r.shape, dtype=complex)
    val, grad, div = vector_field(n, a, da, zero, zero, r, ang)
    return FieldSample(scale, val, grad, div)


def eval_total_exterior(sol: ModalSolution3D, x) -> FieldSample:
    """u = u^s + u^i at |x| >= 1."""
    us = eval_exterior_scattered(sol, x)
    ui = eval_incident(sol.incident, sol.medium, x, sol=sol)
    return us + ui


def stress_density(sol: ModalSolution3D, x) -> LogComplex:
    """Re[sigma(u) : conj(grad u)] of the exterior total field (real LogComplex)."""
    u = eval_total_exterior(sol, x)
    e = energy_density(u.grad, sol.medium.lam, sol.medium.mu, u.div)
    return u.scale.abs() ** 2 * e


def _sphere_nodes(n_theta: int, n_phi: int):
    t, _ = np.polynomial.legendre.leggauss(n_theta)
    theta = np.arccos(t)
    phi = 2 * np.pi * np.arange(n_phi) / n_phi
    th, ph = np.meshgrid(theta, phi, indexing="ij")
    return np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=-1)


def transmission_residuals(sol: ModalSolution3D, n_theta: int | None = None, n_phi: int | None = None) -> dict:
    """Reassemble the transmission conditions on the unit sphere from the evaluators.

    Returns the maximum pointwise mismatch of
        displacement: u_e . nu - k^-2 d_nu u_b,
        traction_normal: (sigma(u_e) nu) . nu + delta tau^2 u_b,
        traction_tangential: the tangential part of sigma(u_e) nu,
    each divided by the largest single term entering it (u^s, u^i or the
    interior contribution).  The first two are imposed by the solve; the
    tangential part is not constrained by the normal-density ansatz and is
    reported as a measurement.
    """
    nm, n = sol.medium, sol.n
    n_theta = n_theta or n + 8
    n_phi = n_phi or 2 * n + 8
    x = _sphere_nodes(n_theta, n_phi)
    nu = x
    us = eval_exterior_scattered(sol, x)
    ui = eval_incident(sol.incident, nm, x, sol=sol)
    ub = eval_interior(sol, x)
    ref = us.scale if float(us.scale.log10_magnitude) >= float(ui.scale.log10_magnitude) else ui.scale

    def rel(fs):
        if bool(fs.scale.is_zero):
            return 0.0
        return complex((fs.scale / ref).to_complex())

    cs, ci, cb = rel(us), rel(ui), rel(ub)
    dot = lambda v: np.sum(v * nu, axis=-1)
    d_s, d_i = cs * dot(us.value), ci * dot(ui.value)
    d_b = cb * dot(ub.grad) / nm.k ** 2
    trac = lambda fs, c: c * np.einsum("...ij,...j->...i", lame_stress(fs.grad, nm.lam, nm.mu, fs.div), nu)
    t_s, t_i = trac(us, cs), trac(ui, ci)
    p_b = nm.delta * nm.tau ** 2 * cb * ub.value
    t = t_s + t_i
    tn = dot(t)
    tt = t - tn[..., None] * nu
    big = lambda *arrs: max(float(np.max(np.abs(a))) for a in arrs) or 1.0
    return {
        "displacement": float(np.max(np.abs(d_s + d_i - d_b))) / big(d_s, d_i, d_b),
        "traction_normal": float(np.max(np.abs(tn + p_b))) / big(dot(t_s), dot(t_i), p_b),
        "traction_tangential": float(np.max(np.linalg.norm(tt, axis=-1)))
        / big(np.linalg.norm(t_s, axis=-1), np.linalg.norm(t_i, axis=-1)),
    }


# ---------------------------------------------------------------------------
# finite-difference PDE checks (any dimension)
# ---------------------------------------------------------------------------

_D1 = ((1, 3 / 4), (2, -3 / 20), (3, 1 / 60))
_D2 = (-49 / 18, 3 / 2, -3 / 20, 1 / 90)


def fd_hessian(fun, x, h: float = 2e-3):
    """Sixth-order central-difference Hessian of fun at the point x.

    Returns H with H[j][k] = d_j d_k fun(x) (arrays shaped like fun(x)).
    """
    x = np.asarray(x, dtype=float)
    d = x.size
    E = np.eye(d)

    def d1(g, y, k):
        return sum(c * (g(y + s * h * E[k]) - g(y - s * h * E[k])) for s, c in _D1) / h

    H = [[None] * d for _ in range(d)]
    f0 = fun(x)
    for j in range(d):
        H[j][j] = (_D2[0] * f0 + sum(_D2[s] * (fun(x + s * h * E[j]) + fun(x - s * h * E[j]))
                                     for s in (1, 2, 3))) / h ** 2
        for k in range(j + 1, d):
            H[j][k] = H[k][j] = d1(lambda y: d1(fun, y, k), x, j)
    return H


def fd_navier_residual(fun, x, nm: NondimensionalMedium, h: float = 2e-3) -> float:
    """Relative residual of mu lap u + (lam + mu) grad div u + (k tau)^2 u = 0.

    The scale is the sum of the absolute values of every second derivative
    entering the operator (and of the (k tau)^2 u term), so the check is not
    confused by the cancellation between the two elastic terms at low
    frequency.
    """
    H = fd_hessian(fun, x, h)
    d = len(H)
    lap = sum(H[j][j] for j in range(d))
    gd = np.array([sum(H[i][j][j] for j in range(d)) for i in range(d)])
    u = fun(np.asarray(x, float))
    w2 = (nm.k * nm.tau) ** 2
    res = nm.mu * lap + (nm.lam + nm.mu) * gd + w2 * u
    scale = (nm.mu * sum(np.abs(H[j][j]) for j in range(d))
             + abs(nm.lam + nm.mu) * np.array([sum(np.abs(H[i][j][j]) for j in range(d)) for i in range(d)])
             + w2 * np.abs(u))
    return float(np.max(np.abs(res)) / np.max(scale))


def fd_helmholtz_residual(fun, x, k: float, h: float = 2e-3) -> float:
    """|lap u + k^2 u| over sum_j |d_jj u| + k^2 |u|."""
    H = fd_hessian(fun, x, h)
    d = len(H)
    u = fun(np.asarray(x, float))
    lap = sum(H[j][j] for j in range(d))
    scale = sum(np.abs(H[j][j]) for j in range(d)) + k * k * np.abs(u)
    return float(np.max(np.abs(lap + k * k * u)) / np.max(scale))


def fd_gradient_error(fun, grad, x, h: float = 1e-4) -> float:
    """Relative max difference between grad (trailing axis = direction) and a central difference."""
    x = np.asarray(x, dtype=float)
    E = np.eye(x.size)
    fd = np.stack([sum(c * (fun(x + s * h * e) - fun(x - s * h * e)) for s, c in _D1) / h for e in E], -1)
    return float(np.max(np.abs(fd - grad)) / np.max(np.abs(grad)))


# ---------------------------------------------------------------------------
# quadrature oracle for the elastic single layer
# ---------------------------------------------------------------------------

def _hessian_difference(kp: float, ks: float, r):
    """phi'' and phi'/r for phi(r) = (e^{i kp r} - e^{i ks r})/r.

    For ks r < 1 the power series sum_m i^m (kp^m - ks^m) r^{m-1}/m! avoids the
    cancellation between the two exponentials.
    """
    r = np.asarray(r, dtype=float)
    small = ks * r < 1.0
    d2 = np.zeros(r.shape, dtype=complex)
    d1 = np.zeros(r.shape, dtype=complex)
    if np.any(~small):
        rr = r[~small]
        for kk, sgn in ((kp, 1), (ks, -1)):
            e = np.exp(1j * kk * rr)
            g1 = e * (1j * kk / rr - 1 / rr ** 2)
            g2 = e * (-kk ** 2 / rr - 2j * kk / rr ** 2 + 2 / rr ** 3)
            d2[~small] += sgn * g2
            d1[~small] += sgn * g1 / rr
    if np.any(small):
        rr = r[small]
        acc2 = np.zeros(rr.shape, dtype=complex)
        acc1 = np.zeros(rr.shape, dtype=complex)
        for m in range(1, 60):
            c = 1j ** m * (kp ** m - ks ** m) / math.factorial(m)
            acc2 += (m - 1) * (m - 2) * c * rr ** (m - 3)
            acc1 += (m - 1) * c * rr ** (m - 3)
        d2[small] = acc2
        d1[small] = acc1
    return d2, d1


def kupradze(X, nm: NondimensionalMedium) -> np.ndarray:
    """Fundamental solution of L_{lam,mu} + k^2 tau^2 at offsets X (..., 3)."""
    ks, kp = nm.k_s, nm.k_p
    w2 = (nm.k * nm.tau) ** 2
    r = np.linalg.norm(X, axis=-1)
    xx = X[..., :, None] * X[..., None, :] / r[..., None, None] ** 2
    eye = np.eye(3)
    d2, d1 = _hessian_difference(kp, ks, r)
    hess = d2[..., None, None] * xx + d1[..., None, None] * (eye - xx)
    t1 = -eye * (np.exp(1j * ks * r) / (4 * np.pi * nm.mu * r))[..., None, None]
    return t1 + hess / (4 * np.pi * w2)


def kupradze_static(X, nm: NondimensionalMedium) -> np.ndarray:
    """The omega = 0 Kelvin-type tensor."""
    mu, L = nm.mu, nm.L
    r = np.linalg.norm(X, axis=-1)
    xx = X[..., :, None] * X[..., None, :] / r[..., None, None] ** 2
    g1 = (1 / mu + 1 / L) / (8 * np.pi)
    g2 = (1 / mu - 1 / L) / (8 * np.pi)
    return -(g1 / r)[..., None, None] * np.eye(3) - (g2 / r)[..., None, None] * xx


DENSITIES = ("Y_nu", "I", "N", "T")


def _density(kind, n, m, theta, phi):
    from .specfun import harmonic_derivatives, surface_gradient, vector_spherical_harmonics
    rh, _, _ = spherical_frame(theta, phi)
    if kind == "Y_nu":
        y, _, _ = harmonic_derivatives(n, m, theta, phi)
        return y[..., None] * rh
    if kind == "I":
        return vector_spherical_harmonics(n - 1, m, theta, phi).I
    if kind == "N":
        return vector_spherical_harmonics(n + 1, m, theta, phi).N
    if kind == "T":
        return vector_spherical_harmonics(n, m, theta, phi).T
    raise ValueError(f"density must be one of {DENSITIES}")


def oracle_single_layer(x, idx, density: str, nm: NondimensionalMedium, quad_order: int) -> np.ndarray:
    """Direct product quadrature of int_{|y|=1} Gamma(x - y) phi(y) ds(y).

    Gauss-Legendre in cos(theta) with quad_order nodes and the trapezoid rule
    with 2*quad_order nodes in phi.
    """
    n, m = idx
    if quad_order < 2 * (n + 2):
        raise ValueError(f"quad_order must be at least {2 * (n + 2)} for degree {n}")
    x = np.asarray(x, dtype=float)
    if abs(np.linalg.norm(x) - 1.0) < 1e-12:
        raise ValueError("the oracle evaluates off the surface only")
    t, w = np.polynomial.legendre.leggauss(quad_order)
    nph = 2 * quad_order
    th = np.arccos(t)
    ph = np.arange(nph) * 2 * np.pi / nph
    TH, PH = np.meshgrid(th, ph, indexing="ij")
    W = w[:, None] * np.full(nph, 2 * np.pi / nph)[None, :]
    y, _, _ = spherical_frame(TH, PH)
    dens = _density(density, n, m, TH, PH)
    G = kupradze(x - y, nm)
    return np.einsum("abij,abj,ab->i", G, dens, W)


def single_layer_prediction(x, idx, density: str, nm: NondimensionalMedium) -> np.ndarray:
    """Spectral prediction of the exterior single layer at one point |x| > 1."""
    n, m = idx
    x = np.asarray(x, dtype=float)
    r, theta, phi = _points(x)
    terms = layer_radial_terms(n, nm, [float(r)])[:, 0, 0]
    b, c1, d1, c2, d2 = terms
    tri_I = _density("I", n, m, theta, phi)
    tri_N = _density("N", n, m, theta, phi)
    if density == "T":
        return b * _density("T", n, m, theta, phi)
    if density == "I":
        return c1 * tri_I + d1 * tri_N
    if density == "N":
        return c2 * tri_I + d2 * tri_N
    if density == "Y_nu":
        return ((c1 + c2) * tri_I + (d1 + d2) * tri_N) / (2 * n + 1)
    raise ValueError(f"density must be one of {DENSITIES}")


def single_layer_prediction_radial(x, idx, nm: NondimensionalMedium) -> np.ndarray:
    """Radial form (-i k_p^2/L) j_n(k_p) h_n(k_p r) Y_n^m x_hat for the Y nu density."""
    n, m = idx
    x = np.asarray(x, dtype=float)
    r, theta, phi = _points(x)
    jp, _ = spherical_bessel_j(n, nm.k_p)
    h, _ = spherical_hankel_h1(n, nm.k_p * float(r))
    y = _density("Y_nu", n, m, theta, phi)
    return complex(((-1j * nm.k_p ** 2 / nm.L) * jp * h).to_complex()) * y
