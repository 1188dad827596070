"""Fourier mode matching for a circular bubble in an elastic plane.

Per angular mode e^{i n theta}:

    interior     u   = a J_n(k r)
    compression  phi = b H_n(k_p r),   shear  psi = c H_n(k_s r),
    scattered    u^s = grad phi + curl(psi z_hat)
    incident     u^i = A grad(J_n(k_p r) e^{i n theta})

Each radial function is divided by its value at r = 1 and the incident scale
A J_n(k_p) is carried as a LogComplex, so the 3x3 system has moderate entries
even at n = 60.  The entries are written out in DERIVATION.md.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .logcomplex import LogComplex
from .medium import NondimensionalMedium
from .solver3d import FieldSample, energy_density, radial_integral
from .specfun import cylindrical_bessel


class NearResonanceError(ArithmeticError):
    """The per-mode 3x3 system is numerically singular."""

    def __init__(self, msg, condition_number):
        super().__init__(msg)
        self.condition_number = condition_number


SINGULAR_COND = 1e14


@dataclass(frozen=True)
class IncidentSpec2D:
    """Compressional incident mode A grad(J_n(k_p r) e^{i n theta})."""

    n: int
    amplitude: complex = 1.0
    normalized: bool = True

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("incident order n must be an integer >= 1")
        if self.amplitude == 0:
            raise ValueError("incident amplitude must be nonzero")


@dataclass(frozen=True)
class ModalSolution2D:
    """Coefficients relative to normalized radial functions.

    The physical coefficients are a = scale*a_t/J_n(k), b = scale*b_t/H_n(k_p),
    c = scale*c_t/H_n(k_s); LogComplex versions are exposed as properties.
    """

    incident: IncidentSpec2D
    medium: NondimensionalMedium
    scale: LogComplex
    a_t: complex
    b_t: complex
    c_t: complex
    condition_number: float
    residual: float
    ui_norm: LogComplex

    @property
    def n(self):
        return self.incident.n

    def _phys(self, coef, kind, kk):
        v, _ = cylindrical_bessel(kind, self.n, kk)
        return self.scale * coef / v

    @property
    def a(self) -> LogComplex:
        return self._phys(self.a_t, "J", self.medium.k)

    @property
    def b(self) -> LogComplex:
        return self._phys(self.b_t, "H1", self.medium.k_p)

    @property
    def c(self) -> LogComplex:
        return self._phys(self.c_t, "H1", self.medium.k_s)


# ---------------------------------------------------------------------------
# normalized radial functions
# ---------------------------------------------------------------------------

def _normalized(kind, n, kk, r):
    """f(r) = C_n(kk r)/C_n(kk) with f' and f''."""
    r = np.asarray(r, dtype=float)
    ref, _ = cylindrical_bessel(kind, n, kk)
    v, d = cylindrical_bessel(kind, n, kk * r)
    f = np.asarray((v / ref).to_complex())
    fd = kk * np.asarray((d / ref).to_complex())
    with np.errstate(divide="ignore", invalid="ignore"):
        fdd = -fd / r - (kk * kk - n * n / r ** 2) * f
    return f, fd, fdd


def _potential_field(n, F, Fd, Fdd, P, Pd, Pdd, r, theta):
    """Polar components and Cartesian gradient of grad(F e^{in th}) + curl(P e^{in th} z)."""
    e = np.exp(1j * n * theta)
    ur = (Fd + 1j * n * P / r) * e
    ut = (1j * n * F / r - Pd) * e
    dr_ur = (Fdd + 1j * n * (Pd / r - P / r ** 2)) * e
    dr_ut = (1j * n * (Fd / r - F / r ** 2) - Pdd) * e
    dth_ur = 1j * n * ur
    dth_ut = 1j * n * ut
    return _assemble(ur, ut, dr_ur, dr_ut, dth_ur, dth_ut, r, theta)


def _assemble(ur, ut, dr_ur, dr_ut, dth_ur, dth_ut, r, theta):
    c, s = np.cos(theta), np.sin(theta)
    rh = np.stack([c, s], -1)
    th = np.stack([-s, c], -1)
    val = ur[..., None] * rh + ut[..., None] * th
    # polar gradient: rows (r, theta) components, columns (d_r, (1/r) d_theta)
    prr = dr_ur
    prt = (dth_ur - ut) / r
    ptr = dr_ut
    ptt = (dth_ut + ur) / r
    outer = lambda u, v: u[..., :, None] * v[..., None, :]
    grad = (prr[..., None, None] * outer(rh, rh) + prt[..., None, None] * outer(rh, th)
            + ptr[..., None, None] * outer(th, rh) + ptt[..., None, None] * outer(th, th))
    div = prr + ptt
    return val, grad, div


def _incident_radial(spec, nm, r):
    return _normalized("J", spec.n, nm.k_p, r)


def _incident_scale(spec, nm) -> LogComplex:
    jp, _ = cylindrical_bessel("J", spec.n, nm.k_p)
    return spec.amplitude * jp


def incident_norm_2d(spec: IncidentSpec2D, nm: NondimensionalMedium) -> LogComplex:
    """||A grad(J_n(k_p r) e^{in theta})||_{L^2(D)} by radial quadrature."""
    n = spec.n

    def fun(r):
        f, fd, _ = _incident_radial(spec, nm, r)
        return (np.abs(fd) ** 2 + n * n * np.abs(f) ** 2 / r ** 2) * r

    val = 2 * math.pi * radial_integral(fun, 0.0, 1.0)
    return _incident_scale(spec, nm).abs() * math.sqrt(val)


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------

def transmission_matrix_2d(n: int, nm: NondimensionalMedium):
    """Matrix and right-hand side in the normalized unknowns (a_t, b_t, c_t).

    Rows: normal displacement, normal traction plus delta tau^2 u, tangential
    traction; the right-hand side is the incident contribution moved across
    and divided by the incident scale.
    """
    lam, mu, k, kp, ks = nm.lam, nm.mu, nm.k, nm.k_p, nm.k_s
    dt2 = nm.delta * nm.tau ** 2
    one = np.array(1.0)
    _, jd, _ = _normalized("J", n, k, one)
    _, hp, _ = _normalized("H1", n, kp, one)
    _, hs, _ = _normalized("H1", n, ks, one)
    _, jp, _ = _normalized("J", n, kp, one)
    jd, hp, hs, jp = (complex(v) for v in (jd, hp, hs, jp))
    N2 = n * n

    def srr_p(d):  # sigma_rr of a compressional potential with f(1) = 1, f'(1) = d
        return -lam * kp ** 2 + 2 * mu * (-d - (kp ** 2 - N2))

    def srt_p(d):
        return 2j * n * mu * (d - 1)

    A = np.array([
        [-jd / k ** 2, hp, 1j * n],
        [dt2, srr_p(hp), 2j * n * mu * (hs - 1)],
        [0.0, srt_p(hp), mu * (2 * hs + ks ** 2 - 2 * N2)],
    ], dtype=complex)
    rhs = -np.array([jp, srr_p(jp), srt_p(jp)], dtype=complex)
    return A, rhs


def _balanced_solve(A, rhs):
    """Row and column equilibration by powers of two, then LU with partial pivoting."""
    rs = np.exp2(-np.floor(np.log2(np.max(np.abs(A), axis=1))))
    As = A * rs[:, None]
    cs = np.exp2(-np.floor(np.log2(np.max(np.abs(As), axis=0))))
    As = As * cs[None, :]
    cond = float(np.linalg.cond(As))
    if not np.isfinite(cond) or cond > SINGULAR_COND:
        raise NearResonanceError(f"3x3 transmission system is singular (cond={cond:.3g})", cond)
    y = np.linalg.solve(As, rhs * rs)
    x = y * cs
    res = np.max(np.abs(A @ x - rhs) / np.max(np.abs(A) * np.abs(x)[None, :], axis=1))
    return x, cond, float(res)


def solve_modes_2d(spec: IncidentSpec2D, nm: NondimensionalMedium) -> ModalSolution2D:
    """Solve the per-mode transmission system on the unit disk."""
    A, rhs = transmission_matrix_2d(spec.n, nm)
    x, cond, res = _balanced_solve(A, rhs)
    ui_norm = incident_norm_2d(spec, nm)
    scale = _incident_scale(spec, nm)
    if spec.normalized:
        scale = scale / ui_norm
    return ModalSolution2D(incident=spec, medium=nm, scale=scale, a_t=complex(x[0]), b_t=complex(x[1]),
                           c_t=complex(x[2]), condition_number=cond, residual=res, ui_norm=ui_norm)


# ---------------------------------------------------------------------------
# field evaluation
# ---------------------------------------------------------------------------

def _polar(x):
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != 2:
        raise ValueError("points must have a trailing dimension of 2")
    return np.hypot(x[..., 0], x[..., 1]), np.arctan2(x[..., 1], x[..., 0])


def eval_interior_2d(sol: ModalSolution2D, x) -> FieldSample:
    """Interior pressure-like field u = a J_n(k r) e^{i n theta} and its gradient, |x| <= 1."""
    r, theta = _polar(x)
    if np.any(r > 1):
        raise ValueError("interior evaluation needs |x| <= 1")
    n, k = sol.n, sol.medium.k
    rs = np.where(r > 0, r, 1.0)
    f, fd, _ = _normalized("J", n, k, rs)
    e = np.exp(1j * n * theta)
    val = sol.a_t * f * e
    gr = sol.a_t * fd * e
    gt = sol.a_t * 1j * n * f / rs * e
    c, s = np.cos(theta), np.sin(theta)
    grad = gr[..., None] * np.stack([c, s], -1) + gt[..., None] * np.stack([-s, c], -1)
    at0 = r == 0
    if np.any(at0):
        val[at0] = 0
        grad[at0] = 0
    return FieldSample(sol.scale, val, grad)


def _exterior_radial(sol, r):
    n, nm = sol.n, sol.medium
    F, Fd, Fdd = _normalized("H1", n, nm.k_p, r)
    P, Pd, Pdd = _normalized("H1", n, nm.k_s, r)
    return F, Fd, Fdd, P, Pd, Pdd


def eval_scattered_2d(sol: ModalSolution2D, x, part: str = "both") -> FieldSample:
    """u^s with Cartesian gradient and divergence, |x| >= 1.

    part selects the compressional ("p") or shear ("s") potential alone.  At
    low frequency the two parts nearly cancel, so the total carries a
    relative error of about condition_number * eps.
    """
    r, theta = _polar(x)
    if np.any(r < 1):
        raise ValueError("exterior evaluation needs |x| >= 1")
    if part not in ("both", "p", "s"):
        raise ValueError("part must be 'both', 'p' or 's'")
    F, Fd, Fdd, P, Pd, Pdd = _exterior_radial(sol, r)
    b = sol.b_t if part in ("both", "p") else 0.0
    c = sol.c_t if part in ("both", "s") else 0.0
    val, grad, div = _potential_field(sol.n, b * F, b * Fd, b * Fdd, c * P, c * Pd, c * Pdd, r, theta)
    return FieldSample(sol.scale, val, grad, div)


def eval_incident_2d(sol: ModalSolution2D, x) -> FieldSample:
    """u^i with Cartesian gradient and divergence (finite at the origin)."""
    r, theta = _polar(x)
    rs = np.where(r > 0, r, 1.0)
    F, Fd, Fdd = _incident_radial(sol.incident, sol.medium, rs)
    z = np.zeros_like(F)
    val, grad, div = _potential_field(sol.n, F, Fd, Fdd, z, z, z, rs, theta)
    at0 = r == 0
    if np.any(at0):
        val[at0] = 0
        grad[at0] = 0
        div[at0] = 0
    return FieldSample(sol.scale, val, grad, div)


def eval_fields_2d(sol: ModalSolution2D, x) -> dict:
    """All fields at points x (..., 2) on one side of the unit circle.

    Interior points give {"u"}; exterior points give {"us", "ui", "u", "E"}
    with E the energy density Re[sigma(u) : conj(grad u)] of the total field.
    """
    r, _ = _polar(x)
    if np.all(r < 1):
        return {"u": eval_interior_2d(sol, x)}
    if np.all(r >= 1):
        us = eval_scattered_2d(sol, x)
        ui = eval_incident_2d(sol, x)
        u = us + ui
        e = energy_density(u.grad, sol.medium.lam, sol.medium.mu, u.div)
        return {"us": us, "ui": ui, "u": u, "E": u.scale.abs() ** 2 * e}
    raise ValueError("points must lie on one side of the unit circle")


def boundary_residuals_2d(sol: ModalSolution2D, n_angles: int = 64) -> np.ndarray:
    """Relative residuals of the three transmission conditions from the field evaluators.

    Returns [normal displacement, normal traction, tangential traction]; each
    is the max over the angles divided by the largest single term entering
    the condition (incident, compressional, shear, interior).
    """
    nm = sol.medium
    th = 2 * np.pi * np.arange(n_angles) / n_angles
    x = np.stack([np.cos(th), np.sin(th)], -1)
    nu = x
    tng = np.stack([-np.sin(th), np.cos(th)], -1)
    parts = [eval_incident_2d(sol, x), eval_scattered_2d(sol, x, "p"), eval_scattered_2d(sol, x, "s")]
    inn = eval_interior_2d(sol, x)
    dt2 = nm.delta * nm.tau ** 2
    un, sn, st = [], [], []
    for f in parts:
        sig = np.einsum("aij,aj->ai", _stress(f, nm), nu)
        un.append(np.einsum("ai,ai->a", f.value, nu))
        sn.append(np.einsum("ai,ai->a", sig, nu))
        st.append(np.einsum("ai,ai->a", sig, tng))
    un.append(-np.einsum("ai,ai->a", inn.grad, nu) / nm.k ** 2)
    sn.append(dt2 * inn.value)
    out = []
    for terms in (un, sn, st):
        total = np.abs(sum(terms)).max()
        scale = max(np.abs(t).max() for t in terms)
        out.append(total / scale)
    return np.array(out)


def _stress(field: FieldSample, nm):
    from .solver3d import lame_stress
    return lame_stress(field.grad, nm.lam, nm.mu, field.div)


# ---------------------------------------------------------------------------
# localization
# ---------------------------------------------------------------------------

def _interior_sq(sol, r0, r1):
    n, k = sol.n, sol.medium.k

    def fun(r):
        f, _, _ = _normalized("J", n, k, r)
        return np.abs(f) ** 2 * r

    return 2 * math.pi * abs(sol.a_t) ** 2 * radial_integral(fun, r0, r1)


def _scattered_sq(sol, r0, r1):
    n = sol.n

    def fun(r):
        F, Fd, _, P, Pd, _ = _exterior_radial(sol, r)
        b, c = sol.b_t, sol.c_t
        ur = b * Fd + 1j * n * c * P / r
        ut = 1j * n * b * F / r - c * Pd
        return (np.abs(ur) ** 2 + np.abs(ut) ** 2) * r

    return 2 * math.pi * radial_integral(fun, r0, r1)


def localization_ratio_2d(sol: ModalSolution2D, zeta1: float, zeta2: float, R: float) -> tuple:
    """(eta_u, eta_us): L^2 mass outside the boundary shells over the total."""
    if not (0 < zeta1 < 1 < zeta2 < R):
        raise ValueError("need 0 < zeta1 < 1 < zeta2 < R")
    eta_u = math.sqrt(_interior_sq(sol, 0.0, zeta1) / _interior_sq(sol, 0.0, 1.0))
    eta_us = math.sqrt(_scattered_sq(sol, zeta2, R) / _scattered_sq(sol, 1.0, R))
    return eta_u, eta_us
