"""Physical parameters, nondimensionalization and regime checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

REGIME_K_MAX = 0.1
REGIME_DELTA_MAX = 0.1
REGIME_TAU_MAX = 1.0

K_NOT_SMALL = "K_NOT_SMALL"
DELTA_NOT_SMALL = "DELTA_NOT_SMALL"
TAU_NOT_SUBUNIT = "TAU_NOT_SUBUNIT"


class MediumError(ValueError):
    """Invalid physical or nondimensional parameters."""


@dataclass(frozen=True)
class PhysicalMedium:
    """Dimensional bubble and elastic parameters (SI units).

    Attributes:
        rho_b: bubble density.
        kappa: bubble bulk modulus.
        rho_e: elastic density.
        lambda_t: first Lame parameter of the solid.
        mu_t: shear modulus of the solid.
        omega: angular frequency.
        l_D: characteristic length of the bubble.
    """

    rho_b: float
    kappa: float
    rho_e: float
    lambda_t: float
    mu_t: float
    omega: float
    l_D: float = 1.0

    def __post_init__(self):
        for name in ("rho_b", "kappa", "rho_e", "mu_t", "omega", "l_D"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise MediumError(f"{name} must be positive, got {v}")
        if not 3 * self.lambda_t + 2 * self.mu_t > 0:
            raise MediumError("strong convexity requires 3*lambda + 2*mu > 0")


# elastic shell of polydimethylsiloxane around an air bubble
PDMS = PhysicalMedium(rho_b=1.2, kappa=1.412e5, rho_e=1042.0, lambda_t=1.083e9,
                      mu_t=6.5e5, omega=0.1, l_D=1.0)


@dataclass(frozen=True)
class NondimensionalMedium:
    """Working parameter set of the scaled transmission problem.

    ``k_s`` is the true shear wavenumber k*tau/sqrt(mu); ``k_s_printed`` keeps
    the value k*tau/sqrt(2 mu) for reporting.
    """

    k: float
    tau: float
    delta: float
    lam: float
    mu: float

    def __post_init__(self):
        if not (self.k > 0 and self.tau > 0 and self.delta >= 0 and self.mu > 0):
            raise MediumError("need k > 0, tau > 0, delta >= 0, mu > 0")

    @property
    def L(self) -> float:
        """lambda + 2 mu (equals one for media built by nondimensionalize)."""
        return self.lam + 2 * self.mu

    @property
    def k_p(self) -> float:
        return self.k * self.tau / math.sqrt(self.L)

    @property
    def k_s(self) -> float:
        return self.k * self.tau / math.sqrt(self.mu)

    @property
    def k_s_printed(self) -> float:
        return self.k * self.tau / math.sqrt(2 * self.mu)

    @property
    def c_b_ratio(self) -> float:
        return self.tau

    def with_(self, **kw) -> "NondimensionalMedium":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {"k": self.k, "tau": self.tau, "delta": self.delta, "lambda": self.lam,
                "mu": self.mu, "k_p": self.k_p, "k_s": self.k_s,
                "k_s_printed_formula": self.k_s_printed}


def nondimensionalize(pm: PhysicalMedium) -> NondimensionalMedium:
    """Scale a physical configuration to the dimensionless problem.

    c_b = sqrt(kappa/rho_b), k = omega l_D / c_b, tau = c_b / c_p with
    c_p = sqrt((lambda + 2 mu)/rho_e), delta = rho_b/rho_e and the Lame
    parameters divided by lambda + 2 mu.
    """
    if not isinstance(pm, PhysicalMedium):
        raise MediumError("expected a PhysicalMedium")
    c_b = math.sqrt(pm.kappa / pm.rho_b)
    M = pm.lambda_t + 2 * pm.mu_t
    if M <= 0:
        raise MediumError("lambda + 2 mu must be positive")
    c_p = math.sqrt(M / pm.rho_e)
    mu = pm.mu_t / M
    lam = 1.0 - 2.0 * mu  # exact complement so that lambda + 2 mu == 1
    return NondimensionalMedium(k=pm.omega * pm.l_D / c_b, tau=c_b / c_p,
                                delta=pm.rho_b / pm.rho_e, lam=lam, mu=mu)


def pdms_printed() -> NondimensionalMedium:
    """PDMS with k, tau, delta rounded to five significant digits, as tabulated.

    The Lame ratios are those of nondimensionalize(PDMS).  Tabulated lower
    bounds were produced from these rounded values; at n = 25 the rounding of
    tau alone moves tau^(2n-2) by about 2.5e-4.
    """
    exact = nondimensionalize(PDMS)
    return NondimensionalMedium(k=2.9152e-4, tau=0.33627, delta=1.1516e-3, lam=exact.lam, mu=exact.mu)


def check_regime(nm: NondimensionalMedium, k_max=REGIME_K_MAX, delta_max=REGIME_DELTA_MAX,
                 tau_max=REGIME_TAU_MAX) -> list:
    """Warnings for violated small-parameter assumptions (empty when all hold)."""
    out = []
    if not nm.k < k_max:
        out.append(K_NOT_SMALL)
    if not nm.delta < delta_max:
        out.append(DELTA_NOT_SMALL)
    if not nm.tau < tau_max:
        out.append(TAU_NOT_SUBUNIT)
    return out
