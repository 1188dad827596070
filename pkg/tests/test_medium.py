import pytest

from bubblescatter.medium import (DELTA_NOT_SMALL, PDMS, MediumError, NondimensionalMedium, PhysicalMedium,
                                  check_regime, nondimensionalize, pdms_printed)


def test_pdms_nondimensional_values():
    nm = nondimensionalize(PDMS)
    assert nm.k == pytest.approx(2.915233e-4, rel=1e-6)
    assert nm.tau == pytest.approx(0.3362682, rel=1e-6)
    assert nm.delta == pytest.approx(1.15163e-3, rel=1e-5)
    assert nm.mu == pytest.approx(5.99465e-4, rel=1e-5)
    assert nm.L == pytest.approx(1.0, abs=1e-15)
    assert nm.k_s == pytest.approx(nm.k * nm.tau / nm.mu ** 0.5)
    assert check_regime(nm) == []


def test_printed_parameter_set():
    p = pdms_printed()
    assert (p.k, p.tau, p.delta) == (2.9152e-4, 0.33627, 1.1516e-3)
    assert p.mu == nondimensionalize(PDMS).mu


def test_regime_warnings_and_validation():
    nm = nondimensionalize(PDMS).with_(delta=0.2)
    assert DELTA_NOT_SMALL in check_regime(nm)
    with pytest.raises(MediumError):
        NondimensionalMedium(k=-1.0, tau=0.3, delta=0.0, lam=1.0, mu=0.1)
    with pytest.raises(MediumError):
        PhysicalMedium(rho_b=-1.0, kappa=1.0, rho_e=1.0, lambda_t=1.0, mu_t=1.0, omega=1.0, l_D=1.0)
