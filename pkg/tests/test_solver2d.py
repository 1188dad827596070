import numpy as np
import pytest

from bubblescatter.diagnostics import ShellRegion, localization_ratios, shell_norm
from bubblescatter.medium import PDMS, nondimensionalize
from bubblescatter.solver2d import (IncidentSpec2D, NearResonanceError, boundary_residuals_2d, eval_fields_2d,
                                    eval_incident_2d, eval_interior_2d, eval_scattered_2d, localization_ratio_2d,
                                    solve_modes_2d)
from bubblescatter.solver3d import fd_helmholtz_residual, fd_navier_residual

NM = nondimensionalize(PDMS)


def test_spec_validation():
    with pytest.raises(ValueError):
        IncidentSpec2D(0)
    with pytest.raises(ValueError):
        IncidentSpec2D(3, amplitude=0)


@pytest.mark.parametrize("n", [1, 5, 20, 60])
def test_boundary_conditions(n):
    sol = solve_modes_2d(IncidentSpec2D(n), NM)
    assert np.all(boundary_residuals_2d(sol) < 1e-11)
    assert sol.residual < 1e-14


@pytest.mark.parametrize("n", [5, 20])
def test_pde_residuals_by_potential(n):
    sol = solve_modes_2d(IncidentSpec2D(n), NM)
    xo, xi = np.array([1.2, 0.7]), np.array([0.3, -0.4])
    for part in ("p", "s"):
        assert fd_navier_residual(lambda y: eval_scattered_2d(sol, y, part=part).to_complex()[0], xo, NM) < 1e-9
    assert fd_navier_residual(lambda y: eval_incident_2d(sol, y).to_complex()[0], xi, NM) < 1e-9
    assert fd_helmholtz_residual(lambda y: eval_interior_2d(sol, y).to_complex()[0], xi, NM.k) < 1e-9


def test_interior_localization_follows_power_law():
    # J_n(k r) ~ r^n at small k, so eta_u = zeta1^(n+1)
    for n in (20, 40, 60):
        eta_u, _ = localization_ratio_2d(solve_modes_2d(IncidentSpec2D(n), NM), 0.9, 1.1, 2.0)
        assert eta_u == pytest.approx(0.9 ** (n + 1), rel=1e-6)


def test_disk_eta_values_frozen():
    region = ShellRegion(0.9, 1.1, 2.0)
    expected = {20: (0.10941899, 0.45560868), 60: (0.00161731, 0.02569437)}
    for n, (a, b) in expected.items():
        sol = solve_modes_2d(IncidentSpec2D(n), NM)
        eta = localization_ratios(sol, region)
        assert eta == pytest.approx((a, b), rel=1e-6)
        assert eta == pytest.approx(localization_ratio_2d(sol, 0.9, 1.1, 2.0), rel=1e-12)


def test_norm_paths_agree():
    sol = solve_modes_2d(IncidentSpec2D(8), NM)
    for name, (a, b) in (("u", (0.0, 1.0)), ("us", (1.0, 2.0))):
        m = complex(shell_norm(sol, name, a, b).to_complex()).real
        q = complex(shell_norm(sol, name, a, b, method="quadrature").to_complex()).real
        assert q == pytest.approx(m, rel=1e-6)


def test_one_sided_fields():
    sol = solve_modes_2d(IncidentSpec2D(4), NM)
    out = eval_fields_2d(sol, np.array([[1.5, 0.0], [0.0, -1.2]]))
    assert set(out) == {"us", "ui", "u", "E"}
    assert set(eval_fields_2d(sol, np.array([[0.5, 0.0]]))) == {"u"}
    with pytest.raises(ValueError):
        eval_fields_2d(sol, np.array([[0.5, 0.0], [1.5, 0.0]]))


def test_near_resonance_error_type():
    assert issubclass(NearResonanceError, ArithmeticError)
