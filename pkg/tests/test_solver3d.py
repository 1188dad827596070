import math

import numpy as np
import pytest

from bubblescatter.diagnostics import shell_norm
from bubblescatter.medium import PDMS, nondimensionalize
from bubblescatter.solver3d import (IncidentSpec3D, energy_density, eval_exterior_scattered,
                                   eval_exterior_scattered_radial, eval_incident, eval_interior, fd_gradient_error,
                                   fd_helmholtz_residual, fd_navier_residual, incident_norm,
                                   incident_norm_sq_leading, incident_norm_sq_printed, lame_stress,
                                   oracle_single_layer, single_layer_prediction, single_layer_prediction_radial,
                                   solve_modes, transmission_residuals)

NM = nondimensionalize(PDMS)
X_OUT = np.array([0.7, 0.5, 1.0])
X_IN = np.array([0.3, -0.4, 0.5])


def test_incident_spec_validation():
    with pytest.raises(ValueError):
        IncidentSpec3D(0, [1.0])
    with pytest.raises(ValueError):
        IncidentSpec3D(2, [1, 0, 0])
    with pytest.raises(ValueError):
        IncidentSpec3D(1, [0, 0, 0])
    with pytest.raises(ValueError):
        IncidentSpec3D.single(2, kind="plane")


@pytest.mark.parametrize("n", [1, 2])
@pytest.mark.parametrize("density", ["Y_nu", "I", "N", "T"])
def test_single_layer_matches_kupradze_quadrature(n, density):
    x = np.array([0.3, -0.5, 1.4])
    o = oracle_single_layer(x, (n, 1), density, NM, 40)
    p = single_layer_prediction(x, (n, 1), density, NM)
    assert np.linalg.norm(o - p) / np.linalg.norm(o) < 1e-10


def test_radial_form_is_not_the_single_layer():
    x = np.array([0.3, -0.5, 1.4])
    o = oracle_single_layer(x, (2, 1), "Y_nu", NM, 40)
    rad = single_layer_prediction_radial(x, (2, 1), NM)
    assert np.linalg.norm(o - rad) / np.linalg.norm(o) > 0.5


@pytest.mark.parametrize("kind", ["printed", "p_wave"])
@pytest.mark.parametrize("n", [1, 3, 10, 25])
def test_transmission_conditions_hold(n, kind):
    res = transmission_residuals(solve_modes(IncidentSpec3D.single(n, normalized=True, kind=kind), NM))
    assert res["displacement"] < 1e-12
    assert res["traction_normal"] < 1e-11
    # the normal-density representation leaves the tangential traction free
    assert res["traction_tangential"] > 1e-3


@pytest.mark.parametrize("n", [3, 10])
def test_pde_residuals(n):
    sol = solve_modes(IncidentSpec3D.single(n, normalized=True), NM)
    us = lambda x: eval_exterior_scattered(sol, x).to_complex()[0]
    ub = lambda x: eval_interior(sol, x).to_complex()[0]
    assert fd_navier_residual(us, X_OUT, NM) < 1e-9
    assert fd_helmholtz_residual(ub, X_IN, NM.k) < 1e-9
    assert fd_gradient_error(us, eval_exterior_scattered(sol, X_OUT).to_complex()[1], X_OUT) < 1e-9
    pw = IncidentSpec3D.single(n, normalized=True, kind="p_wave")
    assert fd_navier_residual(lambda x: eval_incident(pw, NM, x).to_complex()[0], X_IN, NM) < 1e-9


def test_printed_incident_is_not_a_navier_solution():
    spec = IncidentSpec3D.single(3, normalized=True)
    assert fd_navier_residual(lambda x: eval_incident(spec, NM, x).to_complex()[0], X_IN, NM) > 0.1


def test_evaluator_domains_and_sphere_snap():
    sol = solve_modes(IncidentSpec3D.single(2), NM)
    with pytest.raises(ValueError):
        eval_interior(sol, np.array([0.0, 0.0, 1.2]))
    with pytest.raises(ValueError):
        eval_exterior_scattered(sol, np.array([0.0, 0.0, 0.9]))
    x = np.array([0.6, 0.8, 0.0]) * (1 - 1e-15)
    assert np.all(np.isfinite(eval_exterior_scattered(sol, x).value))
    assert np.all(np.isfinite(eval_exterior_scattered_radial(sol, np.array([0.0, 0.0, 1.5])).value))


def test_incident_norm_forms():
    spec = IncidentSpec3D.single(5)
    q = incident_norm(spec, NM) ** 2
    lead = incident_norm_sq_leading(spec, NM)
    printed = incident_norm_sq_printed(spec, NM)
    assert complex((q / lead).to_complex()).real == pytest.approx(1.0, abs=1e-6)
    assert complex((printed / lead).to_complex()).real == pytest.approx(4 * math.pi * 6 / 11, rel=1e-12)


def test_normalized_incident_has_unit_norm():
    sol = solve_modes(IncidentSpec3D.single(4, normalized=True), NM)
    assert complex(shell_norm(sol, "ui", 0.0, 1.0).to_complex()).real == pytest.approx(1.0, rel=1e-10)


def test_degree_60_is_log_scaled():
    sol = solve_modes(IncidentSpec3D.single(60, normalized=True), NM)
    assert float(sol.ui_norm.log10_magnitude) < -308
    assert np.isfinite(float(sol.psi_e.log10_magnitude))
    fs = eval_exterior_scattered(sol, np.array([0.0, 0.9, 1.0]))
    assert np.all(np.isfinite(fs.value)) and np.isfinite(float(fs.scale.log10_magnitude))


def test_stress_and_energy_density():
    g = np.array([[1.0, 2.0, 0.0], [0.0, 3.0, 1.0], [1.0, 0.0, -1.0]])
    s = lame_stress(g, 2.0, 0.5)
    np.testing.assert_allclose(s, s.T)
    assert s[0, 0] == pytest.approx(2.0 * 3.0 + 1.0)
    assert energy_density(g, 2.0, 0.5) == pytest.approx(np.sum(s * g))
