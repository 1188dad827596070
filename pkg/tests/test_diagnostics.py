import json
import math

import numpy as np
import pytest

from bubblescatter.diagnostics import (ShellRegion, classify_regime, closed_form_energies, diagnose,
                                       localization_ratios, localization_reference, resonance_bounds,
                                       resonance_ratios, shell_norm, stress_energies, stress_lower_bound,
                                       thresholds)
from bubblescatter.medium import PDMS, nondimensionalize, pdms_printed
from bubblescatter.solver3d import IncidentSpec3D, incident_norm_sq_printed, solve_modes

NM = nondimensionalize(PDMS)
REGION = ShellRegion(0.9, 1.1, 2.0)


@pytest.fixture(scope="module")
def sol5():
    return solve_modes(IncidentSpec3D.single(5, normalized=True), NM)


def test_region_validation():
    with pytest.raises(ValueError):
        ShellRegion(1.1, 0.9, 2.0)
    with pytest.raises(ValueError):
        ShellRegion(0.9, 2.5, 2.0)


def test_shell_norm_argument_checks(sol5):
    with pytest.raises(ValueError):
        shell_norm(sol5, "u", 0.5, 1.5)
    with pytest.raises(ValueError):
        shell_norm(sol5, "us", 0.5, 1.5)
    with pytest.raises(ValueError):
        shell_norm(sol5, "u", 0.0, 1.0, method="monte_carlo")


@pytest.mark.parametrize("name,a,b", [("u", 0.9, 1.0), ("us", 1.0, 1.1), ("ui", 0.0, 1.0), ("total", 1.0, 2.0)])
@pytest.mark.parametrize("gradient", [False, True])
def test_modal_and_quadrature_paths_agree(sol5, name, a, b, gradient):
    m = complex(shell_norm(sol5, name, a, b, gradient=gradient).to_complex()).real
    q = complex(shell_norm(sol5, name, a, b, method="quadrature", gradient=gradient).to_complex()).real
    assert q == pytest.approx(m, rel=1e-10)


def test_localization_values(sol5):
    eta_u, eta_us = localization_ratios(sol5, REGION)
    ref_u, ref_us = localization_reference(5, REGION)
    assert ref_u == pytest.approx(0.9 ** 13, rel=1e-15)
    assert eta_u ** 2 == pytest.approx(ref_u, rel=1e-8)
    # the exact scattered field decays more slowly than the reference assumes
    assert eta_us ** 2 == pytest.approx(0.72168, rel=1e-4)
    assert ref_us == pytest.approx(0.4229706, rel=1e-7)


def test_resonance_values(sol5):
    g_u, g_us = resonance_ratios(sol5, REGION)
    b_u, b_us = resonance_bounds(5, REGION, NM)
    assert g_us > b_us
    assert g_u < b_u
    assert b_us == pytest.approx(0.0209181, rel=1e-5)


def test_energy_decomposition(sol5):
    en = stress_energies(sol5, REGION)
    assert en.identity_residual < 1e-12
    assert float(en.E_u.to_complex().real) == pytest.approx(94.883, rel=1e-4)
    total = en.E_us + en.E_ui + en.Rest
    assert complex((total / en.E_u).to_complex()).real == pytest.approx(1.0, abs=1e-12)


def test_beta_bound_values():
    nm = pdms_printed()
    assert stress_lower_bound(5, 1.1, nm) == pytest.approx(4.3753749785e-5, rel=1e-9)
    assert stress_lower_bound(15, 1.1, nm) == pytest.approx(1.1521136196e6, rel=1e-9)
    assert stress_lower_bound(25, 1.1, nm) == pytest.approx(9.3633300494e15, rel=1e-9)
    assert math.isfinite(stress_lower_bound(60, 1.1, NM))


def test_closed_form_energy_matches_reference_table():
    nm = pdms_printed()
    for n, table in ((5, 1.7184603683e-3), (15, 7.5832965064e7), (25, 6.6295335515e17)):
        e = closed_form_energies(n, 1.0, 1.1, nm)["E_us"] / incident_norm_sq_printed(IncidentSpec3D.single(n), nm)
        assert complex(e.to_complex()).real == pytest.approx(table, rel=1e-6)


def test_thresholds_frozen():
    thr = thresholds(0.01, 1e3, 0.9, 1.1, NM)
    assert thr["n1"] == pytest.approx(20.3543, rel=1e-5)
    assert thr["n2"] == pytest.approx(24.6589, rel=1e-5)
    assert thr["n3"] == pytest.approx(0.74188, rel=1e-4)
    assert thr["n4"] == pytest.approx(13.9455, rel=1e-5)
    assert thr["M0"] == pytest.approx(1.4438e15, rel=1e-4)
    assert thr["M1"] == pytest.approx(2.081e8, rel=1e-3)


def test_regime_classification():
    thr = thresholds(0.01, 1e3, 0.9, 1.1, NM)
    assert classify_regime(5, 1e3, thr) == {"u_interior": (), "us_exterior": (), "u_exterior": ()}
    r25 = classify_regime(25, 1e3, thr)
    assert set(r25["u_interior"]) == {"BL", "SR", "QMR"}
    big = classify_regime(15, 1e16, thr)
    assert "SC" in big["us_exterior"] and "SC" in big["u_exterior"] and "QMR" in big["u_interior"]


def test_report_serialization(sol5):
    rep = diagnose(sol5, REGION)
    d = json.loads(rep.to_json())
    assert d["schema"] == 1 and d["n"] == 5
    assert d["provenance"]["eta_u"].startswith("both(")
    assert float(d["provenance"]["eta_u"][5:-1]) < 1e-8
    assert "E(u)" in rep.to_table()
    assert np.isfinite(d["log_scaled"]["E_u"]["log10_mag"])
