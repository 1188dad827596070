"""Acceptance criteria C1-C7.

Every test prints one PASS/FAIL line at the stated tolerance; the lines are
collected again in the terminal summary (see conftest.py).  Running this file
directly prints the same lines without pytest.
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from bubblescatter import cli
from bubblescatter.diagnostics import (ShellRegion, diagnose, localization_ratios, localization_reference,
                                       resonance_bounds, resonance_ratios, stress_energies, stress_lower_bound)
from bubblescatter.medium import PDMS, nondimensionalize, pdms_printed
from bubblescatter.solver2d import IncidentSpec2D, solve_modes_2d
from bubblescatter.solver3d import IncidentSpec3D, solve_modes

RESULTS: list[str] = []

EXACT = nondimensionalize(PDMS)
BETA_MANTISSAS = {5: 4.37537, 15: 1.152114, 25: 9.36331}
C3_DERIVED = {5: (0.2541866, 0.422972)}


def report(label: str, passed: bool, detail: str) -> bool:
    line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
    RESULTS.append(line)
    print(line)
    return passed


def mantissa(x: float) -> tuple:
    e = math.floor(math.log10(abs(x)))
    return x / 10 ** e, e


def _same_4_digits(a: float, b: float) -> bool:
    return round(a, 3) == round(b, 3) or abs(a - b) / abs(b) < 5e-5


def criterion_1() -> bool:
    t0 = time.perf_counter()
    nm = pdms_printed()
    parts, ok = [], True
    for n, want in BETA_MANTISSAS.items():
        beta = stress_lower_bound(n, 1.1, nm)
        m, e = mantissa(beta)
        pub_e = mantissa(cli.TABLE2_REFERENCE[n][2])[1]
        exact_m = mantissa(stress_lower_bound(n, 1.1, EXACT))[0]
        ok &= _same_4_digits(m, want)
        parts.append(f"n={n} beta={m:.7f}e{e} (table {want}, exponent offset {pub_e - e:+d}, "
                     f"exact-medium mantissa {exact_m:.6f})")
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    return report("C1 beta mantissas, 4 significant digits, < 1 s", ok, "; ".join(parts) + f"; {dt:.3f} s")


def criterion_2() -> bool:
    t0 = time.perf_counter()
    region = ShellRegion(0.9, 1.1, 2.0)
    parts, ok = [], True
    for n in (5, 15, 25):
        sol = solve_modes(IncidentSpec3D.single(n, normalized=True), EXACT)
        en = stress_energies(sol, region)
        e_u = float(en.E_u.to_complex().real)
        beta = stress_lower_bound(n, 1.1, EXACT)
        ok &= e_u >= beta
        parts.append(f"n={n} E(u)/|ui|^2={e_u:.4e} beta={beta:.4e}")
    dt = time.perf_counter() - t0
    ok &= dt < 30
    return report("C2 E(u)/|ui|^2 >= beta(n, 1.1), < 30 s", ok, "; ".join(parts) + f"; {dt:.1f} s")


def criterion_3() -> bool:
    t0 = time.perf_counter()
    region = ShellRegion(0.9, 1.1, 2.0)
    parts, ok = [], True
    for n in (5, 10):
        sol = solve_modes(IncidentSpec3D.single(n, normalized=True), EXACT)
        eta_u, eta_us = localization_ratios(sol, region)
        ref_u, ref_us = localization_reference(n, region)
        if n in C3_DERIVED:
            # frozen references agree with the closed forms
            assert abs(ref_u / C3_DERIVED[n][0] - 1) < 1e-6 and abs(ref_us / C3_DERIVED[n][1] - 1) < 1e-5
        du = abs(eta_u ** 2 - ref_u) / ref_u
        dus = abs(eta_us ** 2 - ref_us) / ref_us
        ok &= du <= 1e-4 and dus <= 1e-4
        parts.append(f"n={n} interior {eta_u ** 2:.7f} vs {ref_u:.7f} (rel {du:.1e}), "
                     f"exterior {eta_us ** 2:.6f} vs {ref_us:.6f} (rel {dus:.1e})")
    dt = time.perf_counter() - t0
    ok &= dt < 10
    return report("C3 localization ratios vs closed forms, rel 1e-4, < 10 s", ok, "; ".join(parts) + f"; {dt:.1f} s")


def criterion_4() -> bool:
    t0 = time.perf_counter()
    region = ShellRegion(0.9, 1.1, 2.0)
    etas = {}
    for n in (20, 40, 60):
        etas[n] = localization_ratios(solve_modes_2d(IncidentSpec2D(n), EXACT), region)
    u = [etas[n][0] for n in (20, 40, 60)]
    us = [etas[n][1] for n in (20, 40, 60)]
    dt = time.perf_counter() - t0
    ok = (u[2] < 0.1 and us[2] < 0.3 and u[0] > u[1] > u[2] and us[0] > us[1] > us[2] and dt < 60)
    detail = ", ".join(f"n={n} ({a:.4f}, {b:.4f})" for n, (a, b) in etas.items())
    return report("C4 disk eta_u < 0.1, eta_us < 0.3 at n=60, monotone, < 60 s", ok, detail + f"; {dt:.1f} s")


def criterion_5() -> bool:
    t0 = time.perf_counter()
    region = ShellRegion(0.9, 1.1, 2.0)
    parts, ok = [], True
    for n in (15, 25):
        sol = solve_modes(IncidentSpec3D.single(n, normalized=True), EXACT)
        g_u, g_us = resonance_ratios(sol, region)
        b_u, b_us = resonance_bounds(n, region, EXACT)
        ok &= g_u > b_u and g_us > b_us
        parts.append(f"n={n} interior {g_u:.3e} vs bound {b_u:.3e}, exterior {g_us:.3e} vs bound {b_us:.3e}")
    dt = time.perf_counter() - t0
    ok &= dt < 30
    return report("C5 gradient ratios exceed resonance bounds, < 30 s", ok, "; ".join(parts) + f"; {dt:.1f} s")


def criterion_6() -> bool:
    t0 = time.perf_counter()
    checks = cli.verification_suite()
    dt = time.perf_counter() - t0
    for c in checks:
        RESULTS.append("      " + c.line())
        print("      " + c.line())
    failed = [c.name for c in checks if not c.passed]
    ok = not failed and dt < 300
    detail = f"{len(checks) - len(failed)}/{len(checks)} sub-checks pass"
    if failed:
        detail += " (failing: " + "; ".join(failed) + ")"
    return report("C6 property suites, < 5 min", ok, detail + f"; {dt:.1f} s")


def _finite_tree(obj) -> bool:
    if isinstance(obj, dict):
        return all(_finite_tree(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return all(_finite_tree(v) for v in obj)
    if isinstance(obj, float):
        return math.isfinite(obj)
    return True


def criterion_7() -> bool:
    t0 = time.perf_counter()
    region = ShellRegion(0.9, 1.1, 2.0)
    sol = solve_modes(IncidentSpec3D.single(60, normalized=True), EXACT)
    rep = diagnose(sol, region)
    raw = float(sol.ui_norm.log10_magnitude)
    sol2 = solve_modes_2d(IncidentSpec2D(60), EXACT)
    eta2 = localization_ratios(sol2, region)
    from dataclasses import asdict
    ok = (_finite_tree(asdict(rep)) and all(map(math.isfinite, eta2)) and abs(raw) > 308
          and math.isfinite(float(sol2.scale.log10_magnitude)))
    dt = time.perf_counter() - t0
    return report("C7 n=60 solves and diagnostics finite", ok,
                  f"log10 |ui|_D = {raw:.1f} (outside double range), E(u)/|ui|^2 = {rep.E_u:.4e}, "
                  f"beta = {rep.beta_bound:.3e}, 2D eta = ({eta2[0]:.4f}, {eta2[1]:.4f}); {dt:.1f} s")


CRITERIA = [criterion_1, criterion_2, criterion_3, criterion_4, criterion_5, criterion_6, criterion_7]


@pytest.mark.parametrize("criterion", CRITERIA, ids=[f"C{i}" for i in range(1, 8)])
def test_criterion(criterion):
    assert criterion()


if __name__ == "__main__":
    results = [c() for c in CRITERIA]
    sys.exit(0 if all(results) else 1)
