"""Command-line front end: parameters, field grids, diagnostics and verification.

Usage::

    bubblescatter params      [--config PATH] [--preset NAME]
    bubblescatter fields      [--config PATH] [--preset NAME] --out DIR [--threads N]
    bubblescatter diagnostics [--config PATH] [--preset NAME] [--out DIR]
    bubblescatter verify      [--out DIR]

Configurations are INI files with the sections [medium], [incident], [shell],
[grid], [run] and [tolerances]; every key is optional and missing keys take
the defaults in DEFAULTS.  A preset is applied first and a config file then
overrides it key by key.

Exit codes: 0 success, 1 numerical flag (NEAR_SINGULAR or a failed check),
2 configuration error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import re
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .diagnostics import (ShellRegion, diagnose, localization_ratios, localization_reference,
                          shell_norm, stress_lower_bound)
from .logcomplex import LogComplex
from .medium import MediumError, PhysicalMedium, check_regime, nondimensionalize, pdms_printed
from .solver2d import (IncidentSpec2D, NearResonanceError, boundary_residuals_2d, eval_incident_2d,
                       eval_interior_2d, eval_scattered_2d, solve_modes_2d)
from .solver3d import (INCIDENT_KINDS, IncidentSpec3D, SingularSystemError, energy_density,
                       eval_exterior_scattered, eval_incident, eval_interior, fd_gradient_error,
                       fd_helmholtz_residual, fd_navier_residual, oracle_single_layer,
                       single_layer_prediction, solve_modes, transmission_residuals)
from .spectra import NEAR_SINGULAR

SCHEMA = 1
EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG = 0, 1, 2

DEFAULTS = {
    "medium": {"rho_b": "1.2", "kappa": "1.412e5", "rho_e": "1042", "lambda_t": "1.083e9",
               "mu_t": "6.5e5", "omega": "0.1", "l_D": "1.0", "parameters": "exact"},
    "incident": {"dimension": "3", "n": "5", "m": "", "coefficients": "", "amplitude": "1.0",
                 "normalized": "true", "kind": "printed"},
    "shell": {"zeta1": "0.9", "zeta2": "1.1", "R": "2.0"},
    "grid": {"extent": "2.0", "resolution": "41", "plane": "xz"},
    "run": {"outputs": "u,us,ui,total,E", "cross_check": "true"},
    "tolerances": {"eta": "0.01", "M": "1000"},
}

PRESETS = {
    "table1": """
[incident]
dimension = 2
n = 20, 40, 60
[shell]
zeta1 = 0.9
zeta2 = 1.1
R = 2.0
""",
    "table2": """
[medium]
parameters = printed
[incident]
dimension = 3
n = 5, 15, 25
[shell]
zeta1 = 0.9
zeta2 = 1.1
R = 2.0
""",
}

# tabulated reference rows, reported next to the computed values
TABLE1_REFERENCE = {20: (0.5904018869589628, 0.4590269811218674),
                    40: (0.2051670856315115, 0.4198613576351685),
                    60: (0.0720115793865058, 0.2347708781772988)}
TABLE2_REFERENCE = {5: (4.7163144808e1, 1.7184603683e-3, 4.3753749785e-4),
                    15: (7.5832965064e7, 7.5832965064e7, 1.1521136196e7),
                    25: (6.6295335515e17, 6.6295335515e17, 9.3633300494e16)}


class ConfigError(ValueError):
    """Malformed or inconsistent configuration."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    physical: PhysicalMedium
    parameters: str
    dimension: int
    n: tuple
    m: int | None
    coefficients: tuple | None
    amplitude: complex
    normalized: bool
    kind: str
    shell: ShellRegion
    extent: float
    resolution: int
    plane: str
    outputs: tuple
    cross_check: bool
    eta: float
    M: float

    @property
    def medium(self):
        if self.parameters == "printed":
            return pdms_printed()
        return nondimensionalize(self.physical)

    def incident_3d(self, n: int) -> IncidentSpec3D:
        if self.coefficients is not None:
            f = np.array(self.coefficients, dtype=complex)
        else:
            f = np.zeros(2 * n + 1, dtype=complex)
            f[(n if self.m is None else self.m) + n] = 1.0
        return IncidentSpec3D(n, self.amplitude * f, normalized=self.normalized, kind=self.kind)

    def incident_2d(self, n: int) -> IncidentSpec2D:
        return IncidentSpec2D(n, amplitude=self.amplitude, normalized=self.normalized)

    def as_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k not in ("physical", "shell", "amplitude")}
        d["physical"] = asdict(self.physical)
        d["shell"] = asdict(self.shell)
        d["amplitude"] = [self.amplitude.real, self.amplitude.imag]
        if self.coefficients is not None:
            d["coefficients"] = [[c.real, c.imag] for c in self.coefficients]
        return d


def _line_of(text: str, section: str, key: str | None = None) -> int:
    cur = None
    for i, line in enumerate(text.splitlines(), 1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            cur = m.group(1).strip()
            if key is None and cur == section:
                return i
            continue
        if cur == section and key is not None and re.match(rf"{re.escape(key)}\s*[=:]", s, re.I):
            return i
    return 0


def _read(parser: configparser.ConfigParser, text: str, source: str):
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{source} line {_line_of(text, section)}: unknown section [{section}]")
        for key in parser[section]:
            if key not in {k.lower() for k in DEFAULTS[section]}:
                line = _line_of(text, section, key)
                raise ConfigError(f"{source} line {line}: unknown key '{key}' in [{section}]")


def load_config(config_text: str | None = None, preset: str | None = None,
                source: str = "<config>") -> ExperimentConfig:
    """Merge defaults, a preset and a config text into an ExperimentConfig."""
    parser = configparser.ConfigParser()
    parser.optionxform = str.lower
    parser.read_dict({s: {k.lower(): v for k, v in kv.items()} for s, kv in DEFAULTS.items()})
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset '{preset}'")
        _read(parser, PRESETS[preset], f"preset:{preset}")
    if config_text is not None:
        _read(parser, config_text, source)

    def get(section, key, conv, what):
        raw = parser[section][key.lower()].strip()
        try:
            return conv(raw)
        except (ValueError, TypeError) as exc:
            line = _line_of(config_text or "", section, key)
            raise ConfigError(f"{source} line {line}: [{section}] {key} = {raw!r} is not {what} ({exc})") from None

    def boolean(s):
        if s.lower() in ("1", "true", "yes", "on"):
            return True
        if s.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError("expected true/false")

    def int_list(s):
        vals = tuple(int(v) for v in s.replace(";", ",").split(",") if v.strip())
        if not vals or any(v < 1 for v in vals):
            raise ValueError("need integers >= 1")
        return vals

    def complex_list(s):
        return tuple(complex(v.replace(" ", "")) for v in s.split(",") if v.strip()) if s else None

    values = {k: get("medium", k, float, "a number")
              for k in ("rho_b", "kappa", "rho_e", "lambda_t", "mu_t", "omega", "l_D")}
    try:
        physical = PhysicalMedium(**values)
    except MediumError as exc:
        raise ConfigError(f"{source}: [medium] {exc}") from None
    parameters = get("medium", "parameters", str, "a string")
    if parameters not in ("exact", "printed"):
        raise ConfigError(f"{source} line {_line_of(config_text or '', 'medium', 'parameters')}: "
                          "[medium] parameters must be 'exact' or 'printed'")
    dimension = get("incident", "dimension", int, "an integer")
    if dimension not in (2, 3):
        raise ConfigError(f"{source} line {_line_of(config_text or '', 'incident', 'dimension')}: "
                          "[incident] dimension must be 2 or 3")
    ns = get("incident", "n", int_list, "a list of integers >= 1")
    m = get("incident", "m", lambda s: int(s) if s else None, "an integer")
    coeffs = get("incident", "coefficients", complex_list, "a list of complex numbers")
    kind = get("incident", "kind", str, "a string")
    if kind not in INCIDENT_KINDS:
        raise ConfigError(f"{source}: [incident] kind must be one of {INCIDENT_KINDS}")
    if dimension == 3:
        for n in ns:
            if m is not None and abs(m) > n:
                raise ConfigError(f"{source}: [incident] m = {m} exceeds n = {n}")
            if coeffs is not None and len(coeffs) != 2 * n + 1:
                raise ConfigError(f"{source}: [incident] coefficients need 2n+1 = {2 * n + 1} entries")
    elif coeffs is not None or m is not None:
        raise ConfigError(f"{source}: [incident] m and coefficients apply to dimension 3 only")
    radii = [get("shell", key, float, "a number") for key in ("zeta1", "zeta2", "R")]
    try:
        shell = ShellRegion(*radii)
    except ValueError as exc:
        raise ConfigError(f"{source}: [shell] {exc}") from None
    resolution = get("grid", "resolution", int, "an integer")
    extent = get("grid", "extent", float, "a number")
    plane = get("grid", "plane", str, "a string")
    if resolution < 2 or not extent > 0 or plane not in ("xy", "xz", "yz"):
        raise ConfigError(f"{source}: [grid] needs resolution >= 2, extent > 0, plane in xy/xz/yz")
    outputs = tuple(o.strip() for o in get("run", "outputs", str, "a string").split(",") if o.strip())
    bad = set(outputs) - {"u", "us", "ui", "total", "E"}
    if bad:
        raise ConfigError(f"{source}: [run] unknown outputs {sorted(bad)}")
    eta = get("tolerances", "eta", float, "a number")
    M = get("tolerances", "M", float, "a number")
    if not (0 < eta < 1 and M > 1):
        raise ConfigError(f"{source}: [tolerances] need 0 < eta < 1 and M > 1")
    return ExperimentConfig(
        physical=physical, parameters=parameters, dimension=dimension, n=ns, m=m, coefficients=coeffs,
        amplitude=get("incident", "amplitude", complex, "a complex number"),
        normalized=get("incident", "normalized", boolean, "a boolean"), kind=kind, shell=shell,
        extent=extent, resolution=resolution, plane=plane, outputs=outputs,
        cross_check=get("run", "cross_check", boolean, "a boolean"), eta=eta, M=M)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def lc_json(x: LogComplex) -> dict:
    """{log10_mag, phase} with a best-effort plain value."""
    if bool(x.is_zero):
        return {"log10_mag": None, "phase": 0.0, "value": 0.0}
    v = complex(x.to_complex())
    plain = [v.real, v.imag] if math.isfinite(abs(v)) and v != 0 else None
    return {"log10_mag": float(x.log10_magnitude), "phase": float(x.phase), "value": plain}


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# params
# ---------------------------------------------------------------------------

def cmd_params(cfg: ExperimentConfig, out: Path | None = None, stream=sys.stdout) -> int:
    nm = cfg.medium
    warnings = check_regime(nm)
    lines = [f"parameters  {cfg.parameters}"]
    for key, val in nm.as_dict().items():
        lines.append(f"{key:<20}{val:.6e}")
    lines.append("note: k_s = k tau / sqrt(mu) is the shear wavenumber used by the solver; "
                 "k_s_printed_formula = k tau / sqrt(2 mu) is listed for comparison only")
    lines.append("warnings: " + (", ".join(warnings) if warnings else "none"))
    print("\n".join(lines), file=stream)
    if out is not None:
        _write(out / "params.json", json.dumps({"schema": SCHEMA, "medium": nm.as_dict(),
                                                "warnings": warnings}, sort_keys=True, indent=2))
    return EXIT_OK


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------

def grid_points(cfg: ExperimentConfig) -> np.ndarray:
    """Regular grid over [-extent, extent]^2 (in the chosen plane for 3D)."""
    s = np.linspace(-cfg.extent, cfg.extent, cfg.resolution)
    A, B = np.meshgrid(s, s, indexing="ij")
    if cfg.dimension == 2:
        return np.stack([A, B], -1).reshape(-1, 2)
    zero = np.zeros_like(A)
    comps = {"xy": (A, B, zero), "xz": (A, zero, B), "yz": (zero, A, B)}[cfg.plane]
    return np.stack(comps, -1).reshape(-1, 3)


def _relative_to(fs, ref: LogComplex):
    if bool(fs.scale.is_zero) or bool(ref.is_zero):
        return 0.0 * fs.value, 0.0 * fs.grad, None if fs.div is None else 0.0 * fs.div
    c = complex((fs.scale / ref).to_complex())
    return c * fs.value, c * fs.grad, None if fs.div is None else c * fs.div


def _field_rows_3d(sol, pts, scales, nm):
    r = np.linalg.norm(pts, axis=-1)
    inside = r <= 1
    n_pts = len(pts)
    cols = {}
    cols["u"] = np.full(n_pts, complex(np.nan, np.nan))
    cols["grad_u"] = np.full(n_pts, np.nan)
    if np.any(inside):
        val, grad, _ = _relative_to(eval_interior(sol, pts[inside]), scales["u"])
        cols["u"][inside] = val
        cols["grad_u"][inside] = np.linalg.norm(grad.reshape(grad.shape[0], -1), axis=-1)
    ui = eval_incident(sol.incident, nm, pts, sol=sol)
    vi, gi, di = _relative_to(ui, scales["ui"])
    cols["ui"] = vi
    for name in ("us", "total"):
        cols[name] = np.full((n_pts, 3), complex(np.nan, np.nan))
        cols["grad_" + name] = np.full(n_pts, np.nan)
    cols["E"] = np.full(n_pts, np.nan)
    out = ~inside
    if np.any(out):
        us = eval_exterior_scattered(sol, pts[out])
        vs, gs, ds = _relative_to(us, scales["us"])
        cols["us"][out] = vs
        cols["grad_us"][out] = np.linalg.norm(gs.reshape(gs.shape[0], -1), axis=-1)
        tot = us + FieldSampleView(ui, out)
        vt, gt, dt = _relative_to(tot, scales["total"])
        cols["total"][out] = vt
        cols["grad_total"][out] = np.linalg.norm(gt.reshape(gt.shape[0], -1), axis=-1)
        cols["E"][out] = energy_density(gt, nm.lam, nm.mu, dt)
    return cols


def FieldSampleView(fs, mask):
    """Restriction of a FieldSample to the points selected by mask."""
    from .solver3d import FieldSample
    return FieldSample(fs.scale, fs.value[mask], fs.grad[mask], None if fs.div is None else fs.div[mask])


def _field_rows_2d(sol, pts, scales, nm):
    r = np.hypot(pts[:, 0], pts[:, 1])
    inside = r <= 1
    n_pts = len(pts)
    cols = {"u": np.full(n_pts, complex(np.nan, np.nan)), "grad_u": np.full(n_pts, np.nan)}
    if np.any(inside):
        val, grad, _ = _relative_to(eval_interior_2d(sol, pts[inside]), scales["u"])
        cols["u"][inside] = val
        cols["grad_u"][inside] = np.linalg.norm(grad, axis=-1)
    ui = eval_incident_2d(sol, pts)
    vi, gi, di = _relative_to(ui, scales["ui"])
    cols["ui"] = vi
    for name in ("us", "total"):
        cols[name] = np.full((n_pts, 2), complex(np.nan, np.nan))
        cols["grad_" + name] = np.full(n_pts, np.nan)
    cols["E"] = np.full(n_pts, np.nan)
    out = ~inside
    if np.any(out):
        us = eval_scattered_2d(sol, pts[out])
        vs, gs, ds = _relative_to(us, scales["us"])
        cols["us"][out] = vs
        cols["grad_us"][out] = np.linalg.norm(gs.reshape(gs.shape[0], -1), axis=-1)
        tot = us + FieldSampleView(ui, out)
        vt, gt, dt = _relative_to(tot, scales["total"])
        cols["total"][out] = vt
        cols["grad_total"][out] = np.linalg.norm(gt.reshape(gt.shape[0], -1), axis=-1)
        cols["E"][out] = energy_density(gt, nm.lam, nm.mu, dt)
    return cols


def _zero_cols(n_pts, d, inside):
    nan = complex(np.nan, np.nan)
    cols = {"u": np.where(inside, 0j, nan), "grad_u": np.where(inside, 0.0, np.nan),
            "ui": np.zeros((n_pts, d), dtype=complex)}
    for name in ("us", "total"):
        cols[name] = np.where(inside[:, None], nan, 0j) * np.ones((n_pts, d))
        cols["grad_" + name] = np.where(inside, np.nan, 0.0)
    cols["E"] = np.where(inside, np.nan, 0.0)
    return cols


def _csv_text(cfg, pts, cols) -> str:
    d = cfg.dimension
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    head = ["x1", "x2", "x3", "r", "theta", "phi", "region"] if d == 3 else ["x1", "x2", "r", "theta", "region"]
    want = cfg.outputs
    if "u" in want:
        head += ["u_re", "u_im"]
    for name in ("us", "ui", "total"):
        if name in want:
            head += [f"{name}_{i + 1}_{p}" for i in range(d) for p in ("re", "im")]
    head += [g for g, key in (("grad_norm_u", "u"), ("grad_norm_us", "us"), ("grad_norm_total", "total"))
             if key in want]
    if "E" in want:
        head.append("E_density")
    w.writerow(head)
    r = np.linalg.norm(pts, axis=-1)
    theta = np.arctan2(pts[:, 1], pts[:, 0]) if d == 2 else np.arccos(np.clip(
        np.divide(pts[:, 2], r, out=np.ones_like(r), where=r > 0), -1, 1))
    phi = np.arctan2(pts[:, 1], pts[:, 0])
    cell = lambda v: "" if np.isnan(v) else _fmt(v)
    for i in range(len(pts)):
        row = [_fmt(v) for v in pts[i]]
        if d == 2:
            row += [_fmt(r[i]), _fmt(theta[i])]
        else:
            row += [_fmt(r[i]), _fmt(theta[i]), _fmt(phi[i])]
        row.append("interior" if r[i] <= 1 else "exterior")
        if "u" in want:
            row += [cell(cols["u"][i].real), cell(cols["u"][i].imag)]
        for name in ("us", "ui", "total"):
            if name in want:
                for c in cols[name][i]:
                    row += [cell(c.real), cell(c.imag)]
        for key in ("u", "us", "total"):
            if key in want:
                row.append(cell(cols["grad_" + key][i]))
        if "E" in want:
            row.append(cell(cols["E"][i]))
        w.writerow(row)
    return buf.getvalue()


def _solve(cfg: ExperimentConfig, n: int):
    nm = cfg.medium
    if cfg.dimension == 3:
        return solve_modes(cfg.incident_3d(n), nm)
    return solve_modes_2d(cfg.incident_2d(n), nm)


def _scales(cfg, sol):
    from .diagnostics import _field_scale
    if cfg.dimension == 2:
        s = sol.scale
        return {"u": s, "us": s, "ui": s, "total": s}
    sc = {name: _field_scale(sol, name) for name in ("u", "us", "ui", "total")}
    return sc


def cmd_fields(cfg: ExperimentConfig, out: Path, threads: int = 1, stream=sys.stdout) -> int:
    """Write fields_n{n}.csv and fields_n{n}.json for every requested degree."""
    nm = cfg.medium
    pts = grid_points(cfg)
    chunks = np.array_split(np.arange(len(pts)), max(1, min(len(pts), 8 * max(threads, 1))))
    status = EXIT_OK
    for n in cfg.n:
        flags = []
        inside = np.linalg.norm(pts, axis=-1) <= 1
        if cfg.amplitude == 0:
            cols = _zero_cols(len(pts), cfg.dimension, inside)
            scales = {k: LogComplex.from_complex(0.0) for k in ("u", "us", "ui", "total")}
            meta = {"note": "zero-amplitude incident: all fields vanish"}
        else:
            try:
                sol = _solve(cfg, n)
            except (SingularSystemError, NearResonanceError) as exc:
                print(f"{NEAR_SINGULAR}: n={n}: {exc}", file=stream)
                status = EXIT_NUMERICAL
                continue
            flags = list(getattr(sol, "flags", ()))
            scales = _scales(cfg, sol)
            rows = _field_rows_3d if cfg.dimension == 3 else _field_rows_2d

            def work(idx):
                return rows(sol, pts[idx], scales, nm)

            with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
                parts = list(pool.map(work, chunks))
            cols = {k: np.concatenate([p[k] for p in parts]) for k in parts[0]}
            meta = {"ui_norm": lc_json(sol.ui_norm)}
            if cfg.dimension == 2:
                meta["condition_number"] = sol.condition_number
        e_scale = scales["total"].abs() ** 2
        sidecar = {"schema": SCHEMA, "n": n, "dimension": cfg.dimension, "medium": nm.as_dict(),
                   "config": cfg.as_dict(), "flags": flags,
                   "scales": {k: lc_json(v) for k, v in scales.items()} | {"E_density": lc_json(e_scale)},
                   "note_scales": "CSV field values are relative to these scales", **meta}
        _write(out / f"fields_n{n}.csv", _csv_text(cfg, pts, cols))
        _write(out / f"fields_n{n}.json", json.dumps(sidecar, sort_keys=True, indent=2))
        if NEAR_SINGULAR in flags:
            print(f"{NEAR_SINGULAR}: n={n}", file=stream)
            status = EXIT_NUMERICAL
        print(f"wrote fields_n{n}.csv ({len(pts)} points)", file=stream)
    return status


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def _mantissa(x: float):
    e = math.floor(math.log10(abs(x)))
    return x / 10 ** e, e


def diagnostics_payload(cfg: ExperimentConfig, preset: str | None = None) -> tuple:
    """(JSON-ready dict, plain-text table, exit status) for the configured degrees."""
    nm = cfg.medium
    status = EXIT_OK
    reports, text = [], []
    for n in cfg.n:
        try:
            sol = _solve(cfg, n)
        except (SingularSystemError, NearResonanceError) as exc:
            text.append(f"{NEAR_SINGULAR}: n={n}: {exc}")
            status = EXIT_NUMERICAL
            continue
        if NEAR_SINGULAR in getattr(sol, "flags", ()):
            status = EXIT_NUMERICAL
        if cfg.dimension == 3:
            rep = diagnose(sol, cfg.shell, eta=cfg.eta, M=cfg.M, cross_check=cfg.cross_check)
            entry = asdict(rep)
            if preset == "table2" and n in TABLE2_REFERENCE:
                pub = TABLE2_REFERENCE[n]
                entry["reference"] = {"E_u": pub[0], "E_us": pub[1], "beta": pub[2],
                                      "beta_mantissa_match": abs(_mantissa(rep.beta_bound)[0] - _mantissa(pub[2])[0])
                                      / _mantissa(pub[2])[0],
                                      "beta_exponent_offset": _mantissa(pub[2])[1] - _mantissa(rep.beta_bound)[1]}
            reports.append(entry)
            text.append(f"== n = {n}\n{rep.to_table()}")
        else:
            eta_u, eta_us = localization_ratios(sol, cfg.shell)
            entry = {"n": n, "eta_u": eta_u, "eta_us": eta_us, "condition_number": sol.condition_number,
                     "boundary_residual": float(np.max(boundary_residuals_2d(sol))),
                     "provenance": {"eta_u": "closed_form", "eta_us": "closed_form"}}
            if preset == "table1" and n in TABLE1_REFERENCE:
                entry["reference"] = dict(zip(("eta_u", "eta_us"), TABLE1_REFERENCE[n]))
            reports.append(entry)
            pub = entry.get("reference")
            extra = f"  reference {pub['eta_u']:.4f} {pub['eta_us']:.4f}" if pub else ""
            text.append(f"n = {n:3d}  eta_u = {eta_u:.6f}  eta_us = {eta_us:.6f}{extra}")
    if preset == "table2":
        text.append("\n   n        E(u)/|ui|^2       E(us)/|ui|^2      beta (computed)   beta (reference)")
        for e in reports:
            pub = e.get("reference", {})
            text.append(f"{e['n']:4d}  {e['E_u']:16.6e}  {e['E_us']:16.6e}  {e['beta_bound']:16.10e}"
                        f"  {pub.get('beta', float('nan')):16.10e}")
    payload = {"schema": SCHEMA, "preset": preset, "dimension": cfg.dimension, "medium": nm.as_dict(),
               "config": cfg.as_dict(), "reports": reports}
    return payload, "\n".join(text), status


def cmd_diagnostics(cfg: ExperimentConfig, out: Path | None = None, preset: str | None = None,
                    stream=sys.stdout) -> int:
    payload, table, status = diagnostics_payload(cfg, preset)
    print(table, file=stream)
    if out is not None:
        _write(out / "diagnostics.json", json.dumps(payload, sort_keys=True, indent=2, default=float))
        _write(out / "diagnostics.txt", table + "\n")
    return status


# ---------------------------------------------------------------------------
# verification suite
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self) -> bool:
        return bool(self.value <= self.tol)

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'}  {self.name}: {self.value:.3e} (tol {self.tol:.0e})"


def check_wronskian(nmax: int = 60) -> float:
    from .specfun import spherical_bessel_j, spherical_bessel_y
    worst = 0.0
    z = np.array([1e-3, 0.1, 1.0, 7.5, 30.0])
    for n in range(0, nmax + 1, 3):
        j, jd = spherical_bessel_j(n, z)
        y, yd = spherical_bessel_y(n, z)
        w = (j * yd - jd * y) * (z * z)
        worst = max(worst, float(np.max(np.abs(np.asarray(w.to_complex()) - 1))))
    return worst


def check_orthonormality(nmax: int = 10) -> float:
    from .specfun import SphericalHarmonicIndex, spherical_harmonic
    order = nmax + 4
    t, wt = np.polynomial.legendre.leggauss(order)
    phi = 2 * np.pi * np.arange(2 * order) / (2 * order)
    T, P = np.meshgrid(np.arccos(t), phi, indexing="ij")
    W = wt[:, None] * (np.pi / order)
    idx = [(n, m) for n in range(nmax + 1) for m in range(-n, n + 1)]
    Y = np.array([spherical_harmonic(SphericalHarmonicIndex(n, m), T, P) for n, m in idx])
    G = np.einsum("aij,bij,ij->ab", Y, np.conj(Y), W)
    return float(np.max(np.abs(G - np.eye(len(idx)))))


def check_vector_harmonics(nmax: int = 8) -> float:
    from .specfun import SphericalHarmonicIndex, spherical_frame, spherical_harmonic, vector_spherical_harmonics
    rng = np.random.default_rng(7)
    th, ph = rng.uniform(0.05, np.pi - 0.05, 50), rng.uniform(0, 2 * np.pi, 50)
    nu, _, _ = spherical_frame(th, ph)
    worst = 0.0
    for n in range(1, nmax + 1):
        for m in (-n, 0, n):
            Y = lambda l: (spherical_harmonic(SphericalHarmonicIndex(l, m), th, ph) if abs(m) <= l
                           else np.zeros_like(th, dtype=complex))
            v = vector_spherical_harmonics(n, m, th, ph)
            lo = vector_spherical_harmonics(n - 1, m, th, ph).I
            hi = vector_spherical_harmonics(n + 1, m, th, ph).N
            dot = lambda a: np.sum(a * nu, axis=-1)
            errs = [dot(v.I) - (n + 1) * Y(n + 1), dot(v.N) - n * Y(n - 1), dot(v.T),
                    (lo + hi - (2 * n + 1) * Y(n)[:, None] * nu).ravel()]
            worst = max(worst, max(float(np.max(np.abs(e))) for e in errs))
    return worst


def check_lambert() -> float:
    from .specfun import lambert_w0
    xs = [-1 / math.e + 1e-6, -0.3, -0.1, 1e-8, 0.5, 1.0, 10.0, 1e3, 1e8, 1e20]
    return max(abs(lambert_w0(x) * math.exp(lambert_w0(x)) - x) / abs(x) for x in xs)


def _pdms():
    from .medium import PDMS
    return nondimensionalize(PDMS)


def check_energy_identity(n: int = 5) -> float:
    from .diagnostics import stress_energies
    sol = solve_modes(IncidentSpec3D.single(n, normalized=True), _pdms())
    return stress_energies(sol, ShellRegion(0.9, 1.1, 2.0)).identity_residual


def check_shell_norms(ns=(3, 5, 10)) -> float:
    worst = 0.0
    for n in ns:
        sol = solve_modes(IncidentSpec3D.single(n, normalized=True), _pdms())
        for name, (a, b) in (("u", (0.9, 1.0)), ("us", (1.0, 1.1)), ("ui", (0.0, 1.0)), ("total", (1.0, 1.1))):
            for g in (False, True):
                m = float(shell_norm(sol, name, a, b, gradient=g).to_complex().real)
                q = float(shell_norm(sol, name, a, b, method="quadrature", gradient=g).to_complex().real)
                worst = max(worst, abs(m - q) / m)
    return worst


def check_transmission_3d(ns=(1, 3, 10)) -> float:
    worst = 0.0
    for n in ns:
        for kind in INCIDENT_KINDS:
            res = transmission_residuals(solve_modes(IncidentSpec3D.single(n, normalized=True, kind=kind), _pdms()))
            worst = max(worst, res["displacement"], res["traction_normal"])
    return worst


def check_transmission_2d(ns=(1, 5, 20)) -> float:
    return max(float(np.max(boundary_residuals_2d(solve_modes_2d(IncidentSpec2D(n), _pdms())))) for n in ns)


def check_fd_3d(ns=(3, 10), kind: str = "printed") -> float:
    """Worst FD residual over the 3D Navier (u^s, u^i), Helmholtz (u) and gradient checks."""
    nm = _pdms()
    worst = 0.0
    xo, xi = np.array([0.7, 0.5, 1.0]), np.array([0.3, -0.4, 0.5])
    for n in ns:
        sp = IncidentSpec3D.single(n, normalized=True, kind=kind)
        sol = solve_modes(sp, nm)
        us = lambda x: eval_exterior_scattered(sol, x).to_complex()[0]
        ui = lambda x: eval_incident(sp, nm, x, sol=sol).to_complex()[0]
        ub = lambda x: eval_interior(sol, x).to_complex()[0]
        g = eval_exterior_scattered(sol, xo).to_complex()[1]
        worst = max(worst, fd_navier_residual(us, xo, nm), fd_navier_residual(ui, xi, nm),
                    fd_helmholtz_residual(ub, xi, nm.k), fd_gradient_error(us, g, xo))
    return worst


def check_fd_2d(ns=(5, 20)) -> float:
    nm = _pdms()
    worst = 0.0
    xo, xi = np.array([1.2, 0.7]), np.array([0.3, -0.4])
    for n in ns:
        sol = solve_modes_2d(IncidentSpec2D(n), nm)
        for part in ("p", "s"):
            worst = max(worst, fd_navier_residual(lambda y: eval_scattered_2d(sol, y, part=part).to_complex()[0],
                                                  xo, nm))
        worst = max(worst, fd_navier_residual(lambda y: eval_incident_2d(sol, y).to_complex()[0], xi, nm),
                    fd_helmholtz_residual(lambda y: eval_interior_2d(sol, y).to_complex()[0], xi, nm.k))
    return worst


def check_oracle(ns=(1, 2)) -> float:
    nm = _pdms()
    x = np.array([0.3, -0.5, 1.4])
    worst = 0.0
    for n in ns:
        for dens in ("Y_nu", "I", "N", "T"):
            o = oracle_single_layer(x, (n, 1), dens, nm, 40)
            p = single_layer_prediction(x, (n, 1), dens, nm)
            worst = max(worst, float(np.linalg.norm(o - p) / np.linalg.norm(o)))
    return worst


def verification_suite() -> list:
    """Every invariant check with its tolerance."""
    return [
        Check("wronskian j_n y_n' - j_n' y_n = 1/z^2, n <= 60", check_wronskian(), 1e-11),
        Check("harmonic orthonormality, n <= 10", check_orthonormality(), 1e-10),
        Check("vector-harmonic identities pointwise, n <= 8", check_vector_harmonics(), 1e-13),
        Check("lambert W0 residual", check_lambert(), 1e-13),
        Check("energy identity E_u = E_us + E_ui + Rest, n = 5", check_energy_identity(), 1e-10),
        Check("modal vs quadrature shell norms, n <= 10", check_shell_norms(), 1e-6),
        Check("3D transmission reassembly, n <= 10", check_transmission_3d(), 1e-8),
        Check("2D transmission reassembly, n <= 20", check_transmission_2d(), 1e-8),
        Check("3D FD PDE residuals (printed incident)", check_fd_3d(kind="printed"), 1e-6),
        Check("3D FD PDE residuals (p_wave incident)", check_fd_3d(kind="p_wave"), 1e-6),
        Check("2D FD PDE residuals (P and S parts)", check_fd_2d(), 1e-6),
        Check("Kupradze quadrature vs spectral single layer, n = 1, 2", check_oracle(), 1e-3),
    ]


def cmd_verify(out: Path | None = None, stream=sys.stdout) -> int:
    t0 = time.time()
    checks = verification_suite()
    for c in checks:
        print(c.line(), file=stream)
    print(f"{sum(c.passed for c in checks)}/{len(checks)} passed in {time.time() - t0:.1f} s", file=stream)
    if out is not None:
        _write(out / "verify.json", json.dumps({"schema": SCHEMA, "checks": [
            {"name": c.name, "value": c.value, "tol": c.tol, "passed": c.passed} for c in checks]},
            sort_keys=True, indent=2))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_NUMERICAL


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI experiment configuration")
    common.add_argument("--preset", choices=sorted(PRESETS), help="named reference-table configuration")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--threads", type=int, default=1, help="worker threads for grid evaluation")
    parser = argparse.ArgumentParser(prog="bubblescatter", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (("params", "print the dimensionless parameters and regime warnings"),
                            ("fields", "write CSV field grids with JSON sidecars"),
                            ("diagnostics", "localization, resonance and stress diagnostics"),
                            ("verify", "run the invariant suite")):
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "verify":
        return cmd_verify(args.out)
    try:
        text = None
        if args.config is not None:
            try:
                text = args.config.read_text()
            except OSError as exc:
                raise ConfigError(f"cannot read {args.config}: {exc}") from None
        cfg = load_config(text, args.preset, source=str(args.config or "<defaults>"))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "params":
        return cmd_params(cfg, args.out)
    if args.command == "fields":
        if args.out is None:
            print("config error: fields needs --out DIR", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_fields(cfg, args.out, args.threads)
    return cmd_diagnostics(cfg, args.out, args.preset)


if __name__ == "__main__":
    sys.exit(main())
