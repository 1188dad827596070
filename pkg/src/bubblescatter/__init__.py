"""Acoustic bubble in an elastic medium: modal solutions and localization diagnostics."""

from .diagnostics import (DiagnosticsReport, ShellRegion, StressEnergies, classify_regime, closed_form_energies,
                          diagnose, localization_ratios, localization_reference, resonance_bounds,
                          resonance_ratios, shell_norm, stress_energies, stress_lower_bound, thresholds)
from .logcomplex import LogComplex
from .medium import PDMS, NondimensionalMedium, PhysicalMedium, check_regime, nondimensionalize, pdms_printed
from .solver2d import IncidentSpec2D, ModalSolution2D, NearResonanceError, solve_modes_2d
from .solver3d import (FieldSample, IncidentSpec3D, ModalSolution3D, SingularSystemError, eval_exterior_scattered,
                       eval_incident, eval_interior, solve_modes, transmission_residuals)

__version__ = "0.1.0"

__all__ = [
    "DiagnosticsReport", "FieldSample", "IncidentSpec2D", "IncidentSpec3D", "LogComplex", "ModalSolution2D",
    "ModalSolution3D", "NearResonanceError", "NondimensionalMedium", "PDMS", "PhysicalMedium", "ShellRegion",
    "SingularSystemError", "StressEnergies", "check_regime", "classify_regime", "closed_form_energies", "diagnose",
    "eval_exterior_scattered", "eval_incident", "eval_interior", "localization_ratios", "localization_reference",
    "nondimensionalize", "pdms_printed", "resonance_bounds", "resonance_ratios", "shell_norm", "solve_modes",
    "solve_modes_2d", "stress_energies", "stress_lower_bound", "thresholds", "transmission_residuals",
]
