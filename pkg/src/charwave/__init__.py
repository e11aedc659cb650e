"""Characteristic and Cauchy evolution of the first-order wave equation with
numerical verification of its energy estimates."""

from .grid import DiagonalRecord, FieldSlice, GridError, GridSpec, NonFiniteError
from .estimates import EstimateReport, assemble_report, property_sweep, refinement_study

__all__ = [
    "GridSpec", "FieldSlice", "DiagonalRecord", "GridError", "NonFiniteError",
    "EstimateReport", "assemble_report", "property_sweep", "refinement_study",
]
__version__ = "0.1.0"
