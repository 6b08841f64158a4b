"""Unitary two-state operators on first-order HG electron beams via quadrupole phase shifters."""

from .beam import ElectronContext, ModeState, propagate_line, wavenumber_from_energy
from .gates import QubitState, compile_unitary, euler_xzx_decompose, state_from_angles
from .shifter import PhaseShifterDesign, Symmetric, design, design_edge, verify

__version__ = "0.1.0"
