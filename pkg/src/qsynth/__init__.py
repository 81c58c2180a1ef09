"""H-infinity controller synthesis and physical realization for linear quantum systems."""
from .errors import QsynthError, SynthesisFailure
from .qsde import CommutationMatrix, ItoMatrix, LinearQsde, canonical_ito, preserves_commutation
from .realizability import (
    OscillatorParams,
    augment_degenerate,
    build_oscillator,
    check_physical_realizability,
    extract_hamiltonian_coupling,
)
from .realization import (
    FullController,
    realize,
    realize_classical_controller,
    realize_mixed_controller,
    realize_quantum_controller,
)
from .synthesis import ClosedLoop, ControllerTriple, Plant, close_loop, synthesize

__version__ = "0.1.0"

__all__ = [
    "QsynthError",
    "SynthesisFailure",
    "CommutationMatrix",
    "ItoMatrix",
    "LinearQsde",
    "canonical_ito",
    "preserves_commutation",
    "OscillatorParams",
    "augment_degenerate",
    "build_oscillator",
    "check_physical_realizability",
    "extract_hamiltonian_coupling",
    "FullController",
    "realize",
    "realize_classical_controller",
    "realize_mixed_controller",
    "realize_quantum_controller",
    "ClosedLoop",
    "ControllerTriple",
    "Plant",
    "close_loop",
    "synthesize",
]
