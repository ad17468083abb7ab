"""ccdsim: single-qubit simulator for concatenated continuous driving.

Modules
-------
qubit        SU(2) states, Pauli/axis operators, Bloch conversion, fidelity
drive        CCD drive model: lab / first / second frame Hamiltonians, frames, I/Q
propagator   unitary integrators (exponential midpoint, 4th-order commutator-free)
pulses       pulse segments, programs, compilation, readout matching
clifford     the 24-element Clifford group over x/y primitive pulses
fitting      spectral peak estimation, decaying-sinusoid fits
experiments  chevrons, error sweeps, spectra, trajectories, presets, noise
rb           Clifford randomized benchmarking
config       run configuration (key = value format)
dataset      deterministic CSV/JSON dataset serialization
cli          command-line interface
"""
from .drive import DriveConfig, Scheme, default_config
from .qubit import QubitState

__version__ = "0.1.0"

__all__ = ["DriveConfig", "Scheme", "QubitState", "default_config", "__version__"]
