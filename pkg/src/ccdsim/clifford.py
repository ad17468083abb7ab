"""The 24-element single-qubit Clifford group over {I, X90, Y90, X180, Y180} pulses.

Each group element is stored with a fixed decomposition into primitive
rotations about the x and y axes (time-ordered, first pulse first). The table
averages 1.875 primitives per Clifford, the standard figure used to convert
an average Clifford fidelity into an average single-gate fidelity.

Primitive realization on hardware: the dressed-qubit drive rotates about the
axis phi_mw + pi/2, so an X rotation is generated at phi_mw = -pi/2 and a
Y rotation at phi_mw = 0. A bare qubit rotates about phi_mw directly.
"""
from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .drive import DriveConfig
from .pulses import PulseProgram, PulseSegment, gate_pulse, readout_pad
from .qubit import IDENTITY, rotation

__all__ = [
    "Primitive",
    "PRIMITIVES",
    "CliffordGate",
    "clifford",
    "clifford_group",
    "compose_cliffords",
    "recovery_clifford",
    "equal_up_to_phase",
    "AVERAGE_PRIMITIVES_PER_CLIFFORD",
    "clifford_sequence_program",
]

AVERAGE_PRIMITIVES_PER_CLIFFORD = 1.875


@dataclass(frozen=True)
class Primitive:
    """A primitive pulse: rotation by ``angle`` about the x or y axis."""

    name: str
    axis: str  # "x", "y", or "i" for the zero-duration identity
    angle: float

    @property
    def matrix(self) -> np.ndarray:
        if self.axis == "i":
            return IDENTITY.copy()
        azimuth = 0.0 if self.axis == "x" else math.pi / 2
        return rotation(azimuth, self.angle)

    @property
    def drive_azimuth(self) -> float:
        """Rotation-axis azimuth in the equatorial plane (x = 0, y = pi/2)."""
        if self.axis == "i":
            raise ValueError("identity primitive has no rotation axis")
        return 0.0 if self.axis == "x" else math.pi / 2


PRIMITIVES: dict[str, Primitive] = {
    p.name: p
    for p in (
        Primitive("I", "i", 0.0),
        Primitive("X90", "x", math.pi / 2),
        Primitive("X90m", "x", -math.pi / 2),
        Primitive("Y90", "y", math.pi / 2),
        Primitive("Y90m", "y", -math.pi / 2),
        Primitive("X180", "x", math.pi),
        Primitive("Y180", "y", math.pi),
    )
}

# Time-ordered decompositions (first pulse listed first); 45 primitives over
# 24 elements = 1.875 average. Rows 0-3: identity and pi rotations; 4-11:
# +/-120 degree rotations about the cube diagonals; 12-15: +/-90 about x, y;
# 16-17: +/-90 about z; 18-23: pi rotations about the face diagonals.
_DECOMPOSITIONS: tuple[tuple[str, ...], ...] = (
    ("I",),
    ("X180",),
    ("Y180",),
    ("Y180", "X180"),
    ("X90", "Y90"),
    ("X90", "Y90m"),
    ("X90m", "Y90"),
    ("X90m", "Y90m"),
    ("Y90", "X90"),
    ("Y90", "X90m"),
    ("Y90m", "X90"),
    ("Y90m", "X90m"),
    ("X90",),
    ("X90m",),
    ("Y90",),
    ("Y90m",),
    ("X90m", "Y90", "X90"),
    ("X90m", "Y90m", "X90"),
    ("X180", "Y90"),
    ("X180", "Y90m"),
    ("Y180", "X90"),
    ("Y180", "X90m"),
    ("X90", "Y90", "X90"),
    ("X90m", "Y90", "X90m"),
)


@dataclass(frozen=True)
class CliffordGate:
    """One Clifford group element with its pulse decomposition."""

    index: int
    decomposition: tuple[str, ...]
    matrix: np.ndarray

    def primitives(self) -> list[Primitive]:
        return [PRIMITIVES[name] for name in self.decomposition]


def _compose(names: tuple[str, ...]) -> np.ndarray:
    u = IDENTITY.copy()
    for name in names:
        u = PRIMITIVES[name].matrix @ u
    return u


@functools.lru_cache(maxsize=1)
def clifford_group() -> tuple[CliffordGate, ...]:
    """The full group, index-stable across runs."""
    return tuple(
        CliffordGate(index=i, decomposition=seq, matrix=_compose(seq))
        for i, seq in enumerate(_DECOMPOSITIONS)
    )


def clifford(index: int) -> CliffordGate:
    if not 0 <= index < 24:
        raise ValueError(f"Clifford index must be in [0, 24), got {index}")
    return clifford_group()[index]


def equal_up_to_phase(a: np.ndarray, b: np.ndarray, atol: float = 1e-9) -> bool:
    """True when a = exp(i gamma) b for some global phase gamma."""
    return bool(abs(abs(np.trace(a.conj().T @ b)) - 2.0) <= atol)


def compose_cliffords(gates: list[CliffordGate]) -> np.ndarray:
    """Ideal composed matrix, first gate applied first."""
    u = IDENTITY.copy()
    for gate in gates:
        u = gate.matrix @ u
    return u


def recovery_clifford(applied: list[CliffordGate], target: str) -> CliffordGate:
    """The lowest-index Clifford returning |0> through ``applied`` to ``target``.

    ``target`` is "up" (|1>) or "down" (|0>). Every Clifford maps |0> to a
    cardinal state of the Bloch sphere, and four group elements complete any
    cardinal state to a given pole; the lowest index is returned so draws are
    reproducible.
    """
    if target not in ("up", "down"):
        raise ValueError("target must be 'up' or 'down'")
    if not applied:
        raise ValueError("applied sequence must be non-empty")
    state = compose_cliffords(applied) @ np.array([1.0, 0.0], dtype=complex)
    component = 1 if target == "up" else 0
    for gate in clifford_group():
        amplitude = abs((gate.matrix @ state)[component])
        if amplitude >= 1.0 - 1e-9:
            return gate
    raise RuntimeError(
        "no recovery Clifford found; group closure violated (internal error)"
    )


def clifford_sequence_program(
    gates: list[CliffordGate],
    cfg: DriveConfig,
    *,
    pad_readout: bool = True,
) -> PulseProgram:
    """Compile a Clifford sequence to a dressed-qubit pulse program.

    Negative-angle primitives are realized as positive rotations about the
    opposite axis (phi_mw shifted by pi); identity primitives are dropped
    (zero duration). The drive azimuth is offset by -pi/2 because the dressed
    drive axis sits at phi_mw + pi/2.
    """
    segments: list[PulseSegment] = []
    elapsed = 0.0
    for gate in gates:
        for prim in gate.primitives():
            if prim.axis == "i" or prim.angle == 0.0:
                continue
            angle = abs(prim.angle)
            azimuth = prim.drive_azimuth + (math.pi if prim.angle < 0.0 else 0.0)
            seg = gate_pulse(angle, azimuth - math.pi / 2.0, cfg, label=prim.name)
            segments.append(seg)
            elapsed += seg.duration
    if pad_readout:
        segments.append(readout_pad(elapsed, cfg))
    return PulseProgram(segments, cfg)
