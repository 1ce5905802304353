"""Partial-swap collision unitaries and the initial states of the models."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import DensityMatrix, UnitaryMatrix
from .errors import DomainError

HALF_PI = math.pi / 2

SWAP = np.array(
    [[1, 0, 0, 0],
     [0, 0, 1, 0],
     [0, 1, 0, 0],
     [0, 0, 0, 1]],
    dtype=complex,
)


def check_strength(theta: float, name: str = "theta") -> float:
    """Validate a dimensionless collision strength, which must lie in [0, pi/2]."""
    theta = float(theta)
    if not 0.0 <= theta <= HALF_PI:
        raise DomainError(f"{name} = {theta!r} outside [0, pi/2]")
    return theta


@dataclass(frozen=True)
class ThermalSpec:
    """Ancilla temperature in units of hbar*omega_0/k_B, plus the ratio omega/omega_0."""

    T: float = 0.0
    omega_ratio: float = 5.0

    def __post_init__(self):
        if not self.T >= 0.0:
            raise DomainError(f"T = {self.T!r} must be >= 0")
        if not self.omega_ratio > 0.0:
            raise DomainError(f"omega_ratio = {self.omega_ratio!r} must be > 0")


def partial_swap_amps(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    ph = complex(c, s)
    return np.array(
        [[ph, 0, 0, 0],
         [0, c, 1j * s, 0],
         [0, 1j * s, c, 0],
         [0, 0, 0, ph]],
        dtype=complex,
    )


def partial_swap(theta: float) -> UnitaryMatrix:
    """cos(theta) I + i sin(theta) SWAP in the ``|00>,|01>,|10>,|11>`` basis."""
    return UnitaryMatrix(partial_swap_amps(check_strength(theta)))


def ground_population(spec: ThermalSpec) -> float:
    if spec.T == 0.0:
        return 1.0
    return 1.0 / (1.0 + math.exp(-spec.omega_ratio / spec.T))


def thermal_state(spec: ThermalSpec) -> DensityMatrix:
    """Gibbs state of H = omega sigma_z / 2 with sigma_z = |1><1| - |0><0|.

    |0> is the ground level. ``T = 0`` returns |0><0| exactly.
    """
    p0 = ground_population(spec)
    return DensityMatrix(np.diag([p0, 1.0 - p0]).astype(complex))


_PLUS = np.full((2, 2), 0.5, dtype=complex)
_MINUS = np.array([[0.5, -0.5], [-0.5, 0.5]], dtype=complex)


def optimal_pair() -> tuple[DensityMatrix, DensityMatrix]:
    """The antipodal pure pair (|+><+|, |-><-|) used for the trace-distance measure."""
    return DensityMatrix(_PLUS), DensityMatrix(_MINUS)
