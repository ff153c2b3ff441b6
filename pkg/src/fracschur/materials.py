"""Material constants and fracture-cell contact states.

Defaults reproduce the granite/water data set used throughout the test
problems. The time step and representative cell volume are solver inputs
with neutral defaults, not physics.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum


class ContactState(Enum):
    """State of one fracture cell's contact condition."""

    STICK = "stick"
    SLIDE = "slide"
    OPEN = "open"

    @property
    def tag(self) -> str:
        return self.value

    @classmethod
    def from_tag(cls, tag: str) -> "ContactState":
        key = tag.strip().lower()
        for state in cls:
            if state.value == key:
                return state
        raise ValueError(f"unknown contact state tag {tag!r}")


@dataclass(frozen=True)
class MaterialParams:
    """Physical constants feeding the generator and the stabilization terms.

    Units follow the field names: Pa for moduli, 1/Pa for compressibility,
    1/K for thermal expansion, kg/m^3 for density, m for the reference
    normal jump. ``dim`` is the spatial dimension (cell block size of the
    mechanics blocks). ``fracture_porosity`` defaults to one: fracture and
    intersection cells are fully fluid-filled. ``thermal_const`` is the
    dimensionless constant of the optional thermal stabilization.
    """

    lame_lambda: float = 1.2e10
    shear: float = 1.2e10
    biot: float = 0.47
    compressibility: float = 4.559e-10
    porosity_ref: float = 1.3e-2
    solid_thermal_expansion: float = 9.66e-6
    fluid_density: float = 998.2
    dt: float = 1.0
    cell_volume: float = 1.0
    dim: int = 2
    normal_jump: float = 1.0e-3
    fracture_porosity: float = 1.0
    thermal_const: float = 1.0

    def __post_init__(self):
        if self.lame_lambda <= 0 or self.shear <= 0:
            raise ValueError("elastic moduli must be positive")
        if not 0 < self.biot <= 1:
            raise ValueError(f"biot coefficient {self.biot} outside (0, 1]")
        if not 0 <= self.porosity_ref < 1:
            raise ValueError(f"reference porosity {self.porosity_ref} outside [0, 1)")
        if self.compressibility <= 0:
            raise ValueError("fluid compressibility must be positive")
        if self.dt <= 0:
            raise ValueError("time step must be positive")
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.normal_jump < 0:
            raise ValueError("normal jump must be nonnegative")

    def with_(self, **kwargs) -> "MaterialParams":
        return replace(self, **kwargs)

    @property
    def drained_modulus(self) -> float:
        """2G/D + lambda, the volumetric stiffness seen by the stabilization."""
        return 2.0 * self.shear / self.dim + self.lame_lambda

    @property
    def accumulation_scale(self) -> float:
        """rho * V / dt, the per-cell mass accumulation scale."""
        return self.fluid_density * self.cell_volume / self.dt

    @property
    def derived_inverse_M(self) -> float:
        """Inverse Biot modulus (alpha - phi_ref)(1 - alpha) / (lambda + 2G/3)."""
        return (
            (self.biot - self.porosity_ref)
            * (1.0 - self.biot)
            / (self.lame_lambda + 2.0 * self.shear / 3.0)
        )
