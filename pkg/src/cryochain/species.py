"""Ion and neutral-gas species definitions."""

from dataclasses import dataclass

from .constants import (
    ATOMIC_MASS,
    ELEMENTARY_CHARGE,
    H2_MASS_U,
    H2_POLARIZABILITY_VOLUME,
    YB171_MASS_U,
)


@dataclass(frozen=True)
class IonSpecies:
    """A trapped ion: mass in kg, charge in C (positive)."""

    mass: float
    charge: float = ELEMENTARY_CHARGE

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError(f"ion mass must be positive, got {self.mass}")
        if self.charge <= 0.0:
            raise ValueError(f"ion charge must be positive, got {self.charge}")


@dataclass(frozen=True)
class BackgroundGas:
    """Residual neutral gas: mass in kg, polarizability volume in m^3,
    translational temperature in K."""

    mass: float
    polarizability_volume: float
    temperature: float

    def __post_init__(self):
        if self.mass <= 0.0:
            raise ValueError(f"gas mass must be positive, got {self.mass}")
        if self.polarizability_volume <= 0.0:
            raise ValueError(
                f"polarizability volume must be positive, got {self.polarizability_volume}"
            )
        if self.temperature <= 0.0:
            raise ValueError(f"gas temperature must be positive, got {self.temperature}")


def ytterbium_171() -> IonSpecies:
    return IonSpecies(mass=YB171_MASS_U * ATOMIC_MASS)


def hydrogen_gas(temperature: float) -> BackgroundGas:
    """Molecular hydrogen, the dominant residual species in a cold vacuum."""
    return BackgroundGas(
        mass=H2_MASS_U * ATOMIC_MASS,
        polarizability_volume=H2_POLARIZABILITY_VOLUME,
        temperature=temperature,
    )
