"""Polytropic gas state relations.

Pressure law P = A * rho**gamma with 1 < gamma < 3.  Everything else follows:
sound speed c(rho) = sqrt(A*gamma*rho**(gamma-1)), specific enthalpy
h(rho) = c**2/(gamma-1), and the Bernoulli density map that recovers rho from
the flow potential's first derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GasParams",
    "VacuumError",
    "sound_speed",
    "enthalpy",
    "enthalpy_inverse",
    "density_from_state",
]

# Arguments of the Bernoulli map below this fraction of B0 are treated as
# vacuum rather than round-off.
VACUUM_REL_THRESHOLD = 1e-14


class VacuumError(ValueError):
    """Raised when the Bernoulli argument drops to (numerical) vacuum.

    In a simulation this signals blow-up, not a programming error."""


@dataclass(frozen=True)
class GasParams:
    """Polytropic constants and the derived ambient Bernoulli constant.

    Attributes
    ----------
    A : float
        Pressure coefficient, > 0.
    gamma : float
        Adiabatic exponent, 1 < gamma < 3.
    rho0 : float
        Ambient (pre-shock) density, > 0.
    B0 : float
        Bernoulli constant of the static gas, h(rho0).  Derived.
    """

    A: float = 1.0
    gamma: float = 1.4
    rho0: float = 1.0
    B0: float = field(init=False)

    def __post_init__(self) -> None:
        if not (1.0 < self.gamma < 3.0):
            raise ValueError(f"gamma must lie in (1, 3), got {self.gamma}")
        if self.A <= 0:
            raise ValueError(f"A must be positive, got {self.A}")
        if self.rho0 <= 0:
            raise ValueError(f"rho0 must be positive, got {self.rho0}")
        object.__setattr__(self, "B0", enthalpy(self.rho0, self))


def _check_density(rho) -> None:
    if np.any(np.asarray(rho) <= 0):
        raise ValueError("density must be positive")


def sound_speed(rho, gas: GasParams):
    """Local sound speed c(rho) = sqrt(A*gamma*rho**(gamma-1))."""
    _check_density(rho)
    return np.sqrt(gas.A * gas.gamma * np.asarray(rho, dtype=float) ** (gas.gamma - 1.0))


def enthalpy(rho, gas: GasParams):
    """Specific enthalpy h(rho) = c(rho)**2 / (gamma - 1)."""
    _check_density(rho)
    return gas.A * gas.gamma * np.asarray(rho, dtype=float) ** (gas.gamma - 1.0) / (gas.gamma - 1.0)


def enthalpy_inverse(hval, gas: GasParams):
    """Density with the given specific enthalpy.

    Uses the closed form rho = ((gamma-1)*h / (A*gamma))**(1/(gamma-1)),
    exact and branch-free for the polytropic law.
    """
    hval = np.asarray(hval, dtype=float)
    if np.any(hval <= 0):
        raise ValueError("enthalpy must be positive")
    return ((gas.gamma - 1.0) * hval / (gas.A * gas.gamma)) ** (1.0 / (gas.gamma - 1.0))


def density_from_state(phi_t, grad_sq, gas: GasParams):
    """Bernoulli density map rho = h^{-1}(B0 - phi_t - grad_sq/2).

    Parameters
    ----------
    phi_t : time derivative of the flow potential.
    grad_sq : squared magnitude of the spatial gradient of the potential.

    Raises
    ------
    VacuumError
        If the enthalpy argument falls below the vacuum threshold
        (1e-14 * B0), which distinguishes physical vacuum from round-off.
    """
    arg = gas.B0 - np.asarray(phi_t, dtype=float) - 0.5 * np.asarray(grad_sq, dtype=float)
    if np.any(arg <= VACUUM_REL_THRESHOLD * gas.B0):
        raise VacuumError("Bernoulli argument reached vacuum; flow state is not admissible")
    return enthalpy_inverse(arg, gas)
