"""Physical parameters, grids, state containers, and quadrature.

Units are SI throughout: lengths in m, time in s, temperature in degrees C,
heat flux in W/m^2. Temperature is stored as the excess over the melting
point, so safety checks on the profile reduce to sign checks.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidParameterError


@dataclass(frozen=True)
class MaterialProperties:
    """Bulk thermal properties of one phase.

    k:           thermal conductivity [W/(m C)]
    rho:         density [kg/m^3]
    cp:          heat capacity [J/(kg C)]
    latent_heat: latent heat of fusion [J/kg]
    melt_temp:   melting temperature [C]
    """

    k: float
    rho: float
    cp: float
    latent_heat: float
    melt_temp: float

    def __post_init__(self):
        for name in ("k", "rho", "cp", "latent_heat", "melt_temp"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0.0:
                raise InvalidParameterError(f"material {name} must be positive, got {v!r}")


# Ti6Al4V alloy, the default material for the additive-manufacturing scenarios.
TI6AL4V = MaterialProperties(k=32.5, rho=3920.0, cp=830.0, latent_heat=2.86e5, melt_temp=1650.0)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants derived from material properties.

    alpha: thermal diffusivity k/(rho*cp) [m^2/s]
    beta:  interface response coefficient k/(rho*latent_heat) [m^2/(s C)]
    gamma: volumetric latent heat rho*latent_heat [J/m^3]
    """

    alpha: float
    beta: float
    gamma: float

    @property
    def heat_capacity_vol(self) -> float:
        """Volumetric heat capacity rho*cp [J/(m^3 C)], equal to k/alpha."""
        return self.gamma * self.beta / self.alpha


def derive_constants(mat: MaterialProperties) -> DerivedConstants:
    """Compute diffusivity, interface coefficient, and volumetric latent heat."""
    return DerivedConstants(
        alpha=mat.k / (mat.rho * mat.cp),
        beta=mat.k / (mat.rho * mat.latent_heat),
        gamma=mat.rho * mat.latent_heat,
    )


@dataclass(frozen=True)
class Grid:
    """Uniform grid on the unit interval of the immobilized coordinate."""

    n_cells: int

    def __post_init__(self):
        if self.n_cells < 8:
            raise InvalidParameterError(f"grid needs at least 8 cells, got {self.n_cells}")

    @property
    def dxi(self) -> float:
        return 1.0 / self.n_cells

    @cached_property
    def xi(self) -> np.ndarray:
        """Node coordinates, n_cells+1 points spanning [0, 1]."""
        nodes = np.linspace(0.0, 1.0, self.n_cells + 1)
        nodes.setflags(write=False)
        return nodes


def integrate_profile(values: np.ndarray, spacing: float) -> float:
    """Composite trapezoid rule; exact for affine profiles.

    `values` are samples on a uniform grid with the given spacing.
    """
    values = np.asarray(values, dtype=float)
    if values.ndim != 1 or values.size < 2:
        raise InvalidParameterError("integrate_profile needs at least 2 samples")
    if spacing <= 0.0:
        raise InvalidParameterError(f"spacing must be positive, got {spacing!r}")
    return float(np.trapezoid(values, dx=spacing))


def _frozen_profile(values, n_label: str) -> np.ndarray:
    arr = np.array(values, dtype=float, copy=True)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidParameterError(f"{n_label} must be a 1-D array of at least 2 samples")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameterError(f"{n_label} contains non-finite values")
    return arr


def _pin_node(arr: np.ndarray, idx: int, label: str) -> None:
    """Force the interface node to exactly zero excess; reject clearly unpinned data."""
    scale = max(1.0, float(np.max(np.abs(arr))))
    if abs(arr[idx]) > 1e-9 * scale:
        raise InvalidParameterError(
            f"{label} must vanish at the interface node, got {arr[idx]!r}"
        )
    arr[idx] = 0.0


@dataclass(frozen=True)
class OnePhaseState:
    """Liquid temperature excess on the immobilized grid plus interface position.

    theta[i] sampled at xi = i/n, where xi = x/s maps the liquid region onto
    [0, 1]. The last node sits on the interface and is pinned to zero excess.
    """

    t: float
    s: float
    theta: np.ndarray

    def __post_init__(self):
        if not np.isfinite(self.s) or self.s <= 0.0:
            raise InvalidParameterError(f"interface position must be positive, got {self.s!r}")
        arr = _frozen_profile(self.theta, "theta")
        _pin_node(arr, -1, "theta")
        arr.setflags(write=False)
        object.__setattr__(self, "theta", arr)

    @property
    def n_cells(self) -> int:
        return self.theta.size - 1


@dataclass(frozen=True)
class ActuatorState:
    """Heat-flux actuator state.

    qc: boundary heat flux [W/m^2]
    p:  flux rate [W/(m^2 s)], present only for the order-2 actuator chain
    """

    qc: float
    p: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.qc):
            raise InvalidParameterError(f"flux must be finite, got {self.qc!r}")
        if self.p is not None and not np.isfinite(self.p):
            raise InvalidParameterError(f"flux rate must be finite, got {self.p!r}")

    @property
    def order(self) -> int:
        return 1 if self.p is None else 2


def affine_excess_profile(peak: float, n_cells: int) -> np.ndarray:
    """Initial excess profile peak*(1 - xi): hottest at the heated wall, zero at the interface."""
    if peak < 0.0:
        raise InvalidParameterError(f"profile peak must be nonnegative, got {peak!r}")
    return peak * (1.0 - np.linspace(0.0, 1.0, n_cells + 1))
