"""Soil electromagnetic properties and ground boundary-condition coefficients.

Horizontal-magnetic (TM) polarization over a homogeneous lossy half space.
The ground enters the propagation solvers only through a handful of scalar
coefficients computed here: the complex permittivity, three reflection models
for validation, the surface impedance factor used by the frequency-domain
boundary condition, and the pair of inverse lengths ``(r, q)`` that
parameterize its time-domain counterpart.

Units: lengths in meters, wavenumbers in 1/m, conductivity either in S/m or
in Gaussian units (1/s).  All functions are pure.
"""

import cmath
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

C_LIGHT = 2.99792458e8
"""Speed of light in vacuum (m/s)."""

GAUSS_PER_SI = 8.98755e9
"""Conductivity conversion: sigma[1/s] = GAUSS_PER_SI * sigma[S/m].

Exact value is 1/(4 pi eps0) = 8.98755...e9; the rounded engineering pairing
0.01 S/m ~ 9e7 1/s holds to 0.2 percent.
"""


class MediumError(ValueError):
    """Invalid or singular medium parameters."""


@dataclass(frozen=True)
class SoilModel:
    """Real relative permittivity plus conductivity in both unit systems.

    Construct with either ``sigma_si`` (S/m) or ``sigma_gauss`` (1/s); the
    other is derived.  ``epsilon`` must be >= 1 and conductivities >= 0.
    """

    epsilon: float
    sigma_gauss: float = field(default=None)
    sigma_si: float = field(default=None)

    def __post_init__(self):
        sg, ss = self.sigma_gauss, self.sigma_si
        if sg is None and ss is None:
            sg, ss = 0.0, 0.0
        elif sg is None:
            sg = GAUSS_PER_SI * ss
        elif ss is None:
            ss = sg / GAUSS_PER_SI
        else:
            if not math.isclose(sg, GAUSS_PER_SI * ss, rel_tol=2e-3):
                raise MediumError(
                    f"inconsistent conductivities: {sg} 1/s vs {ss} S/m")
        if self.epsilon < 1.0:
            raise MediumError(f"relative permittivity {self.epsilon} < 1")
        if sg < 0.0:
            raise MediumError("negative conductivity")
        object.__setattr__(self, "sigma_gauss", float(sg))
        object.__setattr__(self, "sigma_si", float(ss))

    @property
    def is_lossless(self):
        return self.sigma_gauss == 0.0


@dataclass(frozen=True)
class ImpedanceKernelParams:
    """Inverse lengths (1/m) governing the time-domain ground response."""

    r: float
    q: float
    epsilon: float


def kernel_params(soil: SoilModel) -> ImpedanceKernelParams:
    """Rate pair r = 4 pi sigma/(c eps), q = 2 pi sigma/(c (eps - 1))."""
    if soil.epsilon <= 1.0 and soil.sigma_gauss > 0.0:
        raise MediumError("time-domain kernel requires epsilon > 1 for lossy soil")
    r = 4.0 * math.pi * soil.sigma_gauss / (C_LIGHT * soil.epsilon)
    q = (2.0 * math.pi * soil.sigma_gauss / (C_LIGHT * (soil.epsilon - 1.0))
         if soil.epsilon > 1.0 else 0.0)
    if soil.sigma_gauss > 0.0 and soil.epsilon > 2.0:
        assert r > q, "rate ordering r > q violated for epsilon > 2"
    return ImpedanceKernelParams(r=r, q=q, epsilon=soil.epsilon)


def complex_permittivity(soil: SoilModel, k: float) -> complex:
    """Complex relative permittivity eps + 4 pi i sigma/(k c) at wavenumber k.

    Args:
        soil: ground model.
        k: free-space wavenumber (1/m), must be positive.

    Returns:
        Complex permittivity with nonnegative imaginary part.
    """
    if k <= 0.0:
        raise MediumError(f"wavenumber must be positive, got {k}")
    return soil.epsilon + 4.0j * math.pi * soil.sigma_gauss / (k * C_LIGHT)


def _sqrt_decaying(z: complex) -> complex:
    # Principal branch; nonnegative real part goes with decay into the ground.
    root = cmath.sqrt(z)
    if root.real < 0.0:
        root = -root
    return root


def reflection_coefficient(model: str, eps_c: complex, beta) -> complex:
    """Plane-wave reflection coefficient at grazing angle ``beta`` (rad).

    Args:
        model: ``"fresnel"`` (exact), ``"leontovich"`` (classical impedance)
            or ``"modified"`` (impedance condition keeping the tangential
            derivative term).
        eps_c: complex relative permittivity of the ground.
        beta: grazing angle in [0, pi/2]; scalar or array.

    Returns:
        Complex reflection coefficient(s), |R| <= 1 for passive media.
    """
    beta = np.asarray(beta, dtype=float)
    if np.any(beta < 0.0) or np.any(beta > math.pi / 2 + 1e-12):
        raise MediumError("grazing angle outside [0, pi/2]")
    eps_c = complex(eps_c)
    sin_b, cos_b = np.sin(beta), np.cos(beta)
    name = model.lower()
    if name == "fresnel":
        root = np.sqrt(eps_c - cos_b ** 2 + 0j)
        root = np.where(root.real < 0.0, -root, root)
        num = eps_c * sin_b - root
        den = eps_c * sin_b + root
    elif name == "leontovich":
        se = _sqrt_decaying(eps_c)
        num = se * sin_b - 1.0
        den = se * sin_b + 1.0
    elif name == "modified":
        if abs(eps_c - 1.0) < 1e-12:
            raise MediumError("modified model singular at eps_c = 1")
        root = _sqrt_decaying(eps_c - 1.0)
        num = eps_c * sin_b - (eps_c - cos_b) / root
        den = eps_c * sin_b + (eps_c - cos_b) / root
    else:
        raise MediumError(f"unknown reflection model {model!r}")
    out = np.asarray(num / den, dtype=complex)
    return complex(out) if out.ndim == 0 else out


def impedance_factor(soil: SoilModel, k: float) -> complex:
    """Surface admittance factor sqrt(eps_c - 1)/eps_c of the ground BC.

    Branch chosen with nonnegative real part so that the energy flux through
    vertical cross sections decays monotonically with range.
    """
    eps_c = complex_permittivity(soil, k)
    if abs(eps_c - 1.0) < 0.5:
        warnings.warn(
            f"|eps_c - 1| = {abs(eps_c - 1.0):.3g} < 0.5: impedance boundary "
            "condition loses accuracy for near-unity permittivity",
            stacklevel=2)
    root = _sqrt_decaying(eps_c - 1.0)
    value = root / eps_c
    if value.real < -1e-15:
        raise MediumError("impedance factor landed on the growing branch")
    return value


def impedance_coefficient(soil: SoilModel, k: float, slope: float) -> complex:
    """Full bracket of the sloped-ground boundary condition.

    Returns ``sqrt(eps_c - 1)/eps_c - slope`` where ``slope`` is the local
    terrain derivative h'(x).
    """
    return impedance_factor(soil, k) - slope


def dispersive_bc_factor(soil: SoilModel, k: float) -> complex:
    """Impedance factor written through the rate pair (r, q).

    Evaluates ``sqrt(eps-1)/eps * sqrt(k (k + 2 i q))/(k + i r)``, which is
    algebraically identical to :func:`impedance_factor`; kept as the
    frequency-domain anchor of the time-domain kernel normalization.
    """
    if k <= 0.0:
        raise MediumError(f"wavenumber must be positive, got {k}")
    p = kernel_params(soil)
    eps = soil.epsilon
    static = math.sqrt(eps - 1.0) / eps
    return static * cmath.sqrt(k * (k + 2.0j * p.q)) / (k + 1.0j * p.r)


def brewster_angle(epsilon: float) -> float:
    """Grazing angle of vanishing TM reflection for a lossless ground."""
    return math.asin(1.0 / math.sqrt(epsilon + 1.0))
