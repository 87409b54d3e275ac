"""Water-tree aging physics for XLPE cable insulation.

Degradation depth growth and its inverse (equivalent age), the complex
permittivity of water-treed insulation, the two-layer series mixture seen by
the field, and the resulting propagation velocity.

Convention: complex permittivities are relative and written eps' - j*eps''
with eps'' >= 0 (lossy means negative imaginary part).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0 as EPS0_VACUUM
from scipy.constants import mu_0 as MU0

# Engineering year used for all age <-> depth conversions.
YEAR_SECONDS = 3.156e7

# Real part of the water permittivity; treated as constant over the band.
EPS_WATER_REAL = 81.0


@dataclass(frozen=True)
class MaterialParams:
    """Nominal material constants of the insulation/water system.

    ``eps0`` is the absolute-permittivity constant the aging and mixing
    model is calibrated with (slightly rounded from vacuum).
    """

    alpha0: float = 1.44e4          # degradation rate constant
    nu0: float = 2.5e-28            # micro-void volume, m^3
    f0: float = 60.0                # mains frequency driving tree growth, Hz
    eps0: float = 8.8e-12           # model permittivity constant, F/m
    eps_pe: complex = 2.3 - 0.001j  # intact XLPE, relative
    yield_strength: float = 2e7     # mechanical yield strength, Pa
    depol_factor: float = 1.0 / 12.0  # depolarization factor of tree voids
    q_w: float = 0.06               # water volume fraction in treed region
    sigma_w: float = 0.22           # water conductivity, S/m

    def __post_init__(self):
        for name in ("alpha0", "nu0", "f0", "eps0", "yield_strength", "sigma_w"):
            if getattr(self, name) <= 0:
                raise ValueError(f"MaterialParams.{name} must be positive")
        if not 0 < self.depol_factor < 1:
            raise ValueError("depol_factor must lie in (0, 1)")
        if not 0 < self.q_w < 1:
            raise ValueError("q_w must lie in (0, 1)")
        if self.eps_pe.real < 1 or self.eps_pe.imag > 0:
            raise ValueError("eps_pe must have real part >= 1 and imag <= 0")


@dataclass(frozen=True)
class CableSpec:
    """Two-conductor cable geometry and rated voltage (SI units)."""

    r_cond: float = 3.99e-3    # conductor radius, m
    d_cond: float = 15.88e-3   # conductor separation, m
    r_insul: float = 3.4e-3    # insulation thickness, m
    v0: float = 12e3           # rated voltage, V

    def __post_init__(self):
        if self.r_cond <= 0 or self.r_insul <= 0 or self.v0 <= 0:
            raise ValueError("cable dimensions and voltage must be positive")
        if self.d_cond <= 2 * self.r_cond:
            raise ValueError("conductor separation must exceed the conductor diameter")


# Upper bound on the homogeneous severity ratio; the 30-year depth at rated
# field stays below this for the nominal cable.
GAMMA_HOMO_MAX = 0.05


@dataclass(frozen=True)
class AgingProfile:
    """Degradation state of one cable run: a homogeneous severity ratio plus
    an optional localized degradation (LD) patch."""

    gamma_homo: float = 0.0
    gamma_local: float | None = None
    start_m: float | None = None
    length_m: float | None = None

    def __post_init__(self):
        if not 0 <= self.gamma_homo <= GAMMA_HOMO_MAX + 1e-12:
            raise ValueError(f"gamma_homo must lie in [0, {GAMMA_HOMO_MAX}]")
        fields = (self.gamma_local, self.start_m, self.length_m)
        if any(v is not None for v in fields) and not all(v is not None for v in fields):
            raise ValueError("LD requires gamma_local, start_m and length_m together")
        if self.gamma_local is not None:
            if not 0.1 <= self.gamma_local <= 1.0:
                raise ValueError("gamma_local must lie in [0.1, 1]")
            if self.gamma_local <= self.gamma_homo:
                raise ValueError("gamma_local must exceed gamma_homo")
            if self.start_m < 0 or self.length_m <= 0:
                raise ValueError("LD geometry must satisfy start >= 0, length > 0")

    @property
    def has_ld(self) -> bool:
        return self.gamma_local is not None


def _check_frequency(f):
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    return f


def water_permittivity(f, params: MaterialParams = MaterialParams()):
    """Complex relative permittivity of water, 81 - j*sigma_w/(2*pi*f*eps0)."""
    f = _check_frequency(f)
    return EPS_WATER_REAL - 1j * params.sigma_w / (2 * np.pi * f * params.eps0)


def wt_permittivity(f, params: MaterialParams = MaterialParams()):
    """Effective permittivity of fully water-treed insulation.

    Dilute-inclusion mixing of water voids (fraction q_w, depolarization
    factor depol_factor) in XLPE:

        eps_wt = eps_pe * (1 + q_w*(eps_w - eps_pe)
                               / (eps_pe + depol*(1 - q_w)*(eps_w - eps_pe)))
    """
    ew = water_permittivity(f, params)
    contrast = ew - params.eps_pe
    den = params.eps_pe + params.depol_factor * (1 - params.q_w) * contrast
    if np.any(np.abs(den) < 1e-12):
        raise ValueError("degenerate mixing denominator")
    return params.eps_pe * (1 + params.q_w * contrast / den)


def scale_permittivity(eps, magnitude: float = 1.0, loss_tangent: float = 1.0):
    """Scale a lossy permittivity: |real| by ``magnitude``, tan-delta by
    ``loss_tangent``.  Used to perturb the water-tree model for robustness
    studies; (1, 1) is the identity."""
    if magnitude <= 0 or loss_tangent <= 0:
        raise ValueError("perturbation factors must be positive")
    eps = np.asarray(eps, dtype=complex)
    re = eps.real * magnitude
    return re - 1j * np.abs(eps.imag) * magnitude * loss_tangent


def series_mixture(eps_deg, eps_intact, gamma: float):
    """Series (layered) combination: fraction ``gamma`` of the insulation path
    is degraded, the rest intact. Endpoints return the pure phases exactly."""
    if not 0 <= gamma <= 1:
        raise ValueError("gamma must lie in [0, 1]")
    if gamma == 0:
        return np.asarray(eps_intact, dtype=complex) + 0j
    if gamma == 1:
        return np.asarray(eps_deg, dtype=complex) + 0j
    return 1.0 / (gamma / np.asarray(eps_deg, dtype=complex) + (1 - gamma) / eps_intact)


def total_permittivity(gamma: float, f, params: MaterialParams = MaterialParams()):
    """Permittivity governing wave propagation where a depth fraction
    ``gamma`` of the insulation is water-treed."""
    if gamma == 0:
        _check_frequency(f)
        return np.asarray(params.eps_pe, dtype=complex) + 0j
    return series_mixture(wt_permittivity(f, params), params.eps_pe, gamma)


def max_field(spec: CableSpec = CableSpec()) -> float:
    """Peak electric field at the conductor surface under rated voltage."""
    return spec.v0 / (spec.r_cond * np.log(spec.d_cond / (2 * spec.r_cond)))


def homogeneous_depth(t_seconds, field, params: MaterialParams = MaterialParams()):
    """Homogeneous water-tree depth (m) after ``t_seconds`` under ``field``.

    y = (alpha0*nu0*f0*F^2*eps0*Re{eps_w}*t^(3/2) / yield_strength)^(1/3);
    the real part of the water permittivity is the constant 81.
    """
    t = np.asarray(t_seconds, dtype=float)
    if np.any(t < 0):
        raise ValueError("age must be non-negative")
    if np.any(np.asarray(field) <= 0):
        raise ValueError("field must be positive")
    k = (params.alpha0 * params.nu0 * params.f0 * field**2
         * params.eps0 * EPS_WATER_REAL / params.yield_strength)
    return (k * t**1.5) ** (1.0 / 3.0)


def equivalent_age(depth_m, field, params: MaterialParams = MaterialParams()):
    """Exact inverse of :func:`homogeneous_depth`: seconds of aging that
    produce the given depth under ``field``."""
    y = np.asarray(depth_m, dtype=float)
    if np.any(y < 0):
        raise ValueError("depth must be non-negative")
    if np.any(np.asarray(field) <= 0):
        raise ValueError("field must be positive")
    k = (params.alpha0 * params.nu0 * params.f0 * field**2
         * params.eps0 * EPS_WATER_REAL / params.yield_strength)
    return (y**3 / k) ** (2.0 / 3.0)


def propagation_velocity(eps_total):
    """TEM phase velocity 1/sqrt(mu0*eps0*Re{eps_total}) (physical constants)."""
    re = np.real(np.asarray(eps_total))
    if np.any(re < 1):
        raise ValueError("relative permittivity must have real part >= 1")
    return 1.0 / np.sqrt(MU0 * EPS0_VACUUM * re)
