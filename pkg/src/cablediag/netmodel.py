"""Frequency-domain model of a T-shaped network of degraded cable runs.

Three powerline-modem (PLM) ports, each 500 m from a common branch point
(BP), each with a further 500 m run to a load-terminated branch extension
(BE).  Every run carries the shared homogeneous aging; at most one run holds
a localized degradation (LD).  Per-unit-length parameters come from the mixed
dielectric, runs are cascaded as ABCD two-ports, side branches fold into
shunt admittances, and the solver returns the end-to-end transfer function
H_f, the input impedance and the reflection transfer function H_ref at the
transmitting port.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.constants import epsilon_0 as EPS0_VACUUM
from scipy.constants import mu_0 as MU0

from .dielectric import (
    GAMMA_HOMO_MAX,
    AgingProfile,
    CableSpec,
    MaterialParams,
    scale_permittivity,
    series_mixture,
    wt_permittivity,
)

COPPER_SIGMA = 5.8e7  # conductor conductivity, S/m

PLM_IDS = (1, 2, 3)
BRANCH_IDS = ("p1_bp", "p2_bp", "p3_bp", "p1_be", "p2_be", "p3_be")


class SingularityError(ArithmeticError):
    """Network solve hit a singular divider (non-passive inputs)."""


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform analysis grid: f_k = f_start + k*delta_f, k = 0..count-1."""

    f_start: float
    delta_f: float
    count: int

    def __post_init__(self):
        if self.f_start <= 0 or self.delta_f <= 0 or self.count < 2:
            raise ValueError("grid requires f_start > 0, delta_f > 0, count >= 2")

    def frequencies(self) -> np.ndarray:
        return self.f_start + self.delta_f * np.arange(self.count)

    @property
    def f_stop(self) -> float:
        return self.f_start + self.delta_f * (self.count - 1)

    @classmethod
    def plc_band(cls, f_min: float = 2e6, f_max: float = 30e6,
                 n_fft: int = 4096, sample_rate: float = 100e6) -> "FrequencyGrid":
        """Band snapped onto the FFT bin grid delta_f = sample_rate/n_fft."""
        df = sample_rate / n_fft
        k0 = int(np.ceil(f_min / df - 1e-9))
        k1 = int(np.floor(f_max / df + 1e-9))
        if k1 <= k0:
            raise ValueError("empty band")
        return cls(f_start=k0 * df, delta_f=df, count=k1 - k0 + 1)


@dataclass(frozen=True)
class PulParams:
    """Per-unit-length line parameters (arrays over the frequency grid)."""

    resistance: np.ndarray   # ohm/m
    inductance: np.ndarray   # H/m
    conductance: np.ndarray  # S/m
    capacitance: np.ndarray  # F/m


@dataclass(frozen=True)
class LocalizedDegradation:
    """One LD patch on a named run; start is measured from the PLM end."""

    branch: str
    gamma_local: float
    start_m: float
    length_m: float

    def __post_init__(self):
        if self.branch not in BRANCH_IDS:
            raise ValueError(f"unknown branch {self.branch!r}")
        if not 0.1 <= self.gamma_local <= 1.0:
            raise ValueError("gamma_local must lie in [0.1, 1]")
        if self.start_m < 0 or self.length_m <= 0:
            raise ValueError("LD geometry must satisfy start >= 0, length > 0")

    @property
    def end_m(self) -> float:
        return self.start_m + self.length_m

    @property
    def plm(self) -> int:
        return int(self.branch[1])


def _default_lengths():
    return {b: 500.0 for b in BRANCH_IDS}


@dataclass(frozen=True)
class NetworkScenario:
    """Complete description of one network state.

    ``branch_lengths`` maps branch id to metres (None = branch absent);
    ``be_loads`` maps PLM id to the BE termination (None = BE absent).
    ``wt_magnitude``/``wt_loss_tangent`` perturb the water-tree permittivity
    during synthesis only (labels are unaffected).
    """

    gamma_homo: float = 0.0
    ld: LocalizedDegradation | None = None
    branch_lengths: dict = field(default_factory=_default_lengths)
    be_loads: dict = field(default_factory=lambda: {1: 50.0 + 0j, 2: 50.0 + 0j, 3: 50.0 + 0j})
    z_plm: float = 50.0
    cable: CableSpec = CableSpec()
    material: MaterialParams = MaterialParams()
    wt_magnitude: float = 1.0
    wt_loss_tangent: float = 1.0
    seed: int | None = None

    def __post_init__(self):
        if not 0 <= self.gamma_homo <= GAMMA_HOMO_MAX + 1e-12:
            raise ValueError(f"gamma_homo must lie in [0, {GAMMA_HOMO_MAX}]")
        if self.z_plm <= 0:
            raise ValueError("z_plm must be positive")
        for b, ln in self.branch_lengths.items():
            if b not in BRANCH_IDS:
                raise ValueError(f"unknown branch {b!r}")
            if ln is not None and ln < 0:
                raise ValueError("branch lengths must be >= 0")
        for p, z in self.be_loads.items():
            if p not in PLM_IDS:
                raise ValueError(f"unknown PLM {p!r}")
            if z is not None and complex(z).real < 0:
                raise ValueError("BE loads must be passive (Re >= 0)")
        if self.ld is not None:
            ln = self.branch_lengths.get(self.ld.branch)
            if ln is None:
                raise ValueError("LD placed on an absent branch")
            if self.ld.gamma_local <= self.gamma_homo:
                raise ValueError("gamma_local must exceed gamma_homo")
            if self.ld.end_m > ln + 1e-9:
                raise ValueError("LD must lie wholly inside its branch")

    def length(self, branch: str):
        return self.branch_lengths.get(branch)

    def profile_for(self, branch: str) -> AgingProfile:
        if self.ld is not None and self.ld.branch == branch:
            return AgingProfile(self.gamma_homo, self.ld.gamma_local,
                                self.ld.start_m, self.ld.length_m)
        return AgingProfile(self.gamma_homo)


def pul_parameters(spec: CableSpec, eps_total, f) -> PulParams:
    """Two-wire line parameters for the given composite permittivity.

    C and L use the exact vacuum constants so that 1/sqrt(LC) equals the
    TEM velocity identically; R models the skin effect of both conductors,
    G the dielectric loss tangent.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise ValueError("frequency must be positive")
    eps = np.asarray(eps_total, dtype=complex)
    ach = np.arccosh(spec.d_cond / (2 * spec.r_cond))
    cap = np.pi * EPS0_VACUUM * eps.real / ach * np.ones_like(f)
    ind = (MU0 / np.pi) * ach * np.ones_like(f)
    cond = 2 * np.pi * f * cap * (np.abs(eps.imag) / eps.real)
    res = np.sqrt(np.pi * f * MU0 / COPPER_SIGMA) / (np.pi * spec.r_cond)
    return PulParams(res, ind, cond, cap)


def abcd_section(pul: PulParams, length_m: float, f) -> np.ndarray:
    """ABCD matrix of a uniform section, shape (nf, 2, 2)."""
    f = np.asarray(f, dtype=float)
    if length_m < 0:
        raise ValueError("section length must be >= 0")
    nf = f.shape[0] if f.ndim else 1
    if length_m == 0:
        return np.broadcast_to(np.eye(2, dtype=complex), (nf, 2, 2)).copy()
    w = 2 * np.pi * f
    zs = pul.resistance + 1j * w * pul.inductance
    yp = pul.conductance + 1j * w * pul.capacitance
    gamma = np.sqrt(zs * yp)          # principal branch: Re >= 0
    theta = gamma * length_m
    if np.any(theta.real > 700):
        raise OverflowError("section electrically too long (Re(gamma*l) > 700)")
    zc = zs / gamma                   # keeps gamma*zc == zs exactly
    ch, sh = np.cosh(theta), np.sinh(theta)
    m = np.empty((nf, 2, 2), dtype=complex)
    m[:, 0, 0] = ch
    m[:, 0, 1] = zc * sh
    m[:, 1, 0] = sh / zc
    m[:, 1, 1] = ch
    return m


def reflection_ctf(z_in, z_plm) -> np.ndarray:
    """Reflection transfer function (Z_in - Z_plm)/(Z_in + Z_plm)."""
    z_in = np.asarray(z_in, dtype=complex)
    den = z_in + z_plm
    if np.any(np.abs(den) < 1e-30):
        raise SingularityError("Z_in + Z_plm vanished")
    return (z_in - z_plm) / den


@dataclass(frozen=True)
class ChannelObservation:
    """What one transmitting PLM port sees: end-to-end CFR to the receiving
    PLM, its own input impedance, and the reflection transfer function."""

    observer: int
    rx: int
    grid: FrequencyGrid
    h_f: np.ndarray
    z_in: np.ndarray
    h_ref: np.ndarray


def _shunt(y: np.ndarray) -> np.ndarray:
    nf = y.shape[0]
    m = np.zeros((nf, 2, 2), dtype=complex)
    m[:, 0, 0] = 1.0
    m[:, 1, 1] = 1.0
    m[:, 1, 0] = y
    return m


def _input_impedance(m: np.ndarray, z_term: np.ndarray) -> np.ndarray:
    den = m[:, 1, 0] * z_term + m[:, 1, 1]
    if np.any(np.abs(den) < 1e-30):
        raise SingularityError("singular input-impedance divider")
    return (m[:, 0, 0] * z_term + m[:, 0, 1]) / den


class _EpsCache:
    """eps_total per gamma, with the scenario's water-tree perturbation."""

    def __init__(self, scn: NetworkScenario, f: np.ndarray):
        self.scn, self.f = scn, f
        self._wt = None
        self._by_gamma = {}

    def __call__(self, gamma: float) -> np.ndarray:
        if gamma not in self._by_gamma:
            if gamma == 0:
                eps = np.full_like(self.f, self.scn.material.eps_pe, dtype=complex)
            else:
                if self._wt is None:
                    wt = wt_permittivity(self.f, self.scn.material)
                    self._wt = scale_permittivity(
                        wt, self.scn.wt_magnitude, self.scn.wt_loss_tangent)
                eps = series_mixture(self._wt, self.scn.material.eps_pe, gamma)
            self._by_gamma[gamma] = eps
        return self._by_gamma[gamma]


def _branch_pieces(scn: NetworkScenario, branch: str):
    """(length, gamma) sections from the PLM end; at most three."""
    total = scn.length(branch)
    prof = scn.profile_for(branch)
    if not prof.has_ld:
        return [(total, prof.gamma_homo)]
    pieces = []
    if prof.start_m > 0:
        pieces.append((prof.start_m, prof.gamma_homo))
    pieces.append((prof.length_m, prof.gamma_local))
    tail = total - prof.start_m - prof.length_m
    if tail > 0:
        pieces.append((tail, prof.gamma_homo))
    return pieces


def _branch_abcd(scn: NetworkScenario, branch: str, f: np.ndarray,
                 eps: _EpsCache, from_plm: bool) -> np.ndarray:
    pieces = _branch_pieces(scn, branch)
    if not from_plm:
        pieces = pieces[::-1]
    m = None
    for length, gamma in pieces:
        sec = abcd_section(pul_parameters(scn.cable, eps(gamma), f), length, f)
        m = sec if m is None else m @ sec
    return m


def solve_network(scn: NetworkScenario, tx: int, rx: int,
                  grid: FrequencyGrid | None = None) -> ChannelObservation:
    """Solve the network for one ordered PLM pair.

    BE runs fold into shunt admittances at their PLM nodes, the remaining
    side branch folds into a shunt at BP, and the tx->BP->rx path is a
    cascade of ABCD sections.  H_f is the rx-node voltage over the source
    EMF (matched everything gives 1/2); Z_in is seen at the tx port.
    """
    if tx not in PLM_IDS or rx not in PLM_IDS or tx == rx:
        raise ValueError("tx and rx must be distinct PLM ids")
    grid = grid or FrequencyGrid.plc_band()
    f = grid.frequencies()
    eps = _EpsCache(scn, f)
    zero = np.zeros_like(f, dtype=complex)

    def be_admittance(plm: int) -> np.ndarray:
        load = scn.be_loads.get(plm)
        branch = f"p{plm}_be"
        if load is None or scn.length(branch) is None:
            return zero
        m = _branch_abcd(scn, branch, f, eps, from_plm=True)
        zl = np.full_like(f, complex(load), dtype=complex)
        return 1.0 / _input_impedance(m, zl)

    third = next(p for p in PLM_IDS if p not in (tx, rx))

    # Side branch: BP -> third PLM node (PLM shunt + its BE) folded at BP.
    if scn.length(f"p{third}_bp") is None:
        y_bp = zero
    else:
        y_node = 1.0 / scn.z_plm + be_admittance(third)
        m_side = _branch_abcd(scn, f"p{third}_bp", f, eps, from_plm=False)
        y_bp = 1.0 / _input_impedance(m_side, 1.0 / y_node)

    z_term = 1.0 / (1.0 / scn.z_plm + be_admittance(rx))

    m = _shunt(be_admittance(tx))
    m = m @ _branch_abcd(scn, f"p{tx}_bp", f, eps, from_plm=True)
    m = m @ _shunt(y_bp)
    m = m @ _branch_abcd(scn, f"p{rx}_bp", f, eps, from_plm=False)

    z_in = _input_impedance(m, z_term)
    divider = m[:, 0, 0] + m[:, 0, 1] / z_term
    src = scn.z_plm + z_in
    bad = (np.abs(divider) < 1e-30) | (np.abs(src) < 1e-30)
    if np.any(bad):
        raise SingularityError(f"singular solve at grid index {int(np.argmax(bad))}")
    h_f = z_in / (src * divider)
    return ChannelObservation(observer=tx, rx=rx, grid=grid, h_f=h_f,
                              z_in=z_in, h_ref=reflection_ctf(z_in, scn.z_plm))


def impulse_response(h: np.ndarray, grid: FrequencyGrid,
                     n_fft: int = 4096) -> tuple[np.ndarray, float]:
    """Band-limited impulse response of a one-sided spectrum.

    The band is embedded at its FFT bins in a Hermitian-symmetric spectrum
    of size n_fft (zero outside the band) and inverse-transformed; sample
    spacing is 1/(n_fft*delta_f).  The grid must sit on the bin raster.
    """
    h = np.asarray(h, dtype=complex)
    if h.shape != (grid.count,):
        raise ValueError("spectrum length must match the grid")
    k0f = grid.f_start / grid.delta_f
    k0 = int(round(k0f))
    if abs(k0f - k0) > 1e-6:
        raise ValueError("grid start is not on the FFT bin raster")
    k1 = k0 + grid.count - 1
    if k1 >= n_fft // 2:
        raise ValueError("band exceeds the Nyquist bin of n_fft")
    spec = np.zeros(n_fft, dtype=complex)
    spec[k0:k1 + 1] = h
    spec[n_fft - k1:n_fft - k0 + 1] = np.conj(h[::-1])
    ht = np.fft.ifft(spec)
    peak = np.max(np.abs(ht))
    if peak > 0 and np.max(np.abs(ht.imag)) > 1e-10 * peak:
        raise AssertionError("Hermitian embedding failed to produce a real signal")
    return ht.real, 1.0 / (n_fft * grid.delta_f)
