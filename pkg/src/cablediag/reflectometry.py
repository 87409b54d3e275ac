"""Synthesized reflectometry on the modem's reflection response.

A Gaussian-enveloped linear chirp is convolved with the band-limited
reflection impulse response, cross-correlated with itself, and the smoothed
correlation envelope carries one lobe per reflector.  Peak indices against
the known PLM-to-branch-point distance localize degradation boundaries.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve


class LocalizationError(RuntimeError):
    """The branch-point lobe could not be identified."""


@dataclass(frozen=True)
class ChirpParams:
    f_low: float = 2e6
    f_high: float = 30e6
    duration: float = 5e-6
    gaussian_sigma: float | None = None   # None -> duration/6
    sample_rate: float = 100e6

    def __post_init__(self):
        if not 0 < self.f_low < self.f_high:
            raise ValueError("need 0 < f_low < f_high")
        if self.f_high > self.sample_rate / 2:
            raise ValueError("f_high exceeds Nyquist")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.gaussian_sigma is not None and self.gaussian_sigma <= 0:
            raise ValueError("gaussian_sigma must be positive")

    @property
    def sigma(self) -> float:
        return self.duration / 6 if self.gaussian_sigma is None else self.gaussian_sigma


def gaussian_chirp(p: ChirpParams = ChirpParams()) -> np.ndarray:
    """Unit-peak Gaussian-enveloped linear up-chirp, f_low -> f_high."""
    n = int(round(p.duration * p.sample_rate))
    t = np.arange(n) / p.sample_rate
    rate = (p.f_high - p.f_low) / p.duration
    phase = 2 * np.pi * (p.f_low * t + 0.5 * rate * t**2)
    env = np.exp(-((t - p.duration / 2) ** 2) / (2 * p.sigma**2))
    return env * np.cos(phase)


def synthesize_rx(s: np.ndarray, h_ref_time: np.ndarray) -> np.ndarray:
    """Received waveform: linear convolution of the probe with the
    reflection impulse response (full length)."""
    return fftconvolve(np.asarray(s, float), np.asarray(h_ref_time, float))


def cross_correlate(s: np.ndarray, rx: np.ndarray) -> np.ndarray:
    """u[t] = sum_tau s[tau]*rx[t+tau] for t >= 0, length len(rx)."""
    s = np.asarray(s, float)
    rx = np.asarray(rx, float)
    full = fftconvolve(rx, s[::-1])
    return full[len(s) - 1:len(s) - 1 + len(rx)]


def envelope(u: np.ndarray, width: int = 4) -> np.ndarray:
    """|u| through a zero-phase two-pass moving average of ``width`` samples
    (implemented as one symmetric triangular kernel, so no phase shift)."""
    if width < 1:
        raise ValueError("width must be >= 1")
    kernel = np.ones(width) / width
    tri = np.convolve(kernel, kernel)          # length 2*width-1, symmetric
    return np.convolve(np.abs(u), tri, mode="same")


@dataclass(frozen=True)
class Peak:
    index: int
    magnitude: float


def detect_peaks(h: np.ndarray, rel_threshold: float = 0.02,
                 min_separation: int = 20) -> tuple[Peak, ...]:
    """Local maxima above rel_threshold*max(h), greedily thinned so no two
    survivors are closer than min_separation (larger wins, ties keep the
    earlier index).  Returned in index order."""
    h = np.asarray(h, float)
    if not 0 < rel_threshold < 1:
        raise ValueError("rel_threshold must lie in (0, 1)")
    if min_separation < 1:
        raise ValueError("min_separation must be >= 1")
    top = h.max(initial=0.0)
    if top <= 0:
        return ()
    thr = rel_threshold * top
    n = len(h)
    is_max = np.zeros(n, dtype=bool)
    if n >= 2:
        is_max[0] = h[0] >= h[1]
        is_max[-1] = h[-1] >= h[-2]
        if n > 2:
            is_max[1:-1] = (h[1:-1] >= h[:-2]) & (h[1:-1] > h[2:])
    cand = [i for i in np.flatnonzero(is_max & (h >= thr))]
    # magnitude-descending, index-ascending on ties -> deterministic greed
    cand.sort(key=lambda i: (-h[i], i))
    kept: list[int] = []
    for i in cand:
        if all(abs(i - j) >= min_separation for j in kept):
            kept.append(i)
    kept.sort()
    return tuple(Peak(int(i), float(h[i])) for i in kept)


@dataclass(frozen=True)
class JtfdrTrace:
    """Correlation-envelope trace with its detected peaks."""

    samples: np.ndarray
    dt: float
    peaks: tuple[Peak, ...]


def run_jtfdr(h_ref_time: np.ndarray, dt: float,
              chirp: ChirpParams = ChirpParams(),
              rel_threshold: float = 0.02,
              min_separation: int = 20) -> JtfdrTrace:
    """Full chain: probe -> echo synthesis -> correlation -> envelope -> peaks."""
    if abs(dt * chirp.sample_rate - 1.0) > 1e-9:
        raise ValueError("impulse response and chirp sample rates differ")
    s = gaussian_chirp(chirp)
    u = cross_correlate(s, synthesize_rx(s, h_ref_time))
    width = int(np.ceil(chirp.sample_rate / chirp.f_high))
    env = envelope(u, width)
    return JtfdrTrace(env, dt, detect_peaks(env, rel_threshold, min_separation))


def tdr_trace(h_ref_time: np.ndarray, dt: float,
              rel_threshold: float = 0.02,
              min_separation: int = 20) -> JtfdrTrace:
    """Raw-magnitude baseline: |h_ref| with the same peak detection."""
    mag = np.abs(np.asarray(h_ref_time, float))
    return JtfdrTrace(mag, dt, detect_peaks(mag, rel_threshold, min_separation))


BP_SEARCH_WINDOW = (0.92, 1.40)   # relative to the nominal round-trip index


def expected_bp_index(l0_m: float, dt: float, v_nominal: float) -> float:
    """Round-trip sample index of the branch point for an intact run."""
    if l0_m <= 0 or dt <= 0 or v_nominal <= 0:
        raise ValueError("l0, dt and v_nominal must be positive")
    return 2 * l0_m / (v_nominal * dt)


def find_bp_peak(peaks, n_expected: float,
                 window: tuple[float, float] = BP_SEARCH_WINDOW) -> Peak | None:
    """Last detected peak inside the search window around the nominal
    round-trip index.  Aging only slows the wave, so the true lobe sits at
    or after the nominal index; the upper margin absorbs LD delay."""
    lo, hi = window[0] * n_expected, window[1] * n_expected
    inside = [p for p in peaks if lo <= p.index <= hi]
    return inside[-1] if inside else None


def localize(peaks, l0_m: float, *, n_bp: int | None = None,
             dt: float | None = None, v_nominal: float | None = None,
             window: tuple[float, float] = BP_SEARCH_WINDOW):
    """Distances of interior reflectors via the index ratio to the BP lobe.

    distance_i = l0 * n_i / n_bp for every peak strictly between the origin
    and the BP lobe.  The BP index is either given or identified as the last
    peak in the expected window (needs dt and v_nominal).  Returns a list of
    (index, distance_m).
    """
    if len(peaks) < 2:
        raise LocalizationError("need at least two peaks to localize")
    if n_bp is None:
        if dt is None or v_nominal is None:
            raise ValueError("either n_bp or (dt, v_nominal) is required")
        bp = find_bp_peak(peaks, expected_bp_index(l0_m, dt, v_nominal), window)
        if bp is None:
            raise LocalizationError("no peak in the expected branch-point window")
        n_bp = bp.index
    if n_bp <= 0:
        raise LocalizationError("branch-point index must be positive")
    return [(p.index, l0_m * p.index / n_bp) for p in peaks if 0 < p.index < n_bp]


def trace_to_record(trace: JtfdrTrace) -> str:
    """One-line JSON record of a trace (samples as base64 little-endian f64)."""
    payload = {
        "dt": trace.dt,
        "samples": base64.b64encode(
            np.asarray(trace.samples, "<f8").tobytes()).decode("ascii"),
        "peaks": [[p.index, p.magnitude] for p in trace.peaks],
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"))


def trace_from_record(line: str) -> JtfdrTrace:
    obj = json.loads(line)
    samples = np.frombuffer(base64.b64decode(obj["samples"]), "<f8")
    peaks = tuple(Peak(int(i), float(m)) for i, m in obj["peaks"])
    return JtfdrTrace(samples, float(obj["dt"]), peaks)


def rescale(chirp: ChirpParams, sample_rate: float) -> ChirpParams:
    """Same chirp at a different sample rate."""
    return replace(chirp, sample_rate=sample_rate)
