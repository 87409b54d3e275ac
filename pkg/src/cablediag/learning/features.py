"""Feature extraction from channel observations.

The library: first four moments of spectrum magnitude/phase, top-K peak
(location, magnitude) pairs of time-domain traces, and trace variance.
Named featuresets assemble task-specific subsets; every set stays at or
below 16 dimensions so desk-scale training sets can satisfy the 10x rule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dielectric import propagation_velocity
from ..netmodel import ChannelObservation, impulse_response
from ..reflectometry import (
    ChirpParams,
    JtfdrTrace,
    detect_peaks,
    expected_bp_index,
    find_bp_peak,
    run_jtfdr,
    tdr_trace,
)

SENTINEL_LOC = -1.0   # fills empty peak slots; no real lobe sits at -1 s


def moments(x: np.ndarray) -> np.ndarray:
    """Mean and the 2nd..4th central moments."""
    x = np.asarray(x, float)
    if x.size == 0:
        raise ValueError("moments of an empty array")
    mu = x.mean()
    d = x - mu
    return np.array([mu, (d**2).mean(), (d**3).mean(), (d**4).mean()])


def peak_features(trace: JtfdrTrace, k: int = 5) -> np.ndarray:
    """(location_s, magnitude) of the K largest peaks, descending magnitude;
    missing slots are (SENTINEL_LOC, 0)."""
    if k < 1:
        raise ValueError("k must be >= 1")
    ranked = sorted(trace.peaks, key=lambda p: (-p.magnitude, p.index))[:k]
    out = np.empty(2 * k)
    for slot in range(k):
        if slot < len(ranked):
            out[2 * slot] = ranked[slot].index * trace.dt
            out[2 * slot + 1] = ranked[slot].magnitude
        else:
            out[2 * slot] = SENTINEL_LOC
            out[2 * slot + 1] = 0.0
    return out


@dataclass(frozen=True)
class FeatureConfig:
    """Everything featurisation needs beyond the observation itself."""

    chirp: ChirpParams = ChirpParams()
    rel_threshold: float = 0.02
    min_separation: int = 20
    top_k: int = 5
    n_fft: int = 4096
    l0_m: float = 500.0
    eps_nominal: float = 2.3   # intact dielectric, anchors the BP window

    @property
    def v_nominal(self) -> float:
        return float(propagation_velocity(self.eps_nominal))


def _jtfdr(obs: ChannelObservation, fc: FeatureConfig) -> JtfdrTrace:
    h, dt = impulse_response(obs.h_ref, obs.grid, fc.n_fft)
    return run_jtfdr(h, dt, fc.chirp, fc.rel_threshold, fc.min_separation)


def _tdr(obs: ChannelObservation, fc: FeatureConfig) -> JtfdrTrace:
    h, dt = impulse_response(obs.h_ref, obs.grid, fc.n_fft)
    return tdr_trace(h, dt, fc.rel_threshold, fc.min_separation)


def _bp_anchor(trace: JtfdrTrace, fc: FeatureConfig):
    """(bp_index, bp_magnitude); falls back to the nominal round-trip index
    when no lobe is detected in the window."""
    n_exp = expected_bp_index(fc.l0_m, trace.dt, fc.v_nominal)
    bp = find_bp_peak(trace.peaks, n_exp)
    if bp is not None:
        return bp.index, bp.magnitude
    idx = min(int(round(n_exp)), len(trace.samples) - 1)
    return idx, float(trace.samples[idx])


def _window_slots(trace: JtfdrTrace, lo: float, hi: float, k: int,
                  rel_threshold: float = 0.02,
                  min_separation: int = 20) -> np.ndarray:
    """Top-k peaks of the window slice re-ordered by time; sentinel-padded
    (loc, mag) pairs.

    Detection is local: the threshold is relative to the slice maximum, so
    a faint degradation echo still registers even when the origin and
    branch-point lobes dwarf it."""
    i0, i1 = int(np.ceil(lo)), int(np.floor(hi))
    i0 = max(i0, 0)
    i1 = min(i1, len(trace.samples))
    out = np.empty(2 * k)
    inside = []
    if i1 - i0 >= 2:
        local = detect_peaks(trace.samples[i0:i1], rel_threshold, min_separation)
        inside = sorted(local, key=lambda p: (-p.magnitude, p.index))[:k]
        inside.sort(key=lambda p: p.index)
    for slot in range(k):
        if slot < len(inside):
            out[2 * slot] = (i0 + inside[slot].index) * trace.dt
            out[2 * slot + 1] = inside[slot].magnitude
        else:
            out[2 * slot] = SENTINEL_LOC
            out[2 * slot + 1] = 0.0
    return out


def _slot_names(prefix: str, k: int):
    names = []
    for i in range(1, k + 1):
        names += [f"{prefix}{i}_loc", f"{prefix}{i}_mag"]
    return names


def _near_window(trace: JtfdrTrace, fc: FeatureConfig):
    """Peak slots between the origin lobe and the BP lobe, plus the BP pair.

    The slot window is capped at the nominal branch-point index even when
    the detected anchor sits beyond it (a degradation's slow-wave stretch
    can push the anchor past the structural lobe at the nominal distance;
    that lobe must not leak into the interior slots, where its magnitude
    would swamp the slice-relative threshold)."""
    n_bp, bp_mag = _bp_anchor(trace, fc)
    n_exp = expected_bp_index(fc.l0_m, trace.dt, fc.v_nominal)
    m = fc.min_separation
    slots = _window_slots(trace, m, min(n_bp, int(round(n_exp))) - m, 3,
                          fc.rel_threshold, fc.min_separation)
    vals = np.concatenate([slots, [n_bp * trace.dt, bp_mag]])
    return vals


_NEAR_NAMES = _slot_names("win", 3) + ["bp_loc", "bp_mag"]


def _fs_jtfdr_window(obs, fc):
    return _NEAR_NAMES, _near_window(_jtfdr(obs, fc), fc)


def _fs_href_window(obs, fc):
    return _NEAR_NAMES, _near_window(_tdr(obs, fc), fc)


def _fs_jtfdr_peaks(obs, fc):
    return _slot_names("pk", fc.top_k), peak_features(_jtfdr(obs, fc), fc.top_k)


def _fs_href_peaks(obs, fc):
    return _slot_names("tdr", fc.top_k), peak_features(_tdr(obs, fc), fc.top_k)


def _fs_hf_peaks(obs, fc):
    h, dt = impulse_response(obs.h_f, obs.grid, fc.n_fft)
    trace = tdr_trace(h, dt, fc.rel_threshold, fc.min_separation)
    return _slot_names("hf", fc.top_k), peak_features(trace, fc.top_k)


def _fs_jtfdr_far(obs, fc):
    """Stage-2 set: peak slots in the two beyond-BP windows that cover the
    suspect's BP-side and BE-side runs, the BP pair, and the trace variance."""
    trace = _jtfdr(obs, fc)
    n_bp, bp_mag = _bp_anchor(trace, fc)
    m = fc.min_separation
    near = _window_slots(trace, n_bp + m, 2 * n_bp - m, 3,
                         fc.rel_threshold, fc.min_separation)
    far = _window_slots(trace, 2 * n_bp + m, 3.4 * n_bp, 3,
                        fc.rel_threshold, fc.min_separation)
    vals = np.concatenate([near, far,
                           [n_bp * trace.dt, bp_mag, float(trace.samples.var())]])
    names = (_slot_names("mid", 3) + _slot_names("far", 3)
             + ["bp_loc", "bp_mag", "trace_var"])
    return names, vals


_MOMENT_NAMES = [f"{base}_{m}" for base in ("abs_hf", "ph_hf", "abs_href", "ph_href")
                 for m in ("mean", "cm2", "cm3", "cm4")]


def _fs_moments16(obs, fc):
    vals = np.concatenate([
        moments(np.abs(obs.h_f)),
        moments(np.unwrap(np.angle(obs.h_f))),
        moments(np.abs(obs.h_ref)),
        moments(np.unwrap(np.angle(obs.h_ref))),
    ])
    return _MOMENT_NAMES, vals


def _fs_jtfdr_window_href(obs, fc):
    names, vals = _fs_jtfdr_window(obs, fc)
    extra = moments(np.abs(obs.h_ref))
    return (list(names) + [f"abs_href_{m}" for m in ("mean", "cm2", "cm3", "cm4")],
            np.concatenate([vals, extra]))


FEATURESETS = {
    "jtfdr_window": _fs_jtfdr_window,        # 8
    "href_window": _fs_href_window,          # 8
    "jtfdr_peaks": _fs_jtfdr_peaks,          # 2K
    "href_peaks": _fs_href_peaks,            # 2K
    "hf_peaks": _fs_hf_peaks,                # 2K
    "jtfdr_far": _fs_jtfdr_far,              # 15
    "moments16": _fs_moments16,              # 16
    "jtfdr_window_href": _fs_jtfdr_window_href,  # 12
}

MAX_FEATURES = 16


def build_features(obs: ChannelObservation, featureset: str,
                   fc: FeatureConfig = FeatureConfig()):
    """(names, values) for one observation under a named featureset."""
    try:
        fn = FEATURESETS[featureset]
    except KeyError:
        raise ValueError(f"unknown featureset {featureset!r}") from None
    names, vals = fn(obs, fc)
    if len(vals) > MAX_FEATURES:
        raise ValueError(f"featureset {featureset} exceeds {MAX_FEATURES} features")
    return list(names), np.asarray(vals, float)


def featurize(observations, featureset: str,
              fc: FeatureConfig = FeatureConfig()):
    """Stack features for an iterable of observations -> (names, X)."""
    names, rows = None, []
    for obs in observations:
        n, v = build_features(obs, featureset, fc)
        names = names or n
        rows.append(v)
    if not rows:
        raise ValueError("no observations to featurize")
    return names, np.vstack(rows)


@dataclass(frozen=True)
class Standardizer:
    """Per-feature (x - mean)/std from training data only; zero-variance
    features are flagged and always map to 0."""

    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray   # bool mask

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        x = np.asarray(x, float)
        mean = x.mean(axis=0)
        std = x.std(axis=0)
        flat = std == 0
        return cls(mean, np.where(flat, 1.0, std), flat)

    def transform(self, x: np.ndarray) -> np.ndarray:
        z = (np.asarray(x, float) - self.mean) / self.std
        if np.any(self.zero_variance):
            z[:, self.zero_variance] = 0.0
        return z
