"""Seeded generation of network states and labeled channel datasets.

Every sample is a pure function of (config seed, task id, sample index):
the index derives an independent counter-based RNG stream, so datasets are
reproducible record-for-record regardless of generation order or process
count.  Draws inside one sample happen in a fixed documented order:
homogeneous severity, LD presence, LD branch, gamma_local, LD length, LD
center offset, then the three BE loads (real, imaginary each).

Dataset files are line-oriented: a JSON header, then one JSON record per
sample with scalar labels in plain text and complex spectra as
base64-encoded interleaved (re, im) little-endian float64.  A sidecar
``.crc`` file carries one 64-bit BLAKE2b checksum per record line.
"""

from __future__ import annotations

import base64
import json
import zlib
from dataclasses import dataclass, field
from hashlib import blake2b
from pathlib import Path

import numpy as np

from .dielectric import (
    GAMMA_HOMO_MAX,
    CableSpec,
    MaterialParams,
    equivalent_age,
    homogeneous_depth,
    max_field,
)
from .netmodel import (
    BRANCH_IDS,
    PLM_IDS,
    ChannelObservation,
    FrequencyGrid,
    LocalizedDegradation,
    NetworkScenario,
    solve_network,
)

DATASET_FORMAT = "cablediag-dataset"
DATASET_VERSION = 1

# classification tasks: LD adjacent to one PLM vs not / BP side vs BE side;
# regression tasks: homogeneous age and LD severity/geometry on p1_bp
CLASSIFICATION_TASKS = ("ld_identify_p1", "ld_identify_p2", "ld_identify_p3",
                        "branch_locate_p1", "branch_locate_p2", "branch_locate_p3")
REGRESSION_TASKS = ("gamma_homo", "gamma_local", "target", "product")
TASK_IDS = CLASSIFICATION_TASKS + REGRESSION_TASKS


class DatasetFormatError(ValueError):
    """File is not a parseable dataset."""


class DatasetVersionError(DatasetFormatError):
    """Format version not supported by this reader."""


class DatasetChecksumError(DatasetFormatError):
    """A record's checksum does not match the sidecar."""


def _default_lengths() -> dict:
    return {b: 500.0 for b in BRANCH_IDS}


@dataclass(frozen=True)
class ScenarioConfig:
    """Sampling ranges and topology for dataset generation."""

    seed: int = 0
    gamma_homo_range: tuple[float, float] = (0.0, GAMMA_HOMO_MAX)
    gamma_local_range: tuple[float, float] = (0.1, 1.0)
    lwt_range: tuple[float, float] = (100.0, 300.0)
    center_offset_range: tuple[float, float] = (-100.0, 100.0)
    load_real_range: tuple[float, float] = (0.0, 50.0)
    load_imag_range: tuple[float, float] = (-50.0, 50.0)
    branch_lengths: dict = field(default_factory=_default_lengths)
    ld_probability: float = 0.5
    balance: bool = True
    wt_magnitude_range: tuple[float, float] = (1.0, 1.0)
    wt_loss_tangent_range: tuple[float, float] = (1.0, 1.0)
    z_plm: float = 50.0
    cable: CableSpec = CableSpec()
    material: MaterialParams = MaterialParams()

    def __post_init__(self):
        lo, hi = self.gamma_homo_range
        if not 0 <= lo <= hi <= GAMMA_HOMO_MAX + 1e-12:
            raise ValueError(f"gamma_homo_range must lie in [0, {GAMMA_HOMO_MAX}]")
        lo, hi = self.gamma_local_range
        if not 0.1 <= lo <= hi <= 1.0:
            raise ValueError("gamma_local_range must lie in [0.1, 1]")
        for name in ("lwt_range", "center_offset_range", "load_real_range",
                     "load_imag_range", "wt_magnitude_range",
                     "wt_loss_tangent_range"):
            lo, hi = getattr(self, name)
            if lo > hi:
                raise ValueError(f"{name} is inverted")
        if self.lwt_range[0] <= 0:
            raise ValueError("lwt_range must be positive")
        if not 0 <= self.ld_probability <= 1:
            raise ValueError("ld_probability must lie in [0, 1]")
        for b, ln in self.branch_lengths.items():
            if b not in BRANCH_IDS:
                raise ValueError(f"unknown branch {b!r}")
            if ln is not None and ln <= 0:
                raise ValueError("configured branch lengths must be positive")

    def rng_for(self, task: str, index: int) -> np.random.Generator:
        """Independent, reproducible stream for one sample."""
        key = zlib.crc32(task.encode("ascii"))
        return np.random.Generator(np.random.Philox(
            np.random.SeedSequence((self.seed, key, index))))

    def as_dict(self) -> dict:
        return {
            "seed": self.seed,
            "gamma_homo_range": list(self.gamma_homo_range),
            "gamma_local_range": list(self.gamma_local_range),
            "lwt_range": list(self.lwt_range),
            "center_offset_range": list(self.center_offset_range),
            "load_real_range": list(self.load_real_range),
            "load_imag_range": list(self.load_imag_range),
            "branch_lengths": {b: self.branch_lengths.get(b) for b in BRANCH_IDS},
            "ld_probability": self.ld_probability,
            "balance": self.balance,
            "wt_magnitude_range": list(self.wt_magnitude_range),
            "wt_loss_tangent_range": list(self.wt_loss_tangent_range),
            "z_plm": self.z_plm,
            "cable": {"r_cond": self.cable.r_cond, "d_cond": self.cable.d_cond,
                      "r_insul": self.cable.r_insul, "v0": self.cable.v0},
            "material": {
                "alpha0": self.material.alpha0, "nu0": self.material.nu0,
                "f0": self.material.f0, "eps0": self.material.eps0,
                "eps_pe": [self.material.eps_pe.real, self.material.eps_pe.imag],
                "yield_strength": self.material.yield_strength,
                "depol_factor": self.material.depol_factor,
                "q_w": self.material.q_w, "sigma_w": self.material.sigma_w,
            },
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        mat = doc["material"]
        return cls(
            seed=doc["seed"],
            gamma_homo_range=tuple(doc["gamma_homo_range"]),
            gamma_local_range=tuple(doc["gamma_local_range"]),
            lwt_range=tuple(doc["lwt_range"]),
            center_offset_range=tuple(doc["center_offset_range"]),
            load_real_range=tuple(doc["load_real_range"]),
            load_imag_range=tuple(doc["load_imag_range"]),
            branch_lengths=dict(doc["branch_lengths"]),
            ld_probability=doc["ld_probability"],
            balance=doc["balance"],
            wt_magnitude_range=tuple(doc["wt_magnitude_range"]),
            wt_loss_tangent_range=tuple(doc["wt_loss_tangent_range"]),
            z_plm=doc["z_plm"],
            cable=CableSpec(**doc["cable"]),
            material=MaterialParams(
                alpha0=mat["alpha0"], nu0=mat["nu0"], f0=mat["f0"],
                eps0=mat["eps0"], eps_pe=complex(*mat["eps_pe"]),
                yield_strength=mat["yield_strength"],
                depol_factor=mat["depol_factor"], q_w=mat["q_w"],
                sigma_w=mat["sigma_w"]),
        )


@dataclass(frozen=True)
class LabeledSample:
    """One solved network with its ground-truth labels."""

    scenario: NetworkScenario
    observations: tuple[ChannelObservation, ...]
    labels: dict


def sample_labels(scn: NetworkScenario) -> dict:
    """Ground truth recomputed from the embedded profile; t_eq inverts the
    homogeneous depth gamma_homo * r_insul at the nominal maximum field."""
    t_eq = float(equivalent_age(scn.gamma_homo * scn.cable.r_insul,
                                max_field(scn.cable), scn.material))
    labels = {
        "gamma_homo": scn.gamma_homo,
        "t_eq": t_eq,
        "ld_present": scn.ld is not None,
        "ld_branch": None,
        "gamma_local": None,
        "target_m": None,
        "lwt_m": None,
        "product": None,
    }
    if scn.ld is not None:
        labels.update(
            ld_branch=scn.ld.branch,
            gamma_local=scn.ld.gamma_local,
            target_m=scn.ld.start_m,
            lwt_m=scn.ld.length_m,
            product=scn.ld.length_m * scn.ld.gamma_local,
        )
    return labels


def _draw_uniform(rng, rng_range) -> float:
    lo, hi = rng_range
    return float(lo + (hi - lo) * rng.random())


def _draw_loads(cfg: ScenarioConfig, rng) -> dict:
    return {p: complex(_draw_uniform(rng, cfg.load_real_range),
                       _draw_uniform(rng, cfg.load_imag_range))
            for p in PLM_IDS}


def _draw_ld(cfg: ScenarioConfig, rng, branch: str,
             gamma_homo: float) -> LocalizedDegradation:
    """LD wholly inside the branch: center drawn about the branch middle,
    clamped; a too-long LD is redrawn a bounded number of times."""
    length = cfg.branch_lengths[branch]
    for _ in range(16):
        gamma_local = _draw_uniform(rng, cfg.gamma_local_range)
        lwt = _draw_uniform(rng, cfg.lwt_range)
        center = length / 2 + _draw_uniform(rng, cfg.center_offset_range)
        if lwt > length:
            continue
        start = min(max(center - lwt / 2, 0.0), length - lwt)
        if gamma_local > gamma_homo:
            return LocalizedDegradation(branch=branch, gamma_local=gamma_local,
                                        start_m=start, length_m=lwt)
    raise ValueError(f"cannot place an LD inside branch {branch!r} "
                     f"(length {length} m) with the configured ranges")


def _scenario(cfg: ScenarioConfig, gamma_homo: float,
              ld: LocalizedDegradation | None, loads: dict,
              rng) -> NetworkScenario:
    return NetworkScenario(
        gamma_homo=gamma_homo, ld=ld,
        branch_lengths=dict(cfg.branch_lengths), be_loads=loads,
        z_plm=cfg.z_plm, cable=cfg.cable, material=cfg.material,
        wt_magnitude=_draw_uniform(rng, cfg.wt_magnitude_range),
        wt_loss_tangent=_draw_uniform(rng, cfg.wt_loss_tangent_range))


def sample_scenario(cfg: ScenarioConfig, index: int,
                    task: str = "scenario") -> NetworkScenario:
    """Generic draw: homogeneous severity always, an LD with probability
    ``cfg.ld_probability`` on a uniformly chosen branch."""
    rng = cfg.rng_for(task, index)
    gamma_homo = _draw_uniform(rng, cfg.gamma_homo_range)
    ld = None
    if rng.random() < cfg.ld_probability:
        branch = BRANCH_IDS[int(rng.integers(len(BRANCH_IDS)))]
        ld = _draw_ld(cfg, rng, branch, gamma_homo)
    loads = _draw_loads(cfg, rng)
    return _scenario(cfg, gamma_homo, ld, loads, rng)


def _adjacent_branches(plm: int) -> tuple[str, str]:
    return (f"p{plm}_bp", f"p{plm}_be")


def observer_pair(task: str) -> tuple[int, int]:
    """(tx, rx) PLM ids whose channel the task's features are built from."""
    if task.startswith("ld_identify_p"):
        plm = int(task[-1])
        rx = min(p for p in PLM_IDS if p != plm)
        return plm, rx
    if task.startswith("branch_locate_p"):
        suspect = int(task[-1])
        observer = min(p for p in PLM_IDS if p != suspect)
        return observer, suspect
    if task in REGRESSION_TASKS:
        return 1, 2
    raise ValueError(f"unknown task {task!r}")


def _t_eq_max(cfg: ScenarioConfig) -> float:
    gamma_hi = cfg.gamma_homo_range[1]
    return float(equivalent_age(gamma_hi * cfg.cable.r_insul,
                                max_field(cfg.cable), cfg.material))


def task_scenario(cfg: ScenarioConfig, task: str, index: int) -> NetworkScenario:
    """Draw one scenario for a task, honoring class balance by index parity
    (even -> positive) so balanced sets are exactly balanced."""
    if task not in TASK_IDS:
        raise ValueError(f"unknown task {task!r}")
    rng = cfg.rng_for(task, index)

    if task == "gamma_homo":
        # age drawn uniformly so the age axis is evenly covered; the
        # severity follows from the exact growth law
        t = float(rng.random()) * _t_eq_max(cfg)
        depth = float(homogeneous_depth(t, max_field(cfg.cable), cfg.material))
        gamma = min(depth / cfg.cable.r_insul, cfg.gamma_homo_range[1])
        return _scenario(cfg, gamma, None, _draw_loads(cfg, rng), rng)

    gamma_homo = _draw_uniform(rng, cfg.gamma_homo_range)

    if task in ("gamma_local", "target", "product"):
        ld = _draw_ld(cfg, rng, "p1_bp", gamma_homo)
        return _scenario(cfg, gamma_homo, ld, _draw_loads(cfg, rng), rng)

    positive = (index % 2 == 0) if cfg.balance else \
        bool(rng.random() < cfg.ld_probability)

    if task.startswith("ld_identify_p"):
        plm = int(task[-1])
        adjacent = _adjacent_branches(plm)
        if positive:
            branch = adjacent[int(rng.integers(2))]
            ld = _draw_ld(cfg, rng, branch, gamma_homo)
        else:
            # negatives split between fully healthy networks and an LD
            # somewhere the observer is not responsible for
            others = [b for b in BRANCH_IDS if b not in adjacent]
            if (index // 2) % 2 == 0:
                ld = None
            else:
                branch = others[int(rng.integers(len(others)))]
                ld = _draw_ld(cfg, rng, branch, gamma_homo)
        return _scenario(cfg, gamma_homo, ld, _draw_loads(cfg, rng), rng)

    if task.startswith("branch_locate_p"):
        suspect = int(task[-1])
        bp_side, be_side = _adjacent_branches(suspect)
        branch = bp_side if positive else be_side
        ld = _draw_ld(cfg, rng, branch, gamma_homo)
        return _scenario(cfg, gamma_homo, ld, _draw_loads(cfg, rng), rng)

    raise AssertionError(task)


def task_label(task: str, sample: LabeledSample) -> float:
    """Training target for one sample under the given task."""
    labels = sample.labels
    if task.startswith("ld_identify_p"):
        adjacent = _adjacent_branches(int(task[-1]))
        return 1.0 if labels["ld_branch"] in adjacent else -1.0
    if task.startswith("branch_locate_p"):
        return 1.0 if labels["ld_branch"] == f"p{task[-1]}_bp" else -1.0
    key = {"gamma_homo": "gamma_homo", "gamma_local": "gamma_local",
           "target": "target_m", "product": "product"}[task]
    value = labels[key]
    if value is None:
        raise ValueError(f"sample lacks a {key} label for task {task!r}")
    return float(value)


@dataclass(frozen=True)
class Dataset:
    task: str
    config: ScenarioConfig
    grid: FrequencyGrid
    samples: tuple[LabeledSample, ...]

    def __len__(self) -> int:
        return len(self.samples)


def generate_sample(cfg: ScenarioConfig, task: str, index: int,
                    grid: FrequencyGrid) -> LabeledSample:
    scn = task_scenario(cfg, task, index)
    tx, rx = observer_pair(task)
    obs = solve_network(scn, tx, rx, grid)
    return LabeledSample(scenario=scn, observations=(obs,),
                         labels=sample_labels(scn))


def generate_dataset(cfg: ScenarioConfig, n: int, task: str,
                     grid: FrequencyGrid | None = None) -> Dataset:
    """n labeled, solved samples; a deterministic function of (cfg, n, task)."""
    if n <= 0:
        raise ValueError("n must be positive")
    if task not in TASK_IDS:
        raise ValueError(f"unknown task {task!r}")
    grid = grid or FrequencyGrid.plc_band()
    samples = tuple(generate_sample(cfg, task, i, grid) for i in range(n))
    return Dataset(task=task, config=cfg, grid=grid, samples=samples)


# --- persistence ---------------------------------------------------------

def _encode_complex(a: np.ndarray) -> str:
    arr = np.asarray(a, complex)
    inter = np.empty(2 * arr.size)
    inter[0::2] = arr.real
    inter[1::2] = arr.imag
    return base64.b64encode(inter.astype("<f8").tobytes()).decode("ascii")


def _decode_complex(text: str) -> np.ndarray:
    inter = np.frombuffer(base64.b64decode(text), dtype="<f8")
    return (inter[0::2] + 1j * inter[1::2]).copy()


def _complex_pair(z) -> list | None:
    if z is None:
        return None
    z = complex(z)
    return [z.real, z.imag]


def _scenario_doc(scn: NetworkScenario) -> dict:
    return {
        "gamma_homo": scn.gamma_homo,
        "ld": None if scn.ld is None else {
            "branch": scn.ld.branch, "gamma_local": scn.ld.gamma_local,
            "start_m": scn.ld.start_m, "length_m": scn.ld.length_m},
        "branch_lengths": {b: scn.branch_lengths.get(b) for b in BRANCH_IDS},
        "be_loads": {str(p): _complex_pair(scn.be_loads.get(p)) for p in PLM_IDS},
        "z_plm": scn.z_plm,
        "wt_magnitude": scn.wt_magnitude,
        "wt_loss_tangent": scn.wt_loss_tangent,
    }


def _scenario_from_doc(doc: dict, cfg: ScenarioConfig) -> NetworkScenario:
    ld = None
    if doc["ld"] is not None:
        ld = LocalizedDegradation(branch=doc["ld"]["branch"],
                                  gamma_local=doc["ld"]["gamma_local"],
                                  start_m=doc["ld"]["start_m"],
                                  length_m=doc["ld"]["length_m"])
    loads = {int(p): (None if pair is None else complex(*pair))
             for p, pair in doc["be_loads"].items()}
    return NetworkScenario(gamma_homo=doc["gamma_homo"], ld=ld,
                           branch_lengths=dict(doc["branch_lengths"]),
                           be_loads=loads, z_plm=doc["z_plm"],
                           cable=cfg.cable, material=cfg.material,
                           wt_magnitude=doc["wt_magnitude"],
                           wt_loss_tangent=doc["wt_loss_tangent"])


def _record_line(index: int, sample: LabeledSample) -> str:
    doc = {
        "index": index,
        "scenario": _scenario_doc(sample.scenario),
        "labels": sample.labels,
        "observations": [
            {"observer": obs.observer, "rx": obs.rx,
             "h_f": _encode_complex(obs.h_f),
             "h_ref": _encode_complex(obs.h_ref),
             "z_in": _encode_complex(obs.z_in)}
            for obs in sample.observations],
    }
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def _checksum(line: str) -> str:
    return blake2b(line.encode("ascii"), digest_size=8).hexdigest()


def save_dataset(ds: Dataset, path: str | Path) -> None:
    """Write the dataset and its ``.crc`` sidecar (one checksum per record)."""
    path = Path(path)
    header = json.dumps({
        "format": DATASET_FORMAT, "version": DATASET_VERSION,
        "task": ds.task, "n": len(ds.samples),
        "grid": {"f_start": ds.grid.f_start, "delta_f": ds.grid.delta_f,
                 "count": ds.grid.count},
        "config": ds.config.as_dict(),
    }, sort_keys=True, separators=(",", ":"))
    lines = [header]
    sums = []
    for i, sample in enumerate(ds.samples):
        try:
            line = _record_line(i, sample)
        except (TypeError, ValueError) as exc:
            raise type(exc)(f"{path}: failed to encode record {i}: {exc}") from exc
        lines.append(line)
        sums.append(_checksum(line))
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    Path(str(path) + ".crc").write_text("\n".join(sums) + ("\n" if sums else ""),
                                        encoding="ascii")


def load_dataset(path: str | Path) -> Dataset:
    """Exact inverse of save_dataset; checksums verified when present."""
    path = Path(path)
    text = path.read_text(encoding="ascii")
    lines = text.splitlines()
    if not lines:
        raise DatasetFormatError(f"{path}: empty file, missing header")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: unreadable header: {exc}") from exc
    if header.get("format") != DATASET_FORMAT:
        raise DatasetFormatError(f"{path}: not a {DATASET_FORMAT} file")
    if header.get("version") != DATASET_VERSION:
        raise DatasetVersionError(
            f"{path}: version {header.get('version')} unsupported "
            f"(reader speaks {DATASET_VERSION})")
    cfg = ScenarioConfig.from_dict(header["config"])
    grid = FrequencyGrid(f_start=header["grid"]["f_start"],
                         delta_f=header["grid"]["delta_f"],
                         count=header["grid"]["count"])
    records = lines[1:]
    n = header["n"]
    if len(records) < n:
        raise DatasetFormatError(
            f"{path}: truncated after record {len(records)} of {n}")
    crc_path = Path(str(path) + ".crc")
    sums = crc_path.read_text(encoding="ascii").split() if crc_path.exists() else None
    if sums is not None and len(sums) < n:
        raise DatasetFormatError(f"{crc_path}: truncated checksum sidecar")
    samples = []
    for i in range(n):
        line = records[i]
        if sums is not None and _checksum(line) != sums[i]:
            raise DatasetChecksumError(f"{path}: checksum mismatch at record {i}")
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise DatasetFormatError(f"{path}: unreadable record {i}: {exc}") from exc
        scn = _scenario_from_doc(doc["scenario"], cfg)
        obs = tuple(
            ChannelObservation(observer=o["observer"], rx=o["rx"], grid=grid,
                               h_f=_decode_complex(o["h_f"]),
                               z_in=_decode_complex(o["z_in"]),
                               h_ref=_decode_complex(o["h_ref"]))
            for o in doc["observations"])
        samples.append(LabeledSample(scenario=scn, observations=obs,
                                     labels=doc["labels"]))
    return Dataset(task=header["task"], config=cfg, grid=grid,
                   samples=tuple(samples))


def reference_ld_scenario(cfg: ScenarioConfig | None = None,
                          gamma_local: float = 0.1,
                          start_m: float = 211.0,
                          length_m: float = 166.0) -> NetworkScenario:
    """The worked localization example: an LD on p1_bp starting 211 m from
    PLM 1, matched BE loads, no homogeneous aging."""
    cfg = cfg or ScenarioConfig()
    ld = LocalizedDegradation(branch="p1_bp", gamma_local=gamma_local,
                              start_m=start_m, length_m=length_m)
    return NetworkScenario(gamma_homo=0.0, ld=ld,
                           branch_lengths=dict(cfg.branch_lengths),
                           be_loads={p: 50.0 + 0j for p in PLM_IDS},
                           z_plm=cfg.z_plm, cable=cfg.cable,
                           material=cfg.material)


def save_scenarios(scenarios, path: str | Path) -> None:
    """One JSON scenario document per line (no observations, no labels)."""
    path = Path(path)
    lines = [json.dumps(_scenario_doc(s), sort_keys=True, separators=(",", ":"))
             for s in scenarios]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="ascii")


def load_scenarios(path: str | Path,
                   cfg: ScenarioConfig | None = None) -> tuple[NetworkScenario, ...]:
    """Inverse of save_scenarios; cable/material come from ``cfg``.

    A malformed line raises DatasetFormatError naming the line number."""
    cfg = cfg or ScenarioConfig()
    path = Path(path)
    out = []
    for i, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            out.append(_scenario_from_doc(doc, cfg))
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise DatasetFormatError(f"{path}: line {i}: {exc}") from exc
    return tuple(out)
