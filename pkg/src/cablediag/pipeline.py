"""Multi-stage diagnosis orchestration.

Stage 1: each PLM's classifier votes on a localized degradation (LD) in
its two adjacent runs.  No votes -> homogeneous path: severity regression
and exact conversion to an equivalent age.  One vote -> stage 2 resolves
which side of the voting PLM holds the LD, then severity, target-point,
and length-product regressions run on the channel of the PLM nearest the
LD.  Two votes violate the single-LD contract and raise.

Also houses the training-size sweep with saturation detection and the
robustness harness (train on nominal physics, evaluate on datasets whose
water-tree permittivity is perturbed at synthesis time).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .dielectric import GAMMA_HOMO_MAX, equivalent_age, max_field
from .learning import (
    FeatureConfig,
    TrainedModel,
    evaluate,
    featurize,
    load_model,
    model_to_json,
    save_model,
    train_model,
)
from .netmodel import PLM_IDS, ChannelObservation, FrequencyGrid, solve_network
from .reflectometry import ChirpParams
from .scenario import (
    CLASSIFICATION_TASKS,
    TASK_IDS,
    Dataset,
    ScenarioConfig,
    observer_pair,
    task_label,
)

BUNDLE_FORMAT = "cablediag-bundle"
BUNDLE_VERSION = 1

TASK_FEATURESETS = {
    "ld_identify_p1": "jtfdr_peaks", "ld_identify_p2": "jtfdr_peaks",
    "ld_identify_p3": "jtfdr_peaks",
    "branch_locate_p1": "jtfdr_far", "branch_locate_p2": "jtfdr_far",
    "branch_locate_p3": "jtfdr_far",
    "gamma_homo": "moments16",
    "gamma_local": "jtfdr_window_href",
    "target": "jtfdr_window",
    "product": "jtfdr_window_href",
}

TASK_ALGORITHMS = {
    "ld_identify_p1": "adaboost", "ld_identify_p2": "adaboost",
    "ld_identify_p3": "adaboost",
    "branch_locate_p1": "adaboost", "branch_locate_p2": "adaboost",
    "branch_locate_p3": "adaboost",
    "gamma_homo": "l2boost",
    "gamma_local": "l2boost",
    "target": "svr",
    "product": "l2boost",
}

TASK_PARAMS: dict[str, dict] = {"target": {"kernel": "linear"}}

MIN_SAMPLES_PER_FEATURE = 10      # training-set size floor, per feature
HOLDOUT_FRACTION = 0.2


class AmbiguousVotesError(RuntimeError):
    """Two PLMs with disjoint adjacency both assert an LD."""

    def __init__(self, votes: dict):
        self.votes = dict(votes)
        super().__init__(f"conflicting stage-1 votes: {self.votes}")


@dataclass(frozen=True)
class ModelBundle:
    """All trained models of one pipeline plus the config they assume."""

    models: dict                       # task id -> TrainedModel
    config: ScenarioConfig
    grid: FrequencyGrid
    feature_config: FeatureConfig = FeatureConfig()

    def __post_init__(self):
        for task in self.models:
            if task not in TASK_IDS:
                raise ValueError(f"unknown task {task!r} in bundle")
        missing = [t for t in TASK_IDS if t not in self.models]
        if missing:
            raise ValueError(f"bundle lacks models for: {', '.join(missing)}")

    def model(self, task: str) -> TrainedModel:
        return self.models[task]


@dataclass(frozen=True)
class DiagnosisReport:
    """Outcome of one cooperative diagnosis.

    Exactly one path is populated: homogeneous (gamma_homo, t_eq) or
    localized (branch, gamma_local, target_m, lwt_m, product)."""

    profile_type: str                  # "homogeneous" | "localized"
    votes: dict                        # PLM id -> bool (LD asserted)
    branch: str | None = None
    gamma_homo: float | None = None
    t_eq_s: float | None = None
    gamma_local: float | None = None
    target_m: float | None = None
    lwt_m: float | None = None
    product: float | None = None
    provenance: tuple[str, ...] = field(default=())

    def __post_init__(self):
        homo = self.t_eq_s is not None
        local = any(v is not None
                    for v in (self.gamma_local, self.target_m, self.lwt_m))
        if homo == local:
            raise ValueError("report must populate exactly one verdict path")
        if self.profile_type not in ("homogeneous", "localized"):
            raise ValueError(f"bad profile_type {self.profile_type!r}")
        if (self.profile_type == "localized") != local:
            raise ValueError("profile_type inconsistent with populated fields")
        if self.lwt_m is not None and self.lwt_m <= 0:
            raise ValueError("lwt_m must be positive")

    def to_json_line(self) -> str:
        doc = {"profile_type": self.profile_type,
               "votes": {str(k): bool(v) for k, v in sorted(self.votes.items())},
               "branch": self.branch, "gamma_homo": self.gamma_homo,
               "t_eq_s": self.t_eq_s, "gamma_local": self.gamma_local,
               "target_m": self.target_m, "lwt_m": self.lwt_m,
               "product": self.product, "provenance": list(self.provenance)}
        return json.dumps(doc, sort_keys=True, separators=(",", ":"))

    def to_text(self) -> str:
        lines = [f"profile: {self.profile_type}",
                 "votes:   " + "  ".join(f"PLM{p}={'LD' if v else 'ok'}"
                                         for p, v in sorted(self.votes.items()))]
        if self.profile_type == "homogeneous":
            years = self.t_eq_s / 3.156e7
            lines.append(f"gamma_homo: {self.gamma_homo:.4f}")
            lines.append(f"t_eq: {self.t_eq_s:.4e} s ({years:.2f} years)")
        else:
            lines.append(f"branch: {self.branch}")
            lines.append(f"gamma_local: {self.gamma_local:.4f}")
            lines.append(f"target: {self.target_m:.1f} m from the nearest PLM")
            lines.append(f"lwt: {self.lwt_m:.1f} m (product {self.product:.2f})")
        lines.extend(f"  - {p}" for p in self.provenance)
        return "\n".join(lines)


def dataset_features(ds: Dataset, fc: FeatureConfig):
    """(names, X, y) for a task dataset, one row per sample."""
    names, x = featurize((s.observations[0] for s in ds.samples),
                         TASK_FEATURESETS[ds.task], fc)
    y = np.array([task_label(ds.task, s) for s in ds.samples])
    return names, x, y


def _check_class_mix(task: str, y: np.ndarray, bound: float) -> None:
    pos = float(np.mean(y > 0))
    if min(pos, 1 - pos) < bound:
        raise ValueError(
            f"{task}: minority class fraction {min(pos, 1 - pos):.3f} "
            f"below the configured bound {bound}")


def train_task_model(ds: Dataset, fc: FeatureConfig | None = None,
                     algorithm: str | None = None,
                     class_balance_bound: float = 0.2,
                     **params) -> TrainedModel:
    """Fit one task's model with the 10x sample floor and a training-tail
    holdout whose metrics land in the model metadata."""
    fc = fc or FeatureConfig()
    names, x, y = dataset_features(ds, fc)
    needed = MIN_SAMPLES_PER_FEATURE * len(names)
    if len(x) < needed:
        raise ValueError(
            f"{ds.task}: {len(x)} samples < {needed} required "
            f"(10x rule for {len(names)} features)")
    algorithm = algorithm or TASK_ALGORITHMS[ds.task]
    merged = dict(TASK_PARAMS.get(ds.task, {}))
    merged.update(params)
    if ds.task in CLASSIFICATION_TASKS:
        _check_class_mix(ds.task, y, class_balance_bound)
    n_eval = max(1, int(round(HOLDOUT_FRACTION * len(x))))
    n_fit = len(x) - n_eval
    tm = train_model(ds.task, x[:n_fit], y[:n_fit], names, algorithm,
                     metadata={"seed": ds.config.seed,
                               "featureset": TASK_FEATURESETS[ds.task]},
                     **merged)
    holdout = evaluate(tm, x[n_fit:], y[n_fit:])
    meta = dict(tm.metadata)
    meta["holdout"] = {k: (None if isinstance(v, float) and np.isnan(v) else v)
                       for k, v in vars(holdout).items()}
    return replace(tm, metadata=meta)


def train_pipeline(datasets: dict, fc: FeatureConfig | None = None,
                   algorithms: dict | None = None,
                   class_balance_bound: float = 0.2) -> ModelBundle:
    """Train every task's model from its dataset; all ten tasks required."""
    fc = fc or FeatureConfig()
    algorithms = algorithms or {}
    missing = [t for t in TASK_IDS if t not in datasets]
    if missing:
        raise ValueError(f"missing datasets for: {', '.join(missing)}")
    ref = datasets[TASK_IDS[0]]
    models = {}
    for task in TASK_IDS:
        ds = datasets[task]
        if ds.task != task:
            raise ValueError(f"dataset under key {task!r} was generated "
                             f"for task {ds.task!r}")
        if ds.grid != ref.grid:
            raise ValueError("datasets disagree on the frequency grid")
        models[task] = train_task_model(
            ds, fc, algorithms.get(task), class_balance_bound)
    return ModelBundle(models=models, config=ref.config, grid=ref.grid,
                       feature_config=fc)


def observe_network(scn, grid: FrequencyGrid | None = None,
                    pairs=None) -> tuple[ChannelObservation, ...]:
    """Solve the (tx, rx) channels a diagnosis needs (default: all six
    ordered PLM pairs)."""
    grid = grid or FrequencyGrid.plc_band()
    if pairs is None:
        pairs = [(a, b) for a in PLM_IDS for b in PLM_IDS if a != b]
    return tuple(solve_network(scn, tx, rx, grid) for tx, rx in pairs)


def _pick_observation(observations, tx: int, rx: int,
                      task: str) -> ChannelObservation:
    for obs in observations:
        if obs.observer == tx and obs.rx == rx:
            return obs
    raise ValueError(f"task {task!r} needs the PLM{tx}->PLM{rx} channel "
                     "but it is not among the observations")


def _predict(bundle: ModelBundle, task: str, observations) -> float:
    tx, rx = observer_pair(task)
    obs = _pick_observation(observations, tx, rx, task)
    if obs.grid != bundle.grid:
        raise ValueError("observation grid differs from the bundle's grid")
    names, x = featurize([obs], TASK_FEATURESETS[task], bundle.feature_config)
    tm = bundle.model(task)
    if tuple(names) != tm.feature_names:
        raise ValueError(f"feature names drifted for task {task!r}")
    return float(tm.predict(x)[0])


def _predict_at(bundle: ModelBundle, task: str, obs: ChannelObservation) -> float:
    """Run a regressor on an explicitly chosen observation (nearest PLM)."""
    names, x = featurize([obs], TASK_FEATURESETS[task], bundle.feature_config)
    tm = bundle.model(task)
    if tuple(names) != tm.feature_names:
        raise ValueError(f"feature names drifted for task {task!r}")
    return float(tm.predict(x)[0])


def _clamp(value: float, lo: float, hi: float, label: str,
           log: list) -> float:
    if value < lo or value > hi:
        log.append(f"{label} prediction {value:.4g} clamped to [{lo:g}, {hi:g}]")
        return min(max(value, lo), hi)
    return value


def diagnose(observations, bundle: ModelBundle) -> DiagnosisReport:
    """Cooperative multi-stage diagnosis of one network state."""
    log: list[str] = []
    votes = {}
    for plm in PLM_IDS:
        task = f"ld_identify_p{plm}"
        votes[plm] = _predict(bundle, task, observations) > 0
    log.append("stage 1 votes: " + ", ".join(
        f"PLM{p}:{'LD' if v else 'clear'}" for p, v in sorted(votes.items())))

    asserting = [p for p, v in sorted(votes.items()) if v]
    if not asserting:
        gamma = _predict(bundle, "gamma_homo", observations)
        gamma = _clamp(gamma, 0.0, GAMMA_HOMO_MAX, "gamma_homo", log)
        cable, material = bundle.config.cable, bundle.config.material
        t_eq = float(equivalent_age(gamma * cable.r_insul, max_field(cable),
                                    material))
        log.append("homogeneous path: age from severity at nominal parameters")
        return DiagnosisReport(profile_type="homogeneous", votes=votes,
                               gamma_homo=gamma, t_eq_s=t_eq,
                               provenance=tuple(log))

    if len(asserting) > 1:
        raise AmbiguousVotesError(votes)

    suspect = asserting[0]
    side = _predict(bundle, f"branch_locate_p{suspect}", observations)
    branch = f"p{suspect}_bp" if side > 0 else f"p{suspect}_be"
    log.append(f"stage 2: PLM{observer_pair(f'branch_locate_p{suspect}')[0]} "
               f"resolves the LD to {branch}")

    # severity/geometry at the nearest PLM: the voter itself.  The
    # regressors are trained on PLM 1's view of its BP run; by the
    # topology's symmetry the same model serves the voter's channel.
    rx = min(p for p in PLM_IDS if p != suspect)
    near_obs = _pick_observation(observations, suspect, rx, "regressions")
    if near_obs.grid != bundle.grid:
        raise ValueError("observation grid differs from the bundle's grid")
    cfg = bundle.config
    gamma_local = _clamp(_predict_at(bundle, "gamma_local", near_obs),
                         *cfg.gamma_local_range, "gamma_local", log)
    branch_len = cfg.branch_lengths.get(branch) or 500.0
    target = _clamp(_predict_at(bundle, "target", near_obs),
                    0.0, branch_len, "target", log)
    product_lo = cfg.lwt_range[0] * cfg.gamma_local_range[0]
    product_hi = cfg.lwt_range[1] * cfg.gamma_local_range[1]
    product = _clamp(_predict_at(bundle, "product", near_obs),
                     product_lo, product_hi, "product", log)
    lwt = product / gamma_local
    log.append(f"length from product workaround: {product:.2f} / "
               f"{gamma_local:.4f} = {lwt:.1f} m")
    return DiagnosisReport(profile_type="localized", votes=votes,
                           branch=branch, gamma_local=gamma_local,
                           target_m=target, lwt_m=lwt, product=product,
                           provenance=tuple(log))


# --- training-size sweep and robustness ----------------------------------

@dataclass(frozen=True)
class SweepRow:
    n_tr: int
    metrics: dict


@dataclass(frozen=True)
class SweepResult:
    task: str
    rows: tuple[SweepRow, ...]
    metric_name: str
    saturation_n: int | None

    def to_json_line(self) -> str:
        return json.dumps(
            {"task": self.task, "metric": self.metric_name,
             "saturation_n": self.saturation_n,
             "rows": [{"n_tr": r.n_tr, **r.metrics} for r in self.rows]},
            sort_keys=True, separators=(",", ":"))


TEST_SEED_OFFSET = 7919     # keeps evaluation draws disjoint from training


def _metrics_dict(m) -> dict:
    return {k: float(v) for k, v in vars(m).items()}


def ntr_sweep(cfg: ScenarioConfig, task: str, n_grid, n_te: int,
              fc: FeatureConfig | None = None, delta: float = 0.02,
              algorithm: str | None = None) -> SweepResult:
    """Metric vs training-set size on one fixed test set.

    Training sets are nested prefixes of a single sample stream (samples
    are i.i.d. by index, so every prefix is a valid draw); the test set
    comes from a seed-offset stream so it never overlaps.  Saturation is
    the first grid point whose metric is within ``delta`` of the final
    grid point's metric."""
    from .scenario import generate_dataset   # local import to avoid cycle

    if task not in TASK_IDS:
        raise ValueError(f"unknown task {task!r}")
    n_grid = sorted(set(int(n) for n in n_grid))
    if not n_grid or n_grid[0] <= 0:
        raise ValueError("n_grid must hold positive sizes")
    fc = fc or FeatureConfig()
    full = generate_dataset(cfg, n_grid[-1], task)
    test_cfg = replace(cfg, seed=cfg.seed + TEST_SEED_OFFSET)
    test = generate_dataset(test_cfg, n_te, task)
    _, x_te, y_te = dataset_features(test, fc)

    classification = task in CLASSIFICATION_TASKS
    metric_name = "detection_rate" if classification else "r2"
    rows = []
    for n in n_grid:
        sub = Dataset(task=task, config=cfg, grid=full.grid,
                      samples=full.samples[:n])
        tm = train_task_model(sub, fc, algorithm)
        pred = tm.predict(x_te)
        from .learning import classification_metrics, regression_metrics
        m = (classification_metrics(y_te, pred) if classification
             else regression_metrics(y_te, pred))
        rows.append(SweepRow(n_tr=n, metrics=_metrics_dict(m)))

    final = rows[-1].metrics[metric_name]
    saturation = None
    for row in rows:
        if abs(row.metrics[metric_name] - final) <= delta:
            saturation = row.n_tr
            break
    return SweepResult(task=task, rows=tuple(rows), metric_name=metric_name,
                       saturation_n=saturation)


def _with_channel_noise(ds: Dataset, level: float) -> Dataset:
    """Additive complex white error on every stored response, scaled to
    ``level`` times that response's RMS -- an imperfect-channel-estimate
    stand-in.  Drawn from a stream disjoint from the scenario draws."""
    def noisy(h, rng):
        scale = level * np.sqrt(np.mean(np.abs(h) ** 2) / 2.0)
        return h + scale * (rng.standard_normal(h.shape)
                            + 1j * rng.standard_normal(h.shape))

    samples = []
    for i, s in enumerate(ds.samples):
        rng = ds.config.rng_for("channel_noise", i)
        obs = tuple(replace(o, h_f=noisy(o.h_f, rng), h_ref=noisy(o.h_ref, rng))
                    for o in s.observations)
        samples.append(replace(s, observations=obs))
    return replace(ds, samples=tuple(samples))


def robustness_eval(bundle: ModelBundle, tasks=None, n_te: int = 200,
                    magnitude_range: tuple[float, float] = (1.0, 1.0),
                    loss_tangent_range: tuple[float, float] = (1.0, 1.0),
                    channel_noise: float = 0.0) -> dict:
    """Evaluate nominal-trained models on test sets whose water-tree
    permittivity is perturbed at synthesis time (labels untouched);
    ``channel_noise`` optionally corrupts the test responses themselves."""
    from .scenario import generate_dataset

    if channel_noise < 0:
        raise ValueError("channel_noise must be non-negative")
    tasks = list(tasks or TASK_IDS)
    test_cfg = replace(bundle.config, seed=bundle.config.seed + TEST_SEED_OFFSET,
                       wt_magnitude_range=tuple(magnitude_range),
                       wt_loss_tangent_range=tuple(loss_tangent_range))
    out = {}
    for task in tasks:
        ds = generate_dataset(test_cfg, n_te, task)
        if channel_noise > 0.0:
            ds = _with_channel_noise(ds, channel_noise)
        _, x, y = dataset_features(ds, bundle.feature_config)
        tm = bundle.model(task)
        pred = tm.predict(x)
        from .learning import classification_metrics, regression_metrics
        m = (classification_metrics(y, pred) if task in CLASSIFICATION_TASKS
             else regression_metrics(y, pred))
        out[task] = _metrics_dict(m)
    return out


# --- bundle persistence ---------------------------------------------------

def save_bundle(bundle: ModelBundle, directory: str | Path) -> None:
    """Directory of one model file per task plus a manifest."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {
        "format": BUNDLE_FORMAT, "version": BUNDLE_VERSION,
        "grid": {"f_start": bundle.grid.f_start,
                 "delta_f": bundle.grid.delta_f, "count": bundle.grid.count},
        "config": bundle.config.as_dict(),
        "feature_config": {
            "chirp": {"f_low": bundle.feature_config.chirp.f_low,
                      "f_high": bundle.feature_config.chirp.f_high,
                      "duration": bundle.feature_config.chirp.duration,
                      "gaussian_sigma": bundle.feature_config.chirp.gaussian_sigma,
                      "sample_rate": bundle.feature_config.chirp.sample_rate},
            "rel_threshold": bundle.feature_config.rel_threshold,
            "min_separation": bundle.feature_config.min_separation,
            "top_k": bundle.feature_config.top_k,
            "n_fft": bundle.feature_config.n_fft,
            "l0_m": bundle.feature_config.l0_m,
            "eps_nominal": bundle.feature_config.eps_nominal,
        },
        "models": {task: f"{task}.model.json" for task in sorted(bundle.models)},
    }
    for task, tm in bundle.models.items():
        save_model(tm, directory / manifest["models"][task])
    (directory / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="ascii")


def load_bundle(directory: str | Path) -> ModelBundle:
    directory = Path(directory)
    doc = json.loads((directory / "manifest.json").read_text(encoding="ascii"))
    if doc.get("format") != BUNDLE_FORMAT:
        raise ValueError(f"{directory}: not a {BUNDLE_FORMAT} directory")
    if doc.get("version") != BUNDLE_VERSION:
        raise ValueError(f"{directory}: unsupported bundle version")
    grid = FrequencyGrid(**doc["grid"])
    cfg = ScenarioConfig.from_dict(doc["config"])
    fc_doc = dict(doc["feature_config"])
    chirp = ChirpParams(**fc_doc.pop("chirp"))
    fc = FeatureConfig(chirp=chirp, **fc_doc)
    models = {task: load_model(directory / fname)
              for task, fname in doc["models"].items()}
    return ModelBundle(models=models, config=cfg, grid=grid, feature_config=fc)


def bundle_fingerprint(bundle: ModelBundle) -> str:
    """Stable digest over every model's serialized form (determinism checks)."""
    from hashlib import blake2b
    h = blake2b(digest_size=16)
    for task in sorted(bundle.models):
        h.update(task.encode())
        h.update(model_to_json(bundle.models[task]).encode())
    return h.hexdigest()
