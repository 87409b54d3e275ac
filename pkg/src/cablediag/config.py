"""Run configuration: flat INI file + dotted-key overrides.

One file drives every CLI command.  Sections are fixed, keys are typed by
their defaults, and anything unknown is rejected by name so a typo never
silently falls back to a default.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

from .scenario import ScenarioConfig


class ConfigError(ValueError):
    """Bad config file or override: message names the offending field."""


# section -> key -> default (the default's type drives parsing)
DEFAULTS: dict[str, dict[str, object]] = {
    "run": {
        "seed": 0,
        "out": "out",
        "jobs": 1,
    },
    "scenario": {
        "gamma_homo_lo": 0.0, "gamma_homo_hi": 0.05,
        "gamma_local_lo": 0.1, "gamma_local_hi": 1.0,
        "lwt_lo": 100.0, "lwt_hi": 300.0,
        "center_offset_lo": -100.0, "center_offset_hi": 100.0,
        "load_real_lo": 0.0, "load_real_hi": 50.0,
        "load_imag_lo": -50.0, "load_imag_hi": 50.0,
        "ld_probability": 0.5,
        "balance": True,
        "wt_magnitude_lo": 1.0, "wt_magnitude_hi": 1.0,
        "wt_loss_tangent_lo": 1.0, "wt_loss_tangent_hi": 1.0,
        "z_plm": 50.0,
        "p1_bp_m": 500.0, "p2_bp_m": 500.0, "p3_bp_m": 500.0,
        "p1_be_m": 500.0, "p2_be_m": 500.0, "p3_be_m": 500.0,
    },
    "learning": {
        "stage1_algorithm": "adaboost",   # or "svc" (RBF kernel)
    },
    "generate": {
        "n_train": 2000,
        "n_test": 1000,
    },
    "sweep": {
        "grid": "200,500,1000,2000",
        "n_test": 500,
        "delta": 0.02,
    },
    "reproduce": {
        "n_train": 1000,
        "n_test": 500,
    },
}

STAGE1_ALGORITHMS = ("adaboost", "svc")


@dataclass(frozen=True)
class RunConfig:
    """Validated parameter tree shared by all commands."""

    scenario: ScenarioConfig
    stage1_algorithm: str
    n_train: int
    n_test: int
    sweep_grid: tuple[int, ...]
    sweep_n_test: int
    sweep_delta: float
    repro_n_train: int
    repro_n_test: int
    out: str
    jobs: int


def _parse_value(section: str, key: str, raw: str, default) -> object:
    where = f"{section}.{key}"
    raw = raw.strip()
    if isinstance(default, bool):
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{where}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected an integer, got {raw!r}") from None
    if isinstance(default, float):
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{where}: expected a number, got {raw!r}") from None
    return raw


def read_config_file(path: str | Path) -> dict[str, dict[str, object]]:
    """Parse an INI file into typed values, rejecting unknown names."""
    parser = configparser.ConfigParser()
    path = Path(path)
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    tree: dict[str, dict[str, object]] = {}
    for section in parser.sections():
        if section not in DEFAULTS:
            raise ConfigError(f"{path}: unknown section [{section}]")
        tree[section] = {}
        for key, raw in parser.items(section):
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{path}: unknown key {section}.{key}")
            tree[section][key] = _parse_value(section, key, raw,
                                              DEFAULTS[section][key])
    return tree


def apply_overrides(tree: dict[str, dict[str, object]],
                    pairs) -> dict[str, dict[str, object]]:
    """Apply (dotted-key, value) pairs like ("scenario.z_plm", "75")."""
    for key, raw in pairs:
        if key.count(".") != 1:
            raise ConfigError(f"override {key!r}: expected section.key")
        section, name = key.split(".")
        if section not in DEFAULTS or name not in DEFAULTS[section]:
            raise ConfigError(f"override {key!r}: unknown field")
        tree.setdefault(section, {})[name] = _parse_value(
            section, name, str(raw), DEFAULTS[section][name])
    return tree


def _merged(tree: dict[str, dict[str, object]]) -> dict[str, dict[str, object]]:
    out = {s: dict(keys) for s, keys in DEFAULTS.items()}
    for section, keys in tree.items():
        out[section].update(keys)
    return out


def _parse_grid(raw: str) -> tuple[int, ...]:
    parts = [p.strip() for p in str(raw).split(",") if p.strip()]
    if not parts:
        raise ConfigError("sweep.grid: at least one training size required")
    try:
        grid = tuple(int(p) for p in parts)
    except ValueError:
        raise ConfigError(f"sweep.grid: expected comma-separated integers, "
                          f"got {raw!r}") from None
    if any(n <= 0 for n in grid):
        raise ConfigError("sweep.grid: sizes must be positive")
    return grid


def build_config(tree: dict[str, dict[str, object]] | None = None) -> RunConfig:
    """RunConfig from a (possibly partial) parsed tree; defaults fill gaps."""
    v = _merged(tree or {})
    s = v["scenario"]
    try:
        scenario = ScenarioConfig(
            seed=int(v["run"]["seed"]),
            gamma_homo_range=(s["gamma_homo_lo"], s["gamma_homo_hi"]),
            gamma_local_range=(s["gamma_local_lo"], s["gamma_local_hi"]),
            lwt_range=(s["lwt_lo"], s["lwt_hi"]),
            center_offset_range=(s["center_offset_lo"], s["center_offset_hi"]),
            load_real_range=(s["load_real_lo"], s["load_real_hi"]),
            load_imag_range=(s["load_imag_lo"], s["load_imag_hi"]),
            ld_probability=s["ld_probability"],
            balance=s["balance"],
            wt_magnitude_range=(s["wt_magnitude_lo"], s["wt_magnitude_hi"]),
            wt_loss_tangent_range=(s["wt_loss_tangent_lo"],
                                   s["wt_loss_tangent_hi"]),
            z_plm=s["z_plm"],
            branch_lengths={
                "p1_bp": s["p1_bp_m"], "p2_bp": s["p2_bp_m"],
                "p3_bp": s["p3_bp_m"], "p1_be": s["p1_be_m"],
                "p2_be": s["p2_be_m"], "p3_be": s["p3_be_m"],
            },
        )
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None
    algo = str(v["learning"]["stage1_algorithm"]).lower()
    if algo not in STAGE1_ALGORITHMS:
        raise ConfigError(
            f"learning.stage1_algorithm: {algo!r} not one of "
            f"{', '.join(STAGE1_ALGORITHMS)}")
    for key in ("n_train", "n_test"):
        if v["generate"][key] <= 0:
            raise ConfigError(f"generate.{key}: must be positive")
        if v["reproduce"][key] <= 0:
            raise ConfigError(f"reproduce.{key}: must be positive")
    if v["sweep"]["n_test"] <= 0:
        raise ConfigError("sweep.n_test: must be positive")
    if not 0 < v["sweep"]["delta"] < 1:
        raise ConfigError("sweep.delta: must lie in (0, 1)")
    if v["run"]["jobs"] < 1:
        raise ConfigError("run.jobs: must be >= 1")
    return RunConfig(
        scenario=scenario,
        stage1_algorithm=algo,
        n_train=int(v["generate"]["n_train"]),
        n_test=int(v["generate"]["n_test"]),
        sweep_grid=_parse_grid(v["sweep"]["grid"]),
        sweep_n_test=int(v["sweep"]["n_test"]),
        sweep_delta=float(v["sweep"]["delta"]),
        repro_n_train=int(v["reproduce"]["n_train"]),
        repro_n_test=int(v["reproduce"]["n_test"]),
        out=str(v["run"]["out"]),
        jobs=int(v["run"]["jobs"]),
    )


def load_config(path: str | Path | None = None, overrides=()) -> RunConfig:
    """File (optional) + overrides -> validated RunConfig."""
    tree = read_config_file(path) if path else {}
    apply_overrides(tree, overrides)
    return build_config(tree)
