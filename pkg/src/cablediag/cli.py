"""Batch front-end: dataset generation, training, diagnosis, figure
reproduction, and training-size sweeps.

Every command is driven by one INI config (see ``config.DEFAULTS``) plus
``--section.key value`` overrides appended after the command's own
options.  Outputs are CSV/JSONL under --out; exit codes: 0 success,
1 validation error, 2 runtime error.
"""

from __future__ import annotations

import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from hashlib import blake2b
from pathlib import Path

import click
import numpy as np

from .config import DEFAULTS, ConfigError, RunConfig, load_config
from .dielectric import YEAR_SECONDS, equivalent_age, max_field
from .learning import FeatureConfig, featurize, train_model
from .netmodel import FrequencyGrid, impulse_response, solve_network
from .pipeline import (
    TEST_SEED_OFFSET,
    dataset_features,
    diagnose,
    load_bundle,
    ntr_sweep,
    observe_network,
    save_bundle,
    train_pipeline,
)
from .reflectometry import run_jtfdr, tdr_trace
from .scenario import (
    TASK_IDS,
    Dataset,
    ScenarioConfig,
    generate_dataset,
    load_dataset,
    load_scenarios,
    reference_ld_scenario,
    sample_scenario,
    save_dataset,
)

DATASETS_MANIFEST_FORMAT = "cablediag-datasets"


def _parse_override_args(args) -> list[tuple[str, str]]:
    """('--scenario.z_plm', '75', ...) -> [('scenario.z_plm', '75'), ...]."""
    pairs = []
    args = list(args)
    i = 0
    while i < len(args):
        tok = args[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r} "
                              "(overrides look like --section.key value)")
        if i + 1 >= len(args):
            raise ConfigError(f"override {tok!r} is missing its value")
        pairs.append((tok[2:], args[i + 1]))
        i += 2
    return pairs


def _runconfig(ctx, overrides) -> RunConfig:
    base = list(ctx.obj["overrides"])
    base.extend(_parse_override_args(overrides))
    return load_config(ctx.obj["config_path"], base)


def _outdir(rc: RunConfig) -> Path:
    out = Path(rc.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)
    return path


def _file_digest(path: Path) -> str:
    return blake2b(path.read_bytes(), digest_size=8).hexdigest()


def _test_config(cfg: ScenarioConfig) -> ScenarioConfig:
    # evaluation stream never overlaps the training stream
    return replace(cfg, seed=cfg.seed + TEST_SEED_OFFSET)


@click.group(context_settings={"auto_envvar_prefix": "CABLEDIAG"},
             epilog="Options can also come from CABLEDIAG_* environment "
                    "variables (e.g. CABLEDIAG_SEED).  Any --section.key "
                    "value pair after a command overrides the config file.")
@click.option("--config", "config_path", type=click.Path(exists=True),
              default=None, help="INI config file.")
@click.option("--seed", type=int, default=None, help="Master seed.")
@click.option("--out", type=click.Path(), default=None,
              help="Output directory.")
@click.option("--jobs", type=int, default=None,
              help="Worker processes for generation.")
@click.pass_context
def cli(ctx, config_path, seed, out, jobs):
    """Cable-degradation diagnostics workbench."""
    ctx.ensure_object(dict)
    overrides = []
    if seed is not None:
        overrides.append(("run.seed", str(seed)))
    if out is not None:
        overrides.append(("run.out", str(out)))
    if jobs is not None:
        overrides.append(("run.jobs", str(jobs)))
    ctx.obj["config_path"] = config_path
    ctx.obj["overrides"] = overrides


# --- generate --------------------------------------------------------------

def _generate_job(job):
    cfg, n, task, dest = job
    ds = generate_dataset(cfg, n, task)
    save_dataset(ds, dest)
    return dest


@cli.command(context_settings={"ignore_unknown_options": True})
@click.option("--task", default="all", show_default=True,
              help="Task id or 'all'.")
@click.option("--n-train", type=int, default=None,
              help="Training samples per task (default from config).")
@click.option("--n-test", type=int, default=None,
              help="Test samples per task (default from config).")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_context
def generate(ctx, task, n_train, n_test, overrides):
    """Write train/test datasets plus a checksum manifest."""
    rc = _runconfig(ctx, overrides)
    tasks = list(TASK_IDS) if task == "all" else [task]
    for t in tasks:
        if t not in TASK_IDS:
            raise ConfigError(f"unknown task {t!r}; tasks: {', '.join(TASK_IDS)}")
    n_tr = n_train if n_train is not None else rc.n_train
    n_te = n_test if n_test is not None else rc.n_test
    if n_tr <= 0 or n_te <= 0:
        raise ConfigError("sample counts must be positive")
    out = _outdir(rc)
    test_cfg = _test_config(rc.scenario)
    jobs = [(rc.scenario, n_tr, t, out / f"{t}.train.jsonl") for t in tasks]
    jobs += [(test_cfg, n_te, t, out / f"{t}.test.jsonl") for t in tasks]
    if rc.jobs > 1:
        with ProcessPoolExecutor(max_workers=rc.jobs) as pool:
            list(pool.map(_generate_job, jobs))
    else:
        for job in jobs:
            _generate_job(job)
    files = {}
    for _, n, t, dest in jobs:
        files[dest.name] = {"task": t, "n": n, "checksum": _file_digest(dest)}
    manifest = {"format": DATASETS_MANIFEST_FORMAT, "version": 1,
                "config": rc.scenario.as_dict(),
                "test_seed_offset": TEST_SEED_OFFSET,
                "files": dict(sorted(files.items()))}
    (out / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, separators=(",", ":")) + "\n",
        encoding="ascii")
    click.echo(f"wrote {len(files)} dataset files + manifest.json to {out}")


# --- train -----------------------------------------------------------------

@cli.command(context_settings={"ignore_unknown_options": True})
@click.option("--data", "data_dir", type=click.Path(exists=True), default=None,
              help="Directory holding <task>.train.jsonl (default: --out).")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_context
def train(ctx, data_dir, overrides):
    """Train the full model bundle from generated datasets."""
    rc = _runconfig(ctx, overrides)
    out = _outdir(rc)
    data = Path(data_dir) if data_dir else out
    datasets = {}
    for t in TASK_IDS:
        path = data / f"{t}.train.jsonl"
        if not path.exists():
            raise ConfigError(f"missing dataset {path}")
        datasets[t] = load_dataset(path)
    algorithms = {f"ld_identify_p{i}": rc.stage1_algorithm for i in (1, 2, 3)}
    bundle = train_pipeline(datasets, algorithms=algorithms)
    save_bundle(bundle, out / "bundle")
    rows = []
    for t in TASK_IDS:
        meta = bundle.model(t).metadata
        for metric, value in sorted(meta["holdout"].items()):
            rows.append((t, meta["algorithm"], meta["n_train"], metric,
                         "" if value is None else f"{value:.6g}"))
    _write_csv(out / "metrics.csv",
               ("task", "algorithm", "n_train", "metric", "value"), rows)
    (out / "metrics.json").write_text(json.dumps(
        {t: bundle.model(t).metadata for t in TASK_IDS},
        sort_keys=True, indent=1) + "\n", encoding="ascii")
    click.echo(f"bundle -> {out / 'bundle'}")
    click.echo(f"holdout metrics -> {out / 'metrics.csv'}")


# --- diagnose ----------------------------------------------------------------

@cli.command("diagnose", context_settings={"ignore_unknown_options": True})
@click.option("--bundle", "bundle_dir", type=click.Path(exists=True),
              default=None, help="Model bundle directory (default: out/bundle).")
@click.option("--scenario-file", type=click.Path(exists=True), default=None,
              help="JSONL of scenario documents to diagnose.")
@click.option("--random", "n_random", type=int, default=0,
              help="Diagnose N scenarios drawn from the config distribution.")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_context
def diagnose_cmd(ctx, bundle_dir, scenario_file, n_random, overrides):
    """Run the multi-stage diagnosis; writes text and JSONL reports."""
    rc = _runconfig(ctx, overrides)
    out = _outdir(rc)
    bdir = Path(bundle_dir) if bundle_dir else out / "bundle"
    if not bdir.exists():
        raise ConfigError(f"missing bundle directory {bdir}")
    bundle = load_bundle(bdir)
    if scenario_file:
        scenarios = load_scenarios(scenario_file, bundle.config)
    else:
        cfg = replace(bundle.config, seed=rc.scenario.seed)
        scenarios = tuple(sample_scenario(cfg, i, task="diagnose")
                          for i in range(max(1, n_random)))
    texts, lines = [], []
    for i, scn in enumerate(scenarios):
        report = diagnose(observe_network(scn, bundle.grid), bundle)
        texts.append(f"# scenario {i}\n{report.to_text()}")
        lines.append(report.to_json_line())
    (out / "reports.txt").write_text("\n\n".join(texts) + "\n", encoding="utf-8")
    (out / "reports.jsonl").write_text("\n".join(lines) + "\n", encoding="ascii")
    click.echo("\n\n".join(texts))
    click.echo(f"\nreports -> {out / 'reports.jsonl'}")


# --- reproduce ---------------------------------------------------------------

GAMMA_BINS = np.linspace(0.1, 1.0, 6)


def _train_and_score(train_ds: Dataset, test_ds: Dataset, featureset: str,
                     algorithm: str, fc: FeatureConfig):
    """Train one (featureset, algorithm) combo; return test scores/labels."""
    names, x_tr = featurize((s.observations[0] for s in train_ds.samples),
                            featureset, fc)
    from .scenario import task_label
    y_tr = np.array([task_label(train_ds.task, s) for s in train_ds.samples])
    _, x_te = featurize((s.observations[0] for s in test_ds.samples),
                        featureset, fc)
    y_te = np.array([task_label(test_ds.task, s) for s in test_ds.samples])
    tm = train_model(train_ds.task, x_tr, y_tr, names, algorithm)
    return tm.decision(x_te), y_te


def _binned_rates(test_ds: Dataset, scores: np.ndarray, y: np.ndarray):
    """Per-gamma_local-bin detection on positives; one global FA rate."""
    gammas = np.array([s.labels["gamma_local"] or np.nan
                       for s in test_ds.samples])
    fa = float(np.mean(scores[y < 0] > 0)) if np.any(y < 0) else float("nan")
    rows = []
    for lo, hi in zip(GAMMA_BINS[:-1], GAMMA_BINS[1:]):
        mask = (y > 0) & (gammas >= lo) & (gammas < hi + 1e-12)
        det = float(np.mean(scores[mask] > 0)) if np.any(mask) else float("nan")
        rows.append((lo, hi, int(mask.sum()), det, fa))
    return rows


def _classifier_comparison(rc: RunConfig, out: Path, task: str, combos,
                           fname: str) -> list[Path]:
    train_ds = generate_dataset(rc.scenario, rc.repro_n_train, task)
    test_ds = generate_dataset(_test_config(rc.scenario), rc.repro_n_test, task)
    fc = FeatureConfig()
    rows = []
    for featureset, algorithm in combos:
        scores, y = _train_and_score(train_ds, test_ds, featureset,
                                     algorithm, fc)
        for lo, hi, n_pos, det, fa in _binned_rates(test_ds, scores, y):
            rows.append((featureset, algorithm, f"{lo:.2f}", f"{hi:.2f}",
                         n_pos, f"{det:.4f}", f"{fa:.4f}"))
    return [_write_csv(out / fname,
                       ("featureset", "algorithm", "gamma_lo", "gamma_hi",
                        "n_pos", "detection_rate", "false_alarm_rate"), rows)]


def _fig5(rc: RunConfig, out: Path) -> list[Path]:
    """h_JTFDR and -|h_ref| traces for the worked LD example."""
    scn = reference_ld_scenario(rc.scenario)
    grid = FrequencyGrid.plc_band()
    obs = solve_network(scn, 1, 2, grid)
    fc = FeatureConfig()
    h, dt = impulse_response(obs.h_ref, grid, fc.n_fft)
    trace = run_jtfdr(h, dt, fc.chirp, fc.rel_threshold, fc.min_separation)
    raw_trace = tdr_trace(h, dt, fc.rel_threshold, fc.min_separation)
    # each trace normalized to its own first (origin) lobe
    jt = trace.samples / trace.peaks[0].magnitude
    raw = raw_trace.samples / raw_trace.peaks[0].magnitude
    n_show = 700
    rows = [(i, f"{i * dt:.3e}", f"{jt[i]:.6f}", f"{-raw[i]:.6f}")
            for i in range(min(n_show, len(jt)))]
    return [_write_csv(out / "fig5.csv",
                       ("sample", "time_s", "h_jtfdr_norm", "minus_abs_href_norm"),
                       rows)]


def _fig7(rc: RunConfig, out: Path) -> list[Path]:
    """Cooperative LD identification: JTFDR vs raw-reflection features."""
    combos = [("jtfdr_peaks", "adaboost"), ("jtfdr_peaks", "svc"),
              ("href_peaks", "adaboost"), ("href_peaks", "svc")]
    return _classifier_comparison(rc, out, "ld_identify_p1", combos, "fig7.csv")


def _fig9(rc: RunConfig, out: Path) -> list[Path]:
    """Branch location: stage-1 features vs the extended far-window set."""
    combos = [("jtfdr_peaks", "adaboost"), ("jtfdr_far", "adaboost")]
    return _classifier_comparison(rc, out, "branch_locate_p1", combos, "fig9.csv")


def _scatter_csv(out: Path, fname: str, header, true_vals, pred_vals,
                 extra_cols=()) -> Path:
    rows = []
    for i in range(len(true_vals)):
        row = [f"{true_vals[i]:.6g}", f"{pred_vals[i]:.6g}"]
        row.extend(f"{col[i]:.6g}" for col in extra_cols)
        rows.append(row)
    return _write_csv(out / fname, header, rows)


def _train_regressor(rc: RunConfig, task: str, test_cfg: ScenarioConfig | None = None):
    """(trained model, test features, test labels, test dataset)."""
    fc = FeatureConfig()
    train_ds = generate_dataset(rc.scenario, rc.repro_n_train, task)
    cfg_te = test_cfg if test_cfg is not None else _test_config(rc.scenario)
    test_ds = generate_dataset(cfg_te, rc.repro_n_test, task)
    names, x_tr, y_tr = dataset_features(train_ds, fc)
    from .pipeline import TASK_ALGORITHMS, TASK_PARAMS
    tm = train_model(task, x_tr, y_tr, names, TASK_ALGORITHMS[task],
                     **TASK_PARAMS.get(task, {}))
    _, x_te, y_te = dataset_features(test_ds, fc)
    return tm, x_te, y_te, test_ds


def _t_eq_years(rc: RunConfig, gammas: np.ndarray) -> np.ndarray:
    cable, material = rc.scenario.cable, rc.scenario.material
    g = np.clip(gammas, 0.0, None)
    return equivalent_age(g * cable.r_insul, max_field(cable),
                          material) / YEAR_SECONDS


def _fig8(rc: RunConfig, out: Path) -> list[Path]:
    """Severity: (a) homogeneous equivalent age, (b) LD gamma_local."""
    tm, x_te, y_te, _ = _train_regressor(rc, "gamma_homo")
    pred = tm.predict(x_te)
    a = _scatter_csv(out, "fig8a.csv", ("true_t_eq_years", "pred_t_eq_years"),
                     _t_eq_years(rc, y_te), _t_eq_years(rc, pred))
    tm, x_te, y_te, _ = _train_regressor(rc, "gamma_local")
    b = _scatter_csv(out, "fig8b.csv", ("true_gamma_local", "pred_gamma_local"),
                     y_te, tm.predict(x_te))
    return [a, b]


def _fig10(rc: RunConfig, out: Path) -> list[Path]:
    """LD location: (a) target point, (b) length-severity product."""
    tm, x_te, y_te, _ = _train_regressor(rc, "target")
    a = _scatter_csv(out, "fig10a.csv", ("true_target_m", "pred_target_m"),
                     y_te, tm.predict(x_te))
    tm, x_te, y_te, _ = _train_regressor(rc, "product")
    b = _scatter_csv(out, "fig10b.csv", ("true_product", "pred_product"),
                     y_te, tm.predict(x_te))
    return [a, b]


def _fig11(rc: RunConfig, out: Path) -> list[Path]:
    """Degradation length from the product workaround."""
    tm_p, x_te, _, test_ds = _train_regressor(rc, "product")
    tm_g, _, _, _ = _train_regressor(rc, "gamma_local")
    # both tasks read the same featureset, so the test features carry over
    if tm_g.feature_names != tm_p.feature_names:
        raise RuntimeError("gamma_local/product featuresets drifted apart")
    g_lo, g_hi = rc.scenario.gamma_local_range
    pred_gamma = np.clip(tm_g.predict(x_te), g_lo, g_hi)
    pred_prod = tm_p.predict(x_te)
    true_lwt = np.array([s.labels["lwt_m"] for s in test_ds.samples])
    true_gamma = np.array([s.labels["gamma_local"] for s in test_ds.samples])
    pred_lwt = pred_prod / pred_gamma
    path = _write_csv(out / "fig11.csv",
                      ("true_lwt_m", "pred_lwt_m", "true_gamma_local",
                       "pred_gamma_local", "pred_product"),
                      [(f"{a:.6g}", f"{b:.6g}", f"{c:.6g}", f"{d:.6g}",
                        f"{e:.6g}")
                       for a, b, c, d, e in zip(true_lwt, pred_lwt, true_gamma,
                                                pred_gamma, pred_prod)])
    return [path]


def _fig12(rc: RunConfig, out: Path) -> list[Path]:
    """Robustness: nominal-trained models on perturbed-permittivity tests."""
    perturbed = replace(_test_config(rc.scenario),
                        wt_loss_tangent_range=(0.8, 1.2))
    tm, x_te, y_te, _ = _train_regressor(rc, "gamma_homo", test_cfg=perturbed)
    a = _scatter_csv(out, "fig12a.csv", ("true_t_eq_years", "pred_t_eq_years"),
                     _t_eq_years(rc, y_te), _t_eq_years(rc, tm.predict(x_te)))
    tm, x_te, y_te, _ = _train_regressor(rc, "target", test_cfg=perturbed)
    b = _scatter_csv(out, "fig12b.csv", ("true_target_m", "pred_target_m"),
                     y_te, tm.predict(x_te))
    return [a, b]


def _sweep_csv(rc: RunConfig, out: Path, task: str, fname: str) -> list[Path]:
    res = ntr_sweep(rc.scenario, task, rc.sweep_grid, rc.sweep_n_test,
                    delta=rc.sweep_delta)
    metric_names = sorted(res.rows[0].metrics)
    rows = []
    for row in res.rows:
        rows.append([row.n_tr] + [f"{row.metrics[m]:.6g}" for m in metric_names]
                    + [res.saturation_n, row.n_tr == res.saturation_n])
    return [_write_csv(out / fname,
                       ["n_tr", *metric_names, "saturation_n",
                        "is_saturation_point"], rows)]


def _fig15(rc, out):
    return _sweep_csv(rc, out, "ld_identify_p1", "fig15.csv")


def _fig16(rc, out):
    return _sweep_csv(rc, out, "gamma_homo", "fig16.csv")


def _fig17(rc, out):
    return _sweep_csv(rc, out, "gamma_local", "fig17.csv")


FIGURES = {
    "fig5": _fig5, "fig7": _fig7, "fig8": _fig8, "fig9": _fig9,
    "fig10": _fig10, "fig11": _fig11, "fig12": _fig12,
    "fig15": _fig15, "fig16": _fig16, "fig17": _fig17,
}


@cli.command(context_settings={"ignore_unknown_options": True})
@click.argument("figure_id")
@click.option("--n-train", type=int, default=None,
              help="Override reproduce.n_train.")
@click.option("--n-test", type=int, default=None,
              help="Override reproduce.n_test.")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_context
def reproduce(ctx, figure_id, n_train, n_test, overrides):
    """Regenerate a desk-scale analog of one result figure as CSV."""
    extra = list(overrides)
    if n_train is not None:
        extra += ["--reproduce.n_train", str(n_train)]
    if n_test is not None:
        extra += ["--reproduce.n_test", str(n_test)]
    rc = _runconfig(ctx, tuple(extra))
    fn = FIGURES.get(figure_id)
    if fn is None:
        raise ConfigError(f"unknown figure id {figure_id!r}; "
                          f"valid ids: {', '.join(sorted(FIGURES, key=lambda s: (len(s), s)))}")
    out = _outdir(rc)
    for path in fn(rc, out):
        click.echo(f"wrote {path}")


# --- sweep -------------------------------------------------------------------

@cli.command(context_settings={"ignore_unknown_options": True})
@click.option("--task", required=True, help="Task id to sweep.")
@click.option("--grid", default=None,
              help="Comma-separated training sizes (default from config).")
@click.option("--n-test", type=int, default=None)
@click.option("--delta", type=float, default=None,
              help="Saturation tolerance on the lead metric.")
@click.argument("overrides", nargs=-1, type=click.UNPROCESSED)
@click.pass_context
def sweep(ctx, task, grid, n_test, delta, overrides):
    """Metric vs training-set size with saturation detection."""
    extra = list(overrides)
    if grid is not None:
        extra += ["--sweep.grid", grid]
    if n_test is not None:
        extra += ["--sweep.n_test", str(n_test)]
    if delta is not None:
        extra += ["--sweep.delta", str(delta)]
    rc = _runconfig(ctx, tuple(extra))
    if task not in TASK_IDS:
        raise ConfigError(f"unknown task {task!r}; tasks: {', '.join(TASK_IDS)}")
    out = _outdir(rc)
    res = ntr_sweep(rc.scenario, task, rc.sweep_grid, rc.sweep_n_test,
                    delta=rc.sweep_delta)
    metric_names = sorted(res.rows[0].metrics)
    rows = [[r.n_tr] + [f"{r.metrics[m]:.6g}" for m in metric_names]
            + [res.saturation_n, r.n_tr == res.saturation_n]
            for r in res.rows]
    path = _write_csv(out / f"sweep_{task}.csv",
                      ["n_tr", *metric_names, "saturation_n",
                       "is_saturation_point"], rows)
    click.echo(f"lead metric: {res.metric_name}; "
               f"saturates at n_tr={res.saturation_n}")
    click.echo(f"wrote {path}")


def main() -> None:
    try:
        cli.main(standalone_mode=False)
    except click.exceptions.Exit as exc:
        sys.exit(exc.exit_code)
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        sys.exit(1)
    except click.ClickException as exc:
        exc.show()
        sys.exit(1)
    except (ConfigError, ValueError, FileNotFoundError) as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    except KeyboardInterrupt:
        sys.exit(130)
    except Exception as exc:   # convergence failures, ambiguous votes, IO
        click.echo(f"runtime error: {exc}", err=True)
        sys.exit(2)


if __name__ == "__main__":
    main()
