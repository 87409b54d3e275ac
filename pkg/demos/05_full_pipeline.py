"""
End-to-end diagnosis: generate, train, diagnose, stress-test
============================================================

The pipeline module ties everything together: per-task datasets feed a
bundle of trained models, and ``diagnose`` runs the cooperative multi-stage
decision logic on a fresh set of channel observations -- stage 1 votes on
whether any PLM sees a localized degradation, and the outcome routes the
evidence either to the uniform-aging regressors or to the
classify/grade/locate chain.  This script trains a desk-scale bundle and
exercises every downstream entry point on it.

Run it from the repository root (about ten seconds)::

    python3 demos/05_full_pipeline.py
"""

from dataclasses import replace
from pathlib import Path
from tempfile import TemporaryDirectory

from cablediag.netmodel import FrequencyGrid
from cablediag.pipeline import (
    bundle_fingerprint,
    diagnose,
    load_bundle,
    ntr_sweep,
    observe_network,
    robustness_eval,
    save_bundle,
    train_pipeline,
)
from cablediag.scenario import (
    ScenarioConfig,
    TASK_IDS,
    generate_dataset,
    reference_ld_scenario,
)

###############################################################################
# Train a bundle
# --------------
# One dataset per task, 200 samples each -- enough to clear the
# ten-samples-per-feature floor for the largest featureset.  The bundle
# remembers the scenario configuration, frequency grid and feature settings
# it was trained with, so diagnosis needs no further knobs.

cfg = ScenarioConfig(seed=11)
print("generating datasets:", ", ".join(TASK_IDS))
datasets = {task: generate_dataset(cfg, 200, task) for task in TASK_IDS}
bundle = train_pipeline(datasets)
print(f"trained {len(bundle.models)} models; "
      f"fingerprint {bundle_fingerprint(bundle)[:16]}...")

###############################################################################
# Diagnose two network states
# ---------------------------
# A healthy-but-aged network should come back as a homogeneous profile with
# a gamma_homo estimate and its equivalent age; the reference localized
# degradation should be flagged, classified onto its branch, graded and
# located.  The report's two shapes are mutually exclusive by construction.

grid = FrequencyGrid.plc_band(n_fft=4096, sample_rate=100e6)

ld_scn = reference_ld_scenario(ScenarioConfig(seed=0), gamma_local=0.5)
report = diagnose(observe_network(ld_scn, grid), bundle)
print("\n--- localized degradation scenario ---")
print(report.to_text())

aged_scn = replace(ld_scn, ld=None, gamma_homo=0.03)
report = diagnose(observe_network(aged_scn, grid), bundle)
print("\n--- uniformly aged scenario ---")
print(report.to_text())

###############################################################################
# Save / load round trip
# ----------------------
# Bundles serialize to a single JSON document; the fingerprint covers every
# model and the training configuration, so a reloaded bundle is bit-for-bit
# the same diagnostic engine.

with TemporaryDirectory() as tmp:
    path = Path(tmp) / "bundle.json"
    save_bundle(bundle, path)
    again = load_bundle(path)
    same = bundle_fingerprint(again) == bundle_fingerprint(bundle)
    print(f"\nbundle round trip: {path.stat().st_size / 1024:.0f} kB, "
          f"fingerprint match = {same}")

###############################################################################
# Learning-curve sweep
# --------------------
# ``ntr_sweep`` retrains one task at increasing training-set sizes against a
# fixed test set and reports where the metric saturates (first size whose
# successor improves by less than delta).

sweep = ntr_sweep(ScenarioConfig(seed=11), "ld_identify_p1",
                  (120, 240, 480), n_te=120, delta=0.02)
print(f"\nlearning curve for ld_identify_p1 ({sweep.metric_name}):")
for row in sweep.rows:
    print(f"  n_tr = {row.n_tr:4d} -> {row.metrics[sweep.metric_name]:.3f}")
print(f"saturates at n_tr = {sweep.saturation_n}")

###############################################################################
# Robustness to material mismatch
# -------------------------------
# ``robustness_eval`` regenerates the test channels with perturbed water-tree
# material parameters (and, optionally, additive channel noise) while the
# bundle stays fixed -- a train/test mismatch stress test.

res = robustness_eval(bundle, tasks=["target"], n_te=80,
                      loss_tangent_range=(0.8, 1.2))
m = res["target"]
print(f"\ntarget under +-20% loss-tangent mismatch: "
      f"slope {m['slope']:.3f}, R^2 {m['r2']:.3f}")
