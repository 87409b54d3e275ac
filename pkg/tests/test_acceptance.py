"""Full-scale acceptance gates.

Each test re-derives one headline capability end to end (no desk-scale
shortcuts), checks it against its stated tolerance and runtime budget,
and prints a single verdict line with the measured numbers so one run
documents the whole set.  Invariant re-checks import the relevant unit
suites and execute them in place.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

import test_learning as tl
import test_netmodel as tn
import test_pipeline as tp
from cablediag.dielectric import (
    YEAR_SECONDS,
    CableSpec,
    equivalent_age,
    homogeneous_depth,
    max_field,
)
from cablediag.learning import featurize, train_model
from cablediag.learning.features import FeatureConfig
from cablediag.learning.metrics import (
    detection_at_false_alarm,
    regression_metrics,
)
from cablediag.netmodel import (
    PLM_IDS,
    FrequencyGrid,
    impulse_response,
    solve_network,
)
from cablediag.pipeline import (
    TASK_ALGORITHMS,
    TASK_PARAMS,
    TEST_SEED_OFFSET,
    dataset_features,
    ntr_sweep,
)
from cablediag.reflectometry import (
    ChirpParams,
    cross_correlate,
    expected_bp_index,
    find_bp_peak,
    localize,
    rescale,
    run_jtfdr,
    synthesize_rx,
    tdr_trace,
)
from cablediag.scenario import (
    ScenarioConfig,
    generate_dataset,
    reference_ld_scenario,
    task_label,
    task_scenario,
)

_SPEC = CableSpec()
_FIELD = max_field(_SPEC)


def _verdict(capsys, number: int, checks, elapsed: float, budget: float):
    """Print one visible pass/fail line, then assert every check."""
    ok = all(flag for flag, _ in checks) and elapsed <= budget
    detail = "; ".join(text for _, text in checks)
    with capsys.disabled():
        print(f"\n[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail} "
              f"[{elapsed:.1f}s / budget {budget:.0f}s]")
    failed = [text for flag, text in checks if not flag]
    assert not failed, f"criterion {number}: " + "; ".join(failed)
    assert elapsed <= budget, (
        f"criterion {number}: {elapsed:.1f}s over the {budget:.0f}s budget")


def _equivalent_years(gamma) -> np.ndarray:
    """Map severity ratios to equivalent age in years (negatives clipped)."""
    depth = np.clip(np.asarray(gamma, float), 0.0, None) * _SPEC.r_insul
    return np.asarray(equivalent_age(depth, _FIELD), float) / YEAR_SECONDS


# --- shared full-scale fits ------------------------------------------------

@pytest.fixture(scope="module")
def regression_fit():
    """Regression models trained on 2000 samples each, with 500-sample
    nominal test predictions; shared by the regression and robustness
    gates (training time is charged to both verdicts)."""
    t0 = time.perf_counter()
    cfg = ScenarioConfig(seed=0)
    fc = FeatureConfig()
    out = {}
    for task in ("gamma_homo", "target", "product"):
        train = generate_dataset(cfg, 2000, task)
        names, x, y = dataset_features(train, fc)
        tm = train_model(task, x, y, names, TASK_ALGORITHMS[task],
                         **TASK_PARAMS.get(task, {}))
        test = generate_dataset(replace(cfg, seed=cfg.seed + TEST_SEED_OFFSET),
                                500, task)
        _, x_te, y_te = dataset_features(test, fc)
        out[task] = (tm, y_te, tm.predict(x_te))
    out["elapsed"] = time.perf_counter() - t0
    return out


# --- the gates -------------------------------------------------------------

def test_criterion_1_homogeneous_severity(capsys):
    t0 = time.perf_counter()
    gamma = float(homogeneous_depth(30.0 * YEAR_SECONDS, _FIELD)
                  / _SPEC.r_insul)
    elapsed = time.perf_counter() - t0
    _verdict(capsys, 1,
             [(abs(gamma - 0.0481) <= 0.003,
               f"gamma_homo(30 y)={gamma:.5f} (0.0481 +- 0.003)")],
             elapsed, 1.0)


def test_criterion_2_reference_localization(capsys):
    t0 = time.perf_counter()
    scn = reference_ld_scenario(ScenarioConfig(seed=0))
    grid = FrequencyGrid.plc_band(n_fft=4096, sample_rate=100e6)
    obs = solve_network(scn, 1, 2, grid)
    h, dt = impulse_response(obs.h_ref, grid, 4096)
    trace = run_jtfdr(h, dt, rescale(ChirpParams(), 1.0 / dt))
    fc = FeatureConfig()
    bp = find_bp_peak(trace.peaks, expected_bp_index(500.0, dt, fc.v_nominal))
    up_to_bp = [p for p in trace.peaks if bp is not None and p.index <= bp.index]
    interior = [d for _, d in localize(trace.peaks, 500.0, dt=dt,
                                       v_nominal=fc.v_nominal) if d > 50.0]
    elapsed = time.perf_counter() - t0

    four_ordered = (bp is not None and len(up_to_bp) == 4
                    and up_to_bp[0].index < 10
                    and all(a.index < b.index
                            for a, b in zip(up_to_bp, up_to_bp[1:])))
    start = interior[0] if len(interior) == 2 else float("nan")
    end = interior[1] if len(interior) == 2 else float("nan")
    _verdict(capsys, 2, [
        (four_ordered, f"{len(up_to_bp)} ordered envelope peaks up to the BP"),
        (len(interior) == 2 and abs(start - 211.0) <= 5.0,
         f"start={start:.1f} m (211 +- 5)"),
        (len(interior) == 2 and 377.0 <= end <= 390.0,
         f"end={end:.1f} m (in [377, 390], never under)"),
    ], elapsed, 10.0)


def test_criterion_3_envelope_advantage(capsys):
    t0 = time.perf_counter()
    cfg = ScenarioConfig(seed=0, gamma_local_range=(0.1, 0.3))
    fc = FeatureConfig()
    grid = FrequencyGrid.plc_band()

    n_scn, wins = 200, 0
    for i in range(n_scn):
        scn = task_scenario(cfg, "gamma_local", i)   # LD on p1_bp
        obs = solve_network(scn, 1, 2, grid)
        h, dt = impulse_response(obs.h_ref, grid, 4096)
        n_start = 2 * scn.ld.start_m / (fc.v_nominal * dt)
        lo = max(40, int(n_start) - 25)
        hi = max(lo + 10, int(n_start) + 25)
        n_bp = int(expected_bp_index(500.0, dt, fc.v_nominal))

        def ratio(t):
            floor = float(np.median(t.samples[40:n_bp - 40]))
            return float(t.samples[lo:hi].max() / floor)

        wins += ratio(run_jtfdr(h, dt)) > ratio(tdr_trace(h, dt))
    win_frac = wins / n_scn

    train = generate_dataset(cfg, 600, "ld_identify_p1")
    test = generate_dataset(replace(cfg, seed=cfg.seed + TEST_SEED_OFFSET),
                            300, "ld_identify_p1")
    y_tr = np.array([task_label("ld_identify_p1", s) for s in train.samples])
    y_te = np.array([task_label("ld_identify_p1", s) for s in test.samples])
    det = {}
    for featureset in ("jtfdr_peaks", "href_peaks"):
        names, x = featurize((s.observations[0] for s in train.samples),
                             featureset, fc)
        tm = train_model("ld_identify_p1", x, y_tr, names, "adaboost")
        _, x_te = featurize((s.observations[0] for s in test.samples),
                            featureset, fc)
        scores = tm.decision(x_te)
        det[featureset] = detection_at_false_alarm(
            scores[y_te > 0], scores[y_te < 0], 0.05)
    gap = det["jtfdr_peaks"] - det["href_peaks"]
    elapsed = time.perf_counter() - t0

    _verdict(capsys, 3, [
        (win_frac >= 0.90,
         f"envelope peak-to-floor beats raw |h_ref| in {win_frac:.0%} "
         f"of {n_scn} weak-LD scenarios (need >=90%)"),
        (gap >= 0.10,
         f"detection at 5% FA: envelope features {det['jtfdr_peaks']:.3f} "
         f"vs raw {det['href_peaks']:.3f} (gap {gap * 100:+.1f} pp, "
         f"need >=10)"),
    ], elapsed, 600.0)


def test_criterion_4_stage1_operating_point(capsys):
    t0 = time.perf_counter()
    cfg = ScenarioConfig(seed=0)
    fc = FeatureConfig()
    train = generate_dataset(cfg, 2000, "ld_identify_p1")
    test = generate_dataset(replace(cfg, seed=cfg.seed + TEST_SEED_OFFSET),
                            1000, "ld_identify_p1")
    names, x, y = dataset_features(train, fc)
    tm = train_model("ld_identify_p1", x, y, names, "adaboost")
    _, x_te, y_te = dataset_features(test, fc)
    pred = tm.predict(x_te)
    g_local = np.array([s.labels["gamma_local"] or 0.0 for s in test.samples])
    strong = (y_te > 0) & (g_local >= 0.3)
    detection = float(np.mean(pred[strong] > 0))
    false_alarm = float(np.mean(pred[y_te < 0] > 0))
    elapsed = time.perf_counter() - t0

    _verdict(capsys, 4, [
        (detection >= 0.95,
         f"detection(gamma_local>=0.3)={detection:.3f} over {strong.sum()} "
         f"positives (need >=0.95)"),
        (false_alarm <= 0.05, f"false alarm={false_alarm:.3f} (need <=0.05)"),
        (True, "n_tr=2000 n_te=1000 balanced"),
    ], elapsed, 1200.0)


def test_criterion_5_regression_quality(capsys, regression_fit):
    t0 = time.perf_counter()
    _, y_gamma, p_gamma = regression_fit["gamma_homo"]
    m_age = regression_metrics(_equivalent_years(y_gamma),
                               _equivalent_years(p_gamma))
    _, y_tgt, p_tgt = regression_fit["target"]
    m_tgt = regression_metrics(y_tgt, p_tgt)
    _, y_prod, p_prod = regression_fit["product"]
    m_prod = regression_metrics(y_prod, p_prod)
    label_range = float(y_prod.max() - y_prod.min())
    elapsed = regression_fit["elapsed"] + time.perf_counter() - t0

    _verdict(capsys, 5, [
        (0.9 <= m_age.slope <= 1.1 and m_age.r2 >= 0.9,
         f"t_eq slope={m_age.slope:.3f} R2={m_age.r2:.3f} "
         f"(slope 0.9-1.1, R2>=0.9)"),
        (0.95 <= m_tgt.slope <= 1.05 and m_tgt.r2 >= 0.95,
         f"target slope={m_tgt.slope:.3f} R2={m_tgt.r2:.3f} "
         f"(slope 0.95-1.05, R2>=0.95)"),
        (0.9 <= m_prod.slope <= 1.1
         and abs(m_prod.intercept) <= 0.05 * label_range,
         f"product slope={m_prod.slope:.3f} "
         f"intercept={m_prod.intercept:.2f} "
         f"(slope 0.9-1.1, |intercept|<={0.05 * label_range:.2f})"),
    ], elapsed, 1800.0)


def test_criterion_6_training_size_sweep(capsys):
    t0 = time.perf_counter()
    result = ntr_sweep(ScenarioConfig(seed=0), "ld_identify_p1",
                       (200, 500, 1000, 2000), n_te=500, delta=0.02)
    rates = [row.metrics["detection_rate"] for row in result.rows]
    elapsed = time.perf_counter() - t0

    monotone = all(b >= a - 0.02 for a, b in zip(rates, rates[1:]))
    series = ", ".join(f"{n}:{r:.3f}"
                       for n, r in zip((200, 500, 1000, 2000), rates))
    _verdict(capsys, 6, [
        (monotone, f"detection vs n_tr ({series}) monotone within 0.02"),
        (result.saturation_n is not None and result.saturation_n < 2000,
         f"saturates at n_tr={result.saturation_n} (before 2000)"),
    ], elapsed, 1200.0)


def test_criterion_7_numeric_oracles(capsys):
    t0 = time.perf_counter()

    # (a) scattering solver vs a direct nodal-admittance solve
    rng = np.random.default_rng(2024)
    grid = FrequencyGrid(2e6, 1.2e6, 24)
    solver_err, checked = 0.0, 0
    while checked < 20:
        scn = tn._random_scenario(rng)
        pairs = [(a, b) for a in PLM_IDS for b in PLM_IDS
                 if a != b and scn.length(f"p{a}_bp") is not None
                 and scn.length(f"p{b}_bp") is not None]
        if not pairs:
            continue
        tx, rx = pairs[int(rng.integers(len(pairs)))]
        obs = solve_network(scn, tx, rx, grid)
        h_o, z_o, r_o = tn._nodal_solve(scn, tx, rx, grid)
        solver_err = max(solver_err, tn._rel_err(obs.h_f, h_o),
                         tn._rel_err(obs.z_in, z_o),
                         tn._rel_err(obs.h_ref, r_o))
        checked += 1

    # (b) fast correlation/convolution vs direct O(n^2) sums
    rng = np.random.default_rng(11)
    s, h = rng.normal(size=64), rng.normal(size=40)
    direct = np.zeros(len(s) + len(h) - 1)
    for i, si in enumerate(s):
        for j, hj in enumerate(h):
            direct[i + j] += si * hj
    conv_err = float(np.max(np.abs(synthesize_rx(s, h) - direct)))
    rx_sig = rng.normal(size=90)
    direct = np.array([sum(sv * rx_sig[t + tau]
                           for tau, sv in enumerate(s) if t + tau < len(rx_sig))
                       for t in range(len(rx_sig))])
    corr_err = float(np.max(np.abs(cross_correlate(s, rx_sig) - direct)))

    # (c) growth-law round trip over 1..60 years
    t_grid = np.linspace(1.0, 60.0, 25) * YEAR_SECONDS
    back = equivalent_age(homogeneous_depth(t_grid, _FIELD), _FIELD)
    age_err = float(np.max(np.abs(back - t_grid) / t_grid))
    elapsed = time.perf_counter() - t0

    _verdict(capsys, 7, [
        (solver_err <= 1e-9,
         f"solver vs nodal oracle: max rel err {solver_err:.2e} over 20 "
         f"topologies (<=1e-9)"),
        (conv_err <= 1e-9 and corr_err <= 1e-9,
         f"conv/corr vs direct sums: {conv_err:.2e}/{corr_err:.2e} (<=1e-9)"),
        (age_err <= 1e-9, f"age round trip: max rel err {age_err:.2e} (<=1e-9)"),
    ], elapsed, 60.0)


def test_criterion_8_invariant_suites(capsys):
    t0 = time.perf_counter()
    suites = (
        tn.test_determinism,
        tn.test_passivity,
        tn.test_abcd_determinant_is_one,
        tn.test_attenuation_monotone_in_gamma_homo,
        tl.test_training_is_deterministic,
        tl.test_adaboost_exponential_loss_identity,
        tl.test_l2boost_training_error_monotone,
        tp.test_report_paths_are_exclusive,
    )
    failures = []
    for fn in suites:
        try:
            fn()
        except Exception as exc:
            failures.append(f"{fn.__name__}: {exc}")
    elapsed = time.perf_counter() - t0

    summary = (f"{len(suites) - len(failures)}/{len(suites)} invariant "
               f"checks pass (determinism, passivity, ABCD determinant, "
               f"monotone attenuation, boosting bounds, report exclusivity)")
    if failures:
        summary += " -- " + "; ".join(failures)
    _verdict(capsys, 8, [(not failures, summary)], elapsed, 600.0)


def test_criterion_9_material_mismatch_robustness(capsys, regression_fit):
    t0 = time.perf_counter()
    cfg = ScenarioConfig(seed=0)
    fc = FeatureConfig()
    test_cfg = replace(cfg, seed=cfg.seed + TEST_SEED_OFFSET,
                       wt_loss_tangent_range=(0.8, 1.2))
    slopes = {}
    for task in ("target", "gamma_homo"):
        test = generate_dataset(test_cfg, 300, task)
        _, x_te, y_te = dataset_features(test, fc)
        pred = regression_fit[task][0].predict(x_te)
        if task == "gamma_homo":
            slopes[task] = regression_metrics(_equivalent_years(y_te),
                                              _equivalent_years(pred)).slope
        else:
            slopes[task] = regression_metrics(y_te, pred).slope
    elapsed = regression_fit["elapsed"] + time.perf_counter() - t0

    _verdict(capsys, 9, [
        (0.9 <= slopes["target"] <= 1.1,
         f"target slope under +-20% loss-tangent mismatch="
         f"{slopes['target']:.3f} (0.9-1.1)"),
        (0.7 <= slopes["gamma_homo"] <= 1.2,
         f"t_eq slope under mismatch={slopes['gamma_homo']:.3f} (0.7-1.2)"),
    ], elapsed, 1200.0)
