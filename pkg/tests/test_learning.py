"""Learner tests against hand-solvable problems and classical identities:
the two-point SVM margin, the AdaBoost exponential-loss product, L2Boost's
monotone training error, plus feature extraction and model persistence."""

from dataclasses import replace

import numpy as np
import pytest

from cablediag.learning import (
    CLASSIFIER_KINDS,
    REGRESSOR_KINDS,
    ClassificationMetrics,
    FeatureConfig,
    RegressionMetrics,
    Standardizer,
    build_features,
    classification_metrics,
    detection_at_false_alarm,
    evaluate,
    featurize,
    kernel_matrix,
    load_model,
    model_from_json,
    model_to_json,
    moments,
    peak_features,
    regression_metrics,
    save_model,
    svc_kkt_violation,
    svr_kkt_violation,
    train_adaboost,
    train_l2boost,
    train_model,
    train_svc,
    train_svr,
)
from cablediag.learning.features import FEATURESETS, MAX_FEATURES, SENTINEL_LOC
from cablediag.netmodel import FrequencyGrid, solve_network
from cablediag.reflectometry import JtfdrTrace, Peak
from cablediag.scenario import ScenarioConfig, reference_ld_scenario


# --- kernels --------------------------------------------------------------

def test_kernel_matrix():
    a = np.array([[0.0], [1.0]])
    assert np.array_equal(kernel_matrix(a, a, "linear", 1.0), a @ a.T)
    k = kernel_matrix(a, a, "rbf", 0.5)
    assert np.allclose(np.diag(k), 1.0)
    assert k[0, 1] == pytest.approx(np.exp(-0.5), rel=1e-12)
    assert np.array_equal(k, k.T)
    with pytest.raises(ValueError, match="kernel"):
        kernel_matrix(a, a, "poly", 1.0)


# --- SVC ------------------------------------------------------------------

def test_svc_two_point_margin():
    # the textbook problem: w = 1, b = 0, decision(x) = x
    x = np.array([[-1.0], [1.0]])
    y = np.array([-1.0, 1.0])
    m = train_svc(x, y, c=10.0, kernel="linear", tol=1e-4)
    probe = np.array([[-1.0], [0.0], [1.0]])
    assert np.allclose(m.decision(probe), [-1.0, 0.0, 1.0], atol=1e-2)
    assert np.allclose(np.sort(m.dual_coef), [-0.5, 0.5], atol=1e-2)
    assert abs(m.bias) < 1e-2
    # both points are support vectors, so the audit covers the full set
    alpha = np.abs(m.dual_coef)
    y_sv = np.sign(m.dual_coef)
    v = svc_kkt_violation(m.support_x, y_sv, alpha, m.bias,
                          kernel=m.kernel, gamma=m.gamma, c=m.c)
    assert v <= 1e-4
    assert v == pytest.approx(m.kkt_violation, abs=1e-12)


def test_svc_xor_with_rbf():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([1.0, -1.0, -1.0, 1.0])
    m = train_svc(x, y, c=10.0, kernel="rbf", gamma=1.0)
    assert np.array_equal(m.predict(x), y)


def test_svc_blobs_and_audit():
    rng = np.random.default_rng(0)
    x = np.vstack([rng.normal(-1.0, 0.6, (40, 2)),
                   rng.normal(+1.0, 0.6, (40, 2))])
    y = np.concatenate([-np.ones(40), np.ones(40)])
    m = train_svc(x, y)
    assert m.kkt_violation <= 1e-3
    assert np.mean(m.predict(x) == y) > 0.95


def test_svc_tolerates_duplicate_rows():
    x = np.array([[0.0], [0.0], [1.0], [1.0], [2.0]])
    y = np.array([-1.0, -1.0, -1.0, -1.0, 1.0])
    m = train_svc(x, y, kernel="linear")
    assert np.array_equal(m.predict(x), y)


def test_svc_label_validation():
    x = np.zeros((4, 1))
    with pytest.raises(ValueError, match=r"\+-1"):
        train_svc(x, np.array([0.0, 1.0, 0.0, 1.0]))
    with pytest.raises(ValueError, match="both classes"):
        train_svc(x, np.ones(4))


# --- SVR ------------------------------------------------------------------

def test_svr_exact_linear():
    x = np.linspace(0.0, 1.0, 21)[:, None]
    y = 2.0 * x[:, 0] + 1.0
    m = train_svr(x, y, kernel="linear", tol=1e-6)
    # default epsilon is 0.01 standard deviations of y
    assert np.max(np.abs(m.predict(x) - y)) <= 0.011 * y.std()
    assert m.kkt_violation <= 1e-6


def test_svr_constant_target():
    x = np.linspace(0.0, 1.0, 8)[:, None]
    m = train_svr(x, np.full(8, 3.25), kernel="linear")
    assert np.array_equal(m.predict(x), np.full(8, 3.25))


def test_svr_rbf_fits_sine():
    rng = np.random.default_rng(1)
    x = np.linspace(0.0, 1.0, 80)[:, None]
    y = np.sin(2 * np.pi * x[:, 0]) + 0.05 * rng.normal(size=80)
    m = train_svr(x, y, kernel="rbf", gamma=10.0, epsilon=0.05)
    mse = float(np.mean((m.predict(x) - y) ** 2))
    assert mse < 0.1 * y.var()


def test_svr_kkt_audit_arithmetic():
    # crafted duals: the audit rules, not the optimizer
    x = np.array([[0.0], [1.0]])
    eps = 0.1
    # beta = 0 everywhere: violation is how far residuals poke out of the tube
    v = svr_kkt_violation(x, np.array([0.0, 0.3]), np.zeros(2), 0.0,
                          kernel="linear", gamma=1.0, c=10.0, epsilon=eps)
    assert v == pytest.approx(0.2, rel=1e-12)
    inside = svr_kkt_violation(x, np.array([0.05, -0.05]), np.zeros(2), 0.0,
                               kernel="linear", gamma=1.0, c=10.0, epsilon=eps)
    assert inside == 0.0


# --- AdaBoost -------------------------------------------------------------

def test_adaboost_separable_single_stump():
    x = np.array([[0.0], [1.0], [2.0], [3.0]])
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    m = train_adaboost(x, y)
    assert len(m.stumps) == 1
    assert m.stumps[0].threshold == pytest.approx(1.5)
    assert m.stage_errors == (0.0,)
    assert np.array_equal(m.predict(x), y)


def test_adaboost_stumps_cannot_do_xor():
    x = np.array([[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]])
    y = np.array([1.0, -1.0, -1.0, 1.0])
    m = train_adaboost(x, y)
    assert m.stumps == ()          # every stump errs exactly 0.5
    assert np.mean(m.predict(x) == y) <= 0.75


def test_adaboost_exponential_loss_identity():
    # train loss after T rounds equals prod(2*sqrt(e_m*(1-e_m)))
    rng = np.random.default_rng(2)
    x = np.vstack([rng.normal(-0.4, 1.0, (60, 3)),
                   rng.normal(+0.4, 1.0, (60, 3))])
    y = np.concatenate([-np.ones(60), np.ones(60)])
    m = train_adaboost(x, y, rounds=30)
    assert len(m.stumps) >= 5
    assert all(0.0 < e < 0.5 for e in m.stage_errors)
    assert all(a > 0.0 for a in m.stage_weights)
    f = np.zeros(len(y))
    losses = []
    for stump, alpha in zip(m.stumps, m.stage_weights):
        f += alpha * stump.predict(x)
        losses.append(np.mean(np.exp(-y * f)))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))
    bound = np.prod([2.0 * np.sqrt(e * (1.0 - e)) for e in m.stage_errors])
    assert losses[-1] == pytest.approx(bound, rel=1e-9)


def test_adaboost_validation():
    with pytest.raises(ValueError, match="2-D"):
        train_adaboost(np.zeros(4), np.array([1.0, -1.0, 1.0, -1.0]))
    with pytest.raises(ValueError, match=r"\+-1"):
        train_adaboost(np.zeros((2, 1)), np.array([0.0, 1.0]))
    with pytest.raises(ValueError, match="both classes"):
        train_adaboost(np.zeros((2, 1)), np.array([1.0, 1.0]))


# --- L2Boost --------------------------------------------------------------

def test_l2boost_constant_target():
    x = np.arange(6, dtype=float)[:, None]
    m = train_l2boost(x, np.full(6, -2.5))
    assert m.trees == () and m.train_mse == (0.0,)
    assert np.array_equal(m.predict(np.array([[99.0]])), [-2.5])


def test_l2boost_nails_step_function():
    x = np.linspace(0.0, 1.0, 64)[:, None]
    y = (x[:, 0] > 0.5).astype(float)
    m = train_l2boost(x, y, stages=50, shrinkage=0.5, depth=1)
    assert m.train_mse[-1] < 1e-12
    assert np.max(np.abs(m.predict(x) - y)) < 1e-6
    # unshrunk, one tree reproduces the step exactly and training stops
    exact = train_l2boost(x, y, stages=50, shrinkage=1.0, depth=1)
    assert len(exact.trees) == 1 and exact.train_mse[-1] == 0.0


def test_l2boost_training_error_monotone():
    rng = np.random.default_rng(3)
    x = rng.uniform(size=(120, 4))
    y = x[:, 0] - 2.0 * x[:, 1] ** 2 + 0.1 * rng.normal(size=120)
    m = train_l2boost(x, y, stages=60)
    mse = np.array(m.train_mse)
    assert np.all(np.diff(mse) <= 1e-12 * max(1.0, mse[0]))
    assert mse[-1] < mse[0]


def test_l2boost_validation():
    x = np.zeros((4, 1))
    y = np.zeros(4)
    with pytest.raises(ValueError, match="shrinkage"):
        train_l2boost(x, y, shrinkage=0.0)
    with pytest.raises(ValueError, match="shrinkage"):
        train_l2boost(x, y, shrinkage=1.5)
    with pytest.raises(ValueError, match="aligned"):
        train_l2boost(x, np.zeros(3))
    with pytest.raises(ValueError, match="at least one"):
        train_l2boost(np.zeros((0, 1)), np.zeros(0))


# --- features -------------------------------------------------------------

def test_moments_values():
    assert np.array_equal(moments(np.array([5.0, 5.0, 5.0])), [5, 0, 0, 0])
    assert np.array_equal(moments(np.array([-1.0, 1.0])), [0, 1, 0, 1])
    rng = np.random.default_rng(4)
    v = rng.normal(size=50)
    assert np.allclose(moments(v), moments(v[::-1]), rtol=0, atol=1e-12)
    with pytest.raises(ValueError):
        moments(np.array([]))


def test_peak_features_padding_and_order():
    trace = JtfdrTrace(samples=np.zeros(16), dt=1e-8,
                       peaks=(Peak(3, 0.5), Peak(10, 0.9)))
    out = peak_features(trace, k=4)
    assert out.tolist() == [10 * 1e-8, 0.9, 3 * 1e-8, 0.5,
                            SENTINEL_LOC, 0.0, SENTINEL_LOC, 0.0]
    with pytest.raises(ValueError):
        peak_features(trace, k=0)


@pytest.fixture(scope="module")
def real_obs():
    scn = reference_ld_scenario(ScenarioConfig(seed=0))
    return solve_network(scn, 1, 2, FrequencyGrid.plc_band())


def test_featureset_inventory(real_obs):
    sizes = {"jtfdr_window": 8, "href_window": 8, "jtfdr_peaks": 10,
             "href_peaks": 10, "hf_peaks": 10, "jtfdr_far": 15,
             "moments16": 16, "jtfdr_window_href": 12}
    assert set(FEATURESETS) == set(sizes)
    for name, want in sizes.items():
        names, vals = build_features(real_obs, name)
        assert len(names) == len(vals) == want <= MAX_FEATURES
        assert len(set(names)) == want
        assert np.all(np.isfinite(vals))
    with pytest.raises(ValueError, match="unknown featureset"):
        build_features(real_obs, "bogus")


def test_moments16_reacts_only_in_phase_mean(real_obs):
    shifted = replace(real_obs, h_ref=real_obs.h_ref * np.exp(0.3j))
    names, base = build_features(real_obs, "moments16")
    _, moved = build_features(shifted, "moments16")
    i = names.index("ph_href_mean")
    delta = moved[i] - base[i]
    assert (delta - 0.3) % (2 * np.pi) == pytest.approx(0.0, abs=1e-9) or \
           (0.3 - delta) % (2 * np.pi) == pytest.approx(0.0, abs=1e-9)
    rest = np.delete(np.arange(16), i)
    assert np.allclose(base[rest], moved[rest], rtol=1e-9, atol=1e-12)


def test_featurize_stacks_rows(real_obs):
    names, x = featurize([real_obs, real_obs], "jtfdr_window")
    assert x.shape == (2, 8)
    assert np.array_equal(x[0], x[1])
    with pytest.raises(ValueError, match="no observations"):
        featurize([], "jtfdr_window")


def test_standardizer():
    rng = np.random.default_rng(5)
    x = rng.normal(3.0, 2.0, size=(200, 3))
    x[:, 2] = 7.0                                   # zero variance
    std = Standardizer.fit(x)
    z = std.transform(x)
    assert np.max(np.abs(z[:, :2].mean(axis=0))) < 1e-12
    assert np.allclose(z[:, :2].std(axis=0), 1.0, atol=1e-12)
    assert np.all(z[:, 2] == 0.0)
    probe = std.transform(np.array([[std.mean[0] + std.std[0], 0.0, 99.0]]))
    assert probe[0, 0] == pytest.approx(1.0, rel=1e-12)
    assert probe[0, 2] == 0.0


# --- train_model / evaluate / persistence ----------------------------------

def _toy_models():
    rng = np.random.default_rng(6)
    xc = np.vstack([rng.normal(-1.0, 0.5, (20, 2)),
                    rng.normal(1.0, 0.5, (20, 2))])
    yc = np.concatenate([-np.ones(20), np.ones(20)])
    xr = np.linspace(0.0, 1.0, 30)[:, None]
    yr = 3.0 * xr[:, 0] - 1.0
    names2, names1 = ("a", "b"), ("a",)
    return [
        train_model("t_svc", xc, yc, names2, "svc"),
        train_model("t_ada", xc, yc, names2, "adaboost"),
        train_model("t_svr", xr, yr, names1, "svr"),
        train_model("t_l2", xr, yr, names1, "l2boost", stages=15),
    ]


def test_train_model_wraps_and_standardizes():
    x = np.array([[100.0, 0.0], [101.0, 0.0], [102.0, 0.0], [103.0, 0.0]])
    y = np.array([-1.0, -1.0, 1.0, 1.0])
    tm = train_model("demo", x, y, ("f1", "f2"), "adaboost",
                     metadata={"note": "x"})
    assert tm.kind == "adaboost"
    assert tm.metadata["algorithm"] == "adaboost"
    assert tm.metadata["n_train"] == 4
    assert tm.metadata["note"] == "x"
    assert np.array_equal(tm.predict(x), y)           # raw units in, pm1 out
    assert tm.standardizer.zero_variance[1]


def test_train_model_validation():
    x = np.zeros((4, 2))
    y = np.array([1.0, -1.0, 1.0, -1.0])
    with pytest.raises(ValueError, match="feature_names"):
        train_model("t", x, y, ("only_one",), "svc")
    with pytest.raises(ValueError, match="unknown algorithm"):
        train_model("t", x, y, ("a", "b"), "forest")


def test_decision_is_classifier_only():
    svc, ada, svr, l2 = _toy_models()
    probe = np.array([[0.1, -0.2]])
    assert np.isfinite(svc.decision(probe)).all()
    assert np.isfinite(ada.decision(probe)).all()
    for tm in (svr, l2):
        with pytest.raises(TypeError, match="decision"):
            tm.decision(np.array([[0.1]]))


def test_evaluate_dispatches_by_kind():
    svc, ada, svr, l2 = _toy_models()
    xc = np.array([[-1.0, -1.0], [1.0, 1.0]])
    yc = np.array([-1.0, 1.0])
    assert isinstance(evaluate(svc, xc, yc), ClassificationMetrics)
    xr, yr = np.array([[0.5]]), np.array([0.5])
    assert isinstance(evaluate(svr, xr, yr), RegressionMetrics)
    assert svc.kind in CLASSIFIER_KINDS and l2.kind in REGRESSOR_KINDS


def test_model_json_round_trip(tmp_path):
    probe2 = np.random.default_rng(7).normal(size=(5, 2))
    probe1 = probe2[:, :1]
    for tm in _toy_models():
        text = model_to_json(tm)
        back = model_from_json(text)
        assert back.task_id == tm.task_id
        assert back.feature_names == tm.feature_names
        assert back.metadata == tm.metadata
        probe = probe2 if len(tm.feature_names) == 2 else probe1
        assert np.array_equal(back.predict(probe), tm.predict(probe))
        assert model_to_json(back) == text            # byte-stable
        p = tmp_path / f"{tm.task_id}.json"
        save_model(tm, p)
        assert np.array_equal(load_model(p).predict(probe), tm.predict(probe))


def test_model_json_rejects_foreign_documents():
    with pytest.raises(ValueError, match="not a model file"):
        model_from_json('{"format":"other"}')
    good = model_to_json(_toy_models()[0])
    with pytest.raises(ValueError, match="version"):
        model_from_json(good.replace('"version":1', '"version":2'))


def test_training_is_deterministic():
    a = [model_to_json(tm) for tm in _toy_models()]
    b = [model_to_json(tm) for tm in _toy_models()]
    assert a == b


# --- metrics ---------------------------------------------------------------

def test_classification_metrics_counts():
    y = np.array([1.0, 1.0, 1.0, -1.0, -1.0])
    pred = np.array([1.0, -1.0, 1.0, -1.0, 1.0])
    m = classification_metrics(y, pred)
    assert m.detection_rate == pytest.approx(2 / 3)
    assert m.false_alarm_rate == pytest.approx(1 / 2)
    perfect = classification_metrics(y, y)
    assert (perfect.detection_rate, perfect.false_alarm_rate) == (1.0, 0.0)


def test_regression_metrics_lines():
    y = np.array([0.0, 1.0, 2.0, 3.0])
    ident = regression_metrics(y, y)
    assert (ident.mse, ident.r2) == (0.0, 1.0)
    assert ident.slope == pytest.approx(1.0)
    assert ident.intercept == pytest.approx(0.0, abs=1e-12)
    affine = regression_metrics(y, 2.0 * y + 3.0)
    assert affine.slope == pytest.approx(2.0)
    assert affine.intercept == pytest.approx(3.0)
    flat = regression_metrics(np.zeros(4), y)
    assert flat.slope == 0.0 and np.isnan(flat.r2)


def test_detection_at_false_alarm():
    pos = np.array([0.5, 1.5])
    neg = np.array([1.0, 2.0])
    assert detection_at_false_alarm(pos, neg, 0.0) == 0.0
    assert detection_at_false_alarm(pos, neg, 0.5) == 0.5
    assert detection_at_false_alarm(pos, neg, 1.0) == 1.0
    assert detection_at_false_alarm(np.array([2.0, 3.0]), neg, 0.0) == 0.5
    with pytest.raises(ValueError):
        detection_at_false_alarm(pos, np.array([]), 0.1)
