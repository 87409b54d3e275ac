"""Config parsing: typed INI values, dotted overrides, and field-naming
error messages (a typo must be rejected by name, never defaulted away)."""

import pytest

from cablediag.config import (
    ConfigError,
    apply_overrides,
    build_config,
    load_config,
    read_config_file,
)


def test_defaults():
    rc = load_config()
    assert rc.scenario.seed == 0
    assert rc.scenario.gamma_homo_range == (0.0, 0.05)
    assert rc.scenario.branch_lengths["p2_be"] == 500.0
    assert rc.stage1_algorithm == "adaboost"
    assert (rc.n_train, rc.n_test) == (2000, 1000)
    assert rc.sweep_grid == (200, 500, 1000, 2000)
    assert (rc.sweep_n_test, rc.sweep_delta) == (500, 0.02)
    assert (rc.repro_n_train, rc.repro_n_test) == (1000, 500)
    assert rc.out == "out" and rc.jobs == 1


def test_file_parsing(tmp_path):
    p = tmp_path / "run.ini"
    p.write_text("[run]\nseed = 7\n\n[scenario]\nz_plm = 75\nbalance = off\n"
                 "[sweep]\ngrid = 50, 100\n")
    rc = load_config(p)
    assert rc.scenario.seed == 7
    assert rc.scenario.z_plm == 75.0
    assert rc.scenario.balance is False
    assert rc.sweep_grid == (50, 100)
    assert rc.n_train == 2000      # untouched sections keep defaults


def test_unknown_names_are_rejected(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[physics]\nx = 1\n")
    with pytest.raises(ConfigError, match=r"\[physics\]"):
        read_config_file(p)
    p.write_text("[run]\nseeed = 1\n")
    with pytest.raises(ConfigError, match="run.seeed"):
        read_config_file(p)
    p.write_text("not ini at all {{{")
    with pytest.raises(ConfigError):
        read_config_file(p)


def test_typed_parsing_errors(tmp_path):
    p = tmp_path / "bad.ini"
    p.write_text("[run]\nseed = soon\n")
    with pytest.raises(ConfigError, match="run.seed.*integer"):
        read_config_file(p)
    p.write_text("[scenario]\nz_plm = tall\n")
    with pytest.raises(ConfigError, match="scenario.z_plm.*number"):
        read_config_file(p)
    p.write_text("[scenario]\nbalance = maybe\n")
    with pytest.raises(ConfigError, match="scenario.balance.*boolean"):
        read_config_file(p)


def test_overrides():
    rc = load_config(overrides=[("run.seed", "42"),
                                ("scenario.gamma_local_hi", "0.8"),
                                ("sweep.grid", "100,200")])
    assert rc.scenario.seed == 42
    assert rc.scenario.gamma_local_range == (0.1, 0.8)
    assert rc.sweep_grid == (100, 200)


def test_override_errors():
    with pytest.raises(ConfigError, match="section.key"):
        apply_overrides({}, [("seed", "1")])
    with pytest.raises(ConfigError, match="unknown field"):
        apply_overrides({}, [("run.bogus", "1")])
    with pytest.raises(ConfigError, match="unknown field"):
        apply_overrides({}, [("nope.seed", "1")])


def test_semantic_validation_names_fields():
    with pytest.raises(ConfigError, match="gamma_homo_range"):
        build_config({"scenario": {"gamma_homo_hi": 0.2}})
    with pytest.raises(ConfigError, match="stage1_algorithm"):
        build_config({"learning": {"stage1_algorithm": "forest"}})
    with pytest.raises(ConfigError, match="generate.n_train"):
        build_config({"generate": {"n_train": 0}})
    with pytest.raises(ConfigError, match="sweep.delta"):
        build_config({"sweep": {"delta": 1.5}})
    with pytest.raises(ConfigError, match="run.jobs"):
        build_config({"run": {"jobs": 0}})
    with pytest.raises(ConfigError, match="sweep.grid"):
        build_config({"sweep": {"grid": "a,b"}})
    with pytest.raises(ConfigError, match="sweep.grid"):
        build_config({"sweep": {"grid": "-5"}})
    with pytest.raises(ConfigError, match="sweep.grid"):
        build_config({"sweep": {"grid": ","}})


def test_stage1_algorithm_is_case_insensitive():
    rc = build_config({"learning": {"stage1_algorithm": "SVC"}})
    assert rc.stage1_algorithm == "svc"
