import json

import pytest

from conelab.cli import (EXIT_CHECK, EXIT_CONFIG, EXIT_OK, PRESETS, ConfigError, ExperimentConfig, fmt,
                         list_presets, main)


def test_preset_names():
    names = [n for n, _ in list_presets()]
    assert len(names) == len(set(names))
    for k in range(1, 10):
        assert f"acceptance-A{k}" in names
    assert all(desc for _, desc in list_presets())


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_preset_round_trip(name):
    cfg = PRESETS[name][1]
    again = ExperimentConfig.from_ini(cfg.to_ini())
    assert again == cfg
    assert again.config_hash() == cfg.config_hash()


def test_hash_ignores_ordering():
    a = ExperimentConfig.from_ini("[cone]\nbeta = 0.6\nn = 1\n[grid]\nn_r = 16\nn_theta = 16\n")
    b = ExperimentConfig.from_ini("[grid]\nn_theta = 16\nn_r = 16\n[cone]\nn = 1\nbeta = 0.6\n")
    assert a.config_hash() == b.config_hash()
    c = ExperimentConfig.from_ini("[cone]\nbeta = 0.61\nn = 1\n")
    assert c.config_hash() != a.config_hash()


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentConfig.from_ini("[experiment]\ncommand = alpha-sweep\n[sweep]\nalphas =\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_ini("[cone]\nbogus = 1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig.from_ini("[nowhere]\nx = 1\n")
    with pytest.raises(ConfigError):
        ExperimentConfig(beta=1.5).validate()
    p = tmp_path / "bad.ini"
    p.write_text("[experiment]\ncommand = alpha-sweep\n[sweep]\nalphas =\n")
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    p.write_text("[cone]\nbogus = 1\n")
    assert main(["--config", str(p), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    assert main(["--preset", "no-such-preset"]) == EXIT_CONFIG


def test_fmt_round_trips():
    for x in (0.1, 1 / 3, 2.0 ** -20, 1e300):
        assert float(fmt(x)) == x


def test_demo_euclidean(tmp_path):
    out = tmp_path / "euc"
    assert main(["--preset", "demo-euclidean", "--out", str(out)]) == EXIT_OK
    rep = json.loads((out / "report.json").read_text())
    assert rep["reports"]["solve"]["sup_error"] <= 1e-10
    assert rep["checks"]["closed_form"] is True
    assert len(rep["config_hash"]) == 64


def test_repeat_run_is_byte_identical(tmp_path):
    ini = tmp_path / "c.ini"
    ini.write_text("[experiment]\nname = small-cascade\ncommand = cascade\n"
                   "[grid]\nn_s = 9\nn_r = 8\nn_theta = 8\n[data]\ndepth = 3\n")
    a, b = tmp_path / "a", tmp_path / "b"
    codes = [main(["--config", str(ini), "--out", str(d)]) for d in (a, b)]
    assert codes[0] == codes[1] and codes[0] in (EXIT_OK, EXIT_CHECK)
    assert (a / "cascade.csv").read_bytes() == (b / "cascade.csv").read_bytes()
    assert (a / "decay.dat").read_bytes() == (b / "decay.dat").read_bytes()


def test_seed_override_changes_hash(tmp_path):
    cfg = PRESETS["demo-harmonic"][1]
    assert ExperimentConfig.from_ini(cfg.to_ini() + "").config_hash() == cfg.config_hash()
    from dataclasses import replace
    assert replace(cfg, seed=5).config_hash() != cfg.config_hash()


def test_list_presets_command(capsys):
    assert main(["list-presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "demo-euclidean" in out and "acceptance-A9" in out
