import csv
import json

import pytest

from distcert.cli import ConfigError, ExperimentConfig, build_id, main


@pytest.fixture
def in_tmp(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_config_roundtrip():
    cfg = ExperimentConfig("chi2lab", {"d": [2, 4], "ell": 3}, seed=5, out="x")
    again = ExperimentConfig.from_json(json.dumps(cfg.to_dict()))
    assert again.to_dict() == cfg.to_dict()
    assert again.grid["ell"] == [3] and again.format == "csv"
    assert len(cfg.points()) == 2


@pytest.mark.parametrize(
    "obj,where",
    [
        ({"subcommand": "nope"}, "subcommand"),
        ({"subcommand": "chi2lab", "bogus": 1}, "bogus"),
        ({"subcommand": "chi2lab", "grid": {"alpha": [1]}}, "grid.alpha"),
        ({"subcommand": "chi2lab", "grid": {"d": [1]}}, "grid.d[0]"),
        ({"subcommand": "chi2lab", "grid": {"d": [2.5]}}, "grid.d[0]"),
        ({"subcommand": "chi2lab", "grid": {"eps": ["x"]}}, "grid.eps[0]"),
        ({"subcommand": "chi2lab", "seed": -1}, "seed"),
        ({"subcommand": "chi2lab", "format": "xml"}, "format"),
        ({"grid": {}}, "subcommand"),
    ],
)
def test_config_errors_name_the_field(obj, where):
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_dict(obj)
    assert info.value.where == where


def test_cross_parameter_checks():
    with pytest.raises(ConfigError):
        ExperimentConfig("certify", {"d": [3], "nq": [2]})
    with pytest.raises(ConfigError):
        ExperimentConfig("chi2lab", {"d": [2], "ell": [4]})
    with pytest.raises(ConfigError):
        ExperimentConfig("compress", {"d": [6], "nq": [2]})


def test_json_syntax_error_location():
    with pytest.raises(ConfigError) as info:
        ExperimentConfig.from_json('{\n  "subcommand": "chi2lab",\n  "seed": ,\n}')
    assert info.value.where.startswith("line 3 column")


def test_exit_codes(in_tmp, capsys):
    assert main(["certify", "--d", "3", "--nq", "2"]) == 2
    assert main(["chi2lab", "--frobnicate", "1"]) == 2
    bad = in_tmp / "bad.json"
    bad.write_text('{"subcommand": "chi2lab", "extra": 1}')
    assert main(["chi2lab", "--config", str(bad)]) == 2
    assert main(["chi2lab", "--config", str(in_tmp / "missing.json")]) == 2
    assert "config error" in capsys.readouterr().err
    assert not (in_tmp / "results").exists()


def test_chi2lab_run_and_schema(in_tmp):
    rc = main(["chi2lab", "--d", "2", "--ell", "2", "3", "--m", "2", "--eps", "0.2", "--seed", "1", "--out", "o"])
    assert rc == 0
    rows = list(csv.DictReader(open(in_tmp / "o" / "chi2lab.csv")))
    assert [r["ell"] for r in rows] == ["2", "3"]
    for r in rows:
        assert r["pass"] == "True" and r["seed"] == "1" and r["build"]
        assert float(r["abs_diff"]) < 1e-8
    cfg = json.loads((in_tmp / "o" / "chi2lab.config.json").read_text())
    assert cfg["grid"]["ell"] == [2, 3]


def test_config_file_equals_flags(in_tmp):
    main(["normcheck", "--d", "4", "--trials", "5", "--seed", "3", "--out", "a"])
    conf = in_tmp / "c.json"
    conf.write_text(json.dumps({"subcommand": "normcheck", "grid": {"d": [4], "trials": [5]}, "seed": 3, "out": "b"}))
    main(["normcheck", "--config", str(conf)])
    assert (in_tmp / "a" / "normcheck.csv").read_bytes() == (in_tmp / "b" / "normcheck.csv").read_bytes()


def test_flags_override_config(in_tmp):
    conf = in_tmp / "c.json"
    conf.write_text(json.dumps({"subcommand": "normcheck", "grid": {"trials": [5]}, "seed": 3}))
    main(["normcheck", "--config", str(conf), "--seed", "4", "--out", "z"])
    assert json.loads((in_tmp / "z" / "normcheck.config.json").read_text())["seed"] == 4


@pytest.mark.parametrize(
    "argv",
    [
        ["compress", "--d", "4", "--trials", "2000", "--pairs", "2"],
        ["bell", "--nq", "1", "--trials", "16", "--runs", "5"],
        ["certify", "--d", "4", "--nq", "1", "--runs", "2"],
        ["calibrate", "--d", "4", "--trials", "500", "--pairs", "2"],
    ],
)
def test_bitwise_reproducible(in_tmp, argv, monkeypatch):
    for work, workers in (("w1", "1"), ("w2", "2")):
        (in_tmp / work).mkdir()
        monkeypatch.chdir(in_tmp / work)
        monkeypatch.setenv("DISTCERT_WORKERS", workers)
        main(argv + ["--seed", "9", "--out", "r"])
        # nothing written outside the output directory
        assert [p.name for p in (in_tmp / work).iterdir()] == ["r"]
    r1, r2 = in_tmp / "w1" / "r", in_tmp / "w2" / "r"
    names = sorted(p.name for p in r1.iterdir())
    assert names == sorted(p.name for p in r2.iterdir())
    for name in names:
        assert (r1 / name).read_bytes() == (r2 / name).read_bytes()


def test_seed_changes_results(in_tmp):
    main(["compress", "--d", "4", "--trials", "500", "--pairs", "1", "--seed", "1", "--out", "s1"])
    main(["compress", "--d", "4", "--trials", "500", "--pairs", "1", "--seed", "2", "--out", "s2"])
    assert (in_tmp / "s1" / "compress.csv").read_bytes() != (in_tmp / "s2" / "compress.csv").read_bytes()


def test_bell_outputs(in_tmp):
    main(["bell", "--nq", "2", "--trials", "16", "--runs", "3", "--seed", "2", "--out", "b"])
    rec = json.loads((in_tmp / "b" / "bell.json").read_text())
    row = rec["rows"][0]
    assert row["tv_two_stage"] < 1e-10 and row["message_bits"] == [4]
    lines = (in_tmp / "b" / "bell_samples_n2.txt").read_text().split()
    assert len(lines) == 16 and all(0 <= int(x, 16) < 16 for x in lines)


def test_timing_is_opt_in(in_tmp):
    main(["normcheck", "--trials", "2", "--out", "t1"])
    main(["normcheck", "--trials", "2", "--out", "t2", "--record-timing"])
    assert "wall_time_s" not in (in_tmp / "t1" / "normcheck.csv").read_text()
    assert "wall_time_s" in (in_tmp / "t2" / "normcheck.csv").read_text()


def test_build_id():
    assert isinstance(build_id(), str) and build_id()
