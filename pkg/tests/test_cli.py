import csv
import json
import math

import pytest

from xxquench.cli import ConfigError, main, parse_config, validate


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def test_valid_minimal_config():
    cfg = validate({"command": "time-sweep", "N": 24, "state": "neel", "t": [0, 12, 241]})
    assert cfg["N"] == 24
    assert cfg["t"] == [0.0, 12.0, 241]


def test_bell_pairs_need_even_n():
    with pytest.raises(ConfigError, match="even"):
        validate({"command": "time-sweep", "N": 25, "state": "bell-pairs"})


def test_alpha_range_error():
    with pytest.raises(ConfigError, match=r"\[0, 2\*pi\]"):
        validate({"command": "time-sweep", "N": 8, "state": "canted", "alpha": 7.0})


def test_unknown_and_irrelevant_keys():
    with pytest.raises(ConfigError):
        validate({"command": "time-sweep", "N": 8, "state": "neel", "bogus": 1})
    with pytest.raises(ConfigError):
        validate({"command": "walk", "N": 8, "k": 2, "time": 1.0, "deltas": [0.1]})


def test_schema_version_checked():
    with pytest.raises(ConfigError):
        validate({"command": "walk", "N": 8, "k": 2, "time": 1.0, "schema": 99})


def test_flags_override_file(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"command": "time-sweep", "N": 12, "state": "neel"}))
    cfg = parse_config(["time-sweep", "--config", str(path), "--N", "16"])
    assert cfg["N"] == 16


def test_time_sweep_outputs(tmp_path):
    out = tmp_path / "neel24"
    code = main(["time-sweep", "--N", "24", "--state", "neel", "--t", "0", "12", "241", "-o", str(out)])
    assert code == 0
    rows = read_csv(str(out) + ".csv")
    assert len(rows) == 241
    best = max(float(r["fef"]) for r in rows)
    assert abs(best - 0.78) < 0.02
    meta = json.loads((tmp_path / "neel24.meta.json").read_text())
    assert meta["schema"] == 1 and meta["meta"]["rows"] == 241


def test_rerun_from_sidecar_is_bit_identical(tmp_path):
    first = tmp_path / "a"
    main(["disorder-coupling", "--N", "6", "--state", "bell-pairs", "--deltas", "0.1", "--realizations", "3",
          "--t", "0", "3", "7", "-o", str(first)])
    meta = json.loads((tmp_path / "a.meta.json").read_text())
    assert isinstance(meta["seed"], int)
    meta["output"] = str(tmp_path / "b")
    (tmp_path / "b.json").write_text(json.dumps(meta))
    assert main(["disorder-coupling", "--config", str(tmp_path / "b.json")]) == 0
    assert (tmp_path / "a.csv").read_text() == (tmp_path / "b.csv").read_text()


def test_walk_sums_to_one(tmp_path):
    out = tmp_path / "walk"
    assert main(["walk", "--N", "13", "--k", "7", "--time", "3.25", "-o", str(out)]) == 0
    probs = [float(r["probability"]) for r in read_csv(str(out) + ".csv")]
    assert abs(math.fsum(probs) - 1) < 1e-10
    assert probs[0] == pytest.approx(probs[-1], abs=1e-12)


def test_oracle_check_passes(tmp_path, capsys):
    assert main(["oracle-check", "--N", "8", "-o", str(tmp_path / "oc")]) == 0
    assert "max entrywise deviation" in capsys.readouterr().out
    meta = json.loads((tmp_path / "oc.meta.json").read_text())
    assert meta["meta"]["max_deviation"] < 1e-8


def test_json_format(tmp_path):
    out = tmp_path / "w"
    assert main(["walk", "--N", "5", "--k", "1", "--time", "0.5", "--format", "json", "-o", str(out)]) == 0
    data = json.loads((tmp_path / "w.json").read_text())
    assert len(data) == 5


@pytest.mark.parametrize(
    "argv",
    [
        ["time-sweep", "--N", "25", "--state", "bell-pairs"],
        ["time-sweep", "--N", "8", "--state", "canted", "--alpha", "7.0"],
        ["time-sweep", "--N", "1", "--state", "neel"],
        ["disorder-flip", "--N", "8", "--flip-probs", "1.5"],
    ],
)
def test_config_errors_exit_2(argv, tmp_path, capsys):
    assert main(argv + ["-o", str(tmp_path / "x")]) == 2
    assert "config error" in capsys.readouterr().err


def test_unknown_flag_exits_2(capsys):
    with pytest.raises(SystemExit) as info:
        main(["time-sweep", "--frobnicate"])
    assert info.value.code == 2


def test_other_commands_smoke(tmp_path):
    assert main(["alpha-map", "--N", "8", "--alpha-grid", "0", "6.283185307179586", "5", "--t", "0", "4", "5",
                 "-o", str(tmp_path / "am")]) == 0
    assert len(read_csv(tmp_path / "am.csv")) == 25
    assert main(["scaling", "--N-list", "8", "10", "--family", "neel", "--t-points", "61", "-o", str(tmp_path / "sc")]) == 0
    assert main(["disorder-flip", "--N", "8", "--flip-probs", "0", "0.1", "--t", "0", "4", "9", "-o", str(tmp_path / "df")]) == 0
    assert main(["fwhm", "--N-list", "8", "-o", str(tmp_path / "fw")]) == 0
