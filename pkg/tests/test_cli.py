import csv
import json

import numpy as np
import pytest

from memchannel.cli import ConfigError, build_config, main, read_config_file


def run(tmp_path, *args, name="out.csv"):
    out = tmp_path / name
    code = main([*args, "--out", str(out)])
    return code, out


def read_csv(path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    rows = list(csv.reader(lines[1:]))
    return meta, rows[0], rows[1:]


def test_amplitudes_header_and_values(tmp_path):
    code, out = run(tmp_path, "amplitudes", "--length", "5", "--t-min", "0", "--t-max", "3.141592653589793", "--points", "3")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert header == ["t", "re_f11", "im_f11", "re_f1N", "im_f1N"]
    t, _, _, re1n, im1n = map(float, rows[1])
    assert abs(t - np.pi / 2) < 1e-15
    assert abs(complex(re1n, im1n) - 1) < 1e-12  # (-i)^4
    assert meta["command"] == "amplitudes"


def test_seventeen_digit_floats(tmp_path):
    _, out = run(tmp_path, "amplitudes", "--points", "2", "--t-max", "1")
    _, _, rows = read_csv(out)
    assert float(rows[1][1]) == np.cos(1.0) ** 5


def test_sweep_uses_columns(tmp_path):
    code, out = run(tmp_path, "sweep-uses", "--deltas", "0,0.05", "--uses", "10")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert header == ["n", "F_delta=0", "F_delta=0.05"]
    assert meta["locc_limit"] == pytest.approx(2 / 3)
    ideal = [float(r[1]) for r in rows]
    noisy = [float(r[2]) for r in rows]
    assert max(abs(f - 1) for f in ideal) < 1e-12
    assert abs(noisy[-1] - 0.91) < 0.01
    assert all(b <= a for a, b in zip(noisy, noisy[1:]))


def test_sweep_length_crossing(tmp_path):
    code, out = run(tmp_path, "sweep-length", "--length-min", "2100", "--length-max", "2200")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert header == ["N", "F_1", "F_2", "F_3", "F_4", "F_5"]
    row = next(r for r in rows if r[0] == "2150")
    f = list(map(float, row[1:]))
    assert f[3] <= 2 / 3 < f[2]
    assert all(b <= a for a, b in zip(f, f[1:]))


def test_sweep_length_needs_pst(tmp_path):
    code, _ = run(tmp_path, "sweep-length", "--scheme", "uniform")
    assert code == 2


def test_map_report_json(tmp_path):
    code, out = run(tmp_path, "map", "--format", "json", "--length", "5", name="m.json")
    assert code == 0
    body = json.loads(out.read_text())
    values = dict(body["rows"])
    assert values["decomposition_residual"] < 1e-10
    assert set(body["columns"]) == {"quantity", "value"}


def test_map_large_gamma_gives_zero_bound(tmp_path):
    code, out = run(tmp_path, "map", "--t1", "0.3", "--t2", "0.3", "--oracle", "false")
    _, _, rows = read_csv(out)
    values = {k: v for k, v in rows}
    assert float(values["gamma2"]) >= 0.5
    assert float(values["capacity_bound_phi2"]) == 0.0
    assert values["decomposition_residual"] == ""


def test_concurrence_table(tmp_path):
    code, out = run(tmp_path, "concurrence", "--points", "120")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert header == ["t", "C1", "C2"]
    assert len(rows) == 120
    assert meta["widest_zero_window_C2"] > 0.1


def test_deterministic_output(tmp_path):
    _, a = run(tmp_path, "concurrence", "--points", "40", name="a.csv")
    _, b = run(tmp_path, "concurrence", "--points", "40", "--jobs", "2", name="b.csv")
    assert a.read_bytes() == b.read_bytes()


def test_validate_passes(tmp_path):
    code, out = run(tmp_path, "validate", "--seed", "7")
    assert code == 0
    meta, header, rows = read_csv(out)
    assert meta["all_passed"] is True
    assert all(r[1] == "true" for r in rows)


def test_validate_failure_exit_code(tmp_path):
    code, _ = run(tmp_path, "validate", "--tol", "decomposition=1e-40")
    assert code == 3


def test_guard_exit_code(tmp_path):
    code, _ = run(tmp_path, "map", "--length", "20", "--oracle", "true")
    assert code == 4
    code, _ = run(tmp_path, "sweep-uses", "--method", "motzkin", "--uses", "9")
    assert code == 4


def test_config_errors(tmp_path):
    assert run(tmp_path, "amplitudes", "--format", "xml")[0] == 2
    assert run(tmp_path, "amplitudes", "--points", "abc")[0] == 2
    assert run(tmp_path, "amplitudes", "--length", "2")[0] == 2
    assert run(tmp_path, "amplitudes", "--config", str(tmp_path / "missing.ini"))[0] == 2
    assert main(["nonsense"]) == 2


def test_config_file_and_override(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("length = 5\ndeltas = 0.0, 0.05\nuses = 3\n")
    code, out = run(tmp_path, "sweep-uses", "--config", str(cfg), "--length", "7")
    assert code == 0
    meta, _, rows = read_csv(out)
    assert meta["config"]["length"] == 7
    assert len(rows) == 3


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        build_config("amplitudes", read_config_file(str(cfg)), {})


def test_delta_policy():
    cfg = build_config("map", {"delta": "0.02"}, {})
    assert cfg.delta == 0.02
