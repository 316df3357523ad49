import json

import pytest

from hlsinterp import files, fixtures
from hlsinterp.cli import main
from hlsinterp.errors import SchemaError

FIX = fixtures.fixture_path


def run_cli(*argv):
    return main([str(a) for a in argv])


def test_translate_chaser(capsys, tmp_path):
    rc = run_cli("translate", FIX("chaser_mainloop.hlsw"),
                 "--stub-counts", FIX("chaser.stubs.json"))
    out = capsys.readouterr().out
    assert rc == 0
    assert "machine (cyclic)" in out
    assert "stub density states=10" in out
    assert out.strip().endswith("states: 139")


def test_translate_empty_file_exits_1(tmp_path, capsys):
    src = tmp_path / "empty.hlsw"
    src.write_text("")
    assert run_cli("translate", src) == 1


def test_translate_unknown_stub_exits_2(tmp_path, capsys):
    stubs = tmp_path / "stubs.json"
    stubs.write_text(json.dumps({"schema": 1, "state_counts": {"ghost": 3}}))
    rc = run_cli("translate", FIX("chaser_mainloop.hlsw"), "--stub-counts", stubs)
    assert rc == 2


def test_translate_golden_nested_while(tmp_path):
    from pathlib import Path
    golden_dir = Path(__file__).parent / "golden"
    out = tmp_path / "dump.txt"
    assert run_cli("translate", golden_dir / "nested_while.src.hlsw", "-o", out) == 0
    assert out.read_text() == (golden_dir / "nested_while.dump.txt").read_text()


def test_calibrate_chaser(capsys, tmp_path):
    out = tmp_path / "cal.json"
    rc = run_cli("calibrate", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", FIX("chaser.measurement.json"),
                 "-o", out)
    assert rc == 0
    cal = files.load_calibration(out)
    assert cal.pr1_watts_per_bit == pytest.approx(0.0023194, abs=1e-6)
    assert cal.residual_watts == pytest.approx(0.668, abs=1e-3)
    assert cal.routing_bits == 288


def test_calibrate_measurement_equal_to_mix_gives_zero_pr1(tmp_path):
    gamma_exact = repr(721.312 / 138)
    meas = tmp_path / "meas.json"
    meas.write_text(json.dumps({"schema": 1, "design": "chaser",
                                "dynamic_watts": gamma_exact,
                                "static_watts": "0.095"}))
    out = tmp_path / "cal.json"
    rc = run_cli("calibrate", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", meas, "-o", out)
    assert rc == 0
    assert files.load_calibration(out).pr1_watts_per_bit == 0.0


def test_calibrate_measurement_below_mix_exits_3(tmp_path):
    meas = tmp_path / "meas.json"
    meas.write_text(json.dumps({"schema": 1, "design": "chaser",
                                "dynamic_watts": "1.0", "static_watts": "0.01"}))
    rc = run_cli("calibrate", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", meas)
    assert rc == 3


def test_grabber_as_calibrator(tmp_path, capsys):
    out = tmp_path / "cal_g.json"
    rc = run_cli("calibrate", "--design", FIX("grabber.design.json"),
                 "--activity", FIX("grabber.activity.json"),
                 "--measurement", FIX("grabber.measurement.json"),
                 "-o", out)
    assert rc == 0
    cal = files.load_calibration(out)
    assert cal.pr1_watts_per_bit == pytest.approx(0.002356, abs=1e-5)
    # within 1.6% of the chaser-derived coefficient
    chaser_pr1 = 0.668 / 288
    assert abs(cal.pr1_watts_per_bit - chaser_pr1) / chaser_pr1 < 0.016


def _calibration(tmp_path):
    out = tmp_path / "cal.json"
    run_cli("calibrate", "--design", FIX("chaser.design.json"),
            "--activity", FIX("chaser.activity.json"),
            "--measurement", FIX("chaser.measurement.json"),
            "-o", out)
    return out


def test_predict_grabber_with_measurement(tmp_path, capsys):
    cal = _calibration(tmp_path)
    out = tmp_path / "grabber.report.json"
    rc = run_cli("predict", "--design", FIX("grabber.design.json"),
                 "--activity", FIX("grabber.activity.json"),
                 "--calibration", cal,
                 "--measured", FIX("grabber.measurement.json"),
                 "--params", FIX("params.json"),
                 "-o", out)
    assert rc == 0
    rep = files.load_report(out)
    assert rep.dynamic.mean_watts == pytest.approx(7.498, abs=5e-3)
    assert rep.rel_error < 0.002
    assert rep.static is not None
    assert rep.static.mean_watts == pytest.approx(0.099, abs=1e-9)


def test_predict_optimized_grabber(tmp_path, capsys):
    cal = _calibration(tmp_path)
    out = tmp_path / "grabber_opt.report.json"
    rc = run_cli("predict", "--design", FIX("grabber.design.json"),
                 "--optimized", FIX("density_opt.library.json"),
                 "--activity", FIX("grabber_opt.activity.json"),
                 "--calibration", cal,
                 "--measured", FIX("grabber_opt.measurement.json"),
                 "-o", out)
    assert rc == 0
    rep = files.load_report(out)
    assert rep.design == "grabber'"
    assert rep.dynamic.mean_watts == pytest.approx(5.937, abs=5e-3)
    assert rep.rel_error < 0.01


def test_predict_calibration_design_round_trip(tmp_path, capsys):
    cal = _calibration(tmp_path)
    rc = run_cli("predict", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--calibration", cal,
                 "--measured", FIX("chaser.measurement.json"))
    assert rc == 0
    out = capsys.readouterr().out
    assert "rel_error: 0.000%" in out


def test_predict_optimized_chaser_reproduces_measured(tmp_path, capsys):
    cal = _calibration(tmp_path)
    out = tmp_path / "chaser_opt.report.json"
    rc = run_cli("predict", "--design", FIX("chaser.design.json"),
                 "--optimized", FIX("density_opt.library.json"),
                 "--activity", FIX("chaser_opt.activity.json"),
                 "--calibration", cal,
                 "--measured", FIX("chaser_opt.measurement.json"),
                 "-o", out)
    assert rc == 0
    rep = files.load_report(out)
    assert rep.design == "chaser'"
    assert rep.dynamic.mean_watts == pytest.approx(5.023, abs=5e-3)


def test_simulate_writes_trace_and_activity(tmp_path):
    trace = tmp_path / "trace.csv"
    act = tmp_path / "act.json"
    rc = run_cli("simulate", "--design", FIX("chaser.design.json"),
                 "--impls", FIX("chaser.impls.json"),
                 "--periods", "2", "--period-states", "138",
                 "--trace-out", trace, "--activity-out", act)
    assert rc == 0
    lines = trace.read_text().strip().split("\n")
    assert lines[0] == "period,pc,instance,states,pre_hash,post_hash,slot"
    assert len(lines) == 9  # header + 2 periods x 4 instructions
    name, profile = files.load_activity(act)
    assert name == "chaser"
    assert profile.active == fixtures.activity("chaser")[1].active


def test_report_table_and_csv(tmp_path, capsys):
    cal = _calibration(tmp_path)
    r1 = tmp_path / "grabber.report.json"
    r2 = tmp_path / "grabber_opt.report.json"
    r3 = tmp_path / "chaser_opt.report.json"
    run_cli("predict", "--design", FIX("grabber.design.json"),
            "--activity", FIX("grabber.activity.json"),
            "--calibration", cal, "--measured", FIX("grabber.measurement.json"),
            "-o", r1)
    run_cli("predict", "--design", FIX("grabber.design.json"),
            "--optimized", FIX("density_opt.library.json"),
            "--activity", FIX("grabber_opt.activity.json"),
            "--calibration", cal, "--measured", FIX("grabber_opt.measurement.json"),
            "-o", r2)
    run_cli("predict", "--design", FIX("chaser.design.json"),
            "--optimized", FIX("density_opt.library.json"),
            "--activity", FIX("chaser_opt.activity.json"),
            "--calibration", cal, "-o", r3)
    capsys.readouterr()
    csv1 = tmp_path / "table.csv"
    rc = run_cli("report", r2, r1, r3, "--csv", csv1)  # order must not matter
    assert rc == 0
    out = capsys.readouterr().out
    rows = out.strip().split("\n")
    assert rows[0].split() == ["Prototype", "Predicted", "Measured", "Error%"]
    assert rows[1].startswith("chaser'")
    assert rows[2].startswith("grabber ") and rows[3].startswith("grabber'")
    assert rows[1].split()[1].startswith("5.023")
    assert "7.505" in rows[2] and "5.898" in rows[3]
    csv2 = tmp_path / "table2.csv"
    run_cli("report", r1, r3, r2, "--csv", csv2)
    assert csv1.read_bytes() == csv2.read_bytes()  # bit-identical


def test_report_without_measurement_leaves_cells_empty(tmp_path, capsys):
    cal = _calibration(tmp_path)
    r1 = tmp_path / "solo.report.json"
    run_cli("predict", "--design", FIX("grabber.design.json"),
            "--activity", FIX("grabber.activity.json"),
            "--calibration", cal, "-o", r1)
    capsys.readouterr()
    csv = tmp_path / "solo.csv"
    assert run_cli("report", r1, "--csv", csv) == 0
    line = csv.read_text().strip().split("\n")[1]
    assert line.endswith(",,")


def test_calibrate_sigma_flag_sets_noise_std(tmp_path):
    out = tmp_path / "cal.json"
    rc = run_cli("calibrate", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", FIX("chaser.measurement.json"),
                 "--sigma", "0.1", "-o", out)
    assert rc == 0
    cal = files.load_calibration(out)
    assert cal.noise_std == 0.1 / 288
    # an explicit --deterministic wins over --sigma
    rc = run_cli("calibrate", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", FIX("chaser.measurement.json"),
                 "--sigma", "0.1", "--deterministic", "-o", out)
    assert rc == 0
    assert files.load_calibration(out).noise_std == 0.0


def test_calibrate_ldiv_override(tmp_path):
    out = tmp_path / "cal.json"
    rc = run_cli("calibrate", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", FIX("chaser.measurement.json"),
                 "--ldiv", "139", "-o", out)
    assert rc == 0
    cal = files.load_calibration(out)
    assert cal.gamma_watts == pytest.approx(721.312 / 139, abs=1e-9)


def test_malformed_json_exits_1(tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    rc = run_cli("calibrate", "--design", bad,
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", FIX("chaser.measurement.json"))
    assert rc == 1


def test_unknown_keys_exit_2(tmp_path):
    obj = json.loads(FIX("chaser.measurement.json").read_text())
    obj["wattage"] = "9000"
    bad = tmp_path / "meas.json"
    bad.write_text(json.dumps(obj))
    rc = run_cli("calibrate", "--design", FIX("chaser.design.json"),
                 "--activity", FIX("chaser.activity.json"),
                 "--measurement", bad)
    assert rc == 2


def test_round_trip_all_file_kinds(tmp_path):
    design = fixtures.design("chaser")
    assert files.load_design(files.dump_design(design)) == design

    lib = fixtures.library("density_opt")
    assert files.load_library(files.dump_library(lib)) == lib

    name, act = fixtures.activity("chaser_opt")
    assert files.load_activity(files.dump_activity(name, act)) == (name, act)

    name, meas = fixtures.measurement("grabber")
    assert files.load_measurement(files.dump_measurement(name, meas)) == (name, meas)

    from hlsinterp import calibrate_routing
    cal = calibrate_routing(5.895, 5.227, 288)
    assert files.load_calibration(files.dump_calibration(cal)) == cal


def test_nonfinite_watts_rejected():
    with pytest.raises(SchemaError, match="finite"):
        files.load_measurement({"schema": 1, "design": "x",
                                "dynamic_watts": "inf", "static_watts": "0"})


def test_fixture_resources_load():
    table = fixtures.resources_table()
    assert table["chaser"]["logic_slices"] == 38087
    assert table["grabber'"]["flip_flops"] == 2752


def test_optimized_design_fixtures_match_substitution():
    from hlsinterp import substitute_optimized
    opt = fixtures.library("density_opt")
    for name in ("chaser", "grabber"):
        shipped = fixtures.design(f"{name}_opt")
        derived = substitute_optimized(fixtures.design(name), opt)
        assert shipped == derived


def test_predict_accepts_materialized_optimized_design(tmp_path):
    cal = _calibration(tmp_path)
    out = tmp_path / "rep.json"
    rc = run_cli("predict", "--design", FIX("grabber_opt.design.json"),
                 "--activity", FIX("grabber_opt.activity.json"),
                 "--calibration", cal,
                 "--measured", FIX("grabber_opt.measurement.json"), "-o", out)
    assert rc == 0
    rep = files.load_report(out)
    assert rep.dynamic.mean_watts == pytest.approx(5.937, abs=5e-3)
