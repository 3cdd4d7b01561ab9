from __future__ import annotations

import json
import math
from pathlib import Path

import pytest

from tubelaunch import telemetry
from tubelaunch.constants import ATMOSPHERE
from tubelaunch.cli import EXIT_CONFIG, EXIT_FAULT, EXIT_LAUNCH, EXIT_OK, main
from tubelaunch.errors import ConfigError, LaunchFailure, TelemetryParseError
from tubelaunch.report import analyze
from tubelaunch.runner import run
from tubelaunch.scenario import (
    Scenario,
    builtin_scenario,
    dumps_scenario,
    load_scenario,
    save_scenario,
    scenario_from_dict,
)
from tubelaunch.sweep import SweepSpec, load_spec, report_fields, spec_from_dict, sweep

SWEEPS = Path(__file__).resolve().parent.parent / "sweeps"
SHORT = Scenario(name="short").override("sim.duration", 1.5).override("sim.motors_enabled", False)


# ---------------------------------------------------------------- scenarios


@pytest.mark.parametrize("name", ["nominal", "crosswind", "passive", "subscale"])
def test_builtin_scenarios_round_trip(name, tmp_path):
    scn = load_scenario(builtin_scenario(name))
    save_scenario(scn, tmp_path / "s.toml")
    assert load_scenario(tmp_path / "s.toml") == scn


def test_unknown_key_rejected():
    with pytest.raises(ConfigError):
        scenario_from_dict({"vehicle": {"mass_kg": 3.0}})
    with pytest.raises(ConfigError):
        scenario_from_dict({"rotors": {}})


def test_bar_alias_and_override():
    scn = scenario_from_dict({"launcher": {"chamber_pressure_bar": 6.0}})
    assert scn.launcher.chamber_pressure == pytest.approx(6.0e5, rel=1e-12)
    assert Scenario().override("sim.seed", 9).sim.seed == 9
    with pytest.raises(ConfigError):
        Scenario().override("nope.key", 1)


def test_dumped_toml_has_no_rng_seed():
    assert "rng_seed" not in dumps_scenario(Scenario())


# ---------------------------------------------------------------- telemetry


def _hand_rows():
    def row(t, z, phase, events=""):
        truth = (0.0, 0.0, z, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        sens = (0.0, 0.0, 9.81, 0.0, 0.0, 0.0, math.nan, False, z, True, None, None, None, None, math.nan)
        return (t,) + truth + sens + (phase,) + (0.0,) * 6 + (events,)
    return [
        row(0.0, 0.2, "InTube"),
        row(0.1, 1.9, "BallisticPassive", "TubeExit@0.1|phase:InTube>BallisticPassive:tube cleared"),
        row(0.2, 3.1, "BallisticPassive", "RunEnd@0.2"),
    ]


def test_three_row_hand_csv(tmp_path):
    path = tmp_path / "hand.csv"
    path.write_text(telemetry.dumps(_hand_rows(), 6))
    rep = analyze(path)
    assert rep.apogee == 3.1
    assert rep.complete and rep.end_time == 0.2
    assert rep.phase_timeline == ((0.0, "InTube"), (0.1, "BallisticPassive"))
    assert [e.kind for e in rep.events] == ["TubeExit"]


def test_parse_errors_carry_line_numbers():
    text = telemetry.dumps(_hand_rows(), 6)
    lines = text.splitlines()
    bad = lines[:2] + ["x" + lines[2][lines[2].index(","):]] + lines[3:]
    with pytest.raises(TelemetryParseError) as exc:
        telemetry.parse("\n".join(bad))
    assert exc.value.line == 3
    with pytest.raises(TelemetryParseError) as exc:
        telemetry.parse("\n".join(lines[:3] + [lines[3][:40]]))
    assert exc.value.line == 4
    with pytest.raises(TelemetryParseError):
        telemetry.parse("a,b\n")
    with pytest.raises(TelemetryParseError):
        telemetry.parse("")


def test_analyze_reproduces_run_report(tmp_path):
    res = run(SHORT, csv_path=tmp_path / "r.csv")
    assert analyze(tmp_path / "r.csv") == res.report
    assert res.report.complete


def test_truncated_csv_is_incomplete(tmp_path):
    res = run(SHORT, csv_path=tmp_path / "r.csv")
    lines = (tmp_path / "r.csv").read_text().splitlines(keepends=True)
    cut = tmp_path / "cut.csv"
    cut.write_text("".join(lines[: len(lines) // 2]))
    rep = analyze(cut)
    assert not rep.complete
    assert len(lines) // 2 - 1 < len(res.rows)
    assert rep.apogee == max(r[3] for r in res.rows[: len(lines) // 2 - 1])


def test_csv_is_byte_identical(tmp_path):
    run(SHORT, csv_path=tmp_path / "a.csv")
    run(SHORT, csv_path=tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


@pytest.mark.parametrize("pressure", [0.0, ATMOSPHERE])
def test_dead_launcher_leaves_header_only(tmp_path, pressure):
    scn = SHORT.override("launcher.chamber_pressure", pressure)
    with pytest.raises(LaunchFailure):
        run(scn, csv_path=tmp_path / "f.csv")
    text = (tmp_path / "f.csv").read_text()
    assert text.splitlines() == [",".join(telemetry.columns(6))]


# ---------------------------------------------------------------- sweeps


def test_single_run_sweep_matches_run():
    res = sweep(SHORT, SweepSpec(), n_runs=1)
    assert len(res.rows) == 1
    row = res.rows[0]
    ref = report_fields(run(SHORT).report)
    assert {k: row[k] for k in ref} == ref
    assert row["seed"] == SHORT.sim.seed


def test_row_count_includes_failures():
    spec = spec_from_dict({"grid": {"launcher.chamber_pressure_bar": [6.9, 1.0]}})
    res = sweep(SHORT, spec, n_runs=5)
    assert [r["run"] for r in res.rows] == list(range(5))
    assert [r["status"] for r in res.rows] == ["ok", "launch_failure"] * 2 + ["ok"]
    stats = res.statistics()
    assert stats["n_runs"] == 5 and stats["n_failed"] == 2


def test_sweep_csv_and_parallel_agree():
    spec = spec_from_dict({"monte_carlo": {"wind.gust_std": {"uniform": [0.0, 1.0]}}})
    a = sweep(SHORT, spec, n_runs=3)
    b = sweep(SHORT, spec, n_runs=3, jobs=2)
    assert a.to_csv() == b.to_csv()
    assert "statistic,value" in a.to_csv()


def test_spec_validation():
    with pytest.raises(ConfigError):
        spec_from_dict({"monte_carlo": {"x.y": {"cauchy": [0, 1]}}})
    with pytest.raises(ConfigError):
        spec_from_dict({"sweep": {"n_runs": 0}})
    with pytest.raises(ConfigError):
        spec_from_dict({"grid": {"a.b": [1]}, "monte_carlo": {"a.b": {"normal": [0, 1]}}})
    with pytest.raises(ConfigError):
        spec_from_dict({"grid": {"a.b": []}})


def test_pressure_grid_gives_monotone_apogee():
    spec = load_spec(SWEEPS / "pressure.toml")
    scn = SHORT.override("sim.duration", 2.0)
    res = sweep(scn, spec)
    apo = [r["apogee"] for r in res.rows]
    assert len(apo) == 5
    assert all(b > a for a, b in zip(apo, apo[1:]))


def _crosswind(fin_area=None):
    scn = load_scenario(builtin_scenario("crosswind"))
    if fin_area is not None:
        scn = scn.override("aero.fin_area", fin_area)
    return scn


CROSSWIND_SPEC = load_spec(SWEEPS / "crosswind_mc.toml")


@pytest.mark.slow
def test_crosswind_sweep_with_fins(criterion):
    stats = sweep(_crosswind(), CROSSWIND_SPEC, n_runs=100).statistics()
    assert stats["n_runs"] == 100
    criterion("sweep 17 m/s with fins, success >= 0.95", stats["success_fraction"] >= 0.95,
              f"success {stats['success_fraction']:.2f}, tumble {stats['tumble_fraction']:.2f}")


@pytest.mark.slow
@pytest.mark.xfail(strict=True, reason="without fins the powered controller still recovers every run; "
                   "the bare body's instability is too weak within the 0.14 s before motors start")
def test_crosswind_sweep_without_fins(criterion):
    stats = sweep(_crosswind(0.0), CROSSWIND_SPEC, n_runs=100).statistics()
    criterion("sweep 17 m/s fins zeroed, success <= 0.5", stats["success_fraction"] <= 0.5,
              f"success {stats['success_fraction']:.2f}, tumble {stats['tumble_fraction']:.2f}")


# ---------------------------------------------------------------- CLI


def test_cli_simulate(tmp_path, capsys):
    rc = main(["simulate", "passive", "--out", str(tmp_path), "--set", "sim.duration=1.0"])
    assert rc == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert (tmp_path / "passive_seed0.csv").exists()
    assert analyze(summary["csv"]).apogee == summary["apogee"]


def test_cli_env_out_dir(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("TUBELAUNCH_OUT", str(tmp_path / "env"))
    assert main(["simulate", "passive", "--seed", "4", "--set", "sim.duration=0.5"]) == EXIT_OK
    assert (tmp_path / "env" / "passive_seed4.csv").exists()


def test_cli_exit_codes(tmp_path, capsys):
    out = ["--out", str(tmp_path)]
    assert main(["simulate", "no_such_scenario"] + out) == EXIT_CONFIG
    assert main(["simulate", "passive", "--set", "vehicle.mass_kg=1"] + out) == EXIT_CONFIG
    assert main(["simulate", "passive", "--set", "launcher.chamber_pressure_bar=1.0"] + out) == EXIT_LAUNCH
    header = (tmp_path / "passive_seed0.csv").read_text().splitlines()
    assert header == [",".join(telemetry.columns(6))]
    assert main(["simulate", "passive", "--set", "wind.mean=[NaN, 0, 0]"] + out) == EXIT_FAULT
    assert main(["analyze", str(tmp_path / "missing.csv")]) == EXIT_CONFIG


def test_cli_scale_and_analyze(tmp_path, capsys):
    dest = tmp_path / "sub.toml"
    assert main(["scale", "passive", "--lambda", "3", "-o", str(dest)]) == EXIT_OK
    sub = load_scenario(dest)
    assert sub.vehicle.folded_diameter == pytest.approx(0.05)
    capsys.readouterr()
    assert main(["sweep", "passive", "--spec", str(SWEEPS / "pressure.toml"), "-n", "2", "--out", str(tmp_path),
                 ]) == EXIT_OK
    stats = json.loads(capsys.readouterr().out)
    assert stats["n_runs"] == 2
