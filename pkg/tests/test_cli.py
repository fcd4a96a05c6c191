import json
import math

import pytest

from gempl.cli import EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC, EXIT_OK, main
from gempl.config import INCH, dump_config, parse_config, parse_override
from gempl.errors import ConfigError
from gempl.runner import ResultEnvelope, run_command, write_outputs

THRESHOLD_DOC = """
command = "threshold"

[params]
m = 2e-6
f_p = 20e9
f_s = 10e9
f_i = 10e9
Q_p = 1e10
Q_s = 1e10
Q_i = 1e10
L_eff = 0.03
"""

SWEEP_DOC = """
command = "sweep"

[params]
t_end = 4.0

[sweep]
command = "simulate"
parameter = "B_p"
start = 0.9e-4
stop = 1.4e-4
count = 6
scale = "linear"
track = "fitted_rate_per_s"
"""


# parse_config -----------------------------------------------------------------------


def test_empty_command_is_usage_error():
    with pytest.raises(ConfigError, match="no command"):
        parse_config("")


def test_minimal_threshold_config():
    cfg = parse_config(THRESHOLD_DOC)
    assert cfg.command == "threshold"
    assert cfg.params["m"] == 2e-6
    assert cfg.params["f_mech"] == 4e8  # default filled


def test_sweep_count_one_rejected():
    with pytest.raises(ConfigError, match="count"):
        parse_config(SWEEP_DOC.replace("count = 6", "count = 1"))


def test_log_sweep_needs_positive_bounds():
    doc = SWEEP_DOC.replace('scale = "linear"', 'scale = "log"').replace("start = 0.9e-4", "start = 0.0")
    with pytest.raises(ConfigError, match="positive"):
        parse_config(doc)


def test_log_sweep_values():
    cfg = parse_config(SWEEP_DOC.replace('scale = "linear"', 'scale = "log"'))
    v = cfg.sweep.values()
    assert v[0] == pytest.approx(0.9e-4) and v[-1] == pytest.approx(1.4e-4)
    assert v[1] / v[0] == pytest.approx(v[2] / v[1], rel=1e-12)


@pytest.mark.parametrize(
    "doc,key",
    [
        ('command = "modes"\n[params]\nbogus = 1', "bogus"),
        ('command = "modes"\nextra = 1', "extra"),
        ('command = "modes"\n[params]\nlength = "long"', "length"),
        ('command = "spectrum"\n[params]\npoints = 1.5', "points"),
        ('command = "modes"\n[params]\nlength = true', "length"),
        ('command = "teleport"', "teleport"),
        (SWEEP_DOC.replace('parameter = "B_p"', 'parameter = "nope"'), "nope"),
        (SWEEP_DOC.replace("count = 6", "count = 6\ncolour = 1"), "colour"),
        ('command = "modes"\n[sweep]\ncount = 2', "sweep"),
    ],
)
def test_validation_names_offending_key(doc, key):
    with pytest.raises(ConfigError, match=key):
        parse_config(doc)


def test_parse_error_reports_position():
    with pytest.raises(ConfigError, match=r"line 2, column"):
        parse_config('command = "modes"\nlength = \n')


def test_inch_keys():
    cfg = parse_config('command = "modes"\n[params]\nlength_in = 1.284\ndiameter_in = 1.02')
    assert cfg.params["length"] == 1.284 * INCH
    assert cfg.params["diameter"] == 1.02 * INCH
    with pytest.raises(ConfigError, match="both"):
        parse_config('command = "modes"\n[params]\nlength_in = 1.0\nlength = 0.02')


def test_overrides_win_over_file():
    cfg = parse_config(THRESHOLD_DOC, overrides=["m=3e-6", "Q_s=1e9", "params.L_eff=0.05"])
    assert cfg.params["m"] == 3e-6 and cfg.params["Q_s"] == 1e9 and cfg.params["L_eff"] == 0.05
    cfg = parse_config(SWEEP_DOC, overrides=["sweep.count=3"])
    assert cfg.sweep.count == 3
    assert parse_override("mode=TE111") == ("mode", "TE111")
    with pytest.raises(ConfigError):
        parse_override("novalue")


def test_command_line_command_wins():
    cfg = parse_config('command = "modes"', command="spectrum")
    assert cfg.command == "spectrum"


@pytest.mark.parametrize("doc", [THRESHOLD_DOC, SWEEP_DOC, 'command = "ab-phase"\noutput = "out"'])
def test_config_round_trip(doc):
    cfg = parse_config(doc)
    again = parse_config(dump_config(cfg))
    assert again == cfg
    assert dump_config(again) == dump_config(cfg)


# run_command ----------------------------------------------------------------------------


def test_threshold_command():
    env = run_command(parse_config(THRESHOLD_DOC))
    sep = env.outputs["separated"]
    assert sep["P_p_threshold"] == pytest.approx(3.6e-6, rel=0.01)
    assert env.outputs["separated_over_braginsky"] == pytest.approx(8.0, rel=1e-14)
    assert env.inputs["params"]["m"] == 2e-6
    assert env.constants_mode in ("codata", "paper")


def test_modes_command():
    env = run_command(parse_config('command = "modes"\n[params]\nlength_in = 1.284\ndiameter_in = 1.02\nmode = "TE112"'))
    assert env.outputs["frequency_hz"] == pytest.approx(11.43e9, rel=1e-3)


def test_bad_mode_is_config_error():
    with pytest.raises(ConfigError):
        run_command(parse_config('command = "modes"\n[params]\nmode = "TE1"'))


def test_ab_phase_command():
    env = run_command(parse_config('command = "ab-phase"'))
    out = env.outputs
    assert out["Phi_g_m2_s"] == pytest.approx(out["Phi_g_exact_m2_s"], rel=1e-9)
    assert out["compton_phase_rad"] == pytest.approx(out["total_ab_phase_rad"], rel=1e-9)
    assert out["fluxoid_flux_wb"] / (math.pi * 0.01**2) == pytest.approx(-out["london_moment_t"], rel=1e-12)


def test_spectrum_command_and_csv(tmp_path):
    env = run_command(parse_config('command = "spectrum"'))
    assert abs(env.outputs["maxima_separation_hz"] - 400e6) <= env.outputs["grid_step_hz"]
    write_outputs(env, tmp_path)
    assert (tmp_path / "spectrum.csv").read_text().splitlines()[0] == "freq_hz,s21_power"


def test_simulate_csv_columns(tmp_path):
    env = run_command(parse_config('command = "simulate"\n[params]\nt_end = 1.0'))
    write_outputs(env, tmp_path)
    header = (tmp_path / "envelopes.csv").read_text().splitlines()[0].split(",")
    assert header == ["t_s", "eps_abs_m", "eps_phase_rad", "bi_abs_t", "bi_phase_rad"]
    assert env.outputs["fitted_rate_per_s"] == pytest.approx(env.outputs["predicted_rate_per_s"], rel=1e-6)


def test_sweep_crosses_zero_at_threshold():
    env = run_command(parse_config(SWEEP_DOC))
    out = env.outputs
    B_thr = out["results"][0]["B_p_threshold_t"]
    assert out["track_zero_crossing"] == pytest.approx(B_thr, rel=0.02)
    rates = [r["fitted_rate_per_s"] for r in out["results"]]
    assert rates == sorted(rates) and rates[0] < 0 < rates[-1]


def test_sweep_rows_ordered_with_workers(tmp_path):
    doc = SWEEP_DOC.replace("count = 6", "count = 5\nworkers = 3").replace("t_end = 4.0", "t_end = 0.5")
    env = run_command(parse_config(doc))
    write_outputs(env, tmp_path)
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("B_p,")
    values = [float(r.split(",")[0]) for r in rows[1:]]
    assert values == sorted(values) and len(values) == 5
    serial = run_command(parse_config(doc.replace("workers = 3", "workers = 1")))
    assert serial.outputs == env.outputs


def test_sweep_track_must_be_numeric():
    with pytest.raises(ConfigError, match="track"):
        run_command(parse_config(SWEEP_DOC.replace('track = "fitted_rate_per_s"', 'track = "missing"').replace("count = 6", "count = 2").replace("t_end = 4.0", "t_end = 0.1")))


# outputs -------------------------------------------------------------------------------------


def test_envelope_json_round_trip():
    env = run_command(parse_config(THRESHOLD_DOC))
    back = ResultEnvelope.from_json(env.to_json())
    assert back.to_dict() == env.to_dict()
    assert back.to_json() == env.to_json()


@pytest.mark.parametrize("command", ["modes", "spectrum", "ab-phase", "threshold"])
def test_outputs_byte_identical(tmp_path, command):
    for name in ("a", "b"):
        write_outputs(run_command(parse_config(f'command = "{command}"')), tmp_path / name)
    files = sorted(p.name for p in (tmp_path / "a").iterdir())
    assert files == sorted(p.name for p in (tmp_path / "b").iterdir())
    for f in files:
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_csv_uses_nine_significant_digits(tmp_path):
    write_outputs(run_command(parse_config('command = "spectrum"')), tmp_path)
    row = (tmp_path / "spectrum.csv").read_text().splitlines()[1].split(",")
    assert all(len(v.replace(".", "").replace("-", "").split("e")[0].lstrip("0")) <= 9 for v in row)


# command line -----------------------------------------------------------------------------------


def test_cli_success(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text(THRESHOLD_DOC)
    assert main(["threshold", "--config", str(cfg), "--set", "m=2e-6", "--out", str(tmp_path / "o")]) == EXIT_OK
    data = json.loads((tmp_path / "o" / "result.json").read_text())
    assert data["outputs"]["separated"]["P_p_threshold"] == pytest.approx(3.572e-6, rel=1e-3)
    assert "result.json" in capsys.readouterr().out


def test_cli_exit_codes(tmp_path):
    out = str(tmp_path / "o")
    assert main([]) == EXIT_CONFIG
    assert main(["modes", "--set", "bogus=1", "--out", out]) == EXIT_CONFIG
    assert main(["modes", "--config", str(tmp_path / "missing.toml"), "--out", out]) == EXIT_IO
    assert main(["simulate", "--set", "f_p=21e9", "--out", out]) == EXIT_NUMERIC
    assert main(["modes", "--set", "length=-1.0", "--out", out]) == EXIT_NUMERIC
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["modes", "--out", str(blocker / "sub")]) == EXIT_IO


def test_cli_constants_mode(tmp_path, monkeypatch):
    monkeypatch.setenv("GEMPL_CONSTANTS", "paper")
    assert main(["modes", "--out", str(tmp_path)]) == EXIT_OK
    data = json.loads((tmp_path / "result.json").read_text())
    assert data["constants_mode"] == "paper"
    monkeypatch.setenv("GEMPL_CONSTANTS", "cgs")
    assert main(["modes", "--out", str(tmp_path)]) == EXIT_CONFIG
