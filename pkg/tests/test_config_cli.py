import os

import pytest

from hetmix import cli
from hetmix.config import ConfigParseError, parse_config
from hetmix.integrator import ConfigError, Trajectory
from hetmix.model import AlphaBelowPiError, HomophilyOutOfRangeError, ModelParams


def test_empty_document_gives_defaults():
    cfg = parse_config("")
    assert cfg.params == ModelParams()
    assert cfg.params.gamma == 1 / 7 and cfg.params.alpha == (0.45, 0.27)
    assert cfg.integration.dt == 0.05 and cfg.integration.horizon == 500.0


def test_values_comments_and_fractions():
    cfg = parse_config(
        "# calibration\n"
        "gamma = 1/10\n"
        "r0 = 3   # both groups\n"
        "r02 = 4\n"
        "n2 = 0.3\n"
        "dt = 0.1\n"
        "h_values = linspace(0, 1, 5)\n"
    )
    assert cfg.params.gamma == 0.1
    assert cfg.params.r0 == (3.0, 4.0)
    assert cfg.params.n == (0.7, 0.3)
    assert cfg.integration.dt == 0.1
    assert cfg.get("h_values") == (0.0, 0.25, 0.5, 0.75, 1.0)


def test_homophily_out_of_range_names_h():
    with pytest.raises(HomophilyOutOfRangeError) as info:
        parse_config("h = 1.5")
    assert info.value.field == "h"


def test_alpha_below_pi():
    with pytest.raises(AlphaBelowPiError) as info:
        parse_config("alpha2 = 0.005")
    assert info.value.field == "alpha2"


@pytest.mark.parametrize(
    "text, line, key",
    [
        ("gamma = 0.1\nbogus = 3\n", 2, "bogus"),
        ("\n\nh = 0.1\nh = 0.2\n", 4, "h"),
        ("dt = fast\n", 1, "dt"),
        ("just words\n", 1, None),
    ],
)
def test_parse_errors_carry_line_numbers(text, line, key):
    with pytest.raises(ConfigParseError) as info:
        parse_config(text)
    assert info.value.line == line and info.value.key == key
    assert f"line {line}" in str(info.value)


def test_integration_settings_are_validated():
    with pytest.raises(ConfigError):
        parse_config("dt = 0")


def test_sweep_axis_needs_values():
    with pytest.raises(ConfigParseError):
        parse_config("axis1 = h")
    with pytest.raises(ConfigParseError):
        parse_config("axis1 = colour\naxis1_values = 1, 2")


# -- dispatch ---------------------------------------------------------------

def run(argv, capsys):
    code = cli.dispatch(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_simulate_writes_trajectory(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, stdout, _ = run(["simulate", "--set", "horizon=20", "--out", str(out)], capsys)
    assert code == 0
    lines = out.read_text().splitlines()
    assert lines[0] == "t,S1,S2,I1,I2,Q1,Q2,R,D,C1,C2"
    assert len(lines) == 22
    assert "wrote 21 rows" in stdout and "deaths=" in stdout and "reported=" in stdout


def test_outputs_are_byte_identical(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("r02 = 3.5\nh = 0.5\nn2_points = 9\nr02_values = 3, 3.5\nh_values = 0, 1\n")
    paths = []
    for k in range(2):
        out = tmp_path / f"fig8_{k}.csv"
        assert run(["fig8", "--config", str(cfg), "--out", str(out)], capsys)[0] == 0
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    text = paths[0].read_text()
    assert text.count("# block:") == 4
    assert "# block: r02=3.5, h=1" in text
    assert "\r" not in text


@pytest.mark.parametrize("command", ["fig6", "fig7"])
def test_figure_commands(tmp_path, capsys, command):
    out = tmp_path / f"{command}.csv"
    code, stdout, _ = run([command, "--set", "n2_points=5", "--set", "dt=0.1",
                           "--out", str(out)], capsys)
    assert code == 0
    text = out.read_text()
    assert text.count("# block:") == 4 and text.count("# shape:") == 8
    assert "wrote 20 rows in 4 blocks" in stdout


def test_sweep_command(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("axis1 = r02\naxis1_values = 2.5, 3\naxis2 = h\naxis2_values = 0, 0.5, 1\ndt = 0.1\n")
    out = tmp_path / "s.csv"
    code, stdout, _ = run(["sweep", "--config", str(cfg), "--out", str(out)], capsys)
    assert code == 0 and "wrote 6 rows" in stdout
    assert len(out.read_text().splitlines()) == 7


def test_paradox_command(tmp_path, capsys):
    out = tmp_path / "p.csv"
    code, stdout, _ = run(["paradox", "--set", "window_points=5", "--set", "dt=0.1",
                           "--out", str(out)], capsys)
    assert code == 0
    assert stdout.count("paradox=") == 3
    assert out.read_text().count("# paradox:") == 3


def test_oracle_single_group(capsys):
    code, stdout, _ = run(["oracle", "--r0", "2.5", "--alpha", "0.45"], capsys)
    assert code == 0
    assert round(float(stdout), 3) == 0.491


def test_oracle_two_group(capsys):
    code, stdout, _ = run(["oracle", "--set", "r02=3.5"], capsys)
    assert code == 0 and stdout.startswith("s_inf=(")


def test_invalid_value_fails_without_output(tmp_path, capsys):
    out = tmp_path / "traj.csv"
    code, _, err = run(["simulate", "--set", "h=1.5", "--out", str(out)], capsys)
    assert code == 1
    assert "h" in err and "error" in err
    assert not out.exists()


def test_partial_file_removed_on_failure(tmp_path, capsys, monkeypatch):
    def broken(self, stream=None):
        stream.write("t,S1\n0,")
        raise OSError("disk full")

    monkeypatch.setattr(Trajectory, "to_csv", broken)
    out = tmp_path / "traj.csv"
    code, _, err = run(["simulate", "--set", "horizon=1", "--out", str(out)], capsys)
    assert code == 1 and "disk full" in err
    assert os.listdir(tmp_path) == []


def test_existing_output_survives_failure(tmp_path, capsys, monkeypatch):
    out = tmp_path / "traj.csv"
    out.write_text("previous\n")
    monkeypatch.setattr(Trajectory, "to_csv", lambda self, stream=None: 1 / 0)
    with pytest.raises(ZeroDivisionError):
        cli.dispatch(["simulate", "--set", "horizon=1", "--out", str(out)])
    assert out.read_text() == "previous\n"
    assert os.listdir(tmp_path) == ["traj.csv"]


def test_unknown_subcommand_exits_nonzero(capsys):
    with pytest.raises(SystemExit) as info:
        cli.dispatch(["bogus"])
    assert info.value.code != 0


def test_unknown_set_key(capsys):
    code, _, err = run(["simulate", "--set", "colour=blue"], capsys)
    assert code == 1 and "colour" in err


def test_impute_end_to_end(tmp_path, capsys):
    means = tmp_path / "group_means.csv"
    means.write_text(
        "wave_id,wave_start,dimension,group,mean\n"
        "w1,2020-03-01,trust,a,0.5\nw1,2020-03-01,trust,b,0.75\n"
        "w2,2020-03-15,trust,a,0.25\nw2,2020-03-15,trust,b,0.125\n"
    )
    shares = tmp_path / "district_shares.csv"
    shares.write_text("district,group,share\nd1,a,0.25\nd1,b,0.75\n")
    out = tmp_path / "imputed.csv"
    code, stdout, _ = run(["impute", "--means", str(means), "--shares", str(shares),
                           "--end", "2020-03-22", "--out", str(out)], capsys)
    assert code == 0 and "wrote 4 rows" in stdout
    assert out.read_text().splitlines() == [
        "district,dimension,week_sunday,value",
        "d1,trust,2020-03-01,0.6875",
        "d1,trust,2020-03-08,0.15625",
        "d1,trust,2020-03-15,0.15625",
        "d1,trust,2020-03-22,0.15625",
    ]
