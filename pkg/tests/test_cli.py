"""CLI workflow: every subcommand end to end, headers, and error paths."""

import pytest
from cli_workflow import run_all_subcommands

from jumplab import __version__, cli
from jumplab.fit import import_model
from jumplab.framelog import parse_log


@pytest.fixture(scope="module")
def artifacts(tmp_path_factory):
    return run_all_subcommands(tmp_path_factory.mktemp("cli"))


def test_every_artifact_has_version_header(artifacts):
    assert artifacts
    for name, body in artifacts.items():
        first = body.split(b"\n", 1)[0].decode()
        assert first.startswith(f"# jumplab {__version__} config="), name


def test_run_output_parses_as_log(artifacts):
    log = parse_log(artifacts["log.txt"])
    assert log.game_id == "mario"
    assert [t.hold_frames for t in log.trials] == list(range(1, 25))


def test_extract_outputs(artifacts):
    segments = artifacts["extract/segments.csv"].decode()
    assert "trial_hold,mode,start,end" in segments
    assert "up_control" in segments
    assert "group 0:" in artifacts["extract/groups.txt"].decode()
    assert "track_id" in artifacts["extract/tracks.csv"].decode()


def test_fit_output_recovers_bounds(artifacts):
    model = import_model(artifacts["mario.model"])
    assert (model.min_hold, model.max_hold) == (2, 14)
    assert model.has_control
    assert abs(model.up_control.gravity - -0.08) <= 0.01


def test_simulate_output_covers_requested_holds(artifacts):
    lines = artifacts["sim.csv"].decode().strip().splitlines()
    assert lines[1] == "hold,frame,height"
    holds = {int(line.split(",")[0]) for line in lines[2:]}
    assert holds == {2, 8, 14}


def test_compare_output_lists_models(artifacts):
    lines = artifacts["compare.csv"].decode().strip().splitlines()
    names = {line.split(",")[0] for line in lines[2:]}
    assert names == {"synth00", "synth01", "mario"}


def test_corpus_and_analyze_outputs(artifacts):
    models = [n for n in artifacts if n.startswith("corpus/")
              and n.endswith(".model")]
    assert len(models) == 12
    for name in ("scree.csv", "assignments.csv", "contributions.csv",
                 "projection.csv", "wcss_scan.csv", "control_by_year.csv"):
        assert f"analysis/{name}" in artifacts


def test_cli_errors_exit_nonzero(tmp_path, capsys):
    assert cli.main(["fit", "--log", str(tmp_path / "missing.txt"),
                     "--out", str(tmp_path / "m.model")]) == 1
    assert "jumplab: error:" in capsys.readouterr().err

    bad_cfg = tmp_path / "bad.cfg"
    bad_cfg.write_text("nonsense_key = 3\n")
    assert cli.main(["--config", str(bad_cfg), "corpus",
                     "--out", str(tmp_path / "c")]) == 1
    assert "unknown config key" in capsys.readouterr().err


def test_fit_multiple_logs_need_out_dir(tmp_path, capsys):
    assert cli.main(["fit", "--log", "a", "--log", "b",
                     "--out", str(tmp_path / "m")]) == 1
    assert "--out-dir" in capsys.readouterr().err
