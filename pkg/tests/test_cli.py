"""Tests for the corrlab command line."""

from corrlab.cli import EXIT_BUDGET, EXIT_INVALID, EXIT_OK, _cmd_eval, build_parser, main
from corrlab.persistence import read_correspondence, read_json


class _Args:
    source = "sqrt"
    point = "4"
    backward = False


def test_cmd_eval_prints_images(capsys):
    assert _cmd_eval(_Args()) == EXIT_OK
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "sqrt images of 4+0j:"
    assert len(out.splitlines()) == 3


def test_eval_backward_through_main(capsys):
    assert main(["eval", "--source", "square", "--point", "inf", "--backward"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "preimages of inf" in out
    assert out.splitlines()[1].strip() == "inf"


def test_unknown_source_is_invalid_input(capsys):
    assert main(["eval", "--source", "no-such-map", "--point", "1"]) == EXIT_INVALID
    assert "neither a builtin" in capsys.readouterr().err


def test_compose_writes_spec_file(tmp_path, capsys):
    out = tmp_path / "composed.txt"
    assert main(["compose", "--first", "square", "--second", "sqrt", "--out", str(out)]) == EXIT_OK
    assert "(d1, d2) = (2, 2)" in capsys.readouterr().out
    assert read_correspondence(out).degrees == (2, 2)


def test_iterate_beyond_budget_exits_3(capsys):
    assert main(["iterate", "--source", "square", "--n", "13"]) == EXIT_BUDGET
    assert "strategy 'tree'" in capsys.readouterr().err


def test_invalid_config_exits_2_and_writes_nothing(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["pair", "--source", "square", "--nmax", "0", "--out", str(out)]) == EXIT_INVALID
    assert "n_max" in capsys.readouterr().err
    assert not out.exists()


def test_periodic_experiment(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["periodic", "--source", "square", "--period", "1", "--out", str(out)]) == EXIT_OK
    text = capsys.readouterr().out
    assert "[periodic n=1] 3 points, multiplicity 3" in text
    assert read_json(out / "periodic_summary.json")["total_multiplicity"] == 3


def test_periodic_beyond_root_cap_exits_3(tmp_path):
    out = tmp_path / "run"
    assert main(["periodic", "--source", "square", "--period", "12", "--out", str(out)]) == EXIT_BUDGET


def test_experiment_config_file_with_flag_override(tmp_path, capsys):
    config = tmp_path / "exp.json"
    config.write_text('{"kind": "fourier", "fourier": {"n": 3, "grid": 16}}', encoding="utf-8")
    out = tmp_path / "run"
    code = main(["fourier", "--config", str(config), "--fourier-n", "4", "--out", str(out)])
    assert code == EXIT_OK
    assert read_json(out / "fourier.json")["N"] == 4


def test_parser_sets_kind_for_experiments():
    args = build_parser().parse_args(["periodic", "--period", "2"])
    assert args.kind == "periodic"
    assert args.period == 2
