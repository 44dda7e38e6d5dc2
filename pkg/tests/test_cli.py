import json

import pytest

from nopast.cli import build_parser, main
from nopast.run import Run
from nopast.utils import store
from nopast.utils.data import MEMORY_SWEEP
from nopast.utils.errors import ContractViolation
from nopast.utils.log import LOG_FILE

FAST = ["--runs", "1", "--iters", "1", "--gp_restarts", "2", "--acq_budget", "64"]


def test_run_defaults():
    parser, _ = build_parser()
    options = parser.parse_args(["run"])
    assert options.command is Run
    config = Run(options).experiment_config()
    assert config.benchmark == "branin"
    assert config.strategies == ["gp_hedge", "no_past_bo"]
    assert config.memories == [0.7]
    assert config.etas == [4.0]
    assert config.hedge_etas == [1.0]
    assert (config.runs, config.iterations, config.initial_points) == (25, 100, 5)
    assert config.out == "./results"
    assert config.normalize


def test_list_flags():
    parser, _ = build_parser()
    options = parser.parse_args(
        ["run", "-s", "random, no_past_bo", "-m", "0.7,1", "--eta", "2,4", "--no_normalize"]
    )
    config = Run(options).experiment_config()
    assert config.strategies == ["random", "no_past_bo"]
    assert config.memories == [0.7, 1.0]
    assert config.etas == [2.0, 4.0]
    assert not config.normalize


def test_memory_sweep_keyword():
    parser, _ = build_parser()
    options = parser.parse_args(["run", "--memory", "sweep"])
    assert options.memory == list(MEMORY_SWEEP)


def test_run_then_summarize_and_compare(tmp_path, capsys):
    out = str(tmp_path)
    assert main(["run", "-o", out, "-s", "random,gp_hedge"] + FAST) == 0
    assert "gp_hedge_eta1" in capsys.readouterr().out
    assert (tmp_path / LOG_FILE).exists()

    with open(tmp_path / store.SUMMARY_FILE) as f:
        summary = json.load(f)
    assert [cell["name"] for cell in summary["cells"]] == ["random", "gp_hedge_eta1"]

    assert main(["summarize", "-o", out]) == 0
    assert "random" in capsys.readouterr().out

    assert main(["compare", "-o", out, "--reference", "random"]) == 0
    assert "mean_paired_diff" in capsys.readouterr().out


def test_config_file_sets_defaults(tmp_path):
    config = tmp_path / "experiment.toml"
    config.write_text(
        'strategy = "random"\nruns = 1\niters = 1\ngp_restarts = 2\nacq_budget = 64\n'
    )
    out = tmp_path / "out"
    assert main(["run", "-c", str(config), "-o", str(out), "--iters", "2"]) == 0
    summary = store.load_summary(str(out))
    assert summary.config.strategies == ["random"]
    assert summary.config.runs == 1
    assert summary.config.iterations == 2


def test_config_file_rejects_unknown_keys(tmp_path):
    config = tmp_path / "experiment.toml"
    config.write_text("kernel = 'rbf'\n")
    with pytest.raises(ContractViolation):
        main(["run", "-c", str(config)])


def test_summarize_without_results(tmp_path):
    with pytest.raises(FileNotFoundError):
        main(["summarize", "-o", str(tmp_path)])


def test_config_file_cannot_pick_the_command(tmp_path):
    config = tmp_path / "experiment.toml"
    config.write_text("command = 'summarize'\n")
    with pytest.raises(ContractViolation):
        main(["run", "-c", str(config)])
