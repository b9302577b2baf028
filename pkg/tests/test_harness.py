import csv
import json
import os
import subprocess
import sys

import pytest

from groundtruth import FIG1
from onlinemil.cli import main
from onlinemil.gridworld import lava_river
from onlinemil.harness import (
    EPISODE_COLUMNS,
    STEP_COLUMNS,
    ExperimentConfig,
    benchmark_scaling,
    classify,
    format_transition,
    parse_trajectory,
    run_experiment,
    transfer,
)
from onlinemil.logic import atom, cell, const

AGENT = const("agent", "object")
SMALL = ["--gen", "7x7", "--episodes", "3"]


def _read_csv(path):
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def test_config_validation():
    for bad in (dict(episodes=-1), dict(d_max=0), dict(step_cap=0), dict(solution_cap=0), dict(gen=None)):
        with pytest.raises(ValueError):
            ExperimentConfig(**bad)


def test_step_cap_scales_with_the_map():
    cfg = ExperimentConfig()
    assert cfg.cap_for(lava_river(10, 10)) == 200
    assert cfg.cap_for(lava_river(100, 100)) == 800
    assert ExperimentConfig(step_cap=17).cap_for(lava_river(100, 100)) == 17


def test_classify_events():
    a, b = atom("at", AGENT, cell(1, 1)), atom("at", AGENT, cell(2, 1))
    alive, dead = atom("alive", AGENT), atom("dead", AGENT)
    assert classify(frozenset({a, alive}), frozenset({a, alive}), False) == "wall"
    assert classify(frozenset({a, alive}), frozenset({b, alive}), False) == "move"
    assert classify(frozenset({a, alive}), frozenset({b, dead}), False) == "death"
    assert classify(frozenset({a, alive}), frozenset({b, alive}), True) == "goal"


def test_artifacts_and_headers(tmp_path):
    res = run_experiment(ExperimentConfig(gen=(7, 7), episodes=3, out_dir=str(tmp_path)))
    assert sorted(os.listdir(tmp_path)) == ["episodes.csv", "program.pl", "steps.csv", "summary.json",
                                            "trajectory.txt"]
    steps = _read_csv(tmp_path / "steps.csv")
    eps = _read_csv(tmp_path / "episodes.csv")
    assert tuple(steps[0]) == STEP_COLUMNS and tuple(eps[0]) == EPISODE_COLUMNS
    assert len(steps) == res.summary["total_steps"] and [int(e["episode"]) for e in eps] == [1, 2, 3]
    assert (tmp_path / "program.pl").read_text() == res.hypothesis.dump()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["final_dynamics"] == res.hypothesis.size()[1]
    kb = lava_river(7, 7).kb()
    assert parse_trajectory((tmp_path / "trajectory.txt").read_text(), kb.signatures) == res.transitions


def test_zero_episodes(tmp_path):
    res = run_experiment(ExperimentConfig(episodes=0, out_dir=str(tmp_path)))
    assert res.steps == [] and res.episodes == []
    assert res.summary["success_rate"] == 0.0 and res.summary["first_success_episode"] is None
    assert _read_csv(tmp_path / "steps.csv") == []


def test_unwritable_output_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError):
        run_experiment(ExperimentConfig(episodes=1, out_dir=str(blocker / "sub")))


def test_same_seed_same_bytes(tmp_path):
    for d in ("a", "b"):
        run_experiment(ExperimentConfig(gen=(7, 7), episodes=4, seed=5, out_dir=str(tmp_path / d)))
    for name in os.listdir(tmp_path / "a"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_trajectory_format():
    s = frozenset({atom("at", AGENT, cell(1, 1)), atom("alive", AGENT)})
    s2 = frozenset({atom("at", AGENT, cell(2, 1)), atom("alive", AGENT)})
    mv = atom("move", const("east", "direction"))
    line = format_transition(s, mv, s2)
    kb = lava_river(7, 7).kb()
    assert parse_trajectory(line + "\n% comment\n\n", kb.signatures) == [(s, mv, s2)]
    with pytest.raises(ValueError, match="line 1"):
        parse_trajectory("at(agent,c(1,1)) | move(east)\n", kb.signatures)
    with pytest.raises(ValueError, match="line 2"):
        parse_trajectory(line + "\nat(agent,c(1,1)) | fly(up) | alive(agent)\n", kb.signatures)


def test_transfer_of_published_theory():
    res = transfer(FIG1, ExperimentConfig(gen=(30, 30), episodes=1))
    assert res.episodes[0]["success"] == 1 and res.episodes[0]["explored_steps"] == 0
    assert res.summary["clauses_added"] == 0 and res.summary["clauses_pruned"] == 0


def test_benchmark_scaling_shape():
    out = benchmark_scaling(lava_river(10, 10), lava_river(30, 30), repeats=1)
    assert [r["trigger"] for r in out["triggers"]] == ["move", "wall", "move_again", "death"]
    assert out["max_node_ratio"] == 1.0


# -- command line ------------------------------------------------------------------


def test_cli_run_writes_artifacts(tmp_path, capsys):
    assert main(["run", *SMALL, "--seed", "1", "--out-dir", str(tmp_path)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["episodes"] == 3
    assert (tmp_path / "steps.csv").exists()


def test_cli_dump_then_transfer(tmp_path, capsys):
    prog = tmp_path / "program.pl"
    assert main(["dump-program", "--episodes", "10", "--output", str(prog)]) == 0
    capsys.readouterr()
    assert prog.read_text().startswith("% abstractions")
    assert main(["transfer", str(prog), "--gen", "40x40"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["first_success_episode"] == 1 and summary["clauses_added"] == 0


def test_cli_replay(tmp_path, capsys):
    run_dir = tmp_path / "run"
    assert main(["run", *SMALL, "--out-dir", str(run_dir)]) == 0
    capsys.readouterr()
    out = tmp_path / "replayed"
    assert main(["replay", str(run_dir / "trajectory.txt"), "--gen", "7x7", "--passes", "2",
                 "--out-dir", str(out)]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["passes"] == 2 and summary["transitions"] > 0
    assert (out / "program.pl").read_text() == (run_dir / "program.pl").read_text()


def test_cli_bench_scale(capsys):
    assert main(["bench-scale", "--large", "20x20", "--repeats", "1"]) == 0
    assert json.loads(capsys.readouterr().out)["max_node_ratio"] == 1.0


def test_cli_custom_map_and_metarules(tmp_path, capsys):
    m = tmp_path / "room.txt"
    m.write_text("#####\n#@..#\n#...#\n#..G#\n#####\n")
    mr = tmp_path / "shapes.txt"
    mr.write_text("chain: P(X,Y) :- Q(X,Z), R(Z,Y).\nprecondition_pair: P(X,Y) :- Q(X,Y), R(Y).\n")
    assert main(["run", "--map", str(m), "--metarules", str(mr), "--episodes", "2", "--solution-cap", "0"]) == 0
    assert json.loads(capsys.readouterr().out)["episodes"] == 2


@pytest.mark.parametrize("argv", [
    ["run", "--map", "/nonexistent/map.txt"],
    ["transfer", "/nonexistent/program.pl"],
    ["run", "--episodes", "-1"],
    ["run", "--d-max", "0"],
])
def test_cli_errors_exit_nonzero(argv, capsys):
    assert main(argv) == 1
    assert capsys.readouterr().err.startswith("error:")


def test_cli_rejects_conflicting_map_flags():
    with pytest.raises(SystemExit) as e:
        main(["run", "--map", "x.txt", "--gen", "5x5"])
    assert e.value.code == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "onlinemil", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    for cmd in ("run", "replay", "transfer", "bench-scale", "dump-program"):
        assert cmd in out.stdout
