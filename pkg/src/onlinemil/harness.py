"""Experiment driver: environment, learner and planner wired together.

Artifacts written to ``out_dir``:

``steps.csv``
    one row per environment step (model size, error counts, refinement
    counts, induction nodes)
``episodes.csv``
    one row per episode (reward, success, steps, planned/explored steps)
``program.pl``
    the final hypothesis dump
``summary.json``
    first success, convergence step, final clause counts

CSV headers are fixed (:data:`STEP_COLUMNS`, :data:`EPISODE_COLUMNS`).
Nothing time-dependent goes into these files, so equal configurations give
byte-identical artifacts.
"""

from __future__ import annotations

import csv
import io
import json
import os
import random
import statistics
import time
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

from .gridworld import (
    DEFAULT_STEP_CAP,
    DEFAULT_STEP_PENALTY,
    EnvState,
    GridMap,
    GOAL,
    action_atom,
    env_step,
    lava_river,
    parse_map,
    reset,
    state_atoms,
)
from .hypothesis import Hypothesis
from .induction import EngineConfig
from .learner import OnlineLearner, StepReport
from .logic import ABSTRACTION, ADD, DEL, Atom, format_state, parse_state
from .metarules import default_metarules, parse_metarules
from .planner import explore_action, goal_test_for, plan, probe_action, situation_key

STEP_COLUMNS = (
    "t", "episode", "action", "abstractions", "dynamics", "constraints",
    "fp_add", "fn_add", "fp_rem", "fn_rem",
    "added_abs", "added_dyn", "added_con", "pruned_abs", "pruned_dyn", "pruned_con",
    "induction_nodes",
)
EPISODE_COLUMNS = ("episode", "reward", "success", "steps", "planned_steps", "explored_steps", "died")


@dataclass
class ExperimentConfig:
    map_path: Optional[str] = None
    gen: Optional[Tuple[int, int]] = (10, 10)
    episodes: int = 120
    d_max: int = 4
    metarules_path: Optional[str] = None
    solution_cap: Optional[int] = 64
    step_penalty: float = DEFAULT_STEP_PENALTY
    # None scales the cap with the map size
    step_cap: Optional[int] = None
    seed: int = 0
    out_dir: Optional[str] = None
    plan_budget: int = 50_000
    # test untried situations before following plans
    probe: bool = True

    def __post_init__(self):
        if self.episodes < 0:
            raise ValueError("episodes must be non-negative")
        if self.d_max < 1:
            raise ValueError("d_max must be at least 1")
        if self.step_cap is not None and self.step_cap < 1:
            raise ValueError("step_cap must be positive")
        if self.solution_cap is not None and self.solution_cap < 1:
            raise ValueError("solution_cap must be positive")
        if self.map_path is None and self.gen is None:
            raise ValueError("need a map file or a generator size")

    def load_map(self) -> GridMap:
        if self.map_path is not None:
            with open(self.map_path, encoding="utf-8") as f:
                return parse_map(f.read())
        return lava_river(*self.gen)

    def cap_for(self, gmap: GridMap) -> int:
        """The configured cap, else ``DEFAULT_STEP_CAP`` widened to ``4 * (W + H)``."""
        if self.step_cap is not None:
            return self.step_cap
        return max(DEFAULT_STEP_CAP, 4 * (gmap.width + gmap.height))

    def engine(self) -> EngineConfig:
        if self.metarules_path is not None:
            with open(self.metarules_path, encoding="utf-8") as f:
                metarules = parse_metarules(f.read())
        else:
            metarules = default_metarules()
        return EngineConfig(self.d_max, metarules, self.solution_cap)


@dataclass
class ExperimentResult:
    steps: List[dict] = field(default_factory=list)
    episodes: List[dict] = field(default_factory=list)
    summary: dict = field(default_factory=dict)
    hypothesis: Optional[Hypothesis] = None
    reports: List[StepReport] = field(default_factory=list)
    transitions: List[Tuple[frozenset, Atom, frozenset]] = field(default_factory=list)


def at_goal(env: EnvState, gmap: GridMap) -> bool:
    return env.alive and gmap.terrain(env.agent_pos) == GOAL


def classify(s_prev: frozenset, s_next: frozenset, reached_goal: bool) -> str:
    """Event type of an observed transition."""
    if any(a.pred == "dead" for a in s_next - s_prev):
        return "death"
    if reached_goal:
        return "goal"
    return "move" if s_prev != s_next else "wall"


def _step_row(rep: StepReport, episode: int, action: str) -> dict:
    e = rep.errors
    a, p = rep.clauses_added, rep.clauses_pruned
    return {
        "t": rep.t, "episode": episode, "action": action,
        "abstractions": rep.model_size[0], "dynamics": rep.model_size[1], "constraints": rep.model_size[2],
        "fp_add": len(e.fp_add), "fn_add": len(e.fn_add), "fp_rem": len(e.fp_rem), "fn_rem": len(e.fn_rem),
        "added_abs": a[ABSTRACTION], "added_dyn": a[ADD], "added_con": a[DEL],
        "pruned_abs": p[ABSTRACTION], "pruned_dyn": p[ADD], "pruned_con": p[DEL],
        "induction_nodes": rep.induction_nodes_expanded,
    }


def run_episodes(learner: OnlineLearner, gmap: GridMap, episodes: int, rng: random.Random,
                 step_penalty: float = DEFAULT_STEP_PENALTY, step_cap: int = DEFAULT_STEP_CAP,
                 plan_budget: int = 50_000, result: Optional[ExperimentResult] = None,
                 probe: bool = True) -> ExperimentResult:
    """Act in ``gmap`` for ``episodes`` episodes (numbered from 1), planning when the model allows it."""
    result = result if result is not None else ExperimentResult()
    kb = learner.kb
    goal_test = goal_test_for(kb)
    tried: set = set()
    tested: set = set()
    first_seen: Dict[str, int] = result.summary.setdefault("first_seen", {})
    for ep in range(1, episodes + 1):
        env = reset(gmap)
        current, pos = None, 0
        reward, planned, explored = 0.0, 0, 0
        while not env.done:
            s = state_atoms(env, gmap)
            # untested situations first, then the plan, then plain exploration
            a = probe_action(learner.h, s, kb, rng, tested) if probe else None
            if a is None:
                if current is None:
                    current, pos = plan(learner.h, s, goal_test, kb, plan_budget), 0
                if current is not None and pos < len(current.actions):
                    a = current.actions[pos]
                    pos += 1
                    planned += 1
            else:
                current = None
                explored += 1
            if a is None:
                current = None
                a = explore_action(learner.h, s, kb, rng, tried=tried)
                explored += 1
            env, reward, _ = env_step(env, gmap, a, step_penalty, step_cap)
            s2 = state_atoms(env, gmap)
            tried.add((s, a))
            tested.add(situation_key(s, a, kb))
            rep = learner.observe_transition(s, action_atom(a), s2)
            result.transitions.append((s, action_atom(a), s2))
            first_seen.setdefault(classify(s, s2, at_goal(env, gmap)), rep.t)
            if rep.errors or rep.changed:
                current = None
            if rep.changed:
                tested.clear()
            result.reports.append(rep)
            result.steps.append(_step_row(rep, ep, a))
        result.episodes.append({
            "episode": ep, "reward": round(reward, 6), "success": int(at_goal(env, gmap)), "steps": env.steps,
            "planned_steps": planned, "explored_steps": explored, "died": int(not env.alive),
        })
    return result


def summarize(result: ExperimentResult) -> dict:
    s = result.summary
    eps = result.episodes
    first = next((e["episode"] for e in eps if e["success"]), None)
    last_change = -1
    for rep in result.reports:
        if rep.errors or rep.changed:
            last_change = rep.t
    h = result.hypothesis
    size = h.size() if h is not None else (0, 0, 0)
    s.update({
        "episodes": len(eps),
        "total_steps": len(result.steps),
        "first_success_episode": first,
        "success_rate": round(sum(e["success"] for e in eps) / len(eps), 6) if eps else 0.0,
        "convergence_step": last_change + 1,
        "final_abstractions": size[0],
        "final_dynamics": size[1],
        "final_constraints": size[2],
        "clauses_added": sum(sum(r.clauses_added.values()) for r in result.reports),
        "clauses_pruned": sum(sum(r.clauses_pruned.values()) for r in result.reports),
    })
    return s


def _csv_text(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def prepare_out_dir(path: str) -> None:
    os.makedirs(path, exist_ok=True)
    if not os.access(path, os.W_OK):
        raise PermissionError("output directory %s is not writable" % path)


def write_artifacts(result: ExperimentResult, out_dir: str) -> Dict[str, str]:
    prepare_out_dir(out_dir)
    files = {
        "steps.csv": _csv_text(result.steps, STEP_COLUMNS),
        "episodes.csv": _csv_text(result.episodes, EPISODE_COLUMNS),
        "program.pl": result.hypothesis.dump() if result.hypothesis is not None else "",
        "summary.json": json.dumps(result.summary, indent=2, sort_keys=True) + "\n",
        "trajectory.txt": record_trajectory(result),
    }
    paths = {}
    for name, text in files.items():
        p = os.path.join(out_dir, name)
        with open(p, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        paths[name] = p
    return paths


def run_experiment(cfg: ExperimentConfig, hypothesis: Optional[Hypothesis] = None) -> ExperimentResult:
    if cfg.out_dir is not None:
        prepare_out_dir(cfg.out_dir)
    gmap = cfg.load_map()
    learner = OnlineLearner(gmap.kb(), cfg.engine(), hypothesis)
    result = run_episodes(learner, gmap, cfg.episodes, random.Random(cfg.seed), cfg.step_penalty,
                          cfg.cap_for(gmap), cfg.plan_budget, probe=cfg.probe)
    result.hypothesis = learner.h
    summarize(result)
    if cfg.out_dir is not None:
        write_artifacts(result, cfg.out_dir)
    return result


def transfer(program_text: str, cfg: ExperimentConfig) -> ExperimentResult:
    """Load a dumped hypothesis and act on the configured map by planning alone.

    Learning stays on, so any clause the loaded program lacks shows up in
    the step log.
    """
    gmap = cfg.load_map()
    h = Hypothesis.load(program_text, gmap.kb())
    return run_experiment(replace(cfg, probe=False), h)


# -- trajectories ----------------------------------------------------------------


def format_transition(s_prev, action: Atom, s_next) -> str:
    return "%s | %s | %s" % (format_state(s_prev), action, format_state(s_next))


def parse_trajectory(text: str, signatures) -> List[Tuple[frozenset, Atom, frozenset]]:
    """One ``state | action | state`` transition per line; ``%`` starts a comment.

    ``signatures`` maps predicates to argument sorts or to KB signatures.
    """
    signatures = {p: getattr(s, "arg_sorts", s) for p, s in signatures.items()}
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("%", 1)[0].strip()
        if not line:
            continue
        parts = line.split("|")
        if len(parts) != 3:
            raise ValueError("line %d: expected 'state | action | state'" % lineno)
        try:
            s_prev = parse_state(parts[0], signatures)
            (action,) = parse_state(parts[1], signatures)
            s_next = parse_state(parts[2], signatures)
        except ValueError as e:
            raise ValueError("line %d: %s" % (lineno, e)) from None
        out.append((s_prev, action, s_next))
    return out


def record_trajectory(result: ExperimentResult) -> str:
    return "".join(format_transition(*tr) + "\n" for tr in result.transitions)


def replay(transitions, learner: OnlineLearner, passes: int = 1) -> List[StepReport]:
    reports = []
    for _ in range(passes):
        for s_prev, action, s_next in transitions:
            reports.append(learner.observe_transition(s_prev, action, s_next))
    return reports


# -- scaling benchmark ---------------------------------------------------------------


@dataclass
class ScaleTrigger:
    name: str
    position: Tuple[int, int]
    action: str


def scale_triggers(gmap: GridMap) -> List[ScaleTrigger]:
    """Equivalent local situations on any lava-river map, in learning order."""
    river = min(x for (x, y), t in gmap.cells.items() if t == "lava")
    return [
        ScaleTrigger("move", (1, 1), "east"),
        ScaleTrigger("wall", (1, 1), "north"),
        ScaleTrigger("move_again", (1, 1), "east"),
        ScaleTrigger("death", (river - 1, 1), "east"),
    ]


def _bench_once(gmap: GridMap, engine: EngineConfig) -> List[Tuple[str, int, float]]:
    learner = OnlineLearner(gmap.kb(), engine)
    out = []
    for trig in scale_triggers(gmap):
        env = EnvState(trig.position)
        nxt, _, _ = env_step(env, gmap, trig.action, step_cap=10 ** 9)
        s, s2 = state_atoms(env), state_atoms(nxt)
        t0 = time.perf_counter()
        rep = learner.observe_transition(s, action_atom(trig.action), s2)
        out.append((trig.name, rep.induction_nodes_expanded, time.perf_counter() - t0))
    return out


def benchmark_scaling(small: GridMap, large: GridMap, engine: Optional[EngineConfig] = None,
                      repeats: int = 3) -> dict:
    """Induction nodes and wall-clock per generalisation step on two map sizes."""
    engine = engine or EngineConfig()
    rows = []
    runs = {"small": [_bench_once(small, engine) for _ in range(repeats)],
            "large": [_bench_once(large, engine) for _ in range(repeats)]}
    for i, trig in enumerate(scale_triggers(small)):
        ns = runs["small"][0][i][1]
        nl = runs["large"][0][i][1]
        ts = statistics.median(r[i][2] for r in runs["small"])
        tl = statistics.median(r[i][2] for r in runs["large"])
        rows.append({
            "trigger": trig.name, "nodes_small": ns, "nodes_large": nl,
            "node_ratio": (nl / ns) if ns else (1.0 if nl == 0 else float("inf")),
            "seconds_small": ts, "seconds_large": tl,
            "time_ratio": (tl / ts) if ts > 0 else 1.0,
        })
    return {
        "small": "%dx%d" % (small.width, small.height),
        "large": "%dx%d" % (large.width, large.height),
        "triggers": rows,
        "max_node_ratio": max(r["node_ratio"] for r in rows),
        "max_time_ratio": max(r["time_ratio"] for r in rows),
    }
