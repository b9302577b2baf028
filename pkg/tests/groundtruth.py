"""Hand-written ground-truth theories and exhaustive trajectories they generate."""

from __future__ import annotations

from collections import deque
from typing import Dict, List, NamedTuple, Tuple

from onlinemil.gridworld import ACTIONS, action_atom, parse_map, reset, state_atoms
from onlinemil.hypothesis import Hypothesis
from onlinemil.world_model import predict, step_model

MOVE = """\
p1(A,B) :- move(C), adjacent(A,C,B).
p2(A,B) :- at(A,C), p1(C,B).
p3(A) :- p2(A,B), not_wall(B).
"""

WALLED_ROOM = """\
#####
#@..#
#...#
#..G#
#####
"""

LAVA_ROOM = """\
#####
#@L.#
#...#
#.LG#
#####
"""


# the published lava theory; mutual exclusion written as removal rules
FIG1 = """\
% abstractions
p4(A,B) :- at(A,B), alive(A).
p3(A,C,D) :- p4(A,B), adjacent(B,C,D).
p2(A,B) :- move(C), p3(A,C,B).
p1(A,B) :- p2(A,B), not_wall(B).
p5(A) :- p2(A,B), is_lava(B).
p6(A) :- p2(A,B), not_wall(B).
% dynamics
add(at(A,B)) :- p1(A,B).
add(dead(A)) :- p5(A).
% constraints
del(at(A,B)) :- at(A,B), p6(A).
del(alive(A)) :- p5(A).
"""


class Theory(NamedTuple):
    name: str
    program: str
    map_text: str


def _program(abstractions: str, dynamics: str, constraints: str) -> str:
    return "%% abstractions\n%s%% dynamics\n%s%% constraints\n%s" % (abstractions, dynamics, constraints)


THEORIES: List[Theory] = [
    Theory("walls_block", _program(
        MOVE,
        "add(at(A,B)) :- p2(A,B), not_wall(B).\n",
        "del(at(A,B)) :- at(A,B), p3(A).\n"), WALLED_ROOM),
    Theory("lava_kills", _program(
        MOVE + "p4(A) :- p2(A,B), is_lava(B).\n",
        "add(at(A,B)) :- p2(A,B), not_wall(B).\nadd(dead(A)) :- p4(A).\n",
        "del(at(A,B)) :- at(A,B), p3(A).\ndel(alive(A)) :- p4(A).\n"), LAVA_ROOM),
    Theory("wall_bump_kills", _program(
        MOVE + "p4(A) :- p2(A,B), wall(B).\n",
        "add(at(A,B)) :- p2(A,B), not_wall(B).\nadd(dead(A)) :- p4(A).\n",
        "del(at(A,B)) :- at(A,B), p3(A).\ndel(alive(A)) :- p4(A).\n"), WALLED_ROOM),
    Theory("lava_marks", _program(
        MOVE + "p4(A) :- p2(A,B), is_lava(B).\n",
        "add(at(A,B)) :- p2(A,B), not_wall(B).\nadd(dead(A)) :- p4(A).\n",
        "del(at(A,B)) :- at(A,B), p3(A).\n"), LAVA_ROOM),
    Theory("goal_trap", _program(
        MOVE + "p4(A) :- p2(A,B), is_goal(B).\n",
        "add(at(A,B)) :- p2(A,B), not_wall(B).\nadd(dead(A)) :- p4(A).\n",
        "del(at(A,B)) :- at(A,B), p3(A).\ndel(alive(A)) :- p4(A).\n"), LAVA_ROOM),
]


def load(theory: Theory):
    gmap = parse_map(theory.map_text)
    kb = gmap.kb()
    return gmap, kb, Hypothesis.load(theory.program, kb)


def transitions(theory: Theory) -> List[Tuple[frozenset, object, frozenset]]:
    """Every transition the theory generates from the start state, breadth first."""
    gmap, kb, h = load(theory)
    s0 = state_atoms(reset(gmap))
    seen = {s0}
    queue = deque([s0])
    out = []
    while queue:
        s = queue.popleft()
        for d in ACTIONS:
            a = action_atom(d)
            s2 = step_model(s, predict(h, s, a, kb))
            out.append((s, a, s2))
            if s2 not in seen:
                seen.add(s2)
                queue.append(s2)
    return out
