"""Deterministic lava-crossing gridworld.

Map text uses one character per cell::

    #  wall        .  floor      L  lava
    G  goal        @  start (a floor cell)

States are the fluents ``at(agent, c(x,y))`` plus ``alive(agent)`` or
``dead(agent)``; terrain and adjacency stay in the background KB.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple

from .background import DIRECTIONS, BackgroundKB, grid_kb
from .logic import Atom, atom, cell, const

Coord = Tuple[int, int]

FLOOR, WALL, LAVA, GOAL = "floor", "wall", "lava", "goal"
_CHAR = {".": FLOOR, "#": WALL, "L": LAVA, "G": GOAL, "@": FLOOR}
_SYMBOL = {FLOOR: ".", WALL: "#", LAVA: "L", GOAL: "G"}

AGENT = const("agent", "object")
ACTIONS: Tuple[str, ...] = ("north", "south", "east", "west")

DEFAULT_STEP_PENALTY = 0.01
DEFAULT_STEP_CAP = 200

# the 10x10 lava-river map that ships with the package
SHIPPED_MAP = Path(__file__).with_name("maps") / "lava_10x10.txt"


class MapError(ValueError):
    def __init__(self, msg: str, line: Optional[int] = None, column: Optional[int] = None):
        where = ""
        if line is not None:
            where = "line %d" % line + (", column %d" % column if column is not None else "") + ": "
        super().__init__(where + msg)
        self.line = line
        self.column = column


class EnvError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    cells: Dict[Coord, str]
    start: Coord

    def __post_init__(self):
        for (x, y), t in self.cells.items():
            border = x in (0, self.width - 1) or y in (0, self.height - 1)
            if border and t != WALL:
                raise MapError("boundary cell (%d,%d) is %s, not wall" % (x, y, t), y + 1, x + 1)
        goals = [c for c, t in self.cells.items() if t == GOAL]
        if len(goals) != 1:
            raise MapError("expected exactly one goal, found %d" % len(goals))
        if self.cells.get(self.start) != FLOOR:
            raise MapError("start %s is not a floor cell" % (self.start,))

    @property
    def goal(self) -> Coord:
        return next(c for c, t in self.cells.items() if t == GOAL)

    def terrain(self, c: Coord) -> str:
        return self.cells.get(c, WALL)

    def counts(self) -> Dict[str, int]:
        out = {FLOOR: 0, WALL: 0, LAVA: 0, GOAL: 0}
        for t in self.cells.values():
            out[t] += 1
        return out

    def kb(self) -> BackgroundKB:
        return grid_kb(self.width, self.height, self.cells)

    def to_text(self) -> str:
        rows = []
        for y in range(self.height):
            row = []
            for x in range(self.width):
                row.append("@" if (x, y) == self.start else _SYMBOL[self.cells[(x, y)]])
            rows.append("".join(row))
        return "\n".join(rows) + "\n"


def parse_map(text: str) -> GridMap:
    lines = [ln.rstrip("\r") for ln in text.splitlines()]
    while lines and not lines[-1].strip():
        lines.pop()
    if not lines:
        raise MapError("empty map")
    width = len(lines[0])
    cells: Dict[Coord, str] = {}
    start = None
    for y, line in enumerate(lines):
        if len(line) != width:
            raise MapError("row has %d cells, expected %d" % (len(line), width), y + 1)
        for x, ch in enumerate(line):
            if ch not in _CHAR:
                raise MapError("unknown cell character %r" % ch, y + 1, x + 1)
            if ch == "@":
                if start is not None:
                    raise MapError("second start cell", y + 1, x + 1)
                start = (x, y)
            cells[(x, y)] = _CHAR[ch]
    if start is None:
        raise MapError("no start cell '@'")
    return GridMap(width, len(lines), cells, start)


def lava_river(width: int, height: int) -> GridMap:
    """Walled room crossed by a vertical lava river with a one-cell gap.

    The river starts at column ``width // 2`` and is ``max(1, width // 10)``
    cells wide, so terrain proportions are kept as the map is scaled. The
    agent starts in the top-left corner; the goal is bottom-right.
    """
    if width < 5 or height < 5:
        raise ValueError("lava river needs at least a 5x5 grid")
    cells: Dict[Coord, str] = {}
    river = range(width // 2, min(width - 2, width // 2 + max(1, width // 10)))
    gap = height // 2
    for y in range(height):
        for x in range(width):
            if x in (0, width - 1) or y in (0, height - 1):
                t = WALL
            elif x in river and y != gap:
                t = LAVA
            else:
                t = FLOOR
            cells[(x, y)] = t
    cells[(width - 2, height - 2)] = GOAL
    return GridMap(width, height, cells, (1, 1))


def shipped_map() -> GridMap:
    return parse_map(SHIPPED_MAP.read_text(encoding="utf-8"))


def parse_size(text: str) -> Tuple[int, int]:
    """``"WxH"`` -> ``(W, H)``."""
    w, sep, h = text.lower().partition("x")
    if not sep or not w.isdigit() or not h.isdigit():
        raise ValueError("expected WxH, got %r" % text)
    return int(w), int(h)


@dataclass(frozen=True)
class EnvState:
    agent_pos: Coord
    alive: bool = True
    done: bool = False
    steps: int = 0


def reset(gmap: GridMap) -> EnvState:
    return EnvState(gmap.start)


def env_step(env: EnvState, gmap: GridMap, action: str, step_penalty: float = DEFAULT_STEP_PENALTY,
             step_cap: int = DEFAULT_STEP_CAP) -> Tuple[EnvState, float, bool]:
    if env.done:
        raise EnvError("episode is over")
    if action not in DIRECTIONS:
        raise EnvError("unknown action %r" % action)
    dx, dy = DIRECTIONS[action]
    x, y = env.agent_pos
    target = (x + dx, y + dy)
    kind = gmap.terrain(target)
    steps = env.steps + 1
    pos, alive, reward, done = env.agent_pos, True, 0.0, False
    if kind != WALL:
        pos = target
    if kind == LAVA:
        alive, done = False, True
    elif kind == GOAL:
        done = True
        reward = 1.0 - step_penalty * steps
    if steps >= step_cap:
        done = True
    return replace(env, agent_pos=pos, alive=alive, done=done, steps=steps), reward, done


def state_atoms(env: EnvState, gmap: Optional[GridMap] = None) -> FrozenSet[Atom]:
    x, y = env.agent_pos
    life = atom("alive", AGENT) if env.alive else atom("dead", AGENT)
    return frozenset({atom("at", AGENT, cell(x, y)), life})


def action_atom(direction: str) -> Atom:
    return atom("move", const(direction, "direction"))


def reachable_transitions(gmap: GridMap) -> Iterator[Tuple[EnvState, str, EnvState]]:
    """Every (state, action, successor) from a live agent on a non-wall cell."""
    for (x, y), t in sorted(gmap.cells.items()):
        if t in (WALL, LAVA, GOAL):
            continue
        env = EnvState((x, y))
        for a in ACTIONS:
            nxt, _, _ = env_step(env, gmap, a, step_cap=10 ** 9)
            yield env, a, nxt

