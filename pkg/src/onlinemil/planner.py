"""Breadth-first planning over the learned model, with an exploration fallback."""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from .background import BACKGROUND, BackgroundKB
from .gridworld import ACTIONS, AGENT, action_atom
from .logic import Atom, atom
from .world_model import State, predict, step_model

GoalTest = Callable[[State], bool]

DEAD = atom("dead", AGENT)


@dataclass
class Plan:
    actions: List[str] = field(default_factory=list)
    predicted_states: List[State] = field(default_factory=list)

    @property
    def cost(self) -> int:
        return len(self.actions)


@dataclass
class SearchStats:
    expanded: int = 0
    generated: int = 0
    exhausted: bool = False


def goal_test_for(kb: BackgroundKB) -> GoalTest:
    """``at(agent, B)`` with ``is_goal(B)`` in the background."""

    def test(state: State) -> bool:
        for a in state:
            if a.pred == "at" and a.args[0] == AGENT and kb.answers("is_goal", (a.args[1],)):
                return True
        return False

    return test


def plan(h, s0: State, goal_test: GoalTest, kb: BackgroundKB, budget: int = 50_000,
         actions: Sequence[str] = ACTIONS, stats: Optional[SearchStats] = None) -> Optional[Plan]:
    """Shortest action sequence whose predicted states avoid death and end in a goal.

    States are expanded in FIFO order with actions in the fixed order
    ``actions``, so the result is deterministic. ``None`` when the goal is
    unreachable under the model or ``budget`` expansions are used up.
    """
    stats = stats if stats is not None else SearchStats()
    s0 = frozenset(s0)
    if DEAD in s0:
        return None
    if goal_test(s0):
        return Plan([], [s0])
    parent: Dict[State, Tuple[Optional[State], Optional[str]]] = {s0: (None, None)}
    frontier = deque([s0])
    while frontier:
        if stats.expanded >= budget:
            stats.exhausted = True
            return None
        s = frontier.popleft()
        stats.expanded += 1
        for a in actions:
            nxt = step_model(s, predict(h, s, action_atom(a), kb))
            stats.generated += 1
            if nxt in parent or DEAD in nxt:
                continue
            parent[nxt] = (s, a)
            if goal_test(nxt):
                return _unwind(parent, nxt)
            frontier.append(nxt)
    return None


def _unwind(parent, last: State) -> Plan:
    acts: List[str] = []
    states: List[State] = [last]
    cur = last
    while True:
        prev, a = parent[cur]
        if prev is None:
            break
        acts.append(a)
        states.append(prev)
        cur = prev
    return Plan(acts[::-1], states[::-1])


def explore_action(h, state: State, kb: BackgroundKB, rng: random.Random,
                   actions: Sequence[str] = ACTIONS, tried: Optional[set] = None) -> str:
    """Pick an action whose outcome the model cannot predict, else a safe one.

    An empty prediction counts as unknown. With ``tried`` (a set of
    ``(state, action)`` pairs already executed), untried pairs come first.
    Ties are broken with ``rng``; death-predicting actions are only chosen
    when nothing else is left.
    """
    tried = tried if tried is not None else set()
    state = frozenset(state)
    unknown, safe = [], []
    for a in actions:
        p = predict(h, state, action_atom(a), kb)
        if p.is_empty():
            unknown.append(a)
        elif DEAD not in step_model(state, p):
            safe.append(a)
    fresh = [a for a in unknown + safe if (state, a) not in tried]
    pool = [a for a in fresh if a in unknown] or fresh or unknown or safe or list(actions)
    return rng.choice(sorted(pool))


def situation_key(state: State, action: str, kb: BackgroundKB) -> Tuple[str, ...]:
    """Unary background facts that hold at the cell the action moves towards.

    Two actions with the same key look alike to every lifted rule that only
    inspects the destination, so one test covers both.
    """
    here = next((a.args[1] for a in state if a.pred == "at" and a.args[0] == AGENT), None)
    if here is None:
        return ()
    rows = kb.answers("adjacent", (here, action_atom(action).args[0], None))
    if not rows:
        return ("outside",)
    target = rows[0][2]
    names = []
    for name, sig in sorted(kb.signatures.items()):
        if sig.source == BACKGROUND and sig.arg_sorts == ("cell",) and kb.answers(name, (target,)):
            names.append(name)
    return tuple(names)


def probe_action(h, state: State, kb: BackgroundKB, rng: random.Random, tested: set,
                 actions: Sequence[str] = ACTIONS) -> Optional[str]:
    """An action whose situation has not been tried under the current model.

    ``tested`` holds situation keys executed since the hypothesis last
    changed. Safe actions come first. Failing those, an action whose death is
    predicted only by rules that have never been borne out is chosen, so an
    over-general death rule cannot lock the agent out of testing it.
    Returns ``None`` when nothing untested is left.
    """
    safe, doubtful = [], []
    for a in actions:
        if situation_key(state, a, kb) in tested:
            continue
        p = predict(h, state, action_atom(a), kb)
        if DEAD not in step_model(state, p):
            safe.append(a)
        elif not any(h.confirmed(c) for c in p.add_trace.get(DEAD, ())):
            doubtful.append(a)
    pool = safe or doubtful
    return rng.choice(pool) if pool else None
