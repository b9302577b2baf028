"""Forward prediction, the transition equation and error signals."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, Optional, Set

from .background import BackgroundKB
from .inference import Inference
from .logic import Atom, Clause

State = FrozenSet[Atom]


@dataclass
class Prediction:
    adds: FrozenSet[Atom] = frozenset()
    dels: FrozenSet[Atom] = frozenset()
    # ground atom -> top-level clauses whose head produced it
    add_trace: Dict[Atom, Set[Clause]] = field(default_factory=dict)
    del_trace: Dict[Atom, Set[Clause]] = field(default_factory=dict)

    @property
    def firing_trace(self) -> Dict[Atom, Set[Clause]]:
        out = {a: set(cs) for a, cs in self.add_trace.items()}
        for a, cs in self.del_trace.items():
            out.setdefault(a, set()).update(cs)
        return out

    def is_empty(self) -> bool:
        return not self.adds and not self.dels


@dataclass
class ErrorSignals:
    fp_add: FrozenSet[Atom] = frozenset()
    fn_add: FrozenSet[Atom] = frozenset()
    fp_rem: FrozenSet[Atom] = frozenset()
    fn_rem: FrozenSet[Atom] = frozenset()

    def total(self) -> int:
        return len(self.fp_add) + len(self.fn_add) + len(self.fp_rem) + len(self.fn_rem)

    def __bool__(self) -> bool:
        return self.total() > 0


def _fire(inf: Inference, clauses: Iterable[Clause]):
    produced: Dict[Atom, Set[Clause]] = {}
    for c in clauses:
        for b in inf.solve(c.body):
            head = Atom(c.head.pred, tuple(b[t] if t.kind == "var" else t for t in c.head.args))
            produced.setdefault(head, set()).add(c)
    return produced


def predict(h, state: Iterable[Atom], action: Optional[Atom], kb: BackgroundKB) -> Prediction:
    """Evaluate every dynamics and removal rule in ``state`` plus ``action``.

    Abstractions are answered goal-directed from the rule bodies; nothing is
    materialised over the grid.
    """
    context = set(state)
    if action is not None:
        context.add(action)
    inf = Inference(kb, h.definitions(), context, h.modes(kb))
    add_trace = _fire(inf, h.dynamics())
    del_trace = _fire(inf, h.constraints())
    return Prediction(frozenset(add_trace), frozenset(del_trace), add_trace, del_trace)


def step_model(state: Iterable[Atom], p: Prediction) -> State:
    """``(state \\ dels) | adds``: deletion first, so an atom in both survives."""
    return (frozenset(state) - p.dels) | p.adds


def error_signals(p: Prediction, s_prev: Iterable[Atom], s_next: Iterable[Atom]) -> ErrorSignals:
    """The four difference sets between predicted and observed changes.

    Missed changes are ``E+ \\ adds`` and ``E- \\ dels``. A prediction is
    false when the atom does not end up as predicted: an add absent from
    ``s_next``, or a delete (not also re-added) still present in it. Adding
    an atom that already holds is therefore not an error. All four sets are
    empty exactly when ``step_model`` reproduces ``s_next``. Atoms that
    neither changed nor were predicted to change are never inspected.
    """
    s_prev, s_next = frozenset(s_prev), frozenset(s_next)
    e_plus = s_next - s_prev
    e_minus = s_prev - s_next
    return ErrorSignals(
        fp_add=p.adds - s_next,
        fn_add=e_plus - p.adds,
        fp_rem=(p.dels - p.adds) & s_next,
        fn_rem=e_minus - p.dels,
    )
