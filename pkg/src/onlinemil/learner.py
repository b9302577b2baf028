"""The predict / verify / refine loop."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, FrozenSet, Iterable, List, Optional, Tuple

from .background import BackgroundKB
from .hypothesis import Hypothesis
from .induction import AbductionCache, EngineConfig, InductionStats
from .logic import ABSTRACTION, ADD, DEL, Atom
from .world_model import ErrorSignals, Prediction, error_signals, predict


def _counts() -> Dict[str, int]:
    return {ABSTRACTION: 0, ADD: 0, DEL: 0}


@dataclass
class StepReport:
    t: int
    errors: ErrorSignals
    clauses_added: Dict[str, int] = field(default_factory=_counts)
    clauses_pruned: Dict[str, int] = field(default_factory=_counts)
    model_size: Tuple[int, int, int] = (0, 0, 0)
    induction_nodes_expanded: int = 0
    inexpressible: Tuple[Atom, ...] = ()

    @property
    def changed(self) -> bool:
        return any(self.clauses_added.values()) or any(self.clauses_pruned.values())


class OnlineLearner:
    """Owns the hypothesis and refines it after every observed transition.

    The world state is not owned here; episode boundaries simply mean the
    next ``s_prev`` comes from a fresh reset.
    """

    def __init__(self, kb: BackgroundKB, cfg: Optional[EngineConfig] = None,
                 hypothesis: Optional[Hypothesis] = None, learn: bool = True):
        self.kb = kb
        self.cfg = cfg or EngineConfig()
        self.h = hypothesis if hypothesis is not None else Hypothesis()
        self.learn = learn
        self.t = 0
        self.cache = AbductionCache()
        self.history: List[StepReport] = []

    def predict(self, state: Iterable[Atom], action: Optional[Atom]) -> Prediction:
        return predict(self.h, state, action, self.kb)

    def observe_transition(self, s_prev: Iterable[Atom], action: Atom, s_next: Iterable[Atom]) -> StepReport:
        s_prev, s_next = frozenset(s_prev), frozenset(s_next)
        h = self.h
        p = self.predict(s_prev, action)
        err = error_signals(p, s_prev, s_next)
        report = StepReport(self.t, err)
        h.credit(p.add_trace, p.adds - err.fp_add)
        h.credit(p.del_trace, p.dels - err.fp_rem)
        if self.learn:
            self._refine(p, err, s_prev | {action}, report)
        report.model_size = h.size()
        self.history.append(report)
        self.t += 1
        return report

    def _refine(self, p: Prediction, err: ErrorSignals, context: FrozenSet[Atom], report: StepReport) -> None:
        h = self.h
        if err.fp_add:
            report.clauses_pruned[ADD] += len(h.specialize(err.fp_add, p.add_trace))
        if err.fp_rem:
            report.clauses_pruned[DEL] += len(h.specialize(err.fp_rem, p.del_trace))
        stats = InductionStats()
        inexpressible: List[Atom] = []
        for atoms, prov in ((err.fn_add, ADD), (err.fn_rem, DEL)):
            if not atoms:
                continue
            g = h.generalize(atoms, context, self.kb, self.cfg, prov, self.t, self.cache, stats)
            report.clauses_added[prov] += len(g.added)
            report.clauses_added[ABSTRACTION] += len(g.abstractions_added)
            inexpressible.extend(g.inexpressible)
        # the reduction depends on firing counts, so it runs even on error-free steps
        gc = h.compress_gc(self.t)
        for c in gc.reduced:
            report.clauses_pruned[c.provenance] += 1
        report.clauses_pruned[ABSTRACTION] += len(gc.collected)
        report.induction_nodes_expanded = stats.nodes
        report.inexpressible = tuple(inexpressible)
