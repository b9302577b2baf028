"""The evolving theory ⟨Abs, Dyn, Con⟩ kept as a Top Program.

Generalisation adds every (non-redundant) explanation the metarule engine
finds for an unpredicted change; specialisation deletes the top-level rules
that produced a hallucinated change. A falsified rule is wrong for good in a
deterministic world, so its unfolded form is tombstoned and never re-added.
"""

from __future__ import annotations

import copy
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .background import BackgroundKB
from .induction import (
    AbductionCache,
    EngineConfig,
    InductionStats,
    PredicateRegistry,
    Solution,
    is_placeholder,
    metarule_induction,
)
from .inference import ModeTable
from .logic import ABSTRACTION, ADD, DEL, Atom, Clause, clause_hash, parse_clause, reduce_clause, subsumes, unfold

log = logging.getLogger(__name__)


class InconsistentTrace(RuntimeError):
    """A false positive that no recorded rule produced."""


@dataclass
class ClauseStats:
    fired: int = 0
    contradicted: int = 0
    born: int = -1
    # came from a loaded program rather than from induction in this run
    prior: bool = False


@dataclass
class GeneralizeReport:
    added: List[Clause] = field(default_factory=list)
    abstractions_added: List[Clause] = field(default_factory=list)
    inexpressible: List[Atom] = field(default_factory=list)
    candidates: int = 0


@dataclass
class CompressReport:
    reduced: List[Clause] = field(default_factory=list)
    collected: List[Clause] = field(default_factory=list)


class Hypothesis:
    def __init__(self, registry: Optional[PredicateRegistry] = None, probation: int = 10):
        self.registry = registry if registry is not None else PredicateRegistry()
        # steps a rule must survive unrefuted before it may absorb more specific rules
        self.probation = probation
        self.rules: Dict[str, Dict[str, Clause]] = {ADD: {}, DEL: {}}
        self.clause_stats: Dict[str, ClauseStats] = {}
        self.tombstones: Dict[str, int] = {}
        self._key: Dict[Clause, str] = {}
        self._flat: Dict[str, Clause] = {}
        self._semantic: Dict[str, str] = {}
        self._modes: Tuple = (None, None, None)

    # -- views --------------------------------------------------------------

    @property
    def abs(self) -> List[Clause]:
        return self.registry.clauses()

    @property
    def dyn(self) -> List[Clause]:
        return self.dynamics()

    @property
    def con(self) -> List[Clause]:
        return self.constraints()

    def dynamics(self) -> List[Clause]:
        return [self.rules[ADD][k] for k in sorted(self.rules[ADD])]

    def constraints(self) -> List[Clause]:
        return [self.rules[DEL][k] for k in sorted(self.rules[DEL])]

    def definitions(self) -> Dict[str, Clause]:
        return self.registry.definitions()

    def size(self) -> Tuple[int, int, int]:
        return len(self.registry), len(self.rules[ADD]), len(self.rules[DEL])

    def modes(self, kb: BackgroundKB) -> ModeTable:
        kb_id, version, table = self._modes
        if kb_id != id(kb) or version != self.registry.version:
            table = ModeTable(kb, self.definitions())
            self._modes = (id(kb), self.registry.version, table)
        return table

    def key_of(self, c: Clause) -> str:
        return self._key[c]

    def flat(self, c: Clause) -> Clause:
        return self._flat[self._key[c]]

    def __contains__(self, c: Clause) -> bool:
        return c in self._key

    def snapshot(self) -> "Hypothesis":
        h = Hypothesis(self.registry.copy(), self.probation)
        h.rules = {p: dict(r) for p, r in self.rules.items()}
        h.clause_stats = copy.deepcopy(self.clause_stats)
        h.tombstones = dict(self.tombstones)
        h._key = dict(self._key)
        h._flat = dict(self._flat)
        h._semantic = dict(self._semantic)
        return h

    # -- bookkeeping --------------------------------------------------------

    def _struct(self, c: Clause) -> Clause:
        reg = self.registry
        return Clause(c.head, tuple(reg.to_struct(b) for b in c.body), c.provenance)

    def add_rule(self, c: Clause, prior: bool = False) -> bool:
        """Insert a named dynamics/removal rule; ``False`` if already present.

        ``prior`` rules count as confirmed from the start.
        """
        if c.provenance not in (ADD, DEL):
            raise ValueError("only add/del rules live in Dyn/Con, got %s" % c.provenance)
        for b in c.body:
            if b.pred.startswith("#"):
                raise ValueError("rule body uses an unregistered placeholder %s" % b.pred)
        struct = self._struct(c)
        key = clause_hash(struct)
        if key in self.rules[c.provenance]:
            return False
        flat = reduce_clause(unfold(c, self.definitions()))
        sem = clause_hash(flat)
        self.rules[c.provenance][key] = c
        self._key[c] = key
        self._flat[key] = flat
        self._semantic[sem] = key
        self.clause_stats[key] = ClauseStats(born=c.origin_step, prior=prior)
        return True

    def remove_rule(self, c: Clause, falsified: bool) -> None:
        key = self._key.pop(c)
        del self.rules[c.provenance][key]
        flat = self._flat.pop(key)
        sem = clause_hash(flat)
        if self._semantic.get(sem) == key:
            del self._semantic[sem]
        if falsified:
            self.tombstones[sem] = self.tombstones.get(sem, 0) + 1
            self.clause_stats[key].contradicted += 1

    def register_abstraction(self, c: Clause) -> str:
        """Register a readable abstraction clause, keeping its name if free."""
        return self.registry.reuse_or_register(c.head.args, c.body)[0]

    # -- refinement operators -------------------------------------------------

    def generalize(self, fn_atoms: Iterable[Atom], context: Iterable[Atom], kb: BackgroundKB,
                   cfg: Optional[EngineConfig] = None, provenance: str = ADD, step: int = -1,
                   cache: Optional[AbductionCache] = None,
                   stats: Optional[InductionStats] = None) -> GeneralizeReport:
        """Add explanations for unpredicted changes (into Dyn for adds, Con for removes)."""
        fn_atoms = sorted(set(fn_atoms), key=str)
        if not fn_atoms:
            raise ValueError("generalize needs at least one false negative")
        cfg = cfg or EngineConfig()
        context = frozenset(context)
        report = GeneralizeReport()
        reusable = self.reusable()
        for goal in fn_atoms:
            sols = metarule_induction(goal, context, kb, self.registry, _uncapped(cfg), provenance,
                                      cache=cache, stats=stats, origin_step=step, commit=False,
                                      reusable=reusable)
            report.candidates += len(sols)
            if not sols:
                report.inexpressible.append(goal)
                continue
            for sol in self.select(sols, cfg.max_solutions_per_goal):
                self._commit(sol, step, report)
        return report

    def reusable(self) -> List[str]:
        """Abstractions reachable from confirmed rules.

        Only these are offered to the search as ready-made building blocks;
        offering every unverified invention makes the candidate set explode
        right after the first spike.
        """
        defs = self.definitions()
        stack = [b.pred for r in self.rules.values() for c in r.values() if self.confirmed(c) for b in c.body]
        live = set()
        while stack:
            p = stack.pop()
            if p in live or p not in defs:
                continue
            live.add(p)
            stack.extend(b.pred for b in defs[p].body)
        return sorted(live)

    def select(self, sols: Sequence[Solution], cap: Optional[int]) -> List[Solution]:
        """Drop retained and falsified explanations, keep the ``cap`` most general."""
        out = []
        for sol in sols:
            if sol.semantic in self.tombstones or sol.semantic in self._semantic:
                continue
            out.append(sol)
        out.sort(key=lambda s: (len(s.flat.body), s.semantic))
        return out[:cap] if cap is not None else out

    def _commit(self, sol: Solution, step: int, report: GeneralizeReport) -> None:
        reg = self.registry
        for c in sol.abstractions:
            name, created = reg.register_struct(c, step)
            if created:
                report.abstractions_added.append(reg.by_name[name].clause)
        top = Clause(sol.top.head, tuple(reg.to_named(b) for b in sol.top.body), sol.top.provenance, step)
        if self.add_rule(top):
            report.added.append(top)

    def specialize(self, fp_atoms: Iterable[Atom], firing_trace: Mapping[Atom, Iterable[Clause]]) -> List[Clause]:
        """Delete every top-level rule that produced one of ``fp_atoms``."""
        blamed: Dict[str, Clause] = {}
        for a in sorted(set(fp_atoms), key=str):
            clauses = firing_trace.get(a)
            if not clauses:
                raise InconsistentTrace("no rule recorded for false positive %s" % (a,))
            for c in clauses:
                if c in self._key:
                    blamed[self._key[c]] = c
        pruned = [blamed[k] for k in sorted(blamed)]
        for c in pruned:
            self.remove_rule(c, falsified=True)
        return pruned

    def credit(self, firing_trace: Mapping[Atom, Iterable[Clause]], confirmed: Iterable[Atom]) -> None:
        """Count a firing for every rule that predicted an observed change."""
        for a in confirmed:
            for c in firing_trace.get(a, ()):
                k = self._key.get(c)
                if k is not None:
                    self.clause_stats[k].fired += 1

    def compress_gc(self, step: Optional[int] = None) -> CompressReport:
        """Program reduction followed by garbage collection of abstractions.

        A rule is dropped (not tombstoned) when another retained rule with
        the same head θ-subsumes it, so predicts everything it does, and the
        general rule has earned trust: it fired correctly after it was
        induced, or it has gone ``probation`` steps unrefuted. Then every
        abstraction unreachable from Dyn ∪ Con is retired.
        """
        report = CompressReport()
        for prov in (ADD, DEL):
            keys = sorted(self.rules[prov])
            supported = [k for k in keys if self._trusted(self.clause_stats[k], step)]
            dropped = set()
            for k in keys:
                flat_k = self._flat[k]
                for g in supported:
                    if g == k or g in dropped:
                        continue
                    if subsumes(self._flat[g], flat_k):
                        dropped.add(k)
                        break
            for k in sorted(dropped):
                c = self.rules[prov][k]
                report.reduced.append(c)
                self.remove_rule(c, falsified=False)
        report.collected = self.collect_garbage()
        return report

    def confirmed(self, c: Clause) -> bool:
        """True once the rule has predicted a change that actually happened."""
        k = self._key.get(c)
        if k is None:
            return False
        st = self.clause_stats[k]
        return st.prior or st.fired > 0

    def _trusted(self, st: ClauseStats, step: Optional[int]) -> bool:
        if st.prior or st.fired > 0:
            return True
        return step is not None and step - st.born >= self.probation

    def collect_garbage(self) -> List[Clause]:
        defs = self.definitions()
        live = set()
        stack = [b.pred for r in self.rules.values() for c in r.values() for b in c.body]
        while stack:
            p = stack.pop()
            if p in live or p not in defs:
                continue
            live.add(p)
            stack.extend(b.pred for b in defs[p].body)
        dead = [c for c in self.registry.clauses() if c.head.pred not in live]
        for c in reversed(dead):
            self.registry.retire(c.head.pred)
        return dead

    # -- text dump ----------------------------------------------------------

    def dump(self) -> str:
        lines = ["% abstractions"]
        lines += [str(c) for c in self.abs]
        lines.append("% dynamics")
        lines += [str(c) for c in self.dynamics()]
        lines.append("% constraints")
        lines += [str(c) for c in self.constraints()]
        return "\n".join(lines) + "\n"

    @classmethod
    def load(cls, text: str, kb: BackgroundKB) -> "Hypothesis":
        """Inverse of :meth:`dump`. Predicate names are preserved."""
        h = cls()
        sigs = {p: s.arg_sorts for p, s in kb.signatures.items()}
        section = None
        pending: List[str] = []
        rules: List[Tuple[str, str]] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line:
                continue
            if line.startswith("%"):
                word = line[1:].strip()
                if word in ("abstractions", "dynamics", "constraints"):
                    section = word
                continue
            if section == "abstractions":
                pending.append(line)
            elif section in ("dynamics", "constraints"):
                rules.append((section, line))
            else:
                raise ValueError("clause outside a section: %r" % line)
        # abstractions may reference each other in any order
        while pending:
            progress = False
            for line in list(pending):
                try:
                    c = parse_clause(line, sigs)
                except ValueError:
                    continue
                h.registry.register_named(c)
                sigs[c.head.pred] = c.head.sorts
                pending.remove(line)
                progress = True
            if not progress:
                raise ValueError("unresolvable abstractions: %s" % "; ".join(pending))
        for section, line in rules:
            prov = ADD if section == "dynamics" else DEL
            c = parse_clause(line, sigs, prov)
            if c.provenance != prov:
                raise ValueError("%s rule in %s section" % (c.provenance, section))
            h.add_rule(c, prior=True)
        return h


def _uncapped(cfg: EngineConfig) -> EngineConfig:
    return dataclasses.replace(cfg, max_solutions_per_goal=None)
