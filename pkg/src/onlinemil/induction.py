"""Metarule-guided abduction with predicate invention and reuse.

Given an unexplained ground observation, :func:`metarule_induction` finds
every way of instantiating the metarules so that the observation follows
from the current context, inventing intermediate predicates for body
literals that no known predicate explains. Search is carried out over
*structural* predicate identities: an invented predicate is named by the
hash of its canonical definition (``#<hash>``), children included, so two
derivations of the same concept collide no matter where they were found.
Only the solutions that are kept are committed to the
:class:`PredicateRegistry`, which hands out the readable ``p1, p2, ...``
names.

Restrictions that keep the search finite and independent of map size:

* a metarule whose body is its head re-labelled (identity) is only used for
  the top clause; below the top it would only rename a predicate;
* every existential variable must be bound by a known (non-invented) body
  literal, and the known literals must admit an evaluation order in which
  each background query has a bound open-sort argument;
* the top clause must be evaluable from the state alone (nothing bound), as
  it is during forward prediction;
* a body never contains the same ground literal twice.
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .background import BACKGROUND, INVENTED, BackgroundKB, Signature
from .inference import Inference, ModeTable
from .logic import (
    ABSTRACTION,
    ADD,
    CONST,
    DEL,
    VAR,
    Atom,
    Clause,
    Term,
    canonical_form,
    clause_hash,
    digest,
    lift,
    reduce_clause,
    unfold,
)
from .metarules import Metarule, default_metarules

log = logging.getLogger(__name__)

_INVENT = object()


def placeholder(key: str) -> str:
    return "#" + key


def is_placeholder(pred: str) -> bool:
    return pred.startswith("#")


def structural_key(head_args: Sequence[Term], body: Sequence[Atom]) -> str:
    """Identity of an invented predicate from its (placeholder) definition."""
    return digest(("inv", canonical_form(body, head_args)))


@dataclass
class RegistryEntry:
    key: str
    name: str
    clause: Clause      # readable form, body uses registry names
    struct: Clause      # placeholder form, body uses ``#key`` names
    signature: Signature


class PredicateRegistry:
    """Global map from canonical definition hash to invented predicate."""

    def __init__(self, prefix: str = "p"):
        self.prefix = prefix
        self.entries: Dict[str, RegistryEntry] = {}
        self.by_name: Dict[str, RegistryEntry] = {}
        self.next_index = 1
        self.version = 0
        self.retired = 0

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, name: str) -> bool:
        return name in self.by_name

    def to_struct(self, a: Atom) -> Atom:
        e = self.by_name.get(a.pred)
        return Atom(placeholder(e.key), a.args) if e is not None else a

    def to_named(self, a: Atom) -> Atom:
        if is_placeholder(a.pred):
            return Atom(self.entries[a.pred[1:]].name, a.args)
        return a

    def key_of(self, head_args: Sequence[Term], body: Sequence[Atom]) -> str:
        return structural_key(head_args, [self.to_struct(b) for b in body])

    def register_struct(self, struct: Clause, origin_step: int = -1) -> Tuple[str, bool]:
        """Register a placeholder-form definition whose children are registered."""
        key = struct.head.pred[1:]
        e = self.entries.get(key)
        if e is not None:
            return e.name, False
        name = "%s%d" % (self.prefix, self.next_index)
        self.next_index += 1
        head = Atom(name, struct.head.args)
        body = tuple(self.to_named(b) for b in struct.body)
        clause = Clause(head, body, ABSTRACTION, origin_step)
        sig = Signature(name, head.sorts, INVENTED)
        e = RegistryEntry(key, name, clause, struct, sig)
        self.entries[key] = e
        self.by_name[name] = e
        self.version += 1
        return name, True

    def reuse_or_register(self, head_args: Sequence[Term], body: Sequence[Atom],
                          origin_step: int = -1) -> Tuple[str, bool]:
        """Existing symbol for an alpha-equivalent definition, else a fresh one."""
        sbody = tuple(self.to_struct(b) for b in body)
        for b in sbody:
            if is_placeholder(b.pred) and b.pred[1:] not in self.entries:
                raise KeyError("body references unregistered predicate %s" % b.pred)
        key = structural_key(head_args, sbody)
        struct = Clause(Atom(placeholder(key), tuple(head_args)), sbody, ABSTRACTION)
        return self.register_struct(struct, origin_step)

    def register_named(self, clause: Clause) -> str:
        """Register a readable definition under its own head name (loading dumps)."""
        sbody = tuple(self.to_struct(b) for b in clause.body)
        key = structural_key(clause.head.args, sbody)
        e = self.entries.get(key)
        if e is not None:
            return e.name
        name = clause.head.pred
        if name in self.by_name:
            raise ValueError("predicate %s is already defined differently" % name)
        struct = Clause(Atom(placeholder(key), clause.head.args), sbody, ABSTRACTION)
        c = Clause(clause.head, clause.body, ABSTRACTION, clause.origin_step)
        e = RegistryEntry(key, name, c, struct, Signature(name, c.head.sorts, INVENTED))
        self.entries[key] = e
        self.by_name[name] = e
        digits = name[len(self.prefix):]
        if name.startswith(self.prefix) and digits.isdigit():
            self.next_index = max(self.next_index, int(digits) + 1)
        self.version += 1
        return name

    def retire(self, name: str) -> None:
        e = self.by_name.pop(name)
        del self.entries[e.key]
        self.version += 1
        self.retired += 1

    def definitions(self) -> Dict[str, Clause]:
        return {e.name: e.clause for e in self.entries.values()}

    def struct_definitions(self) -> Dict[str, Clause]:
        return {placeholder(e.key): e.struct for e in self.entries.values()}

    def signatures(self) -> List[Signature]:
        return [e.signature for e in sorted(self.entries.values(), key=lambda e: _name_order(e.name))]

    def clauses(self) -> List[Clause]:
        return [e.clause for e in sorted(self.entries.values(), key=lambda e: _name_order(e.name))]

    def copy(self) -> "PredicateRegistry":
        r = PredicateRegistry(self.prefix)
        r.entries = dict(self.entries)
        r.by_name = dict(self.by_name)
        r.next_index = self.next_index
        r.version = self.version
        r.retired = self.retired
        return r


def _name_order(name: str):
    digits = name.lstrip("abcdefghijklmnopqrstuvwxyz_")
    return (len(name) - len(digits), name[: len(name) - len(digits)], int(digits) if digits.isdigit() else 0, name)


def reuse_or_register(body: Sequence[Atom], registry: PredicateRegistry,
                      head_args: Optional[Sequence[Term]] = None) -> str:
    """Module-level form of :meth:`PredicateRegistry.reuse_or_register`.

    Without ``head_args`` the head exports every body variable in first
    occurrence order.
    """
    if head_args is None:
        seen: Dict[Term, None] = {}
        for b in body:
            for t in b.args:
                if t.kind == VAR:
                    seen.setdefault(t)
        head_args = list(seen)
    return registry.reuse_or_register(head_args, body)[0]


@dataclass
class EngineConfig:
    d_max: int = 4
    metarules: List[Metarule] = field(default_factory=default_metarules)
    max_solutions_per_goal: Optional[int] = 64
    # deepest level at which registered invented predicates may be reused
    reuse_depth: int = 1
    # memoise subgoals within a call when no shared cache is given
    memoize: bool = True

    def __post_init__(self):
        if self.d_max < 0:
            raise ValueError("d_max must be non-negative")
        if self.max_solutions_per_goal is not None and self.max_solutions_per_goal < 1:
            raise ValueError("max_solutions_per_goal must be positive or None")


class AbductionCache:
    """Memo of (ground subgoal, remaining depth) -> structural solutions.

    Valid for one context and one registry version; :meth:`bind` drops the
    entries when either changes.
    """

    def __init__(self):
        self.memo: Dict[tuple, Tuple[str, ...]] = {}
        self.defs: Dict[str, Clause] = {}
        self.flat: Dict[str, Clause] = {}
        self.rep: Dict[str, str] = {}
        self.sem_of: Dict[str, str] = {}
        self.tag = None
        self.hits = 0

    def bind(self, context: frozenset, registry_version: int, reusable: Optional[frozenset] = None) -> None:
        tag = (context, registry_version, reusable)
        if tag != self.tag:
            self.memo.clear()
            self.defs.clear()
            self.flat.clear()
            self.rep.clear()
            self.sem_of.clear()
            self.tag = tag


@dataclass
class Solution:
    """One explanation: a top clause plus the abstractions it relies on."""

    top: Clause
    abstractions: Tuple[Clause, ...]
    signatures: Tuple[Signature, ...]
    key: str
    # the top clause unfolded to primitives and reduced, and its hash
    flat: Optional[Clause] = None
    semantic: str = ""

    def clauses(self) -> List[Clause]:
        return [self.top, *self.abstractions]


@dataclass
class InductionStats:
    nodes: int = 0
    cache_hits: int = 0
    raw_solutions: int = 0


class _Search:
    def __init__(self, kb: BackgroundKB, registry: PredicateRegistry, cfg: EngineConfig,
                 context: frozenset, cache: Optional[AbductionCache], stats: InductionStats,
                 reusable: Optional[frozenset] = None):
        self.kb = kb
        self.cfg = cfg
        self.stats = stats
        self.cache = cache
        self.defs: Dict[str, Clause] = registry.struct_definitions()
        # placeholder -> reduced primitive definition; semantic hash -> placeholder
        self.flat: Dict[str, Clause] = cache.flat if cache is not None else {}
        self.rep: Dict[str, str] = cache.rep if cache is not None else {}
        self.rep_key: Dict[str, str] = cache.sem_of if cache is not None else {}
        if cache is not None:
            self.defs.update(cache.defs)
        for e in sorted(registry.entries.values(), key=lambda e: _name_order(e.name)):
            name = placeholder(e.key)
            if name not in self.flat:
                self.rep.setdefault(self.semantic(e.struct)[1], name)
        self.modes = ModeTable(kb, self.defs)
        self.inf = Inference(kb, self.defs, context, self.modes)
        known = [s for s in kb.signatures.values() if s.source != INVENTED]
        reused = [Signature(placeholder(e.key), e.signature.arg_sorts, INVENTED) for e in registry.entries.values()
                  if reusable is None or e.name in reusable]
        self.known_by_arity: Dict[int, List[Signature]] = {}
        self.reused_by_arity: Dict[int, List[Signature]] = {}
        for s in sorted(known, key=lambda s: s.predicate):
            self.known_by_arity.setdefault(s.arity, []).append(s)
        for s in sorted(known + reused, key=lambda s: s.predicate):
            self.reused_by_arity.setdefault(s.arity, []).append(s)
        self.metarules = sorted(cfg.metarules, key=lambda m: m.name)

    def semantic(self, c: Clause) -> Tuple[Clause, str]:
        """Reduced primitive form of ``c`` and its hash; memoised for definitions."""
        name = c.head.pred
        if is_placeholder(name) and name in self.flat:
            f = self.flat[name]
            return f, self.rep_key[name]
        f = reduce_clause(unfold(c, self.flat))
        h = clause_hash(Clause(Atom("_" if is_placeholder(name) else name, f.head.args), f.body, f.provenance))
        if is_placeholder(name):
            self.flat[name] = f
            self.rep_key[name] = h
        return f, h

    # subgoal expansion; returns sorted placeholder keys, one per meaning
    def expand(self, args: Tuple[Term, ...], depth: int) -> Tuple[str, ...]:
        ck = (args, self.cfg.d_max - depth)
        if self.cache is not None:
            hit = self.cache.memo.get(ck)
            if hit is not None:
                self.stats.cache_hits += 1
                return hit
        found: Dict[str, None] = {}
        for body, head in self._bodies(args, depth):
            name = placeholder(structural_key(head.args, body))
            d = self.defs.get(name)
            if d is None:
                d = Clause(Atom(name, head.args), body, ABSTRACTION)
            sem = self.semantic(d)[1]
            rep = self.rep.setdefault(sem, name)
            if rep == name and name not in self.defs:
                self.defs[name] = d
                if self.cache is not None:
                    self.cache.defs[name] = d
            found[rep[1:]] = None
        out = tuple(sorted(found))
        if self.cache is not None:
            self.cache.memo[ck] = out
        return out

    def top(self, goal: Atom, provenance: str) -> Dict[str, Tuple[Clause, Clause]]:
        """Semantic hash -> (top clause, reduced primitive form), first found kept."""
        found: Dict[str, Tuple[Clause, Clause]] = {}
        for body, head in self._bodies(goal.args, 0, goal.pred):
            if self.modes.order(body, ()) is None:
                continue
            c = Clause(head, body, provenance)
            f, h = self.semantic(c)
            found.setdefault(h, (c, f))
        return found

    def _bodies(self, args: Tuple[Term, ...], depth: int, head_pred: str = "_"):
        """Yield lifted (body, head) pairs for a ground goal at ``depth``."""
        d_max = self.cfg.d_max
        if depth > d_max:
            return
        arity = len(args)
        for m in self.metarules:
            if m.arity != arity or (depth > 0 and m.is_identity):
                continue
            theta: Dict[str, Term] = {}
            ok = True
            for v, t in zip(m.head[1], args):
                if theta.setdefault(v, t) != t or m.sorts.get(v, t.sort) != t.sort:
                    ok = False
                    break
            if not ok:
                continue
            self.stats.nodes += 1
            options = []
            for _, targs in m.body:
                opts: list = []
                vocab = self.reused_by_arity if depth <= self.cfg.reuse_depth else self.known_by_arity
                for sig in vocab.get(len(targs), ()):
                    if all(
                        (v not in theta or theta[v].sort == s) and m.sorts.get(v, s) == s
                        for v, s in zip(targs, sig.arg_sorts)
                    ):
                        opts.append(sig)
                if depth + 1 <= d_max:
                    opts.append(_INVENT)
                options.append(opts)
            for choice in itertools.product(*options):
                yield from self._instantiate(m, theta, choice, args, depth, head_pred)

    def _instantiate(self, m: Metarule, theta, choice, goal_args, depth, head_pred):
        var_sort = {v: t.sort for v, t in theta.items()}
        for v, s in m.sorts.items():
            var_sort.setdefault(v, s)
        known: List[Atom] = []
        invented: List[Tuple[int, Tuple[str, ...]]] = []
        known_vars = set()
        for i, ((_, targs), c) in enumerate(zip(m.body, choice)):
            if c is _INVENT:
                invented.append((i, targs))
                continue
            for v, s in zip(targs, c.arg_sorts):
                if var_sort.setdefault(v, s) != s:
                    return
            known_vars.update(targs)
        for v in m.existentials():
            if v not in known_vars or v not in var_sort:
                return
        terms = {v: Term(VAR, v, s) for v, s in var_sort.items()}
        positions: Dict[int, Atom] = {}
        for i, ((_, targs), c) in enumerate(zip(m.body, choice)):
            if c is not _INVENT:
                positions[i] = Atom(c.predicate, tuple(terms[v] for v in targs))
        known = list(positions.values())
        head_terms = {terms[v] for v in m.head[1]}
        if known and self.modes.order(known, head_terms) is None:
            return
        binding = {terms[v]: t for v, t in theta.items()}
        for b in self.inf.solve(known, binding):
            ground: Dict[int, Atom] = {i: Atom(a.pred, tuple(b[t] for t in a.args)) for i, a in positions.items()}
            goals = [tuple(b[terms[v]] for v in targs) for _, targs in invented]
            kids = []
            for g in goals:
                ks = self.expand(g, depth + 1)
                if not ks:
                    break
                kids.append(ks)
            else:
                for pick in itertools.product(*kids):
                    body = dict(ground)
                    for (i, _), k, g in zip(invented, pick, goals):
                        body[i] = Atom(placeholder(k), g)
                    lits = [body[i] for i in sorted(body)]
                    if len(set(lits)) != len(lits):
                        continue
                    head, lbody = lift(Atom(head_pred, goal_args), lits)
                    if depth > 0 and len(lbody) == 1 and lbody[0].args == head.args:
                        continue
                    yield lbody, head


def metarule_induction(goal: Atom, context: Iterable[Atom], kb: BackgroundKB, registry: PredicateRegistry,
                       cfg: Optional[EngineConfig] = None, provenance: str = ADD, depth: int = 0,
                       cache: Optional[AbductionCache] = None, stats: Optional[InductionStats] = None,
                       origin_step: int = -1, commit: bool = True,
                       reusable: Optional[Iterable[str]] = None) -> List[Solution]:
    """All metarule derivations of ``goal`` in ``context`` within the depth budget.

    ``goal`` is ground; the returned clauses are lifted. With ``commit`` the
    invented predicates of the kept solutions are registered in
    ``registry`` and the clauses use registry names; otherwise they keep
    their ``#<hash>`` placeholders and the registry is left untouched.
    Explanations that unfold to the same reduced primitive clause are one
    solution. Solutions are ordered most general first (fewest primitive
    literals, then hash) and truncated to ``cfg.max_solutions_per_goal``.
    ``reusable`` restricts which registered predicates the search may build
    on (all of them when ``None``).
    """
    cfg = cfg or EngineConfig()
    if provenance not in (ADD, DEL):
        raise ValueError("top-level provenance must be add or del")
    if not goal.is_ground():
        raise ValueError("goal %s is not ground" % (goal,))
    if depth > cfg.d_max:
        return []
    stats = stats if stats is not None else InductionStats()
    context = frozenset(context)
    if reusable is not None:
        reusable = frozenset(reusable)
    # subgoals repeat heavily inside one search, so a private memo is used
    # when no shared cache is supplied
    if cache is None and cfg.memoize:
        cache = AbductionCache()
    if cache is not None:
        cache.bind(context, registry.version, reusable)
    search = _Search(kb, registry, cfg, context, cache, stats, reusable)
    if depth == 0:
        tops = search.top(goal, provenance)
    else:
        tops = {}
        for k in search.expand(goal.args, depth):
            d = search.defs[placeholder(k)]
            c = Clause(Atom(goal.pred, d.head.args), (Atom(placeholder(k), d.head.args),), provenance)
            f, h = search.semantic(c)
            tops.setdefault(h, (c, f))
    stats.raw_solutions += len(tops)

    # most general first: fewest primitive literals once unfolded
    solutions = []
    for h, (top, flat) in tops.items():
        closure = _closure(top, search.defs)
        solutions.append((len(flat.body), h, top, closure, flat))
    solutions.sort(key=lambda s: s[:2])
    if cfg.max_solutions_per_goal is not None:
        solutions = solutions[: cfg.max_solutions_per_goal]

    out = []
    for _, key, top, closure, flat in solutions:
        if not commit:
            sigs = tuple(Signature(c.head.pred, c.head.sorts, INVENTED) for c in closure)
            out.append(Solution(top, tuple(closure), sigs, key, flat, key))
            continue
        names = []
        for c in closure:
            names.append(registry.register_struct(c, origin_step)[0])
        named_top = Clause(top.head, tuple(registry.to_named(b) for b in top.body), top.provenance, origin_step)
        abs_ = tuple(registry.by_name[n].clause for n in names)
        sigs = tuple(registry.by_name[n].signature for n in names)
        out.append(Solution(named_top, abs_, sigs, key, flat, key))
    if not out:
        log.info("no explanation for %s(%s) within depth %d", provenance, goal, cfg.d_max)
    return out


def _closure(top: Clause, defs: Mapping[str, Clause]) -> List[Clause]:
    """Placeholder definitions reachable from ``top``, children first."""
    order: List[Clause] = []
    seen = set()

    def visit(pred):
        if pred in seen or not is_placeholder(pred):
            return
        seen.add(pred)
        d = defs[pred]
        for b in d.body:
            visit(b.pred)
        order.append(d)

    for b in top.body:
        visit(b.pred)
    return order
