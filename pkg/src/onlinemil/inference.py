"""Goal-directed evaluation of clause bodies over a context.

A context is the current state (plus the action atom) together with the
background knowledge. Invented predicates are resolved top-down through
their single defining clause, with answers memoised per call pattern, so
nothing is ever materialised bottom-up over the whole grid.

Literal selection is mode driven: state and action literals are always
answerable, background literals need a bound argument of an open sort and
an invented literal is answerable when its definition admits such an
ordering given the bound head positions.
"""

from __future__ import annotations

from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .background import ACTION, BACKGROUND, INVENTED, STATE, BackgroundKB, UnknownPredicate
from .logic import CONST, VAR, Atom, Clause, Term


class Inadmissible(RuntimeError):
    """No literal of a body can be evaluated without scanning an open domain."""


class StratificationError(RuntimeError):
    pass


class ModeTable:
    """Admissibility of (predicate, bound positions) pairs.

    Depends only on the definitions and the KB, never on a context, so one
    table can be shared by many :class:`Inference` objects.
    """

    def __init__(self, kb: BackgroundKB, definitions: Mapping[str, Clause]):
        self.kb = kb
        self.defs = definitions
        self._memo: Dict[Tuple[str, Tuple[bool, ...]], bool] = {}
        self._active: set = set()

    def source(self, pred: str) -> str:
        sig = self.kb.signatures.get(pred)
        if sig is not None and sig.source != INVENTED:
            return sig.source
        if pred in self.defs:
            return INVENTED
        raise UnknownPredicate(pred)

    def admissible(self, pred: str, bound: Tuple[bool, ...]) -> bool:
        src = self.source(pred)
        if src in (STATE, ACTION):
            return True
        if src == BACKGROUND:
            return self.kb.mode_ok(pred, bound)
        key = (pred, bound)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if pred in self._active:
            raise StratificationError("cyclic definition through %s" % pred)
        self._active.add(pred)
        try:
            d = self.defs[pred]
            bound_vars = {t for t, b in zip(d.head.args, bound) if b and t.kind == VAR}
            ok = self.order(d.body, bound_vars) is not None
        finally:
            self._active.discard(pred)
        self._memo[key] = ok
        return ok

    def literal_ok(self, lit: Atom, bound_vars) -> bool:
        mask = tuple(t.kind == CONST or t in bound_vars for t in lit.args)
        return self.admissible(lit.pred, mask)

    def order(self, body: Sequence[Atom], bound_vars) -> Optional[List[Atom]]:
        """A greedy admissible evaluation order, or ``None``.

        Binding more variables never makes a literal inadmissible, so the
        greedy closure finds an order whenever one exists.
        """
        bound = set(bound_vars)
        remaining = list(body)
        out = []
        while remaining:
            for i, lit in enumerate(remaining):
                if self.literal_ok(lit, bound):
                    out.append(lit)
                    bound.update(t for t in lit.args if t.kind == VAR)
                    del remaining[i]
                    break
            else:
                return None
        return out


class Inference:
    """Query answering for one context."""

    def __init__(self, kb: BackgroundKB, definitions: Mapping[str, Clause], context: Iterable[Atom],
                 modes: Optional[ModeTable] = None):
        self.kb = kb
        self.defs = definitions
        self.modes = modes if modes is not None else ModeTable(kb, definitions)
        self.facts: Dict[str, List[Tuple[Term, ...]]] = {}
        for a in sorted(context, key=str):
            self.facts.setdefault(a.pred, []).append(a.args)
        self._memo: Dict[tuple, List[Tuple[Term, ...]]] = {}
        self._active: set = set()
        self.calls = 0

    def holds(self, a: Atom) -> bool:
        return bool(self.query(a.pred, a.args))

    def query(self, pred: str, pattern: Sequence[Optional[Term]]) -> List[Tuple[Term, ...]]:
        """Ground argument tuples of ``pred`` matching ``pattern`` (``None`` = free)."""
        pattern = tuple(pattern)
        src = self.modes.source(pred)
        if src in (STATE, ACTION):
            return [r for r in self.facts.get(pred, ()) if all(p is None or p == x for p, x in zip(pattern, r))]
        if src == BACKGROUND:
            return self.kb.answers(pred, pattern)
        key = (pred, pattern)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        if key in self._active:
            raise StratificationError("cyclic call %s%s" % (pred, pattern))
        self._active.add(key)
        self.calls += 1
        try:
            d = self.defs[pred]
            binding: Dict[Term, Term] = {}
            for t, p in zip(d.head.args, pattern):
                if p is None:
                    continue
                if t.kind == VAR:
                    if binding.setdefault(t, p) != p:
                        self._memo[key] = []
                        return []
                elif t != p:
                    self._memo[key] = []
                    return []
            rows = []
            seen = set()
            for b in self.solve(d.body, binding):
                row = tuple(b[t] if t.kind == VAR else t for t in d.head.args)
                if row not in seen:
                    seen.add(row)
                    rows.append(row)
        finally:
            self._active.discard(key)
        self._memo[key] = rows
        return rows

    def solve(self, body: Sequence[Atom], binding: Optional[Mapping[Term, Term]] = None) -> List[Dict[Term, Term]]:
        """All extensions of ``binding`` making every body literal true."""
        out: List[Dict[Term, Term]] = []
        self._solve(list(body), dict(binding or {}), out)
        return out

    def _solve(self, remaining: List[Atom], b: Dict[Term, Term], out: List[Dict[Term, Term]]) -> None:
        if not remaining:
            out.append(b)
            return
        for i, lit in enumerate(remaining):
            if self.modes.literal_ok(lit, b):
                break
        else:
            raise Inadmissible("no admissible literal among %s" % ", ".join(map(str, remaining)))
        rest = remaining[:i] + remaining[i + 1:]
        pattern = tuple(t if t.kind == CONST else b.get(t) for t in lit.args)
        for row in self.query(lit.pred, pattern):
            nb = b
            ok = True
            for t, v in zip(lit.args, row):
                if t.kind == VAR:
                    cur = nb.get(t)
                    if cur is None:
                        if nb is b:
                            nb = dict(b)
                        nb[t] = v
                    elif cur != v:
                        ok = False
                        break
            if ok:
                self._solve(rest, nb, out)
