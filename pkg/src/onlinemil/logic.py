"""Flat first-order terms, atoms, clauses and the operations on them.

Terms are either variables or constants and always carry a sort. There are
no function symbols; a grid cell is a single constant whose name is an
``(x, y)`` tuple and which prints as ``c(x,y)``.

The textual syntax used for every log and program dump is::

    head :- lit1, lit2.

with uppercase variables and lowercase constants. Dynamics and removal
rules wrap their head as ``add(at(A,B))`` / ``del(at(A,B))``.
"""

from __future__ import annotations

import hashlib
import itertools
import re
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple, Union

VAR = "var"
CONST = "const"

ABSTRACTION = "abstraction"
ADD = "add"
DEL = "del"
PROVENANCES = (ABSTRACTION, ADD, DEL)


class Term(NamedTuple):
    kind: str
    name: Union[str, Tuple[int, int]]
    sort: str

    @property
    def is_var(self) -> bool:
        return self.kind == VAR

    def __str__(self) -> str:
        if isinstance(self.name, tuple):
            return "c(%d,%d)" % self.name
        return str(self.name)

    def __repr__(self) -> str:
        return "%s:%s" % (self, self.sort)


def var(name: str, sort: str) -> Term:
    return Term(VAR, name, sort)


def const(name, sort: str) -> Term:
    return Term(CONST, name, sort)


def cell(x: int, y: int) -> Term:
    return Term(CONST, (x, y), "cell")


class Atom(NamedTuple):
    pred: str
    args: Tuple[Term, ...]

    @property
    def arity(self) -> int:
        return len(self.args)

    @property
    def sorts(self) -> Tuple[str, ...]:
        return tuple(t.sort for t in self.args)

    def is_ground(self) -> bool:
        return all(t.kind == CONST for t in self.args)

    def variables(self) -> List[Term]:
        return [t for t in self.args if t.kind == VAR]

    def __str__(self) -> str:
        if not self.args:
            return self.pred
        return "%s(%s)" % (self.pred, ",".join(str(t) for t in self.args))

    def __repr__(self) -> str:
        return str(self)


def atom(pred: str, *args: Term) -> Atom:
    return Atom(pred, tuple(args))


@dataclass(frozen=True)
class Clause:
    """A definite clause ``head :- body``.

    ``provenance`` is one of ``abstraction`` (defines an invented
    predicate), ``add`` (dynamics) or ``del`` (removal / constraint).
    """

    head: Atom
    body: Tuple[Atom, ...]
    provenance: str = ABSTRACTION
    origin_step: int = field(default=-1, compare=False)

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValueError("unknown provenance %r" % self.provenance)
        body_vars = {t for lit in self.body for t in lit.args if t.kind == VAR}
        missing = [t for t in self.head.args if t.kind == VAR and t not in body_vars]
        if missing:
            raise ValueError("clause is not range restricted: %s" % ", ".join(map(str, missing)))

    def variables(self) -> List[Term]:
        seen: Dict[Term, None] = {}
        for lit in (self.head,) + self.body:
            for t in lit.args:
                if t.kind == VAR:
                    seen.setdefault(t)
        return list(seen)

    def __str__(self) -> str:
        return format_clause(self)


Substitution = Dict[Term, Term]


# -- unification -------------------------------------------------------------


def walk(t: Term, s: Substitution) -> Term:
    while t.kind == VAR and t in s:
        t = s[t]
    return t


def unify(a1: Atom, a2: Atom, s: Optional[Substitution] = None) -> Optional[Substitution]:
    """Most general unifier of two flat atoms, or ``None``.

    Sorts are checked: a variable never binds to a term of another sort.
    The returned substitution is idempotent (fully resolved).
    """
    if a1.pred != a2.pred or len(a1.args) != len(a2.args):
        return None
    s = dict(s) if s else {}
    for x, y in zip(a1.args, a2.args):
        x, y = walk(x, s), walk(y, s)
        if x == y:
            continue
        if x.sort != y.sort:
            return None
        if x.kind == VAR:
            s[x] = y
        elif y.kind == VAR:
            s[y] = x
        else:
            return None
    return {v: walk(v, s) for v in s}


def apply(s: Substitution, a: Atom) -> Atom:
    if not s:
        return a
    return Atom(a.pred, tuple(walk(t, s) if t.kind == VAR else t for t in a.args))


def apply_clause(s: Substitution, c: Clause) -> Clause:
    return Clause(apply(s, c.head), tuple(apply(s, b) for b in c.body), c.provenance, c.origin_step)


# -- canonical forms ---------------------------------------------------------


def _literal_signature(lit: Atom) -> tuple:
    return (
        lit.pred,
        len(lit.args),
        tuple(t.sort for t in lit.args),
        tuple("?" if t.kind == VAR else str(t) for t in lit.args),
    )


def _render(lits: Sequence[Atom], head_vars: Sequence[Term]) -> tuple:
    names: Dict[Term, int] = {}
    for v in head_vars:
        if v.kind == VAR:
            names.setdefault(v, len(names))
    out = []
    for lit in lits:
        args = []
        for t in lit.args:
            if t.kind == VAR:
                args.append((names.setdefault(t, len(names)), t.sort))
            else:
                args.append((str(t), t.sort))
        out.append((lit.pred, tuple(args)))
    head = tuple((names[v], v.sort) if v.kind == VAR else (str(v), v.sort) for v in head_vars)
    return head, tuple(out)


def canonical_form(body: Sequence[Atom], head_args: Sequence[Term] = ()) -> tuple:
    """Representation invariant under variable renaming and body reordering.

    Literals are grouped by (predicate, arity, sorts, constant pattern); the
    group order is fixed and only literals inside a tie group are permuted,
    keeping the lexicographically smallest rendering. ``head_args`` pins
    the variables exported through a head, so two definitions that differ
    only in head argument order get different forms.
    """
    if not body:
        raise ValueError("canonical form of an empty body")
    groups: Dict[tuple, List[Atom]] = {}
    for lit in body:
        groups.setdefault(_literal_signature(lit), []).append(lit)
    ordered = [groups[k] for k in sorted(groups)]
    if all(len(g) == 1 for g in ordered):
        return _render([g[0] for g in ordered], head_args)
    # branch and bound: at each position only the literals rendering smallest
    # under the current variable numbering can start a minimal rendering
    names0: Dict[Term, int] = {}
    for v in head_args:
        if v.kind == VAR:
            names0.setdefault(v, len(names0))
    slots = [i for i, g in enumerate(ordered) for _ in g]
    best: List[Optional[list]] = [None]

    def render(lit, names):
        new = dict(names)
        args = []
        for t in lit.args:
            if t.kind == VAR:
                args.append((new.setdefault(t, len(new)), t.sort))
            else:
                args.append((str(t), t.sort))
        return (lit.pred, tuple(args)), new

    def dfs(pos, remaining, names, prefix):
        if pos == len(slots):
            if best[0] is None or prefix < best[0]:
                best[0] = list(prefix)
            return
        g = slots[pos]
        options = [(render(lit, names), j) for j, lit in enumerate(remaining[g])]
        low = min(r for (r, _), _ in options)
        if best[0] is not None and prefix + [low] > best[0][: pos + 1]:
            return
        for (r, new), j in options:
            if r != low:
                continue
            rest = list(remaining)
            rest[g] = remaining[g][:j] + remaining[g][j + 1:]
            prefix.append(r)
            dfs(pos + 1, rest, new, prefix)
            prefix.pop()

    dfs(0, [tuple(g) for g in ordered], names0, [])
    head = tuple((names0[v], v.sort) if v.kind == VAR else (str(v), v.sort) for v in head_args)
    return head, tuple(best[0])


def digest(obj) -> str:
    return hashlib.sha1(repr(obj).encode()).hexdigest()[:16]


def canonical_hash(body: Sequence[Atom], head_args: Sequence[Term] = ()) -> str:
    return digest(canonical_form(body, head_args))


def clause_hash(c: Clause) -> str:
    """Hash of a whole clause, up to variable renaming and body order."""
    head_form = (c.provenance, c.head.pred)
    return digest((head_form, canonical_form(c.body, c.head.args)))


def lift(head: Atom, body: Sequence[Atom]) -> Tuple[Atom, Tuple[Atom, ...]]:
    """Replace every constant by a variable of the same sort.

    Equal constants map to the same variable; names follow first occurrence,
    head first.
    """
    mapping: Dict[Term, Term] = {}

    def lv(t: Term) -> Term:
        if t.kind == VAR:
            return t
        v = mapping.get(t)
        if v is None:
            v = mapping[t] = Term(VAR, _var_name(len(mapping)), t.sort)
        return v

    new_head = Atom(head.pred, tuple(lv(t) for t in head.args))
    new_body = tuple(Atom(b.pred, tuple(lv(t) for t in b.args)) for b in body)
    return new_head, new_body


def _var_name(i: int) -> str:
    letters = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if i < 26:
        return letters[i]
    return letters[i % 26] + str(i // 26)


def rename_variables(c: Clause) -> Clause:
    """Rename variables to A, B, C, ... in first-occurrence order."""
    mapping = {}
    for v in c.variables():
        mapping[v] = Term(VAR, _var_name(len(mapping)), v.sort)
    return apply_clause(mapping, c)


# -- text syntax --------------------------------------------------------------


def format_atom(a: Atom) -> str:
    return str(a)


def format_clause(c: Clause) -> str:
    head = str(c.head)
    if c.provenance in (ADD, DEL):
        head = "%s(%s)" % (c.provenance, head)
    if not c.body:
        return head + "."
    return "%s :- %s." % (head, ", ".join(str(b) for b in c.body))


class SyntaxError_(ValueError):
    pass


_TOKEN = re.compile(r"\s*(?:(c\(\s*-?\d+\s*,\s*-?\d+\s*\))|([A-Za-z_][A-Za-z0-9_]*)|(-?\d+)|(:-|[(),.|]))")


def _tokens(text: str) -> List[str]:
    pos, out = 0, []
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m:
            raise SyntaxError_("unexpected character at column %d in %r" % (pos + 1, text))
        out.append(m.group(m.lastindex).replace(" ", ""))
        pos = m.end()
    return out


class _Parser:
    def __init__(self, text: str, sort_of):
        self.toks = _tokens(text)
        self.i = 0
        self.sort_of = sort_of
        self.text = text

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def take(self, expect=None):
        tok = self.peek()
        if tok is None or (expect is not None and tok != expect):
            raise SyntaxError_("expected %r, got %r in %r" % (expect, tok, self.text))
        self.i += 1
        return tok

    def raw_atom(self):
        name = self.take()
        args = []
        if self.peek() == "(":
            self.take("(")
            while True:
                args.append(self.take())
                if self.peek() == ",":
                    self.take(",")
                    continue
                self.take(")")
                break
        return name, args


_CELL = re.compile(r"c\((-?\d+),(-?\d+)\)")


def _make_term(tok: str, sort: str) -> Term:
    m = _CELL.fullmatch(tok)
    if m:
        return Term(CONST, (int(m.group(1)), int(m.group(2))), "cell")
    if tok[0].isupper() or tok[0] == "_":
        return Term(VAR, tok, sort)
    return Term(CONST, tok, sort)


def parse_atom(text: str, signatures) -> Atom:
    """Parse a single atom. ``signatures`` maps predicate -> arg sorts."""
    p = _Parser(text, None)
    name, raw = p.raw_atom()
    if p.peek() is not None:
        raise SyntaxError_("trailing input in %r" % text)
    return _build_atom(name, raw, signatures, {})


def _build_atom(name, raw, signatures, var_sorts) -> Atom:
    sorts = signatures.get(name) if signatures is not None else None
    if sorts is None:
        raise SyntaxError_("unknown predicate %s/%d" % (name, len(raw)))
    if len(sorts) != len(raw):
        raise SyntaxError_("%s expects %d arguments, got %d" % (name, len(sorts), len(raw)))
    args = []
    for tok, sort in zip(raw, sorts):
        t = _make_term(tok, sort)
        if t.kind == CONST and isinstance(t.name, tuple) and sort != "cell":
            raise SyntaxError_("cell constant %s used where %s expected" % (tok, sort))
        if t.kind == VAR:
            var_sorts.setdefault(t.name, sort)
            if var_sorts[t.name] != sort:
                raise SyntaxError_("variable %s used with sorts %s and %s" % (t.name, var_sorts[t.name], sort))
        args.append(t)
    return Atom(name, tuple(args))


def parse_clause(text: str, signatures, provenance: Optional[str] = None) -> Clause:
    """Parse ``head :- b1, b2.``.

    ``signatures`` maps predicate -> arg sorts for every body predicate. The
    head predicate may be missing from it (a new invented predicate); its
    argument sorts are then inferred from the body variables.
    """
    p = _Parser(text, None)
    prov = provenance or ABSTRACTION
    toks = p.toks
    if len(toks) > 3 and toks[0] in (ADD, DEL) and toks[1] == "(" and toks[3] in ("(", ")"):
        prov = p.take()
        p.take("(")
        hname, hraw = p.raw_atom()
        p.take(")")
    else:
        hname, hraw = p.raw_atom()
    body_raw = []
    if p.peek() == ":-":
        p.take(":-")
        while True:
            body_raw.append(p.raw_atom())
            if p.peek() == ",":
                p.take(",")
                continue
            break
    p.take(".")
    var_sorts: Dict[str, str] = {}
    body = tuple(_build_atom(n, r, signatures, var_sorts) for n, r in body_raw)
    if hname in signatures:
        head = _build_atom(hname, hraw, signatures, var_sorts)
    else:
        try:
            sorts = tuple(var_sorts[tok] for tok in hraw)
        except KeyError as e:
            raise SyntaxError_("cannot infer sort of head argument %s in %r" % (e, text)) from None
        head = _build_atom(hname, hraw, {hname: sorts}, var_sorts)
    return Clause(head, body, prov)


def parse_state(text: str, signatures) -> frozenset:
    """Parse a comma separated list of ground atoms (``{}`` optional)."""
    text = text.strip()
    if text.startswith("{") and text.endswith("}"):
        text = text[1:-1]
    text = text.strip()
    if not text:
        return frozenset()
    p = _Parser(text, None)
    atoms = []
    while True:
        name, raw = p.raw_atom()
        a = _build_atom(name, raw, signatures, {})
        if not a.is_ground():
            raise SyntaxError_("state atom %s is not ground" % (a,))
        atoms.append(a)
        if p.peek() == ",":
            p.take(",")
            continue
        break
    if p.peek() is not None:
        raise SyntaxError_("trailing input in %r" % text)
    return frozenset(atoms)


def format_state(state: Iterable[Atom]) -> str:
    return ", ".join(sorted(str(a) for a in state))


# -- unfolding and subsumption -------------------------------------------------


def unfold(c: Clause, definitions) -> Clause:
    """Inline every literal whose predicate has a definition, recursively.

    Existential variables of an inlined definition get fresh names. The
    result is a flat clause over primitive predicates with duplicate
    literals removed.
    """
    counter = itertools.count()
    out: List[Atom] = []

    def expand(lit: Atom):
        d = definitions.get(lit.pred)
        if d is None:
            if lit not in out:
                out.append(lit)
            return
        s: Dict[Term, Term] = {}
        for hv, a in zip(d.head.args, lit.args):
            if hv.kind == VAR:
                s[hv] = a
        for b in d.body:
            for t in b.args:
                if t.kind == VAR and t not in s:
                    s[t] = Term(VAR, "_%d" % next(counter), t.sort)
            expand(Atom(b.pred, tuple(s[t] if t.kind == VAR else t for t in b.args)))

    for b in c.body:
        expand(b)
    return Clause(c.head, tuple(out), c.provenance, c.origin_step)


def reduce_clause(c: Clause, complete: bool = False) -> Clause:
    """Plotkin reduction: drop body literals while the clause stays equivalent.

    ``C`` and ``C \\ {L}`` are equivalent exactly when ``C`` θ-subsumes
    ``C \\ {L}``. By default only retractions generated by mapping one
    literal onto a sibling are tried, which removes duplicated
    sub-derivations cheaply; ``complete`` adds the full (exponential)
    subsumption test and yields the core, unique up to renaming.
    """
    body = list(dict.fromkeys(c.body))
    fixed = {t for t in c.head.args if t.kind == VAR}
    changed = True
    while changed:
        changed = False
        for i in range(len(body) - 1, -1, -1):
            lit = body[i]
            rest = body[:i] + body[i + 1:]
            if not any(b.pred == lit.pred for b in rest):
                continue
            folded = _fold(fixed, body, lit, rest)
            if folded is None and complete and _embeds(c.head, body, c.head, rest):
                folded = rest
            if folded is not None:
                body = folded
                changed = True
                break
    return Clause(c.head, tuple(body), c.provenance, c.origin_step)


def _fold(fixed, body: List[Atom], lit: Atom, rest: List[Atom]) -> Optional[List[Atom]]:
    """Map ``lit`` onto a sibling, other variables staying put; the image if it fits."""
    restset = set(rest)
    for m in rest:
        if m.pred != lit.pred:
            continue
        s = _match(lit, m, {v: v for v in fixed})
        if s is None:
            continue
        moved = {v: t for v, t in s.items() if v != t}
        # literals without a moved variable map onto themselves
        if all(Atom(b.pred, tuple(moved.get(t, t) for t in b.args)) in restset
               for b in body if b is lit or any(t in moved for t in b.args)):
            return list(dict.fromkeys(Atom(b.pred, tuple(moved.get(t, t) for t in b.args)) for b in body))
    return None


def semantic_key(c: Clause, definitions) -> str:
    """Hash of the reduced unfolded clause: equal for logically equivalent rules."""
    return clause_hash(reduce_clause(unfold(c, definitions)))


def subsumes(general: Clause, specific: Clause) -> bool:
    """θ-subsumption: some θ maps ``general`` onto a subset of ``specific``.

    Variables of ``specific`` are treated as constants.
    """
    if general.provenance != specific.provenance:
        return False
    return _embeds(general.head, general.body, specific.head, specific.body)


def _embeds(ghead: Atom, gbody: Sequence[Atom], shead: Atom, sbody: Sequence[Atom]) -> bool:
    """Backtracking search for θ with ghead·θ = shead and gbody·θ ⊆ sbody.

    Literals are matched most-constrained first with forward checking.
    """
    s0 = _match(ghead, shead, {})
    if s0 is None:
        return False
    by_pred: Dict[str, List[Atom]] = {}
    for b in sbody:
        by_pred.setdefault(b.pred, []).append(b)

    def search(todo, s):
        if not todo:
            return True
        best = None
        for i, lit in enumerate(todo):
            opts = []
            for cand in by_pred.get(lit.pred, ()):
                s2 = _match(lit, cand, s)
                if s2 is not None:
                    opts.append(s2)
            if not opts:
                return False
            if best is None or len(opts) < len(best[1]):
                best = (i, opts)
                if len(opts) == 1:
                    break
        i, opts = best
        rest = todo[:i] + todo[i + 1:]
        return any(search(rest, s2) for s2 in opts)

    return search(list(dict.fromkeys(gbody)), s0)


def _match(pattern: Atom, target: Atom, s: Dict[Term, Term]) -> Optional[Dict[Term, Term]]:
    if pattern.pred != target.pred or len(pattern.args) != len(target.args):
        return None
    out = s
    for p, t in zip(pattern.args, target.args):
        if p.sort != t.sort:
            return None
        if p.kind == VAR:
            cur = out.get(p)
            if cur is None:
                if out is s:
                    out = dict(s)
                out[p] = t
            elif cur != t:
                return None
        elif p != t:
            return None
    return out
