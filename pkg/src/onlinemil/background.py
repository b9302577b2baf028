"""Predicate signatures and intensional background knowledge.

Background predicates are answered by procedural attachment: an evaluator
computes the answers to a (partially ground) query from the grid geometry
instead of looking them up in a materialised fact table. Sorts whose domain
grows with the map (``cell``) are *open*; a background query is only
considered cheap when at least one open-sort argument is bound.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .logic import CONST, VAR, Atom, Substitution, Term, cell, const, unify

STATE = "state"
BACKGROUND = "background"
ACTION = "action"
INVENTED = "invented"
SOURCES = (STATE, BACKGROUND, ACTION, INVENTED)

DIRECTIONS = {
    "north": (0, -1),
    "south": (0, 1),
    "east": (1, 0),
    "west": (-1, 0),
}


class UnknownPredicate(KeyError):
    pass


@dataclass(frozen=True)
class Signature:
    predicate: str
    arg_sorts: Tuple[str, ...]
    source: str
    # may the predicate head a learned dynamics / removal rule
    head_allowed: bool = False

    def __post_init__(self):
        if self.source not in SOURCES:
            raise ValueError("unknown predicate source %r" % self.source)

    @property
    def arity(self) -> int:
        return len(self.arg_sorts)


Pattern = Tuple[Optional[Term], ...]


class Evaluator:
    """Answers partially ground queries for one background predicate."""

    def answers(self, pattern: Pattern) -> List[Tuple[Term, ...]]:
        raise NotImplementedError


class FactTable(Evaluator):
    """Extensional evaluator over an explicit set of ground tuples."""

    def __init__(self, rows: Iterable[Tuple[Term, ...]]):
        self.rows = sorted(set(tuple(r) for r in rows), key=lambda r: tuple(map(str, r)))

    def answers(self, pattern):
        return [r for r in self.rows if all(p is None or p == x for p, x in zip(pattern, r))]


class GridGeometry:
    """Terrain lookup plus a probe counting how many cells were enumerated."""

    def __init__(self, width: int, height: int, terrain: Mapping[Tuple[int, int], str]):
        self.width = width
        self.height = height
        self.terrain = terrain
        self.cells_scanned = 0

    def inside(self, x: int, y: int) -> bool:
        return 0 <= x < self.width and 0 <= y < self.height

    def all_cells(self) -> List[Term]:
        self.cells_scanned += self.width * self.height
        return [cell(x, y) for y in range(self.height) for x in range(self.width)]


class TerrainTest(Evaluator):
    def __init__(self, geometry: GridGeometry, test: Callable[[str], bool]):
        self.geometry = geometry
        self.test = test

    def answers(self, pattern):
        (p,) = pattern
        g = self.geometry
        if p is not None:
            x, y = p.name
            return [(p,)] if g.inside(x, y) and self.test(g.terrain[(x, y)]) else []
        return [(c,) for c in g.all_cells() if self.test(g.terrain[c.name])]


class Adjacency(Evaluator):
    """``adjacent(From, Dir, To)`` over the four cardinal directions."""

    def __init__(self, geometry: GridGeometry):
        self.geometry = geometry

    def answers(self, pattern):
        src, d, dst = pattern
        g = self.geometry
        dirs = [d.name] if d is not None else sorted(DIRECTIONS)
        out = []
        if src is not None or dst is not None:
            for name in dirs:
                dx, dy = DIRECTIONS[name]
                if src is not None:
                    x, y = src.name[0] + dx, src.name[1] + dy
                    if not g.inside(*src.name) or not g.inside(x, y):
                        continue
                    to = cell(x, y)
                    if dst is not None and dst != to:
                        continue
                    out.append((src, const(name, "direction"), to))
                else:
                    x, y = dst.name[0] - dx, dst.name[1] - dy
                    if not g.inside(*dst.name) or not g.inside(x, y):
                        continue
                    out.append((cell(x, y), const(name, "direction"), dst))
            return out
        for c in g.all_cells():
            out.extend(self.answers((c, d, None)))
        return out


@dataclass
class BackgroundKB:
    """Signature catalog plus evaluators for the background predicates."""

    signatures: Dict[str, Signature]
    evaluators: Dict[str, Evaluator] = field(default_factory=dict)
    open_sorts: frozenset = frozenset({"cell"})
    domains: Dict[str, List[Term]] = field(default_factory=dict)
    geometry: Optional[GridGeometry] = None

    def signature(self, pred: str) -> Signature:
        try:
            return self.signatures[pred]
        except KeyError:
            raise UnknownPredicate(pred) from None

    def mode_ok(self, pred: str, bound: Sequence[bool]) -> bool:
        """Can a background query with these bound positions be answered locally?"""
        sorts = self.signature(pred).arg_sorts
        open_positions = [i for i, s in enumerate(sorts) if s in self.open_sorts]
        if not open_positions:
            return True
        return any(bound[i] for i in open_positions)

    def answers(self, pred: str, pattern: Pattern) -> List[Tuple[Term, ...]]:
        try:
            ev = self.evaluators[pred]
        except KeyError:
            raise UnknownPredicate(pred) from None
        return ev.answers(pattern)

    def constants(self, sort: str) -> List[Term]:
        if sort == "cell" and self.geometry is not None:
            return self.geometry.all_cells()
        return list(self.domains.get(sort, ()))

    def with_signatures(self, extra: Iterable[Signature]) -> "BackgroundKB":
        sigs = dict(self.signatures)
        for s in extra:
            sigs[s.predicate] = s
        return BackgroundKB(sigs, self.evaluators, self.open_sorts, self.domains, self.geometry)


def eval_primitive(query: Atom, state: Iterable[Atom], kb: BackgroundKB) -> List[Substitution]:
    """All substitutions grounding ``query`` to an atom of ``state`` or the background."""
    sig = kb.signature(query.pred)
    if sig.source in (STATE, ACTION):
        out = []
        for a in sorted(state, key=str):
            if a.pred == query.pred:
                s = unify(query, a)
                if s is not None:
                    out.append(s)
        return out
    if sig.source != BACKGROUND:
        raise UnknownPredicate("%s is not a primitive predicate" % query.pred)
    pattern = tuple(t if t.kind == CONST else None for t in query.args)
    out = []
    for row in kb.answers(query.pred, pattern):
        s: Substitution = {}
        ok = True
        for t, v in zip(query.args, row):
            if t.kind == VAR:
                if s.setdefault(t, v) != v:
                    ok = False
                    break
        if ok:
            out.append(s)
    return out


def compatible_predicates(position_sorts: Sequence[Optional[str]], kb: BackgroundKB,
                          extra: Iterable[Signature] = ()) -> set:
    """Predicates whose signature matches ``position_sorts`` (``None`` = any sort)."""
    out = set()
    for sig in list(kb.signatures.values()) + list(extra):
        if len(sig.arg_sorts) != len(position_sorts):
            continue
        if all(p is None or p == s for p, s in zip(position_sorts, sig.arg_sorts)):
            out.add(sig.predicate)
    return out


# -- domain declaration files --------------------------------------------------

_DECL = re.compile(r"^\s*([a-z][A-Za-z0-9_]*)\s*/\s*(\d+)\s*:\s*([^\[]*)\[\s*([a-z ]+)\s*\]\s*$")


def parse_domain(text: str) -> Dict[str, Signature]:
    """Parse ``pred/arity : sort1, sort2 [state|background|action] [head|body]``.

    State predicates may head learned rules by default; background and action
    predicates are body-only unless the ``head`` flag is given.
    """
    sigs: Dict[str, Signature] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("%", 1)[0].strip()
        if not line:
            continue
        m = _DECL.match(line)
        if not m:
            raise ValueError("line %d: malformed signature %r" % (lineno, line))
        name, arity, sorts, flags = m.groups()
        sorts = tuple(s.strip() for s in sorts.split(",") if s.strip())
        if len(sorts) != int(arity):
            raise ValueError("line %d: %s/%s declares %d sorts" % (lineno, name, arity, len(sorts)))
        words = flags.split()
        source = words[0]
        if source not in (STATE, BACKGROUND, ACTION):
            raise ValueError("line %d: unknown source %r" % (lineno, source))
        head = source == STATE
        for w in words[1:]:
            if w not in ("head", "body"):
                raise ValueError("line %d: unknown flag %r" % (lineno, w))
            head = w == "head"
        if name in sigs:
            raise ValueError("line %d: duplicate signature for %s" % (lineno, name))
        sigs[name] = Signature(name, sorts, source, head)
    return sigs


def format_domain(signatures: Mapping[str, Signature]) -> str:
    lines = []
    for sig in signatures.values():
        if sig.source == INVENTED:
            continue
        flag = ""
        if sig.head_allowed != (sig.source == STATE):
            flag = " head" if sig.head_allowed else " body"
        lines.append("%s/%d : %s [%s%s]" % (sig.predicate, sig.arity, ", ".join(sig.arg_sorts), sig.source, flag))
    return "\n".join(lines) + "\n"


LAVA_DOMAIN = """\
at/2 : object, cell [state]
alive/1 : object [state]
dead/1 : object [state]
move/1 : direction [action]
adjacent/3 : cell, direction, cell [background]
wall/1 : cell [background]
not_wall/1 : cell [background]
is_lava/1 : cell [background]
is_goal/1 : cell [background]
"""

TERRAIN_TESTS = {
    "wall": lambda t: t == "wall",
    "not_wall": lambda t: t != "wall",
    "is_lava": lambda t: t == "lava",
    "is_goal": lambda t: t == "goal",
}


def grid_kb(width: int, height: int, terrain: Mapping[Tuple[int, int], str],
            signatures: Optional[Dict[str, Signature]] = None) -> BackgroundKB:
    """Background KB for a rectangular grid with the lava-domain vocabulary."""
    sigs = signatures if signatures is not None else parse_domain(LAVA_DOMAIN)
    geometry = GridGeometry(width, height, terrain)
    evaluators: Dict[str, Evaluator] = {"adjacent": Adjacency(geometry)}
    for name, test in TERRAIN_TESTS.items():
        evaluators[name] = TerrainTest(geometry, test)
    missing = [p for p, s in sigs.items() if s.source == BACKGROUND and p not in evaluators]
    if missing:
        raise ValueError("no evaluator for background predicates: %s" % ", ".join(missing))
    domains = {
        "direction": [const(d, "direction") for d in sorted(DIRECTIONS)],
        "object": [const("agent", "object")],
    }
    return BackgroundKB(sigs, evaluators, frozenset({"cell"}), domains, geometry)
