"""Second-order clause templates.

Text format, one per line::

    chain: P(X,Y) :- Q(X,Z), R(Z,Y).

Argument variables may carry a sort annotation, e.g. ``P(X:object,Y)``.
Uppercase single-letter predicate variables are conventional but any
identifier works; body predicate variables must be distinct.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

Template = Tuple[str, Tuple[str, ...]]


@dataclass(frozen=True)
class Metarule:
    name: str
    head: Template
    body: Tuple[Template, ...]
    sorts: Dict[str, str] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        body_vars = {v for _, args in self.body for v in args}
        missing = [v for v in self.head[1] if v not in body_vars]
        if missing:
            raise ValueError("metarule %s: head variables %s do not occur in the body" % (self.name, missing))
        pvars = [p for p, _ in self.body]
        if len(set(pvars)) != len(pvars) or self.head[0] in pvars:
            raise ValueError("metarule %s: predicate variables must be distinct" % self.name)
        if not self.body:
            raise ValueError("metarule %s has an empty body" % self.name)

    @property
    def arity(self) -> int:
        return len(self.head[1])

    @property
    def arity_bound(self) -> int:
        return len(self.body)

    @property
    def is_identity(self) -> bool:
        """``P(args) :- Q(args)``: only meaningful at the top level."""
        return len(self.body) == 1 and self.body[0][1] == self.head[1]

    def existentials(self) -> List[str]:
        head = set(self.head[1])
        out: List[str] = []
        for _, args in self.body:
            for v in args:
                if v not in head and v not in out:
                    out.append(v)
        return out

    def __str__(self) -> str:
        def fmt(t):
            return "%s(%s)" % (t[0], ",".join(t[1]))

        return "%s: %s :- %s." % (self.name, fmt(self.head), ", ".join(fmt(b) for b in self.body))


_LINE = re.compile(r"^\s*([A-Za-z_][\w]*)\s*:\s*(.+?)\s*:-\s*(.+?)\s*\.\s*$")
_TEMPLATE = re.compile(r"([A-Za-z_]\w*)\s*\(([^)]*)\)")


def _templates(text: str, sorts: Dict[str, str], where: str) -> List[Template]:
    matches = list(_TEMPLATE.finditer(text))
    leftover = _TEMPLATE.sub("", text).replace(",", "").strip()
    if not matches or leftover:
        raise ValueError("%s: cannot parse %r" % (where, text))
    out = []
    for m in matches:
        args = []
        for raw in m.group(2).split(","):
            v, _, s = (x.strip() for x in raw.partition(":"))
            if not v:
                raise ValueError("%s: empty argument" % where)
            if s and sorts.setdefault(v, s) != s:
                raise ValueError("%s: variable %s annotated with two sorts" % (where, v))
            args.append(v)
        out.append((m.group(1), tuple(args)))
    return out


def parse_metarule(line: str) -> Metarule:
    m = _LINE.match(line)
    if not m:
        raise ValueError("malformed metarule %r" % line)
    name, head, body = m.groups()
    sorts: Dict[str, str] = {}
    (h,) = _templates(head, sorts, name)
    return Metarule(name, h, tuple(_templates(body, sorts, name)), sorts)


def parse_metarules(text: str) -> List[Metarule]:
    out = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("%", 1)[0].strip()
        if not line:
            continue
        try:
            out.append(parse_metarule(line))
        except ValueError as e:
            raise ValueError("line %d: %s" % (lineno, e)) from None
    names = [m.name for m in out]
    if len(set(names)) != len(names):
        raise ValueError("duplicate metarule names")
    return out


DEFAULT_METARULES_TEXT = """\
identity: P(X,Y) :- Q(X,Y).
identity1: P(X) :- Q(X).
chain: P(X,Y) :- Q(X,Z), R(Z,Y).
absorption: P(X,Y) :- Q(X,Y), R(Y).
absorption_left: P(X,Y) :- Q(X,Y), R(X).
monadic_chain: P(X) :- Q(X,Y), R(Y).
precondition_pair: P(X) :- Q(X), R(X).
projection3: P(X,Y) :- Q(Z), R(X,Z,Y).
chain3: P(X,Y,W) :- Q(X,Z), R(Z,Y,W).
"""


def default_metarules() -> List[Metarule]:
    return parse_metarules(DEFAULT_METARULES_TEXT)
