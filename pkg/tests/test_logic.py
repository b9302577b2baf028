import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onlinemil.logic import (
    ADD,
    Atom,
    Clause,
    SyntaxError_,
    apply,
    atom,
    canonical_hash,
    cell,
    clause_hash,
    const,
    format_clause,
    lift,
    parse_clause,
    parse_state,
    reduce_clause,
    rename_variables,
    subsumes,
    unfold,
    unify,
    var,
)

A, B, C, D = (var(n, s) for n, s in (("A", "object"), ("B", "cell"), ("C", "cell"), ("D", "cell")))
X = var("X", "object")
AGENT = const("agent", "object")
SIGS = {"at": ("object", "cell"), "alive": ("object",), "q": ("cell", "cell"), "r": ("cell",),
        "adjacent": ("cell", "direction", "cell"), "move": ("direction",), "not_wall": ("cell",)}


def test_unify_binds_single_variable():
    assert unify(atom("at", X, cell(3, 4)), atom("at", AGENT, cell(3, 4))) == {X: AGENT}


def test_unify_constant_clash_fails():
    assert unify(atom("at", AGENT, cell(3, 4)), atom("at", AGENT, cell(3, 5))) is None


def test_unify_three_bindings():
    p3 = atom("p3", A, C, D)
    g = atom("p3", AGENT, cell(2, 4), cell(3, 4))
    assert unify(p3, g) == {A: AGENT, C: cell(2, 4), D: cell(3, 4)}


def test_unify_respects_sorts():
    # a cell variable never binds to an object constant
    assert unify(atom("at", AGENT, B), atom("at", AGENT, AGENT)) is None


def test_unify_variable_chains_resolve():
    s = unify(atom("q", B, C), atom("q", C, cell(1, 1)))
    assert apply(s, atom("q", B, C)) == atom("q", cell(1, 1), cell(1, 1))
    # idempotent
    assert {v: apply(s, atom("r", t)).args[0] for v, t in s.items()} == s


def test_apply_examples():
    assert apply({X: AGENT}, atom("alive", X)) == atom("alive", AGENT)
    assert apply({}, atom("at", A, B)) == atom("at", A, B)
    assert apply({A: AGENT, B: cell(3, 4)}, atom("p1", A, B)) == atom("p1", AGENT, cell(3, 4))


def test_canonical_hash_alpha_and_order():
    Xc, Yc, Ac, Bc = (var(n, "cell") for n in "XYAB")
    assert canonical_hash([atom("q", Xc, Yc), atom("r", Yc)]) == canonical_hash([atom("r", Bc), atom("q", Ac, Bc)])
    assert canonical_hash([atom("q", Xc, Yc)]) != canonical_hash([atom("q", Xc, Xc)])


def test_canonical_hash_sorts_participate():
    assert canonical_hash([atom("r", var("X", "cell"))]) != canonical_hash([atom("r", var("X", "object"))])


def test_canonical_hash_repeated_predicate_patterns():
    # same multiset of predicates, different sharing between the q literals
    Xc, Yc, Zc = (var(n, "cell") for n in "XYZ")
    chain = [atom("q", Xc, Yc), atom("q", Yc, Zc)]
    fork = [atom("q", Xc, Yc), atom("q", Xc, Zc)]
    assert canonical_hash(chain) != canonical_hash(fork)
    assert canonical_hash(chain) == canonical_hash([atom("q", Zc, Xc), atom("q", Yc, Zc)])


def _random_body(rng, n_lits, n_vars):
    vs = [var("V%d" % i, "cell") for i in range(n_vars)]
    preds = [("q", 2), ("r", 1), ("s", 3), ("q", 2)]
    body = []
    for _ in range(n_lits):
        p, k = rng.choice(preds)
        body.append(Atom(p, tuple(rng.choice(vs) for _ in range(k))))
    return body


@settings(max_examples=1000, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), n_lits=st.integers(1, 6), n_vars=st.integers(1, 5))
def test_canonical_hash_invariant_under_renaming_and_permutation(seed, n_lits, n_vars):
    rng = random.Random(seed)
    body = _random_body(rng, n_lits, n_vars)
    names = ["W%d" % i for i in range(n_vars)]
    rng.shuffle(names)
    ren = {var("V%d" % i, "cell"): var(names[i], "cell") for i in range(n_vars)}
    other = [apply(ren, b) for b in body]
    rng.shuffle(other)
    assert canonical_hash(body) == canonical_hash(other)


@settings(max_examples=300, deadline=None)
@given(xs=st.lists(st.tuples(st.integers(0, 9), st.integers(0, 9)), min_size=3, max_size=3),
       mask=st.lists(st.booleans(), min_size=3, max_size=3))
def test_mgu_property(xs, mask):
    g = Atom("s", tuple(cell(*p) for p in xs))
    # generalise some positions to variables, possibly shared where constants agree
    names = {}
    args = []
    for p, general in zip(xs, mask):
        if general:
            args.append(names.setdefault(p, var("V%d" % len(names), "cell")))
        else:
            args.append(cell(*p))
    a = Atom("s", tuple(args))
    s = unify(a, g)
    assert s is not None and apply(s, a) == g


def test_clause_requires_range_restriction():
    with pytest.raises(ValueError):
        Clause(atom("p", A, B), (atom("alive", A),))


def test_clause_hash_distinguishes_provenance_and_head():
    body = (atom("at", A, B),)
    assert clause_hash(Clause(atom("at", A, B), body, ADD)) != clause_hash(Clause(atom("at", A, B), body, "del"))


def test_lift_shares_equal_constants():
    head, body = lift(atom("at", AGENT, cell(2, 2)), [atom("at", AGENT, cell(1, 2)), atom("q", cell(1, 2), cell(2, 2))])
    assert head.args[1] == body[1].args[1]
    assert body[0].args[1] == body[1].args[0]
    assert all(t.is_var for b in body for t in b.args)


def test_parse_format_round_trip():
    text = "add(at(A,B)) :- at(A,C), q(C,B), not_wall(B)."
    c = parse_clause(text, SIGS)
    assert c.provenance == ADD
    assert format_clause(c) == text
    assert parse_clause(format_clause(c), SIGS) == c


def test_parse_infers_invented_head_sorts():
    c = parse_clause("p1(A,B) :- at(A,C), q(C,B).", SIGS)
    assert c.head.sorts == ("object", "cell")


def test_parse_errors():
    with pytest.raises(SyntaxError_):
        parse_clause("at(A,B) :- unknown(A).", SIGS)
    with pytest.raises(SyntaxError_):
        parse_clause("p(A) :- at(A,A).", SIGS)
    with pytest.raises(SyntaxError_):
        parse_state("at(agent,X)", SIGS)


def test_parse_state_cells():
    s = parse_state("{at(agent,c(2,4)), alive(agent)}", SIGS)
    assert s == {atom("at", AGENT, cell(2, 4)), atom("alive", AGENT)}


def test_unfold_inlines_definitions_with_fresh_existentials():
    p1 = parse_clause("p1(C,B) :- q(C,D), q(D,B).", SIGS)
    top = parse_clause("add(at(A,B)) :- at(A,C), p1(C,B).", {**SIGS, "p1": ("cell", "cell")})
    flat = unfold(top, {"p1": p1})
    assert [b.pred for b in flat.body] == ["at", "q", "q"]
    assert flat.body[1].args[1] == flat.body[2].args[0]
    assert flat.body[1].args[1] not in top.variables()


def test_reduce_clause_removes_redundant_literal():
    c = parse_clause("p(B) :- q(B,C), q(B,D), r(C).", SIGS)
    assert len(reduce_clause(c).body) == 2
    # nothing redundant
    c2 = parse_clause("p(B) :- q(B,C), r(C), r(B).", SIGS)
    assert reduce_clause(c2) == c2


def test_subsumption():
    general = parse_clause("add(at(A,B)) :- at(A,C), q(C,B).", SIGS)
    specific = parse_clause("add(at(A,B)) :- at(A,C), q(C,B), not_wall(B).", SIGS)
    assert subsumes(general, specific)
    assert not subsumes(specific, general)
    assert not subsumes(parse_clause("del(at(A,B)) :- at(A,C), q(C,B).", SIGS), specific)


def test_rename_variables_first_occurrence():
    c = rename_variables(parse_clause("p(Z) :- q(Z,Y), r(Y).", SIGS))
    assert [t.name for t in c.variables()] == ["A", "B"]
