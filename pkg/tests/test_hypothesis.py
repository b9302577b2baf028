import pytest

from groundtruth import FIG1
from onlinemil.gridworld import action_atom, lava_river
from onlinemil.hypothesis import Hypothesis, InconsistentTrace
from onlinemil.induction import EngineConfig
from onlinemil.learner import OnlineLearner
from onlinemil.logic import ADD, DEL, atom, cell, const, parse_clause
from onlinemil.world_model import predict

AGENT = const("agent", "object")
ALIVE = atom("alive", AGENT)
DEAD = atom("dead", AGENT)


def _at(x, y):
    return atom("at", AGENT, cell(x, y))


@pytest.fixture(scope="module")
def kb():
    return lava_river(10, 10).kb()


def _sigs(kb, h):
    out = {p: s.arg_sorts for p, s in kb.signatures.items()}
    out.update({c.head.pred: c.head.sorts for c in h.abs})
    return out


def _move_context():
    return {action_atom("east"), _at(2, 4), ALIVE}


def test_generalize_requires_a_false_negative(kb):
    with pytest.raises(ValueError):
        Hypothesis().generalize([], _move_context(), kb)


def test_generalize_adds_rules_that_predict_the_change(kb):
    h = Hypothesis()
    rep = h.generalize([_at(3, 4)], _move_context(), kb, EngineConfig(max_solutions_per_goal=8))
    assert rep.added and rep.abstractions_added and not rep.inexpressible
    assert len(h.dyn) == len(rep.added) <= 8
    assert _at(3, 4) in predict(h, {_at(2, 4), ALIVE}, action_atom("east"), kb).adds


def test_reobserving_an_entailed_transition_adds_nothing(kb):
    learner = OnlineLearner(kb)
    s, a, s2 = {_at(2, 4), ALIVE}, action_atom("east"), {_at(3, 4), ALIVE}
    assert learner.observe_transition(s, a, s2).changed
    before = set(learner.h.dyn + learner.h.con + learner.h.abs)
    rep = learner.observe_transition(s, a, s2)
    assert not rep.errors and not any(rep.clauses_added.values())
    # confirmed rules may now absorb more specific ones, but nothing is new
    assert set(learner.h.dyn + learner.h.con + learner.h.abs) <= before


def test_inexpressible_change_is_reported(kb):
    h = Hypothesis()
    rep = h.generalize([_at(3, 4)], _move_context(), kb, EngineConfig(d_max=0))
    assert rep.inexpressible == [_at(3, 4)] and not rep.added
    assert h.size() == (0, 0, 0)


def test_removals_go_to_constraints(kb):
    h = Hypothesis()
    h.generalize([_at(2, 4)], _move_context(), kb, provenance=DEL)
    assert h.con and not h.dyn
    assert all(c.provenance == DEL for c in h.con)


def test_add_rule_validation(kb):
    h = Hypothesis.load(FIG1, kb)
    sigs = _sigs(kb, h)
    with pytest.raises(ValueError):
        h.add_rule(parse_clause("p9(A) :- alive(A).", sigs))
    with pytest.raises(ValueError):
        h.add_rule(parse_clause("add(dead(A)) :- alive(A), #abc(A).", dict(sigs, **{"#abc": ("object",)}), ADD))
    c = h.dyn[0]
    assert h.add_rule(c) is False


def test_specialize_with_nothing_to_blame(kb):
    h = Hypothesis.load(FIG1, kb)
    assert h.specialize([], {}) == []
    assert h.size() == (6, 2, 2)


def test_specialize_prunes_exactly_the_blamed_clause(kb):
    h = Hypothesis.load(FIG1, kb)
    death = next(c for c in h.dyn if c.head.pred == "dead")
    trace = {DEAD: {death}, atom("dead", const("ghost", "object")): {death}}
    assert h.specialize(trace, trace) == [death]
    assert death not in h and len(h.dyn) == 1 and len(h.con) == 2
    assert h.clause_stats[h.key_of(h.dyn[0])].contradicted == 0


def test_specialize_uses_the_firing_trace(kb):
    gmap = lava_river(10, 10)
    h = Hypothesis.load(FIG1, kb)
    x = min(x for (x, y), t in gmap.cells.items() if t == "lava")
    p = predict(h, {_at(x - 1, 1), ALIVE}, action_atom("east"), kb)
    pruned = h.specialize({DEAD}, p.add_trace)
    assert [c.head.pred for c in pruned] == ["dead"]


def test_false_positive_without_trace_is_inconsistent(kb):
    h = Hypothesis.load(FIG1, kb)
    with pytest.raises(InconsistentTrace):
        h.specialize({DEAD}, {})


def test_falsified_explanations_are_never_re_added(kb):
    h = Hypothesis()
    h.generalize([_at(3, 4)], _move_context(), kb)
    victim = h.dyn[0]
    flat = h.flat(victim)
    h.specialize({_at(3, 4)}, {_at(3, 4): {victim}})
    assert h.tombstones
    h.generalize([_at(3, 4)], _move_context(), kb)
    assert all(h.flat(c) != flat for c in h.dyn)


def test_published_theory_is_already_compressed(kb):
    h = Hypothesis.load(FIG1, kb)
    rep = h.compress_gc(0)
    assert not rep.reduced and not rep.collected
    assert h.size() == (6, 2, 2)


def test_unreferenced_abstraction_is_collected(kb):
    h = Hypothesis.load(FIG1, kb)
    sigs = _sigs(kb, h)
    orphan = h.register_abstraction(parse_clause("p7(A) :- p2(A,B), is_goal(B).", sigs))
    assert orphan in h.definitions()
    rep = h.compress_gc(0)
    assert [c.head.pred for c in rep.collected] == [orphan]
    assert h.size() == (6, 2, 2)
    again = h.compress_gc(0)
    assert not again.reduced and not again.collected


def test_trusted_general_rule_absorbs_specific_one(kb):
    h = Hypothesis.load(FIG1, kb)
    sigs = _sigs(kb, h)
    specific = parse_clause("add(at(A,B)) :- p1(A,B), alive(A).", sigs, ADD)
    h.add_rule(specific)
    # the specific rule is new and untrusted, the loaded rule is trusted
    rep = h.compress_gc(0)
    assert rep.reduced == [specific]
    assert h.size() == (6, 2, 2)


def test_untrusted_rules_do_not_absorb_until_probation_ends(kb):
    h = Hypothesis()
    sigs = {p: s.arg_sorts for p, s in kb.signatures.items()}
    general = parse_clause("add(dead(A)) :- alive(A).", sigs, ADD)
    specific = parse_clause("add(dead(A)) :- alive(A), at(A,B), is_lava(B).", sigs, ADD)
    h.add_rule(general)
    h.add_rule(specific)
    assert not h.compress_gc(0).reduced
    assert h.compress_gc(h.probation).reduced == [specific]


def test_dump_load_round_trip(kb, converged_program):
    for text in (FIG1, converged_program):
        h = Hypothesis.load(text, kb)
        assert Hypothesis.load(h.dump(), kb).dump() == h.dump()
    assert Hypothesis.load(FIG1, kb).dump().splitlines()[1:] != []


def test_loaded_rules_are_confirmed(kb):
    h = Hypothesis.load(FIG1, kb)
    assert all(h.confirmed(c) for c in h.dyn + h.con)


@pytest.mark.parametrize("text", [
    "add(dead(A)) :- alive(A).\n",
    "% abstractions\np1(A) :- p9(A).\n",
    "% dynamics\ndel(alive(A)) :- alive(A).\n",
])
def test_load_errors(kb, text):
    with pytest.raises(ValueError):
        Hypothesis.load(text, kb)


def test_snapshot_is_independent(kb):
    h = Hypothesis.load(FIG1, kb)
    snap = h.snapshot()
    h.specialize({DEAD}, {DEAD: set(h.dyn)})
    assert snap.size() == (6, 2, 2) and h.size() == (6, 0, 2)


def test_learned_program_has_referential_integrity(kb, converged_run):
    h = converged_run.hypothesis
    defs = h.definitions()
    for c in h.abs + h.dyn + h.con:
        for b in c.body:
            assert b.pred in kb.signatures or b.pred in defs, b.pred
    used = {b.pred for c in h.dyn + h.con for b in c.body}
    stack, live = list(used), set()
    while stack:
        p = stack.pop()
        if p in defs and p not in live:
            live.add(p)
            stack.extend(b.pred for b in defs[p].body)
    assert live == set(defs)


def test_only_confirmed_abstractions_are_reusable(kb):
    learner = OnlineLearner(kb)
    learner.observe_transition({_at(2, 4), ALIVE}, action_atom("east"), {_at(3, 4), ALIVE})
    h = learner.h
    assert len(h.abs) > 0 and h.reusable() == []
    learner.observe_transition({_at(2, 5), ALIVE}, action_atom("east"), {_at(3, 5), ALIVE})
    live = set(h.reusable())
    assert live and live <= set(h.definitions())
    confirmed = [c for c in h.dyn + h.con if h.confirmed(c)]
    assert {b.pred for c in confirmed for b in c.body if b.pred in h.definitions()} <= live
    assert Hypothesis.load(FIG1, kb).reusable() == ["p%d" % i for i in range(1, 7)]


def test_early_death_stays_cheap():
    # dying right after the first movement spike, before any rule is confirmed
    kb7 = lava_river(7, 7).kb()
    learner = OnlineLearner(kb7)
    learner.observe_transition({_at(1, 1), ALIVE}, action_atom("east"), {_at(2, 1), ALIVE})
    rep = learner.observe_transition({_at(2, 1), ALIVE}, action_atom("east"), {_at(3, 1), DEAD})
    assert rep.clauses_added[ADD] > 0
    assert _at(3, 1) in learner.predict({_at(2, 1), ALIVE}, action_atom("east")).adds
