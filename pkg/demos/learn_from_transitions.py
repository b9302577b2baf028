"""Feed hand-written transitions to the learner and watch a spike of guesses get pruned.

Usage: python demos/learn_from_transitions.py
"""

from onlinemil import OnlineLearner, lava_river
from onlinemil.harness import parse_trajectory

TRANSITIONS = """\
% walk east, bump into the north wall, walk again, step into lava
alive(agent), at(agent,c(1,1)) | move(east)  | alive(agent), at(agent,c(2,1))
alive(agent), at(agent,c(2,1)) | move(north) | alive(agent), at(agent,c(2,1))
alive(agent), at(agent,c(2,1)) | move(east)  | alive(agent), at(agent,c(3,1))
alive(agent), at(agent,c(4,1)) | move(east)  | dead(agent), at(agent,c(5,1))
% a fresh episode: more safe moves refute the over-general death rules
alive(agent), at(agent,c(1,1)) | move(south) | alive(agent), at(agent,c(1,2))
alive(agent), at(agent,c(1,2)) | move(east)  | alive(agent), at(agent,c(2,2))
alive(agent), at(agent,c(2,2)) | move(west)  | alive(agent), at(agent,c(1,2))
alive(agent), at(agent,c(1,2)) | move(west)  | alive(agent), at(agent,c(1,2))
alive(agent), at(agent,c(1,2)) | move(north) | alive(agent), at(agent,c(1,1))
"""


def main() -> None:
    kb = lava_river(10, 10).kb()
    learner = OnlineLearner(kb)
    for s, a, s2 in parse_trajectory(TRANSITIONS, kb.signatures):
        rep = learner.observe_transition(s, a, s2)
        print("t=%d %-12s errors=%d added=%s pruned=%s size=%s"
              % (rep.t, a, rep.errors.total(), dict(rep.clauses_added), dict(rep.clauses_pruned), rep.model_size))
    h = learner.h
    lava = sum("is_lava" in str(h.flat(c)) for c in h.dyn + h.con if c.head.pred != "at")
    print("\n%d death rules survive, %d of them test for lava; later steps compress them once they fire"
          % (sum(c.head.pred != "at" for c in h.dyn + h.con), lava))
    print("(demos/quickstart.py shows the compressed program after full episodes)")


if __name__ == "__main__":
    main()
