"""Learn the lava world from scratch on the shipped 10x10 map and print the program.

Usage: python demos/quickstart.py [seed]
"""

import sys

from onlinemil import ExperimentConfig, run_experiment


def main(seed: int = 0) -> None:
    res = run_experiment(ExperimentConfig(episodes=20, seed=seed))
    s = res.summary
    print("first success in episode %s, success rate %.2f" % (s["first_success_episode"], s["success_rate"]))
    print("model stopped changing at step %d of %d" % (s["convergence_step"], s["total_steps"]))
    print("size: %d abstractions, %d dynamics, %d constraints\n"
          % (s["final_abstractions"], s["final_dynamics"], s["final_constraints"]))
    print(res.hypothesis.dump(), end="")


if __name__ == "__main__":
    main(int(sys.argv[1]) if len(sys.argv) > 1 else 0)
