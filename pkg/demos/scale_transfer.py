"""Learn on 10x10, then solve a 100x100 map with the learned program alone.

Usage: python demos/scale_transfer.py
"""

import time

from onlinemil import ExperimentConfig, run_experiment, transfer


def main() -> None:
    t0 = time.perf_counter()
    program = run_experiment(ExperimentConfig(episodes=10)).hypothesis.dump()
    print("learned on 10x10 in %.1fs" % (time.perf_counter() - t0))
    t0 = time.perf_counter()
    res = transfer(program, ExperimentConfig(gen=(100, 100), episodes=1))
    ep = res.episodes[0]
    print("100x100: success=%d after %d steps (%.1fs), clauses added %d, pruned %d"
          % (ep["success"], ep["steps"], time.perf_counter() - t0,
             res.summary["clauses_added"], res.summary["clauses_pruned"]))


if __name__ == "__main__":
    main()
