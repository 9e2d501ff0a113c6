"""Compare Frank-Wolfe E_u / E_max against projected gradient and an exponential-cone solve.

Needs the test extras (cvxpy) and imports the reference solvers from tests/.
"""

import argparse
import random
import sys
import time
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "tests"))

import oracles  # noqa: E402
from ctxkit.boxes import chsh_scenario, cycle_scenario, pr_box, random_nd_behavior  # noqa: E402
from ctxkit.quantifiers import relative_entropy_max, relative_entropy_uniform  # noqa: E402


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--count", type=int, default=10)
    ap.add_argument("--scenario", choices=("chsh", "cycle3"), default="chsh")
    args = ap.parse_args()
    s = chsh_scenario() if args.scenario == "chsh" else cycle_scenario(3)
    rng = random.Random(args.seed)
    cases = [("PR", pr_box())] if args.scenario == "chsh" else []
    while len(cases) < args.count + (args.scenario == "chsh"):
        b = random_nd_behavior(s, rng)
        if not oracles.lp_noncontextual(b):
            cases.append((f"#{len(cases)}", b))
    print(f"{'case':>5} {'E_u FW':>10} {'PG':>10} {'cvx':>10} | {'E_max':>10} {'PG':>10} {'cvx':>10} {'sec':>6}")
    worst_u = worst_m = 0.0
    for name, b in cases:
        t = time.perf_counter()
        eu, em = relative_entropy_uniform(b).value, relative_entropy_max(b).value
        secs = time.perf_counter() - t
        pu, pm = oracles.pg_relative_entropy_uniform(b), oracles.pg_relative_entropy_max(b)
        cu, cm = oracles.cvx_relative_entropy(b, "uniform"), oracles.cvx_relative_entropy(b, "max")
        worst_u = max(worst_u, abs(eu - pu), abs(eu - cu))
        worst_m = max(worst_m, abs(em - pm), abs(em - cm))
        print(f"{name:>5} {eu:10.6f} {pu:10.6f} {cu:10.6f} | {em:10.6f} {pm:10.6f} {cm:10.6f} {secs:6.2f}")
    print(f"max deviation: E_u {worst_u:.2e}, E_max {worst_m:.2e}")


if __name__ == "__main__":
    main()
