"""All five quantifiers along the segment v * PR + (1 - v) * uniform on CHSH.

The summed winning probability is 2 + 2v against a non-contextual bound of 3,
so the box stays non-contextual up to v = 1/2 and the contextual fraction
grows linearly after that.
"""

import argparse
from fractions import Fraction

from ctxkit.boxes import chsh_scenario, pr_box, uniform_behavior
from ctxkit.quantifiers import quantify
from ctxkit.scenario import mix_behaviors


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--steps", type=int, default=10)
    args = ap.parse_args()
    pr, u = pr_box(), uniform_behavior(chsh_scenario())
    print(f"{'v':>6} {'CF':>6} {'D_u':>6} {'D_max':>6} {'E_u':>10} {'E_max':>10}")
    for i in range(args.steps + 1):
        v = Fraction(i, args.steps)
        b = mix_behaviors([v, 1 - v], [pr, u])
        vals = {q: quantify(q, b).value for q in ("cf", "du", "dmax", "eu", "emax")}
        print(f"{str(v):>6} {str(vals['cf']):>6} {str(vals['du']):>6} {str(vals['dmax']):>6} "
              f"{vals['eu']:10.6f} {vals['emax']:10.6f}")


if __name__ == "__main__":
    main()
