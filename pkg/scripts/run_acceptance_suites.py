"""Run the preservation and monotonicity suites at acceptance size and save the reports.

    python3 scripts/run_acceptance_suites.py --seed 7 --out results/
"""

import argparse
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from ctxkit.boxes import chain_scenario, chsh_scenario
from ctxkit.wirings import run_monotonicity_suite, run_preservation_suite


@dataclass
class SuiteConfig:
    seed: int = 7
    preservation_trials: int = 500
    monotonicity: tuple = field(default_factory=lambda: (
        ("cf", 200, "full"), ("dmax", 200, "full"), ("emax", 50, "full"),
        ("eu", 200, "post-only"), ("du", 200, "post-only")))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=SuiteConfig.seed)
    ap.add_argument("--preservation-trials", type=int, default=SuiteConfig.preservation_trials)
    ap.add_argument("--out", default="results")
    args = ap.parse_args()
    cfg = SuiteConfig(seed=args.seed, preservation_trials=args.preservation_trials)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    summary = {"config": asdict(cfg), "reports": []}
    start = time.perf_counter()
    for name, s in (("chain", chain_scenario()), ("chsh", chsh_scenario())):
        rep = run_preservation_suite(s, cfg.preservation_trials, cfg.seed)
        (out / f"preservation_{name}.json").write_text(json.dumps(rep, indent=2))
        summary["reports"].append({"suite": "preservation", "scenario": name, "ok": rep["ok"],
                                   "nd_pass": rep["nd_pass"], "nc_pass": rep["nc_pass"],
                                   "seconds": rep["seconds"]})
        print(f"preservation {name:5s}: ND {rep['nd_pass']}/{rep['trials']}  "
              f"NC {rep['nc_pass']}/{rep['trials']}  {rep['seconds']:.1f} s")
    for q, trials, opclass in cfg.monotonicity:
        rep = run_monotonicity_suite(q, chsh_scenario(), trials, cfg.seed, opclass)
        (out / f"monotonicity_{q}.json").write_text(json.dumps(rep, indent=2))
        summary["reports"].append({"suite": "monotonicity", "quantifier": q, "opclass": opclass,
                                   "ok": rep["ok"], "passed": rep["passed"], "trials": trials,
                                   "max_increase": rep["max_increase"], "seconds": rep["seconds"]})
        print(f"monotonicity {q:5s} ({opclass:9s}): {rep['passed']}/{trials}  "
              f"max increase {rep['max_increase']:.2e}  {rep['seconds']:.1f} s")
    summary["seconds"] = round(time.perf_counter() - start, 2)
    (out / "summary.json").write_text(json.dumps(summary, indent=2))
    print(f"total {summary['seconds']} s; all ok: {all(r['ok'] for r in summary['reports'])}")


if __name__ == "__main__":
    main()
