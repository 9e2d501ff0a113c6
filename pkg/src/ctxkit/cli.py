"""Command-line front end.

Exit codes: 0 success, 1 domain failure (a check came out negative, a suite
found a violation, a behavior is disturbing), 2 usage or input error.
Two-word forms such as ``behavior check-nd`` are accepted for every verb.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path
from typing import Optional, Sequence

from . import boxes, io
from .lp import LPError, format_tableau, record_solves
from .quantifiers import (
    QUANTIFIERS,
    ConvergenceError,
    DisturbanceError,
    check_noncontextual,
    mbqc_failure_bound,
    nu_linear_distance,
    quantify,
)
from .scenario import (
    BehaviorError,
    ScenarioError,
    VertexCapError,
    check_nondisturbance,
    controlled_choice,
    product_box,
    validate_scenario,
)
from .wirings import (
    SuiteError,
    WiringError,
    WiringSamplerConfig,
    apply_ncwiring,
    run_monotonicity_suite,
    run_preservation_suite,
    validate_wiring,
)

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

BUILTIN_SCENARIOS = {
    "chain": boxes.chain_scenario,
    "chsh": boxes.chsh_scenario,
}

NAMED_FUNCTIONS = {
    "and": lambda x: int(all(x)),
    "or": lambda x: int(any(x)),
    "xor": lambda x: sum(x) % 2,
    "majority": lambda x: int(2 * sum(x) > len(x)),
    "const0": lambda x: 0,
    "const1": lambda x: 1,
}


class UsageError(Exception):
    pass


def _fmt(x) -> str:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, float):
        return f"{x:.10g}"
    return str(x)


def _scenario(arg: str):
    if arg in BUILTIN_SCENARIOS:
        return BUILTIN_SCENARIOS[arg]()
    if arg.startswith("cycle") and arg[5:].isdigit():
        return boxes.cycle_scenario(int(arg[5:]))
    path = Path(arg)
    if not path.exists():
        raise UsageError(f"no scenario file {arg!r} (built-ins: chain, chsh, cycleN)")
    return io.load(path, "scenario")


def _load(path: str, kind: str):
    if not Path(path).exists():
        raise UsageError(f"no such file: {path}")
    return io.load(path, kind)


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None


# -- verbs ------------------------------------------------------------------------


def _load_scenario_lenient(path: str):
    """Scenario files that fail validation still need diagnostics, not a crash."""
    from .scenario import Scenario

    d = json.loads(Path(path).read_text())
    return Scenario(tuple(map(str, d["measurements"])), tuple(map(str, d["outcomes"])),
                    tuple(tuple(map(str, c)) for c in d["contexts"]))


def cmd_scenario_validate(a):
    if Path(a.scenario).exists():
        try:
            s = _load_scenario_lenient(a.scenario)
        except (KeyError, TypeError, json.JSONDecodeError) as e:
            raise io.LoadError(f"malformed scenario: {e}", a.scenario) from e
    else:
        s = _scenario(a.scenario)
    diags = validate_scenario(s)
    errors = [d for d in diags if d.level == "error"]
    data = {"valid": not errors,
            "diagnostics": [{"level": d.level, "code": d.code, "message": d.message} for d in diags]}
    text = "\n".join(str(d) for d in diags) or "scenario is valid"
    return (EXIT_FAIL if errors else EXIT_OK), data, text


def cmd_check_nd(a):
    b = _load(a.behavior, "behavior")
    r = check_nondisturbance(b)
    pair = None if r.ok else [list(b.scenario.contexts[k]) for k in r.pair]
    data = {"nondisturbing": r.ok,
            "pair": pair,
            "discrepancy": None if r.ok else _fmt(r.discrepancy)}
    if r.ok:
        text = "behavior is non-disturbing"
    else:
        text = (f"behavior is disturbing: contexts {pair[0]} and {pair[1]} "
                f"disagree by {_fmt(r.discrepancy)}")
    return (EXIT_OK if r.ok else EXIT_FAIL), data, text


def cmd_check_nc(a):
    b = _load(a.behavior, "behavior")
    r = check_noncontextual(b, mode="exact" if b.exact else "float")
    data = {"noncontextual": r.noncontextual}
    if r.noncontextual:
        data["model"] = io.model_to_dict(r.model)
        text = f"behavior is non-contextual ({len(r.model.weights)} assignments in the model)"
    else:
        data["farkas"] = [io.number_to_json(y) for y in r.farkas]
        text = "behavior is contextual (Farkas certificate found)"
    return (EXIT_OK if r.noncontextual else EXIT_FAIL), data, text


MEASURE_LABELS = {"cf": "CF", "du": "D_u", "dmax": "D_max", "eu": "E_u", "emax": "E_max"}


def cmd_quantify(a):
    b = _load(a.behavior, "behavior")
    names = list(QUANTIFIERS) if a.measure == "all" else [a.measure]
    data, lines = {}, []
    for name in names:
        kwargs = {"tol": a.tol} if name in ("eu", "emax") and a.tol else {}
        r = quantify(name, b, **kwargs)
        data[name] = io.result_to_dict(r)
        lines.append(f"{MEASURE_LABELS[name]} = {_fmt(r.value)}")
    return EXIT_OK, data if len(names) > 1 else data[names[0]], "\n".join(lines)


def cmd_wire_apply(a):
    w = _load(a.wiring, "wiring")
    b = _load(a.behavior, "behavior")
    out = apply_ncwiring(w, b)
    if a.out:
        io.store(out, a.out, "behavior")
    data = io.behavior_to_dict(out)
    return EXIT_OK, data, io.dumps(out, "behavior") if not a.out else f"wrote {a.out}"


def cmd_wire_validate(a):
    w = _load(a.wiring, "wiring")
    target = _scenario(a.scenario)
    diags = validate_wiring(w, target)
    data = {"valid": not diags,
            "diagnostics": [{"level": d.level, "code": d.code, "message": d.message} for d in diags]}
    return (EXIT_FAIL if diags else EXIT_OK), data, "\n".join(map(str, diags)) or "wiring is valid"


def _compose(a, fn):
    b1 = _load(a.left, "behavior")
    b2 = _load(a.right, "behavior")
    out = fn(b1, b2)
    if a.out:
        io.store(out, a.out, "behavior")
    return EXIT_OK, io.behavior_to_dict(out), io.dumps(out, "behavior") if not a.out else f"wrote {a.out}"


def cmd_box_product(a):
    return _compose(a, product_box)


def cmd_box_and(a):
    return _compose(a, controlled_choice)


def _suite_text(rep: dict) -> str:
    head = f"{rep['suite']} on {len(rep['scenario']['contexts'])}-context scenario, " \
           f"{rep['trials']} trials, seed {rep['seed']}: {'PASS' if rep['ok'] else 'FAIL'}"
    if rep["suite"] == "preservation":
        body = f"ND preserved {rep['nd_pass']}, NC preserved {rep['nc_pass']}, invalid {rep['invalid']}"
    else:
        body = (f"{rep['quantifier']} ({rep['opclass']}): {rep['passed']} passed, "
                f"max increase {rep['max_increase']}, invalid {rep['invalid']}")
    return f"{head}\n{body} ({rep['seconds']} s)"


def _finish_suite(rep, a):
    if a.out:
        io.store(rep, a.out, "report")
    return (EXIT_OK if rep["ok"] else EXIT_FAIL), rep, _suite_text(rep)


def cmd_suite_preservation(a):
    rep = run_preservation_suite(_scenario(a.scenario), a.trials, a.seed)
    return _finish_suite(rep, a)


def cmd_suite_monotonicity(a):
    cfg = WiringSamplerConfig(opclass=a.opclass)
    rep = run_monotonicity_suite(a.measure, _scenario(a.scenario), a.trials, a.seed,
                                 a.opclass, a.tol, cfg)
    return _finish_suite(rep, a)


def cmd_mbqc_bound(a):
    v = mbqc_failure_bound(a.cf, a.nu)
    return EXIT_OK, {"cf": str(a.cf), "nu": str(a.nu), "bound": str(v)}, f"p_F >= {v}"


def cmd_nu(a):
    if a.table is not None:
        bits = [c for c in a.table if c in "01"]
        if len(bits) != len(a.table.replace(",", "").replace(" ", "")):
            raise UsageError("truth table must contain only 0 and 1")
        v = nu_linear_distance([int(c) for c in bits])
    else:
        if a.bits is None:
            raise UsageError("--function needs --bits")
        v = nu_linear_distance(NAMED_FUNCTIONS[a.function], a.bits)
    return EXIT_OK, {"nu": str(v)}, f"nu = {v}"


# -- parser -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ctxkit", description="Contextuality as a resource: checks, "
                                "quantifiers and non-contextual wirings.")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--dump-tableau", metavar="FILE",
                   help="write the initial tableau of every LP solved to FILE")
    sub = p.add_subparsers(dest="verb", metavar="VERB")

    def add(name, fn, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(fn=fn)
        sp.add_argument("--json", action="store_true", default=argparse.SUPPRESS,
                        help=argparse.SUPPRESS)
        return sp

    sp = add("scenario-validate", cmd_scenario_validate, "diagnose a scenario file")
    sp.add_argument("--scenario", required=True)
    sp = add("behavior-check-nd", cmd_check_nd, "non-disturbance check")
    sp.add_argument("--behavior", required=True)
    sp = add("behavior-check-nc", cmd_check_nc, "non-contextuality check (LP)")
    sp.add_argument("--behavior", required=True)
    sp = add("quantify", cmd_quantify, "compute a contextuality quantifier")
    sp.add_argument("--measure", required=True, choices=sorted(QUANTIFIERS) + ["all"])
    sp.add_argument("--behavior", required=True)
    sp.add_argument("--tol", type=float, default=None, help="gap tolerance for eu/emax")
    sp = add("wire-apply", cmd_wire_apply, "apply a wiring to a behavior")
    sp.add_argument("--wiring", required=True)
    sp.add_argument("--behavior", required=True)
    sp.add_argument("--out")
    sp = add("wire-validate", cmd_wire_validate, "check a wiring against a target scenario")
    sp.add_argument("--wiring", required=True)
    sp.add_argument("--scenario", required=True)
    for name, fn, h in (("box-product", cmd_box_product, "product of two boxes"),
                        ("box-and", cmd_box_and, "controlled choice of two boxes")):
        sp = add(name, fn, h)
        sp.add_argument("--left", required=True)
        sp.add_argument("--right", required=True)
        sp.add_argument("--out")
    sp = add("suite-preservation", cmd_suite_preservation, "ND/NC preservation harness")
    sp.add_argument("--scenario", required=True, help="file or chain | chsh | cycleN")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--out")
    sp = add("suite-monotonicity", cmd_suite_monotonicity, "monotonicity harness")
    sp.add_argument("--measure", required=True, choices=sorted(QUANTIFIERS))
    sp.add_argument("--scenario", required=True, help="file or chain | chsh | cycleN")
    sp.add_argument("--trials", type=int, default=100)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--opclass", choices=("full", "post-only"), default="full")
    sp.add_argument("--tol", type=float, default=None)
    sp.add_argument("--out")
    sp = add("mbqc-bound", cmd_mbqc_bound, "lower bound (1 - CF) * nu on the failure probability")
    sp.add_argument("--cf", type=_fraction, required=True)
    sp.add_argument("--nu", type=_fraction, required=True)
    sp = add("nu", cmd_nu, "distance of a Boolean function to the closest linear one")
    g = sp.add_mutually_exclusive_group(required=True)
    g.add_argument("--table", help="truth table as a 0/1 string, input bits little-endian")
    g.add_argument("--function", choices=sorted(NAMED_FUNCTIONS))
    sp.add_argument("--bits", type=int)
    return p


GROUPS = {"scenario", "behavior", "wire", "box", "suite"}


def _normalise_argv(argv: list[str]) -> list[str]:
    """Join ``behavior check-nd`` into ``behavior-check-nd``."""
    out = list(argv)
    i = 0
    while i < len(out) and out[i].startswith("-"):
        i += 2 if out[i] == "--dump-tableau" else 1
    if i + 1 < len(out) and out[i] in GROUPS and not out[i + 1].startswith("-"):
        out[i:i + 2] = [f"{out[i]}-{out[i + 1]}"]
    return out


def main(argv: Optional[Sequence[str]] = None) -> int:
    argv = _normalise_argv(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else EXIT_OK
    if not getattr(a, "fn", None):
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        with record_solves() as log:
            code, data, text = a.fn(a)
    except (UsageError, io.LoadError, argparse.ArgumentTypeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except DisturbanceError as e:
        _emit(a, {"error": "disturbing", "pair": list(e.pair),
                  "discrepancy": _fmt(e.discrepancy)}, f"error: {e}")
        return EXIT_FAIL
    except (WiringError, SuiteError, ConvergenceError, VertexCapError, BehaviorError,
            ScenarioError, LPError, ValueError) as e:
        _emit(a, {"error": type(e).__name__, "message": str(e)}, f"error: {e}")
        return EXIT_FAIL
    if a.dump_tableau:
        Path(a.dump_tableau).write_text(
            "\n\n".join(f"# LP {i}: {sol.status}\n{format_tableau(lp)}"
                        for i, (lp, sol) in enumerate(log)) + "\n" if log else "# no LP solved\n")
    _emit(a, data, text)
    return code


def _emit(a, data, text):
    if a.json:
        print(json.dumps(data, indent=2, default=str))
    else:
        print(text)


if __name__ == "__main__":
    sys.exit(main())
