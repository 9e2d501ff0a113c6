"""JSON files for scenarios, behaviors, wirings and harness reports.

Probabilities are written as ``"num/den"`` strings so exact values survive a
round trip; decimal strings are accepted on input and converted exactly.
Outcome tuples are keyed by their labels joined with commas, in the
context's measurement order.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Optional

from .quantifiers import NCModel, QuantifierResult
from .scenario import Behavior, BehaviorError, GlobalAssignment, Scenario, ScenarioError, to_number
from .wirings import NCWiring, PostProcessing, PreProcessing

KINDS = ("scenario", "behavior", "wiring", "report")


class LoadError(ValueError):
    """Unreadable or invalid file; ``location`` points at the bad line or field."""

    def __init__(self, message: str, location: str = "", invariant: Optional[str] = None):
        text = f"{location}: {message}" if location else message
        if invariant:
            text = f"{text} (invariant {invariant!r})"
        super().__init__(text)
        self.location = location
        self.invariant = invariant


def number_to_json(x) -> Any:
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, int):
        return str(x)
    return float(x)


def _key(t) -> str:
    return ",".join(t)


def _split(key: str, n: int) -> tuple:
    return tuple(key.split(",")) if n > 1 else (key,)


# -- to JSON ----------------------------------------------------------------------


def scenario_to_dict(s: Scenario) -> dict:
    out = {"measurements": list(s.measurements), "outcomes": list(s.outcomes),
           "contexts": [list(c) for c in s.contexts]}
    if s.metadata:
        out["metadata"] = s.metadata
    return out


def behavior_to_dict(b: Behavior) -> dict:
    return {
        "scenario": scenario_to_dict(b.scenario),
        "tables": {str(k): {_key(t): number_to_json(p) for t, p in row.items()}
                   for k, row in enumerate(b.tables)},
    }


def model_to_dict(m: NCModel) -> list:
    return [{"assignment": g.as_dict(), "weight": number_to_json(w)} for g, w in m.weights.items()]


def wiring_to_dict(w: NCWiring) -> dict:
    pre, post = w.pre, w.post
    l2b: dict = {}
    for (m, o), target in pre.light_to_button.items():
        l2b.setdefault(m, {})[o] = target
    b2: dict = {}
    for (m, o), target in post.button_from_light.items():
        b2.setdefault(m, {})[o] = target
    responses = []
    for (b, r, d, f), dist in post.responses.items():
        responses.append({
            "pre": None if b is None else [b, r],
            "post": d,
            "phi": f,
            "dist": {o: number_to_json(p) for o, p in dist.items()},
        })
    out = {
        "pre": {"behavior": behavior_to_dict(pre.pre_box), "lightToButton": l2b},
        "post": {"scenario": scenario_to_dict(post.post_scenario), "buttonFromLight": b2,
                 "phi": [number_to_json(p) for p in post.phi], "responses": responses},
    }
    if pre.pre_model is not None:
        out["pre"]["model"] = model_to_dict(pre.pre_model)
    if post.joint:
        out["post"]["joint"] = [
            {"buttons": list(bs), "lights": list(ls), "post": list(ds),
             "dist": {_key(t): number_to_json(p) for t, p in dist.items()}}
            for (bs, ls, ds), dist in post.joint.items()
        ]
    if w.label:
        out["label"] = w.label
    return out


def result_to_dict(r: QuantifierResult, s: Optional[Scenario] = None) -> dict:
    """JSON-style quantifier result; the witness is listed by its support."""
    out = {"measure": r.name, "value": number_to_json(r.value), "meta": r.meta}
    if r.lam is not None:
        out["lambda"] = number_to_json(r.lam)
    if r.witness is not None:
        out["witness"] = model_to_dict(r.witness)
    if r.nc_part is not None:
        out["nc_part"] = behavior_to_dict(r.nc_part)
    if r.residual is not None:
        out["residual"] = behavior_to_dict(r.residual)
    return out


# -- from JSON --------------------------------------------------------------------


def _field(d: dict, name: str, where: str):
    if not isinstance(d, dict):
        raise LoadError(f"expected an object, got {type(d).__name__}", where)
    if name not in d:
        raise LoadError(f"missing field {name!r}", where)
    return d[name]


def scenario_from_dict(d: dict, where: str = "scenario") -> Scenario:
    ms = _field(d, "measurements", where)
    os_ = _field(d, "outcomes", where)
    cs = _field(d, "contexts", where)
    if not all(isinstance(c, list) for c in cs):
        raise LoadError("contexts must be lists of measurement names", f"{where}.contexts")
    try:
        s = Scenario(tuple(map(str, ms)), tuple(map(str, os_)),
                     tuple(tuple(map(str, c)) for c in cs), d.get("metadata", {}))
        s.require_valid()
    except ScenarioError as e:
        raise LoadError(str(e), where, "scenario") from e
    return s


def behavior_from_dict(d: dict, where: str = "behavior", base: Optional[Path] = None) -> Behavior:
    sd = _field(d, "scenario", where)
    if isinstance(sd, str):
        path = Path(sd) if base is None else base / sd
        s = load(path, "scenario")
    else:
        s = scenario_from_dict(sd, f"{where}.scenario")
    tables = _field(d, "tables", where)
    if not isinstance(tables, dict):
        raise LoadError("tables must be an object keyed by context index", f"{where}.tables")
    rows = [dict() for _ in range(s.n_contexts)]
    for k, row in tables.items():
        loc = f"{where}.tables.{k}"
        try:
            idx = int(k)
        except ValueError:
            raise LoadError(f"context index {k!r} is not an integer", loc) from None
        if not 0 <= idx < s.n_contexts:
            raise LoadError(f"context index {idx} out of range", loc, "shape")
        n = len(s.contexts[idx])
        for key, p in row.items():
            try:
                rows[idx][_split(key, n)] = to_number(p)
            except (BehaviorError, TypeError) as e:
                raise LoadError(str(e), f"{loc}.{key}", "parse") from e
    try:
        return Behavior(s, rows)
    except BehaviorError as e:
        raise LoadError(str(e), where, e.invariant) from e


def _model_from_list(items: list, s: Scenario, where: str) -> NCModel:
    weights = {}
    for i, item in enumerate(items):
        g = GlobalAssignment.from_dict(s, _field(item, "assignment", f"{where}[{i}]"))
        weights[g] = to_number(_field(item, "weight", f"{where}[{i}]"))
    return NCModel(weights)


def _pairs(d: dict, where: str) -> dict:
    if not isinstance(d, dict):
        raise LoadError("expected {button: {light: button}}", where)
    return {(str(m), str(o)): str(t) for m, inner in d.items() for o, t in inner.items()}


def wiring_from_dict(d: dict, where: str = "wiring", base: Optional[Path] = None) -> NCWiring:
    pre_d = _field(d, "pre", where)
    post_d = _field(d, "post", where)
    box = behavior_from_dict(_field(pre_d, "behavior", f"{where}.pre"), f"{where}.pre.behavior", base)
    model = None
    if "model" in pre_d:
        model = _model_from_list(pre_d["model"], box.scenario, f"{where}.pre.model")
    pre = PreProcessing(box, _pairs(_field(pre_d, "lightToButton", f"{where}.pre"),
                                    f"{where}.pre.lightToButton"), model)
    ps = _field(post_d, "scenario", f"{where}.post")
    post_s = load(base / ps if base else Path(ps), "scenario") if isinstance(ps, str) else \
        scenario_from_dict(ps, f"{where}.post.scenario")
    responses = {}
    for i, rec in enumerate(_field(post_d, "responses", f"{where}.post")):
        loc = f"{where}.post.responses[{i}]"
        pre_pair = rec.get("pre")
        b, r = (None, None) if pre_pair is None else (str(pre_pair[0]), str(pre_pair[1]))
        key = (b, r, str(_field(rec, "post", loc)), int(rec.get("phi", 0)))
        try:
            responses[key] = {str(o): to_number(p) for o, p in _field(rec, "dist", loc).items()}
        except BehaviorError as e:
            raise LoadError(str(e), loc, "parse") from e
    phi = tuple(to_number(p) for p in post_d.get("phi", ["1"]))
    joint = None
    if "joint" in post_d:
        joint = {}
        for i, rec in enumerate(post_d["joint"]):
            loc = f"{where}.post.joint[{i}]"
            ds = tuple(_field(rec, "post", loc))
            joint[(tuple(rec.get("buttons") or [None] * len(ds)),
                   tuple(rec.get("lights") or [None] * len(ds)), ds)] = {
                _split(k, len(ds)): to_number(p) for k, p in _field(rec, "dist", loc).items()}
    post = PostProcessing(post_s, _pairs(_field(post_d, "buttonFromLight", f"{where}.post"),
                                         f"{where}.post.buttonFromLight"), responses, phi, joint)
    return NCWiring(pre, post, d.get("label", ""))


# -- files ------------------------------------------------------------------------


def _read_json(path: Path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise LoadError(f"cannot read file: {e.strerror}", str(path)) from e
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise LoadError(e.msg, f"{path}:{e.lineno}:{e.colno}") from e


def load(path, kind: str):
    """Load a ``scenario``, ``behavior``, ``wiring`` or ``report`` file."""
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; choose from {KINDS}")
    path = Path(path)
    data = _read_json(path)
    base = path.parent
    where = str(path)
    if kind == "scenario":
        return scenario_from_dict(data, where)
    if kind == "behavior":
        return behavior_from_dict(data, where, base)
    if kind == "wiring":
        return wiring_from_dict(data, where, base)
    return data


def to_dict(value, kind: str):
    if kind == "scenario":
        return scenario_to_dict(value)
    if kind == "behavior":
        return behavior_to_dict(value)
    if kind == "wiring":
        return wiring_to_dict(value)
    if kind == "report":
        return value
    raise ValueError(f"unknown kind {kind!r}; choose from {KINDS}")


def dumps(value, kind: str) -> str:
    return json.dumps(to_dict(value, kind), indent=2, sort_keys=False)


def store(value, path, kind: str) -> None:
    Path(path).write_text(dumps(value, kind) + "\n")
