"""Non-contextual wirings: pre-processing, post-processing and their composition.

Wire identity is positional.  For a pre-box context ``beta = (b_1, ..., b_n)``
and light tuple ``r``, wire ``i`` carries the pre-box button ``b_i`` and light
``r_i`` to the target button ``light_to_button[(b_i, r_i)]``; the target light
``s_i`` then selects the post-box button ``button_from_light[(gamma_i, s_i)]``,
whose response ``t_i`` may also depend on ``(b_i, r_i)`` and the shared
variable ``phi``.

Responses are keyed by ``(pre button, pre light, post button, phi index)``.
Keys of the form ``(None, None, post button, phi)`` do not depend on the pre
stage; they are the only keys standalone post-processing uses and act as a
fallback inside a full wiring.
"""

from __future__ import annotations

import itertools
import math
import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Optional, Sequence

from .boxes import random_nc_behavior, random_nc_model, random_nd_behavior
from .quantifiers import QUANTIFIERS, NCModel, check_noncontextual
from .scenario import (
    Behavior,
    Diagnostic,
    GlobalAssignment,
    Scenario,
    assignment_to_behavior,
    check_nondisturbance,
)


class WiringError(ValueError):
    """Invalid wiring, or a wiring that cannot be sampled or applied."""

    def __init__(self, message: str, diagnostics: Sequence[Diagnostic] = ()):
        super().__init__(message)
        self.diagnostics = list(diagnostics)


class SuiteError(ValueError):
    """Unsupported harness configuration."""


def _context_lookup(s: Scenario) -> dict:
    return {frozenset(ctx): k for k, ctx in enumerate(s.contexts)}


# -- types ------------------------------------------------------------------------


@dataclass(frozen=True)
class PreProcessing:
    """NC pre-box plus the map from its (button, light) pairs to target buttons.

    The pre-box is certified non-contextual at construction: by replaying
    ``pre_model`` when one is supplied, otherwise by the LP membership test.
    The outcome is kept in :attr:`certified` and application refuses an
    uncertified box.
    """

    pre_box: Behavior
    light_to_button: Mapping
    pre_model: Optional[NCModel] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "light_to_button", dict(self.light_to_button))
        object.__setattr__(self, "_certified", None)

    @property
    def certified(self) -> bool:
        if self._certified is None:
            ok = False
            if self.pre_model is not None and self.pre_model.reproduces(self.pre_box):
                ok = True
            elif check_nondisturbance(self.pre_box).ok:
                mode = "exact" if self.pre_box.exact else "float"
                ok = check_noncontextual(self.pre_box, mode=mode).noncontextual
            object.__setattr__(self, "_certified", ok)
        return self._certified

    @property
    def scenario(self) -> Scenario:
        return self.pre_box.scenario


@dataclass(frozen=True)
class PostProcessing:
    """Wire-local responses mixed by a shared variable ``phi``.

    ``joint`` optionally declares the full multi-wire response as
    ``{(buttons, lights, post_context): {t_tuple: prob}}`` with ``buttons`` and
    ``lights`` tuples of ``None`` for the standalone form.  Validation checks
    it against the factorised form; a declaration that does not factorise
    makes the wiring invalid.
    """

    post_scenario: Scenario
    button_from_light: Mapping
    responses: Mapping
    phi: tuple = (Fraction(1),)
    joint: Optional[Mapping] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "button_from_light", dict(self.button_from_light))
        object.__setattr__(self, "responses",
                           {k: dict(v) for k, v in self.responses.items()})
        object.__setattr__(self, "phi", tuple(self.phi))

    @property
    def outcomes(self) -> tuple:
        return self.post_scenario.outcomes

    def response(self, button, light, post_button, phi: int) -> dict:
        r = self.responses.get((button, light, post_button, phi))
        if r is None:
            r = self.responses.get((None, None, post_button, phi))
        if r is None:
            raise WiringError(
                f"no response for post button {post_button!r} (pre pair {button!r}, {light!r}, phi {phi})")
        return r

    def factorised(self, buttons, lights, post_ctx) -> dict:
        """``sum_phi p(phi) prod_i p(t_i | b_i, r_i, d_i, phi)`` as a table on ``t``."""
        out: dict = {}
        for f, pf in enumerate(self.phi):
            if not pf:
                continue
            dists = [self.response(b, r, d, f) for b, r, d in zip(buttons, lights, post_ctx)]
            for combo in itertools.product(*(d.items() for d in dists)):
                p = pf
                for _, q in combo:
                    p = p * q
                if p:
                    t = tuple(o for o, _ in combo)
                    out[t] = out.get(t, 0) + p
        return out


@dataclass(frozen=True)
class NCWiring:
    pre: PreProcessing
    post: PostProcessing
    label: str = field(default="", compare=False)


# -- validation -------------------------------------------------------------------


def _check_map(mapping: Mapping, src: Scenario, dst: Scenario, what: str) -> list[Diagnostic]:
    """Every joint light of a source context must land on a target context."""
    out = []
    for m in src.measurements:
        for o in src.outcomes:
            if (m, o) not in mapping:
                out.append(Diagnostic("error", f"{what}-partial",
                                      f"{what} has no entry for ({m!r}, {o!r})"))
            elif mapping[(m, o)] not in dst.measurements:
                out.append(Diagnostic("error", f"{what}-unknown",
                                      f"{what} sends ({m!r}, {o!r}) to unknown {mapping[(m, o)]!r}"))
    if out:
        return out
    lookup = _context_lookup(dst)
    for ctx in src.contexts:
        for lights in itertools.product(src.outcomes, repeat=len(ctx)):
            image = [mapping[(m, o)] for m, o in zip(ctx, lights)]
            if len(set(image)) != len(image) or frozenset(image) not in lookup:
                out.append(Diagnostic(
                    "error", f"{what}-inconsistent",
                    f"{what}: context {ctx} with lights {lights} fires {tuple(image)}, "
                    "which is not a context"))
    return out


def _check_distribution(table: Mapping, outcomes, where: str) -> list[Diagnostic]:
    bad = [o for o in table if o not in outcomes]
    if bad:
        return [Diagnostic("error", "response-key", f"{where}: unknown outcomes {bad}")]
    if any(p < 0 for p in table.values()):
        return [Diagnostic("error", "response-range", f"{where}: negative probability")]
    total = sum(table.values())
    if abs(total - 1) > 1e-9 or (all(isinstance(p, Fraction) for p in table.values()) and total != 1):
        return [Diagnostic("error", "response-normalization", f"{where}: sums to {total}")]
    return []


def _wire_keys(w: NCWiring, target: Scenario):
    """Every (pre button, pre light, post button) a wire can reach."""
    pre, post = w.pre, w.post
    seen = set()
    for ctx in pre.scenario.contexts:
        for b in ctx:
            for r in pre.scenario.outcomes:
                m = pre.light_to_button[(b, r)]
                for s in target.outcomes:
                    seen.add((b, r, post.button_from_light[(m, s)]))
    return sorted(seen, key=repr)


def _post_keys_standalone(post: PostProcessing, target: Scenario):
    return sorted({post.button_from_light[(m, s)] for m in target.measurements
                   for s in target.outcomes}, key=repr)


def _check_post(post: PostProcessing, target: Scenario, keys) -> list[Diagnostic]:
    out = _check_map(post.button_from_light, target, post.post_scenario, "buttonFromLight")
    if not post.phi:
        out.append(Diagnostic("error", "phi-empty", "phi distribution is empty"))
    elif any(p < 0 for p in post.phi) or sum(post.phi) != 1 and abs(sum(post.phi) - 1) > 1e-9:
        out.append(Diagnostic("error", "phi-normalization", f"phi {post.phi} is not a distribution"))
    if out:
        return out
    for key in keys:
        b, r, d = key
        for f in range(len(post.phi)):
            try:
                table = post.response(b, r, d, f)
            except WiringError as e:
                out.append(Diagnostic("error", "response-missing", str(e)))
                continue
            out += _check_distribution(table, post.outcomes, f"response {key + (f,)}")
    if post.joint and not out:
        for (buttons, lights, post_ctx), table in post.joint.items():
            want = post.factorised(buttons, lights, post_ctx)
            keys_t = set(want) | set(table)
            gap = max((abs(table.get(t, 0) - want.get(t, 0)) for t in keys_t), default=0)
            if gap > 1e-12:
                out.append(Diagnostic(
                    "error", "post-factorization",
                    f"declared joint response on {post_ctx} (pre {buttons}, {lights}) is not "
                    f"sum_phi p(phi) prod_i p_i; off by {gap}"))
    return out


def validate_preprocessing(pre: PreProcessing, target: Scenario) -> list[Diagnostic]:
    out = [d for d in pre.scenario.diagnostics if d.level == "error"]
    out += _check_map(pre.light_to_button, pre.scenario, target, "lightToButton")
    if not pre.certified:
        out.append(Diagnostic("error", "pre-box-contextual", "pre-box not non-contextual"))
    return out


def validate_postprocessing(post: PostProcessing, target: Scenario) -> list[Diagnostic]:
    keys = []
    try:
        keys = [(None, None, d) for d in _post_keys_standalone(post, target)]
    except KeyError:
        pass
    return _check_post(post, target, keys)


def validate_wiring(w: NCWiring, target: Scenario) -> list[Diagnostic]:
    """Diagnostics for every violated consistency demand; empty iff valid."""
    out = validate_preprocessing(w.pre, target)
    if any(d.code.startswith("lightToButton") for d in out):
        return out + _check_map(w.post.button_from_light, target, w.post.post_scenario,
                                "buttonFromLight")
    try:
        keys = _wire_keys(w, target)
    except KeyError:
        keys = []
    return out + _check_post(w.post, target, keys)


def _require(diags: list[Diagnostic]):
    errors = [d for d in diags if d.level == "error"]
    if errors:
        raise WiringError("invalid wiring: " + "; ".join(d.message for d in errors[:3]), errors)


# -- application ------------------------------------------------------------------


def _wired_table(b: Behavior, lookup: dict, image) -> tuple:
    """Target table for the context fired by ``image`` and the wire order of its keys."""
    k = lookup[frozenset(image)]
    ctx = b.scenario.contexts[k]
    perm = [ctx.index(m) for m in image]
    return [(tuple(key[j] for j in perm), p) for key, p in b.tables[k].items()]


def _run(b: Behavior, pre: Optional[PreProcessing], post: Optional[PostProcessing]) -> Behavior:
    s = b.scenario
    lookup = _context_lookup(s)
    if pre is not None:
        out_s = pre.scenario
        outer = pre.pre_box.tables
    else:
        out_s = s
        outer = [{(None,) * len(ctx): Fraction(1)} for ctx in s.contexts]
    outcomes = post.outcomes if post is not None else s.outcomes
    exact = b.exact and (pre is None or pre.pre_box.exact)
    tables = []
    for k, beta in enumerate(out_s.contexts):
        row: dict = {}
        for r, pr in outer[k].items():
            if pre is not None:
                image = [pre.light_to_button[(m, o)] for m, o in zip(beta, r)]
                buttons = beta
            else:
                image, buttons = list(beta), (None,) * len(beta)
            for sv, ps in _wired_table(b, lookup, image):
                w = pr * ps
                if post is None:
                    row[sv] = row.get(sv, 0) + w
                    continue
                post_ctx = [post.button_from_light[(m, o)] for m, o in zip(image, sv)]
                for t, pt in post.factorised(buttons, r, post_ctx).items():
                    row[t] = row.get(t, 0) + w * pt
        tables.append(row)
    exact = exact and all(isinstance(p, Fraction) for row in tables for p in row.values())
    if not exact:
        tables = [{t: float(p) for t, p in row.items()} for row in tables]
    meta = {"wired_from": len(s.contexts)}
    return Behavior(Scenario(out_s.measurements, outcomes, out_s.contexts, meta), tables)


def apply_preprocessing(w: PreProcessing, b: Behavior) -> Behavior:
    """``p_beta(s) = sum_r p_gamma(r)(s) p_beta(r)`` on the pre-box scenario."""
    _require(validate_preprocessing(w, b.scenario))
    return _run(b, w, None)


def apply_postprocessing(w: PostProcessing, b: Behavior) -> Behavior:
    """``p_gamma(t) = sum_s p_delta(s)(t) p_gamma(s)`` with pre-independent responses."""
    _require(validate_postprocessing(w, b.scenario))
    return _run(b, None, w)


def apply_ncwiring(w: NCWiring, b: Behavior) -> Behavior:
    """Full composition: pre-box, target box, then phi-mixed wire-local responses."""
    _require(validate_wiring(w, b.scenario))
    return _run(b, w.pre, w.post)


# -- named wirings ----------------------------------------------------------------


def identity_preprocessing(target: Scenario) -> PreProcessing:
    """Deterministic pre-box whose every button is wired to the same target button."""
    g = GlobalAssignment(target.measurements, (target.outcomes[0],) * len(target.measurements))
    box = assignment_to_behavior(g, target)
    l2b = {(m, o): m for m in target.measurements for o in target.outcomes}
    return PreProcessing(box, l2b, NCModel({g: Fraction(1)}))


def lifted_post_scenario(target: Scenario, outcomes=None) -> Scenario:
    """Post scenario with one button ``"m=o"`` per target (button, light) pair."""
    outcomes = tuple(outcomes or target.outcomes)
    ms = tuple(f"{m}={o}" for m in target.measurements for o in target.outcomes)
    ctxs = []
    for ctx in target.contexts:
        for s in itertools.product(target.outcomes, repeat=len(ctx)):
            ctxs.append(tuple(f"{m}={o}" for m, o in zip(ctx, s)))
    return Scenario(ms, outcomes, tuple(ctxs))


def relabel_postprocessing(target: Scenario, relabel: Callable[[str, str], Mapping]) -> PostProcessing:
    """Standalone post-processing on the lifted scenario.

    ``relabel(m, o)`` gives the output distribution for light ``o`` of button
    ``m``; identity, flips and constant outputs are all of this form.
    """
    post_s = lifted_post_scenario(target)
    b2 = {(m, o): f"{m}={o}" for m in target.measurements for o in target.outcomes}
    resp = {(None, None, f"{m}={o}", 0): dict(relabel(m, o))
            for m in target.measurements for o in target.outcomes}
    return PostProcessing(post_s, b2, resp, (Fraction(1),))


def identity_postprocessing(target: Scenario) -> PostProcessing:
    return relabel_postprocessing(target, lambda m, o: {o: Fraction(1)})


def identity_wiring(target: Scenario) -> NCWiring:
    return NCWiring(identity_preprocessing(target), identity_postprocessing(target), "identity")


# -- sampling ---------------------------------------------------------------------


@dataclass(frozen=True)
class WiringSamplerConfig:
    """Shape of sampled wirings.

    ``pre_scenario`` and ``post_scenario`` default to the target's structure,
    ``post_outcomes`` to the target's outcomes.  ``resolution`` is the grid
    size of the exact rational points drawn on each probability simplex.
    """

    opclass: str = "full"
    pre_scenario: Optional[Scenario] = None
    post_scenario: Optional[Scenario] = None
    max_phi: int = 4
    pre_support: int = 4
    resolution: int = 6
    map_enumeration_limit: int = 50_000
    max_retries: int = 50


def _simplex_point(rng: random.Random, k: int, resolution: int, positive: bool = False) -> list:
    """Uniform draw from the grid points of the probability simplex (stars and bars)."""
    if positive:
        resolution = max(resolution, k)
        cuts = sorted(rng.sample(range(1, resolution), k - 1))
        parts = [b - a for a, b in zip([0] + cuts, cuts + [resolution])]
    else:
        bars = sorted(rng.sample(range(resolution + k - 1), k - 1))
        edges = [-1] + bars + [resolution + k - 1]
        parts = [edges[i + 1] - edges[i] - 1 for i in range(k)]
    return [Fraction(x, resolution) for x in parts]


def _map_search(src: Scenario, dst: Scenario, rng: Optional[random.Random], limit: int):
    """Backtracking over maps ``(m, o) -> dst measurement`` consistent on every context.

    With ``rng`` None it enumerates up to ``limit`` solutions in a fixed
    order; otherwise it returns the first solution of a shuffled search.
    """
    keys = [(m, o) for m in src.measurements for o in src.outcomes]
    lookup = _context_lookup(dst)
    # constraints become checkable once all keys of a context/lights pair are set
    checks = {i: [] for i in range(len(keys))}
    pos = {k: i for i, k in enumerate(keys)}
    for ctx in src.contexts:
        for lights in itertools.product(src.outcomes, repeat=len(ctx)):
            idx = [pos[(m, o)] for m, o in zip(ctx, lights)]
            checks[max(idx)].append(idx)
    # partial feasibility: an assigned subset must sit inside some context
    sub_ok = {}

    def fits(image):
        key = frozenset(image)
        if key not in sub_ok:
            sub_ok[key] = any(key <= c for c in lookup)
        return sub_ok[key]

    pairs = {i: [] for i in range(len(keys))}
    for ctx in src.contexts:
        for a, b in itertools.combinations(range(len(ctx)), 2):
            for oa in src.outcomes:
                for ob in src.outcomes:
                    i, j = pos[(ctx[a], oa)], pos[(ctx[b], ob)]
                    pairs[max(i, j)].append(min(i, j))
    found = []
    assign = [None] * len(keys)

    def rec(i):
        if i == len(keys):
            found.append(dict(zip(keys, assign)))
            return rng is not None or len(found) >= limit
        options = list(dst.measurements)
        if rng is not None:
            rng.shuffle(options)
        for m in options:
            assign[i] = m
            if any(assign[j] == m or not fits((assign[j], m)) for j in pairs[i]):
                continue
            ok = True
            for idx in checks[i]:
                image = [assign[j] for j in idx]
                if len(set(image)) != len(image) or frozenset(image) not in lookup:
                    ok = False
                    break
            if ok and rec(i + 1):
                return True
        assign[i] = None
        return False

    rec(0)
    return found


@lru_cache(maxsize=32)
def _consistent_maps(src: Scenario, dst: Scenario, limit: int):
    maps = _map_search(src, dst, None, limit)
    return tuple(tuple(sorted(m.items())) for m in maps), len(maps) >= limit


def sample_consistent_map(src: Scenario, dst: Scenario, rng: random.Random, limit: int = 50_000) -> dict:
    """Uniform over all consistent maps when there are fewer than ``limit``.

    Above the limit it falls back to a shuffled backtracking search, which is
    not uniform.
    """
    maps, truncated = _consistent_maps(src, dst, limit)
    if not maps:
        raise WiringError(f"no consistent map from {src.contexts} into {dst.contexts}")
    if not truncated:
        return dict(rng.choice(maps))
    return _map_search(src, dst, rng, 1)[0]


def _sample_pre(target: Scenario, cfg: WiringSamplerConfig, rng: random.Random) -> PreProcessing:
    pre_s = cfg.pre_scenario or target
    box, model = random_nc_model(pre_s, rng, max_support=cfg.pre_support, resolution=cfg.resolution)
    l2b = sample_consistent_map(pre_s, target, rng, cfg.map_enumeration_limit)
    return PreProcessing(box, l2b, NCModel(model))


def _sample_post(target: Scenario, cfg: WiringSamplerConfig, rng: random.Random,
                 keys: Callable[[dict], list]) -> PostProcessing:
    post_s = cfg.post_scenario or target
    b2 = sample_consistent_map(target, post_s, rng, cfg.map_enumeration_limit)
    n_phi = rng.randint(1, cfg.max_phi)
    phi = tuple(_simplex_point(rng, n_phi, cfg.resolution, positive=True))
    resp = {}
    k = len(post_s.outcomes)
    for key in keys(b2):
        for f in range(n_phi):
            point = _simplex_point(rng, k, cfg.resolution)
            resp[key + (f,)] = {o: p for o, p in zip(post_s.outcomes, point) if p}
    return PostProcessing(post_s, b2, resp, phi)


def sample_random_ncwiring(target: Scenario, seed: int,
                           config: Optional[WiringSamplerConfig] = None) -> NCWiring:
    """Random valid wiring, a deterministic function of ``(target, seed, config)``."""
    cfg = config or WiringSamplerConfig()
    if cfg.opclass not in ("full", "post-only"):
        raise SuiteError(f"unknown operation class {cfg.opclass!r}")
    rng = random.Random(seed)
    last = None
    for _ in range(cfg.max_retries):
        try:
            if cfg.opclass == "post-only":
                pre = identity_preprocessing(target)
                post = _sample_post(target, cfg, rng, lambda b2: [
                    (None, None, d) for d in sorted(set(b2.values()), key=repr)])
            else:
                pre = _sample_pre(target, cfg, rng)
                pre_s = pre.scenario

                def keys(b2):
                    return sorted({(m, r, b2[(pre.light_to_button[(m, r)], s)])
                                   for m in pre_s.measurements for r in pre_s.outcomes
                                   for s in target.outcomes}, key=repr)
                post = _sample_post(target, cfg, rng, keys)
            w = NCWiring(pre, post, f"{cfg.opclass}:{seed}")
            _require(validate_wiring(w, target))
            return w
        except WiringError as e:
            last = e
    raise WiringError(f"no valid wiring after {cfg.max_retries} attempts: {last}")


# -- harnesses --------------------------------------------------------------------


def _scenario_summary(s: Scenario) -> dict:
    return {"measurements": list(s.measurements), "outcomes": list(s.outcomes),
            "contexts": [list(c) for c in s.contexts]}


def _payload(**kw) -> dict:
    from .io import behavior_to_dict, wiring_to_dict
    out = {}
    for k, v in kw.items():
        if isinstance(v, Behavior):
            out[k] = behavior_to_dict(v)
        elif isinstance(v, NCWiring):
            out[k] = wiring_to_dict(v)
        else:
            out[k] = v
    return out


WiringFactory = Callable[[Scenario, int], NCWiring]


def _make_wiring(factory, scenario, seed, cfg):
    """Build and validate a trial wiring; returns ``(wiring, diagnostics)``."""
    try:
        w = factory(scenario, seed) if factory else sample_random_ncwiring(scenario, seed, cfg)
    except WiringError as e:
        return None, [str(d) for d in e.diagnostics] or [str(e)]
    diags = [d for d in validate_wiring(w, scenario) if d.level == "error"]
    return (None if diags else w), [str(d) for d in diags]


def run_preservation_suite(scenario: Scenario, trials: int, seed: int,
                           config: Optional[WiringSamplerConfig] = None,
                           wiring_factory: Optional[WiringFactory] = None) -> dict:
    """ND and NC preservation under random wirings, one derived seed per trial.

    Each trial draws an ND behavior (for the ND check) and an NC mixture (for
    the LP-certified NC check).  Constructions failing validation are counted
    as invalid and never run.
    """
    start = time.perf_counter()
    nd_pass = nc_pass = invalid = 0
    first_bad = first_invalid = None
    for i in range(trials):
        tseed = seed + i
        w, diags = _make_wiring(wiring_factory, scenario, tseed, config)
        if w is None:
            invalid += 1
            if first_invalid is None:
                first_invalid = {"trial": i, "seed": tseed, "diagnostics": diags}
            continue
        rng = random.Random(tseed)
        nd_in = random_nd_behavior(scenario, rng)
        nd_out = apply_ncwiring(w, nd_in)
        nd = check_nondisturbance(nd_out)
        nc_in = random_nc_behavior(scenario, rng)
        nc_out = apply_ncwiring(w, nc_in)
        nc = check_nondisturbance(nc_out).ok and check_noncontextual(nc_out).noncontextual
        nd_pass += nd.ok
        nc_pass += bool(nc)
        if (not nd.ok or not nc) and first_bad is None:
            first_bad = _payload(trial=i, seed=tseed, nd_ok=nd.ok, nc_ok=bool(nc),
                                 wiring=w, nd_input=nd_in, nc_input=nc_in)
    ran = trials - invalid
    return {
        "suite": "preservation",
        "scenario": _scenario_summary(scenario),
        "trials": trials,
        "seed": seed,
        "nd_pass": nd_pass,
        "nc_pass": nc_pass,
        "invalid": invalid,
        "first_counterexample": first_bad,
        "first_invalid": first_invalid,
        "ok": invalid == 0 and nd_pass == ran and nc_pass == ran,
        "seconds": round(time.perf_counter() - start, 3),
    }


# solver tolerance for the float quantifiers, and the slack allowed in the check
MONOTONICITY_TOLERANCE = {"cf": 0, "dmax": 0, "du": 0, "eu": 1e-6, "emax": 1e-4}
_SOLVER_TOL = {"eu": 1e-6, "emax": 1e-5}
POST_ONLY = ("eu", "du")


def run_monotonicity_suite(quantifier: str, scenario: Scenario, trials: int, seed: int,
                           opclass: str = "full", tol: Optional[float] = None,
                           config: Optional[WiringSamplerConfig] = None,
                           wiring_factory: Optional[WiringFactory] = None) -> dict:
    """Check ``Q(W(B)) <= Q(B) + tol`` on random ND behaviors and wirings.

    Uniform-average quantifiers (``eu``, ``du``) are only claimed monotone
    under post-processing, so they refuse ``opclass='full'``.
    """
    if quantifier not in QUANTIFIERS:
        raise SuiteError(f"unknown quantifier {quantifier!r}; choose from {sorted(QUANTIFIERS)}")
    if opclass not in ("full", "post-only"):
        raise SuiteError(f"unknown operation class {opclass!r}")
    if quantifier in POST_ONLY and opclass == "full":
        raise SuiteError(
            f"{quantifier} is only asserted monotone under post-processing wirings; "
            "rerun with opclass='post-only'")
    tol = MONOTONICITY_TOLERANCE[quantifier] if tol is None else tol
    cfg = config or WiringSamplerConfig()
    if cfg.opclass != opclass:
        cfg = WiringSamplerConfig(**{**cfg.__dict__, "opclass": opclass})
    q = QUANTIFIERS[quantifier]
    kwargs = {"tol": _SOLVER_TOL[quantifier]} if quantifier in _SOLVER_TOL else {}
    start = time.perf_counter()
    passed = invalid = contextual = 0
    worst = -math.inf
    first_bad = first_invalid = None
    for i in range(trials):
        tseed = seed + i
        w, diags = _make_wiring(wiring_factory, scenario, tseed, cfg)
        if w is None:
            invalid += 1
            if first_invalid is None:
                first_invalid = {"trial": i, "seed": tseed, "diagnostics": diags}
            continue
        b = random_nd_behavior(scenario, random.Random(tseed))
        out = apply_ncwiring(w, b)
        before = q(b, **kwargs).value
        after = q(out, **kwargs).value
        contextual += float(before) > 1e-7
        excess = float(after - before)
        worst = max(worst, excess)
        if after <= before + tol:
            passed += 1
        elif first_bad is None:
            first_bad = _payload(trial=i, seed=tseed, before=str(before), after=str(after),
                                 wiring=w, behavior=b)
    ran = trials - invalid
    return {
        "suite": "monotonicity",
        "quantifier": quantifier,
        "opclass": opclass,
        "scenario": _scenario_summary(scenario),
        "trials": trials,
        "seed": seed,
        "tolerance": tol,
        "passed": passed,
        "contextual_inputs": contextual,
        "max_increase": None if worst == -math.inf else worst,
        "invalid": invalid,
        "first_counterexample": first_bad,
        "first_invalid": first_invalid,
        "ok": invalid == 0 and passed == ran,
        "seconds": round(time.perf_counter() - start, 3),
    }
