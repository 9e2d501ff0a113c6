import random
from fractions import Fraction as F

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from ctxkit.boxes import (
    chain_scenario,
    chsh_scenario,
    cycle_scenario,
    deterministic,
    pr_box,
    random_nc_behavior,
    random_nd_behavior,
    uniform_behavior,
)
from ctxkit.quantifiers import check_noncontextual, contextual_fraction
from ctxkit.scenario import Behavior, Scenario, check_nondisturbance, mix_behaviors
from ctxkit.wirings import (
    NCWiring,
    PostProcessing,
    PreProcessing,
    SuiteError,
    WiringError,
    WiringSamplerConfig,
    apply_ncwiring,
    apply_postprocessing,
    apply_preprocessing,
    identity_postprocessing,
    identity_preprocessing,
    identity_wiring,
    relabel_postprocessing,
    run_monotonicity_suite,
    run_preservation_suite,
    sample_consistent_map,
    sample_random_ncwiring,
    validate_postprocessing,
    validate_preprocessing,
    validate_wiring,
)

half = F(1, 2)
SCENARIOS = [chain_scenario(), chsh_scenario(), cycle_scenario(3)]


def tables(b):
    return [{k: v for k, v in row.items() if v} for row in b.tables]


def oracle_apply(w, b):
    return oracles.direct_wiring(b, w.pre.pre_box, w.pre.light_to_button,
                                 w.post.button_from_light, w.post.responses, w.post.phi)


def chain_nd(seed=0):
    return random_nd_behavior(chain_scenario(), random.Random(seed))


# -- pre-processing ---------------------------------------------------------------


def test_identity_preprocessing():
    for s in SCENARIOS:
        b = random_nd_behavior(s, random.Random(2))
        out = apply_preprocessing(identity_preprocessing(s), b)
        assert out.scenario.contexts == s.contexts and tables(out) == tables(b)


def test_preprocessing_onto_one_fixed_context():
    pre_s = Scenario(("u", "v", "w"), ("0", "1"), (("u", "v"), ("w", "v")))
    box = deterministic(pre_s, {"u": "1", "v": "0", "w": "1"})
    l2b = {("u", o): "x" for o in "01"} | {("v", o): "y" for o in "01"} | {("w", o): "x" for o in "01"}
    b = chain_nd(3)
    out = apply_preprocessing(PreProcessing(box, l2b), b)
    assert tables(out) == [tables(b)[0]] * 2


def routing_preprocessing():
    """Correlated uniform pre-box that fires {x, y} on lights 00 and {z, y} on 11."""
    pre_s = Scenario(("u", "v"), ("0", "1"), (("u", "v"),))
    box = Behavior(pre_s, [{("0", "0"): half, ("1", "1"): half}])
    l2b = {("u", "0"): "x", ("u", "1"): "z", ("v", "0"): "y", ("v", "1"): "y"}
    return PreProcessing(box, l2b)


def test_routing_preprocessing_on_chain():
    b = chain_nd(5)
    out = apply_preprocessing(routing_preprocessing(), b)
    # wire order (z, y) reverses the keys of the {y, z} table
    want = {}
    for (x, y), p in b.tables[0].items():
        want[(x, y)] = want.get((x, y), 0) + half * p
    for (y, z), p in b.tables[1].items():
        want[(z, y)] = want.get((z, y), 0) + half * p
    assert tables(out) == [{k: v for k, v in want.items() if v}]
    w = NCWiring(routing_preprocessing(), identity_postprocessing(chain_scenario()))
    assert tables(apply_ncwiring(w, b)) == oracle_apply(w, b)


# -- post-processing --------------------------------------------------------------


def test_identity_postprocessing():
    b = random_nd_behavior(chsh_scenario(), random.Random(9))
    assert tables(apply_postprocessing(identity_postprocessing(b.scenario), b)) == tables(b)


def test_constant_response():
    post = relabel_postprocessing(chsh_scenario(), lambda m, o: {"1": 1})
    out = apply_postprocessing(post, pr_box())
    assert tables(out) == [{("1", "1"): 1}] * 4


def test_flip_on_first_wire_maps_pr_to_anti_pr():
    def flip(m, o):
        return {("1" if o == "0" else "0") if m.startswith("a") else o: 1}
    post = relabel_postprocessing(chsh_scenario(), flip)
    out = apply_postprocessing(post, pr_box())
    assert tables(out) == tables(pr_box(anti=True))
    w = NCWiring(identity_preprocessing(chsh_scenario()), post)
    assert oracle_apply(w, pr_box()) == tables(pr_box(anti=True))


def test_post_outcome_alphabet_change():
    post = relabel_postprocessing(chain_scenario(), lambda m, o: {"a": half, "b": half})
    post = PostProcessing(Scenario(
        post.post_scenario.measurements, ("a", "b"), post.post_scenario.contexts),
        post.button_from_light, post.responses)
    out = apply_postprocessing(post, chain_nd())
    assert out.scenario.outcomes == ("a", "b")
    assert out == uniform_behavior(out.scenario)


# -- full wirings -----------------------------------------------------------------


def test_identity_wiring_is_identity():
    for s in SCENARIOS:
        b = random_nd_behavior(s, random.Random(4))
        assert validate_wiring(identity_wiring(s), s) == []
        assert tables(apply_ncwiring(identity_wiring(s), b)) == tables(b)


@pytest.mark.parametrize("si", range(len(SCENARIOS)))
def test_sampled_wirings_match_direct_sum(si):
    s = SCENARIOS[si]
    for seed in range(8):
        w = sample_random_ncwiring(s, seed)
        b = random_nd_behavior(s, random.Random(seed))
        assert tables(apply_ncwiring(w, b)) == oracle_apply(w, b)


def test_post_only_wirings_match_direct_sum():
    s = chsh_scenario()
    cfg = WiringSamplerConfig(opclass="post-only")
    for seed in range(5):
        w = sample_random_ncwiring(s, seed, cfg)
        b = random_nd_behavior(s, random.Random(seed))
        assert tables(apply_ncwiring(w, b)) == tables(apply_postprocessing(w.post, b)) == oracle_apply(w, b)


def test_wiring_can_turn_pr_into_any_nc_point():
    # a wiring whose responses ignore the target light outputs an NC behavior
    s = chsh_scenario()
    post = relabel_postprocessing(s, lambda m, o: {"0": F(1, 3), "1": F(2, 3)})
    out = apply_ncwiring(NCWiring(identity_preprocessing(s), post), pr_box())
    assert check_noncontextual(out) and contextual_fraction(out).value == 0


# -- validation -------------------------------------------------------------------


def test_inconsistent_light_map_names_the_fired_set():
    s = chain_scenario()
    pre = identity_preprocessing(s)
    l2b = dict(pre.light_to_button)
    l2b[("y", "1")] = "x"  # x together with x, and x with z, never a context
    bad = PreProcessing(pre.pre_box, l2b, pre.pre_model)
    diags = validate_preprocessing(bad, s)
    assert diags and all(d.code == "lightToButton-inconsistent" for d in diags)
    assert any("('x', 'y')" in d.message and "('x', 'x')" in d.message for d in diags)
    with pytest.raises(WiringError) as e:
        apply_preprocessing(bad, chain_nd())
    assert e.value.diagnostics


def test_partial_and_unknown_maps():
    s = chain_scenario()
    pre = identity_preprocessing(s)
    l2b = dict(pre.light_to_button)
    del l2b[("z", "0")]
    assert [d.code for d in validate_preprocessing(PreProcessing(pre.pre_box, l2b), s)] \
        == ["lightToButton-partial"]
    l2b[("z", "0")] = "q"
    assert [d.code for d in validate_preprocessing(PreProcessing(pre.pre_box, l2b), s)] \
        == ["lightToButton-unknown"]


def test_contextual_pre_box_is_rejected():
    s = chsh_scenario()
    pre = PreProcessing(pr_box(), identity_preprocessing(s).light_to_button)
    assert not pre.certified
    diags = validate_wiring(NCWiring(pre, identity_postprocessing(s)), s)
    assert [d.message for d in diags] == ["pre-box not non-contextual"]
    with pytest.raises(WiringError):
        apply_ncwiring(NCWiring(pre, identity_postprocessing(s)), uniform_behavior(s))


def test_pre_model_that_does_not_replay_falls_back_to_lp():
    s = chsh_scenario()
    ident = identity_preprocessing(s)
    pre = PreProcessing(uniform_behavior(s), ident.light_to_button, ident.pre_model)
    assert pre.certified


def test_post_response_problems():
    s = chain_scenario()
    post = identity_postprocessing(s)
    missing = dict(post.responses)
    missing.pop((None, None, "x=0", 0))
    diags = validate_postprocessing(PostProcessing(post.post_scenario, post.button_from_light, missing), s)
    assert [d.code for d in diags] == ["response-missing"]
    skewed = dict(post.responses)
    skewed[(None, None, "x=0", 0)] = {"0": half}
    diags = validate_postprocessing(PostProcessing(post.post_scenario, post.button_from_light, skewed), s)
    assert [d.code for d in diags] == ["response-normalization"]
    diags = validate_postprocessing(
        PostProcessing(post.post_scenario, post.button_from_light, post.responses, (half, F(1, 3))), s)
    assert [d.code for d in diags] == ["phi-normalization"]


def corrupted_wiring(s=None):
    """Two wires correlated through a hidden bit that is not declared in phi."""
    s = s or chsh_scenario()
    ident = identity_wiring(s)
    uniform = {"0": half, "1": half}
    responses = {k: uniform for k in ident.post.responses}
    ctx = tuple(f"{m}=0" for m in s.contexts[0])
    joint = {((None, None), (None, None), ctx): {("0", "0"): half, ("1", "1"): half}}
    post = PostProcessing(ident.post.post_scenario, ident.post.button_from_light, responses,
                          (F(1),), joint)
    return NCWiring(ident.pre, post, "corrupted")


def test_corrupted_joint_response_is_invalid():
    s = chsh_scenario()
    w = corrupted_wiring(s)
    assert [d.code for d in validate_wiring(w, s)] == ["post-factorization"]
    # declaring the factorised table instead is accepted
    ok = corrupted_wiring(s)
    key = next(iter(ok.post.joint))
    ok.post.joint[key] = ok.post.factorised(*key)
    assert validate_wiring(ok, s) == []


# -- sampler ----------------------------------------------------------------------


def test_sampler_is_deterministic():
    for s in SCENARIOS:
        for seed in (0, 7, 123):
            a, b = sample_random_ncwiring(s, seed), sample_random_ncwiring(s, seed)
            assert a == b
            assert validate_wiring(a, s) == []
            assert 1 <= len(a.post.phi) <= 4 and sum(a.post.phi) == 1
    assert sample_random_ncwiring(chsh_scenario(), 1) != sample_random_ncwiring(chsh_scenario(), 2)


def test_consistent_maps_are_consistent():
    rng = random.Random(0)
    for src, dst in ((chain_scenario(), chsh_scenario()), (chsh_scenario(), chsh_scenario()),
                     (cycle_scenario(3), chain_scenario())):
        try:
            m = sample_consistent_map(src, dst, rng)
        except WiringError:
            continue
        pre = PreProcessing(uniform_behavior(src), m)
        assert not [d for d in validate_preprocessing(pre, dst) if d.code.startswith("lightToButton")]


def test_no_consistent_map():
    # a 3-measurement pairwise-compatible source cannot land in a 2-element context
    tri = Scenario(("p", "q", "r"), ("0", "1"), (("p", "q", "r"),))
    with pytest.raises(WiringError):
        sample_consistent_map(tri, chain_scenario(), random.Random(0))


def test_unknown_opclass():
    with pytest.raises(SuiteError):
        sample_random_ncwiring(chsh_scenario(), 0, WiringSamplerConfig(opclass="pre-only"))


# -- suites -----------------------------------------------------------------------


@pytest.mark.parametrize("si", [0, 1])
def test_preservation_suite(si):
    r = run_preservation_suite(SCENARIOS[si], 30, seed=11)
    assert r["ok"] and r["nd_pass"] == r["nc_pass"] == 30 and r["first_counterexample"] is None


def test_preservation_suite_skips_corrupted_construction():
    r = run_preservation_suite(chsh_scenario(), 3, seed=0, wiring_factory=lambda s, i: corrupted_wiring(s))
    assert r["invalid"] == 3 and not r["ok"]
    assert r["nd_pass"] == r["nc_pass"] == 0
    assert "post-factorization" in r["first_invalid"]["diagnostics"][0]


@pytest.mark.parametrize("q, opclass", [("cf", "full"), ("dmax", "full"), ("du", "post-only"),
                                        ("eu", "post-only"), ("emax", "full")])
def test_monotonicity_suite(q, opclass):
    r = run_monotonicity_suite(q, chsh_scenario(), 6, seed=21, opclass=opclass)
    assert r["ok"] and r["passed"] == 6 and r["invalid"] == 0


@pytest.mark.parametrize("q", ["eu", "du"])
def test_uniform_quantifiers_refuse_full_wirings(q):
    with pytest.raises(SuiteError, match="post-only"):
        run_monotonicity_suite(q, chsh_scenario(), 1, seed=0, opclass="full")


def test_suite_argument_errors():
    with pytest.raises(SuiteError):
        run_monotonicity_suite("cfx", chsh_scenario(), 1, seed=0)
    with pytest.raises(SuiteError):
        run_monotonicity_suite("cf", chsh_scenario(), 1, seed=0, opclass="any")


def test_monotonicity_reports_a_violation(monkeypatch):
    # a fake quantifier that grows on every wired output must be caught
    from ctxkit import quantifiers
    from ctxkit.quantifiers import QuantifierResult

    def fake(b, **kw):
        return QuantifierResult("cf", F(int("wired_from" in b.scenario.metadata)))

    monkeypatch.setitem(quantifiers.QUANTIFIERS, "cf", fake)
    r = run_monotonicity_suite("cf", chsh_scenario(), 3, seed=0)
    assert not r["ok"] and r["passed"] == 0 and r["max_increase"] == 1
    ce = r["first_counterexample"]
    assert ce["trial"] == 0 and ce["before"] == "0" and ce["after"] == "1"
    assert "pre" in ce["wiring"] and "tables" in ce["behavior"]


# -- properties -------------------------------------------------------------------

seeds = st.integers(0, 10**9)
scen = st.sampled_from(range(len(SCENARIOS)))


@settings(max_examples=15)
@given(seeds, scen)
def test_nd_and_nc_preserved(seed, si):
    s = SCENARIOS[si]
    rng = random.Random(seed)
    w = sample_random_ncwiring(s, seed)
    assert check_nondisturbance(apply_ncwiring(w, random_nd_behavior(s, rng))).ok
    out = apply_ncwiring(w, random_nc_behavior(s, rng))
    assert check_nondisturbance(out).ok and check_noncontextual(out)


@settings(max_examples=15)
@given(seeds, scen)
def test_composition_is_linear(seed, si):
    s = SCENARIOS[si]
    rng = random.Random(seed)
    w = sample_random_ncwiring(s, seed)
    bs = [random_nd_behavior(s, rng) for _ in range(2)]
    lam = F(rng.randint(0, 6), 6)
    lhs = apply_ncwiring(w, mix_behaviors([lam, 1 - lam], bs))
    rhs = mix_behaviors([lam, 1 - lam], [apply_ncwiring(w, b) for b in bs])
    assert lhs.vector() == rhs.vector()


@settings(max_examples=10)
@given(seeds)
def test_cf_never_increases(seed):
    s = chsh_scenario()
    w = sample_random_ncwiring(s, seed)
    b = random_nd_behavior(s, random.Random(seed))
    assert contextual_fraction(apply_ncwiring(w, b)).value <= contextual_fraction(b).value
