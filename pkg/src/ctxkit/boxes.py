"""Named scenarios and behaviors, plus seeded random samplers used by the harnesses."""

from __future__ import annotations

import itertools
import random
from fractions import Fraction
from functools import lru_cache

from .lp import LinearProgram, solve_lp
from .scenario import (
    Behavior,
    GlobalAssignment,
    Scenario,
    assignment_to_behavior,
    mix_behaviors,
)

BINARY = ("0", "1")


def chain_scenario() -> Scenario:
    """Three binary measurements with ``y`` compatible with both ``x`` and ``z``."""
    return Scenario(("x", "y", "z"), BINARY, (("x", "y"), ("y", "z")))


def chsh_scenario() -> Scenario:
    """Bipartite two-setting two-outcome Bell scenario, contexts ``(a_i, b_j)``."""
    return Scenario(
        ("a0", "a1", "b0", "b1"),
        BINARY,
        (("a0", "b0"), ("a0", "b1"), ("a1", "b0"), ("a1", "b1")),
    )


def cycle_scenario(n: int, outcomes=BINARY) -> Scenario:
    """``n`` measurements on a ring; consecutive pairs are the contexts."""
    if n < 3:
        raise ValueError("a cycle needs at least three measurements")
    ms = tuple(f"m{i}" for i in range(n))
    return Scenario(ms, outcomes, tuple((ms[i], ms[(i + 1) % n]) for i in range(n)))


def uniform_behavior(s: Scenario) -> Behavior:
    tables = []
    for k in range(s.n_contexts):
        outs = s.context_outcomes(k)
        p = Fraction(1, len(outs))
        tables.append({o: p for o in outs})
    return Behavior(s, tables)


def pr_box(anti: bool = False) -> Behavior:
    """PR box on the CHSH scenario: ``a xor b = x*y`` (``anti`` flips the parity)."""
    s = chsh_scenario()
    half = Fraction(1, 2)
    tables = []
    for ctx in s.contexts:
        x, y = int(ctx[0][1]), int(ctx[1][1])
        parity = (x * y) ^ int(anti)
        tables.append({(str(a), str(a ^ parity)): half for a in (0, 1)})
    return Behavior(s, tables)


def deterministic(s: Scenario, values: dict) -> Behavior:
    return assignment_to_behavior(values, s)


# -- samplers ---------------------------------------------------------------------


def _random_weights(rng: random.Random, k: int, resolution: int) -> list[Fraction]:
    raw = [rng.randint(1, resolution) for _ in range(k)]
    total = sum(raw)
    return [Fraction(r, total) for r in raw]


def random_assignment(s: Scenario, rng: random.Random) -> GlobalAssignment:
    return GlobalAssignment(s.measurements, tuple(rng.choice(s.outcomes) for _ in s.measurements))


def random_nc_behavior(
    s: Scenario, rng: random.Random, max_support: int = 6, resolution: int = 12
) -> Behavior:
    """Random finite mixture of deterministic behaviors (non-contextual by construction)."""
    k = rng.randint(1, max_support)
    gs = [random_assignment(s, rng) for _ in range(k)]
    return mix_behaviors(_random_weights(rng, k, resolution), [assignment_to_behavior(g, s) for g in gs])


def random_nc_model(s: Scenario, rng: random.Random, max_support: int = 6, resolution: int = 12):
    """Like :func:`random_nc_behavior` but also returns the generating weights."""
    k = rng.randint(1, max_support)
    gs = [random_assignment(s, rng) for _ in range(k)]
    ws = _random_weights(rng, k, resolution)
    model: dict = {}
    for g, w in zip(gs, ws):
        model[g] = model.get(g, 0) + w
    b = mix_behaviors(list(model.values()), [assignment_to_behavior(g, s) for g in model])
    return b, model


@lru_cache(maxsize=64)
def _nd_constraints(s: Scenario):
    """Normalisation and intersection-marginal equalities over the event vector."""
    idx = s.event_index
    n = len(s.events)
    rows = []
    for k in range(s.n_contexts):
        row = [0] * n
        for o in s.context_outcomes(k):
            row[idx[(k, o)]] = 1
        rows.append((tuple(row), "==", 1))
    for k1 in range(s.n_contexts):
        for k2 in range(k1 + 1, s.n_contexts):
            c1, c2 = s.contexts[k1], s.contexts[k2]
            common = [m for m in c1 if m in c2]
            if not common:
                continue
            for key in itertools.product(s.outcomes, repeat=len(common)):
                row = [0] * n
                for k, sign in ((k1, 1), (k2, -1)):
                    ctx = s.contexts[k]
                    pos = [ctx.index(m) for m in common]
                    for o in s.context_outcomes(k):
                        if tuple(o[i] for i in pos) == key:
                            row[idx[(k, o)]] += sign
                rows.append((tuple(row), "==", 0))
    return tuple(rows)


def _parity_functional(s: Scenario, rng: random.Random) -> list[int]:
    """Reward, per context, outcome tuples whose label indices sum to a random residue.

    Odd-cycle style constraint systems like this one are where the ND polytope
    has its contextual vertices, so biasing towards them gives coverage that a
    generic random functional (which almost always lands on a deterministic
    vertex) does not.
    """
    d = len(s.outcomes)
    pos = {o: i for i, o in enumerate(s.outcomes)}
    residues = [rng.randrange(d) for _ in range(s.n_contexts)]
    return [
        64 * int(sum(pos[x] for x in o) % d == residues[k]) + rng.randint(-4, 4)
        for k, o in s.events
    ]


def random_nd_vertex(s: Scenario, rng: random.Random, parity_bias: float = 0.8) -> Behavior:
    """Vertex of the non-disturbing polytope maximising a random integer functional.

    With probability ``parity_bias`` the functional is a noisy parity reward
    (see :func:`_parity_functional`), otherwise i.i.d. integers.
    """
    cons = _nd_constraints(s)
    if rng.random() < parity_bias:
        obj = _parity_functional(s, rng)
    else:
        obj = [rng.randint(-20, 20) for _ in s.events]
    sol = solve_lp(LinearProgram(obj, cons, "max"))
    return Behavior.from_vector(s, sol.primal)


def random_nd_behavior(s: Scenario, rng: random.Random, resolution: int = 12) -> Behavior:
    """Mix a random NC behavior with a random vertex of the ND polytope.

    Not uniform over anything; the point is reproducible coverage of both
    contextual and non-contextual behaviors.
    """
    nc = random_nc_behavior(s, rng)
    vertex = random_nd_vertex(s, rng)
    mu = Fraction(rng.randint(0, resolution), resolution)
    return mix_behaviors([1 - mu, mu], [nc, vertex])

