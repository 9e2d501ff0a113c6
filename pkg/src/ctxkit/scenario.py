"""Compatibility scenarios, behaviors and their basic algebra."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from numbers import Rational
from typing import Iterator, Mapping, Optional, Sequence

__all__ = [
    "ScenarioError",
    "BehaviorError",
    "VertexCapError",
    "Diagnostic",
    "NumericMode",
    "EXACT",
    "Scenario",
    "Behavior",
    "GlobalAssignment",
    "NDResult",
    "validate_scenario",
    "check_nondisturbance",
    "marginalize",
    "enumerate_global_assignments",
    "assignment_to_behavior",
    "mix_behaviors",
    "product_box",
    "controlled_choice",
    "to_number",
    "DEFAULT_VERTEX_CAP",
]

DEFAULT_VERTEX_CAP = 10**6


class ScenarioError(ValueError):
    pass


class BehaviorError(ValueError):
    """A behavior violates one of its invariants; ``invariant`` names it."""

    def __init__(self, message: str, invariant: str = "behavior"):
        super().__init__(message)
        self.invariant = invariant


class VertexCapError(ValueError):
    def __init__(self, count: int, cap: int):
        super().__init__(f"{count} global assignments exceed the vertex cap {cap}")
        self.count = count
        self.cap = cap


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    code: str
    message: str

    def __str__(self):
        return f"{self.level}[{self.code}]: {self.message}"


@dataclass(frozen=True)
class NumericMode:
    exact: bool = True
    tolerance: float = 1e-9

    def __post_init__(self):
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")

    def close(self, a, b) -> bool:
        if self.exact:
            return a == b
        return abs(a - b) <= self.tolerance


EXACT = NumericMode()
FLOAT = NumericMode(exact=False)


def to_number(x):
    """Parse a probability: strings become exact ``Fraction`` values."""
    if isinstance(x, bool):
        raise TypeError("booleans are not probabilities")
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, float):
        return x
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise BehaviorError(f"cannot parse probability {x!r}", "parse") from exc
    raise TypeError(f"unsupported probability type {type(x).__name__}")


@dataclass(frozen=True)
class Scenario:
    """Measurements ``M``, outcome labels ``O`` and the compatibility cover ``C``.

    Contexts are ordered tuples; the position of a measurement inside its
    context is its wire index when the scenario is wired to another box.
    """

    measurements: tuple
    outcomes: tuple
    contexts: tuple
    metadata: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "measurements", tuple(str(m) for m in self.measurements))
        object.__setattr__(self, "outcomes", tuple(str(o) for o in self.outcomes))
        object.__setattr__(
            self, "contexts", tuple(tuple(str(m) for m in ctx) for ctx in self.contexts)
        )

    @cached_property
    def diagnostics(self) -> tuple:
        return tuple(validate_scenario(self))

    def require_valid(self):
        errors = [d for d in self.diagnostics if d.level == "error"]
        if errors:
            raise ScenarioError("; ".join(str(d) for d in errors))

    @property
    def n_contexts(self) -> int:
        return len(self.contexts)

    def context_outcomes(self, k: int) -> list:
        """All joint outcomes of context ``k`` in lexicographic outcome order."""
        return list(itertools.product(self.outcomes, repeat=len(self.contexts[k])))

    @cached_property
    def events(self) -> tuple:
        """Canonical ``(context index, outcome tuple)`` list indexing behavior vectors."""
        return tuple((k, s) for k in range(self.n_contexts) for s in self.context_outcomes(k))

    @cached_property
    def event_index(self) -> dict:
        return {e: i for i, e in enumerate(self.events)}

    @cached_property
    def measurement_index(self) -> dict:
        return {m: i for i, m in enumerate(self.measurements)}

    def index_of_context(self, ctx) -> int:
        """Index of a context given as any ordering of its measurements."""
        target = frozenset(ctx)
        for k, c in enumerate(self.contexts):
            if frozenset(c) == target:
                return k
        raise ScenarioError(f"{sorted(target)} is not a context")

    @property
    def n_assignments(self) -> int:
        return len(self.outcomes) ** len(self.measurements)


def validate_scenario(s: Scenario) -> list[Diagnostic]:
    out: list[Diagnostic] = []
    if not s.measurements:
        out.append(Diagnostic("error", "empty-measurements", "no measurements"))
    if len(set(s.measurements)) != len(s.measurements):
        out.append(Diagnostic("error", "duplicate-measurement", "repeated measurement name"))
    if len(set(s.outcomes)) != len(s.outcomes):
        out.append(Diagnostic("error", "duplicate-outcome", "repeated outcome label"))
    if len(s.outcomes) < 2:
        out.append(Diagnostic("error", "few-outcomes", "need at least two outcomes"))
    if not s.contexts:
        out.append(Diagnostic("error", "empty-cover", "no contexts"))
    known = set(s.measurements)
    seen = {}
    for k, ctx in enumerate(s.contexts):
        if not ctx:
            out.append(Diagnostic("error", "empty-context", f"context {k} is empty"))
            continue
        if len(set(ctx)) != len(ctx):
            out.append(Diagnostic("error", "repeated-in-context",
                                  f"context {k} repeats a measurement"))
        unknown = [m for m in ctx if m not in known]
        if unknown:
            out.append(Diagnostic("error", "unknown-measurement",
                                  f"context {k} uses unknown measurements {unknown}"))
        key = frozenset(ctx)
        if key in seen:
            out.append(Diagnostic("error", "duplicate-context",
                                  f"context {k} duplicates context {seen[key]}"))
        else:
            seen[key] = k
    covered = {m for ctx in s.contexts for m in ctx}
    for m in s.measurements:
        if m not in covered:
            out.append(Diagnostic("warning", "uncovered-measurement",
                                  f"measurement {m!r} belongs to no context"))
    return out


@dataclass(frozen=True)
class Behavior:
    """One probability table per context; absent outcome tuples have probability 0.

    A behavior is exact when every entry is a ``Fraction``; any float entry
    switches it to float mode with a 1e-9 normalisation tolerance.
    """

    scenario: Scenario
    tables: tuple
    tolerance: float = 1e-9

    def __post_init__(self):
        s = self.scenario
        s.require_valid()
        tables = self.tables
        if isinstance(tables, Mapping):
            tables = [tables.get(k, tables.get(str(k), {})) for k in range(s.n_contexts)]
        tables = tuple(tables)
        if len(tables) != s.n_contexts:
            raise BehaviorError(
                f"{len(tables)} tables for {s.n_contexts} contexts", "shape")
        clean = []
        exact = True
        for k, table in enumerate(tables):
            ctx = s.contexts[k]
            row = {}
            for key, p in table.items():
                if isinstance(key, str):
                    key = tuple(key.split(",")) if len(ctx) > 1 else (key,)
                key = tuple(str(o) for o in key)
                if len(key) != len(ctx) or any(o not in s.outcomes for o in key):
                    raise BehaviorError(
                        f"context {k}: outcome tuple {key} does not fit {ctx}", "key")
                p = to_number(p)
                if isinstance(p, float):
                    exact = False
                if key in row:
                    raise BehaviorError(f"context {k}: duplicate key {key}", "key")
                if p != 0:
                    row[key] = p
            clean.append(row)
        for k, row in enumerate(clean):
            for key, p in row.items():
                if p < 0 or p > 1:
                    if exact or p < -self.tolerance or p > 1 + self.tolerance:
                        raise BehaviorError(
                            f"context {k}: probability {p} of {key} outside [0, 1]", "range")
            total = sum(row.values(), Fraction(0) if exact else 0.0)
            if exact and total != 1 or not exact and abs(total - 1) > self.tolerance:
                raise BehaviorError(
                    f"context {k} sums to {total}, not 1", "normalization")
        object.__setattr__(self, "tables", tuple(clean))
        object.__setattr__(self, "_exact", exact)

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def mode(self) -> NumericMode:
        return EXACT if self._exact else NumericMode(False, self.tolerance)

    def p(self, k: int, s) -> object:
        return self.tables[k].get(tuple(s), 0)

    def vector(self) -> list:
        """Probabilities in :attr:`Scenario.events` order."""
        zero = Fraction(0) if self._exact else 0.0
        return [self.tables[k].get(s, zero) for k, s in self.scenario.events]

    @classmethod
    def from_vector(cls, scenario: Scenario, values: Sequence, tolerance: float = 1e-9):
        tables = [dict() for _ in range(scenario.n_contexts)]
        if len(values) != len(scenario.events):
            raise BehaviorError("vector length does not match the scenario", "shape")
        for (k, s), p in zip(scenario.events, values):
            if p:
                tables[k][s] = p
        return cls(scenario, tables, tolerance)

    def to_float(self) -> "Behavior":
        return Behavior(
            self.scenario,
            [{s: float(p) for s, p in t.items()} for t in self.tables],
            self.tolerance,
        )

    def table_for(self, ctx) -> dict:
        """Table of the context given by its measurement set, keyed by dicts."""
        k = self.scenario.index_of_context(ctx)
        return self.tables[k]

    def __eq__(self, other):
        if not isinstance(other, Behavior):
            return NotImplemented
        return self.scenario == other.scenario and self.tables == other.tables

    def __hash__(self):
        return hash((self.scenario, tuple(frozenset(t.items()) for t in self.tables)))


@dataclass(frozen=True)
class GlobalAssignment:
    """Deterministic outcome for every measurement, ordered like the scenario."""

    measurements: tuple
    values: tuple

    def __post_init__(self):
        if len(self.measurements) != len(self.values):
            raise ScenarioError("assignment must give one outcome per measurement")

    @classmethod
    def from_dict(cls, scenario: Scenario, assignment: Mapping[str, str]):
        missing = [m for m in scenario.measurements if m not in assignment]
        if missing:
            raise ScenarioError(f"assignment is partial: missing {missing}")
        return cls(scenario.measurements, tuple(str(assignment[m]) for m in scenario.measurements))

    def __getitem__(self, m: str) -> str:
        return self.values[self.measurements.index(m)]

    def as_dict(self) -> dict:
        return dict(zip(self.measurements, self.values))

    def restrict(self, ctx) -> tuple:
        d = self.as_dict()
        return tuple(d[m] for m in ctx)


@dataclass(frozen=True)
class NDResult:
    ok: bool
    pair: Optional[tuple] = None
    discrepancy: object = 0

    def __bool__(self):
        return self.ok


def marginalize(b: Behavior, context: int | Sequence[str], subset: Sequence[str]) -> dict:
    """Marginal of context ``context`` on ``subset`` (keys follow ``subset`` order)."""
    s = b.scenario
    k = context if isinstance(context, int) else s.index_of_context(context)
    ctx = s.contexts[k]
    subset = tuple(subset)
    if not set(subset) <= set(ctx):
        raise ScenarioError(f"{list(subset)} is not contained in context {list(ctx)}")
    pos = [ctx.index(m) for m in subset]
    zero = Fraction(0) if b.exact else 0.0
    out = {key: zero for key in itertools.product(s.outcomes, repeat=len(subset))}
    for key, p in b.tables[k].items():
        out[tuple(key[i] for i in pos)] += p
    return out


def check_nondisturbance(b: Behavior, mode: Optional[NumericMode] = None) -> NDResult:
    """Compare marginals on every pairwise context intersection.

    Returns the first pair with disagreeing marginals and the largest
    absolute disagreement over that intersection.
    """
    mode = mode or b.mode
    s = b.scenario
    order = s.measurement_index
    for k1, k2 in itertools.combinations(range(s.n_contexts), 2):
        common = set(s.contexts[k1]) & set(s.contexts[k2])
        if not common:
            continue
        common = sorted(common, key=order.__getitem__)
        m1 = marginalize(b, k1, common)
        m2 = marginalize(b, k2, common)
        worst = max(abs(m1[key] - m2[key]) for key in m1)
        if not mode.close(worst, 0):
            return NDResult(False, (k1, k2), worst)
    return NDResult(True)


def enumerate_global_assignments(
    s: Scenario, cap: int = DEFAULT_VERTEX_CAP
) -> Iterator[GlobalAssignment]:
    count = s.n_assignments
    if count > cap:
        raise VertexCapError(count, cap)
    for values in itertools.product(s.outcomes, repeat=len(s.measurements)):
        yield GlobalAssignment(s.measurements, values)


def assignment_to_behavior(g: GlobalAssignment | Mapping, s: Scenario) -> Behavior:
    if not isinstance(g, GlobalAssignment):
        g = GlobalAssignment.from_dict(s, g)
    elif g.measurements != s.measurements:
        g = GlobalAssignment.from_dict(s, g.as_dict())
    one = Fraction(1)
    return Behavior(s, [{g.restrict(ctx): one} for ctx in s.contexts])


def mix_behaviors(weights: Sequence, behaviors: Sequence[Behavior]) -> Behavior:
    if len(weights) != len(behaviors) or not behaviors:
        raise ValueError("need one weight per behavior and at least one behavior")
    s = behaviors[0].scenario
    if any(b.scenario != s for b in behaviors):
        raise ScenarioError("behaviors live on different scenarios")
    weights = [to_number(w) for w in weights]
    exact = all(isinstance(w, Fraction) for w in weights) and all(b.exact for b in behaviors)
    total = sum(weights)
    if any(w < 0 for w in weights) or (total != 1 if exact else abs(total - 1) > 1e-9):
        raise ValueError("weights must be non-negative and sum to 1")
    if not exact:
        weights = [float(w) for w in weights]
    tables = []
    for k in range(s.n_contexts):
        row: dict = {}
        for w, b in zip(weights, behaviors):
            if not w:
                continue
            for key, p in b.tables[k].items():
                row[key] = row.get(key, 0) + w * p
        tables.append(row)
    tol = max(b.tolerance for b in behaviors)
    return Behavior(s, tables, tol)


def _disjoint_pair(s1: Scenario, s2: Scenario):
    if set(s1.outcomes) != set(s2.outcomes):
        raise ScenarioError(
            f"outcome sets differ: {list(s1.outcomes)} vs {list(s2.outcomes)}")
    if not set(s1.measurements) & set(s2.measurements):
        return dict(), dict()
    left = {m: f"L.{m}" for m in s1.measurements}
    right = {m: f"R.{m}" for m in s2.measurements}
    return left, right


def product_box(b1: Behavior, b2: Behavior) -> Behavior:
    """``b1 (x) b2``: every context is a context of ``b1`` joined with one of ``b2``."""
    s1, s2 = b1.scenario, b2.scenario
    left, right = _disjoint_pair(s1, s2)
    ren1 = lambda m: left.get(m, m)  # noqa: E731
    ren2 = lambda m: right.get(m, m)  # noqa: E731
    contexts, tables = [], []
    for k1, c1 in enumerate(s1.contexts):
        for k2, c2 in enumerate(s2.contexts):
            contexts.append(tuple(map(ren1, c1)) + tuple(map(ren2, c2)))
            row = {}
            for t1, p1 in b1.tables[k1].items():
                for t2, p2 in b2.tables[k2].items():
                    row[t1 + t2] = p1 * p2
            tables.append(row)
    meta = {"renaming": {"left": left, "right": right}} if left else {}
    s = Scenario(
        tuple(map(ren1, s1.measurements)) + tuple(map(ren2, s2.measurements)),
        s1.outcomes, tuple(contexts), meta)
    return Behavior(s, tables, max(b1.tolerance, b2.tolerance))


def controlled_choice(b1: Behavior, b2: Behavior) -> Behavior:
    """``b1 & b2``: the cover is the union of both covers, tables juxtaposed."""
    s1, s2 = b1.scenario, b2.scenario
    left, right = _disjoint_pair(s1, s2)
    ren1 = lambda m: left.get(m, m)  # noqa: E731
    ren2 = lambda m: right.get(m, m)  # noqa: E731
    contexts = [tuple(map(ren1, c)) for c in s1.contexts] + [
        tuple(map(ren2, c)) for c in s2.contexts]
    meta = {"renaming": {"left": left, "right": right}} if left else {}
    s = Scenario(
        tuple(map(ren1, s1.measurements)) + tuple(map(ren2, s2.measurements)),
        s1.outcomes, tuple(contexts), meta)
    return Behavior(s, list(b1.tables) + list(b2.tables), max(b1.tolerance, b2.tolerance))



def relabel(b: Behavior, names: Optional[Mapping[str, str]] = None,
            outcome_maps: Optional[Mapping[str, Mapping[str, str]]] = None) -> Behavior:
    """Rename measurements and permute each measurement's outcome labels.

    ``names`` must be injective; every ``outcome_maps[m]`` must be a
    permutation of the shared outcome set.  Context order is kept.
    """
    s = b.scenario
    names = dict(names or {})
    ren = [names.get(m, m) for m in s.measurements]
    if len(set(ren)) != len(ren):
        raise ScenarioError("measurement renaming is not injective")
    perms = {}
    for m in s.measurements:
        perm = dict((outcome_maps or {}).get(m, {}))
        full = {o: perm.get(o, o) for o in s.outcomes}
        if sorted(full.values()) != sorted(s.outcomes):
            raise ScenarioError(f"outcome map for {m!r} is not a permutation")
        perms[m] = full
    new_s = Scenario(tuple(ren), s.outcomes,
                     tuple(tuple(names.get(m, m) for m in ctx) for ctx in s.contexts))
    tables = []
    for ctx, row in zip(s.contexts, b.tables):
        tables.append({tuple(perms[m][o] for m, o in zip(ctx, key)): p for key, p in row.items()})
    return Behavior(new_s, tables, b.tolerance)
