"""Non-contextuality decisions and contextuality quantifiers.

Everything here works over the non-contextual polytope, i.e. the convex hull
of the deterministic behaviors induced by global assignments.  A point of the
polytope is parametrised by vertex weights ``w`` and reads ``q = A w`` where
``A`` is the 0/1 event-by-vertex incidence matrix.

Both ``max over pi`` definitions (relative entropy and l1 distance) are
evaluated as a maximum over contexts: for fixed ``q`` the objective is linear
in the context distribution ``pi``, and a linear function on a simplex attains
its maximum at a vertex, i.e. at a single context.

Entropic quantities are in bits.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Mapping, Optional, Sequence

import numpy as np

from .lp import EQ, GE, LE, LinearProgram, solve_lp
from .scenario import (
    DEFAULT_VERTEX_CAP,
    Behavior,
    Scenario,
    assignment_to_behavior,
    check_nondisturbance,
    enumerate_global_assignments,
    mix_behaviors,
)

__all__ = [
    "DisturbanceError",
    "ConvergenceError",
    "NCModel",
    "NCResult",
    "QuantifierResult",
    "vertex_cap",
    "nc_polytope",
    "check_noncontextual",
    "contextual_fraction",
    "l1_uniform_distance",
    "l1_max_distance",
    "kl_divergence",
    "relative_entropy_uniform",
    "relative_entropy_max",
    "nu_linear_distance",
    "mbqc_failure_bound",
    "QUANTIFIERS",
    "quantify",
]


class DisturbanceError(ValueError):
    def __init__(self, pair, discrepancy):
        super().__init__(
            f"behavior is disturbing: contexts {pair} disagree by {discrepancy}")
        self.pair = pair
        self.discrepancy = discrepancy


class ConvergenceError(RuntimeError):
    def __init__(self, message, best_value=None, gap=None):
        super().__init__(f"{message} (best value {best_value}, gap {gap})")
        self.best_value = best_value
        self.gap = gap


def vertex_cap() -> int:
    raw = os.environ.get("CTXKIT_VERTEX_CAP")
    return int(raw) if raw else DEFAULT_VERTEX_CAP


@dataclass(frozen=True)
class _Polytope:
    vertices: tuple  # GlobalAssignment per column
    incidence: tuple  # per vertex: event index hit in each context
    n_events: int

    @property
    def matrix(self) -> np.ndarray:
        A = np.zeros((self.n_events, len(self.vertices)))
        for j, evs in enumerate(self.incidence):
            A[list(evs), j] = 1.0
        return A


@lru_cache(maxsize=32)
def _polytope(s: Scenario, cap: int) -> _Polytope:
    idx = s.event_index
    pos = [[s.measurement_index[m] for m in ctx] for ctx in s.contexts]
    verts, inc = [], []
    for g in enumerate_global_assignments(s, cap):
        verts.append(g)
        inc.append(tuple(idx[(k, tuple(g.values[i] for i in p))] for k, p in enumerate(pos)))
    return _Polytope(tuple(verts), tuple(inc), len(s.events))


def nc_polytope(s: Scenario, cap: Optional[int] = None) -> _Polytope:
    return _polytope(s, cap or vertex_cap())


@lru_cache(maxsize=32)
def _dense_matrix(s: Scenario, cap: int) -> np.ndarray:
    return _polytope(s, cap).matrix


@dataclass(frozen=True)
class NCModel:
    """Finite global section: weights on global assignments."""

    weights: Mapping

    def behavior(self, s: Scenario) -> Behavior:
        items = [(g, w) for g, w in self.weights.items() if w]
        return mix_behaviors([w for _, w in items], [assignment_to_behavior(g, s) for g, _ in items])

    def reproduces(self, b: Behavior) -> bool:
        """Exact (or tolerance-level, for float weights) replay against ``b``."""
        q = self.behavior(b.scenario)
        if b.exact and q.exact:
            return q == b
        return max(abs(float(x) - float(y)) for x, y in zip(q.vector(), b.vector())) <= 1e-9


@dataclass(frozen=True)
class NCResult:
    noncontextual: bool
    model: Optional[NCModel] = None
    farkas: Optional[tuple] = None  # per event, y.q <= 0 on NC but y.p > 0

    def __bool__(self):
        return self.noncontextual


@dataclass(frozen=True)
class QuantifierResult:
    name: str
    value: object
    witness: Optional[NCModel] = None
    lam: object = None
    nc_part: Optional[Behavior] = None
    residual: Optional[Behavior] = None
    meta: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)


def _require_nd(b: Behavior):
    nd = check_nondisturbance(b)
    if not nd.ok:
        raise DisturbanceError(nd.pair, nd.discrepancy)


def _support_reduction(b: Behavior, poly: _Polytope):
    """Vertices avoiding every zero-probability event, and the non-zero events."""
    p = b.vector()
    zero = {i for i, v in enumerate(p) if v == 0}
    cols = [j for j, evs in enumerate(poly.incidence) if not any(e in zero for e in evs)]
    rows = [i for i in range(len(p)) if i not in zero]
    return p, cols, rows, zero


def check_noncontextual(b: Behavior, cap: Optional[int] = None, mode: str = "exact") -> NCResult:
    """Decide membership in the NC polytope by LP feasibility over vertex weights."""
    _require_nd(b)
    poly = nc_polytope(b.scenario, cap)
    p, cols, rows, zero = _support_reduction(b, poly)
    if mode == "exact" and not b.exact:
        raise ValueError("exact mode needs an exact behavior; use mode='float'")
    if not cols:
        # every vertex hits a zero event, yet p is a distribution: infeasible
        y = [Fraction(-1) if i in zero else Fraction(0) for i in range(len(p))]
        y[rows[0]] = Fraction(1)
        # y.p = p[rows[0]] > 0 and each vertex scores at most 1 - 1 = 0
        return NCResult(False, farkas=tuple(y))
    row_pos = {i: r for r, i in enumerate(rows)}
    A = [[0] * len(cols) for _ in rows]
    for c, j in enumerate(cols):
        for e in poly.incidence[j]:
            A[row_pos[e]][c] = 1
    lp = LinearProgram([0] * len(cols), [(A[r], EQ, p[i]) for r, i in enumerate(rows)])
    sol = solve_lp(lp, mode=mode)
    if sol.status == "optimal":
        weights = {poly.vertices[j]: sol.primal[c] for c, j in enumerate(cols) if sol.primal[c]}
        return NCResult(True, NCModel(weights))
    if not sol.farkas:
        return NCResult(False)
    # lift the reduced certificate: large negative weight on zero events kills
    # every discarded vertex without touching y.p
    y_red = {i: sol.farkas[r] for r, i in enumerate(rows)}
    col_set = set(cols)
    worst = Fraction(0)
    for j, evs in enumerate(poly.incidence):
        if j in col_set:
            continue
        score = sum((y_red.get(e, 0) for e in evs), Fraction(0))
        worst = max(worst, score)
    lift = -(worst + 1)
    y = tuple(y_red.get(i, lift if i in zero else Fraction(0)) for i in range(len(p)))
    # engine certificate: A^T y <= 0 (every vertex scores <= 0) and y.p > 0
    return NCResult(False, farkas=y)


def contextual_fraction(b: Behavior, cap: Optional[int] = None, mode: str = "exact") -> QuantifierResult:
    """Smallest weight of a non-NC part over decompositions ``b = lam B' + (1-lam) B_NC``.

    Solved as ``max sum c`` over sub-normalised vertex weights fitting under
    ``b`` entrywise; ``CF = 1 - optimum``.
    """
    _require_nd(b)
    s = b.scenario
    poly = nc_polytope(s, cap)
    p, cols, rows, _ = _support_reduction(b, poly)
    one = Fraction(1) if mode == "exact" else 1.0
    if not cols:
        return QuantifierResult("cf", one, lam=one, residual=b,
                                meta={"mode": mode, "lp_value": 0 * one, "iterations": 0})
    row_pos = {i: r for r, i in enumerate(rows)}
    A = [[0] * len(cols) for _ in rows]
    for c, j in enumerate(cols):
        for e in poly.incidence[j]:
            A[row_pos[e]][c] = 1
    lp = LinearProgram([1] * len(cols), [(A[r], LE, p[i]) for r, i in enumerate(rows)], "max")
    sol = solve_lp(lp, mode=mode)
    opt = sol.objective
    lam = one - opt
    if mode == "float":
        lam = min(max(lam, 0.0), 1.0)
    meta = {"mode": mode, "lp_value": opt, "iterations": sol.iterations}
    witness = nc_part = residual = None
    if opt > 0:
        weights = {poly.vertices[j]: sol.primal[c] / opt
                   for c, j in enumerate(cols) if sol.primal[c]}
        witness = NCModel(weights)
        if mode == "exact":
            nc_part = witness.behavior(s)
            if lam > 0:
                vec = [(x - opt * y) / lam for x, y in zip(p, nc_part.vector())]
                residual = Behavior.from_vector(s, vec)
    elif mode == "exact":
        residual = b
    return QuantifierResult("cf", lam, witness, lam, nc_part, residual, meta)


def _l1_program(b: Behavior, poly: _Polytope, kind: str):
    """Vertex weights ``w``, slacks ``e >= p - Aw``, and for ``max`` an epigraph ``t``.

    Both ``p`` and ``q = Aw`` sum to one on every context, so the per-context
    l1 distance is twice the positive part ``sum_s max(0, p - q)`` and a single
    one-sided slack per event suffices.
    """
    s = b.scenario
    p = b.vector()
    n_v, n_e = len(poly.vertices), len(p)
    N = s.n_contexts
    cols_of_event = [[] for _ in range(n_e)]
    for j, evs in enumerate(poly.incidence):
        for e in evs:
            cols_of_event[e].append(j)
    extra = 1 if kind == "max" else 0
    n = n_v + n_e + extra
    cons = []
    for i in range(n_e):
        # e_i + q_i >= p_i
        row = [0] * n
        for j in cols_of_event[i]:
            row[j] = 1
        row[n_v + i] = 1
        cons.append((row, GE, p[i]))
    cons.append(([1] * n_v + [0] * (n_e + extra), EQ, 1))
    if kind == "max":
        for k in range(N):
            row = [0] * n
            for i, (kk, _) in enumerate(s.events):
                if kk == k:
                    row[n_v + i] = 2
            row[-1] = -1
            cons.append((row, LE, 0))
        obj = [0] * (n - 1) + [1]
    else:
        obj = [0] * n_v + [Fraction(2, N)] * n_e
    return LinearProgram(obj, cons, "min")


def _l1_result(name, b, poly, sol, mode):
    n_v = len(poly.vertices)
    weights = {poly.vertices[j]: sol.primal[j] for j in range(n_v) if sol.primal[j]}
    value = sol.objective
    if mode == "float":
        value = max(value, 0.0)
    return QuantifierResult(name, value, NCModel(weights),
                            meta={"mode": mode, "iterations": sol.iterations})


def l1_uniform_distance(b: Behavior, cap: Optional[int] = None, mode: str = "exact") -> QuantifierResult:
    """Average over contexts of the l1 distance to the closest NC behavior."""
    _require_nd(b)
    poly = nc_polytope(b.scenario, cap)
    sol = solve_lp(_l1_program(b, poly, "uniform"), mode=mode)
    return _l1_result("du", b, poly, sol, mode)


def l1_max_distance(b: Behavior, cap: Optional[int] = None, mode: str = "exact") -> QuantifierResult:
    """Largest per-context l1 distance to the closest NC behavior."""
    _require_nd(b)
    poly = nc_polytope(b.scenario, cap)
    sol = solve_lp(_l1_program(b, poly, "max"), mode=mode)
    return _l1_result("dmax", b, poly, sol, mode)


# -- relative entropy ---------------------------------------------------------------


def kl_divergence(p: Sequence, q: Sequence) -> float:
    """``sum p log2(p/q)`` with ``0 log 0 = 0`` and ``+inf`` when ``q`` misses ``p``'s support."""
    if len(p) != len(q):
        raise ValueError(f"length mismatch: {len(p)} vs {len(q)}")
    total = 0.0
    for pi, qi in zip(p, q):
        pi, qi = float(pi), float(qi)
        if pi == 0:
            continue
        if qi <= 0:
            return math.inf
        total += pi * math.log2(pi / qi)
    return max(total, 0.0)


_LN2 = math.log(2.0)


class _KLTerms:
    """Per-context KL divergences ``f_k(w) = KL(p_k || (A w)_k)`` in bits."""

    def __init__(self, b: Behavior, A: np.ndarray):
        s = b.scenario
        p = np.array([float(v) for v in b.vector()])
        keep = p > 0
        self.p = p[keep]
        self.A = A[keep]
        ctx = np.array([k for k, _ in s.events])[keep]
        self.ctx = ctx
        self.N = s.n_contexts
        self.const = np.bincount(ctx, self.p * np.log2(self.p), minlength=self.N)

    def values(self, q):
        return self.const - np.bincount(self.ctx, self.p * np.log2(q), minlength=self.N)

    def q(self, w):
        return self.A @ w


class _Weights:
    """Fixed convex weighting of the per-context divergences."""

    tau = None

    def __init__(self, pi):
        self.pi = np.asarray(pi, dtype=float)

    def __call__(self, fvals):
        return float(self.pi @ fvals), self.pi


def _line_search(terms: _KLTerms, agg, q, Ad, hi: float, iters: int = 100) -> float:
    """Minimise the aggregated objective along ``q + t Ad`` for ``t`` in ``[0, hi]``.

    Safeguarded Newton on the derivative, which is increasing by convexity.
    """
    wp = agg.pi[terms.ctx] * terms.p / _LN2

    def derivs(t):
        qt = q + t * Ad
        if qt.min() <= 0:
            return math.inf, 0.0
        r = Ad / qt
        wr = wp * r
        return -float(wr.sum()), float(wr @ r)

    with np.errstate(over="ignore", invalid="ignore"):
        return _safeguarded_newton(derivs, hi, iters)


def _safeguarded_newton(derivs, hi: float, iters: int) -> float:
    """Root of an increasing derivative on ``[0, hi]``, Newton with bisection fallback."""
    g0, h0 = derivs(0.0)
    if g0 >= 0:
        return 0.0
    gh, _ = derivs(hi)
    if gh <= 0:
        return hi
    lo = 0.0
    xtol = 1e-13 * max(1.0, hi)
    dx = dx_old = hi - lo
    # first step: Newton from 0 if it lands inside, else the midpoint
    t = -g0 / h0 if h0 > 0 and -g0 / h0 < hi else 0.5 * hi
    g, h = derivs(t)
    for _ in range(iters):
        # bisect when Newton leaves the bracket or does not halve the step
        newton_ok = (math.isfinite(g) and math.isfinite(h) and h > 0
                     and lo < t - g / h < hi and abs(2 * g) <= abs(dx_old * h))
        dx_old = dx
        if newton_ok:
            dx = g / h
            t -= dx
        else:
            dx = 0.5 * (hi - lo)
            t = lo + dx
        if abs(dx) < xtol:
            return t
        g, h = derivs(t)
        if g == 0:
            return t
        if g < 0:
            lo = t
        else:
            hi = t
    return lo


def _frank_wolfe(terms: _KLTerms, agg, w0, tol, max_iter):
    """Away-step Frank-Wolfe over vertex weights; returns ``(w, gap, iterations)``.

    ``agg`` holds the context weights of the objective.
    """
    w = w0.copy()
    p, A, ctx = terms.p, terms.A, terms.ctx
    gap = math.inf
    for it in range(1, max_iter + 1):
        q = A @ w
        _, pi = agg(terms.values(q))
        gq = -pi[ctx] * p / (q * _LN2)
        grad = A.T @ gq
        s_idx = int(np.argmin(grad))
        active = np.flatnonzero(w > 0)
        a_idx = int(active[np.argmax(grad[active])])
        gw = float(grad @ w)
        gap = gw - float(grad[s_idx])
        if gap <= tol:
            return w, gap, it
        away_gap = float(grad[a_idx]) - gw
        toward = gap >= away_gap
        if toward:
            d = -w
            d[s_idx] += 1.0
            gmax = 1.0
        else:
            d = w.copy()
            d[a_idx] -= 1.0
            wa = w[a_idx]
            gmax = wa / (1.0 - wa) if wa < 1.0 else 1e12
        Ad = A @ d
        # keep q > 0 on the support
        neg = Ad < 0
        hi = gmax
        if np.any(neg):
            tmax = float(np.min(-q[neg] / Ad[neg]))
            if tmax <= gmax:
                hi = tmax * (1 - 1e-12)
        t = _line_search(terms, agg, q, Ad, hi)
        w = w + t * d
        if not toward and t == gmax:
            w[a_idx] = 0.0
        w[w < 0] = 0.0
        w /= w.sum()
    return w, gap, max_iter


def _entropic_setup(b: Behavior, cap):
    _require_nd(b)
    s = b.scenario
    A = _dense_matrix(s, cap or vertex_cap())
    terms = _KLTerms(b, A)
    n_v = A.shape[1]
    return s, terms, np.full(n_v, 1.0 / n_v)


def _witness(s, w, thresh=1e-12):
    poly = nc_polytope(s)
    return NCModel({poly.vertices[j]: float(w[j]) for j in np.flatnonzero(w > thresh)})


def relative_entropy_uniform(
    b: Behavior, tol: float = 1e-6, max_iter: int = 10**5, cap: Optional[int] = None
) -> QuantifierResult:
    """Average per-context relative entropy to the closest NC behavior (bits).

    Frank-Wolfe with away steps from the uniform vertex mixture; the reported
    value is an upper bound exceeding the optimum by at most the final
    duality gap, which is ``<= tol`` on return.
    """
    s, terms, w0 = _entropic_setup(b, cap)
    w, gap, it = _frank_wolfe(terms, _Weights(np.full(s.n_contexts, 1.0 / s.n_contexts)), w0, tol, max_iter)
    value = float(np.mean(terms.values(terms.q(w))))
    if gap > tol:
        raise ConvergenceError("Frank-Wolfe did not converge", value, gap)
    return QuantifierResult("eu", max(value, 0.0), _witness(s, w),
                            meta={"mode": "float", "gap": gap, "iterations": it})


def _best_weights(F: np.ndarray):
    """Cutting-plane step: ``max_pi min_j F[j] . pi`` over the simplex."""
    n_cuts, N = F.shape
    # variables (pi_1..pi_N, t); maximise t
    cons = [(tuple(-F[j]) + (1.0,), "<=", 0.0) for j in range(n_cuts)]
    cons.append((tuple([1.0] * N) + (0.0,), "==", 1.0))
    bounds = [(0, None)] * N + [(None, None)]
    sol = solve_lp(LinearProgram([0.0] * N + [1.0], cons, "max", bounds), mode="float")
    return np.clip(np.array(sol.primal[:N], dtype=float), 0, None), float(sol.objective)


def _best_mixture(F: np.ndarray):
    """Convex combination of cut rows with the smallest max entry."""
    n_cuts, N = F.shape
    cons = [(tuple(F[:, k]) + (-1.0,), "<=", 0.0) for k in range(N)]
    cons.append((tuple([1.0] * n_cuts) + (0.0,), "==", 1.0))
    bounds = [(0, None)] * n_cuts + [(None, None)]
    sol = solve_lp(LinearProgram([0.0] * n_cuts + [1.0], cons, "min", bounds), mode="float")
    lam = np.clip(np.array(sol.primal[:n_cuts], dtype=float), 0, None)
    return lam / lam.sum()


def relative_entropy_max(
    b: Behavior, tol: float = 1e-6, max_iter: int = 10**5, cap: Optional[int] = None,
    max_rounds: int = 500,
) -> QuantifierResult:
    """Worst-context relative entropy to the closest NC behavior (bits).

    Solved through its dual over context weights: for fixed weights the
    weighted divergence is minimised by Frank-Wolfe, which certifies a lower
    bound, and the per-context values it produces are cuts of a Kelley
    scheme that picks the next weights.  Convexity of each divergence makes
    the matching mixture of iterates an upper bound, so the returned value
    comes with a certified gap ``<= tol``.
    """
    s, terms, w = _entropic_setup(b, cap)
    N = terms.N
    pi = np.full(N, 1.0 / N)
    cuts, iterates = [], []
    lower, upper, best_w = 0.0, math.inf, w
    center = None
    total_it = 0
    for rnd in range(1, max_rounds + 1):
        inner_tol = max(tol * 0.1, 0.01 * (upper - lower)) if upper < math.inf else tol * 0.1
        w, gap, it = _frank_wolfe(terms, _Weights(pi), w, inner_tol, max_iter)
        total_it += it
        f = terms.values(terms.q(w))
        bound = float(pi @ f) - gap
        if bound > lower or center is None:
            lower, center = max(lower, bound), pi
        if float(np.max(f)) < upper:
            upper, best_w = float(np.max(f)), w.copy()
        cuts.append(f)
        iterates.append(w.copy())
        F = np.array(cuts)
        lam = _best_mixture(F)
        w_bar = np.array(iterates).T @ lam
        f_bar = float(np.max(terms.values(terms.q(w_bar))))
        if f_bar < upper:
            upper, best_w = f_bar, w_bar
        if upper - lower <= tol:
            return QuantifierResult("emax", max(upper, 0.0), _witness(s, best_w),
                                    meta={"mode": "float", "gap": upper - lower,
                                          "iterations": total_it, "rounds": rnd,
                                          "lower": max(lower, 0.0), "weights": pi.tolist()})
        kelley, _ = _best_weights(F)
        # in-out stabilisation: step halfway from the best weights so far
        pi = 0.5 * center + 0.5 * kelley / kelley.sum()
    raise ConvergenceError("cutting-plane scheme did not close the gap", upper, upper - lower)


# -- MBQC -----------------------------------------------------------------------------


def nu_linear_distance(f, m: Optional[int] = None) -> Fraction:
    """Average distance from ``f`` to the closest Z2-linear ``x -> a.x`` (``m <= 20``).

    ``f`` is a truth table of length ``2**m`` (index bits are the input bits,
    least significant first) or a callable on tuples of ``m`` bits.
    """
    if callable(f):
        if m is None:
            raise ValueError("m is required when f is a callable")
        if m > 20:
            raise ValueError("m too large for truth-table search (max 20)")
        table = [int(f(tuple((i >> j) & 1 for j in range(m)))) & 1 for i in range(1 << m)]
    else:
        table = [int(v) & 1 for v in f]
        m = (len(table) - 1).bit_length()
        if len(table) != 1 << m:
            raise ValueError("truth table length must be a power of two")
        if m > 20:
            raise ValueError("m too large for truth-table search (max 20)")
    size = 1 << m
    f_arr = np.array(table, dtype=np.int64)
    idx = np.arange(size, dtype=np.int64)
    best = size
    for a in range(size):
        masked = idx & a
        parity = np.zeros(size, dtype=np.int64)
        while masked.any():
            parity ^= masked & 1
            masked >>= 1
        best = min(best, int(np.count_nonzero(parity != f_arr)))
    return Fraction(best, size)


def mbqc_failure_bound(cf, nu):
    """Lower bound ``(1 - CF) * nu`` on the average failure probability."""
    if not 0 <= cf <= 1:
        raise ValueError(f"contextual fraction {cf} outside [0, 1]")
    if not 0 <= nu <= Fraction(1, 2):
        raise ValueError(f"nu {nu} outside [0, 1/2]")
    return (1 - cf) * nu


QUANTIFIERS = {
    "cf": contextual_fraction,
    "du": l1_uniform_distance,
    "dmax": l1_max_distance,
    "eu": relative_entropy_uniform,
    "emax": relative_entropy_max,
}


def quantify(name: str, b: Behavior, **kwargs) -> QuantifierResult:
    try:
        fn = QUANTIFIERS[name]
    except KeyError:
        raise ValueError(f"unknown quantifier {name!r}; choose from {sorted(QUANTIFIERS)}") from None
    return fn(b, **kwargs)
