"""Linear programming backend.

The exact solver is a dense two-phase tableau simplex over the rationals using
Bland's rule.  Each tableau row is stored as a list of Python integers with a
positive row denominator, so a pivot only touches rows whose pivot-column entry
is non-zero and never builds ``Fraction`` objects in the inner loop.

Every exact solve returns a certificate that :func:`verify_solution` replays
against the original program:

* optimal: primal point, dual multipliers, and equal primal/dual objectives;
* infeasible: a Farkas multiplier vector ``y`` over the constraints;
* unbounded: a feasible point plus an improving ray.

Sign conventions for a minimisation: a multiplier on a ``>=`` row is ``>= 0``,
on a ``<=`` row ``<= 0``, on an ``==`` row free.  For maximisation the signs are
reversed.  Reduced costs are ``c - A^T y``.
"""

from __future__ import annotations

import contextlib
import contextvars
import math
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Iterator, Optional, Sequence

import numpy as np

__all__ = [
    "LE",
    "EQ",
    "GE",
    "Constraint",
    "LinearProgram",
    "LPSolution",
    "LPError",
    "DimensionError",
    "PivotLimitError",
    "CertificateError",
    "solve_lp",
    "check_feasible",
    "verify_solution",
    "record_solves",
    "format_tableau",
]

LE, EQ, GE = "<=", "==", ">="
_RELATIONS = (LE, EQ, GE)
DEFAULT_PIVOT_LIMIT = 10**6


class LPError(Exception):
    pass


class DimensionError(LPError, ValueError):
    pass


class PivotLimitError(LPError):
    pass


class CertificateError(LPError):
    """Raised when an exact solve fails its own certificate replay."""


def _frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError(f"non-finite coefficient {x!r}")
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    raise TypeError(f"unsupported coefficient type {type(x).__name__}")


@dataclass(frozen=True)
class Constraint:
    coeffs: tuple
    rel: str
    rhs: object

    def __post_init__(self):
        if self.rel not in _RELATIONS:
            raise ValueError(f"relation must be one of {_RELATIONS}, got {self.rel!r}")
        object.__setattr__(self, "coeffs", tuple(self.coeffs))


@dataclass(frozen=True)
class LinearProgram:
    """``min``/``max`` of ``objective . x`` subject to ``constraints`` and box bounds.

    ``bounds`` is a sequence of ``(lower, upper)`` pairs where ``None`` means
    unbounded on that side; it defaults to ``(0, None)`` for every variable.
    """

    objective: tuple
    constraints: tuple = ()
    sense: str = "min"
    bounds: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "objective", tuple(self.objective))
        cons = tuple(
            c if isinstance(c, Constraint) else Constraint(*c) for c in self.constraints
        )
        object.__setattr__(self, "constraints", cons)
        n = len(self.objective)
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        for i, c in enumerate(cons):
            if len(c.coeffs) != n:
                raise DimensionError(
                    f"constraint {i} has {len(c.coeffs)} coefficients, expected {n}"
                )
        if self.bounds is None:
            object.__setattr__(self, "bounds", tuple((0, None) for _ in range(n)))
        else:
            b = tuple(tuple(x) for x in self.bounds)
            if len(b) != n:
                raise DimensionError(f"{len(b)} bounds given for {n} variables")
            for j, (lo, hi) in enumerate(b):
                if lo is not None and hi is not None and _frac(lo) > _frac(hi):
                    raise ValueError(f"variable {j}: lower bound exceeds upper bound")
            object.__setattr__(self, "bounds", b)

    @property
    def n_vars(self) -> int:
        return len(self.objective)


@dataclass(frozen=True)
class LPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    objective: object = None
    primal: Optional[tuple] = None
    dual: Optional[tuple] = None
    farkas: Optional[tuple] = None
    ray: Optional[tuple] = None
    iterations: int = 0
    exact: bool = True
    certified: bool = False

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


# -- solve recording -----------------------------------------------------------

_recorders: contextvars.ContextVar[tuple] = contextvars.ContextVar("_recorders", default=())


@contextlib.contextmanager
def record_solves() -> Iterator[list]:
    """Collect ``(lp, solution)`` pairs for every solve inside the block."""
    log: list = []
    token = _recorders.set(_recorders.get() + (log,))
    try:
        yield log
    finally:
        _recorders.reset(token)


def _record(lp, sol):
    for log in _recorders.get():
        log.append((lp, sol))


# -- exact tableau -------------------------------------------------------------


class _Tableau:
    """Rows ``T[i] / den[i]``; columns: internal vars then rhs."""

    def __init__(self, rows, dens, basis, n_cols):
        self.T = rows
        self.den = dens
        self.basis = basis
        self.n_cols = n_cols  # excluding rhs
        self.pivots = 0

    def pivot(self, r: int, c: int, obj_rows: Sequence[list]):
        T = self.T
        prow = T[r]
        P = prow[c]
        if P < 0:
            prow = [-a for a in prow]
            P = -P
        g = math.gcd(*prow)
        if g > 1:
            prow = [a // g for a in prow]
            P //= g
        T[r] = prow
        self.den[r] = P
        for i in range(len(T)):
            if i == r:
                continue
            row = T[i]
            f = row[c]
            if f == 0:
                continue
            new = [a * P - f * b for a, b in zip(row, prow)]
            d = self.den[i] * P
            g = math.gcd(d, *new)
            if g > 1:
                new = [a // g for a in new]
                d //= g
            T[i] = new
            self.den[i] = d
        for k, (orow, oden) in enumerate(obj_rows):
            f = orow[c]
            if f == 0:
                continue
            new = [a * P - f * b for a, b in zip(orow, prow)]
            d = oden * P
            g = math.gcd(d, *new)
            if g > 1:
                new = [a // g for a in new]
                d //= g
            obj_rows[k] = (new, d)
        self.basis[r] = c
        self.pivots += 1


def _lcm_den(values) -> int:
    out = 1
    for v in values:
        d = v.denominator
        if d != 1:
            out = out * d // math.gcd(out, d)
    return out


@dataclass
class _Internal:
    """Bookkeeping for the map original LP -> internal standard form."""

    cols: list = field(default_factory=list)  # (orig var, sign) per structural col
    offset: list = field(default_factory=list)  # lower bound shift per orig var
    row_src: list = field(default_factory=list)  # ("con", i) or ("ub", j)
    row_mult: list = field(default_factory=list)  # Fraction: internal = mult * orig


def _run_simplex(tab: _Tableau, obj_rows, which: int, allowed, limit: int):
    """Bland-rule primal simplex on ``obj_rows[which]``; returns (status, col)."""
    T = tab.T
    rhs = tab.n_cols
    while True:
        z = obj_rows[which][0]
        enter = -1
        for j in allowed:
            if z[j] < 0:
                enter = j
                break
        if enter < 0:
            return "optimal", None
        best = -1
        best_num = best_den = 0
        for i in range(len(T)):
            a = T[i][enter]
            if a <= 0:
                continue
            num = T[i][rhs]
            if best < 0:
                best, best_num, best_den = i, num, a
                continue
            lhs, rhs_cmp = num * best_den, best_num * a
            if lhs < rhs_cmp or (lhs == rhs_cmp and tab.basis[i] < tab.basis[best]):
                best, best_num, best_den = i, num, a
        if best < 0:
            return "unbounded", enter
        if tab.pivots >= limit:
            raise PivotLimitError(f"pivot limit {limit} exceeded")
        tab.pivot(best, enter, obj_rows)


def _solve_exact(lp: LinearProgram, pivot_limit: int) -> LPSolution:
    n = lp.n_vars
    c = [_frac(v) for v in lp.objective]
    sgn = 1 if lp.sense == "min" else -1
    info = _Internal()

    # variable transformation: x_j = lo_j + x'_j, or free split x = x+ - x-
    bounds = [(None if lo is None else _frac(lo), None if hi is None else _frac(hi))
              for lo, hi in lp.bounds]
    fixed_rows = []  # extra (coeff dict, rel, rhs) in original variable space
    for j, (lo, hi) in enumerate(bounds):
        if lo is not None:
            info.offset.append(lo)
            info.cols.append((j, 1))
            if hi is not None:
                fixed_rows.append((j, hi - lo))
        elif hi is not None:
            # x = hi - x', x' >= 0
            info.offset.append(hi)
            info.cols.append((j, -1))
        else:
            info.offset.append(Fraction(0))
            info.cols.append((j, 1))
            info.cols.append((j, -1))
    n_struct = len(info.cols)

    raw_rows = []  # (coeffs over internal structural cols, rel, rhs, src)
    seen = set()
    for i, con in enumerate(lp.constraints):
        a = [_frac(v) for v in con.coeffs]
        b = _frac(con.rhs) - sum(a[j] * info.offset[j] for j in range(n) if a[j])
        row = [a[j] * s for j, s in info.cols]
        key = (tuple(row), con.rel, b)
        if key in seen:
            continue
        seen.add(key)
        raw_rows.append((row, con.rel, b, ("con", i)))
    for j, width in fixed_rows:
        row = [Fraction(0)] * n_struct
        row[[k for k, (jj, _) in enumerate(info.cols) if jj == j][0]] = Fraction(1)
        raw_rows.append((row, LE, width, ("ub", j)))

    m = len(raw_rows)
    # column layout: structural | slack/surplus (one per inequality row) | artificial
    n_slack = sum(1 for r in raw_rows if r[1] != EQ)
    rows, dens, basis = [], [], []
    art_cols, init_col = [], []
    slack_at = n_struct
    art_at = n_struct + n_slack
    n_cols_guess = art_at + m
    rels = []
    for row, rel, b, src in raw_rows:
        flip = 1
        if b < 0:
            flip = -1
            row = [-v for v in row]
            b = -b
            rel = {LE: GE, GE: LE, EQ: EQ}[rel]
        scale = _lcm_den(row + [b])
        info.row_src.append(src)
        info.row_mult.append(Fraction(flip * scale))
        rels.append(rel)
        ints = [int(v * scale) for v in row] + [0] * (n_cols_guess - n_struct) + [int(b * scale)]
        if rel == LE:
            ints[slack_at] = 1
            basis.append(slack_at)
            init_col.append(slack_at)
            slack_at += 1
        else:
            if rel == GE:
                ints[slack_at] = -1
                slack_at += 1
            ints[art_at] = 1
            basis.append(art_at)
            init_col.append(art_at)
            art_cols.append(art_at)
            art_at += 1
        rows.append(ints)
        dens.append(1)
    n_cols = art_at
    # trim unused artificial columns
    if n_cols < n_cols_guess:
        for k, r in enumerate(rows):
            rows[k] = r[:n_cols] + [r[-1]]
    tab = _Tableau(rows, dens, basis, n_cols)
    art_set = set(art_cols)

    # phase-2 objective over internal columns, scaled to integers
    c_int = [Fraction(0)] * n_cols
    for k, (j, s) in enumerate(info.cols):
        c_int[k] = sgn * c[j] * s
    kappa = _lcm_den(c_int)
    z2 = [int(v * kappa) for v in c_int] + [0]
    # canonicalise against initial basis (only artificial/slack, cost 0) -> nothing to do
    # phase-1 objective: sum of artificials, canonicalised
    z1 = [0] * (n_cols + 1)
    for a in art_cols:
        z1[a] = 1
    for i, bcol in enumerate(basis):
        if bcol in art_set:
            z1 = [x - y for x, y in zip(z1, rows[i])]
    obj_rows = [(z1, 1), (z2, 1)]

    all_cols = range(n_cols)
    if art_cols:
        _run_simplex(tab, obj_rows, 0, all_cols, pivot_limit)
        z1, d1 = obj_rows[0]
        phase1 = Fraction(-z1[n_cols], d1)
        if phase1 > 0:
            farkas = _extract_duals(tab, obj_rows[0], init_col, art_set, info, phase=1)
            y = [Fraction(0)] * len(lp.constraints)
            for (src, idx), v in zip(info.row_src, farkas):
                if src == "con":
                    y[idx] += v
            sol = LPSolution("infeasible", farkas=tuple(y), iterations=tab.pivots)
            return sol
        # drive artificials out of the basis; drop redundant rows
        for i in range(len(tab.T)):
            if tab.basis[i] not in art_set:
                continue
            row = tab.T[i]
            col = next((j for j in range(n_cols) if j not in art_set and row[j] != 0), None)
            if col is not None:
                tab.pivot(i, col, obj_rows)
        keep = [i for i in range(len(tab.T)) if tab.basis[i] not in art_set]
        if len(keep) < len(tab.T):
            tab.T = [tab.T[i] for i in keep]
            tab.den = [tab.den[i] for i in keep]
            tab.basis = [tab.basis[i] for i in keep]
            # multipliers of dropped rows are still read from their identity columns
        allowed = [j for j in all_cols if j not in art_set]
    else:
        allowed = list(all_cols)

    status, enter = _run_simplex(tab, obj_rows, 1, allowed, pivot_limit)
    x_int = [Fraction(0)] * n_cols
    for i, bcol in enumerate(tab.basis):
        x_int[bcol] = Fraction(tab.T[i][n_cols], tab.T[i][bcol])
    primal = _to_original(x_int, info, n)
    if status == "unbounded":
        ray_int = [Fraction(0)] * n_cols
        ray_int[enter] = Fraction(1)
        for i, bcol in enumerate(tab.basis):
            ray_int[bcol] = -Fraction(tab.T[i][enter], tab.T[i][bcol])
        ray = [Fraction(0)] * n
        for k, (j, s) in enumerate(info.cols):
            ray[j] += s * ray_int[k]
        return LPSolution("unbounded", primal=tuple(primal), ray=tuple(ray),
                          iterations=tab.pivots)
    duals = _extract_duals(tab, obj_rows[1], init_col, art_set, info, phase=2)
    y = [Fraction(0)] * len(lp.constraints)
    for (src, idx), v in zip(info.row_src, duals):
        if src == "con":
            y[idx] += v / kappa * sgn
    value = sum((c[j] * primal[j] for j in range(n)), Fraction(0))
    return LPSolution("optimal", objective=value, primal=tuple(primal), dual=tuple(y),
                      iterations=tab.pivots)


def _extract_duals(tab, obj, init_col, art_set, info, phase):
    """Multipliers per internal row, rescaled to the original (shifted) rows."""
    z, dz = obj
    out = []
    for i, col in enumerate(init_col):
        d = Fraction(z[col], dz)
        cost = 1 if (phase == 1 and col in art_set) else 0
        y_int = cost - d
        out.append(y_int * info.row_mult[i])
    return out


def _to_original(x_int, info, n):
    x = list(info.offset)
    for k, (j, s) in enumerate(info.cols):
        x[j] += s * x_int[k]
    return x[:n]


# -- float mode -----------------------------------------------------------------


def _solve_float(lp: LinearProgram) -> LPSolution:
    from scipy.optimize import linprog

    n = lp.n_vars
    c = np.array([float(v) for v in lp.objective])
    sgn = 1.0 if lp.sense == "min" else -1.0
    A_ub, b_ub, ub_idx, ub_sign = [], [], [], []
    A_eq, b_eq, eq_idx = [], [], []
    for i, con in enumerate(lp.constraints):
        row = [float(v) for v in con.coeffs]
        if con.rel == EQ:
            A_eq.append(row)
            b_eq.append(float(con.rhs))
            eq_idx.append(i)
        else:
            s = 1.0 if con.rel == LE else -1.0
            A_ub.append([s * v for v in row])
            b_ub.append(s * float(con.rhs))
            ub_idx.append(i)
            ub_sign.append(s)
    bounds = [(None if lo is None else float(lo), None if hi is None else float(hi))
              for lo, hi in lp.bounds]
    res = linprog(
        sgn * c,
        A_ub=np.array(A_ub) if A_ub else None,
        b_ub=np.array(b_ub) if b_ub else None,
        A_eq=np.array(A_eq) if A_eq else None,
        b_eq=np.array(b_eq) if b_eq else None,
        bounds=bounds,
        method="highs",
    )
    iters = int(getattr(res, "nit", 0) or 0)
    if res.status == 2:
        # HiGHS presolve may report "infeasible or unbounded" as infeasible
        if any(lp.objective) and _solve_float(
            LinearProgram([0] * n, lp.constraints, "min", lp.bounds)
        ).optimal:
            return LPSolution("unbounded", iterations=iters, exact=False)
        return LPSolution("infeasible", iterations=iters, exact=False)
    if res.status == 3:
        return LPSolution("unbounded", iterations=iters, exact=False)
    if res.status != 0:
        raise LPError(f"float solver failed: {res.message}")
    y = [0.0] * len(lp.constraints)
    if ub_idx:
        for k, i in enumerate(ub_idx):
            y[i] = sgn * ub_sign[k] * float(res.ineqlin.marginals[k])
    if eq_idx:
        for k, i in enumerate(eq_idx):
            y[i] = sgn * float(res.eqlin.marginals[k])
    x = tuple(float(v) for v in res.x)
    value = float(np.dot(c, res.x))
    return LPSolution("optimal", objective=value, primal=x, dual=tuple(y),
                      iterations=iters, exact=False)


# -- certificates -----------------------------------------------------------------


def _dot(a, x):
    return sum((ai * xi for ai, xi in zip(a, x) if ai), Fraction(0))


def verify_solution(lp: LinearProgram, sol: LPSolution) -> list[str]:
    """Replay the certificate carried by ``sol`` exactly; return the failures."""
    problems: list[str] = []
    n = lp.n_vars
    c = [_frac(v) for v in lp.objective]
    bounds = [(None if lo is None else _frac(lo), None if hi is None else _frac(hi))
              for lo, hi in lp.bounds]
    A = [[_frac(v) for v in con.coeffs] for con in lp.constraints]
    b = [_frac(con.rhs) for con in lp.constraints]
    rels = [con.rel for con in lp.constraints]
    # multiplier sign for a minimisation (flipped for max)
    flip = 1 if lp.sense == "min" else -1

    def primal_ok(x):
        if len(x) != n:
            problems.append("primal has wrong length")
            return
        for j, (lo, hi) in enumerate(bounds):
            if lo is not None and x[j] < lo:
                problems.append(f"x[{j}] below lower bound")
            if hi is not None and x[j] > hi:
                problems.append(f"x[{j}] above upper bound")
        for i, row in enumerate(A):
            lhs = _dot(row, x)
            if rels[i] == LE and lhs > b[i]:
                problems.append(f"constraint {i} violated (<=)")
            elif rels[i] == GE and lhs < b[i]:
                problems.append(f"constraint {i} violated (>=)")
            elif rels[i] == EQ and lhs != b[i]:
                problems.append(f"constraint {i} violated (==)")

    def row_sign_ok(y, s):
        for i, rel in enumerate(rels):
            if rel == GE and s * y[i] < 0:
                problems.append(f"multiplier {i} has wrong sign for >= row")
            if rel == LE and s * y[i] > 0:
                problems.append(f"multiplier {i} has wrong sign for <= row")

    if sol.status == "optimal":
        x = [_frac(v) for v in sol.primal]
        y = [_frac(v) for v in sol.dual]
        primal_ok(x)
        row_sign_ok(y, flip)
        d = [c[j] - sum((A[i][j] * y[i] for i in range(len(A)) if y[i]), Fraction(0))
             for j in range(n)]
        dual_obj = _dot(b, y)
        for j, (lo, hi) in enumerate(bounds):
            dj = d[j] * flip  # reduced cost in the min-equivalent problem
            if dj > 0:
                if lo is None:
                    problems.append(f"reduced cost {j} unbounded below")
                    continue
                dual_obj += d[j] * lo
            elif dj < 0:
                if hi is None:
                    problems.append(f"reduced cost {j} unbounded above")
                    continue
                dual_obj += d[j] * hi
        primal_obj = _dot(c, x)
        if primal_obj != _frac(sol.objective):
            problems.append("reported objective differs from c.x")
        if primal_obj != dual_obj:
            problems.append(f"duality gap: primal {primal_obj} != dual {dual_obj}")
    elif sol.status == "infeasible":
        y = [_frac(v) for v in sol.farkas]
        row_sign_ok(y, 1)
        g = [sum((A[i][j] * y[i] for i in range(len(A)) if y[i]), Fraction(0)) for j in range(n)]
        # every feasible x has g.x >= b.y; show max over the box is smaller
        box_max = Fraction(0)
        for j, (lo, hi) in enumerate(bounds):
            if g[j] > 0:
                if hi is None:
                    problems.append("Farkas combination unbounded on the box")
                    break
                box_max += g[j] * hi
            elif g[j] < 0:
                if lo is None:
                    problems.append("Farkas combination unbounded on the box")
                    break
                box_max += g[j] * lo
        if not problems and not box_max < _dot(b, y):
            problems.append("Farkas certificate does not separate")
    elif sol.status == "unbounded":
        x = [_frac(v) for v in sol.primal]
        r = [_frac(v) for v in sol.ray]
        primal_ok(x)
        for i, row in enumerate(A):
            lhs = _dot(row, r)
            if (rels[i] == LE and lhs > 0) or (rels[i] == GE and lhs < 0) or (
                rels[i] == EQ and lhs != 0
            ):
                problems.append(f"ray leaves constraint {i}")
        for j, (lo, hi) in enumerate(bounds):
            if lo is not None and r[j] < 0:
                problems.append(f"ray leaves lower bound {j}")
            if hi is not None and r[j] > 0:
                problems.append(f"ray leaves upper bound {j}")
        if flip * _dot(c, r) >= 0:
            problems.append("ray does not improve the objective")
    else:
        problems.append(f"unknown status {sol.status!r}")
    return problems


def solve_lp(
    lp: LinearProgram,
    mode: str = "exact",
    pivot_limit: int = DEFAULT_PIVOT_LIMIT,
    verify: bool = True,
) -> LPSolution:
    """Solve ``lp`` exactly (default) or in floating point.

    In exact mode the returned certificate is replayed before returning and a
    :class:`CertificateError` is raised if it does not check out.  Degenerate
    problems return the first optimal basis reached; only the optimal value is
    meaningful, not which optimiser is returned.
    """
    if mode == "exact":
        sol = _solve_exact(lp, pivot_limit)
        if verify:
            problems = verify_solution(lp, sol)
            if problems:
                raise CertificateError("; ".join(problems[:5]))
            sol = LPSolution(**{**sol.__dict__, "certified": True})
    elif mode == "float":
        sol = _solve_float(lp)
    else:
        raise ValueError(f"mode must be 'exact' or 'float', got {mode!r}")
    _record(lp, sol)
    return sol


def check_feasible(lp: LinearProgram, mode: str = "exact"):
    """Phase-one feasibility: ``(True, point)`` or ``(False, farkas_vector)``."""
    probe = LinearProgram([0] * lp.n_vars, lp.constraints, "min", lp.bounds)
    sol = solve_lp(probe, mode=mode)
    if sol.status == "infeasible":
        return False, sol.farkas
    return True, sol.primal


def format_tableau(lp: LinearProgram) -> str:
    """Plain-text dump of the initial constraint matrix, for debugging."""
    lines = [f"{lp.sense} " + " ".join(str(v) for v in lp.objective)]
    for con in lp.constraints:
        lines.append(" ".join(str(v) for v in con.coeffs) + f" {con.rel} {con.rhs}")
    for j, (lo, hi) in enumerate(lp.bounds):
        if (lo, hi) != (0, None):
            lines.append(f"x{j} in [{lo}, {hi}]")
    return "\n".join(lines)
