"""Independent reference computations.

Nothing here calls into the package's LP engine or Frank-Wolfe code: vertex
matrices are rebuilt from scratch, LPs go to scipy's HiGHS, and the entropic
quantities are minimised by accelerated projected gradient.
"""

from __future__ import annotations

import itertools
import math

import numpy as np
from scipy.optimize import linprog


def event_list(scenario):
    return [(k, o) for k, ctx in enumerate(scenario.contexts)
            for o in itertools.product(scenario.outcomes, repeat=len(ctx))]


def vertex_matrix(scenario):
    """0/1 matrix, rows = events, columns = all global assignments."""
    ms = list(scenario.measurements)
    events = event_list(scenario)
    cols = []
    for values in itertools.product(scenario.outcomes, repeat=len(ms)):
        g = dict(zip(ms, values))
        cols.append([1.0 if tuple(g[m] for m in scenario.contexts[k]) == o else 0.0
                     for k, o in events])
    return np.array(cols).T


def prob_vector(b):
    return np.array([float(b.tables[k].get(o, 0)) for k, o in event_list(b.scenario)])


def lp_noncontextual(b) -> bool:
    A = vertex_matrix(b.scenario)
    p = prob_vector(b)
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=p, bounds=(0, None), method="highs")
    return res.status == 0


def lp_contextual_fraction(b) -> float:
    A = vertex_matrix(b.scenario)
    p = prob_vector(b)
    res = linprog(-np.ones(A.shape[1]), A_ub=A, b_ub=p, bounds=(0, None), method="highs")
    return 1.0 + res.fun


def lp_l1(b, kind: str) -> float:
    """``kind='uniform'``: mean over contexts; ``'max'``: worst context."""
    A = vertex_matrix(b.scenario)
    p = prob_vector(b)
    n_e, n_v = A.shape
    ctx = np.array([k for k, _ in event_list(b.scenario)])
    N = len(b.scenario.contexts)
    # x = (w, e, t)
    nx = n_v + n_e + 1
    A_ub, b_ub = [], []
    for i in range(n_e):
        row = np.zeros(nx)
        row[:n_v] = A[i]
        row[n_v + i] = -1
        A_ub.append(row.copy())
        b_ub.append(p[i])          # Aw - e <= p
        row[:n_v] = -A[i]
        A_ub.append(row)
        b_ub.append(-p[i])         # -Aw - e <= -p
    c = np.zeros(nx)
    if kind == "uniform":
        c[n_v:n_v + n_e] = 1.0 / N
    else:
        c[-1] = 1.0
        for k in range(N):
            row = np.zeros(nx)
            row[n_v:n_v + n_e] = (ctx == k)
            row[-1] = -1
            A_ub.append(row)
            b_ub.append(0.0)
    A_eq = np.zeros((1, nx))
    A_eq[0, :n_v] = 1
    res = linprog(c, A_ub=np.array(A_ub), b_ub=np.array(b_ub), A_eq=A_eq, b_eq=[1.0],
                  bounds=[(0, None)] * (n_v + n_e) + [(None, None)], method="highs")
    return float(res.fun)


def project_simplex(v):
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    idx = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - (css - 1) / idx > 0)[0][-1]
    theta = (css[rho] - 1) / (rho + 1)
    return np.maximum(v - theta, 0)


class _Divergences:
    def __init__(self, b):
        A = vertex_matrix(b.scenario)
        p = prob_vector(b)
        keep = p > 0
        self.A, self.p = A[keep], p[keep]
        self.ctx = np.array([k for k, _ in event_list(b.scenario)])[keep]
        self.N = len(b.scenario.contexts)

    def per_context(self, w):
        q = self.A @ w
        if np.any(q <= 0):
            return np.full(self.N, np.inf)
        terms = self.p * np.log2(self.p / q)
        return np.bincount(self.ctx, terms, minlength=self.N)

    def grad(self, w, ctx_weights):
        q = self.A @ w
        return self.A.T @ (-ctx_weights[self.ctx] * self.p / (q * math.log(2)))


def _fista(value, grad, w0, iters, tol, window=500):
    """Accelerated projected gradient with backtracking and adaptive restart.

    Stops after ``iters`` iterations, on a step shorter than ``tol``, or when
    the objective improved by less than ``tol`` over the last ``window``
    iterations.
    """
    w = y = w0.copy()
    fw = value(w)
    t = 1.0
    L = 1.0
    history = [fw]
    for _ in range(iters):
        g = grad(y)
        fy = value(y)
        while True:
            z = project_simplex(y - g / L)
            fz = value(z)
            d = z - y
            if fz <= fy + g @ d + 0.5 * L * (d @ d) + 1e-15:
                break
            L *= 2.0
        if fz > fw:
            if t == 1.0:
                break  # a plain projected step from w no longer descends
            # restart momentum when the objective goes up
            y, t = w.copy(), 1.0
            continue
        step = np.linalg.norm(z - w)
        t_next = (1 + math.sqrt(1 + 4 * t * t)) / 2
        y = z + ((t - 1) / t_next) * (z - w)
        w, fw, t = z, fz, t_next
        L = max(L / 1.5, 1e-6)
        history.append(fw)
        if step < tol or (len(history) > window and history[-window - 1] - fw < tol):
            break
    return w, fw


def pg_relative_entropy_uniform(b, iters: int = 10**6, tol: float = 1e-13) -> float:
    """E_u by projected gradient on the mean per-context KL."""
    D = _Divergences(b)
    uniform = np.full(D.N, 1.0 / D.N)
    w0 = np.full(D.A.shape[1], 1.0 / D.A.shape[1])

    def value(w):
        return float(np.mean(D.per_context(w)))

    w, fw = _fista(value, lambda w: D.grad(w, uniform), w0, iters, tol)
    return fw


def pg_relative_entropy_max(b, iters: int = 10**6, tol: float = 1e-12,
                            temperatures=(1e-1, 1e-2, 1e-3, 1e-4)) -> float:
    """E_max by projected gradient on a log-sum-exp smoothing, cooled in stages.

    The smoothed objective exceeds the max by at most ``tau * ln N``; the
    returned number is the plain max at the final iterate, an upper bound.
    """
    D = _Divergences(b)
    w = np.full(D.A.shape[1], 1.0 / D.A.shape[1])
    best = math.inf
    for tau in temperatures:
        def value(w, tau=tau):
            f = D.per_context(w)
            if not np.all(np.isfinite(f)):
                return math.inf
            m = f.max()
            return float(m + tau * math.log(np.exp((f - m) / tau).sum()))

        def grad(w, tau=tau):
            f = D.per_context(w)
            e = np.exp((f - f.max()) / tau)
            return D.grad(w, e / e.sum())

        w, _ = _fista(value, grad, w, iters, tol)
        best = min(best, float(D.per_context(w).max()))
    return best


def cvx_relative_entropy(b, kind: str) -> float:
    """Exponential-cone formulation solved by cvxpy (Clarabel)."""
    import cvxpy as cp

    D = _Divergences(b)
    w = cp.Variable(D.A.shape[1], nonneg=True)
    q = D.A @ w
    per_ctx = []
    for k in range(D.N):
        rows = np.flatnonzero(D.ctx == k)
        if len(rows) == 0:
            per_ctx.append(0)
            continue
        per_ctx.append(cp.sum(cp.rel_entr(D.p[rows], q[rows])) / math.log(2))
    obj = cp.sum(cp.hstack(per_ctx)) / D.N if kind == "uniform" else cp.max(cp.hstack(per_ctx))
    prob = cp.Problem(cp.Minimize(obj), [cp.sum(w) == 1])
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value)


def brute_nu(table) -> float:
    """Distance to the nearest ``x -> a.x mod 2`` by listing every ``a``."""
    m = (len(table) - 1).bit_length()
    best = len(table)
    for a in range(1 << m):
        mism = sum(int(table[x]) != bin(a & x).count("1") % 2 for x in range(len(table)))
        best = min(best, mism)
    return best / len(table)


def direct_wiring(b, pre_box, l2b, b2, responses, phi):
    """Textbook triple sum for a wiring, written independently of the package."""
    out = []
    target = b.scenario
    for k, beta in enumerate(pre_box.scenario.contexts):
        row = {}
        for r, pr in pre_box.tables[k].items():
            image = [l2b[(m, o)] for m, o in zip(beta, r)]
            kt = next(i for i, c in enumerate(target.contexts) if set(c) == set(image))
            ctx = target.contexts[kt]
            for s_key, ps in b.tables[kt].items():
                s_wire = [s_key[ctx.index(m)] for m in image]
                deltas = [b2[(m, o)] for m, o in zip(image, s_wire)]
                for f, pf in enumerate(phi):
                    per_wire = []
                    for bi, ri, di in zip(beta, r, deltas):
                        d = responses.get((bi, ri, di, f)) or responses[(None, None, di, f)]
                        per_wire.append(list(d.items()))
                    for combo in itertools.product(*per_wire):
                        p = pr * ps * pf
                        for _, x in combo:
                            p *= x
                        t = tuple(o for o, _ in combo)
                        row[t] = row.get(t, 0) + p
        out.append({t: p for t, p in row.items() if p})
    return out
