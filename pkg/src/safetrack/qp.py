"""Dense active-set solver for tiny strictly convex QPs.

Problems have the form::

    minimize    0.5 x' diag(H) x + g' x
    subject to  A x >= b

The solver is a dual active-set method (Goldfarb-Idnani): it starts at the
unconstrained minimum and adds the most violated row (lowest index on ties),
dropping rows whose multipliers would turn negative.  Because the start point
is the unconstrained minimum, a problem whose rows are all satisfied there is
returned untouched.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import InvalidInputError

MAX_ROWS = 32
MAX_ITER = 200
BRUTE_FORCE_MAX_ROWS = 12

STATIONARITY_TOL = 1e-8
COMPLEMENTARITY_TOL = 1e-8
PRIMAL_TOL = 1e-9

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
DEGENERATE = "degenerate_fallback"


@dataclass(frozen=True)
class QpProblem:
    H: np.ndarray
    g: np.ndarray
    A: np.ndarray
    b: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        H = np.asarray(self.H, dtype=float).reshape(-1)
        g = np.asarray(self.g, dtype=float).reshape(-1)
        n = H.size
        A = np.asarray(self.A, dtype=float).reshape(-1, n)
        b = np.asarray(self.b, dtype=float).reshape(-1)
        if g.size != n or A.shape[0] != b.size:
            raise InvalidInputError("inconsistent QP dimensions")
        if not np.all(H > 0):
            raise InvalidInputError("H must be positive definite (positive diagonal)")
        if not (np.all(np.isfinite(H)) and np.all(np.isfinite(g))
                and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InvalidInputError("QP data must be finite")
        if b.size > MAX_ROWS:
            raise InvalidInputError(f"at most {MAX_ROWS} rows supported, got {b.size}")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.H.size

    @property
    def m(self) -> int:
        return self.b.size

    def objective(self, x) -> float:
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ (self.H * x) + self.g @ x)

    @property
    def unconstrained_minimum(self) -> np.ndarray:
        return -self.g / self.H


@dataclass(frozen=True)
class KktResiduals:
    stationarity: float
    primal: float
    complementarity: float

    def within(self, scales=(1.0, 1.0, 1.0)) -> bool:
        """Residuals below tolerance, each relative to the given magnitude."""
        s_stat, s_primal, s_compl = scales
        return (self.stationarity <= STATIONARITY_TOL * s_stat
                and self.primal <= PRIMAL_TOL * s_primal
                and self.complementarity <= COMPLEMENTARITY_TOL * s_compl)


def _kkt_scales(p: "QpProblem", x, mu) -> tuple[float, float, float]:
    # magnitudes of the terms each residual cancels; 1 for unit-sized data
    stat = 1.0 + float(max(np.max(np.abs(p.H * x)), np.max(np.abs(p.g))))
    if not p.m:
        return stat, 1.0, 1.0
    stat = max(stat, 1.0 + float(np.max(np.abs(p.A.T @ mu))))
    primal = 1.0 + float(np.max(np.abs(p.A) @ np.abs(x) + np.abs(p.b)))
    return stat, primal, primal * (1.0 + float(np.max(mu)))


@dataclass(frozen=True)
class QpSolution:
    x_star: np.ndarray
    multipliers: np.ndarray
    active_set: tuple[int, ...]
    kkt: KktResiduals
    status: str
    iterations: int = 0
    objective_value: float = float("nan")


def kkt_residuals(p: QpProblem, x, multipliers) -> KktResiduals:
    """Stationarity, primal violation and complementarity residuals (inf-norms)."""
    x = np.asarray(x, dtype=float)
    mu = np.asarray(multipliers, dtype=float)
    grad = p.H * x + p.g
    if p.m:
        grad = grad - p.A.T @ mu
        slack = p.A @ x - p.b
        primal = float(max(0.0, np.max(-slack)))
        compl = float(np.max(np.abs(mu * slack)))
    else:
        primal = compl = 0.0
    return KktResiduals(float(np.max(np.abs(grad))) if grad.size else 0.0, primal, compl)


def _equality_solve(p: QpProblem, rows, x0):
    """Minimizer on ``A[rows] x = b[rows]`` and its multipliers; None if singular."""
    if not rows:
        return x0.copy(), np.zeros(0)
    N = p.A[list(rows)]
    hinv = 1.0 / p.H
    M = (N * hinv) @ N.T
    b = p.b[list(rows)]
    try:
        lam = np.linalg.solve(M, b - N @ x0)
        x = x0 + hinv * (N.T @ lam)
        # one refinement step recovers accuracy on ill-conditioned active sets
        lam = lam + np.linalg.solve(M, b - N @ x)
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(lam)):
        return None
    return x0 + hinv * (N.T @ lam), lam


def _violation_tol(p: QpProblem, x) -> np.ndarray:
    scale = np.abs(p.b) + np.abs(p.A) @ np.abs(x)
    return 1e-13 * (1.0 + scale)


def _finish(p: QpProblem, x, active, lam, status, iterations) -> QpSolution:
    mu = np.zeros(p.m)
    for j, val in zip(active, lam):
        mu[j] = max(float(val), 0.0)
    kkt = kkt_residuals(p, x, mu)
    if status == OPTIMAL and not kkt.within(_kkt_scales(p, x, mu)):
        status = DEGENERATE
    return QpSolution(x_star=x, multipliers=mu, active_set=tuple(sorted(active)), kkt=kkt,
                      status=status, iterations=iterations,
                      objective_value=p.objective(x))


def _try_warm(p: QpProblem, x0, warm):
    rows = [j for j in warm if 0 <= j < p.m]
    if not rows or len(rows) > p.n:
        return None
    res = _equality_solve(p, rows, x0)
    if res is None:
        return None
    x, lam = res
    if np.any(lam < 0):
        return None
    if np.any(p.A @ x - p.b < -_violation_tol(p, x)):
        return None
    return x, rows, lam


def solve(p: QpProblem, warm_start=None, max_iter: int = MAX_ITER) -> QpSolution:
    """Solve ``p`` exactly.

    ``warm_start`` is an optional iterable of row indices tried first as the
    optimal active set; the guess is accepted only if it satisfies KKT, so it
    never changes the answer.
    """
    x0 = p.unconstrained_minimum
    if warm_start:
        warm = _try_warm(p, x0, list(warm_start))
        if warm is not None:
            x, rows, lam = warm
            return _finish(p, x, rows, lam, OPTIMAL, 0)

    hinv = 1.0 / p.H
    x = x0.copy()
    active: list[int] = []
    skipped: list[int] = []
    u = np.zeros(0)
    it = 0
    while True:
        if p.m == 0:
            break
        viol = p.b - p.A @ x
        tol = _violation_tol(p, x)
        candidates = viol > tol
        candidates[active + skipped] = False
        if not np.any(candidates):
            break
        masked = np.where(candidates, viol, -np.inf)
        q = int(np.argmax(masked))  # first maximum -> lowest index on ties
        n_q = p.A[q]
        u_q = 0.0
        while True:
            it += 1
            if it > max_iter:
                return _finish(p, x, active, u, DEGENERATE, it)
            if active:
                N = p.A[active]
                M = (N * hinv) @ N.T
                r = np.linalg.solve(M, N @ (hinv * n_q))
                # a full-rank active set leaves no primal direction
                z = np.zeros(p.n) if len(active) >= p.n else hinv * (n_q - N.T @ r)
            else:
                r = np.zeros(0)
                z = hinv * n_q
            zn = float(z @ n_q)
            # dual step length
            t1, k = np.inf, -1
            for idx in range(len(active)):
                if r[idx] > 1e-14:
                    ratio = u[idx] / r[idx]
                    if ratio < t1:
                        t1, k = ratio, idx
            full_dir = zn > 1e-12 * float(n_q @ (hinv * n_q))
            if not full_dir:
                if k < 0:
                    if viol[q] <= 1e3 * tol[q]:
                        # roundoff on a weakly active row at a degenerate vertex
                        skipped.append(q)
                        break
                    return _finish(p, x, active, u, INFEASIBLE, it)
                u = u - t1 * r
                u_q += t1
                del active[k]
                u = np.delete(u, k)
                continue
            t2 = (p.b[q] - n_q @ x) / zn
            if t2 <= t1:
                x = x + t2 * z
                u = np.append(u - t2 * r, u_q + t2)
                active.append(q)
                break
            x = x + t1 * z
            u = u - t1 * r
            u_q += t1
            del active[k]
            u = np.delete(u, k)

    # re-solve on the final active set for accuracy
    res = _equality_solve(p, active, x0)
    if res is not None:
        x_pol, lam = res
        if np.all(lam >= -1e-12):
            x, u = x_pol, lam
    return _finish(p, x, active, u, OPTIMAL, it)


class ActiveSetSolver:
    """Stateful wrapper that warm-starts from the previous active set."""

    def __init__(self, max_iter: int = MAX_ITER):
        self.max_iter = max_iter
        self.last_active: tuple[int, ...] = ()

    def reset(self):
        self.last_active = ()

    def solve(self, p: QpProblem) -> QpSolution:
        sol = solve(p, warm_start=self.last_active, max_iter=self.max_iter)
        if sol.status == OPTIMAL:
            self.last_active = sol.active_set
        return sol


def brute_force_solve(p: QpProblem) -> QpSolution:
    """Enumerate every active subset (test oracle).

    Each linearly independent subset of at most ``n`` rows gives an
    equality-constrained candidate; the optimum is the feasible candidate with
    nonnegative multipliers and lowest objective.  Subsets of equal size are
    solved as one batched linear system.
    """
    if p.m > BRUTE_FORCE_MAX_ROWS:
        raise InvalidInputError(f"brute force limited to {BRUTE_FORCE_MAX_ROWS} rows")
    x0 = p.unconstrained_minimum
    hinv = 1.0 / p.H
    best = None  # (objective, x, rows, lam)
    if p.m == 0:
        return _finish(p, x0, [], np.zeros(0), OPTIMAL, 0)
    resid0 = p.b - p.A @ x0
    for k in range(0, min(p.n, p.m) + 1):
        if k == 0:
            subsets = np.zeros((1, 0), dtype=int)
            xs = x0[None, :]
            lams = np.zeros((1, 0))
        else:
            subsets = np.array(list(itertools.combinations(range(p.m), k)), dtype=int)
            N = p.A[subsets]  # (C, k, n)
            M = np.einsum("cin,n,cjn->cij", N, hinv, N)
            sv = np.linalg.svd(M, compute_uv=False)
            ok = sv[:, -1] > 1e-12 * np.maximum(sv[:, 0], 1e-300)
            subsets, N, M = subsets[ok], N[ok], M[ok]
            if not len(subsets):
                continue
            lams = np.linalg.solve(M, resid0[subsets][..., None])[..., 0]
            xs = x0 + hinv * np.einsum("cin,ci->cn", N, lams)
        dual_ok = np.all(lams >= -1e-10, axis=1)
        slack = xs @ p.A.T - p.b
        tol = 1e-9 * (1.0 + np.abs(p.b) + np.abs(xs) @ np.abs(p.A).T)
        primal_ok = np.all(slack >= -tol, axis=1)
        good = np.flatnonzero(dual_ok & primal_ok)
        for c in good:
            obj = p.objective(xs[c])
            if best is None or obj < best[0]:
                best = (obj, xs[c], list(subsets[c]), lams[c])
    if best is None:
        return _finish(p, x0, [], np.zeros(0), INFEASIBLE, 0)
    _, x, rows, lam = best
    return _finish(p, x, [int(j) for j in rows], lam, OPTIMAL, 0)
