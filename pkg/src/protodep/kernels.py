"""Hot numeric kernels: pairwise costs and the Sinkhorn fixed-point loop.

Every kernel has a pure-numpy implementation and, when numba is importable,
an @njit twin compiled from explicit loops. The numba path is the default;
set ``PROTODEP_DISABLE_NUMBA=1`` to force the numpy fallback (useful when
debugging or on platforms where numba misbehaves). ``benchmarks/bench_kernels.py``
compares the two paths.

Both paths compute the same quantities; they may differ in the last couple
of bits because of summation order.
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "USING_NUMBA",
    "pairwise_sqdist",
    "sinkhorn_potentials",
    "plan_and_value",
]


# ---------------------------------------------------------------------------
# numpy implementations
# ---------------------------------------------------------------------------

def _pairwise_sqdist_numpy(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between rows of x (n,d) and y (m,d)."""
    diff = x[:, None, :] - y[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _logsumexp_rows(m: np.ndarray) -> np.ndarray:
    mx = m.max(axis=1)
    return mx + np.log(np.exp(m - mx[:, None]).sum(axis=1))


def _sinkhorn_potentials_numpy(cost, log_a, log_b, eps, max_iters, tol):
    """Log-domain Sinkhorn iterations for the entropic transport problem.

    Returns (f, g, iterations, row_marginal_violation). The column marginal
    is exact by construction right after each g-update, so convergence is
    declared when the row marginal of the implied plan is within ``tol``
    of the source weights (sup norm).
    """
    n, m = cost.shape
    f = np.zeros(n)
    g = np.zeros(m)
    a = np.exp(log_a)
    violation = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        f = -eps * _logsumexp_rows(log_b[None, :] + (g[None, :] - cost) / eps)
        g = -eps * _logsumexp_rows(
            (log_a[None, :] + (f[None, :] - cost.T) / eps)
        )
        log_plan = (f[:, None] + g[None, :] - cost) / eps \
            + log_a[:, None] + log_b[None, :]
        row = np.exp(log_plan).sum(axis=1)
        violation = np.abs(row - a).max()
        if violation <= tol:
            break
    return f, g, it, violation


def _plan_and_value_numpy(cost, log_a, log_b, f, g, eps):
    """Transport plan implied by the potentials and the primal objective.

    The objective is the transported cost plus eps times the generalized
    KL divergence of the plan against the product measure; in terms of the
    potentials it collapses to sum(plan * (f + g)) - eps * (mass - 1).
    """
    log_plan = (f[:, None] + g[None, :] - cost) / eps \
        + log_a[:, None] + log_b[None, :]
    plan = np.exp(log_plan)
    mass = plan.sum()
    value = float((plan * (f[:, None] + g[None, :])).sum() - eps * (mass - 1.0))
    return plan, value


# ---------------------------------------------------------------------------
# numba implementations (explicit loops, no temporaries)
# ---------------------------------------------------------------------------

_DISABLE = os.environ.get("PROTODEP_DISABLE_NUMBA", "").strip().lower() in (
    "1", "true", "yes",
)

try:
    if _DISABLE:
        raise ImportError("numba disabled via PROTODEP_DISABLE_NUMBA")
    from numba import njit
except ImportError:
    njit = None

if njit is not None:

    @njit(cache=True)
    def _pairwise_sqdist_numba(x, y):  # pragma: no cover - exercised via dispatch
        n, d = x.shape
        m = y.shape[0]
        out = np.empty((n, m))
        for i in range(n):
            for j in range(m):
                acc = 0.0
                for t in range(d):
                    diff = x[i, t] - y[j, t]
                    acc += diff * diff
                out[i, j] = acc
        return out

    @njit(cache=True)
    def _sinkhorn_potentials_numba(cost, log_a, log_b, eps, max_iters, tol):  # pragma: no cover
        n, m = cost.shape
        f = np.zeros(n)
        g = np.zeros(m)
        violation = np.inf
        it = 0
        for it in range(1, max_iters + 1):
            for i in range(n):
                mx = -np.inf
                for j in range(m):
                    v = log_b[j] + (g[j] - cost[i, j]) / eps
                    if v > mx:
                        mx = v
                acc = 0.0
                for j in range(m):
                    acc += np.exp(log_b[j] + (g[j] - cost[i, j]) / eps - mx)
                f[i] = -eps * (mx + np.log(acc))
            for j in range(m):
                mx = -np.inf
                for i in range(n):
                    v = log_a[i] + (f[i] - cost[i, j]) / eps
                    if v > mx:
                        mx = v
                acc = 0.0
                for i in range(n):
                    acc += np.exp(log_a[i] + (f[i] - cost[i, j]) / eps - mx)
                g[j] = -eps * (mx + np.log(acc))
            violation = 0.0
            for i in range(n):
                row = 0.0
                for j in range(m):
                    row += np.exp(
                        (f[i] + g[j] - cost[i, j]) / eps + log_a[i] + log_b[j]
                    )
                dv = abs(row - np.exp(log_a[i]))
                if dv > violation:
                    violation = dv
            if violation <= tol:
                break
        return f, g, it, violation

    @njit(cache=True)
    def _plan_and_value_numba(cost, log_a, log_b, f, g, eps):  # pragma: no cover
        n, m = cost.shape
        plan = np.empty((n, m))
        weighted = 0.0
        mass = 0.0
        for i in range(n):
            for j in range(m):
                p = np.exp(
                    (f[i] + g[j] - cost[i, j]) / eps + log_a[i] + log_b[j]
                )
                plan[i, j] = p
                weighted += p * (f[i] + g[j])
                mass += p
        return plan, weighted - eps * (mass - 1.0)

    USING_NUMBA = True
    pairwise_sqdist = _pairwise_sqdist_numba
    sinkhorn_potentials = _sinkhorn_potentials_numba
    plan_and_value = _plan_and_value_numba
else:
    USING_NUMBA = False
    pairwise_sqdist = _pairwise_sqdist_numpy
    sinkhorn_potentials = _sinkhorn_potentials_numpy
    plan_and_value = _plan_and_value_numpy
