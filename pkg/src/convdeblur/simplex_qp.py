"""Convex quadratic minimization over the probability simplex.

Solver: accelerated projected gradient (FISTA) with function-value adaptive
restart. Matrix-free apart from Q @ x products; feasibility is maintained by
Euclidean projection onto the simplex after every step.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class QpProblem:
    """Minimize x^T Q x + c^T x over the probability simplex."""
    q: np.ndarray
    c: np.ndarray = None

    def __post_init__(self):
        q = np.asarray(self.q, dtype=np.float64)
        if q.ndim != 2 or q.shape[0] != q.shape[1]:
            raise ValueError("Q must be square")
        if np.max(np.abs(q - q.T)) > 1e-10 * max(1.0, np.max(np.abs(q))):
            raise ValueError("Q must be symmetric")
        object.__setattr__(self, "q", q)
        c = self.c
        c = np.zeros(q.shape[0]) if c is None else np.asarray(c, dtype=np.float64)
        if c.shape != (q.shape[0],):
            raise ValueError("c has wrong dimension")
        object.__setattr__(self, "c", c)

    @property
    def dim(self):
        return self.q.shape[0]

    def objective(self, x):
        return float(x @ self.q @ x + self.c @ x)

    def gradient(self, x):
        return 2.0 * (self.q @ x) + self.c


@dataclass(frozen=True)
class QpSolution:
    point: np.ndarray
    objective: float
    iterations: int
    kkt_residual: float
    converged: bool


def project_simplex(v):
    """Euclidean projection onto {x : x >= 0, sum(x) = 1}.

    Sort-based exact algorithm: threshold at the largest j with
    u_j + (1 - cumsum(u)_j)/j > 0 for u = sorted(v, descending).
    """
    v = np.asarray(v, dtype=np.float64).ravel()
    if v.size == 0:
        raise ValueError("cannot project an empty vector")
    u = np.sort(v)[::-1]
    cs = np.cumsum(u)
    j = np.arange(1, v.size + 1)
    rho = np.nonzero(u + (1.0 - cs) / j > 0)[0][-1]
    theta = (1.0 - cs[rho]) / (rho + 1.0)
    return np.maximum(v + theta, 0.0)


def estimate_lambda_max(q, iters=50, tol=1e-6, seed=0):
    """Largest eigenvalue of symmetric PSD q by power iteration."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(q.shape[0])
    x /= np.linalg.norm(x)
    lam = 0.0
    for _ in range(iters):
        y = q @ x
        lam_new = float(x @ y)
        ny = np.linalg.norm(y)
        if ny == 0.0:
            return 0.0
        x = y / ny
        if abs(lam_new - lam) <= tol * max(abs(lam_new), 1e-30):
            lam = lam_new
            break
        lam = lam_new
    return abs(lam)


def kkt_residual(p, x, step):
    """Projected-gradient fixed-point residual; zero iff x is optimal."""
    return float(np.linalg.norm(x - project_simplex(x - step * p.gradient(x))))


def solve_qp(p, tol=1e-8, max_iter=10000, x0=None):
    """FISTA over the simplex with adaptive restart.

    Step size 1/(2*lambda_max(Q)), i.e. the inverse Lipschitz constant of the
    gradient of x^T Q x + c^T x. Terminates when the projected-gradient
    residual drops below tol; returns the best iterate flagged non-converged
    when max_iter is exhausted.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    d = p.dim
    lam = estimate_lambda_max(p.q)
    step = 1.0 / (2.0 * lam) if lam > 0 else 1.0
    x = project_simplex(np.full(d, 1.0 / d) if x0 is None else np.asarray(x0, float))
    y = x.copy()
    t = 1.0
    fx = p.objective(x)
    best_x, best_f = x, fx
    it = 0
    for it in range(1, max_iter + 1):
        x_new = project_simplex(y - step * p.gradient(y))
        f_new = p.objective(x_new)
        if f_new > fx:  # momentum overshot: restart from the last iterate
            t = 1.0
            y = x.copy()
            x_new = project_simplex(y - step * p.gradient(y))
            f_new = p.objective(x_new)
        t_new = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t * t))
        y = x_new + ((t - 1.0) / t_new) * (x_new - x)
        x, fx, t = x_new, f_new, t_new
        if fx < best_f:
            best_x, best_f = x, fx
        if np.linalg.norm(x - project_simplex(x - step * p.gradient(x))) <= tol:
            return QpSolution(x, fx, it, kkt_residual(p, x, step), True)
    res = kkt_residual(p, best_x, step)
    return QpSolution(best_x, best_f, it, res, res <= tol)
