"""Multi-L1 recovery by ADMM, plus baselines and a verification oracle.

The generalized problem is::

    minimize    sum_p lam_p * ||Psi_p x||_1
    subject to  ||y - Phi x||_2 <= eps

where ``||.||_1`` of a complex vector sums complex moduli. T-L1, F-L1 and
L1-L1 are the special cases with Psi = I, Psi = F (unitary DFT) and the
weighted pair (I, F).

ADMM splitting (scaled form)::

    z_p = Psi_p x        (one block per term with lam_p > 0)
    w   = Phi x          (w constrained to the ball B(y, eps))

x-update is a linear solve with the fixed normal matrix
``sum_p Re(Psi_p^H Psi_p) + Phi^T Phi``; a single penalty rho is shared by
all blocks so it cancels from that matrix and can be adapted freely.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import DimensionError, IllConditionedError, InfeasibleProblemError
from .operators import AnalysisOperator, MeasurementMatrix, Signal

__all__ = [
    "RecoveryProblem",
    "SolverConfig",
    "SolveReport",
    "FeasibilityDiagnostic",
    "solve_multi_l1",
    "solve_t_l1",
    "solve_f_l1",
    "solve_l1_l1",
    "solve_ls_baseline",
    "oracle_subgradient",
    "kkt_feasibility_check",
    "multi_l1_objective",
    "DEFAULT_LAMBDA2",
]

DEFAULT_LAMBDA2 = 0.05

# residual tolerance floor, relative to ||y||, used when eps is (near) zero
_ABS_FEAS_FLOOR = 1e-9


def _feasibility_slack_tol(eps, y_norm):
    return eps * 1e-6 + _ABS_FEAS_FLOOR * y_norm


@dataclass(frozen=True)
class SolverConfig:
    rho: float = 1.0
    max_iters: int = 20000
    abs_tol: float = 1e-7
    rel_tol: float = 1e-5
    over_relaxation: float = 1.6
    # residual balancing of rho; rho drops out of the normal matrix so this is free
    adaptive_rho: bool = True

    def __post_init__(self):
        if not self.rho > 0:
            raise ValueError("rho must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be a positive integer")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")
        if not 1.0 <= self.over_relaxation <= 1.8:
            raise ValueError("over_relaxation must lie in [1.0, 1.8]")


@dataclass(frozen=True)
class RecoveryProblem:
    """One instance (y, Phi, [(lam_p, Psi_p)], eps) of the multi-L1 program.

    Construction fails with :class:`InfeasibleProblemError` when the
    distance from y to the range of Phi exceeds eps.
    """

    y: np.ndarray
    phi: MeasurementMatrix
    terms: tuple
    epsilon: float
    ls_distance: float = field(init=False, repr=False)

    def __post_init__(self):
        phi = self.phi
        if not isinstance(phi, MeasurementMatrix):
            phi = MeasurementMatrix.from_array(phi)
            object.__setattr__(self, "phi", phi)
        y = np.array(self.y, dtype=float)
        if y.shape != (phi.rows,):
            raise DimensionError(f"y has shape {y.shape}, Phi has {phi.rows} rows")
        y.setflags(write=False)
        object.__setattr__(self, "y", y)

        terms = tuple((float(lam), psi) for lam, psi in self.terms)
        if not terms:
            raise ValueError("at least one sparsity term is required")
        for lam, psi in terms:
            if not isinstance(psi, AnalysisOperator):
                raise TypeError("terms must pair a weight with an AnalysisOperator")
            if not (lam >= 0 and math.isfinite(lam)):
                raise ValueError(f"weights must be finite and nonnegative, got {lam}")
            if psi.cols != phi.cols:
                raise DimensionError(f"operator has {psi.cols} columns, Phi has {phi.cols}")
        if not any(lam > 0 for lam, _ in terms):
            raise ValueError("at least one weight must be positive")
        object.__setattr__(self, "terms", terms)

        eps = float(self.epsilon)
        if not (eps >= 0 and math.isfinite(eps)):
            raise ValueError("epsilon must be finite and nonnegative")
        object.__setattr__(self, "epsilon", eps)

        x_ls = np.linalg.lstsq(phi.entries, y, rcond=None)[0]
        dist = float(np.linalg.norm(y - phi.entries @ x_ls))
        object.__setattr__(self, "ls_distance", dist)
        if dist > eps + _feasibility_slack_tol(eps, np.linalg.norm(y)):
            raise InfeasibleProblemError(
                f"y lies {dist:.3g} from range(Phi), beyond eps={eps:.3g}"
            )

    @property
    def n(self):
        return self.phi.cols

    @property
    def m(self):
        return self.phi.rows


@dataclass(frozen=True)
class SolveReport:
    x_hat: Signal
    objective: float
    residual: float
    iterations: int
    converged: bool
    wall_time: float


@dataclass(frozen=True)
class FeasibilityDiagnostic:
    slack: float
    residual: float
    objective: float
    violation: bool


def multi_l1_objective(problem, x):
    x = x.samples if isinstance(x, Signal) else np.asarray(x)
    return float(sum(lam * np.abs(psi.apply(x)).sum() for lam, psi in problem.terms))


def _shrink(v, tau):
    # prox of tau*|.| elementwise; complex entries shrink in modulus
    mag = np.abs(v)
    scale = np.maximum(1.0 - tau / np.maximum(mag, np.finfo(float).tiny), 0.0)
    return v * scale


def _project_ball(v, center, radius):
    d = v - center
    nd = np.linalg.norm(d)
    if nd <= radius:
        return v
    return center + d * (radius / nd)


def _restore_feasibility(phi, y, x, eps):
    """Minimum-norm correction moving the residual onto the eps-sphere."""
    r = y - phi @ x
    nr = np.linalg.norm(r)
    if nr <= eps:
        return x
    dx = np.linalg.lstsq(phi, r * (1.0 - eps / nr), rcond=None)[0]
    return x + dx


def _report(problem, x, iterations, converged, t0):
    x = np.asarray(x, dtype=float)
    residual = float(np.linalg.norm(problem.y - problem.phi.entries @ x))
    return SolveReport(
        x_hat=Signal(x),
        objective=multi_l1_objective(problem, x),
        residual=residual,
        iterations=int(iterations),
        converged=bool(converged),
        wall_time=time.perf_counter() - t0,
    )


def _equilibrate(lam, psi):
    """Rescale a dense operator to unit spectral norm, moving the factor into lam.

    The objective is unchanged; a shared rho then suits every block.
    """
    if psi.entries is None:
        return lam, psi
    s = np.linalg.norm(psi.entries, 2)
    if s == 0.0:
        return lam, psi
    return lam * s, AnalysisOperator(psi.kind, psi.rows, psi.cols, psi.entries / s)


def solve_multi_l1(problem: RecoveryProblem, config: SolverConfig | None = None) -> SolveReport:
    """Solve the multi-L1 program by over-relaxed ADMM.

    Stops on the usual primal/dual residual test (abs_tol, rel_tol) or after
    ``max_iters``; the latter returns ``converged=False``. On exit the
    iterate gets a minimum-norm correction that puts it inside the eps-ball,
    so converged reports are feasible up to rounding.
    """
    config = config or SolverConfig()
    t0 = time.perf_counter()
    y = problem.y
    phi = problem.phi.entries
    eps = problem.epsilon
    m, n = phi.shape

    if np.linalg.norm(y) <= eps:
        return _report(problem, np.zeros(n), 0, True, t0)

    blocks = [_equilibrate(lam, psi) for lam, psi in problem.terms if lam > 0]
    normal = phi.T @ phi
    for _, psi in blocks:
        normal += psi.real_gram()
    try:
        factor = scipy.linalg.cho_factor(normal, lower=True)
    except np.linalg.LinAlgError as exc:
        raise IllConditionedError("normal matrix is not positive definite") from exc
    # explicit inverse from the factor: one dense matvec per iteration
    normal_inv = scipy.linalg.cho_solve(factor, np.eye(n))

    alpha = config.over_relaxation
    rho = config.rho
    n_rows = m + sum(psi.rows for _, psi in blocks)

    x = np.linalg.lstsq(phi, y, rcond=None)[0]
    z = [psi.apply(x) for _, psi in blocks]
    u = [np.zeros_like(zp) for zp in z]
    w = phi @ x
    uw = np.zeros(m)

    def adjoint_sum(parts, tail):
        acc = phi.T @ tail
        for (_, psi), part in zip(blocks, parts):
            acc = acc + psi.adjoint(part).real
        return acc

    at_z = adjoint_sum(z, w)
    at_u = adjoint_sum(u, uw)
    converged = False
    it = 0
    for it in range(1, int(config.max_iters) + 1):
        x = normal_inv @ (at_z - at_u)

        r2 = 0.0
        ax_norm2 = 0.0
        z_norm2 = 0.0
        for i, (lam, psi) in enumerate(blocks):
            ax = psi.apply(x)
            axh = alpha * ax + (1.0 - alpha) * z[i]
            zp = _shrink(axh + u[i], lam / rho)
            u[i] = u[i] + axh - zp
            z[i] = zp
            r2 += np.vdot(ax - zp, ax - zp).real
            ax_norm2 += np.vdot(ax, ax).real
            z_norm2 += np.vdot(zp, zp).real
        aw = phi @ x
        awh = alpha * aw + (1.0 - alpha) * w
        w = _project_ball(awh + uw, y, eps)
        uw = uw + awh - w
        r2 += np.dot(aw - w, aw - w)
        ax_norm2 += np.dot(aw, aw)
        z_norm2 += np.dot(w, w)

        at_z_new = adjoint_sum(z, w)
        at_u = adjoint_sum(u, uw)
        r_pri = math.sqrt(r2)
        s_dual = rho * np.linalg.norm(at_z_new - at_z)
        at_z = at_z_new

        eps_pri = math.sqrt(n_rows) * config.abs_tol + config.rel_tol * math.sqrt(
            max(ax_norm2, z_norm2)
        )
        eps_dual = math.sqrt(n) * config.abs_tol + config.rel_tol * rho * np.linalg.norm(at_u)
        if r_pri <= eps_pri and s_dual <= eps_dual:
            converged = True
            break

        if config.adaptive_rho and it % 10 == 0 and it <= config.max_iters // 2:
            scale = 1.0
            if r_pri > 10.0 * s_dual:
                scale = 2.0
            elif s_dual > 10.0 * r_pri:
                scale = 0.5
            if scale != 1.0:
                rho *= scale
                u = [up / scale for up in u]
                uw = uw / scale
                at_u = at_u / scale

    x = _restore_feasibility(phi, y, x, eps)
    residual = np.linalg.norm(y - phi @ x)
    if residual > eps + _feasibility_slack_tol(eps, np.linalg.norm(y)):
        converged = False
    return _report(problem, x, it, converged, t0)


def solve_t_l1(y, phi, eps, config=None):
    """BPDN with the identity analysis operator (time-domain sparsity)."""
    phi = phi if isinstance(phi, MeasurementMatrix) else MeasurementMatrix.from_array(phi)
    terms = [(1.0, AnalysisOperator.identity(phi.cols))]
    return solve_multi_l1(RecoveryProblem(y, phi, terms, eps), config)


def solve_f_l1(y, phi, eps, config=None):
    """BPDN with the unitary DFT as analysis operator (frequency sparsity)."""
    phi = phi if isinstance(phi, MeasurementMatrix) else MeasurementMatrix.from_array(phi)
    terms = [(1.0, AnalysisOperator.dft(phi.cols))]
    return solve_multi_l1(RecoveryProblem(y, phi, terms, eps), config)


def solve_l1_l1(y, phi, eps, lambda2=DEFAULT_LAMBDA2, config=None):
    """||x||_1 + lambda2 * ||F x||_1 under the residual-ball constraint."""
    if lambda2 < 0:
        raise ValueError("lambda2 must be nonnegative")
    phi = phi if isinstance(phi, MeasurementMatrix) else MeasurementMatrix.from_array(phi)
    n = phi.cols
    terms = [(1.0, AnalysisOperator.identity(n)), (float(lambda2), AnalysisOperator.dft(n))]
    return solve_multi_l1(RecoveryProblem(y, phi, terms, eps), config)


def solve_ls_baseline(y, phi):
    """Minimum-L2-norm solution of y = Phi x, i.e. Phi^T (Phi Phi^T)^-1 y.

    The report's ``objective`` is ||x_hat||_2.
    """
    t0 = time.perf_counter()
    a = phi.entries if isinstance(phi, MeasurementMatrix) else np.asarray(phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.shape != (a.shape[0],):
        raise DimensionError(f"y has shape {y.shape}, Phi has {a.shape[0]} rows")
    gram = a @ a.T
    if np.linalg.cond(gram) > 1e12:
        raise IllConditionedError("Phi Phi^T is ill-conditioned (cond > 1e12)")
    x = a.T @ scipy.linalg.solve(gram, y, assume_a="pos")
    return SolveReport(
        x_hat=Signal(x),
        objective=float(np.linalg.norm(x)),
        residual=float(np.linalg.norm(y - a @ x)),
        iterations=1,
        converged=True,
        wall_time=time.perf_counter() - t0,
    )


class _EllipsoidProjector:
    """Exact Euclidean projection onto {c : ||S c[:r] - b||_2 <= eps}.

    In the right singular basis of Phi (x = V c) the feasible set only
    constrains the first r = rank(Phi) coordinates. The multiplier solves the
    secular equation 1/||res(mu)|| = 1/eps by Newton, warm-started from the
    previous call.
    """

    def __init__(self, s, b, eps):
        self.s = s
        self.s2 = s ** 2
        self.b = b
        self.eps = eps
        self.mu = 0.0

    def __call__(self, c):
        r = self.s.size
        a = c[:r]
        d = self.s * a - self.b
        if np.sqrt(d @ d) <= self.eps:
            return c
        out = c.copy()
        if self.eps == 0.0:
            out[:r] = self.b / self.s
            return out
        mu = self.mu
        d2 = d * d
        for _ in range(100):
            w = 1.0 / (1.0 + mu * self.s2)
            t = d2 * (w * w)
            rn = math.sqrt(t.sum())
            if abs(rn - self.eps) <= 1e-12 * self.eps:
                break
            # Newton on phi(mu) = 1/rn - 1/eps, phi'(mu) = sum(d^2 s^2 / q^3) / rn^3
            # with q = 1 + mu s^2 = 1/w
            dphi = (t * self.s2) @ w / rn ** 3
            mu_next = max(mu - (1.0 / rn - 1.0 / self.eps) / dphi, 0.1 * mu)
            # rounding can stall the residual test; a negligible step ends it too
            if abs(mu_next - mu) <= 1e-12 * mu_next:
                mu = mu_next
                break
            mu = mu_next
        self.mu = mu
        out[:r] = (a + mu * self.s * self.b) / (1.0 + mu * self.s2)
        return out


def oracle_subgradient(problem, iterations=100_000, step_schedule=None):
    """Projected-subgradient reference solver for the same objective.

    Independent of the ADMM path: operators are applied as dense matrices
    and each iterate is projected exactly (Euclidean) onto the feasible
    set. Returns the best iterate seen. ``step_schedule(k)`` gives the
    length of step k (k >= 1) along the normalized subgradient; the default
    is 0.1*D/sqrt(k) with D the norm of the minimum-norm feasible start.
    """
    t0 = time.perf_counter()
    y = problem.y
    phi = problem.phi.entries
    eps = problem.epsilon
    n = problem.n
    if np.linalg.norm(y) <= eps:
        return _report(problem, np.zeros(n), 0, True, t0)

    u, s, vt = np.linalg.svd(phi, full_matrices=True)
    rank = int(np.sum(s > s[0] * 1e-12))
    s = s[:rank]
    b = u[:, :rank].T @ y
    v = vt.T
    project = _EllipsoidProjector(s, b, eps)

    stacked = np.vstack([lam * psi.to_dense() for lam, psi in problem.terms if lam > 0])
    # everything below runs in singular-basis coordinates c, x = V c
    op = stacked @ v
    op_h = op.conj().T

    c = np.zeros(n)
    c[:rank] = b / s
    c = project(c)
    if step_schedule is None:
        scale = 0.1 * max(np.linalg.norm(c), 1e-12)

        def step_schedule(k):
            return scale / math.sqrt(k)

    best_c, best_obj = c, math.inf
    for k in range(1, int(iterations) + 1):
        theta = op @ c
        mag = np.abs(theta)
        obj = mag.sum()
        if obj < best_obj:
            best_c, best_obj = c, obj
        # subgradient of sum |theta_i|: theta/|theta|, zero where theta vanishes
        safe = np.where(mag > 0, mag, 1.0)
        g = (op_h @ (theta / safe * (mag > 0))).real
        gn = math.sqrt(g @ g)
        if gn == 0.0:
            break
        c = project(c - (step_schedule(k) / gn) * g)
    obj = np.abs(op @ c).sum()
    if obj < best_obj:
        best_c = c
    return _report(problem, v @ best_c, iterations, True, t0)


def kkt_feasibility_check(report, problem):
    """Residual slack eps - ||y - Phi x_hat||_2; flags slack < -eps*1e-6.

    A floor of 1e-9 * ||y||_2 is added to the threshold so eps = 0 problems
    solved to rounding accuracy are not flagged.
    """
    x = report.x_hat.samples
    residual = float(np.linalg.norm(problem.y - problem.phi.entries @ x))
    slack = problem.epsilon - residual
    tol = _feasibility_slack_tol(problem.epsilon, np.linalg.norm(problem.y))
    return FeasibilityDiagnostic(
        slack=slack,
        residual=residual,
        objective=multi_l1_objective(problem, x),
        violation=slack < -tol,
    )
