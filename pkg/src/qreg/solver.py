"""
Weighted quantile regression solver.

Minimizes sum_t w_t rho_tau(y_t - Z_t' theta) through the dual linear
program

    min  -y'a   s.t.  X'a = (1 - tau) X'1,  0 <= a <= 1

(with X and y scaled row-wise by w) using a Frisch-Newton primal-dual
interior point method with Mehrotra predictor-corrector steps. The
coefficients are minus the equality multipliers. The interior point
iterate is then polished onto a nearby basic solution (one interpolating
p+1 observations) when that does not increase the loss, and every
returned solution passes a subgradient optimality certificate.

If the interior point method stalls, a Huberized smoothing homotopy
replaces it before polishing.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import linalg, optimize

from common.errors import (
    CertificateError,
    InvalidInputError,
    NoConvergenceError,
    RankDeficientError,
)
from common.metrics import record_solve_metrics
from common.models import SolverOptions
from qreg.design import LaggedDesign
from qreg.loss import pinball, psi

logger = logging.getLogger(__name__)

_NO_BOUND = 1e20


@dataclass
class QrSolution:
    """Result of one weighted quantile regression solve."""
    tau: float
    theta_hat: np.ndarray
    objective: float
    subgradient_norm_certificate: float
    certificate_margin: float
    active_count: int
    iterations: int
    # interior point reached its duality-gap tolerance
    converged: bool
    used_fallback: bool = False
    polished: bool = False


@dataclass
class Certificate:
    """Subgradient optimality check at a candidate solution."""
    ok: bool
    subgradient: np.ndarray
    bound: np.ndarray
    active_count: int

    @property
    def margin(self) -> float:
        """min_j (bound_j - |s_j|); non-negative when the certificate holds."""
        return float(np.min(self.bound - np.abs(self.subgradient)))

    @property
    def violation(self) -> float:
        return max(0.0, -self.margin)


# ============================================================================
# Checks
# ============================================================================

def check_rank(matrix: np.ndarray, tol: float) -> None:
    """
    Pivoted QR rank check.

    Raises:
        RankDeficientError: Naming the columns dropped by the pivoting
    """
    k = matrix.shape[1]
    if matrix.shape[0] == 0:
        raise RankDeficientError(list(range(k)), 0)
    r, piv = linalg.qr(matrix, mode="r", pivoting=True)
    diag = np.abs(np.diag(r))
    rank = int(np.sum(diag > tol * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank < k:
        raise RankDeficientError(sorted(int(j) for j in piv[rank:]), rank)


def subgradient_certificate(
    design: LaggedDesign,
    weights: np.ndarray,
    tau: float,
    theta: np.ndarray,
    opts: SolverOptions,
) -> Certificate:
    """
    With A = {t : |r_t| <= zero_tol_t} and s = sum_{t not in A} w_t Z_t psi(r_t),
    require |s_j| <= sum_{t in A} w_t |Z_tj| max(tau, 1 - tau) + slack * scale_j
    where scale_j = sum_t w_t |Z_tj|.
    """
    r = design.responses - design.rows @ theta
    zero_tol = opts.zero_tol_factor * (1.0 + np.abs(design.responses))
    active = np.abs(r) <= zero_tol
    weighted_abs = weights[:, None] * np.abs(design.rows)

    s = design.rows[~active].T @ (weights[~active] * psi(tau, r[~active]))
    bound = (
        weighted_abs[active].sum(axis=0) * max(tau, 1.0 - tau)
        + opts.certificate_slack * weighted_abs.sum(axis=0)
    )
    ok = bool(np.all(np.abs(s) <= bound))
    return Certificate(ok=ok, subgradient=s, bound=bound, active_count=int(active.sum()))


# ============================================================================
# Interior point
# ============================================================================

def _step_bound(v: np.ndarray, dv: np.ndarray) -> float:
    neg = dv < 0
    if not np.any(neg):
        return _NO_BOUND
    return float(np.min(-v[neg] / dv[neg]))


def _solve_normal(q_matrix: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    try:
        return linalg.solve(q_matrix, rhs, assume_a="pos")
    except (linalg.LinAlgError, ValueError):
        return linalg.lstsq(q_matrix, rhs)[0]


def frisch_newton(
    X: np.ndarray,
    yv: np.ndarray,
    tau: float,
    opts: SolverOptions,
    theta_start: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, int, bool, List[float]]:
    """
    Interior point solve of the (already weighted) problem.

    Returns:
        (theta, iterations, converged, gap trace)
    """
    m = X.shape[0]
    A = X.T
    c = -yv
    x = np.full(m, 1.0 - tau)
    s = 1.0 - x
    b = A @ x

    if theta_start is None:
        y_dual = linalg.lstsq(X, c)[0]
    else:
        y_dual = -np.asarray(theta_start, dtype=float)

    r = c - X @ y_dual
    z = np.maximum(r, 0.0)
    w = np.maximum(-r, 0.0)
    # keep the start strictly interior where residuals vanish
    delta = 1e-3 * max(1.0, float(np.mean(np.abs(c))))
    flat = np.abs(r) < delta
    z[flat] += delta
    w[flat] += delta

    beta = opts.step_damping
    gap = float(c @ x - y_dual @ b + w.sum())
    trace = [gap]
    converged = False
    iterations = 0

    while iterations < opts.max_iter:
        if gap <= opts.gap_tol * (1.0 + abs(float(c @ x))):
            converged = True
            break
        iterations += 1

        q = 1.0 / (z / x + w / s)
        r = z - w
        q_matrix = (A * q) @ X
        rhs = A @ (q * r)
        dy = _solve_normal(q_matrix, rhs)
        dx = q * (X @ dy - r)
        ds = -dx
        dz = -z * (dx / x + 1.0)
        dw = -w * (ds / s + 1.0)

        fp = min(beta * min(_step_bound(x, dx), _step_bound(s, ds)), 1.0)
        fd = min(beta * min(_step_bound(w, dw), _step_bound(z, dz)), 1.0)

        if min(fp, fd) < 1.0:
            # Mehrotra corrector
            mu = float(z @ x + w @ s)
            g = float((z + fd * dz) @ (x + fp * dx) + (w + fd * dw) @ (s + fp * ds))
            mu = mu * (g / mu) ** 3 / (2.0 * m)
            dxdz = dx * dz
            dsdw = ds * dw
            xinv = 1.0 / x
            sinv = 1.0 / s
            xi = mu * (xinv - sinv)
            rhs = rhs + A @ (q * (dxdz - dsdw - xi))
            dy = _solve_normal(q_matrix, rhs)
            dx = q * (X @ dy + xi - r - dxdz + dsdw)
            ds = -dx
            dz = mu * xinv - z - xinv * z * dx - dxdz
            dw = mu * sinv - w - sinv * w * ds - dsdw
            fp = min(beta * min(_step_bound(x, dx), _step_bound(s, ds)), 1.0)
            fd = min(beta * min(_step_bound(w, dw), _step_bound(z, dz)), 1.0)

        x = x + fp * dx
        s = s + fp * ds
        y_dual = y_dual + fd * dy
        w = w + fd * dw
        z = z + fd * dz
        gap = float(c @ x - y_dual @ b + w.sum())
        trace.append(gap)
        if not np.isfinite(gap):
            break

    return -y_dual, iterations, converged, trace


# ============================================================================
# Smoothing fallback and polish
# ============================================================================

def _smoothed_loss(X, yv, tau, h):
    def fun(theta):
        r = yv - X @ theta
        inside = np.abs(r) < h
        value = np.where(inside, r * r / (4 * h) + (tau - 0.5) * r + h / 4, pinball(tau, r))
        slope = np.where(inside, r / (2 * h) + tau - 0.5, psi(tau, r))
        return float(value.sum()), -(X.T @ slope)
    return fun


def smoothing_homotopy(X, yv, tau, opts: SolverOptions, theta_start) -> np.ndarray:
    """Minimize Huberized losses over shrinking half-widths, warm-started."""
    scale = max(1.0, float(np.median(np.abs(yv))))
    theta = np.asarray(theta_start, dtype=float)
    for h in opts.homotopy_widths:
        result = optimize.minimize(
            _smoothed_loss(X, yv, tau, h * scale), theta, jac=True, method="BFGS",
            options={"gtol": 1e-12 * scale, "maxiter": 500},
        )
        theta = result.x
        logger.debug(f"homotopy h={h:g}: loss={result.fun:.6g} ({result.nit} iterations)")
    return theta


def polish_to_basic(X, yv, tau, theta, rank_tol) -> Optional[np.ndarray]:
    """
    Interpolate through the k rows with the smallest |residual| that keep
    full rank; None if no such subset exists.
    """
    k = X.shape[1]
    order = np.argsort(np.abs(yv - X @ theta), kind="stable")
    chosen: List[int] = []
    for idx in order:
        trial = chosen + [int(idx)]
        if np.linalg.matrix_rank(X[trial], tol=rank_tol * max(1.0, np.abs(X[trial]).max())) == len(trial):
            chosen = trial
            if len(chosen) == k:
                break
    if len(chosen) < k:
        return None
    try:
        return linalg.solve(X[chosen], yv[chosen])
    except linalg.LinAlgError:
        return None


# ============================================================================
# Entry point
# ============================================================================

def _validate_inputs(design: LaggedDesign, weights, tau: float) -> np.ndarray:
    if not 0.0 < tau < 1.0:
        raise InvalidInputError(f"tau must lie in (0, 1), got {tau}")
    weights = np.asarray(weights, dtype=float)
    if weights.shape != (design.row_count,):
        raise InvalidInputError(f"expected {design.row_count} weights, got shape {weights.shape}")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise InvalidInputError("weights must be finite and strictly positive")
    return weights


def solve_wqr(
    design: LaggedDesign,
    weights,
    tau: float,
    opts: Optional[SolverOptions] = None,
    theta_start: Optional[np.ndarray] = None,
) -> QrSolution:
    """
    Minimize (n - p)^-1 sum_t w_t rho_tau(y_t - Z_{t-1}' theta).

    Args:
        design: Lagged design
        weights: Positive weight per row
        tau: Quantile level in (0, 1)
        opts: Solver options (defaults from config)
        theta_start: Warm start for the interior point method

    Returns:
        QrSolution that passed the subgradient certificate

    Raises:
        InvalidInputError: Bad tau or weights
        RankDeficientError: Weighted design without full column rank
        NoConvergenceError: Neither the interior point nor the fallback certified
    """
    opts = opts or SolverOptions()
    weights = _validate_inputs(design, weights, tau)
    X = weights[:, None] * design.rows
    yv = weights * design.responses
    check_rank(X, opts.rank_tol)

    def loss(theta):
        return float(np.sum(pinball(tau, yv - X @ theta)))

    def finish(theta) -> Tuple[np.ndarray, bool, Certificate]:
        polished = False
        if opts.polish and np.all(np.isfinite(theta)):
            basic = polish_to_basic(X, yv, tau, theta, opts.rank_tol)
            if basic is not None:
                base_loss = loss(theta)
                if loss(basic) <= base_loss + 1e-12 * (1.0 + abs(base_loss)):
                    theta, polished = basic, True
        return theta, polished, subgradient_certificate(design, weights, tau, theta, opts)

    theta, iterations, converged, trace = frisch_newton(X, yv, tau, opts, theta_start)
    used_fallback = False
    theta, polished, cert = finish(theta)

    if not cert.ok:
        if not opts.use_fallback:
            if converged:
                raise CertificateError(cert.violation)
            raise NoConvergenceError(
                f"interior point stopped after {iterations} iterations (tau={tau})",
                best_iterate=theta, trace=trace,
            )
        logger.warning(
            f"interior point {'certificate failed' if converged else 'stalled'} at tau={tau:.4g}; "
            f"running smoothing homotopy"
        )
        used_fallback = True
        start = theta if np.all(np.isfinite(theta)) else linalg.lstsq(X, yv)[0]
        theta, polished, cert = finish(smoothing_homotopy(X, yv, tau, opts, start))
        if not cert.ok:
            raise NoConvergenceError(
                f"no certified solution at tau={tau} (violation {cert.violation:.3g})",
                best_iterate=theta, trace=trace,
            )

    record_solve_metrics(iterations, used_fallback, polished)
    return QrSolution(
        tau=float(tau),
        theta_hat=np.asarray(theta, dtype=float),
        objective=loss(theta) / design.row_count,
        subgradient_norm_certificate=float(np.max(np.abs(cert.subgradient))),
        certificate_margin=cert.margin,
        active_count=cert.active_count,
        iterations=iterations,
        converged=converged,
        used_fallback=used_fallback,
        polished=polished,
    )
