"""Logit model and elastic-net penalized logit.

The plain logit is fitted by Newton-Raphson (IRLS) with step halving.  The
elastic net minimizes

    mean negative log-likelihood + lam * (alpha * |b|_1 + (1 - alpha) * |b|_2^2 / 2)

by cyclic coordinate descent on the weighted least squares approximation of
the likelihood, with soft-thresholding.  The intercept is never penalized.
"""
from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .dataset import NUMERIC_LEVEL, DesignMatrix

log = logging.getLogger(__name__)


class FitError(RuntimeError):
    pass


class SeparationWarning(UserWarning):
    pass


def sigmoid(eta):
    """exp(eta) / (1 + exp(eta)) without overflow."""
    eta = np.asarray(eta, dtype=np.float64)
    out = np.empty_like(eta)
    pos = eta >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-eta[pos]))
    e = np.exp(eta[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def logit(p):
    p = np.asarray(p, dtype=np.float64)
    return np.log(p) - np.log1p(-p)


@dataclass
class LinearFit:
    intercept: float
    coef: np.ndarray
    provenance: tuple[tuple[str, str], ...]
    lam: float = 0.0
    alpha: float = 1.0
    coding: str = "reference"
    center: np.ndarray | None = None
    scale: np.ndarray | None = None
    iterations: int = 0
    objective: float = float("nan")
    converged: bool = True
    separated: bool = False
    trace: list[float] = field(default_factory=list, repr=False)

    @property
    def standardized(self) -> bool:
        return self.center is not None

    def linear_predictor(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coef

    def raw_scale(self) -> tuple[float, np.ndarray]:
        """Intercept and coefficients on the de-standardized covariate scale."""
        if not self.standardized:
            return self.intercept, self.coef.copy()
        b = self.coef / self.scale
        return self.intercept - float(b @ self.center), b


def predict_proba(fit: LinearFit, design: DesignMatrix) -> np.ndarray:
    X = design.values
    if X.shape[1] != len(fit.coef):
        raise FitError(f"design has {X.shape[1]} columns, fit expects {len(fit.coef)}")
    return sigmoid(fit.linear_predictor(X))


def _nll(eta, y):
    # sum of log(1 + exp(eta)) - y * eta
    return float(np.sum(np.logaddexp(0.0, eta) - y * eta))


def log_likelihood(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> float:
    """Bernoulli log-likelihood; ``beta[0]`` is the intercept."""
    return -_nll(beta[0] + X @ beta[1:], y)


def log_likelihood_gradient(beta: np.ndarray, X: np.ndarray, y: np.ndarray) -> np.ndarray:
    p = sigmoid(beta[0] + X @ beta[1:])
    r = y - p
    return np.concatenate([[r.sum()], X.T @ r])


def reference_columns(provenance) -> np.ndarray:
    """Mask of columns kept under reference coding (first level dropped)."""
    keep = np.ones(len(provenance), dtype=bool)
    seen = set()
    for j, (feat, level) in enumerate(provenance):
        if level != NUMERIC_LEVEL and feat not in seen:
            keep[j] = False
            seen.add(feat)
    return keep


def fit_logit(design: DesignMatrix, labels, max_iter: int = 100, tol: float = 1e-10) -> LinearFit:
    """Unpenalized maximum likelihood logit fit.

    Categorical blocks are reference coded internally: the first level's
    dummy gets coefficient 0.  Columns are rescaled internally for numerical
    stability; returned coefficients refer to the columns of ``design``.
    Perfect or quasi separation is flagged with ``separated=True`` and a
    :class:`SeparationWarning`.
    """
    y = np.asarray(labels, dtype=np.float64)
    if y.min() == y.max():
        raise FitError("logit fit needs both classes")
    keep = reference_columns(design.provenance)
    X = design.values[:, keep]
    m = X.mean(axis=0)
    s = X.std(axis=0)
    s = np.where(s > 0, s, 1.0)
    A = np.column_stack([np.ones(len(y)), (X - m) / s])

    beta = np.zeros(A.shape[1])
    ybar = y.mean()
    beta[0] = np.log(ybar) - np.log1p(-ybar)
    obj = _nll(A @ beta, y)
    trace = [obj]
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        p = sigmoid(A @ beta)
        grad = A.T @ (y - p)
        H = (A * (p * (1 - p))[:, None]).T @ A
        step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        for _ in range(60):
            cand = beta + t * step
            new_obj = _nll(A @ cand, y)
            if new_obj <= obj:
                break
            t *= 0.5
        else:
            converged = True
            break
        rel = abs(obj - new_obj) / max(abs(new_obj), 1e-300)
        beta, obj = cand, new_obj
        trace.append(obj)
        if rel < tol:
            converged = True
            break

    coef = np.zeros(design.values.shape[1])
    bs = beta[1:] / s
    coef[keep] = bs
    intercept = float(beta[0] - bs @ m)
    eta = A @ beta
    separated = bool(np.max(np.abs(beta[1:]), initial=0.0) > 30 or obj < 1e-6 * len(y)
                     or (eta[y == 1].min() > eta[y == 0].max()))
    if separated:
        warnings.warn("logit fit shows (quasi) complete separation; coefficients diverge",
                      SeparationWarning, stacklevel=2)
    return LinearFit(intercept, coef, design.provenance, coding="reference",
                     center=None if not design.standardized else design.center,
                     scale=None if not design.standardized else design.scale,
                     iterations=it, objective=obj, converged=converged,
                     separated=separated, trace=trace)


def penalty_value(beta, alpha: float, squared: bool = True) -> float:
    """alpha * |b|_1 + (1 - alpha) * |b|_2^2 / 2 (intercept excluded).

    ``squared=False`` uses the unsquared norm |b|_2 / 2 instead.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    b = np.asarray(beta, dtype=np.float64)
    l2 = float(b @ b) if squared else float(np.sqrt(b @ b))
    return alpha * float(np.abs(b).sum()) + (1 - alpha) * l2 / 2


def elastic_net_objective(intercept: float, coef: np.ndarray, X: np.ndarray, y: np.ndarray,
                          lam: float, alpha: float) -> float:
    eta = intercept + X @ coef
    return _nll(eta, y) / len(y) + lam * penalty_value(coef, alpha)


def _soft(z: float, g: float) -> float:
    if z > g:
        return z - g
    if z < -g:
        return z + g
    return 0.0


def fit_elastic_net(design: DesignMatrix, labels, lam: float, alpha: float,
                    tol: float = 1e-8, max_outer: int = 200, max_inner: int = 10000,
                    start: LinearFit | None = None) -> LinearFit:
    """Elastic-net logit by IRLS + cyclic coordinate descent.

    Parameters
    ----------
    design : DesignMatrix
        Standardized full one-hot design.
    lam : float
        Overall penalty weight, > 0.
    alpha : float
        L1 share of the penalty, in [0, 1].
    tol : float
        Convergence threshold on the largest coefficient change.
    start : LinearFit, optional
        Warm start (e.g. the previous point of a lambda path).
    """
    if not design.standardized:
        raise FitError("elastic net needs a standardized design")
    if lam <= 0:
        raise FitError(f"lambda must be > 0, got {lam}")
    if not 0.0 <= alpha <= 1.0:
        raise FitError(f"alpha must lie in [0, 1], got {alpha}")
    y = np.asarray(labels, dtype=np.float64)
    if y.min() == y.max():
        raise FitError("elastic net fit needs both classes")
    X = np.asfortranarray(design.values)
    n, q = X.shape
    l1 = lam * alpha
    l2 = lam * (1 - alpha)

    if start is not None:
        b0, b = float(start.intercept), start.coef.astype(np.float64).copy()
    else:
        ybar = y.mean()
        b0, b = float(np.log(ybar) - np.log1p(-ybar)), np.zeros(q)
    obj = elastic_net_objective(b0, b, X, y, lam, alpha)
    trace = [obj]
    converged = False
    outer = 0
    for outer in range(1, max_outer + 1):
        eta = b0 + X @ b
        p = sigmoid(eta)
        w = np.maximum(p * (1 - p), 1e-5)
        z = eta + (y - p) / w
        r = z - eta
        WX = np.asfortranarray(X * w[:, None])
        a = (WX * X).sum(axis=0) / n
        sw = w.sum()
        nb0, nb = b0, b.copy()
        for _ in range(max_inner):
            delta = 0.0
            for j in range(q):
                old = nb[j]
                g = WX[:, j] @ r / n + a[j] * old
                new = _soft(g, l1) / (a[j] + l2) if a[j] + l2 > 0 else 0.0
                if new != old:
                    r -= X[:, j] * (new - old)
                    delta = max(delta, abs(new - old))
                    nb[j] = new
            d0 = (w @ r) / sw
            if d0 != 0.0:
                nb0 += d0
                r -= d0
                delta = max(delta, abs(d0))
            if delta < tol * 0.1:
                break
        # the quadratic model may overshoot; backtrack on the true objective
        new_obj = elastic_net_objective(nb0, nb, X, y, lam, alpha)
        t = 1.0
        while new_obj > obj + 1e-15 * abs(obj) and t > 1e-8:
            t *= 0.5
            cb0, cb = b0 + t * (nb0 - b0), b + t * (nb - b)
            new_obj = elastic_net_objective(cb0, cb, X, y, lam, alpha)
            nb0, nb = cb0, cb
        change = max(abs(nb0 - b0), float(np.max(np.abs(nb - b), initial=0.0)))
        b0, b, obj = nb0, nb, new_obj
        trace.append(obj)
        if change < tol:
            converged = True
            break
    if not converged:
        log.warning("elastic net did not converge in %d outer iterations; last objectives %s",
                    max_outer, trace[-3:])
    return LinearFit(float(b0), b, design.provenance, lam=lam, alpha=alpha, coding="full",
                     center=design.center, scale=design.scale, iterations=outer,
                     objective=obj, converged=converged, trace=trace)


def kkt_violation(fit: LinearFit, design: DesignMatrix, labels) -> float:
    """Largest violation of the elastic-net subgradient optimality conditions."""
    y = np.asarray(labels, dtype=np.float64)
    X = design.values
    p = sigmoid(fit.linear_predictor(X))
    grad = X.T @ (p - y) / len(y)
    l1 = fit.lam * fit.alpha
    l2 = fit.lam * (1 - fit.alpha)
    b = fit.coef
    zero = b == 0
    viol = np.where(zero, np.maximum(np.abs(grad) - l1, 0.0),
                    np.abs(grad + l1 * np.sign(b) + l2 * b))
    return float(max(np.max(viol, initial=0.0), abs(np.mean(p - y))))


def lambda_max(design: DesignMatrix, labels, alpha: float) -> float:
    """Smallest lambda at which every penalized coefficient is zero (alpha > 0)."""
    y = np.asarray(labels, dtype=np.float64)
    g = np.abs(design.values.T @ (y - y.mean())) / len(y)
    return float(g.max() / max(alpha, 1e-3))
