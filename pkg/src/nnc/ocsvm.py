"""Linear nu-one-class SVM trained by pairwise (SMO-style) dual updates.

The dual solved per cluster is

    min_a  1/2 a' Q a,   Q_ij = <x_i, x_j>
    s.t.   0 <= a_i <= 1/(nu * n),  sum(a) = 1.

The linear kernel collapses to an explicit weight vector w = sum a_i x_i,
so scoring one sample is a single dot product: decision(x) = <w, x> - rho.
Positive decisions lie inside the narrowed cluster. nu upper-bounds the
fraction of training samples left outside and lower-bounds the support
vector fraction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

DEFAULT_NU = 0.01
DEFAULT_TOL = 1e-4
DEFAULT_MAX_ITER = 100_000

_BRUTE_FORCE_MAX_N = 20


class ConvergenceError(RuntimeError):
    """The dual solver hit its update budget before reaching tolerance."""


@dataclass
class OneClassSvmModel:
    nu: float
    rho: float
    w: np.ndarray  # (m,) float32
    n_train: int
    alphas: np.ndarray | None = None  # (n,) float64; dropped on deserialization
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.w.shape[0]


def _effective_nu(nu: float, n: int) -> float:
    if not 0.0 < nu <= 1.0:
        raise ValueError(f"nu must be in (0, 1], got {nu}")
    if nu * n < 1.0:
        warnings.warn(
            f"nu*n = {nu * n:.3g} < 1; clamping nu to 1/n = {1.0 / n:.3g}",
            stacklevel=3,
        )
        return 1.0 / n
    return nu


def _initial_alphas(n: int, upper: float) -> np.ndarray:
    """Feasible start: leading coordinates at the box bound, remainder next."""
    alphas = np.zeros(n)
    n_full = min(int(1.0 / upper), n)
    alphas[:n_full] = upper
    if n_full < n:
        alphas[n_full] = max(0.0, 1.0 - n_full * upper)
    return alphas


def _finish_model(X: np.ndarray, alphas: np.ndarray, grad: np.ndarray,
                  upper: float, nu: float, tol: float) -> OneClassSvmModel:
    """Offset from free support vectors, midpoint of KKT bounds as fallback."""
    free = (alphas > 0.0) & (alphas < upper)
    if free.any():
        rho = float(grad[free].mean())
    else:
        at_upper = alphas >= upper
        at_zero = alphas <= 0.0
        lb = grad[at_upper].max() if at_upper.any() else -np.inf
        ub = grad[at_zero].min() if at_zero.any() else np.inf
        if np.isfinite(lb) and np.isfinite(ub):
            rho = float((lb + ub) / 2.0)
        elif np.isfinite(lb):
            rho = float(lb)
        else:
            rho = float(ub)
    w = X.T @ alphas
    return OneClassSvmModel(
        nu=nu,
        rho=np.float32(rho),
        w=w.astype(np.float32),
        n_train=X.shape[0],
        alphas=alphas,
        tol=tol,
    )


def train_ocsvm(X: np.ndarray, nu: float = DEFAULT_NU, tol: float = DEFAULT_TOL,
                max_iter: int = DEFAULT_MAX_ITER) -> OneClassSvmModel:
    """Solve the dual by repeatedly optimizing the maximal-violation pair.

    Each update moves mass between the pair (i, j) with the largest KKT gap
    while keeping the simplex and box constraints exactly feasible; the
    gradient is maintained incrementally from cached kernel columns.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("training set must be a 2-D array with n >= 2 rows")
    if not np.all(np.isfinite(X)):
        raise ValueError("training features must be finite")
    n = X.shape[0]
    nu_eff = _effective_nu(nu, n)
    upper = 1.0 / (nu_eff * n)

    q_dtype = np.float64 if n <= 4000 else np.float32
    Q = (X @ X.T).astype(q_dtype, copy=False)
    alphas = _initial_alphas(n, upper)
    grad = Q.astype(np.float64, copy=False) @ alphas

    converged = False
    for _ in range(max_iter):
        up_vals = np.where(alphas < upper, grad, np.inf)
        down_vals = np.where(alphas > 0.0, grad, -np.inf)
        i = int(np.argmin(up_vals))
        j = int(np.argmax(down_vals))
        gap = down_vals[j] - up_vals[i]
        if not np.isfinite(gap) or gap <= tol:
            converged = True
            break
        eta = float(Q[i, i]) + float(Q[j, j]) - 2.0 * float(Q[i, j])
        step = gap / eta if eta > 1e-15 else np.inf
        pair_sum = alphas[i] + alphas[j]
        new_i = np.clip(alphas[i] + step,
                        max(0.0, pair_sum - upper), min(upper, pair_sum))
        delta = new_i - alphas[i]
        alphas[i] = new_i
        alphas[j] = pair_sum - new_i
        grad += delta * (Q[i] - Q[j])
    if not converged:
        raise ConvergenceError(
            f"one-class SVM did not reach tol={tol} within {max_iter} pair updates")
    return _finish_model(X, alphas, grad, upper, nu_eff, tol)


def decision(model: OneClassSvmModel, x: np.ndarray) -> float | np.ndarray:
    """Signed distance score <w, x> - rho; rows of a 2-D input score batchwise."""
    x = np.asarray(x)
    if x.shape[-1] != model.dim:
        raise ValueError(f"expected {model.dim}-dim input, got {x.shape[-1]}")
    scores = x @ model.w.astype(np.float64) - float(model.rho)
    return float(scores) if scores.ndim == 0 else scores


def dual_objective(X: np.ndarray, alphas: np.ndarray) -> float:
    """0.5 * a' Q a evaluated through the weight vector."""
    w = X.T.astype(np.float64) @ alphas
    return 0.5 * float(w @ w)


def _project_capped_simplex(v: np.ndarray, upper: float) -> np.ndarray:
    """Euclidean projection onto {0 <= a <= upper, sum(a) = 1}.

    The shifted-clip mass sum(clip(v - tau, 0, upper)) is piecewise linear
    and non-increasing in tau, so the exact shift comes from interpolating
    between the two breakpoints bracketing mass 1.
    """
    pts = np.unique(np.concatenate([v, v - upper]))
    mass = np.clip(v[None, :] - pts[:, None], 0.0, upper).sum(axis=1)
    # mass descends along pts; locate the bracket [idx, idx + 1] around 1.
    idx = int(np.searchsorted(-mass, -1.0, side="right")) - 1
    idx = min(max(idx, 0), len(pts) - 2) if len(pts) > 1 else 0
    if len(pts) == 1 or mass[idx] == mass[idx + 1]:
        tau = pts[idx]
    else:
        frac = (mass[idx] - 1.0) / (mass[idx] - mass[idx + 1])
        tau = pts[idx] + frac * (pts[idx + 1] - pts[idx])
    return np.clip(v - tau, 0.0, upper)


def brute_force_qp(X: np.ndarray, nu: float, tol: float = 1e-8,
                   max_iter: int = 500_000) -> OneClassSvmModel:
    """Accelerated projected-gradient reference solver (test oracle)."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n > _BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute-force oracle capped at n <= {_BRUTE_FORCE_MAX_N}")
    if n < 2:
        raise ValueError("training set must have n >= 2 rows")
    nu_eff = _effective_nu(nu, n)
    upper = 1.0 / (nu_eff * n)
    Q = X @ X.T
    lipschitz = max(float(np.linalg.eigvalsh(Q)[-1]), 1e-12)
    alphas = _project_capped_simplex(_initial_alphas(n, upper), upper)
    momentum = alphas.copy()
    t_acc = 1.0
    for it in range(max_iter):
        new = _project_capped_simplex(momentum - (Q @ momentum) / lipschitz, upper)
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc))
        momentum = new + ((t_acc - 1.0) / t_next) * (new - alphas)
        alphas, t_acc = new, t_next
        if it % 16 == 0:
            grad = Q @ alphas
            gap = (np.max(np.where(alphas > 0.0, grad, -np.inf))
                   - np.min(np.where(alphas < upper, grad, np.inf)))
            if gap <= tol:
                break
    else:
        raise ConvergenceError(f"projected gradient did not reach tol={tol}")
    grad = Q @ alphas
    return _finish_model(X, alphas, grad, upper, nu_eff, tol)


def nu_property_report(model: OneClassSvmModel, X: np.ndarray) -> tuple[float, float]:
    """(training-outlier fraction, support-vector fraction) for a trained model.

    Outliers are counted below a -2*tol band so free support vectors sitting
    numerically on the boundary are not miscounted.
    """
    if model.alphas is None:
        raise ValueError("model carries no dual weights (loaded from file?)")
    w = X.T.astype(np.float64) @ model.alphas
    scores = X @ w - float(model.rho)
    outlier_fraction = float(np.mean(scores < -2.0 * model.tol))
    sv_fraction = float(np.mean(model.alphas > 0.0))
    return outlier_fraction, sv_fraction
