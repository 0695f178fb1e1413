"""Dense matrix kernels: norms, thin SVD, rank-k truncation, pseudo-inverse."""

from dataclasses import dataclass

import numpy as np

from . import rng as _rng
from .errors import ConvergenceError, ParameterError

# sigma_i <= SINGULAR_VALUE_CUTOFF * sigma_max counts as zero everywhere.
SINGULAR_VALUE_CUTOFF = 1e-12


def as_matrix(values) -> np.ndarray:
    """Validate and return a dense 2-D float64 array (finite, nonempty)."""
    a = np.asarray(values, dtype=np.float64)
    if a.ndim != 2:
        raise ParameterError(f"expected a 2-D matrix, got ndim={a.ndim}")
    if a.size == 0:
        raise ParameterError("matrix must have at least one row and one column")
    if not np.isfinite(a).all():
        raise ParameterError("matrix entries must be finite (no NaN or Inf)")
    return np.ascontiguousarray(a)


def frobenius_norm(a) -> float:
    """Square root of the sum of squared entries."""
    return float(np.linalg.norm(as_matrix(a)))


def spectral_norm(a, tol: float = 1e-10, max_iter: int = 1000) -> float:
    """Largest singular value, by power iteration on the Gram matrix.

    The start vector comes from a fixed internal stream, so repeated calls
    on the same input return bit-identical values.  Raises ConvergenceError
    (carrying the last Rayleigh-quotient estimate) if the relative change
    is still above tol after max_iter iterations.
    """
    a = as_matrix(a)
    if tol <= 0:
        raise ParameterError("tol must be positive")
    if max_iter < 1:
        raise ParameterError("max_iter must be at least 1")
    v = _rng.stream(0, _rng.POWER_ITERATION).standard_normal(a.shape[1])
    v /= np.linalg.norm(v)
    prev = None
    est = 0.0
    for _ in range(max_iter):
        u = a @ v
        est = float(np.sqrt(u @ u))  # Rayleigh quotient of a.T a at unit v
        if est == 0.0:
            return 0.0
        w = a.T @ u
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return est
        v = w / nw
        if prev is not None and abs(est - prev) <= tol * max(est, 1e-300):
            return est
        prev = est
    raise ConvergenceError(
        f"power iteration did not converge within {max_iter} iterations "
        f"(last estimate {est!r})",
        estimate=est,
    )


@dataclass
class SvdResult:
    u: np.ndarray       # n x k, orthonormal columns
    sigma: np.ndarray   # k, nonnegative, nonincreasing
    v: np.ndarray       # d x k, orthonormal columns
    rank_estimate: int  # numerical rank of the full input


def svd_thin(a, k: int) -> SvdResult:
    """Top-k singular triplets of a, plus the numerical rank of a."""
    a = as_matrix(a)
    n, d = a.shape
    if not 1 <= k <= min(n, d):
        raise ParameterError(f"k={k} outside [1, min(n, d)={min(n, d)}]")
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s[0] > 0:
        rank = int(np.sum(s > SINGULAR_VALUE_CUTOFF * s[0]))
    else:
        rank = 0
    return SvdResult(
        u=np.ascontiguousarray(u[:, :k]),
        sigma=s[:k].copy(),
        v=np.ascontiguousarray(vt[:k].T),
        rank_estimate=rank,
    )


def best_rank_k(a, k: int) -> np.ndarray:
    """Closest rank-k matrix to a in Frobenius norm."""
    r = svd_thin(a, k)
    return (r.u * r.sigma) @ r.v.T


def pseudo_inverse(a) -> np.ndarray:
    """Moore-Penrose pseudo-inverse via SVD with a relative cutoff."""
    a = as_matrix(a)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    cutoff = SINGULAR_VALUE_CUTOFF * s[0]
    inv = np.where(s > cutoff, 1.0 / np.where(s > 0, s, 1.0), 0.0)
    return (vt.T * inv) @ u.T


def matmul(a, b) -> np.ndarray:
    """Matrix product with a fixed accumulation order.

    Accumulates over the inner index in ascending order, so the result is
    reproducible bit for bit and matches a scalar triple loop exactly.
    """
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise ParameterError(
            f"inner dimensions differ: {a.shape[1]} vs {b.shape[0]}"
        )
    out = np.zeros((a.shape[0], b.shape[1]))
    tmp = np.empty_like(out)
    for i in range(a.shape[1]):
        np.multiply(a[:, i, None], b[i], out=tmp)
        out += tmp
    return out
