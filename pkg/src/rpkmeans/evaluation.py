"""Scoring (normalized objective, label accuracy) and the randomized
property checks behind the projection guarantees."""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from . import projection as _projection, rng as _rng
from .errors import ParameterError
from .kmeans import Assignment, brute_force_optimal, objective
from .matrix import (as_matrix, best_rank_k, frobenius_norm, pseudo_inverse,
                     spectral_norm, svd_thin)


@dataclass
class PropertyReport:
    """Outcome of one randomized check: pass counts plus the worst statistic.

    For aggregate checks (a single statistic over all trials) passes is
    either trials or 0, depending on whether the aggregate met the bound.
    """

    check_name: str
    trials: int
    passes: int
    statistic: float
    bound: float

    def __post_init__(self):
        if not 0 <= self.passes <= self.trials:
            raise ParameterError("passes must lie in [0, trials]")


@dataclass
class ExperimentRecord:
    """One sweep cell: method and t, scores, and per-phase wall times."""

    method: str
    t: int
    f_tilde: float
    accuracy: float | None
    projection_ms: float
    clustering_ms: float
    seed: int
    k: int
    epsilon: float

    def __post_init__(self):
        if self.f_tilde < 0:
            raise ParameterError("f_tilde must be nonnegative")
        if self.accuracy is not None and not 0.0 <= self.accuracy <= 1.0:
            raise ParameterError("accuracy must lie in [0, 1]")


def normalized_objective(a, asg: Assignment) -> float:
    """Clustering objective divided by the squared Frobenius norm of a."""
    a = as_matrix(a)
    fro = frobenius_norm(a)
    if fro == 0.0:
        raise ParameterError("normalized objective undefined for the zero matrix")
    return objective(a, asg) / (fro * fro)


def accuracy(pred: Assignment, truth) -> float:
    """Fraction of points correctly labeled under the best one-to-one map
    between predicted clusters and true classes (maximum-weight matching
    on the confusion matrix, padded square when the counts differ)."""
    truth = np.asarray(truth, dtype=np.int64)
    if truth.ndim != 1 or truth.size != pred.n:
        raise ParameterError("truth labels must match the assignment length")
    if truth.min() < 0:
        raise ParameterError("truth labels must be nonnegative")
    k_true = int(truth.max()) + 1
    size = max(pred.k, k_true)
    conf = np.zeros((size, size))
    np.add.at(conf, (pred.labels, truth), 1.0)
    rows, cols = linear_sum_assignment(conf, maximize=True)
    return float(conf[rows, cols].sum()) / pred.n


def _trial_seed(seed, index):
    return _rng.derive_seed(seed, _rng.TRIAL, index)


def jl_distortion_check(n: int, d: int, t: int, epsilon: float, seeds: int,
                        seed: int, bound_scale: float = 1.0) -> PropertyReport:
    """Seeded Gaussian point sets: pairwise distances must survive the sign
    projection within (1 +- epsilon) for at least 99% of pairs, per seed.

    bound_scale < 1 narrows the distance band (negative-control hook).
    """
    passes = 0
    worst = 1.0
    for i in range(seeds):
        ts = _trial_seed(seed, i)
        pts = _rng.stream(ts, _rng.INSTANCE).standard_normal((n, d))
        r = _projection.sample_sign_matrix(d, t, ts)
        rep = _projection.jl_distortion_report(
            pts, _projection.project_naive(pts, r), epsilon * bound_scale
        )
        worst = min(worst, rep.fraction_ok)
        if rep.fraction_ok >= 0.99:
            passes += 1
    return PropertyReport("jl_pairwise_distortion", seeds, passes, worst, 0.99)


def moment_identity_check(c, t: int, seeds: int, seed: int,
                          bound_scale: float = 1.0) -> PropertyReport:
    """The squared norm of c @ R matches ||c||^2 on average: the sample mean
    of the ratio over the given seeds must sit within 1 +- 15/sqrt(seeds*t)."""
    c = as_matrix(c)
    fro2 = frobenius_norm(c) ** 2
    if fro2 == 0.0:
        raise ParameterError("moment check needs a nonzero matrix")
    total = 0.0
    for i in range(seeds):
        r = _projection.sample_sign_matrix(c.shape[1], t, _trial_seed(seed, i))
        proj = _projection.project_naive(c, r)
        total += float(np.sum(proj * proj)) / fro2
    mean = total / seeds
    band = 15.0 / math.sqrt(seeds * t) * bound_scale
    ok = abs(mean - 1.0) <= band
    return PropertyReport("norm_moment_identity", seeds,
                          seeds if ok else 0, mean, band)


def norm_bound_check(c, k: int, epsilon: float, trials: int, seed: int,
                     bound_scale: float = 1.0) -> PropertyReport:
    """||c @ R||_F stays below sqrt(1 + epsilon) * ||c||_F at the fattened
    projection dimension t = ceil(200 k / epsilon^2), counted per trial."""
    c = as_matrix(c)
    if k < 1:
        raise ParameterError("k must be at least 1")
    if not 0.0 < epsilon < 1.0:
        raise ParameterError(f"epsilon={epsilon!r} outside (0, 1)")
    # proof-scale epsilons exceed the clustering range, so size t here
    x = 200.0 * k / (epsilon * epsilon)
    t = max(1, math.ceil(x - 1e-12 * x))
    fro = frobenius_norm(c)
    limit = math.sqrt(1.0 + epsilon * bound_scale) * fro
    passes = 0
    worst = 0.0
    for i in range(trials):
        r = _projection.sample_sign_matrix(c.shape[1], t, _trial_seed(seed, i))
        val = float(np.linalg.norm(_projection.project_naive(c, r)))
        worst = max(worst, val / fro)
        if val <= limit:
            passes += 1
    return PropertyReport("projected_norm_upper_bound", trials, passes,
                          worst, limit / fro)


def singular_value_check(a, k: int, epsilon: float, t: int, trials: int,
                         seed: int, bound_scale: float = 1.0) -> PropertyReport:
    """All singular values of V_k^T R stay within epsilon of 1, where V_k is
    the top-k right factor of a and R is a fresh sign matrix per trial."""
    a = as_matrix(a)
    v = svd_thin(a, k).v
    d = a.shape[1]
    half = epsilon * bound_scale
    passes = 0
    worst = 0.0
    for i in range(trials):
        r = _projection.sample_sign_matrix(d, t, _trial_seed(seed, i))
        sig = np.linalg.svd(v.T @ r.dense(), compute_uv=False)
        dev = float(np.max(np.abs(1.0 - sig)))
        worst = max(worst, dev)
        if dev <= half:
            passes += 1
    return PropertyReport("projected_basis_singular_values", trials, passes,
                          worst, half)


def matmul_moment_check(s, tmat, t: int, seeds: int, seed: int,
                        bound_scale: float = 1.0) -> PropertyReport:
    """Approximate-product error: the mean of ||S T - S R R^T T||_F^2 over
    the seeds must stay below 1.5 times (2/t) ||S||_F^2 ||T||_F^2."""
    s = as_matrix(s)
    tmat = as_matrix(tmat)
    if s.shape[1] != tmat.shape[0]:
        raise ParameterError("inner dimensions must agree")
    exact = s @ tmat
    total = 0.0
    for i in range(seeds):
        dense = _projection.sample_sign_matrix(
            s.shape[1], t, _trial_seed(seed, i)
        ).dense()
        err = exact - (s @ dense) @ (dense.T @ tmat)
        total += float(np.sum(err * err))
    mean = total / seeds
    limit = 1.5 * (2.0 / t) * (frobenius_norm(s) ** 2) * (
        frobenius_norm(tmat) ** 2
    ) * bound_scale
    ok = mean <= limit
    return PropertyReport("matrix_product_moment", seeds,
                          seeds if ok else 0, mean, limit)


def pseudo_inverse_bound_check(a, k: int, epsilon: float, t: int, trials: int,
                               seed: int, bound_scale: float = 1.0) -> PropertyReport:
    """The pseudo-inverse of V_k^T R stays spectrally within 3*epsilon of its
    transpose, per trial."""
    a = as_matrix(a)
    v = svd_thin(a, k).v
    limit = 3.0 * epsilon * bound_scale
    passes = 0
    worst = 0.0
    for i in range(trials):
        r = _projection.sample_sign_matrix(a.shape[1], t, _trial_seed(seed, i))
        vr = v.T @ r.dense()
        gap = spectral_norm(pseudo_inverse(vr) - vr.T)
        worst = max(worst, gap)
        if gap <= limit:
            passes += 1
    return PropertyReport("pseudo_inverse_transpose_gap", trials, passes,
                          worst, limit)


def decomposition_residual_check(a, k: int, epsilon: float, t: int,
                                 trials: int, seed: int,
                                 bound_scale: float = 1.0) -> PropertyReport:
    """The best rank-k part of a is recovered from its projection: the
    residual ||a_k - (a R)(V_k^T R)^+ V_k^T||_F stays below
    4*epsilon*||a - a_k||_F, per trial."""
    a = as_matrix(a)
    if not 1 <= k < min(a.shape):
        raise ParameterError("k must be below min(n, d)")
    ak = best_rank_k(a, k)
    base = frobenius_norm(a - ak)
    if base <= 1e-12 * frobenius_norm(a):
        raise ParameterError("input is already rank k; residual check undefined")
    v = svd_thin(a, k).v
    limit = 4.0 * epsilon * bound_scale
    passes = 0
    worst = 0.0
    for i in range(trials):
        r = _projection.sample_sign_matrix(a.shape[1], t, _trial_seed(seed, i))
        dense = r.dense()
        vr = v.T @ dense
        recon = (a @ dense) @ pseudo_inverse(vr) @ v.T
        ratio = frobenius_norm(ak - recon) / base
        worst = max(worst, ratio)
        if ratio <= limit:
            passes += 1
    return PropertyReport("rank_k_decomposition_residual", trials, passes,
                          worst, limit)


def theorem_distortion_trial(n: int, d: int, k: int, epsilon: float, t: int,
                             trials: int, seed: int, method: str = "sign",
                             bound_scale: float = 1.0) -> PropertyReport:
    """End-to-end guarantee on exhaustively solvable instances.

    Per trial: draw an isotropic Gaussian instance, solve it exactly, solve
    its projection exactly, and price the projected solution back in the
    original space.  The trial passes when that plug-back objective is at
    most (2 + epsilon) times the true optimum.

    method chooses the embedding: "sign" (the random sign matrix at the
    given t), "none" (identity), or "rotation" (a seeded orthonormal square
    transform; the ratio is then exactly 1).
    """
    if method not in ("sign", "none", "rotation"):
        raise ParameterError(f"unknown method {method!r}")
    limit = (2.0 + epsilon) * bound_scale
    passes = 0
    worst = 0.0
    for i in range(trials):
        ts = _trial_seed(seed, i)
        a = _rng.stream(ts, _rng.INSTANCE).standard_normal((n, d))
        # price both partitions with the same evaluator so the identity
        # embedding yields a ratio of exactly one
        opt = objective(a, brute_force_optimal(a, k).assignment)
        if method == "none":
            proj = a
        elif method == "rotation":
            q, _ = np.linalg.qr(
                _rng.stream(ts, _rng.ROTATION).standard_normal((d, d))
            )
            proj = a @ q
        else:
            r = _projection.sample_sign_matrix(d, t, ts)
            proj = _projection.project_naive(a, r)
        asg = brute_force_optimal(proj, k).assignment
        plug = objective(a, asg)
        ratio = plug / opt if opt > 0 else 1.0
        worst = max(worst, ratio)
        if plug <= limit * opt:
            passes += 1
    return PropertyReport("cluster_distortion_guarantee", trials, passes,
                          worst, limit)
