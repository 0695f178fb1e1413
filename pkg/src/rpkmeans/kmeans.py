"""Lloyd's heuristic, an exact exhaustive solver, and the project-then-cluster
pipeline built on top of them."""

from dataclasses import dataclass, field

import numpy as np

from . import mailman as _mailman, projection as _projection, rng as _rng
from .errors import ParameterError
from .matrix import as_matrix

BRUTE_FORCE_MAX_POINTS = 14
_ENUM_CHUNK = 1 << 15


@dataclass
class Assignment:
    """A hard clustering: one label in [0, k) per point."""

    labels: np.ndarray
    k: int
    cluster_sizes: np.ndarray

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.int64)
        self.cluster_sizes = np.asarray(self.cluster_sizes, dtype=np.int64)
        if self.labels.ndim != 1 or self.labels.size == 0:
            raise ParameterError("labels must be a nonempty 1-D array")
        if self.k < 1:
            raise ParameterError("k must be at least 1")
        if self.labels.min() < 0 or self.labels.max() >= self.k:
            raise ParameterError("labels must lie in [0, k)")
        expected = np.bincount(self.labels, minlength=self.k)
        if not np.array_equal(expected, self.cluster_sizes):
            raise ParameterError("cluster_sizes inconsistent with labels")

    @classmethod
    def from_labels(cls, labels, k: int) -> "Assignment":
        labels = np.asarray(labels, dtype=np.int64)
        return cls(labels=labels, k=k,
                   cluster_sizes=np.bincount(labels, minlength=k))

    @property
    def n(self) -> int:
        return self.labels.size

    def indicator(self) -> np.ndarray:
        """The n x k normalized indicator matrix X with X[i, j] = 1/sqrt(z_j).

        Columns of empty clusters are zero; over nonempty clusters the
        columns are orthonormal, so X @ X.T @ a averages within clusters.
        """
        x = np.zeros((self.n, self.k))
        inv = np.zeros(self.k)
        nonempty = self.cluster_sizes > 0
        inv[nonempty] = 1.0 / np.sqrt(self.cluster_sizes[nonempty])
        x[np.arange(self.n), self.labels] = inv[self.labels]
        return x


@dataclass
class GivenIndices:
    """Start Lloyd from the rows at these indices."""

    indices: tuple


@dataclass
class FirstOfEachGroup:
    """Start Lloyd from rows 0, stride, 2*stride, ..., (k-1)*stride."""

    stride: int = 1


@dataclass
class SolverSpec:
    """Which solver to run and with what budget.

    gamma is the guaranteed approximation factor: 1.0 for the exhaustive
    solver, None for Lloyd (a heuristic, reported without a guarantee).
    Replicates beyond the first restart Lloyd from seeded random rows and
    keep the best objective.
    """

    kind: str = "lloyd"
    gamma: float | None = None
    delta_gamma: float = 0.0
    max_iter: int = 100
    tol: float = 1e-9
    init: object = field(default_factory=FirstOfEachGroup)
    replicates: int = 1

    def __post_init__(self):
        if self.kind not in ("lloyd", "brute_force"):
            raise ParameterError(f"unknown solver kind {self.kind!r}")
        if self.gamma is not None and self.gamma < 1.0:
            raise ParameterError("gamma must be at least 1 when given")
        if not 0.0 <= self.delta_gamma < 1.0:
            raise ParameterError("delta_gamma must lie in [0, 1)")
        if self.max_iter < 1:
            raise ParameterError("max_iter must be at least 1")
        if self.tol < 0:
            raise ParameterError("tol must be nonnegative")
        if self.replicates < 1:
            raise ParameterError("replicates must be at least 1")


@dataclass
class KMeansResult:
    assignment: Assignment
    objective: float
    iterations: int
    converged: bool
    objective_trace: np.ndarray


def objective(a, asg: Assignment) -> float:
    """Sum of squared distances from each point to its cluster mean."""
    a = as_matrix(a)
    if asg.labels.size != a.shape[0]:
        raise ParameterError("assignment length does not match row count")
    if (asg.cluster_sizes[asg.labels] == 0).any():
        raise ParameterError("assignment references an empty cluster")
    sums = np.zeros((asg.k, a.shape[1]))
    np.add.at(sums, asg.labels, a)
    denom = np.maximum(asg.cluster_sizes, 1)[:, None]
    centroids = sums / denom
    diff = a - centroids[asg.labels]
    return float(np.sum(diff * diff))


def _initial_centroids(a, k, init):
    n = a.shape[0]
    if isinstance(init, GivenIndices):
        idx = np.asarray(init.indices, dtype=np.int64)
        if idx.size != k:
            raise ParameterError(f"init needs exactly k={k} indices")
        if idx.min() < 0 or idx.max() >= n:
            raise ParameterError("init index out of range")
    elif isinstance(init, FirstOfEachGroup):
        if init.stride < 1:
            raise ParameterError("stride must be at least 1")
        idx = np.arange(k, dtype=np.int64) * init.stride
        if idx[-1] >= n:
            raise ParameterError(
                f"stride {init.stride} with k={k} reaches past n={n} rows"
            )
    else:
        raise ParameterError(f"unknown init {init!r}")
    return a[idx].copy()


def _partition_cost(a_sq_total, sums_sq, sizes):
    # F = sum ||a_i||^2 - sum_j ||cluster sum_j||^2 / z_j, never negative.
    nonempty = sizes > 0
    val = a_sq_total - np.sum(sums_sq[nonempty] / sizes[nonempty])
    return max(float(val), 0.0)


def _lloyd_once(a, k, centroids, max_iter, tol):
    n = a.shape[0]
    a_sq = np.einsum("ij,ij->i", a, a)
    a_sq_total = float(a_sq.sum())
    labels_prev = None
    trace = []
    converged = False
    iterations = 0
    labels = None
    for iterations in range(1, max_iter + 1):
        d2 = a_sq[:, None] - 2.0 * (a @ centroids.T)
        d2 += np.einsum("ij,ij->i", centroids, centroids)[None, :]
        labels = np.argmin(d2, axis=1)  # ties break to the lowest index
        sizes = np.bincount(labels, minlength=k)
        while (sizes == 0).any():
            empty = int(np.flatnonzero(sizes == 0)[0])
            # move the point farthest from its current centroid, but never
            # drain a singleton cluster (that would just shift the hole)
            own = d2[np.arange(n), labels].copy()
            own[sizes[labels] <= 1] = -np.inf
            moved = int(np.argmax(own))
            sizes[labels[moved]] -= 1
            labels[moved] = empty
            sizes[empty] = 1
        sums = np.zeros((k, a.shape[1]))
        np.add.at(sums, labels, a)
        centroids = sums / np.maximum(sizes, 1)[:, None]
        sums_sq = np.einsum("ij,ij->i", sums, sums)
        trace.append(_partition_cost(a_sq_total, sums_sq, sizes))
        if labels_prev is not None and np.array_equal(labels, labels_prev):
            converged = True
            break
        if len(trace) >= 2:
            prev, cur = trace[-2], trace[-1]
            if prev == 0.0 or (prev - cur) < tol * prev:
                converged = True
                break
        labels_prev = labels
    return KMeansResult(
        assignment=Assignment.from_labels(labels, k),
        objective=trace[-1],
        iterations=iterations,
        converged=converged,
        objective_trace=np.array(trace),
    )


def lloyd(a, k: int, spec: SolverSpec | None = None, seed: int = 0) -> KMeansResult:
    """Lloyd's heuristic: alternate nearest-centroid assignment and mean
    updates until the assignment stabilizes, the relative objective drop
    falls below tol, or max_iter is hit.

    Emptied clusters are repaired by reassigning the point farthest from
    its current centroid.  The recorded objective trace is non-increasing.
    With replicates > 1, restarts r >= 1 draw k distinct seed rows from the
    (seed, restart r) stream and the best objective wins.
    """
    a = as_matrix(a)
    spec = spec if spec is not None else SolverSpec()
    n = a.shape[0]
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} outside [1, n={n}]")
    best = None
    for rep in range(spec.replicates):
        if rep == 0:
            centroids = _initial_centroids(a, k, spec.init)
        else:
            idx = _rng.stream(seed, _rng.LLOYD_RESTART, rep).choice(
                n, size=k, replace=False
            )
            centroids = a[np.sort(idx)].copy()
        res = _lloyd_once(a, k, centroids, spec.max_iter, spec.tol)
        if best is None or res.objective < best.objective:
            best = res
    return best


def _growth_strings(n, k):
    """Yield every restricted-growth string of length n with at most k values."""
    a = [0] * n

    def rec(i, used):
        if i == n:
            yield tuple(a)
            return
        top = min(used + 1, k - 1)
        for v in range(top + 1):
            a[i] = v
            yield from rec(i + 1, max(used, v))

    yield from rec(1, 0)


def brute_force_optimal(a, k: int) -> KMeansResult:
    """Exact k-means by enumerating every partition into at most k clusters.

    Partition counts grow as Bell numbers, so inputs are refused beyond
    n = 14 rows.  Costs come from the Gram matrix, making the scan cheap in
    the point dimension.  iterations reports the number of partitions tried.
    """
    a = as_matrix(a)
    n = a.shape[0]
    if n > BRUTE_FORCE_MAX_POINTS:
        raise ParameterError(
            f"exhaustive solver refuses n={n} > {BRUTE_FORCE_MAX_POINTS} points"
        )
    if not 1 <= k <= n:
        raise ParameterError(f"k={k} outside [1, n={n}]")
    gram = a @ a.T
    total = float(np.trace(gram))
    best_cost = np.inf
    best_labels = None
    examined = 0

    def scan(chunk):
        nonlocal best_cost, best_labels, examined
        part = np.array(chunk, dtype=np.int64)
        onehot = np.zeros((part.shape[0], n, k))
        rows = np.arange(n)
        onehot[np.arange(part.shape[0])[:, None], rows[None, :], part] = 1.0
        quad = np.einsum("mik,ip,mpk->mk", onehot, gram, onehot)
        counts = onehot.sum(axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            per = np.where(counts > 0, quad / np.maximum(counts, 1), 0.0)
        costs = total - per.sum(axis=1)
        j = int(np.argmin(costs))
        examined += part.shape[0]
        if costs[j] < best_cost:
            best_cost = float(costs[j])
            best_labels = part[j].copy()

    chunk = []
    for labels in _growth_strings(n, k):
        chunk.append(labels)
        if len(chunk) == _ENUM_CHUNK:
            scan(chunk)
            chunk = []
    if chunk:
        scan(chunk)
    best_cost = max(best_cost, 0.0)
    return KMeansResult(
        assignment=Assignment.from_labels(best_labels, k),
        objective=best_cost,
        iterations=examined,
        converged=True,
        objective_trace=np.array([best_cost]),
    )


PIPELINE_METHODS = ("sign_mailman", "sign_naive", "gaussian", "svd_embed", "none")


def apply_projection(a, cfg: _projection.ProjectionConfig, method: str):
    """Project a for the named method; returns (projected, t_used)."""
    a = as_matrix(a)
    if method not in PIPELINE_METHODS:
        raise ParameterError(f"unknown method {method!r}")
    d = a.shape[1]
    if method == "none":
        return a, d
    t = cfg.resolve_t(d)
    if method == "sign_mailman":
        plan = _mailman.build_plan(d, t, cfg.seed)
        return _mailman.project_mailman(a, plan), t
    if method == "sign_naive":
        r = _projection.sample_sign_matrix(d, t, cfg.seed)
        return _projection.project_naive(a, r), t
    if method == "gaussian":
        g = _projection.sample_gaussian_matrix(d, t, cfg.seed)
        return _projection.project_naive(a, g), t
    # svd_embed: top-t factor embedding, needs t within both dimensions
    if t > min(a.shape):
        raise ParameterError(f"svd_embed needs t <= min(n, d), got t={t}")
    return _projection.svd_embed(a, t), t


@dataclass
class PipelineResult:
    projected: KMeansResult
    original_objective: float
    method: str
    t: int


def _solve(a, k, spec, seed):
    if spec.kind == "brute_force":
        return brute_force_optimal(a, k)
    return lloyd(a, k, spec, seed)


def project_and_cluster(a, k: int, cfg: _projection.ProjectionConfig,
                        spec: SolverSpec | None = None,
                        method: str = "sign_mailman") -> PipelineResult:
    """Project the rows of a, cluster in the low dimension, then price the
    resulting assignment back in the original space.

    Returns the low-dimensional solver result together with the
    original-space objective of the same assignment.
    """
    a = as_matrix(a)
    spec = spec if spec is not None else SolverSpec()
    projected, t_used = apply_projection(a, cfg, method)
    res = _solve(projected, k, spec, cfg.seed)
    return PipelineResult(
        projected=res,
        original_objective=objective(a, res.assignment),
        method=method,
        t=t_used,
    )
