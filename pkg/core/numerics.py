"""
Dense linear-algebra kernels and k-means.

Matrices are numpy float64 arrays in C (row-major) order and data points
are stored as columns. Every function here is a pure function of its
arguments (seed included).
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import linalg

from config import pipeline_rules
from core.exceptions import DimensionError, InputError, ParameterError


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD M = U diag(s) V^t with l = min(m, N)"""
    left_vectors: np.ndarray      # m x l
    singular_values: np.ndarray   # l, nonincreasing
    right_vectors: np.ndarray     # N x l

    def reconstruct(self, rank: int = None) -> np.ndarray:
        """Rebuild the (optionally truncated) matrix"""
        q = len(self.singular_values) if rank is None else rank
        return (self.left_vectors[:, :q] * self.singular_values[:q]) @ self.right_vectors[:, :q].T


@dataclass(frozen=True)
class OrthonormalBasis:
    """Orthonormal basis of a subspace, one basis vector per column"""
    vectors: np.ndarray           # ambient_dim x dim

    @property
    def ambient_dim(self) -> int:
        return self.vectors.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    def project(self, x: np.ndarray) -> np.ndarray:
        """Orthogonal projection onto the span (vector or columns of a matrix)"""
        return self.vectors @ (self.vectors.T @ x)

    def is_orthonormal(self, tol: float = 1e-10) -> bool:
        gram = self.vectors.T @ self.vectors
        return bool(np.allclose(gram, np.eye(self.dim), atol=tol, rtol=0.0))


def as_matrix(M, name: str = "matrix") -> np.ndarray:
    """Validate and convert to a finite 2-D float64 array"""
    arr = np.array(M, dtype=np.float64, ndmin=2, copy=True)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-dimensional, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        bad = np.argwhere(~np.isfinite(arr))[0]
        raise InputError(f"{name} has a non-finite entry at ({bad[0]}, {bad[1]})")
    return arr


def svd(M) -> SvdResult:
    """
    Thin SVD with a fixed sign convention.

    Each right singular vector is flipped so that its entry of largest
    magnitude is nonnegative (lowest index on ties); the matching left
    vector is flipped with it.
    """
    A = as_matrix(M)
    try:
        U, s, Vt = linalg.svd(A, full_matrices=False, lapack_driver="gesdd")
    except linalg.LinAlgError:
        # gesdd occasionally fails to converge; gesvd is slower but robust
        U, s, Vt = linalg.svd(A, full_matrices=False, lapack_driver="gesvd")

    V = Vt.T
    pivots = np.argmax(np.abs(V), axis=0)
    signs = np.where(V[pivots, np.arange(V.shape[1])] < 0, -1.0, 1.0)

    return SvdResult(
        left_vectors=np.ascontiguousarray(U * signs),
        singular_values=s,
        right_vectors=np.ascontiguousarray(V * signs),
    )


def fit_local_basis(X, d: int) -> OrthonormalBasis:
    """d-dimensional subspace nearest (least squares) to the columns of X"""
    X = as_matrix(X, "local data")
    if d < 1 or d > min(X.shape):
        raise DimensionError(
            f"cannot fit a {d}-dimensional subspace to a {X.shape[0]}x{X.shape[1]} matrix"
        )
    return OrthonormalBasis(vectors=svd(X).left_vectors[:, :d].copy())


def residual_distance(x, B: OrthonormalBasis, p: float = 2.0) -> float:
    """p-norm of the component of x orthogonal to span(B)"""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != B.ambient_dim:
        raise DimensionError(f"vector of length {x.shape[0]} vs basis in R^{B.ambient_dim}")
    return float(np.linalg.norm(x - B.project(x), ord=p))


def principal_angles(B1: OrthonormalBasis, B2: OrthonormalBasis) -> np.ndarray:
    """Principal angles in [0, pi/2], nondecreasing"""
    if B1.ambient_dim != B2.ambient_dim:
        raise DimensionError(f"bases live in R^{B1.ambient_dim} and R^{B2.ambient_dim}")
    cosines = np.linalg.svd(B1.vectors.T @ B2.vectors, compute_uv=False)
    # Gram entries can exceed 1 by rounding
    return np.sort(np.arccos(np.clip(cosines, 0.0, 1.0)))


def span_residual(x, M) -> float:
    """Euclidean distance from x to the column span of M (least squares)"""
    M = np.asarray(M, dtype=np.float64)
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.shape[1] == 0:
        return float(np.linalg.norm(x))
    if M.shape[0] != x.shape[0]:
        raise DimensionError(f"vector of length {x.shape[0]} vs span in R^{M.shape[0]}")
    coef, *_ = linalg.lstsq(M, x)
    return float(np.linalg.norm(x - M @ coef))


def numerical_rank(M, rel_tol: float = 1e-8) -> int:
    """Number of singular values above rel_tol * sigma_1"""
    s = np.linalg.svd(np.asarray(M, dtype=np.float64), compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel_tol * s[0]))


def within_cluster_sum_of_squares(points, labels) -> float:
    """Inertia of a labeling; points are columns"""
    X = np.asarray(points, dtype=np.float64)
    labels = np.asarray(labels)
    total = 0.0
    for label in np.unique(labels):
        members = X[:, labels == label]
        centroid = members.mean(axis=1, keepdims=True)
        total += float(np.sum((members - centroid) ** 2))
    return total


def _kmeans_plusplus(X: np.ndarray, n: int, rng: np.random.Generator) -> np.ndarray:
    """Distance-weighted seeding; X is N x features"""
    N = X.shape[0]
    centroids = np.empty((n, X.shape[1]), dtype=np.float64)
    centroids[0] = X[rng.integers(0, N)]

    closest_sq = np.sum((X - centroids[0]) ** 2, axis=1)
    for c in range(1, n):
        total = closest_sq.sum()
        if total > 0:
            idx = int(rng.choice(N, p=closest_sq / total))
        else:
            # every point coincides with a chosen centroid
            idx = int(rng.integers(0, N))
        centroids[c] = X[idx]
        closest_sq = np.minimum(closest_sq, np.sum((X - centroids[c]) ** 2, axis=1))

    return centroids


def _lloyd(X: np.ndarray, n: int, seed: int, max_iter: int) -> Tuple[np.ndarray, float]:
    """One seeded k-means run; returns (labels, inertia)"""
    rng = np.random.default_rng(seed)
    centroids = _kmeans_plusplus(X, n, rng)
    labels = None

    for _ in range(max_iter):
        sq_dist = np.sum((X[:, None, :] - centroids[None, :, :]) ** 2, axis=2)
        new_labels = np.argmin(sq_dist, axis=1)

        # Repair empty clusters at the point farthest from its centroid
        for c in range(n):
            if np.any(new_labels == c):
                continue
            own = sq_dist[np.arange(X.shape[0]), new_labels].copy()
            sizes = np.bincount(new_labels, minlength=n)
            own[sizes[new_labels] <= 1] = -np.inf
            far = int(np.argmax(own))
            new_labels[far] = c
            centroids[c] = X[far]

        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels

        for c in range(n):
            centroids[c] = X[labels == c].mean(axis=0)

    inertia = float(np.sum((X - centroids[labels]) ** 2))
    return labels.astype(np.int64), inertia


def kmeans(points, n: int, seed: int = 0,
           restarts: int = pipeline_rules.KMEANS_RESTARTS,
           max_iter: int = pipeline_rules.KMEANS_MAX_ITER,
           workers: int = 1) -> np.ndarray:
    """
    Cluster the columns of `points` into n groups.

    Restart r is seeded with seed + r; the restart with the smallest
    within-cluster sum of squares wins (lowest restart index on ties).
    The result does not depend on `workers`.
    """
    X = as_matrix(points, "points").T
    N = X.shape[0]
    if n < 1 or n > N:
        raise ParameterError(f"number of clusters must be in [1, {N}], got {n}")
    if restarts < 1 or max_iter < 1:
        raise ParameterError("restarts and max_iter must be positive")

    seeds = [seed + r for r in range(restarts)]
    if workers > 1 and restarts > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            runs: List[Tuple[np.ndarray, float]] = list(
                pool.map(lambda s: _lloyd(X, n, s, max_iter), seeds)
            )
    else:
        runs = [_lloyd(X, n, s, max_iter) for s in seeds]

    best_labels, best_inertia = runs[0]
    for labels, inertia in runs[1:]:
        if inertia < best_inertia:
            best_labels, best_inertia = labels, inertia

    return best_labels
