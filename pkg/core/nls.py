"""
Nearness-to-local-subspace segmentation pipeline.

reduce_and_normalize -> neighbor_sets -> fit_all_local_subspaces
-> distance_matrix -> data_driven_threshold -> binary_similarity
-> row_normalize_l1 -> segment_rows
"""
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.spatial.distance import cdist

from config import pipeline_rules
from core import numerics
from core.exceptions import (
    ConfigurationError,
    DegenerateInputError,
    DimensionError,
    InputError,
    InvariantViolation,
    ParameterError,
)
from utils.logger import logger


class NlsConfig(BaseModel):
    """All parameters of one segmentation run"""
    subspace_dim: int = Field(pipeline_rules.DEFAULT_SUBSPACE_DIM, ge=1)
    num_clusters: int = Field(2, ge=1)
    neighbors: int = Field(pipeline_rules.DEFAULT_NEIGHBORS, ge=0)
    rank: Optional[int] = Field(None, ge=1)      # None = estimate with kappa
    kappa: float = Field(pipeline_rules.DEFAULT_KAPPA, gt=0)
    norm_p: float = Field(pipeline_rules.DEFAULT_NORM_P, ge=1)
    seed: int = 0
    kmeans_restarts: int = Field(pipeline_rules.KMEANS_RESTARTS, ge=1)
    kmeans_max_iter: int = Field(pipeline_rules.KMEANS_MAX_ITER, ge=1)
    threshold_factor: float = Field(1.0, gt=0)
    segment_rank: Optional[int] = Field(None, ge=1)  # None = num_clusters
    workers: int = Field(1, ge=1)

    class Config:
        frozen = True

    @model_validator(mode="after")
    def check_neighbors(self):
        if self.neighbors < self.subspace_dim - 1:
            raise ValueError(
                f"neighbors ({self.neighbors}) must be at least subspace_dim - 1 "
                f"({self.subspace_dim - 1})"
            )
        return self

    @property
    def rank_mode(self) -> str:
        return "estimate" if self.rank is None else "known"

    def with_updates(self, **changes) -> "NlsConfig":
        """Validated copy with some fields replaced"""
        return NlsConfig(**{**self.model_dump(), **changes})


@dataclass(frozen=True)
class ReducedData:
    """Columns of the first r rows of V^t, each scaled to unit p-norm"""
    matrix: np.ndarray            # r x N
    norm_p: float
    singular_values: np.ndarray   # full spectrum of the input

    @property
    def rank(self) -> int:
        return self.matrix.shape[0]

    @property
    def num_points(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class LocalBasisSet:
    """One fitted local subspace basis per point"""
    vectors: np.ndarray           # N x r x d

    def __len__(self) -> int:
        return self.vectors.shape[0]

    def __getitem__(self, i: int) -> numerics.OrthonormalBasis:
        return numerics.OrthonormalBasis(vectors=self.vectors[i])

    @property
    def dim(self) -> int:
        return self.vectors.shape[2]


@dataclass(frozen=True)
class SimilarityMatrix:
    """Binary similarity S with the threshold that produced it"""
    entries: np.ndarray           # N x N, 0/1
    eta: float
    threshold_index: int


@dataclass
class Diagnostics:
    rank: int
    eta: float
    threshold_index: int
    data_driven_index: int
    distance: np.ndarray
    similarity: np.ndarray
    timings: Dict[str, float] = field(default_factory=dict)


def estimate_rank(singular_values, kappa: float) -> int:
    """
    Modal selection: argmin over r in [1, l-1] of
    sigma_{r+1}^2 / sum_{i<=r} sigma_i^2 + kappa * r (smallest r on ties)
    """
    s = np.asarray(singular_values, dtype=np.float64).reshape(-1)
    if s.size < 2:
        raise ParameterError("rank estimation needs at least 2 singular values")
    if kappa <= 0:
        raise ParameterError(f"kappa must be positive, got {kappa}")
    if not np.all(s >= 0) or np.any(np.diff(s) > 0):
        raise InputError("singular values must be nonnegative and nonincreasing")
    if s[0] <= 0:
        raise DegenerateInputError("all singular values are zero")

    energy = s ** 2
    ranks = np.arange(1, s.size)
    criterion = energy[1:] / np.cumsum(energy)[:-1] + kappa * ranks
    return int(ranks[np.argmin(criterion)])


def reduce_and_normalize(W, cfg: NlsConfig) -> ReducedData:
    """Replace W by the first r rows of V^t with columns of unit p-norm"""
    W = numerics.as_matrix(W, "data matrix")

    zero_cols = np.flatnonzero(np.all(W == 0, axis=0))
    if zero_cols.size:
        raise InputError(f"data matrix column {int(zero_cols[0])} is zero")

    decomposition = numerics.svd(W)
    s = decomposition.singular_values

    if cfg.rank is not None:
        r = cfg.rank
    elif s.size < 2:
        r = 1
    else:
        r = estimate_rank(s, cfg.kappa)

    if r > min(W.shape):
        raise ParameterError(f"rank {r} exceeds min(m, N) = {min(W.shape)}")

    Y = decomposition.right_vectors[:, :r].T.copy()
    norms = np.linalg.norm(Y, ord=cfg.norm_p, axis=0)
    degenerate = np.flatnonzero(norms == 0)
    if degenerate.size:
        raise DegenerateInputError(
            f"column {int(degenerate[0])} vanishes in the rank-{r} reduction"
        )

    return ReducedData(matrix=Y / norms, norm_p=cfg.norm_p, singular_values=s)


def point_distances(Y: ReducedData) -> np.ndarray:
    """Pairwise angles (p=2) or p-norm distances between reduced points"""
    X = Y.matrix
    if Y.norm_p == 2:
        return np.arccos(np.clip(X.T @ X, -1.0, 1.0))
    return cdist(X.T, X.T, metric="minkowski", p=Y.norm_p)


def neighbor_sets(Y: ReducedData, k: int) -> np.ndarray:
    """
    k nearest neighbors of every point, excluding the point itself.

    Row i lists the neighbors of point i sorted by distance, lower index
    first on ties.
    """
    N = Y.num_points
    if k < 0 or k >= N:
        raise ParameterError(f"neighbors must be in [0, {N - 1}], got {k}")

    dist = point_distances(Y)
    np.fill_diagonal(dist, np.inf)
    order = np.argsort(dist, axis=1, kind="stable")
    return order[:, :k].astype(np.int64)


def fit_all_local_subspaces(Y: ReducedData, neighbors: np.ndarray, d: int,
                            workers: int = 1) -> LocalBasisSet:
    """Fit a d-dimensional local subspace to each point and its neighbors"""
    X = Y.matrix
    N = Y.num_points
    if neighbors.shape[0] != N:
        raise DimensionError(f"{neighbors.shape[0]} neighbor sets for {N} points")

    result = np.empty((N, Y.rank, d), dtype=np.float64)

    def fit(i: int) -> None:
        cols = np.concatenate(([i], neighbors[i]))
        result[i] = numerics.fit_local_basis(X[:, cols], d).vectors

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(fit, range(N)))
    else:
        for i in range(N):
            fit(i)

    return LocalBasisSet(vectors=result)


def residual_matrix(Y: ReducedData, bases: LocalBasisSet, p: float,
                    workers: int = 1) -> np.ndarray:
    """R[i, j] = ||y_j - A_i A_i^t y_j||_p"""
    X = Y.matrix
    N = Y.num_points
    if len(bases) != N:
        raise DimensionError(f"{len(bases)} local bases for {N} points")
    if bases.vectors.shape[1] != Y.rank:
        raise DimensionError(f"local bases in R^{bases.vectors.shape[1]}, points in R^{Y.rank}")

    R = np.empty((N, N), dtype=np.float64)

    def row(i: int) -> None:
        A = bases.vectors[i]
        R[i] = np.linalg.norm(X - A @ (A.T @ X), ord=p, axis=0)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(row, range(N)))
    else:
        for i in range(N):
            row(i)

    return R


def distance_matrix(Y: ReducedData, bases: LocalBasisSet, p: float = 2.0,
                    workers: int = 1) -> np.ndarray:
    """H = (d_ij): mean of the two point-to-local-subspace residuals"""
    R = residual_matrix(Y, bases, p, workers=workers)
    return (R + R.T) / 2


def _scale_to_unit(H: np.ndarray) -> Tuple[np.ndarray, float, float]:
    lo = float(np.min(H))
    hi = float(np.max(H))
    if not hi > lo:
        raise DegenerateInputError(
            "distance matrix is constant; near and far points cannot be separated"
        )
    return (H - lo) / (hi - lo), lo, hi


def threshold_objective(h_sorted: np.ndarray) -> np.ndarray:
    """
    Step-fit objective for every T in [1, M] (entry T-1):
    sum_{i<T} h_i^2 + sum_{i>=T} (1 - h_i)^2
    """
    h = np.asarray(h_sorted, dtype=np.float64)
    below = np.concatenate(([0.0], np.cumsum(h ** 2)[:-1]))
    above = np.cumsum(((1.0 - h) ** 2)[::-1])[::-1]
    return below + above


def sorted_scaled_profile(H) -> np.ndarray:
    """All entries of H, ascending, rescaled to [0, 1]"""
    scaled, _, _ = _scale_to_unit(np.asarray(H, dtype=np.float64))
    return np.sort(scaled, axis=None)


def data_driven_threshold(H) -> Tuple[float, int]:
    """
    Fit a unit step to the sorted, rescaled entries of H.

    Returns (eta, T_d): T_d (1-based, smallest on ties) minimises the
    squared distance to the step starting at T_d, eta is the scaled value
    at T_d.
    """
    h = sorted_scaled_profile(H)
    objective = threshold_objective(h)
    t_d = int(np.argmin(objective)) + 1
    return float(h[t_d - 1]), t_d


def substitute_threshold(H, t_d: int, factor: float) -> Tuple[float, int]:
    """Threshold at index round(factor * T_d) clamped to [1, N^2]"""
    if factor <= 0:
        raise ParameterError(f"threshold factor must be positive, got {factor}")
    h = sorted_scaled_profile(H)
    index = min(max(int(round(factor * t_d)), 1), h.size)
    return float(h[index - 1]), index


def binary_similarity(H, eta: float, threshold_index: int = 0) -> SimilarityMatrix:
    """s_ij = 1 where the rescaled distance is strictly below eta; s_ii = 1"""
    scaled, _, _ = _scale_to_unit(np.asarray(H, dtype=np.float64))
    entries = (scaled < eta).astype(np.float64)
    if entries.ndim == 2 and entries.shape[0] == entries.shape[1]:
        np.fill_diagonal(entries, 1.0)
    return SimilarityMatrix(entries=entries, eta=float(eta), threshold_index=threshold_index)


def row_normalize_l1(S: SimilarityMatrix) -> np.ndarray:
    """S~ = D^-1 S with D the diagonal of row sums"""
    entries = S.entries if isinstance(S, SimilarityMatrix) else np.asarray(S, dtype=np.float64)
    row_sums = entries.sum(axis=1)
    empty = np.flatnonzero(row_sums <= 0)
    if empty.size:
        raise InvariantViolation(f"similarity row {int(empty[0])} has no similar point")
    return entries / row_sums[:, None]


def segment_rows(S_tilde: np.ndarray, n: int, cfg: NlsConfig) -> np.ndarray:
    """Cluster the columns of Sigma_q V_q^t from the SVD of S~^t (q = n unless overridden)"""
    N = S_tilde.shape[0]
    if n < 1 or n > N:
        raise ParameterError(f"number of clusters must be in [1, {N}], got {n}")

    decomposition = numerics.svd(np.asarray(S_tilde).T)
    q = min(cfg.segment_rank or n, decomposition.singular_values.size)
    embedded = (decomposition.right_vectors[:, :q] * decomposition.singular_values[:q]).T

    return numerics.kmeans(
        embedded, n,
        seed=cfg.seed,
        restarts=cfg.kmeans_restarts,
        max_iter=cfg.kmeans_max_iter,
        workers=cfg.workers,
    )


def nls_segment(W, cfg: NlsConfig) -> Tuple[np.ndarray, Diagnostics]:
    """Run the full pipeline; returns (labels, diagnostics)"""
    timings: Dict[str, float] = {}
    started = time.perf_counter()

    def lap(stage: str) -> None:
        nonlocal started
        now = time.perf_counter()
        timings[stage] = now - started
        started = now

    W = numerics.as_matrix(W, "data matrix")
    N = W.shape[1]
    if cfg.num_clusters > N:
        raise ParameterError(f"{cfg.num_clusters} clusters requested for {N} points")
    if cfg.neighbors >= N:
        raise ParameterError(f"{cfg.neighbors} neighbors requested for {N} points")
    if N < cfg.num_clusters * (cfg.subspace_dim + 1):
        logger.warning(
            f"only {N} points for {cfg.num_clusters} subspaces of dimension {cfg.subspace_dim}"
        )

    # 1. Reduction and normalization
    Y = reduce_and_normalize(W, cfg)
    if cfg.subspace_dim >= Y.rank:
        raise ConfigurationError(
            f"subspace_dim {cfg.subspace_dim} >= rank {Y.rank}: local subspaces fill "
            f"the reduced space; distances are identically zero"
        )
    lap("reduce")

    # 2. Local subspaces
    neighbors = neighbor_sets(Y, cfg.neighbors)
    bases = fit_all_local_subspaces(Y, neighbors, cfg.subspace_dim, workers=cfg.workers)
    lap("local_subspaces")

    # 3. Distances and threshold
    H = distance_matrix(Y, bases, cfg.norm_p, workers=cfg.workers)
    eta, t_d = data_driven_threshold(H)
    eta_used, index_used = eta, t_d
    if cfg.threshold_factor != 1.0:
        eta_used, index_used = substitute_threshold(H, t_d, cfg.threshold_factor)
    S = binary_similarity(H, eta_used, index_used)
    lap("similarity")

    # 4. Segmentation
    labels = segment_rows(row_normalize_l1(S), cfg.num_clusters, cfg)
    lap("segment")

    logger.info(
        f"Segmented {N} points: r={Y.rank}, T_d={t_d}, eta={eta_used:.6f}, "
        f"threshold index={index_used}, time={sum(timings.values()):.3f}s"
    )

    diagnostics = Diagnostics(
        rank=Y.rank,
        eta=eta_used,
        threshold_index=index_used,
        data_driven_index=t_d,
        distance=H,
        similarity=S.entries,
        timings=timings,
    )
    return labels, diagnostics
