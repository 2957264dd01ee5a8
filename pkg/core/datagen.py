"""
Synthetic ground-truthed data: unions of random subspaces and affine-camera
trajectories of rigidly moving objects.
"""
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator
from scipy import linalg

from config import pipeline_rules
from core import numerics
from core.exceptions import DimensionError, InfeasibleSpecError, InputError, ParameterError
from utils.logger import logger

# Angles within this of pi/2 are treated as a request for orthogonal subspaces
_ORTHOGONAL_SLACK = 1e-9


class UnionSpec(BaseModel):
    """Union of n random d-dimensional subspaces of R^m"""
    ambient_dim: int = Field(..., ge=1)
    subspace_dim: int = Field(..., ge=1)
    num_subspaces: int = Field(..., ge=1)
    points_per_subspace: Union[int, List[int]] = 40
    noise_sigma: float = Field(0.0, ge=0)
    min_principal_angle: Optional[float] = Field(None, ge=0, le=math.pi / 2)  # radians
    seed: int = 0

    @field_validator("points_per_subspace")
    @classmethod
    def check_points(cls, value):
        counts = [value] if isinstance(value, int) else list(value)
        if any(c < 1 for c in counts):
            raise ValueError("every subspace needs at least one point")
        return value

    @model_validator(mode="after")
    def check_dimensions(self):
        if self.subspace_dim > self.ambient_dim:
            raise ValueError("subspace_dim cannot exceed ambient_dim")
        if isinstance(self.points_per_subspace, list) and \
           len(self.points_per_subspace) != self.num_subspaces:
            raise ValueError("points_per_subspace needs one count per subspace")
        if self.wants_orthogonal and self.subspace_dim * self.num_subspaces > self.ambient_dim:
            raise ValueError(
                "pairwise orthogonal subspaces need subspace_dim * num_subspaces <= ambient_dim"
            )
        return self

    @property
    def wants_orthogonal(self) -> bool:
        return self.min_principal_angle is not None and \
            self.min_principal_angle >= np.pi / 2 - _ORTHOGONAL_SLACK

    @property
    def counts(self) -> List[int]:
        if isinstance(self.points_per_subspace, int):
            return [self.points_per_subspace] * self.num_subspaces
        return list(self.points_per_subspace)


@dataclass(frozen=True)
class TrajectorySet:
    """Image tracks of N points over F frames"""
    tracks: np.ndarray                    # N x F x 2
    labels: Optional[np.ndarray] = None   # length N

    def __post_init__(self):
        if self.tracks.ndim != 3 or self.tracks.shape[2] != 2:
            raise DimensionError(f"tracks must have shape (N, F, 2), got {self.tracks.shape}")
        if not np.all(np.isfinite(self.tracks)):
            raise InputError("tracks contain non-finite coordinates")
        if self.labels is not None and len(self.labels) != self.tracks.shape[0]:
            raise DimensionError(f"{len(self.labels)} labels for {self.tracks.shape[0]} tracks")

    @property
    def num_frames(self) -> int:
        return self.tracks.shape[1]

    @property
    def num_points(self) -> int:
        return self.tracks.shape[0]


@dataclass(frozen=True)
class RigidObject:
    """3-D points moved rigidly: frame f sees R_f X + t_f"""
    points: np.ndarray          # 3 x P, object coordinates
    rotations: np.ndarray       # F x 3 x 3
    translations: np.ndarray    # F x 3

    @property
    def num_points(self) -> int:
        return self.points.shape[1]

    def world_points(self, frame: int) -> np.ndarray:
        return self.rotations[frame] @ self.points + self.translations[frame][:, None]


def rotation_matrix(rotvec) -> np.ndarray:
    """3x3 rotation about the axis of rotvec by its norm"""
    a = np.asarray(rotvec, dtype=np.float64)
    return linalg.expm(np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]]))


def random_orthonormal_basis(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    """Orthonormalised Gaussian m x d matrix (rotation-invariant draw)"""
    q, _ = np.linalg.qr(rng.standard_normal((m, d)))
    return q


def draw_subspace_bases(spec: UnionSpec, rng: np.random.Generator) -> List[np.ndarray]:
    """Bases of the n subspaces, honouring min_principal_angle"""
    m, d, n = spec.ambient_dim, spec.subspace_dim, spec.num_subspaces

    if spec.wants_orthogonal:
        # one orthonormal block split into n pieces
        q = random_orthonormal_basis(rng, m, d * n)
        return [q[:, i * d:(i + 1) * d] for i in range(n)]

    bases: List[np.ndarray] = []
    attempts = 0
    while len(bases) < n:
        candidate = random_orthonormal_basis(rng, m, d)
        attempts += 1
        if spec.min_principal_angle is None or all(
            numerics.principal_angles(
                numerics.OrthonormalBasis(candidate), numerics.OrthonormalBasis(other)
            )[0] >= spec.min_principal_angle
            for other in bases
        ):
            bases.append(candidate)
        elif attempts >= pipeline_rules.MAX_REJECTION_ATTEMPTS:
            raise InfeasibleSpecError(
                f"no {n} subspaces with pairwise angle >= {spec.min_principal_angle:.4f} rad "
                f"after {attempts} attempts"
            )
    return bases


def sample_union(spec: UnionSpec, return_bases: bool = False):
    """
    Draw points from a union of random subspaces.

    Returns (W, labels) with points as columns of W, or
    (W, labels, bases) when return_bases is set.
    """
    rng = np.random.default_rng(spec.seed)
    bases = draw_subspace_bases(spec, rng)

    blocks = []
    labels = []
    for label, (basis, count) in enumerate(zip(bases, spec.counts)):
        coefficients = rng.standard_normal((spec.subspace_dim, count))
        coefficients /= np.linalg.norm(coefficients, axis=0)
        blocks.append(basis @ coefficients)
        labels.extend([label] * count)

    W = np.hstack(blocks)
    if spec.noise_sigma > 0:
        W = W + spec.noise_sigma * rng.standard_normal(W.shape)

    logger.info(
        f"Sampled {W.shape[1]} points from {spec.num_subspaces} subspaces "
        f"of dim {spec.subspace_dim} in R^{spec.ambient_dim} (noise={spec.noise_sigma})"
    )

    labels = np.asarray(labels, dtype=np.int64)
    if return_bases:
        return W, labels, bases
    return W, labels


def random_rigid_object(rng: np.random.Generator, num_points: int, num_frames: int,
                        max_angle: float = 0.05, max_shift: float = 0.2,
                        static: bool = False) -> RigidObject:
    """Object with a smooth random rotation and translation per frame"""
    points = rng.uniform(-1.0, 1.0, size=(3, num_points))
    if static:
        rotations = np.repeat(np.eye(3)[None], num_frames, axis=0)
        translations = np.repeat(rng.uniform(-1.0, 1.0, size=(1, 3)), num_frames, axis=0)
        return RigidObject(points=points, rotations=rotations, translations=translations)

    axis = rng.standard_normal(3)
    axis /= np.linalg.norm(axis)
    speed = rng.uniform(max_angle / 2, max_angle)
    steps = np.arange(num_frames)[:, None]
    rotations = np.stack([rotation_matrix(f * speed * axis) for f in range(num_frames)])

    velocity = rng.uniform(-max_shift, max_shift, size=3)
    translations = rng.uniform(-1.0, 1.0, size=3) + steps * velocity
    return RigidObject(points=points, rotations=rotations, translations=translations)


def random_affine_camera(rng: np.random.Generator, num_frames: int,
                         static: bool = False, focal: float = 500.0) -> np.ndarray:
    """F x 2 x 4 affine projections of a slowly moving camera"""
    base = np.zeros((2, 4))
    base[:, :3] = focal * random_orthonormal_basis(rng, 3, 2).T
    base[:, 3] = rng.uniform(200.0, 400.0, size=2)
    if static:
        return np.repeat(base[None], num_frames, axis=0)

    cameras = np.empty((num_frames, 2, 4))
    for f in range(num_frames):
        drift = rotation_matrix([0.0, 0.01 * f, 0.0])
        cameras[f, :, :3] = base[:, :3] @ drift
        cameras[f, :, 3] = base[:, 3] + 2.0 * f
    return cameras


def synth_affine_motion(num_frames: int, objects: Sequence[RigidObject], camera,
                        noise_sigma: float = 0.0, seed: int = 0) -> TrajectorySet:
    """
    Project rigid objects through per-frame affine cameras.

    `camera` is F x 2 x 4 or a single 2 x 4 matrix used for every frame.
    Noise-free tracks of one object span a subspace of dimension <= 4.
    """
    if num_frames < 2:
        raise ParameterError(f"need at least 2 frames, got {num_frames}")
    if not objects:
        raise ParameterError("need at least one object")

    P = np.asarray(camera, dtype=np.float64)
    if P.shape == (2, 4):
        P = np.repeat(P[None], num_frames, axis=0)
    if P.shape != (num_frames, 2, 4):
        raise DimensionError(f"camera must be 2x4 or {num_frames}x2x4, got {P.shape}")
    degenerate = [f for f in range(num_frames) if not np.any(P[f])]
    if degenerate:
        raise InputError(f"camera matrix of frame {degenerate[0]} is zero")

    rng = np.random.default_rng(seed)
    tracks = []
    labels = []
    for label, obj in enumerate(objects):
        if obj.num_points < 4:
            raise ParameterError(f"object {label} has {obj.num_points} points, need at least 4")
        if obj.rotations.shape[0] != num_frames or obj.translations.shape[0] != num_frames:
            raise DimensionError(f"object {label} has motion for a different number of frames")

        block = np.empty((obj.num_points, num_frames, 2))
        for f in range(num_frames):
            homogeneous = np.vstack([obj.world_points(f), np.ones((1, obj.num_points))])
            block[:, f, :] = (P[f] @ homogeneous).T
        tracks.append(block)
        labels.extend([label] * obj.num_points)

    tracks = np.concatenate(tracks, axis=0)
    if noise_sigma > 0:
        tracks = tracks + noise_sigma * rng.standard_normal(tracks.shape)

    return TrajectorySet(tracks=tracks, labels=np.asarray(labels, dtype=np.int64))


def random_motion_scene(num_frames: int, num_objects: int, points_per_object: int,
                        noise_sigma: float = 0.0, seed: int = 0) -> TrajectorySet:
    """Independently moving objects seen by one moving camera"""
    rng = np.random.default_rng(seed)
    objects = [random_rigid_object(rng, points_per_object, num_frames) for _ in range(num_objects)]
    camera = random_affine_camera(rng, num_frames)
    return synth_affine_motion(num_frames, objects, camera, noise_sigma=noise_sigma,
                               seed=int(rng.integers(0, 2 ** 31)))


def trajectory_matrix(ts: TrajectorySet) -> np.ndarray:
    """2F x N matrix; column j is (x_1, y_1, ..., x_F, y_F) of track j"""
    return np.ascontiguousarray(ts.tracks.reshape(ts.num_points, 2 * ts.num_frames).T)


def tracks_from_matrix(W, labels: Optional[np.ndarray] = None) -> TrajectorySet:
    """Inverse of trajectory_matrix"""
    W = np.asarray(W, dtype=np.float64)
    if W.ndim != 2 or W.shape[0] % 2:
        raise DimensionError(f"trajectory matrix needs an even number of rows, got {W.shape}")
    tracks = W.T.reshape(W.shape[1], W.shape[0] // 2, 2).copy()
    return TrajectorySet(tracks=tracks, labels=labels)
