"""Shared domain types and the visibility-weighted part distance.

Every person (detection or tracklet) is represented by a set of body-part
embeddings plus a foreground embedding, each with a binary visibility flag.
The distance between two such sets is the average Euclidean distance over
their mutually visible indices; pairs with no mutually visible index are
unmatchable and map to +inf in cost matrices.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "NoMutualVisibility",
    "Role",
    "TrackStatus",
    "PartFeatureSet",
    "BoundingBox",
    "Detection",
    "KalmanState",
    "Tracklet",
    "part_distance",
    "part_distance_matrix",
    "iou",
    "iou_matrix",
    "derive_concat",
]


class NoMutualVisibility(Exception):
    """Raised when two feature sets share no visible index."""


class Role(enum.IntEnum):
    # Order matters: ties in role voting break toward the lowest value.
    PLAYER = 0
    GOALKEEPER = 1
    REFEREE = 2
    STAFF = 3


class TrackStatus(enum.Enum):
    TENTATIVE = "tentative"
    CONFIRMED = "confirmed"
    LOST = "lost"
    FINISHED = "finished"


@dataclass(frozen=True)
class PartFeatureSet:
    """K part embeddings, one foreground embedding, and K+1 visibility bits.

    ``visibility`` is ordered (foreground, part 1, ..., part K).  The
    concatenated embedding is derived from ``parts`` on demand.
    """

    parts: np.ndarray        # (K, D)
    foreground: np.ndarray   # (D,)
    visibility: np.ndarray   # (K+1,) of {0, 1}
    global_feat: np.ndarray | None = None  # (D,), training only

    def __post_init__(self):
        parts = np.asarray(self.parts, dtype=float)
        fg = np.asarray(self.foreground, dtype=float)
        vis = np.asarray(self.visibility, dtype=int)
        if parts.ndim != 2 or parts.shape[0] < 1:
            raise ValueError("parts must be a (K, D) array with K >= 1")
        if fg.shape != (parts.shape[1],):
            raise ValueError("foreground dimension must match parts")
        if vis.shape != (parts.shape[0] + 1,):
            raise ValueError("visibility must have K+1 entries")
        if not np.all((vis == 0) | (vis == 1)):
            raise ValueError("visibility entries must be 0 or 1")
        object.__setattr__(self, "parts", parts)
        object.__setattr__(self, "foreground", fg)
        object.__setattr__(self, "visibility", vis)

    @property
    def num_parts(self) -> int:
        return self.parts.shape[0]

    @property
    def dim(self) -> int:
        return self.parts.shape[1]

    @property
    def concat(self) -> np.ndarray:
        """Ordered concatenation of the K part embeddings."""
        return self.parts.reshape(-1)

    def stacked(self) -> np.ndarray:
        """(K+1, D) array ordered (foreground, part 1..K), matching visibility."""
        return np.vstack([self.foreground[None, :], self.parts])


def derive_concat(p: PartFeatureSet) -> np.ndarray:
    """Concatenated embedding f_1..f_K, in part order."""
    return p.concat.copy()


@dataclass(frozen=True)
class BoundingBox:
    """Axis-aligned box, top-left corner plus size, in pixels."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if self.w <= 0 or self.h <= 0:
            raise ValueError("box width and height must be positive")

    @property
    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    @property
    def area(self) -> float:
        return self.w * self.h

    def to_xyah(self) -> np.ndarray:
        """(center x, center y, aspect ratio w/h, height)."""
        cx, cy = self.center
        return np.array([cx, cy, self.w / self.h, self.h])

    @staticmethod
    def from_xyah(xyah: np.ndarray) -> "BoundingBox":
        cx, cy, a, h = [float(v) for v in xyah]
        w = a * h
        return BoundingBox(cx - w / 2.0, cy - h / 2.0, w, h)


@dataclass
class Detection:
    frame: int
    box: BoundingBox
    confidence: float = 1.0
    features: PartFeatureSet | None = None
    role_logits: np.ndarray | None = None  # (4,)
    gt_identity: int | None = None
    gt_team: int | None = None  # 0 = left, 1 = right
    gt_role: Role | None = None


@dataclass
class KalmanState:
    """8-state constant-velocity box state: (cx, cy, a, h) and velocities."""

    mean: np.ndarray        # (8,)
    covariance: np.ndarray  # (8, 8)


@dataclass
class Tracklet:
    id: int
    detections: list[Detection] = field(default_factory=list)
    ema_features: PartFeatureSet | None = None
    kalman: KalmanState | None = None
    status: TrackStatus = TrackStatus.TENTATIVE
    role_logit_sum: np.ndarray | None = None

    @property
    def first_frame(self) -> int:
        return self.detections[0].frame

    @property
    def last_frame(self) -> int:
        return self.detections[-1].frame

    def overlaps(self, other: "Tracklet") -> bool:
        return (self.first_frame <= other.last_frame
                and other.first_frame <= self.last_frame)


def part_distance(q: PartFeatureSet, g: PartFeatureSet) -> float:
    """Average Euclidean distance over mutually visible indices.

    Indices range over (foreground, part 1..K).  Raises
    :class:`NoMutualVisibility` when no index is visible on both sides.
    """
    if q.num_parts != g.num_parts or q.dim != g.dim:
        raise ValueError("feature sets must share K and D")
    mutual = (q.visibility * g.visibility).astype(float)
    denom = mutual.sum()
    if denom == 0:
        raise NoMutualVisibility("no mutually visible body part")
    diffs = q.stacked() - g.stacked()
    dists = np.linalg.norm(diffs, axis=1)
    return float((mutual * dists).sum() / denom)


def part_distance_matrix(
    a: list[PartFeatureSet], b: list[PartFeatureSet]
) -> np.ndarray:
    """Pairwise part distances; +inf where no mutual visibility.

    Vectorized equivalent of calling :func:`part_distance` on every pair.
    """
    if not a or not b:
        return np.zeros((len(a), len(b)))
    fa = np.stack([p.stacked() for p in a])       # (M, K+1, D)
    fb = np.stack([p.stacked() for p in b])       # (N, K+1, D)
    va = np.stack([p.visibility for p in a]).astype(float)
    vb = np.stack([p.visibility for p in b]).astype(float)
    diff = fa[:, None, :, :] - fb[None, :, :, :]  # (M, N, K+1, D)
    dists = np.linalg.norm(diff, axis=3)
    mutual = va[:, None, :] * vb[None, :, :]
    denom = mutual.sum(axis=2)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = (mutual * dists).sum(axis=2) / denom
    out[denom == 0] = np.inf
    return out


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union of two boxes, in [0, 1]."""
    ix = max(0.0, min(a.x + a.w, b.x + b.w) - max(a.x, b.x))
    iy = max(0.0, min(a.y + a.h, b.y + b.h) - max(a.y, b.y))
    inter = ix * iy
    union = a.area + b.area - inter
    return inter / union if union > 0 else 0.0


def iou_matrix(a: list[BoundingBox], b: list[BoundingBox]) -> np.ndarray:
    out = np.zeros((len(a), len(b)))
    for i, box_a in enumerate(a):
        for j, box_b in enumerate(b):
            out[i, j] = iou(box_a, box_b)
    return out
