"""Pluggable auxiliary score providers.

A provider assigns each point a relevance probability in [0, 1].  Two
file-backed providers consume precomputed inputs (an ego-centric
objectiveness grid and a class-labeled camera image); a ground-truth
oracle provider substitutes for both in tests.  Providers are read-only
after load and safe to share across workers.  Missing inputs must map to
an all-zero provider so the fusion rule degrades fail-safe.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np

from lidarmon.geometry import BBox3D, CameraCalibration, ObjectList, Point3


class ScoreProvider(ABC):
    """Pure per-point score source: same frame + point always maps to the
    same value in [0, 1]."""

    @abstractmethod
    def scores(self, xyz: np.ndarray) -> np.ndarray:
        """Score an (N, 3) array of vehicle-frame points."""

    def score(self, point: Point3) -> float:
        return float(self.scores(point.as_array()[None, :])[0])


@dataclass(frozen=True)
class ConstantScoreProvider(ScoreProvider):
    value: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.value <= 1.0):
            raise ValueError(f"constant score must be in [0, 1], got {self.value}")

    def scores(self, xyz: np.ndarray) -> np.ndarray:
        return np.full(np.atleast_2d(xyz).shape[0], self.value)


@dataclass(frozen=True, eq=False)
class ObjectivenessGrid:
    """Ego-centered square score grid covering +-extent meters in x and y.

    Rows index x (forward), columns index y (left); cell values are
    occupancy likelihoods in [0, 1].  Points outside the extent score 0.
    """

    values: np.ndarray
    extent: float = 81.92

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2:
            raise ValueError("objectiveness grid must be a 2D matrix")
        if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("objectiveness values must lie in [0, 1]")
        if self.extent <= 0:
            raise ValueError("extent must be positive")
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    def lookup(self, xyz: np.ndarray) -> np.ndarray:
        xyz = np.atleast_2d(np.asarray(xyz, dtype=np.float64))
        rows, cols = self.values.shape
        ri = np.floor((xyz[:, 0] + self.extent) / (2.0 * self.extent) * rows).astype(np.int64)
        ci = np.floor((xyz[:, 1] + self.extent) / (2.0 * self.extent) * cols).astype(np.int64)
        inside = (ri >= 0) & (ri < rows) & (ci >= 0) & (ci < cols)
        out = np.zeros(len(xyz))
        out[inside] = self.values[ri[inside], ci[inside]]
        return out


def objectiveness_lookup(p: Point3, grid: ObjectivenessGrid) -> float:
    """Score of the grid cell containing the point; 0 beyond the extent."""
    return float(grid.lookup(p.as_array()[None, :])[0])


@dataclass(frozen=True)
class ObjectivenessProvider(ScoreProvider):
    grid: ObjectivenessGrid

    def scores(self, xyz: np.ndarray) -> np.ndarray:
        return self.grid.lookup(xyz)


@dataclass(frozen=True, eq=False)
class SemanticImage:
    """Class-labeled camera image plus the set of safety-relevant classes.

    The score of a projected point weights the relevant-class indicator of
    its pixel and the pixel's 4- and diagonal neighbors; off-image
    neighbors contribute nothing.  The default weights sum to exactly 1.
    """

    labels: np.ndarray
    relevant_classes: frozenset[int]
    calib: CameraCalibration
    center_weight: float = 0.5
    edge_weight: float = 0.1
    corner_weight: float = 1.0 / 40.0

    def __post_init__(self) -> None:
        arr = np.asarray(self.labels)
        if arr.ndim != 2:
            raise ValueError("label image must be 2D")
        w, h = self.calib.image_size
        if arr.shape != (h, w):
            raise ValueError(f"label image shape {arr.shape} does not match calibration {(h, w)}")
        if not self.relevant_classes:
            raise ValueError("relevant_classes must not be empty")
        arr.setflags(write=False)
        object.__setattr__(self, "labels", arr)
        object.__setattr__(self, "relevant_classes", frozenset(int(c) for c in self.relevant_classes))

    def _relevance(self) -> np.ndarray:
        rel = np.isin(self.labels, sorted(self.relevant_classes))
        return rel.astype(np.float64)

    def project_scores(self, xyz: np.ndarray) -> np.ndarray:
        """Project vehicle-frame points into the image and score them.

        Points behind the camera or off the image score 0.
        """
        xyz = np.atleast_2d(np.asarray(xyz, dtype=np.float64))
        cam = xyz @ self.calib.rotation.T + self.calib.translation
        out = np.zeros(len(xyz))
        front = cam[:, 2] > 0.0
        if not front.any():
            return out

        k = self.calib.intrinsic
        u = k[0, 0] * cam[front, 0] / cam[front, 2] + k[0, 2]
        v = k[1, 1] * cam[front, 1] / cam[front, 2] + k[1, 2]
        i = np.floor(u).astype(np.int64)
        j = np.floor(v).astype(np.int64)
        w, h = self.calib.image_size
        on_image = (i >= 0) & (i < w) & (j >= 0) & (j < h)

        rel = self._relevance()

        def ind(jj: np.ndarray, ii: np.ndarray) -> np.ndarray:
            ok = (ii >= 0) & (ii < w) & (jj >= 0) & (jj < h)
            vals = np.zeros(len(ii))
            vals[ok] = rel[jj[ok], ii[ok]]
            return vals

        ii, jj = i[on_image], j[on_image]
        score = self.center_weight * ind(jj, ii)
        score += self.edge_weight * (
            ind(jj, ii - 1) + ind(jj, ii + 1) + ind(jj - 1, ii) + ind(jj + 1, ii)
        )
        score += self.corner_weight * (
            ind(jj - 1, ii - 1) + ind(jj - 1, ii + 1) + ind(jj + 1, ii - 1) + ind(jj + 1, ii + 1)
        )

        idx = np.nonzero(front)[0][on_image]
        out[idx] = score
        return out


def semantic_score(p: Point3, image: SemanticImage) -> float:
    """Neighbor-weighted relevance of the pixel the point projects onto."""
    return float(image.project_scores(p.as_array()[None, :])[0])


@dataclass(frozen=True)
class SemanticScoreProvider(ScoreProvider):
    image: SemanticImage

    def scores(self, xyz: np.ndarray) -> np.ndarray:
        return self.image.project_scores(xyz)


@dataclass(frozen=True)
class BoxOracleProvider(ScoreProvider):
    """Ground-truth substitute for the trained score sources: 1 inside any
    annotation box (inflated by ``margin``), else 0."""

    boxes: tuple[BBox3D, ...]
    margin: float = 0.1

    def scores(self, xyz: np.ndarray) -> np.ndarray:
        xyz = np.atleast_2d(np.asarray(xyz, dtype=np.float64))
        inside = np.zeros(len(xyz), dtype=bool)
        for box in self.boxes:
            inside |= box.contains_points(xyz, margin=self.margin)
        return inside.astype(np.float64)


def oracle_scores(p: Point3, annotations: ObjectList | tuple[BBox3D, ...], margin: float = 0.1) -> tuple[float, float]:
    """(objectiveness, semantic) pair from ground truth: (1, 1) inside any
    inflated annotation box, else (0, 0)."""
    boxes = annotations.boxes if isinstance(annotations, ObjectList) else tuple(annotations)
    v = BoxOracleProvider(boxes=boxes, margin=margin).score(p)
    return v, v
