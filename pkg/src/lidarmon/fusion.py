"""Per-point keep/drop fusion of the three scores.

The rule is a disjunction of conjunctive cases with strict lower bounds,
kept as data so extra filters can extend it without code changes.  The
default table guarantees overlook prevention: a point whose model-based
obstacle score exceeds the high threshold is kept no matter what the
auxiliary scores say, and no case admits a point at or below the mid
threshold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from lidarmon.geometry import Point3, PointCloud
from lidarmon.obstacle import ScoreImage
from lidarmon.projection import RangeImages
from lidarmon.scores import ScoreProvider

# JSON keys for the rule table (external interface): min_po / min_pn /
# min_ps are strict lower bounds on the obstacle, objectiveness and
# semantic scores; -1 disables a bound.
_NO_BOUND = -1.0


@dataclass(frozen=True)
class FusionCase:
    min_po: float = _NO_BOUND
    min_pn: float = _NO_BOUND
    min_ps: float = _NO_BOUND

    def __post_init__(self) -> None:
        for name in ("min_po", "min_pn", "min_ps"):
            v = getattr(self, name)
            if v != _NO_BOUND and not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1] or -1, got {v}")


@dataclass(frozen=True)
class FusionRule:
    """Ordered disjunction of cases; a point is kept iff some case's strict
    lower bounds are all exceeded."""

    cases: tuple[FusionCase, ...]

    def __post_init__(self) -> None:
        if not self.cases:
            raise ValueError("fusion rule needs at least one case")

    @classmethod
    def default(
        cls,
        *,
        high_obstacle: float = 0.9,
        mid_obstacle: float = 0.5,
        mid_semantic: float = 0.7,
        low_objectiveness: float = 0.2,
        mid_objectiveness: float = 0.6,
        high_semantic: float = 0.9,
    ) -> "FusionRule":
        if not mid_obstacle < high_obstacle:
            raise ValueError("mid_obstacle must be below high_obstacle")
        for name, v in (
            ("high_obstacle", high_obstacle),
            ("mid_obstacle", mid_obstacle),
            ("mid_semantic", mid_semantic),
            ("low_objectiveness", low_objectiveness),
            ("mid_objectiveness", mid_objectiveness),
            ("high_semantic", high_semantic),
        ):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must be in [0, 1], got {v}")
        return cls(
            cases=(
                FusionCase(min_po=high_obstacle),
                FusionCase(min_po=mid_obstacle, min_ps=mid_semantic, min_pn=low_objectiveness),
                FusionCase(min_po=mid_obstacle, min_pn=mid_objectiveness),
                FusionCase(min_po=mid_obstacle, min_ps=high_semantic),
            )
        )

    @classmethod
    def from_json(cls, text: str) -> "FusionRule":
        raw = json.loads(text)
        if not isinstance(raw, list):
            raise ValueError("rule table JSON must be a list of case objects")
        cases = []
        for entry in raw:
            unknown = set(entry) - {"min_po", "min_pn", "min_ps"}
            if unknown:
                raise ValueError(f"unknown rule table keys: {sorted(unknown)}")
            cases.append(FusionCase(**{k: float(v) for k, v in entry.items()}))
        return cls(cases=tuple(cases))

    def to_json(self) -> str:
        out = []
        for case in self.cases:
            entry = {}
            for key in ("min_po", "min_pn", "min_ps"):
                v = getattr(case, key)
                if v != _NO_BOUND:
                    entry[key] = v
            out.append(entry)
        return json.dumps(out)


def fuse(
    obstacle: np.ndarray | float,
    objectiveness: np.ndarray | float,
    semantic: np.ndarray | float,
    rule: FusionRule | None = None,
) -> np.ndarray | bool:
    """Keep/drop decision per point; strict ``>`` comparisons throughout.

    Scalar inputs give a bool, arrays a bool array.  Out-of-range scores
    are rejected (the caller owns the frame-level diagnostic).
    """
    rule = rule or FusionRule.default()
    scalar = np.isscalar(obstacle) and np.isscalar(objectiveness) and np.isscalar(semantic)
    po = np.atleast_1d(np.asarray(obstacle, dtype=np.float64))
    pn = np.atleast_1d(np.asarray(objectiveness, dtype=np.float64))
    ps = np.atleast_1d(np.asarray(semantic, dtype=np.float64))
    for name, arr in (("obstacle", po), ("objectiveness", pn), ("semantic", ps)):
        bad = int(((arr < 0.0) | (arr > 1.0) | ~np.isfinite(arr)).sum())
        if bad:
            raise ValueError(f"{bad} {name} score(s) outside [0, 1]")

    keep = np.zeros(po.shape, dtype=bool)
    for case in rule.cases:
        keep |= (po > case.min_po) & (pn > case.min_pn) & (ps > case.min_ps)
    return bool(keep[0]) if scalar else keep


@dataclass(frozen=True, eq=False)
class ScoredCloud:
    """All retained (projected) points with their three scores and the
    fused keep verdict; ``cloud_index`` maps rows back to the source cloud."""

    xyz: np.ndarray
    obstacle: np.ndarray
    objectiveness: np.ndarray
    semantic: np.ndarray
    keep: np.ndarray
    cloud_index: np.ndarray
    pixel_rows: np.ndarray
    pixel_cols: np.ndarray
    frame_id: str
    sensor_origin: Point3
    timestamp: float

    def __post_init__(self) -> None:
        n = len(self.xyz)
        for name in ("obstacle", "objectiveness", "semantic", "keep", "cloud_index", "pixel_rows", "pixel_cols"):
            arr = getattr(self, name)
            if len(arr) != n:
                raise ValueError(f"{name} length {len(arr)} != {n}")
            arr.setflags(write=False)
        self.xyz.setflags(write=False)

    def kept_cloud(self) -> PointCloud:
        return PointCloud(
            xyz=self.xyz[self.keep],
            frame_id=self.frame_id,
            sensor_origin=self.sensor_origin,
            timestamp=self.timestamp,
        )


def score_points(
    cloud: PointCloud,
    imgs: RangeImages,
    score_image: ScoreImage,
    objectiveness_provider: ScoreProvider,
    semantic_provider: ScoreProvider,
    rule: FusionRule | None = None,
) -> ScoredCloud:
    """Score the source points of all non-empty pixels and fuse them."""
    rows, cols = np.nonzero(imgs.valid)
    src = imgs.source_index[rows, cols]
    xyz = cloud.xyz[src]
    po = score_image.values[rows, cols]
    pn = objectiveness_provider.scores(xyz)
    ps = semantic_provider.scores(xyz)
    try:
        keep = fuse(po, pn, ps, rule)
    except ValueError as exc:
        raise ValueError(f"frame {cloud.frame_id!r}: {exc}") from exc
    return ScoredCloud(
        xyz=xyz.copy(),
        obstacle=po,
        objectiveness=np.asarray(pn, dtype=np.float64),
        semantic=np.asarray(ps, dtype=np.float64),
        keep=keep,
        cloud_index=src,
        pixel_rows=rows,
        pixel_cols=cols,
        frame_id=cloud.frame_id,
        sensor_origin=cloud.sensor_origin,
        timestamp=cloud.timestamp,
    )


def filter_cloud(
    cloud: PointCloud,
    imgs: RangeImages,
    score_image: ScoreImage,
    objectiveness_provider: ScoreProvider,
    semantic_provider: ScoreProvider,
    rule: FusionRule | None = None,
) -> PointCloud:
    """The source points of all kept pixels, as a new cloud."""
    scored = score_points(cloud, imgs, score_image, objectiveness_provider, semantic_provider, rule)
    return scored.kept_cloud()
