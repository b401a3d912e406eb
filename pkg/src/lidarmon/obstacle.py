"""Model-based obstacle scoring from height/depth images.

Per image column the road surface height is estimated by walking returns
bottom-up while the incline between consecutive returns stays shallow.
Each return is then scored by its height above that road estimate:
returns below the road or above the ceiling clearance are traversable
(score 0), returns in the relevant height band score 1, and the low
ambiguous band is scored by how steep the local incline is.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from lidarmon.projection import RangeImages, planar_distance


@dataclass(frozen=True)
class ObstacleParams:
    """Tunables for road estimation and obstacle scoring (all road-relative).

    max_road_incline: steepest step still classified as road surface.
    ceiling_height: clearance above which returns are traversable again.
    relevant_height: height from which a return is unconditionally an obstacle.
    full_score_incline: incline at which the ambiguous band saturates to 1.
    seed_height_max: max plausible height of the first road return in a column.
    """

    max_road_incline: float = math.radians(5.0)
    ceiling_height: float = 2.8
    relevant_height: float = 0.3
    full_score_incline: float = math.radians(45.0)
    seed_height_max: float = 0.5

    def __post_init__(self) -> None:
        if not (0.0 < self.max_road_incline < self.full_score_incline <= math.pi / 2):
            raise ValueError("need 0 < max_road_incline < full_score_incline <= pi/2")
        if not (0.0 < self.relevant_height < self.ceiling_height):
            raise ValueError("need 0 < relevant_height < ceiling_height")


@dataclass(frozen=True, eq=False)
class RoadEstimate:
    """Per-column road surface height plus coverage flags."""

    height: np.ndarray       # (num_cols,) road height, 0 where not found
    found: np.ndarray        # (num_cols,) a road-classified return exists
    column_empty: np.ndarray  # (num_cols,) column had no returns at all

    def __post_init__(self) -> None:
        for name in ("height", "found", "column_empty"):
            getattr(self, name).setflags(write=False)


@dataclass(frozen=True, eq=False)
class ScoreImage:
    """Per-pixel obstacle score in [0, 1]; empty exactly where the source
    images are empty."""

    values: np.ndarray
    valid: np.ndarray
    road: RoadEstimate

    def __post_init__(self) -> None:
        self.values.setflags(write=False)
        self.valid.setflags(write=False)


def column_inclines(imgs: RangeImages) -> tuple[np.ndarray, np.ndarray]:
    """Incline of each return relative to the nearest non-empty return below
    it in the same column.

    Returns (theta, has_below).  Empty pixels inside a column are skipped,
    so occlusion gaps do not break the walk.  The incline uses the
    planar-distance delta; a non-positive delta (the upper return is not
    farther out) counts as vertical.  Returns without a below-neighbor get
    theta = 0.
    """
    rows, cols = imgs.valid.shape
    row_idx = np.arange(rows)[:, None]
    marker = np.where(imgs.valid, row_idx, -1)
    prev = np.full((rows, cols), -1, dtype=np.int64)
    if rows > 1:
        prev[1:] = np.maximum.accumulate(marker, axis=0)[:-1]
    has_below = imgs.valid & (prev >= 0)

    col_idx = np.broadcast_to(np.arange(cols), (rows, cols))
    safe_prev = np.maximum(prev, 0)
    planar = planar_distance(imgs)
    below_h = imgs.height[safe_prev, col_idx]
    below_p = planar[safe_prev, col_idx]

    dz = np.abs(imgs.height - below_h)
    dp = planar - below_p
    theta = np.where(dp > 0.0, np.arctan2(dz, np.maximum(dp, 1e-12)), math.pi / 2)
    theta = np.where(has_below, theta, 0.0)
    return theta, has_below


def estimate_road_height(imgs: RangeImages, params: ObstacleParams) -> RoadEstimate:
    """Estimate the road surface height per column.

    Walking bottom-up, the first return seeds the road only if its height
    is plausibly near the ground; each further return extends the road
    while the incline to its predecessor stays at or below
    ``max_road_incline``.  The road height is the height of the last
    road-classified return.  Columns with no road get height 0.
    """
    theta, has_below = column_inclines(imgs)

    step_ok = np.where(
        imgs.valid,
        np.where(
            has_below,
            theta <= params.max_road_incline,
            imgs.height <= params.seed_height_max,
        ),
        True,  # empty pixels are neutral in the prefix walk
    )
    road = np.logical_and.accumulate(step_ok, axis=0) & imgs.valid

    rows, cols = imgs.valid.shape
    found = road.any(axis=0)
    last_row = (rows - 1) - np.argmax(road[::-1, :], axis=0)
    height = np.where(found, imgs.height[last_row, np.arange(cols)], 0.0)
    column_empty = ~imgs.valid.any(axis=0)
    return RoadEstimate(height=height, found=found, column_empty=column_empty)


def obstacle_score(imgs: RangeImages, road: RoadEstimate, params: ObstacleParams) -> ScoreImage:
    """Score every return by its height above the column's road estimate.

    h < 0 or h > ceiling  -> 0 (traversable: below road / above clearance)
    relevant <= h <= ceiling -> 1
    0 <= h < relevant        -> incline ramp, clamped to [0, 1]
    """
    h_rel = imgs.height - road.height[None, :]
    theta, _ = column_inclines(imgs)

    ramp = (theta - params.max_road_incline) / (params.full_score_incline - params.max_road_incline)
    np.clip(ramp, 0.0, 1.0, out=ramp)

    values = np.zeros_like(imgs.height)
    full_band = (h_rel >= params.relevant_height) & (h_rel <= params.ceiling_height)
    ramp_band = (h_rel >= 0.0) & (h_rel < params.relevant_height)
    values[full_band] = 1.0
    values[ramp_band] = ramp[ramp_band]
    values[~imgs.valid] = 0.0
    return ScoreImage(values=values, valid=imgs.valid.copy(), road=road)
