"""Spherical projection of a point cloud into aligned height/depth images.

Each retained point occupies exactly one pixel: rows bin the vertical
angle (row 0 = lowest beam), columns bin the azimuth.  When several
points collide on a pixel the nearest one wins, so the minimum distance
toward a measurement is always preserved.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from lidarmon.geometry import Point3, PointCloud

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProjectionSpec:
    """Image geometry: row/column counts and the angular ranges they span.

    ``vertical_angles`` optionally replaces uniform row binning with a
    per-layer angle table (sorted ascending, one entry per row) for
    sensors with non-uniform beam spacing.
    """

    num_rows: int
    num_cols: int
    vertical_fov: tuple[float, float]
    azimuth_range: tuple[float, float] = (-math.pi, math.pi)
    vertical_angles: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if self.num_rows < 2 or self.num_cols < 2:
            raise ValueError("projection needs at least 2 rows and 2 columns")
        if not self.vertical_fov[0] < self.vertical_fov[1]:
            raise ValueError("vertical_fov must be (min, max) with min < max")
        if not self.azimuth_range[0] < self.azimuth_range[1]:
            raise ValueError("azimuth_range must be (min, max) with min < max")
        if self.vertical_angles is not None:
            table = tuple(float(a) for a in self.vertical_angles)
            if len(table) != self.num_rows:
                raise ValueError("vertical_angles must have one entry per row")
            if any(b <= a for a, b in zip(table, table[1:])):
                raise ValueError("vertical_angles must be strictly ascending")
            lo, hi = self.vertical_fov
            if table[0] < lo or table[-1] > hi:
                raise ValueError("vertical_angles must lie inside vertical_fov")
            object.__setattr__(self, "vertical_angles", table)


@dataclass(frozen=True, eq=False)
class RangeImages:
    """Aligned height/depth images plus the pixel -> source-point mapping.

    ``valid`` is the authoritative empty-pixel flag channel; height/depth
    values at invalid pixels are zero and must not be consulted.  Heights
    are vehicle-frame z; depth is the 3D range from the sensor.
    """

    height: np.ndarray
    depth: np.ndarray
    valid: np.ndarray
    source_index: np.ndarray
    sensor_origin: Point3
    spec: ProjectionSpec
    num_out_of_fov: int = 0
    num_degenerate: int = 0
    num_collisions: int = 0

    def __post_init__(self) -> None:
        shape = (self.spec.num_rows, self.spec.num_cols)
        for name in ("height", "depth", "valid", "source_index"):
            arr = getattr(self, name)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            arr.setflags(write=False)

    @property
    def num_returns(self) -> int:
        return int(self.valid.sum())


def angles(xyz: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Azimuth and vertical angle of sensor-frame points.

    Azimuth is atan2(y, x) in (-pi, pi]; the vertical angle is the
    elevation above the sensor's horizontal plane.  Points with zero
    planar distance have no defined azimuth (callers must drop them).
    """
    xyz = np.atleast_2d(np.asarray(xyz, dtype=np.float64))
    planar = np.hypot(xyz[:, 0], xyz[:, 1])
    azimuth = np.arctan2(xyz[:, 1], xyz[:, 0])
    vertical = np.arctan2(xyz[:, 2], planar)
    return azimuth, vertical


def _bin_uniform(values: np.ndarray, lo: float, hi: float, count: int) -> tuple[np.ndarray, np.ndarray]:
    """Uniform binning over [lo, hi]; a value exactly on an interior bin
    boundary goes to the higher-index bin, the top edge to the last bin."""
    in_range = (values >= lo) & (values <= hi)
    idx = np.floor((values - lo) / (hi - lo) * count).astype(np.int64)
    np.clip(idx, 0, count - 1, out=idx)
    return idx, in_range


def _bin_table(values: np.ndarray, table: tuple[float, ...], fov: tuple[float, float]) -> tuple[np.ndarray, np.ndarray]:
    angles_arr = np.asarray(table)
    mids = (angles_arr[1:] + angles_arr[:-1]) / 2.0
    idx = np.searchsorted(mids, values, side="right")
    in_range = (values >= fov[0]) & (values <= fov[1])
    return idx, in_range


def project(pcl: PointCloud, spec: ProjectionSpec) -> RangeImages:
    """Project a cloud into height/depth images with one return per pixel.

    On pixel collisions the point with the smaller range survives (ties:
    lower source index), so every non-empty pixel carries the minimum
    distance among the points binned there.  Out-of-FOV points are
    counted, not errors; points coincident with the sensor origin are
    dropped with a diagnostic.
    """
    if len(pcl) == 0:
        raise ValueError(f"frame {pcl.frame_id!r}: cannot project an empty point cloud")

    origin = pcl.sensor_origin.as_array()
    rel = pcl.xyz - origin
    planar = np.hypot(rel[:, 0], rel[:, 1])
    degenerate = planar == 0.0
    num_degenerate = int(degenerate.sum())
    if num_degenerate:
        log.warning(
            "frame %s: dropping %d point(s) coincident with the sensor origin axis",
            pcl.frame_id,
            num_degenerate,
        )

    azimuth, vertical = angles(rel)
    depth = np.linalg.norm(rel, axis=1)

    cols, az_ok = _bin_uniform(azimuth, spec.azimuth_range[0], spec.azimuth_range[1], spec.num_cols)
    if spec.vertical_angles is not None:
        rows, vert_ok = _bin_table(vertical, spec.vertical_angles, spec.vertical_fov)
    else:
        rows, vert_ok = _bin_uniform(vertical, spec.vertical_fov[0], spec.vertical_fov[1], spec.num_rows)

    usable = ~degenerate & az_ok & vert_ok
    num_out_of_fov = int((~degenerate & ~(az_ok & vert_ok)).sum())

    idx = np.nonzero(usable)[0]
    pix = rows[idx] * spec.num_cols + cols[idx]
    # Winner per pixel: smallest depth, then smallest source index.
    order = np.lexsort((idx, depth[idx], pix))
    _, first = np.unique(pix[order], return_index=True)
    winners = idx[order[first]]
    num_collisions = int(len(idx) - len(winners))

    shape = (spec.num_rows, spec.num_cols)
    height = np.zeros(shape, dtype=np.float64)
    depth_img = np.zeros(shape, dtype=np.float64)
    valid = np.zeros(shape, dtype=bool)
    source_index = np.full(shape, -1, dtype=np.int64)

    r, c = rows[winners], cols[winners]
    height[r, c] = pcl.xyz[winners, 2]
    depth_img[r, c] = depth[winners]
    valid[r, c] = True
    source_index[r, c] = winners

    return RangeImages(
        height=height,
        depth=depth_img,
        valid=valid,
        source_index=source_index,
        sensor_origin=pcl.sensor_origin,
        spec=spec,
        num_out_of_fov=num_out_of_fov,
        num_degenerate=num_degenerate,
        num_collisions=num_collisions,
    )


def planar_distance(imgs: RangeImages) -> np.ndarray:
    """Per-pixel horizontal distance from the sensor axis, derived from the
    stored range and the vehicle-frame height."""
    dz = imgs.height - imgs.sensor_origin.z
    sq = np.maximum(imgs.depth**2 - dz**2, 0.0)
    out = np.sqrt(sq)
    out[~imgs.valid] = 0.0
    return out
