"""Core geometric and sensor-domain types.

The canonical frame is the vehicle frame: x forward, y left, z up, origin
on the ground below the rear-axle center.  All containers state their
frame explicitly; nothing non-finite is admitted past construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

TWO_PI = 2.0 * math.pi


def normalize_yaw(yaw: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return -((-yaw + math.pi) % TWO_PI - math.pi)


def _require_finite(arr: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite values")


@dataclass(frozen=True)
class Point3:
    """A single 3D point; frame is stated by the owning container."""

    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.z)):
            raise ValueError(f"Point3 coordinates must be finite, got ({self.x}, {self.y}, {self.z})")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z], dtype=np.float64)


@dataclass(frozen=True, eq=False)
class PointCloud:
    """One sensor frame of points in the vehicle frame.

    ``xyz`` is an (N, 3) float64 array, made read-only at construction so
    clouds can be shared between workers without copies.
    """

    xyz: np.ndarray
    frame_id: str
    sensor_origin: Point3
    timestamp: float

    def __post_init__(self) -> None:
        arr = np.ascontiguousarray(np.asarray(self.xyz, dtype=np.float64))
        if arr.ndim != 2 or arr.shape[1] != 3:
            raise ValueError(f"point array must have shape (N, 3), got {arr.shape}")
        _require_finite(arr, f"point cloud {self.frame_id!r}")
        arr.setflags(write=False)
        object.__setattr__(self, "xyz", arr)

    def __len__(self) -> int:
        return self.xyz.shape[0]


@dataclass(frozen=True)
class BBox3D:
    """Yaw-rotated 3D bounding box in the vehicle frame.

    ``size`` is (length, width, height): length along the box's local x at
    yaw 0, width along local y, height along z.  Yaw is normalized to
    (-pi, pi] at construction.
    """

    center: Point3
    size: tuple[float, float, float]
    yaw: float
    class_label: str
    object_id: str

    def __post_init__(self) -> None:
        length, width, height = self.size
        if not (length > 0 and width > 0 and height > 0):
            raise ValueError(f"box {self.object_id!r} size components must be positive, got {self.size}")
        object.__setattr__(self, "size", (float(length), float(width), float(height)))
        object.__setattr__(self, "yaw", normalize_yaw(float(self.yaw)))

    @property
    def z_range(self) -> tuple[float, float]:
        return (self.center.z - self.size[2] / 2.0, self.center.z + self.size[2] / 2.0)

    def footprint_corners(self) -> np.ndarray:
        """Corners of the 2D footprint rectangle, (4, 2), counter-clockwise."""
        hl, hw = self.size[0] / 2.0, self.size[1] / 2.0
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.center.x, self.center.y])

    def contains_points(self, xyz: np.ndarray, margin: float = 0.0) -> np.ndarray:
        """Closed inside-test for an (N, 3) array, with optional inflation."""
        xyz = np.asarray(xyz, dtype=np.float64)
        rel = xyz[:, :2] - np.array([self.center.x, self.center.y])
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        u = rel[:, 0] * c + rel[:, 1] * s
        v = -rel[:, 0] * s + rel[:, 1] * c
        hl = self.size[0] / 2.0 + margin
        hw = self.size[1] / 2.0 + margin
        z_lo, z_hi = self.z_range
        return (
            (np.abs(u) <= hl)
            & (np.abs(v) <= hw)
            & (xyz[:, 2] >= z_lo - margin)
            & (xyz[:, 2] <= z_hi + margin)
        )


@dataclass(frozen=True)
class Detection:
    box: BBox3D
    confidence: float

    def __post_init__(self) -> None:
        if not (0.0 <= self.confidence <= 1.0):
            raise ValueError(f"confidence must be in [0, 1], got {self.confidence}")


@dataclass(frozen=True)
class ObjectList:
    """Primary-detector output after the confidence threshold was applied.

    Every retained detection has confidence >= tau_conf; use
    :meth:`ingest` to apply the threshold to raw detector output.
    """

    detections: tuple[Detection, ...]
    tau_conf: float = 0.0

    def __post_init__(self) -> None:
        if not (0.0 <= self.tau_conf <= 1.0):
            raise ValueError(f"tau_conf must be in [0, 1], got {self.tau_conf}")
        for det in self.detections:
            if det.confidence < self.tau_conf:
                raise ValueError(
                    f"detection {det.box.object_id!r} confidence {det.confidence} "
                    f"below tau_conf {self.tau_conf}"
                )

    @classmethod
    def ingest(cls, detections: "list[Detection] | tuple[Detection, ...]", tau_conf: float = 0.0) -> "ObjectList":
        kept = tuple(d for d in detections if d.confidence >= tau_conf)
        return cls(detections=kept, tau_conf=tau_conf)

    @property
    def boxes(self) -> tuple[BBox3D, ...]:
        return tuple(d.box for d in self.detections)

    def __len__(self) -> int:
        return len(self.detections)

    def __iter__(self):
        return iter(self.detections)


def _polygon_is_simple(poly: np.ndarray) -> bool:
    """True if no two non-adjacent edges intersect (O(n^2) segment test)."""
    n = len(poly)
    segs = [(poly[i], poly[(i + 1) % n]) for i in range(n)]

    def _intersects(a, b, c, d) -> bool:
        def orient(p, q, r):
            return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])

        o1, o2 = orient(a, b, c), orient(a, b, d)
        o3, o4 = orient(c, d, a), orient(c, d, b)
        return (o1 * o2 < 0) and (o3 * o4 < 0)

    for i in range(n):
        for j in range(i + 1, n):
            if abs(i - j) in (1, n - 1):
                continue
            if _intersects(*segs[i], *segs[j]):
                return False
    return True


@dataclass(frozen=True)
class SafetyZone:
    """Region ahead of the ego vehicle that the monitor is accountable for.

    Defaults: 36 m forward, 8.5 m to either side.  An optional road mask
    (list of simple polygons, vehicle frame) restricts the zone further.
    """

    forward_extent: float = 36.0
    lateral_extent: float = 8.5
    road_mask: tuple[np.ndarray, ...] | None = None

    def __post_init__(self) -> None:
        if not (self.forward_extent > 0 and self.lateral_extent > 0):
            raise ValueError("zone extents must be positive")
        if self.road_mask is not None:
            polys = []
            for poly in self.road_mask:
                arr = np.asarray(poly, dtype=np.float64)
                if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 3:
                    raise ValueError("road mask polygons must have shape (n>=3, 2)")
                _require_finite(arr, "road mask polygon")
                if not _polygon_is_simple(arr):
                    raise ValueError("road mask polygon is self-intersecting")
                arr.setflags(write=False)
                polys.append(arr)
            object.__setattr__(self, "road_mask", tuple(polys))


def points_in_polygon(xy: np.ndarray, poly: np.ndarray) -> np.ndarray:
    """Closed point-in-polygon test (boundary counts as inside), vectorized."""
    xy = np.atleast_2d(np.asarray(xy, dtype=np.float64))
    x, y = xy[:, 0], xy[:, 1]
    inside = np.zeros(len(xy), dtype=bool)
    on_edge = np.zeros(len(xy), dtype=bool)
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        # Boundary: collinear and within the segment's bounding box.
        cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
        within = (
            (np.abs(cross) <= 1e-9)
            & (x >= min(x1, x2) - 1e-9)
            & (x <= max(x1, x2) + 1e-9)
            & (y >= min(y1, y2) - 1e-9)
            & (y <= max(y1, y2) + 1e-9)
        )
        on_edge |= within
        # Standard even-odd crossing count.
        crosses = ((y1 > y) != (y2 > y)) & (x < (x2 - x1) * (y - y1) / (y2 - y1) + x1)
        inside ^= crosses
    return inside | on_edge


def in_zone(p: Point3, zone: SafetyZone) -> bool:
    """True iff the point lies inside the safety-relevant zone (closed)."""
    return bool(in_zone_mask(p.as_array()[None, :2], zone)[0])


def in_zone_mask(xy: np.ndarray, zone: SafetyZone) -> np.ndarray:
    """Vectorized :func:`in_zone` over an (N, 2) array of x/y positions."""
    xy = np.atleast_2d(np.asarray(xy, dtype=np.float64))
    ok = (
        (xy[:, 0] >= 0.0)
        & (xy[:, 0] <= zone.forward_extent)
        & (np.abs(xy[:, 1]) <= zone.lateral_extent)
    )
    if zone.road_mask is not None:
        in_mask = np.zeros(len(xy), dtype=bool)
        for poly in zone.road_mask:
            in_mask |= points_in_polygon(xy, poly)
        ok &= in_mask
    return ok


def rect_overlap_area_positive(
    center_a: np.ndarray,
    half_a: tuple[float, float],
    yaw_a: float,
    center_b: np.ndarray,
    half_b: tuple[float, float],
    yaw_b: float,
) -> bool:
    """Whether two rotated rectangles intersect with positive area.

    Separating-axis test over the four candidate axes; a pure edge or
    corner touch projects to a zero-length overlap and returns False.
    """
    d = np.asarray(center_b, dtype=np.float64) - np.asarray(center_a, dtype=np.float64)
    axes = []
    for yaw in (yaw_a, yaw_b):
        c, s = math.cos(yaw), math.sin(yaw)
        axes.append((c, s))
        axes.append((-s, c))
    ha = np.array(half_a)
    hb = np.array(half_b)
    ca, sa = math.cos(yaw_a), math.sin(yaw_a)
    cb, sb = math.cos(yaw_b), math.sin(yaw_b)
    ax_a = np.array([[ca, sa], [-sa, ca]])  # rows: rect-a unit axes
    ax_b = np.array([[cb, sb], [-sb, cb]])
    for ux, uy in axes:
        u = np.array([ux, uy])
        ra = ha[0] * abs(ax_a[0] @ u) + ha[1] * abs(ax_a[1] @ u)
        rb = hb[0] * abs(ax_b[0] @ u) + hb[1] * abs(ax_b[1] @ u)
        if abs(d @ u) >= ra + rb - 1e-12:
            return False
    return True


def boxes_overlap_2d(a: BBox3D, b: BBox3D) -> bool:
    """Positive-area overlap of two box footprints (2D, yaw-aware)."""
    return rect_overlap_area_positive(
        np.array([a.center.x, a.center.y]),
        (a.size[0] / 2.0, a.size[1] / 2.0),
        a.yaw,
        np.array([b.center.x, b.center.y]),
        (b.size[0] / 2.0, b.size[1] / 2.0),
        b.yaw,
    )


def box_in_zone(box: BBox3D, zone: SafetyZone) -> bool:
    """Whether a box footprint lies (partly) inside the zone.

    Uses a positive-area overlap test against the zone rectangle.  With a
    road mask the test is approximate: the footprint counts as inside if
    any of its corners or its center passes the point test, or any mask
    vertex falls inside the footprint.
    """
    zone_center = np.array([zone.forward_extent / 2.0, 0.0])
    zone_half = (zone.forward_extent / 2.0, zone.lateral_extent)
    hit = rect_overlap_area_positive(
        np.array([box.center.x, box.center.y]),
        (box.size[0] / 2.0, box.size[1] / 2.0),
        box.yaw,
        zone_center,
        zone_half,
        0.0,
    )
    if not hit or zone.road_mask is None:
        return hit
    probes = np.vstack([box.footprint_corners(), [[box.center.x, box.center.y]]])
    for poly in zone.road_mask:
        if points_in_polygon(probes, poly).any():
            return True
        mid_z = box.center.z
        verts3 = np.column_stack([poly, np.full(len(poly), mid_z)])
        if box.contains_points(verts3).any():
            return True
    return False


@dataclass(frozen=True, eq=False)
class CameraCalibration:
    """Pinhole camera model: intrinsic 3x3 plus a vehicle-to-camera rigid
    transform (p_cam = rotation @ p_vehicle + translation)."""

    intrinsic: np.ndarray
    rotation: np.ndarray
    translation: np.ndarray
    image_size: tuple[int, int]  # (width, height) px

    def __post_init__(self) -> None:
        k = np.asarray(self.intrinsic, dtype=np.float64)
        r = np.asarray(self.rotation, dtype=np.float64)
        t = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if k.shape != (3, 3) or r.shape != (3, 3):
            raise ValueError("intrinsic and rotation must be 3x3 matrices")
        _require_finite(k, "intrinsic")
        _require_finite(r, "rotation")
        _require_finite(t, "translation")
        if k[0, 0] <= 0 or k[1, 1] <= 0:
            raise ValueError("focal lengths must be positive")
        if np.max(np.abs(r @ r.T - np.eye(3))) > 1e-6:
            raise ValueError("extrinsic rotation is not orthonormal within 1e-6")
        w, h = self.image_size
        if w < 1 or h < 1:
            raise ValueError("image size must be positive")
        for name, arr in (("intrinsic", k), ("rotation", r), ("translation", t)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "image_size", (int(w), int(h)))
