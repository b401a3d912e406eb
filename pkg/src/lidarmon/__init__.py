"""LiDAR perception monitor toolkit.

Filters a raw point cloud through a hierarchical probability pipeline
(model-based obstacle score plus pluggable auxiliary scores with an
overlook-prevention fusion rule), builds an ego-centric occupancy grid,
and validates a primary detector's object list against it.  Ships with
a ray-casting scene synthesizer so the safety properties are testable
without real sensor data.
"""

from lidarmon.errors import ConfigError

__version__ = "0.1.0"

__all__ = ["ConfigError", "__version__"]
