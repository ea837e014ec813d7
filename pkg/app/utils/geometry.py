"""
Geometry helpers: camera-aligned frames, axis-aligned boxes, ray casting and
point resampling.
"""

import numpy as np

from models import Camera, Cuboid

UP = np.array([0.0, 0.0, 1.0])

# Ray direction components smaller than this are nudged to avoid 0 * inf
_MIN_DIRECTION = 1e-12


def camera_axes(camera: Camera) -> np.ndarray:
    """
    Rows are the camera-aligned axes in world coordinates: right, forward, up.

    Forward is the viewing direction projected onto the ground plane and
    right = forward x up, so a camera looking along world +y has the identity
    rotation.
    """
    view = np.array(camera.look_at) - np.array(camera.position)
    forward = np.array([view[0], view[1], 0.0])
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, UP)
    return np.stack([right, forward, UP])


def to_camera_frame(points, camera: Camera) -> np.ndarray:
    """Rigidly map world points [n x 3] into camera-aligned axes (origin at the camera)."""
    pts = np.asarray(points, dtype=np.float64)
    return (pts - np.array(camera.position)) @ camera_axes(camera).T


def from_camera_frame(points, camera: Camera) -> np.ndarray:
    """Inverse of to_camera_frame."""
    pts = np.asarray(points, dtype=np.float64)
    return pts @ camera_axes(camera) + np.array(camera.position)


def box_corners(center, half_extents) -> np.ndarray:
    """The 8 corners of an axis-aligned box, [8 x 3]."""
    signs = np.array([[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)])
    return np.asarray(center, dtype=float) + signs * np.asarray(half_extents, dtype=float)


def camera_aabb(cuboid: Cuboid, camera: Camera) -> tuple[np.ndarray, np.ndarray]:
    """Axis-aligned bounds of a cuboid expressed in camera-aligned axes."""
    corners = to_camera_frame(box_corners(cuboid.center, cuboid.half_extents), camera)
    return corners.min(axis=0), corners.max(axis=0)


def interval_overlap(lo_a, hi_a, lo_b, hi_b) -> np.ndarray:
    """Per-axis overlap length of two boxes (negative means a gap)."""
    return np.minimum(hi_a, hi_b) - np.maximum(lo_a, lo_b)


def footprint_overlap(a: Cuboid, b: Cuboid) -> float:
    """Area of the intersection of the two ground-plane footprints."""
    overlap = interval_overlap(a.min_corner[:2], a.max_corner[:2], b.min_corner[:2], b.max_corner[:2])
    return float(max(overlap[0], 0.0) * max(overlap[1], 0.0))


def footprint_area(cuboid: Cuboid) -> float:
    return 4.0 * cuboid.half_extents[0] * cuboid.half_extents[1]


def penetration_depth(a: Cuboid, b: Cuboid) -> float:
    """Smallest per-axis overlap of two boxes; positive only if they interpenetrate."""
    overlap = interval_overlap(a.min_corner, a.max_corner, b.min_corner, b.max_corner)
    return float(overlap.min())


def pixel_rays(camera: Camera) -> np.ndarray:
    """Unit ray directions for every pixel, row-major, [height * width x 3]."""
    width, height = camera.resolution
    forward = np.array(camera.look_at) - np.array(camera.position)
    forward /= np.linalg.norm(forward)
    right = np.cross(forward, UP)
    right /= np.linalg.norm(right)
    up = np.cross(right, forward)
    tan_h = np.tan(camera.horizontal_fov / 2.0)
    tan_v = tan_h * height / width
    u = (2.0 * (np.arange(width) + 0.5) / width - 1.0) * tan_h
    v = (1.0 - 2.0 * (np.arange(height) + 0.5) / height) * tan_v
    uu, vv = np.meshgrid(u, v)
    dirs = forward + uu.reshape(-1, 1) * right + vv.reshape(-1, 1) * up
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


def ray_box_entry(origin, directions: np.ndarray, lows: np.ndarray, highs: np.ndarray) -> np.ndarray:
    """
    Entry distance of every ray into every box, inf where the ray misses.

    Args:
        origin: Shared ray origin [3]
        directions: Ray directions [R x 3]
        lows: Box minimum corners [K x 3]
        highs: Box maximum corners [K x 3]

    Returns:
        Distances [R x K]
    """
    dirs = np.where(np.abs(directions) < _MIN_DIRECTION, _MIN_DIRECTION, directions)
    inv = 1.0 / dirs
    o = np.asarray(origin, dtype=float)
    t1 = (lows[None, :, :] - o) * inv[:, None, :]
    t2 = (highs[None, :, :] - o) * inv[:, None, :]
    t_near = np.minimum(t1, t2).max(axis=2)
    t_far = np.maximum(t1, t2).min(axis=2)
    hit = (t_far >= t_near) & (t_near > 0.0)
    return np.where(hit, t_near, np.inf)


def farthest_point_sample(points: np.ndarray, n: int, start: int = 0) -> np.ndarray:
    """
    Pick n points spread out by greedy farthest-point sampling.

    Fewer than n input points are padded by cycling through them.
    """
    if len(points) == 0:
        return np.zeros((n, 3))
    if len(points) <= n:
        return np.resize(points, (n, 3))
    chosen = np.empty(n, dtype=int)
    chosen[0] = start
    dist = np.linalg.norm(points - points[start], axis=1)
    for k in range(1, n):
        chosen[k] = int(np.argmax(dist))
        dist = np.minimum(dist, np.linalg.norm(points - points[chosen[k]], axis=1))
    return points[chosen]
