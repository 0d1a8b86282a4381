"""Rigid transforms, triangle meshes, and the pose-chain algebra.

Every pose in the pipeline (object-to-hand, hand-to-camera, world-to-camera,
object-to-world, hand-to-world) is a :class:`RigidTransform`.  All types here
are immutable value types; every operation is pure.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.spatial import ConvexHull
from scipy.spatial.transform import Rotation

# Centralized tolerances: 1e-9 for transform algebra, 1e-6 for unit normals.
GEOM_TOL = 1e-9
NORMAL_TOL = 1e-6

HAND_VERTEX_COUNT = 778

# Above this vertex count the diameter switches to the convex-hull path.
_EXACT_DIAMETER_LIMIT = 5000


class Direction(Enum):
    """Which way to convert a pose between hand and world coordinates."""

    TO_WORLD = "to_world"
    TO_HAND = "to_hand"


def _orthonormalize(rotation: np.ndarray) -> np.ndarray:
    """Project a near-rotation matrix onto SO(3) via SVD."""
    u, _, vt = np.linalg.svd(rotation)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] = -u[:, -1]
        r = u @ vt
    return r


def _rotation_drift(rotation: np.ndarray) -> float:
    return float(np.abs(rotation.T @ rotation - np.eye(3)).max())


@dataclass(frozen=True)
class RigidTransform:
    """An SE(3) element: 3x3 orthonormal rotation plus translation in meters."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        rotation = np.asarray(self.rotation, dtype=np.float64).reshape(3, 3)
        translation = np.asarray(self.translation, dtype=np.float64).reshape(3)
        if not np.isfinite(rotation).all() or not np.isfinite(translation).all():
            raise ValueError("transform contains non-finite values")
        if _rotation_drift(rotation) > GEOM_TOL or abs(np.linalg.det(rotation) - 1.0) > 1e-8:
            raise ValueError("rotation is not orthonormal with determinant +1")
        rotation.setflags(write=False)
        translation.setflags(write=False)
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    @staticmethod
    def identity() -> "RigidTransform":
        return RigidTransform(np.eye(3), np.zeros(3))

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform an (M, 3) array of points (or a single 3-vector)."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation


def compose(a: RigidTransform, b: RigidTransform) -> RigidTransform:
    """Composition a∘b: apply ``b`` first, then ``a``."""
    rotation = a.rotation @ b.rotation
    if _rotation_drift(rotation) > GEOM_TOL:
        rotation = _orthonormalize(rotation)
    translation = a.rotation @ b.translation + a.translation
    return RigidTransform(rotation, translation)


def invert(t: RigidTransform) -> RigidTransform:
    """Inverse transform; compose(t, invert(t)) is the identity."""
    r_inv = t.rotation.T
    return RigidTransform(r_inv, -(r_inv @ t.translation))


@dataclass(frozen=True)
class ScaledPose:
    """A rigid pose with a positive global scale multiplier on object vertices."""

    pose: RigidTransform
    scale: float

    def __post_init__(self):
        object.__setattr__(self, "scale", float(self.scale))
        if not (self.scale > 0.0 and np.isfinite(self.scale)):
            raise ValueError("scale must be a positive finite scalar")

    def apply(self, points: np.ndarray) -> np.ndarray:
        return self.pose.apply(self.scale * np.asarray(points, dtype=np.float64))


@dataclass(frozen=True)
class TriMesh:
    """Vertex/face arrays for an object or hand mesh.

    ``convex`` marks meshes whose solid is convex; the silhouette rasterizer
    uses it to take an exact fast path.  Vertex normals are derived lazily as
    area-weighted face normals.
    """

    vertices: np.ndarray
    faces: np.ndarray
    convex: bool = False

    def __post_init__(self):
        vertices = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if not np.isfinite(vertices).all():
            raise ValueError("mesh vertices contain non-finite values")
        if faces.size and (faces.min() < 0 or faces.max() >= len(vertices)):
            raise ValueError("face index out of range")
        vertices.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "faces", faces)

    @property
    def num_vertices(self) -> int:
        return len(self.vertices)

    @property
    def vertex_normals(self) -> np.ndarray:
        """Unit per-vertex normals (area-weighted face normal accumulation)."""
        cached = self.__dict__.get("_vertex_normals")
        if cached is None:
            cached = vertex_normals(self.vertices, self.faces)
            cached.setflags(write=False)
            self.__dict__["_vertex_normals"] = cached
        return cached


def vertex_normals(vertices: np.ndarray, faces: np.ndarray) -> np.ndarray:
    """Area-weighted vertex normals; raises if any vertex has no face support."""
    normals = np.zeros_like(vertices)
    tri = vertices[faces]
    face_n = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    for k in range(3):
        np.add.at(normals, faces[:, k], face_n)
    lengths = np.linalg.norm(normals, axis=1)
    if (lengths < 1e-14).any():
        raise ValueError("mesh has vertices with degenerate normal support")
    return normals / lengths[:, None]


@dataclass(frozen=True)
class HandRegionMap:
    """Eight labeled contact regions of the 778-vertex hand: 5 fingertips + 3 palm areas."""

    fingertip_regions: tuple
    palm_regions: tuple

    def __post_init__(self):
        fingertips = tuple(np.asarray(r, dtype=np.int64) for r in self.fingertip_regions)
        palms = tuple(np.asarray(r, dtype=np.int64) for r in self.palm_regions)
        if len(fingertips) != 5 or len(palms) != 3:
            raise ValueError("expected 5 fingertip regions and 3 palm regions")
        seen = set()
        for region in fingertips + palms:
            if region.size == 0:
                raise ValueError("contact regions must be nonempty")
            if region.min() < 0 or region.max() >= HAND_VERTEX_COUNT:
                raise ValueError("region index out of range")
            ids = set(region.tolist())
            if seen & ids:
                raise ValueError("contact regions must be pairwise disjoint")
            seen |= ids
        for region in fingertips + palms:
            region.setflags(write=False)
        object.__setattr__(self, "fingertip_regions", fingertips)
        object.__setattr__(self, "palm_regions", palms)

    @property
    def all_region_indices(self) -> np.ndarray:
        """Sorted union of all 8 region index sets."""
        return np.sort(np.concatenate(self.fingertip_regions + self.palm_regions))


def object_vertices_in_camera_via_hand(
    obj: TriMesh, sp: ScaledPose, h2c: RigidTransform
) -> np.ndarray:
    """Object vertices in camera coordinates through the hand chain.

    ``sp`` holds the object-to-hand pose and scale; result is
    h2c(o2h(scale * V)) applied per vertex.
    """
    if obj.num_vertices == 0:
        raise ValueError("object mesh is empty")
    return h2c.apply(sp.apply(obj.vertices))


def object_vertices_in_camera_via_world(
    obj: TriMesh, sp: ScaledPose, w2c: RigidTransform
) -> np.ndarray:
    """Object vertices in camera coordinates through the world chain (o2w then w2c)."""
    if obj.num_vertices == 0:
        raise ValueError("object mesh is empty")
    return w2c.apply(sp.apply(obj.vertices))


def convert_o2h_o2w(
    pose: RigidTransform, h2w: RigidTransform, direction: Direction
) -> RigidTransform:
    """Convert an object pose between hand and world coordinates.

    TO_WORLD treats ``pose`` as object-to-hand and returns h2w∘pose;
    TO_HAND treats it as object-to-world and returns h2w⁻¹∘pose.
    """
    if direction is Direction.TO_WORLD:
        return compose(h2w, pose)
    if direction is Direction.TO_HAND:
        return compose(invert(h2w), pose)
    raise ValueError(f"unknown direction: {direction!r}")


def mesh_diameter(obj: TriMesh) -> float:
    """Maximum pairwise vertex distance in meters.

    Exact for small meshes; larger meshes go through the convex hull first,
    which leaves the result unchanged (diameter endpoints are hull vertices).
    """
    verts = obj.vertices
    if len(verts) < 2:
        raise ValueError("mesh diameter requires at least 2 vertices")
    if len(verts) > _EXACT_DIAMETER_LIMIT:
        try:
            verts = verts[ConvexHull(verts).vertices]
        except Exception:
            pass  # degenerate (planar/collinear) input: fall through to exact scan
    best = 0.0
    chunk = 512
    for start in range(0, len(verts), chunk):
        block = verts[start : start + chunk]
        d2 = ((block[:, None, :] - verts[None, :, :]) ** 2).sum(axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


# ---------------------------------------------------------------------------
# Rotation utilities (axis-angle lives only at the optimizer boundary).


def rotation_from_rotvec(rotvec: np.ndarray) -> np.ndarray:
    """Rotation matrix from an axis-angle 3-vector (radians)."""
    return Rotation.from_rotvec(np.asarray(rotvec, dtype=np.float64)).as_matrix()


def rotvec_from_rotation(rotation: np.ndarray) -> np.ndarray:
    """Axis-angle 3-vector of a rotation matrix; magnitude in [0, pi]."""
    return Rotation.from_matrix(np.asarray(rotation, dtype=np.float64)).as_rotvec()


def rotation_about_axis(axis: np.ndarray, angle: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=np.float64)
    norm = np.linalg.norm(axis)
    if norm == 0:
        raise ValueError("rotation axis must be nonzero")
    return rotation_from_rotvec(axis / norm * angle)


def rotation_between(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Smallest rotation mapping direction ``a`` onto direction ``b``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a / np.linalg.norm(a)
    b = b / np.linalg.norm(b)
    cross = np.cross(a, b)
    dot = float(np.dot(a, b))
    if np.linalg.norm(cross) < 1e-12:
        if dot > 0:
            return np.eye(3)
        # Antiparallel: rotate pi about any axis orthogonal to a.
        helper = np.array([1.0, 0.0, 0.0])
        if abs(a[0]) > 0.9:
            helper = np.array([0.0, 1.0, 0.0])
        axis = np.cross(a, helper)
        return rotation_about_axis(axis, np.pi)
    angle = np.arctan2(np.linalg.norm(cross), dot)
    return rotation_about_axis(cross, angle)


def geodesic_angle(r_a: np.ndarray, r_b: np.ndarray) -> float:
    """Geodesic distance (radians) between two rotation matrices."""
    cos = (np.trace(r_a.T @ r_b) - 1.0) / 2.0
    return float(np.arccos(np.clip(cos, -1.0, 1.0)))


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation matrix (via normalized quaternion)."""
    quat = rng.normal(size=4)
    quat /= np.linalg.norm(quat)
    return Rotation.from_quat(quat).as_matrix()


def interpolate_pose(a: RigidTransform, b: RigidTransform, t: float) -> RigidTransform:
    """Geodesic rotation + linear translation interpolation, t in [0, 1]."""
    delta = rotvec_from_rotation(a.rotation.T @ b.rotation)
    rotation = a.rotation @ rotation_from_rotvec(t * delta)
    translation = (1.0 - t) * a.translation + t * b.translation
    return RigidTransform(rotation, translation)
