"""
Per-camera coverage: which triangles each initial view point sees.

A triangle counts as covered by a view when its centroid is inside the view
frustum, it faces the camera and nothing on the mesh lies between its centroid
and the camera position.
"""
import hashlib
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import reduce
from typing import Protocol, Sequence

import numpy as np

from ..exceptions import CoverageError, MeshError, ViewError
from .mesh_core import Submesh, TriangleMesh, union_coverage

logger = logging.getLogger(__name__)

OCCLUSION_EPSILON = 1e-6  # times the mesh bounding diagonal
LEAF_SIZE = 4

Vector = tuple[float, float, float]


def _unit(vector: Sequence[float], name: str) -> Vector:
    array = np.asarray(vector, dtype=np.float64)
    if array.shape != (3,) or not np.isfinite(array).all():
        raise ViewError(f"{name} must be a finite 3-vector, got {vector!r}")
    norm = float(np.linalg.norm(array))
    if norm == 0.0:
        raise ViewError(f"{name} must be non-zero")
    return tuple(float(c) for c in array / norm)


@dataclass(frozen=True)
class ViewPoint:
    """A pinhole camera pose. ``direction`` and ``up`` are normalized on construction."""

    position: Vector
    direction: Vector
    up: Vector
    fov_y: float
    aspect: float
    near: float
    far: float

    def __post_init__(self):
        position = np.asarray(self.position, dtype=np.float64)
        if position.shape != (3,) or not np.isfinite(position).all():
            raise ViewError(f"position must be a finite 3-vector, got {self.position!r}")
        object.__setattr__(self, "position", tuple(float(c) for c in position))
        object.__setattr__(self, "direction", _unit(self.direction, "direction"))
        object.__setattr__(self, "up", _unit(self.up, "up"))
        if np.linalg.norm(np.cross(self.direction, self.up)) < 1e-9:
            raise ViewError("direction and up must not be parallel")
        if not 0.0 < self.near < self.far:
            raise ViewError(f"Need 0 < near < far, got near={self.near}, far={self.far}")
        if not 0.0 < self.fov_y < math.pi:
            raise ViewError(f"fov_y must lie in (0, pi), got {self.fov_y}")
        if not self.aspect > 0.0:
            raise ViewError(f"aspect must be positive, got {self.aspect}")

    def basis(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Orthonormal (forward, right, up) camera frame."""
        forward = np.asarray(self.direction)
        right = np.cross(forward, self.up)
        right /= np.linalg.norm(right)
        return forward, right, np.cross(right, forward)


def ray_triangle_distances(origin, direction, v0, e1, e2) -> np.ndarray:
    """Moller-Trumbore against many triangles at once; ``inf`` where the ray misses."""
    p = np.cross(direction, e2)
    det = np.einsum("ij,ij->i", e1, p)
    parallel = np.abs(det) < 1e-14
    inv_det = 1.0 / np.where(parallel, 1.0, det)
    s = origin - v0
    u = np.einsum("ij,ij->i", s, p) * inv_det
    q = np.cross(s, e1)
    v = (q @ direction) * inv_det
    t = np.einsum("ij,ij->i", e2, q) * inv_det
    hit = ~parallel & (u >= 0.0) & (v >= 0.0) & (u + v <= 1.0)
    return np.where(hit, t, np.inf)


class RayCaster(Protocol):
    def nearest_hit(self, origin, direction, t_min: float = 0.0, t_max: float = math.inf,
                    skip: int | None = None) -> tuple[int, float] | None: ...


class _TriangleData:
    def __init__(self, mesh: TriangleMesh):
        corners = mesh.vertices[mesh.triangles]
        self.v0 = corners[:, 0]
        self.e1 = corners[:, 1] - corners[:, 0]
        self.e2 = corners[:, 2] - corners[:, 0]

    def closest(self, ids: np.ndarray, origin, direction, t_min, t_max, skip) -> tuple[int, float] | None:
        if skip is not None:
            ids = ids[ids != skip]
        if ids.size == 0:
            return None
        distances = ray_triangle_distances(origin, direction, self.v0[ids], self.e1[ids], self.e2[ids])
        distances[(distances <= t_min) | (distances > t_max)] = np.inf
        best = int(np.argmin(distances))
        if not np.isfinite(distances[best]):
            return None
        t = float(distances[best])
        # lowest triangle index among exact ties
        return int(ids[distances == t].min()), t


class LinearScan(_TriangleData):
    """Tests every triangle; the reference the hierarchy must agree with."""

    def __init__(self, mesh: TriangleMesh):
        super().__init__(mesh)
        self._ids = np.arange(mesh.triangle_count)

    def nearest_hit(self, origin, direction, t_min=0.0, t_max=math.inf, skip=None):
        origin = np.asarray(origin, dtype=np.float64)
        direction = np.asarray(direction, dtype=np.float64)
        return self.closest(self._ids, origin, direction, t_min, t_max, skip)


class BoundingVolumeHierarchy(_TriangleData):
    """
    Axis-aligned bounding volume hierarchy over the mesh triangles.

    Nodes are split at the centroid median along their widest axis until at
    most ``LEAF_SIZE`` triangles remain.
    """

    def __init__(self, mesh: TriangleMesh, leaf_size: int = LEAF_SIZE):
        super().__init__(mesh)
        corners = mesh.vertices[mesh.triangles]
        self._tri_min = corners.min(axis=1)
        self._tri_max = corners.max(axis=1)
        self._centroids = mesh.centroids
        self._leaf_size = leaf_size
        self.order = np.arange(mesh.triangle_count)

        self._lo: list[np.ndarray] = []
        self._hi: list[np.ndarray] = []
        self._children: list[tuple[int, int]] = []
        self._span: list[tuple[int, int]] = []
        self._build(0, mesh.triangle_count)

        self.node_min = np.array(self._lo)
        self.node_max = np.array(self._hi)
        logger.debug(f"Built BVH with {len(self._children)} nodes over {mesh.triangle_count} triangles")

    def _build(self, start: int, end: int) -> int:
        ids = self.order[start:end]
        node = len(self._children)
        self._lo.append(self._tri_min[ids].min(axis=0))
        self._hi.append(self._tri_max[ids].max(axis=0))
        self._children.append((-1, -1))
        self._span.append((start, end))
        if end - start <= self._leaf_size:
            return node

        centroids = self._centroids[ids]
        axis = int(np.argmax(centroids.max(axis=0) - centroids.min(axis=0)))
        mid = (end - start) // 2
        # stable ordering keeps the build deterministic for equal centroids
        ranked = np.argsort(centroids[:, axis], kind="stable")
        self.order[start:end] = ids[ranked]
        left = self._build(start, start + mid)
        right = self._build(start + mid, end)
        self._children[node] = (left, right)
        return node

    @property
    def node_count(self) -> int:
        return len(self._children)

    def _box_entry(self, node: int, origin, inv_direction, t_min: float, t_max: float) -> bool:
        t1 = (self.node_min[node] - origin) * inv_direction
        t2 = (self.node_max[node] - origin) * inv_direction
        near = max(float(np.minimum(t1, t2).max()), t_min)
        far = min(float(np.maximum(t1, t2).min()), t_max)
        return near <= far

    def nearest_hit(self, origin, direction, t_min=0.0, t_max=math.inf, skip=None):
        origin = np.asarray(origin, dtype=np.float64)
        direction = np.asarray(direction, dtype=np.float64)
        with np.errstate(over="ignore"):
            inv_direction = 1.0 / np.where(direction == 0.0, 1e-300, direction)

        best: tuple[int, float] | None = None
        limit = t_max
        stack = [0]
        while stack:
            node = stack.pop()
            with np.errstate(over="ignore", invalid="ignore"):
                if not self._box_entry(node, origin, inv_direction, t_min, limit):
                    continue
            left, right = self._children[node]
            if left >= 0:
                stack.append(right)
                stack.append(left)
                continue
            start, end = self._span[node]
            hit = self.closest(self.order[start:end], origin, direction, t_min, limit, skip)
            if hit is None:
                continue
            if best is None or hit[1] < best[1] or (hit[1] == best[1] and hit[0] < best[0]):
                best = hit
                limit = hit[1]
        return best


def build_bvh(mesh: TriangleMesh) -> BoundingVolumeHierarchy:
    return BoundingVolumeHierarchy(mesh)


def is_occluded(caster: RayCaster, origin: np.ndarray, target: np.ndarray, epsilon: float,
                skip: int | None = None) -> bool:
    """Whether the segment origin->target hits the mesh beyond ``epsilon`` from its origin."""
    offset = np.asarray(target, dtype=np.float64) - origin
    distance = float(np.linalg.norm(offset))
    if distance <= epsilon:
        return False
    return caster.nearest_hit(origin, offset / distance, t_min=epsilon, t_max=distance, skip=skip) is not None


def view_coverage(mesh: TriangleMesh, bvh: RayCaster, view: ViewPoint) -> Submesh:
    """Triangles whose centroid the camera sees (frustum, back-face and occlusion tests)."""
    position = np.asarray(view.position)
    forward, right, up = view.basis()
    relative = mesh.centroids - position

    depth = relative @ forward
    tan_y = math.tan(view.fov_y / 2.0)
    tan_x = tan_y * view.aspect
    in_frustum = (
        (depth >= view.near)
        & (depth <= view.far)
        & (np.abs(relative @ up) <= depth * tan_y)
        & (np.abs(relative @ right) <= depth * tan_x)
    )
    front_facing = np.einsum("ij,ij->i", mesh.triangle_normals, -relative) > 0.0

    epsilon = OCCLUSION_EPSILON * mesh.bounding_diagonal
    visible = [
        int(t)
        for t in np.flatnonzero(in_frustum & front_facing)
        if not is_occluded(bvh, mesh.centroids[t], position, epsilon, skip=int(t))
    ]
    return Submesh.from_triangles(mesh, visible)


@dataclass(frozen=True, eq=False)
class CoverageTable:
    """
    Coverage of every initial view point plus their union (the achievable coverage).

    ``views`` may be empty for synthetic tables built directly from patches;
    otherwise it is parallel to ``coverage``.
    """

    mesh: TriangleMesh
    coverage: tuple[Submesh, ...]
    views: tuple[ViewPoint, ...] = ()
    metadata: dict = field(default_factory=dict)
    achievable: Submesh = field(init=False)
    mesh_digest: bytes = field(init=False)

    def __post_init__(self):
        coverage = tuple(self.coverage)
        if not coverage:
            raise CoverageError("Coverage table needs at least one view")
        if self.views and len(self.views) != len(coverage):
            raise CoverageError(f"{len(self.views)} views but {len(coverage)} coverage entries")
        for index, submesh in enumerate(coverage):
            if submesh.mesh is not self.mesh:
                raise MeshError(f"Coverage entry {index} belongs to a different mesh")
        object.__setattr__(self, "coverage", coverage)
        object.__setattr__(self, "views", tuple(self.views))
        object.__setattr__(self, "achievable", reduce(union_coverage, coverage, Submesh.empty(self.mesh)))
        object.__setattr__(self, "mesh_digest", self.mesh.digest())

    def __len__(self) -> int:
        return len(self.coverage)

    def digest(self) -> bytes:
        """sha256 over the mesh digest and every view's triangle list."""
        sha = hashlib.sha256(self.mesh_digest)
        for submesh in self.coverage:
            indices = submesh.indices().astype("<u4")
            sha.update(len(indices).to_bytes(4, "little"))
            sha.update(indices.tobytes())
        return sha.digest()


def precompute_coverage(mesh: TriangleMesh, views: Sequence[ViewPoint], workers: int = 1) -> CoverageTable:
    """Coverage of every view; parallel runs produce the same table as sequential ones."""
    if not views:
        raise CoverageError("Cannot precompute coverage for an empty view list")
    bvh = build_bvh(mesh)

    def compute(indexed_view: tuple[int, ViewPoint]) -> Submesh:
        index, view = indexed_view
        submesh = view_coverage(mesh, bvh, view)
        logger.debug(f"View {index}: {submesh.size} triangles, area {submesh.area:.6g}")
        return submesh

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            coverage = list(pool.map(compute, enumerate(views)))
    else:
        coverage = [compute(item) for item in enumerate(views)]

    table = CoverageTable(mesh, tuple(coverage), tuple(views))
    logger.info(
        f"Precomputed coverage for {len(views)} views: achievable {table.achievable.size}"
        f"/{mesh.triangle_count} triangles"
    )
    return table
