"""
Triangle-mesh geometry, coverage submeshes and the boundary-penalised score.

A submesh is the set of triangles seen by one or more cameras. Its boundary is
kept as a set of oriented half-edges, each oriented the way its owning triangle
winds, while membership in ``edges`` is tested undirected. With that reading
the union boundary formula

    bd(X1 u X2) = [bd(X1) - ed(X2)] u [bd(X2) - ed(X1)] u [bd(X1) n bd(X2)]

drops an edge shared by a triangle of X1 and a neighbouring triangle of X2
(the two half-edges point in opposite directions) and keeps the boundary of a
triangle present in both submeshes.
"""
import hashlib
import logging
import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable

import numpy as np

from ..exceptions import MeshError, UndefinedScoreError

logger = logging.getLogger(__name__)

HalfEdge = tuple[int, int]
Edge = tuple[int, int]


def undirected(half_edge: HalfEdge) -> Edge:
    a, b = half_edge
    return (a, b) if a < b else (b, a)


def _frozen(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


class TriangleMesh:
    """
    Immutable indexed triangle mesh with edge adjacency and per-triangle area.

    Args:
        vertices: (V, 3) vertex coordinates
        triangles: (T, 3) vertex indices with consistent winding
        normalize: rescale so the bounding-box diagonal is 1.0
        normalization_scale: scale already applied to ``vertices`` when
            ``normalize`` is False (restoring a cached, normalized mesh)
    """

    def __init__(self, vertices, triangles, *, normalize: bool = True, normalization_scale: float = 1.0):
        vertices = np.array(vertices, dtype=np.float64)
        triangles = np.array(triangles, dtype=np.int64)

        if triangles.size == 0:
            raise MeshError("Mesh has no triangles")
        if vertices.ndim != 2 or vertices.shape[1] != 3:
            raise MeshError(f"Vertices must have shape (V, 3), got {vertices.shape}")
        if triangles.ndim != 2 or triangles.shape[1] != 3:
            raise MeshError(f"Triangles must have shape (T, 3), got {triangles.shape}")
        if not np.isfinite(vertices).all():
            raise MeshError("Vertex coordinates must be finite")
        if triangles.min() < 0 or triangles.max() >= len(vertices):
            raise MeshError("Triangle references a vertex index out of range")
        repeated = (
            (triangles[:, 0] == triangles[:, 1])
            | (triangles[:, 1] == triangles[:, 2])
            | (triangles[:, 0] == triangles[:, 2])
        )
        if repeated.any():
            raise MeshError(f"Triangle {int(np.flatnonzero(repeated)[0])} repeats a vertex index")

        if normalize:
            diagonal = float(np.linalg.norm(vertices.max(axis=0) - vertices.min(axis=0)))
            if diagonal <= 0.0:
                raise MeshError("Mesh has zero spatial extent")
            normalization_scale = 1.0 / diagonal
            vertices = vertices * normalization_scale
        if normalization_scale <= 0.0:
            raise MeshError("Normalization scale must be positive")

        self.vertices = _frozen(vertices)
        self.triangles = _frozen(triangles)
        self.normalization_scale = float(normalization_scale)

        corners = vertices[triangles]
        normals = np.cross(corners[:, 1] - corners[:, 0], corners[:, 2] - corners[:, 0])
        self.triangle_normals = _frozen(normals)
        self.triangle_area = _frozen(0.5 * np.linalg.norm(normals, axis=1))
        self.centroids = _frozen(corners.mean(axis=1))

        self.edge_adjacency = self._build_adjacency()
        self.edge_length = {
            edge: float(np.linalg.norm(vertices[edge[0]] - vertices[edge[1]]))
            for edge in self.edge_adjacency
        }
        self._digest: bytes | None = None

    def _build_adjacency(self) -> dict[Edge, tuple[int, ...]]:
        adjacency: dict[Edge, list[int]] = defaultdict(list)
        seen_half_edges: set[HalfEdge] = set()
        for t in range(len(self.triangles)):
            for half_edge in self.half_edges(t):
                # a half-edge traversed twice means two triangles disagree on winding
                if half_edge in seen_half_edges:
                    raise MeshError(f"Inconsistent orientation at edge {half_edge} (triangle {t})")
                seen_half_edges.add(half_edge)
                edge = undirected(half_edge)
                adjacency[edge].append(t)
                if len(adjacency[edge]) > 2:
                    raise MeshError(f"Non-manifold edge {edge}: more than 2 incident triangles")
        return {edge: tuple(tris) for edge, tris in adjacency.items()}

    @property
    def triangle_count(self) -> int:
        return len(self.triangles)

    @property
    def bounding_diagonal(self) -> float:
        return float(np.linalg.norm(self.vertices.max(axis=0) - self.vertices.min(axis=0)))

    def half_edges(self, t: int) -> tuple[HalfEdge, HalfEdge, HalfEdge]:
        a, b, c = (int(v) for v in self.triangles[t])
        return (a, b), (b, c), (c, a)

    def triangle_mask(self, tris: Iterable[int] | np.ndarray) -> np.ndarray:
        """Turn triangle indices (or a boolean mask) into a validated boolean mask."""
        if isinstance(tris, np.ndarray) and tris.dtype == np.bool_:
            if tris.shape != (self.triangle_count,):
                raise MeshError(f"Triangle mask has shape {tris.shape}, mesh has {self.triangle_count} triangles")
            return tris.copy()
        indices = np.fromiter((int(t) for t in tris), dtype=np.int64)
        mask = np.zeros(self.triangle_count, dtype=bool)
        if indices.size:
            bad = indices[(indices < 0) | (indices >= self.triangle_count)]
            if bad.size:
                raise MeshError(f"Triangle index {int(bad[0])} out of range [0, {self.triangle_count})")
            mask[indices] = True
        return mask

    def digest(self) -> bytes:
        """sha256 over the (normalized) geometry, stable across platforms."""
        if self._digest is None:
            sha = hashlib.sha256()
            sha.update(self.vertices.astype("<f8").tobytes())
            sha.update(self.triangles.astype("<i8").tobytes())
            self._digest = sha.digest()
        return self._digest

    def scaled(self, factor: float) -> "TriangleMesh":
        """Copy with every coordinate multiplied by ``factor`` (no renormalization)."""
        return TriangleMesh(
            self.vertices * factor,
            self.triangles,
            normalize=False,
            normalization_scale=self.normalization_scale * factor,
        )

    def __repr__(self) -> str:
        return f"TriangleMesh(vertices={len(self.vertices)}, triangles={self.triangle_count})"


def boundary_length(mesh: TriangleMesh, boundary: Iterable[HalfEdge]) -> float:
    return math.fsum(mesh.edge_length[undirected(h)] for h in boundary)


def brute_force_boundary(mesh: TriangleMesh, tris: Iterable[int] | np.ndarray) -> frozenset[HalfEdge]:
    """
    Half-edges whose undirected edge has exactly one incident triangle in ``tris``,
    oriented as in that triangle.
    """
    mask = mesh.triangle_mask(tris)
    incidence: dict[Edge, int] = defaultdict(int)
    owner: dict[Edge, HalfEdge] = {}
    for t in np.flatnonzero(mask):
        for half_edge in mesh.half_edges(int(t)):
            edge = undirected(half_edge)
            incidence[edge] += 1
            owner[edge] = half_edge
    return frozenset(owner[edge] for edge, count in incidence.items() if count == 1)


@dataclass(frozen=True, eq=False)
class Submesh:
    """A coverage set: triangle mask, oriented boundary and cached area/length."""

    mesh: TriangleMesh
    triangles: np.ndarray
    boundary: frozenset[HalfEdge]
    edges: frozenset[Edge]
    area: float
    boundary_length: float

    @classmethod
    def empty(cls, mesh: TriangleMesh) -> "Submesh":
        return cls(mesh, _frozen(np.zeros(mesh.triangle_count, dtype=bool)), frozenset(), frozenset(), 0.0, 0.0)

    @classmethod
    def from_triangles(cls, mesh: TriangleMesh, tris: Iterable[int] | np.ndarray) -> "Submesh":
        mask = mesh.triangle_mask(tris)
        boundary = brute_force_boundary(mesh, mask)
        edges = frozenset(
            undirected(h) for t in np.flatnonzero(mask) for h in mesh.half_edges(int(t))
        )
        return cls(
            mesh,
            _frozen(mask),
            boundary,
            edges,
            float(mesh.triangle_area[mask].sum()),
            boundary_length(mesh, boundary),
        )

    @property
    def is_empty(self) -> bool:
        return not self.triangles.any()

    @property
    def size(self) -> int:
        return int(np.count_nonzero(self.triangles))

    def indices(self) -> np.ndarray:
        return np.flatnonzero(self.triangles)

    def overlaps(self, other: "Submesh") -> bool:
        _check_same_mesh(self, other)
        return bool(np.any(self.triangles & other.triangles))

    def gain(self, other: "Submesh") -> int:
        """Number of triangles of ``other`` not yet in this submesh."""
        _check_same_mesh(self, other)
        return int(np.count_nonzero(other.triangles & ~self.triangles))

    def covers(self, other: "Submesh") -> bool:
        return self.gain(other) == 0

    def __repr__(self) -> str:
        return f"Submesh(triangles={self.size}, area={self.area:.6g}, boundary_length={self.boundary_length:.6g})"


def _check_same_mesh(x1: Submesh, x2: Submesh) -> None:
    if x1.mesh is not x2.mesh:
        raise MeshError("Submeshes belong to different meshes")


def union_boundary(x1: Submesh, x2: Submesh) -> frozenset[HalfEdge]:
    _check_same_mesh(x1, x2)
    only_first = {h for h in x1.boundary if undirected(h) not in x2.edges}
    only_second = {h for h in x2.boundary if undirected(h) not in x1.edges}
    return frozenset(only_first | only_second | (x1.boundary & x2.boundary))


def union_coverage(x1: Submesh, x2: Submesh) -> Submesh:
    _check_same_mesh(x1, x2)
    if x2.is_empty or x1 is x2:
        return x1
    if x1.is_empty:
        return x2
    added = x2.triangles & ~x1.triangles
    if not added.any():
        return x1
    boundary = union_boundary(x1, x2)
    return Submesh(
        x1.mesh,
        _frozen(x1.triangles | x2.triangles),
        boundary,
        x1.edges | x2.edges,
        x1.area + float(x1.mesh.triangle_area[added].sum()),
        boundary_length(x1.mesh, boundary),
    )


def score(x: Submesh, lam: float) -> float:
    """A(x) / L(x)**lam; a closed (boundary-free) submesh scores +inf for lam > 0."""
    if lam < 0:
        raise ValueError(f"lambda must be non-negative, got {lam}")
    if x.is_empty:
        raise UndefinedScoreError("Score is undefined for an empty submesh")
    if lam == 0:
        return x.area
    if x.boundary_length == 0.0:
        return math.inf
    return x.area / x.boundary_length ** lam
