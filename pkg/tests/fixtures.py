"""Meshes and coverage tables shared by the test suites."""
import numpy as np
import trimesh

from planning.services.mesh_core import Submesh, TriangleMesh
from planning.services.oracle_bench import InstanceKind, SyntheticSpec, gen_instance, grid_mesh, rectangle_triangles
from planning.services.visibility import CoverageTable

UNIT_SQUARE_VERTICES = [(0.0, 0.0, 0.0), (1.0, 0.0, 0.0), (1.0, 1.0, 0.0), (0.0, 1.0, 0.0)]
UNIT_SQUARE_TRIANGLES = [(0, 1, 2), (0, 2, 3)]


def unit_square(normalize: bool = False) -> TriangleMesh:
    return TriangleMesh(UNIT_SQUARE_VERTICES, UNIT_SQUARE_TRIANGLES, normalize=normalize)


def stacked_squares() -> TriangleMesh:
    """Two unit squares facing +z, the second 0.5 above the first."""
    lower = np.array(UNIT_SQUARE_VERTICES)
    upper = lower + (0.0, 0.0, 0.5)
    triangles = UNIT_SQUARE_TRIANGLES + [(a + 4, b + 4, c + 4) for a, b, c in UNIT_SQUARE_TRIANGLES]
    return TriangleMesh(np.vstack([lower, upper]), triangles, normalize=False)


def icosphere(subdivisions: int = 3, normalize: bool = True) -> TriangleMesh:
    sphere = trimesh.creation.icosphere(subdivisions=subdivisions)
    return TriangleMesh(sphere.vertices, sphere.faces, normalize=normalize)


def random_submesh(mesh: TriangleMesh, rng: np.random.Generator) -> Submesh:
    density = rng.uniform(0.05, 0.95)
    return Submesh.from_triangles(mesh, rng.random(mesh.triangle_count) < density)


def patch_table(cols: int, rows: int, patches: list[tuple[int, int, int, int]]) -> CoverageTable:
    """Coverage table on a grid mesh, one (x0, y0, width, height) rectangle per view."""
    mesh = grid_mesh(cols, rows)
    coverage = tuple(Submesh.from_triangles(mesh, rectangle_triangles(cols, *patch)) for patch in patches)
    return CoverageTable(mesh, coverage)


def random_table(seed: int, view_count: int = 8, cols: int = 8, rows: int = 6,
                 patch_min: int = 1, patch_max: int = 4) -> CoverageTable:
    spec = SyntheticSpec(
        kind=InstanceKind.RANDOM_PATCHES,
        cols=cols,
        rows=rows,
        view_count=view_count,
        patch_min=patch_min,
        patch_max=patch_max,
        seed=seed,
        certify=False,
    )
    return gen_instance(spec).table


def trap_instance(seed: int = 0, distractors: int | None = None):
    return gen_instance(SyntheticSpec(kind=InstanceKind.GRID_TRAP, seed=seed, distractors=distractors))
