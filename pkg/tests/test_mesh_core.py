import math
import time

import numpy as np
from django.test import SimpleTestCase

from planning.exceptions import MeshError, UndefinedScoreError
from planning.services.mesh_core import (
    Submesh,
    TriangleMesh,
    brute_force_boundary,
    score,
    undirected,
    union_boundary,
    union_coverage,
)

from .fixtures import icosphere, random_submesh, unit_square

OUTER_HALF_EDGES = {(0, 1), (1, 2), (2, 3), (3, 0)}


class TriangleMeshTests(SimpleTestCase):
    def test_unit_square_adjacency(self):
        mesh = unit_square()
        self.assertEqual(len(mesh.vertices), 4)
        self.assertEqual(mesh.triangle_count, 2)
        self.assertEqual(mesh.edge_adjacency[(0, 2)], (0, 1))
        self.assertEqual(mesh.edge_adjacency[(0, 1)], (0,))

    def test_normalizes_bounding_diagonal(self):
        mesh = TriangleMesh([(0, 0, 0), (3, 0, 0), (0, 4, 0)], [(0, 1, 2)])
        self.assertAlmostEqual(mesh.bounding_diagonal, 1.0)
        self.assertAlmostEqual(mesh.normalization_scale, 0.2)

    def test_rejects_empty_mesh(self):
        with self.assertRaises(MeshError):
            TriangleMesh([(0, 0, 0)], np.zeros((0, 3), dtype=int))

    def test_rejects_non_manifold_edge(self):
        vertices = [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1)]
        with self.assertRaises(MeshError):
            TriangleMesh(vertices, [(0, 1, 2), (1, 0, 3), (0, 1, 4)])

    def test_rejects_inconsistent_winding(self):
        with self.assertRaises(MeshError):
            TriangleMesh([(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0)], [(0, 1, 2), (0, 3, 2)])

    def test_rejects_bad_index(self):
        with self.assertRaises(MeshError):
            TriangleMesh([(0, 0, 0), (1, 0, 0), (0, 1, 0)], [(0, 1, 3)])

    def test_digest_is_stable(self):
        self.assertEqual(unit_square().digest(), unit_square().digest())
        self.assertNotEqual(unit_square().digest(), unit_square().scaled(2.0).digest())


class BoundaryTests(SimpleTestCase):
    def test_single_triangle_boundary_is_all_edges(self):
        mesh = unit_square()
        self.assertEqual(brute_force_boundary(mesh, [0]), {(0, 1), (1, 2), (2, 0)})

    def test_interior_diagonal_is_dropped(self):
        mesh = unit_square()
        self.assertEqual(brute_force_boundary(mesh, [0, 1]), OUTER_HALF_EDGES)

    def test_icosphere_patch_matches_incidence_count(self):
        mesh = icosphere()
        rng = np.random.default_rng(7)
        tris = rng.choice(mesh.triangle_count, size=40, replace=False)

        counts = {}
        for t in tris:
            for half_edge in mesh.half_edges(int(t)):
                counts[undirected(half_edge)] = counts.get(undirected(half_edge), 0) + 1
        expected = {
            half_edge
            for t in tris
            for half_edge in mesh.half_edges(int(t))
            if counts[undirected(half_edge)] == 1
        }
        self.assertEqual(brute_force_boundary(mesh, tris), expected)

    def test_union_of_unit_square_halves(self):
        mesh = unit_square()
        x1, x2 = Submesh.from_triangles(mesh, [0]), Submesh.from_triangles(mesh, [1])
        self.assertEqual(union_boundary(x1, x2), OUTER_HALF_EDGES)
        union = union_coverage(x1, x2)
        self.assertAlmostEqual(union.area, 1.0)
        self.assertAlmostEqual(union.boundary_length, 4.0)

    def test_union_with_itself_is_unchanged(self):
        mesh = unit_square()
        x = Submesh.from_triangles(mesh, [0])
        self.assertEqual(union_boundary(x, x), x.boundary)

    def test_union_with_empty_returns_first(self):
        mesh = unit_square()
        x = Submesh.from_triangles(mesh, [1])
        self.assertIs(union_coverage(x, Submesh.empty(mesh)), x)

    def test_union_boundary_matches_brute_force_on_icosphere(self):
        mesh = icosphere()
        self.assertEqual(mesh.triangle_count, 1280)
        rng = np.random.default_rng(0)
        pairs = [(random_submesh(mesh, rng), random_submesh(mesh, rng)) for _ in range(500)]

        started = time.perf_counter()
        unions = [union_boundary(x1, x2) for x1, x2 in pairs]
        self.assertLess(time.perf_counter() - started, 10.0)

        for (x1, x2), boundary in zip(pairs, unions):
            self.assertEqual(boundary, brute_force_boundary(mesh, x1.triangles | x2.triangles))

    def test_union_area_matches_recomputation(self):
        mesh = icosphere()
        rng = np.random.default_rng(1)
        for _ in range(50):
            x1, x2 = random_submesh(mesh, rng), random_submesh(mesh, rng)
            union = union_coverage(x1, x2)
            expected = mesh.triangle_area[x1.triangles | x2.triangles].sum()
            self.assertAlmostEqual(union.area, expected, places=12)

    def test_rejects_submeshes_of_different_meshes(self):
        with self.assertRaises(MeshError):
            union_coverage(Submesh.from_triangles(unit_square(), [0]), Submesh.from_triangles(unit_square(), [1]))


class ScoreTests(SimpleTestCase):
    def test_unit_square_lambda_one(self):
        mesh = unit_square()
        self.assertAlmostEqual(score(Submesh.from_triangles(mesh, [0, 1]), 1.0), 0.25)

    def test_half_square_lambda_one(self):
        mesh = unit_square()
        self.assertAlmostEqual(score(Submesh.from_triangles(mesh, [0]), 1.0), 0.5 / (2 + math.sqrt(2)))

    def test_lambda_zero_is_area(self):
        mesh = icosphere()
        x = random_submesh(mesh, np.random.default_rng(3))
        self.assertEqual(score(x, 0.0), x.area)

    def test_empty_submesh_is_undefined(self):
        with self.assertRaises(UndefinedScoreError):
            score(Submesh.empty(unit_square()), 1.0)

    def test_negative_lambda_rejected(self):
        with self.assertRaises(ValueError):
            score(Submesh.from_triangles(unit_square(), [0]), -0.5)

    def test_closed_surface(self):
        mesh = icosphere(subdivisions=1)
        whole = Submesh.from_triangles(mesh, range(mesh.triangle_count))
        self.assertEqual(whole.boundary_length, 0.0)
        self.assertEqual(score(whole, 0.0), whole.area)
        self.assertEqual(score(whole, 1.0), math.inf)

    def test_argmax_survives_rescaling(self):
        mesh = icosphere(subdivisions=2)
        for seed in range(10):
            rng = np.random.default_rng(seed)
            candidates = [random_submesh(mesh, rng) for _ in range(6)]
            for factor in (0.1, 10.0):
                scaled = mesh.scaled(factor)
                rescaled = [Submesh.from_triangles(scaled, x.triangles) for x in candidates]
                for lam in (0.0, 0.5, 1.0, 2.0):
                    self.assertEqual(
                        np.argmax([score(x, lam) for x in rescaled]),
                        np.argmax([score(x, lam) for x in candidates]),
                        f"seed {seed}, factor {factor}, lambda {lam}",
                    )

    def test_long_boundary_penalized_more_as_lambda_grows(self):
        square = Submesh.from_triangles(unit_square(), [0, 1])
        self.assertGreater(square.boundary_length, 1.0)
        scores = [score(square, lam) for lam in (0.0, 0.5, 1.0, 2.0)]
        self.assertEqual(scores, sorted(scores, reverse=True))
        self.assertEqual(len(set(scores)), len(scores))

    def test_short_boundary_rewarded_as_lambda_grows(self):
        small = unit_square().scaled(0.1)
        square = Submesh.from_triangles(small, [0, 1])
        self.assertLess(square.boundary_length, 1.0)
        scores = [score(square, lam) for lam in (0.0, 0.5, 1.0, 2.0)]
        self.assertEqual(scores, sorted(scores))
        self.assertEqual(len(set(scores)), len(scores))


class UnionAreaTests(SimpleTestCase):
    def test_union_never_exceeds_the_sum(self):
        mesh = icosphere(subdivisions=2)
        smallest = float(mesh.triangle_area.min())
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x1, x2 = random_submesh(mesh, rng), random_submesh(mesh, rng)
            total = x1.area + x2.area
            union = union_coverage(x1, x2)
            self.assertLessEqual(union.area, total + 1e-12)
            if (x1.triangles & x2.triangles).any():
                self.assertLess(union.area, total - smallest / 2)

    def test_disjoint_union_is_additive(self):
        mesh = icosphere(subdivisions=2)
        for seed in range(20):
            rng = np.random.default_rng(seed)
            x1 = random_submesh(mesh, rng)
            x2 = Submesh.from_triangles(mesh, (rng.random(mesh.triangle_count) < 0.5) & ~x1.triangles)
            self.assertAlmostEqual(union_coverage(x1, x2).area, x1.area + x2.area, places=12)
