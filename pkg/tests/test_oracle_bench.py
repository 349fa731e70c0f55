import numpy as np
from django.test import SimpleTestCase

from planning.exceptions import InstanceError
from planning.services.oracle_bench import (
    ORACLE_VIEW_LIMIT,
    InstanceKind,
    SyntheticSpec,
    exact_min_connected_cover,
    exact_min_cover,
    exhaustive_min_cover,
    gen_instance,
    grid_mesh,
    rectangle_triangles,
)
from planning.services.planner import CoverageState, run_fixed_lambda
from planning.utils.formats import encode_coverage

from .fixtures import patch_table, random_table


class GridTests(SimpleTestCase):
    def test_cell_layout(self):
        mesh = grid_mesh(3, 2)
        self.assertEqual(mesh.triangle_count, 12)
        np.testing.assert_array_equal(mesh.triangle_area, 0.5)
        # cell (1, 1) sits at triangles 8 and 9
        self.assertEqual(rectangle_triangles(3, 1, 1, 1, 1), [8, 9])
        np.testing.assert_allclose(mesh.centroids[8:10, :2].mean(axis=0), [1.5, 1.5])

    def test_faces_point_up(self):
        self.assertTrue((grid_mesh(4, 3).triangle_normals[:, 2] > 0).all())


class SyntheticSpecTests(SimpleTestCase):
    def test_kind_from_string(self):
        self.assertIs(SyntheticSpec(kind="random_patches").kind, InstanceKind.RANDOM_PATCHES)

    def test_certification_view_limit(self):
        with self.assertRaises(InstanceError):
            SyntheticSpec(kind=InstanceKind.RANDOM_PATCHES, view_count=ORACLE_VIEW_LIMIT + 1)
        SyntheticSpec(kind=InstanceKind.RANDOM_PATCHES, view_count=ORACLE_VIEW_LIMIT + 1, certify=False)

    def test_rejects_bad_patch_sizes(self):
        with self.assertRaises(InstanceError):
            SyntheticSpec(kind=InstanceKind.RANDOM_PATCHES, patch_min=3, patch_max=2)


class GenInstanceTests(SimpleTestCase):
    def test_trap_is_certified(self):
        for seed in range(10):
            instance = gen_instance(SyntheticSpec(kind=InstanceKind.GRID_TRAP, seed=seed))
            self.assertEqual(instance.oracle_count, 2, f"seed {seed}")
            self.assertEqual(instance.greedy_count, 3, f"seed {seed}")
            self.assertGreaterEqual(instance.connected_oracle_count, instance.oracle_count)
            self.assertEqual(instance.table.metadata["oracle_count"], 2)
            self.assertEqual(set(instance.roles.values()), set(range(len(instance.table))))

    def test_trap_squares_form_the_oracle_cover(self):
        instance = gen_instance(SyntheticSpec(kind=InstanceKind.GRID_TRAP, seed=4, distractors=1))
        roles = instance.roles
        state = CoverageState.from_views(instance.table, [roles["square_a"], roles["square_b"]])
        np.testing.assert_array_equal(state.covered.triangles, instance.table.achievable.triangles)
        self.assertEqual(len(instance.table), 4)

    def test_one_full_patch(self):
        spec = SyntheticSpec(kind=InstanceKind.RANDOM_PATCHES, cols=4, rows=4, view_count=1, patch_min=4, patch_max=4)
        instance = gen_instance(spec)
        self.assertEqual((instance.oracle_count, instance.greedy_count), (1, 1))
        self.assertEqual(instance.table.coverage[0].size, 32)

    def test_same_seed_same_bytes(self):
        spec = SyntheticSpec(kind=InstanceKind.RANDOM_PATCHES, view_count=10, seed=12)
        self.assertEqual(encode_coverage(gen_instance(spec).table), encode_coverage(gen_instance(spec).table))

    def test_uncertified_has_no_oracle(self):
        spec = SyntheticSpec(kind=InstanceKind.RANDOM_PATCHES, view_count=30, certify=False)
        instance = gen_instance(spec)
        self.assertIsNone(instance.oracle_count)
        self.assertNotIn("oracle_count", instance.table.metadata)


class ExactCoverTests(SimpleTestCase):
    def test_one_view(self):
        table = patch_table(3, 3, [(0, 0, 3, 3)])
        plan = exact_min_cover(table, 1.0)
        self.assertEqual(plan.order, (0,))
        self.assertEqual(plan.final_coverage_fraction, 1.0)

    def test_two_disjoint_views(self):
        table = patch_table(4, 1, [(0, 0, 2, 1), (2, 0, 2, 1)])
        self.assertEqual(len(exact_min_cover(table, 1.0)), 2)

    def test_skips_redundant_views(self):
        table = patch_table(4, 2, [(0, 0, 2, 2), (1, 0, 2, 2), (2, 0, 2, 2), (0, 0, 1, 1)])
        self.assertEqual(sorted(exact_min_cover(table, 1.0).order), [0, 2])

    def test_matches_exhaustive_search(self):
        for seed in range(50):
            table = random_table(seed, view_count=4 + seed % 9)
            for rcc in (1.0, 0.8):
                exact = exact_min_cover(table, rcc)
                exhaustive = exhaustive_min_cover(table, rcc)
                self.assertEqual(len(exact), len(exhaustive), f"seed {seed}, rcc {rcc}")
                self.assertGreaterEqual(exact.final_coverage_fraction, rcc - 1e-12)
            self.assertGreaterEqual(len(run_fixed_lambda(table, 0.0, 1.0)), len(exact_min_cover(table, 1.0)))

    def test_full_rcc_covers_achievable(self):
        for seed in range(10):
            table = random_table(seed, view_count=12)
            state = CoverageState.from_views(table, exact_min_cover(table, 1.0).order)
            np.testing.assert_array_equal(state.covered.triangles, table.achievable.triangles)

    def test_too_many_views(self):
        table = random_table(0, view_count=ORACLE_VIEW_LIMIT + 1)
        with self.assertRaises(InstanceError):
            exact_min_cover(table, 1.0)


class ConnectedCoverTests(SimpleTestCase):
    def test_disjoint_views_have_no_connected_cover(self):
        table = patch_table(4, 1, [(0, 0, 2, 1), (2, 0, 2, 1)])
        plan = exact_min_connected_cover(table, 1.0)
        self.assertFalse(plan.complete)
        self.assertEqual(plan.order, ())

    def test_bridge_view_is_added(self):
        table = patch_table(6, 1, [(0, 0, 3, 1), (3, 0, 3, 1), (2, 0, 2, 1)])
        self.assertEqual(len(exact_min_cover(table, 1.0)), 2)
        plan = exact_min_connected_cover(table, 1.0)
        self.assertTrue(plan.complete)
        self.assertEqual(len(plan), 3)
        self.assertEqual(plan.method, "exact-connected")
