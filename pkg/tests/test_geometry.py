import math

import numpy as np
import pytest

from scenebench.geometry import Cuboid, Vec3, intersection_volume, iou_3d, volume

from oracles import mc_iou, voxel_overlap


def box(cx, cy, cz, ex, ey, ez):
    return Cuboid(Vec3(cx, cy, cz), Vec3(ex, ey, ez))


class TestVolume:
    def test_unit_cube(self):
        assert volume(box(0, 0, 0, 1, 1, 1)) == 1.0

    def test_exact_arithmetic(self):
        assert volume(box(5, -2, 0.3, 2, 3, 0.5)) == 3.0

    def test_cube_law(self):
        assert volume(box(0, 0, 0, 2, 2, 2)) == 8.0


class TestIntersection:
    def test_identical(self):
        a = box(1, 2, 3, 1, 1, 1)
        assert intersection_volume(a, a) == 1.0

    def test_disjoint(self):
        assert intersection_volume(box(0, 0, 0, 1, 1, 1), box(2, 0, 0, 1, 1, 1)) == 0.0

    def test_half_overlap_matches_voxel_oracle(self):
        a = box(0, 0, 0, 1, 1, 1)
        b = box(0.5, 0, 0, 1, 1, 1)
        got = intersection_volume(a, b)
        assert got == pytest.approx(0.5, abs=1e-12)
        oracle = voxel_overlap((0, 0, 0), (1, 1, 1), (0.5, 0, 0), (1, 1, 1), step=0.005)
        assert got == pytest.approx(oracle, abs=0.01)

    def test_self_intersection_equals_volume_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(100):
            c = rng.uniform(-5, 5, 3)
            e = rng.uniform(0.05, 4.0, 3)
            a = box(*c, *e)
            assert intersection_volume(a, a) == volume(a)


class TestIou:
    def test_identity(self):
        a = box(0.3, -1, 2, 2, 1, 0.5)
        assert iou_3d(a, a) == 1.0

    def test_disjoint(self):
        assert iou_3d(box(0, 0, 0, 1, 1, 1), box(0, 3, 0, 1, 1, 1)) == 0.0

    def test_offset_third(self):
        got = iou_3d(box(0, 0, 0, 1, 1, 1), box(0.5, 0, 0, 1, 1, 1))
        assert got == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_range_and_symmetry_fuzz(self):
        rng = np.random.default_rng(42)
        for _ in range(10_000):
            a = box(*rng.uniform(-2, 2, 3), *rng.uniform(0.1, 3.0, 3))
            b = box(*rng.uniform(-2, 2, 3), *rng.uniform(0.1, 3.0, 3))
            v = iou_3d(a, b)
            assert 0.0 <= v <= 1.0
            assert v == iou_3d(b, a)

    def test_translation_invariance(self):
        rng = np.random.default_rng(3)
        for _ in range(200):
            ca = rng.uniform(-2, 2, 3)
            cb = rng.uniform(-2, 2, 3)
            ea = rng.uniform(0.1, 2.0, 3)
            eb = rng.uniform(0.1, 2.0, 3)
            shift = rng.uniform(-30, 30, 3)
            base = iou_3d(box(*ca, *ea), box(*cb, *eb))
            moved = iou_3d(box(*(ca + shift), *ea), box(*(cb + shift), *eb))
            assert moved == pytest.approx(base, abs=1e-12)

    def test_monte_carlo_agreement_spot(self):
        rng = np.random.default_rng(11)
        samples = rng.random((3, 1_000_000))
        for _ in range(20):
            ca = rng.uniform(-1, 1, 3)
            cb = ca + rng.uniform(-1, 1, 3)
            ea = rng.uniform(0.3, 2.0, 3)
            eb = rng.uniform(0.3, 2.0, 3)
            got = iou_3d(box(*ca, *ea), box(*cb, *eb))
            est = mc_iou(ca, ea, cb, eb, samples)
            assert abs(got - est) <= 0.01


class TestValidation:
    def test_zero_extent_rejected(self):
        with pytest.raises(ValueError):
            box(0, 0, 0, 1, 0, 1)

    def test_negative_extent_rejected(self):
        with pytest.raises(ValueError):
            box(0, 0, 0, -1, 1, 1)

    def test_nonfinite_rejected(self):
        with pytest.raises(ValueError):
            Vec3(float("nan"), 0, 0)
        with pytest.raises(ValueError):
            Vec3(float("inf"), 0, 0)
