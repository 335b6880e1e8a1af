import math

import numpy as np
import pytest

from scenebench.envgen import (
    DEV_BASES,
    CHALLENGE_COUNTS,
    TEST_BASES,
    ChangeBudgetInfeasible,
    EnvSpec,
    VariationSpec,
    decompose_counts,
    generate_base,
    generate_trajectory,
    generate_variations,
    mini_spec,
    plan_variation_sizes,
    preset_spec,
)
from scenebench.geometry import intersection_volume
from scenebench.object_map import diff_to_gt_scd
from scenebench.simworld import segment_clearance


def variation_seeds(seed=0):
    return [seed * 100 + i for i in range(1, 6)]


@pytest.fixture(scope="module")
def mini_base():
    return generate_base(mini_spec("mini", seed=11))


@pytest.fixture(scope="module")
def mini_scenes(mini_base):
    return generate_variations(mini_base, variation_seeds(3))


class TestDecomposition:
    def test_totals_reconstruct(self):
        counts = {"chair": 13, "table": 7, "book": 25, "cup": 1}
        core, exclusive = decompose_counts(counts)
        for name, total in counts.items():
            assert 5 * core.get(name, 0) + exclusive.get(name, 0) == total

    def test_small_residue_promotes_cores(self):
        # residues alone are 3, so whole cores of 5 must be demoted
        counts = {"chair": 40, "book": 3}
        core, exclusive = decompose_counts(counts)
        assert sum(exclusive.values()) >= 20
        assert 5 * core.get("chair", 0) + exclusive.get("chair", 0) == 40

    def test_plan_sizes_bounds(self):
        rng = np.random.default_rng(0)
        for total in range(20, 66):
            sizes = plan_variation_sizes(total, rng)
            assert sum(sizes) == total
            assert all(4 <= s <= 13 for s in sizes)

    def test_plan_sizes_infeasible(self):
        rng = np.random.default_rng(0)
        with pytest.raises(ChangeBudgetInfeasible):
            plan_variation_sizes(19, rng)
        with pytest.raises(ChangeBudgetInfeasible):
            plan_variation_sizes(66, rng)

    def test_variation_spec_validates(self):
        with pytest.raises(ValueError):
            VariationSpec(base_seed=0, index=1, exclusive_count=3, night=False)
        VariationSpec(base_seed=0, index=3, exclusive_count=8, night=True)


class TestGenerateBase:
    def test_deterministic(self):
        spec = mini_spec("mini", seed=5)
        a = generate_base(spec)
        b = generate_base(spec)
        assert a == b

    def test_zero_object_spec_is_valid(self):
        spec = EnvSpec(
            name="bare", size_class="small", bounds=(6.0, 5.0), rooms=1, class_counts={}, seed=2
        )
        base = generate_base(spec)
        assert base.objects == ()

    def test_seed_changes_layout(self):
        a = generate_base(mini_spec("mini", seed=1))
        b = generate_base(mini_spec("mini", seed=2))
        assert a != b

    def test_no_object_interpenetration_within_variations(self, mini_base):
        for var in range(1, 6):
            objs = mini_base.objects_for_variation(var)
            for i in range(len(objs)):
                for j in range(i + 1, len(objs)):
                    assert (
                        intersection_volume(objs[i].cuboid, objs[j].cuboid) == 0.0
                    ), f"{objs[i].instance_id} intersects {objs[j].instance_id}"

    def test_objects_on_or_above_floor(self, mini_base):
        for obj in mini_base.objects:
            bottom = obj.cuboid.center.z - obj.cuboid.extent.z / 2
            assert bottom >= -1e-9

    def test_no_object_crosses_walls(self, mini_base):
        walls = np.asarray(
            [(p1[0], p1[1], p2[0], p2[1]) for p1, p2 in mini_base.walls], dtype=float
        )
        for obj in mini_base.objects:
            x0, y0, x1, y1 = obj.cuboid.footprint()
            corners = np.array([[x0, y0], [x0, y1], [x1, y0], [x1, y1], [(x0 + x1) / 2, (y0 + y1) / 2]])
            # a footprint crossing a wall would put some corner pair on
            # opposite sides; cheap proxy: corners stay off the wall line
            d = segment_clearance(corners, walls)
            assert d.min() > 0.0

    def test_size_presets_scale(self):
        small = generate_base(mini_spec("mini", seed=4))
        assert len(small.rooms) <= 2
        large = generate_base(preset_spec("company", seed=4))
        assert len(large.rooms) >= 5
        assert len(large.objects) > len(small.objects)


class TestVariations:
    def test_five_scenes_with_night_tags(self, mini_scenes):
        assert [s.variation for s in mini_scenes] == [1, 2, 3, 4, 5]
        assert [s.tag for s in mini_scenes] == ["day", "day", "night", "day", "night"]

    def test_pairwise_change_window(self, mini_scenes):
        for i in range(5):
            for j in range(5):
                delta = diff_to_gt_scd(mini_scenes[i].to_gt_map(), mini_scenes[j].to_gt_map())
                if i == j:
                    assert len(delta.objects) == 0
                else:
                    assert 8 <= len(delta.objects) <= 27

    def test_diff_equals_symmetric_difference_of_ids(self, mini_scenes):
        a, b = mini_scenes[0], mini_scenes[3]
        delta = diff_to_gt_scd(a.to_gt_map(), b.to_gt_map())
        ids_a = {o.instance_id for o in a.objects}
        ids_b = {o.instance_id for o in b.objects}
        assert {o.instance_id for o in delta.objects} == ids_a ^ ids_b

    def test_persistent_objects_keep_pose(self, mini_scenes):
        by_id = {}
        for scene in mini_scenes:
            for obj in scene.objects:
                if obj.instance_id in by_id:
                    assert by_id[obj.instance_id] == obj.cuboid
                else:
                    by_id[obj.instance_id] = obj.cuboid

    def test_change_budget_infeasible_for_empty_base(self):
        spec = EnvSpec(
            name="bare", size_class="small", bounds=(6.0, 5.0), rooms=1, class_counts={}, seed=2
        )
        base = generate_base(spec)
        with pytest.raises(ChangeBudgetInfeasible):
            generate_variations(base, variation_seeds())

    def test_deterministic_given_seeds(self, mini_base):
        a = generate_variations(mini_base, variation_seeds(9))
        b = generate_variations(mini_base, variation_seeds(9))
        assert a == b


class TestTrajectory:
    def test_exact_target_length(self, mini_scenes):
        scene = mini_scenes[0]
        for target in (33, 57, 120):
            traj = generate_trajectory(scene, target, rng=np.random.default_rng(1))
            assert len(traj) == target

    def test_nodes_have_clearance(self, mini_scenes):
        scene = mini_scenes[1]
        segs = np.asarray(scene.obstacle_segments(), dtype=float)
        traj = generate_trajectory(scene, 60, rng=np.random.default_rng(2))
        pts = np.array([[p.x, p.y] for p in traj])
        assert segment_clearance(pts, segs).min() >= 0.25

    def test_step_bounds(self, mini_scenes):
        traj = generate_trajectory(mini_scenes[2], 90, rng=np.random.default_rng(3))
        for a, b in zip(traj, traj[1:]):
            assert math.hypot(b.x - a.x, b.y - a.y) <= 1.0 + 1e-9
            d = abs((b.theta - a.theta + math.pi) % (2 * math.pi) - math.pi)
            assert d <= math.pi / 2 + 1e-9

    def test_target_out_of_bounds_rejected(self, mini_scenes):
        with pytest.raises(ValueError):
            generate_trajectory(mini_scenes[0], 32)
        with pytest.raises(ValueError):
            generate_trajectory(mini_scenes[0], 485)

    def test_first_node_is_start(self, mini_scenes):
        scene = mini_scenes[0]
        traj = generate_trajectory(scene, 40, rng=np.random.default_rng(5))
        assert traj[0] == scene.start_pose


class TestChallengePresets:
    @pytest.mark.slow
    def test_distribution_totals_match_exactly(self):
        # summed per-class counts across the five variations equal the
        # configured distribution for every base
        for name in ("miniroom", "house", "apartment", "company", "office"):
            base = generate_base(preset_spec(name, seed=1))
            scenes = generate_variations(base, variation_seeds(1))
            totals = {}
            for scene in scenes:
                for obj in scene.objects:
                    totals[obj.class_name] = totals.get(obj.class_name, 0) + 1
            expected = {k: v for k, v in CHALLENGE_COUNTS[name].items() if v > 0}
            assert totals == expected, name

    def test_splits(self):
        assert set(DEV_BASES) == {"house", "miniroom"}
        assert set(TEST_BASES) == {"apartment", "company", "office"}
