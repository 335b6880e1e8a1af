import math

import numpy as np
import pytest

from scenebench.geometry import Cuboid, Vec3
from scenebench.object_map import (
    CLASS_LIST,
    GroundTruthMap,
    GroundTruthObject,
    LabelDistribution,
    ObjectMap,
    ProposedObject,
    StateDistribution,
    TaskKind,
    TaskMismatch,
    gt_as_proposal,
)
from scenebench.omq import (
    evaluate,
    fp_cost,
    fp_cost_scd,
    label_quality,
    pairwise_quality,
    pairwise_quality_scd,
    spatial_quality,
    state_quality,
)

from oracles import brute_force_omq


def box(cx=0.0, cy=0.0, cz=0.0, ex=1.0, ey=1.0, ez=1.0):
    return Cuboid(Vec3(cx, cy, cz), Vec3(ex, ey, ez))


def prop(cuboid=None, labels=None, state=None):
    return ProposedObject(
        cuboid or box(),
        LabelDistribution(labels if labels is not None else {"chair": 1.0}),
        StateDistribution(**state) if state else None,
    )


def gt(cuboid=None, label="chair", iid="g0", state=None):
    return GroundTruthObject(cuboid or box(), label, iid, state)


class TestQualities:
    def test_label_direct_readout(self):
        assert label_quality(prop(labels={"chair": 0.7, "table": 0.2}), gt()) == 0.7

    def test_label_zero_mass(self):
        assert label_quality(prop(labels={"table": 0.9}), gt()) == 0.0

    def test_label_uniform(self):
        uniform = {c: 1.0 / 25.0 for c in CLASS_LIST}
        assert label_quality(prop(labels=uniform), gt(label="tv")) == pytest.approx(0.04)

    def test_spatial_delegates_to_iou(self):
        assert spatial_quality(prop(), gt()) == 1.0
        assert spatial_quality(prop(box(9, 9, 9)), gt()) == 0.0
        q = spatial_quality(prop(box(0.5)), gt())
        assert q == pytest.approx(1.0 / 3.0, abs=1e-12)

    def test_pairwise_exact_arithmetic(self):
        # Q_Sp = 1/3 via the offset cube, Q_L = 0.75 -> sqrt(0.25) = 0.5
        o = prop(box(0.5), labels={"chair": 0.75})
        assert pairwise_quality(o, gt()) == pytest.approx(0.5, abs=1e-12)

    def test_pairwise_zero_annihilates(self):
        assert pairwise_quality(prop(box(9, 9, 9)), gt()) == 0.0
        assert pairwise_quality(prop(labels={"table": 1.0}), gt()) == 0.0

    def test_pairwise_identity(self):
        assert pairwise_quality(prop(), gt()) == 1.0

    def test_state_quality(self):
        o = prop(state={"added": 0.8, "removed": 0.1, "same": 0.1})
        assert state_quality(o, gt(state="added")) == 0.8
        o2 = prop(state={"added": 0.0, "removed": 0.0, "same": 1.0})
        assert state_quality(o2, gt(state="removed")) == 0.0
        thirds = {"added": 1 / 3, "removed": 1 / 3, "same": 1 / 3}
        assert state_quality(prop(state=thirds), gt(state="added")) == pytest.approx(1 / 3)

    def test_state_quality_requires_state(self):
        with pytest.raises(TaskMismatch):
            state_quality(prop(), gt(state="added"))

    def test_pairwise_scd_geometric_mean_fixed_point(self):
        # all three factors 0.8: offset chosen so IoU(unit cubes) = 0.8
        # overlap/(2 - overlap) = 0.8 -> overlap = 8/9 -> offset = 1/9
        o = prop(
            box(1.0 / 9.0),
            labels={"chair": 0.8},
            state={"added": 0.8, "removed": 0.1, "same": 0.1},
        )
        g = gt(state="added")
        assert spatial_quality(o, g) == pytest.approx(0.8, abs=1e-12)
        assert pairwise_quality_scd(o, g) == pytest.approx(0.8, abs=1e-9)

    def test_pairwise_scd_zero_factor(self):
        o = prop(labels={"chair": 0.9}, state={"added": 0.0, "removed": 0.0, "same": 1.0})
        assert pairwise_quality_scd(o, gt(state="added")) == 0.0

    def test_scd_power_identity_with_one_hot_state(self):
        rng = np.random.default_rng(17)
        for _ in range(200):
            offset = float(rng.uniform(-0.8, 0.8))
            mass = float(rng.uniform(0.05, 1.0))
            o_slam = prop(box(offset), labels={"chair": mass})
            o_scd = prop(box(offset), labels={"chair": mass}, state={"added": 1.0, "removed": 0.0, "same": 0.0})
            g = gt(state="added")
            g_slam = gt()
            poq = pairwise_quality(o_slam, g_slam)
            poq_scd = pairwise_quality_scd(o_scd, g)
            assert poq_scd == pytest.approx(poq ** (2.0 / 3.0), abs=1e-12)


class TestFalsePositiveCost:
    def test_max_entry(self):
        assert fp_cost(prop(labels={"chair": 0.6, "table": 0.3})) == 0.6

    def test_pure_background_belief(self):
        assert fp_cost(prop(labels={})) == 0.0

    def test_one_hot(self):
        assert fp_cost(prop(labels={"chair": 1.0})) == 1.0

    def test_scd_cost(self):
        o = prop(labels={"chair": 0.9}, state={"added": 0.4, "removed": 0.1, "same": 0.5})
        assert fp_cost_scd(o) == pytest.approx(0.6, abs=1e-12)

    def test_scd_cost_same_belief_is_free(self):
        o = prop(labels={"chair": 1.0}, state={"added": 0.0, "removed": 0.0, "same": 1.0})
        assert fp_cost_scd(o) == 0.0

    def test_scd_cost_worst_case(self):
        o = prop(labels={"chair": 1.0}, state={"added": 1.0, "removed": 0.0, "same": 0.0})
        assert fp_cost_scd(o) == 1.0

    def test_scd_cost_requires_state(self):
        with pytest.raises(TaskMismatch):
            fp_cost_scd(prop())


def slam_gt_map(n, env="e"):
    objs = tuple(
        GroundTruthObject(box(2.0 * i), CLASS_LIST[i % len(CLASS_LIST)], f"{env}:{i}")
        for i in range(n)
    )
    return GroundTruthMap(task=TaskKind.SEMANTIC_SLAM, objects=objs, environment=env)


class TestEvaluate:
    def test_perfect_submission(self):
        gt_map = slam_gt_map(5)
        report = evaluate(gt_as_proposal(gt_map), gt_map)
        assert report.omq == 1.0
        assert report.n_tp == 5 and report.n_fn == 0 and report.n_fp == 0
        assert report.avg_pairwise == 1.0
        assert report.avg_spatial_quality == 1.0
        assert report.avg_label_quality == 1.0
        assert report.avg_state_quality is None

    def test_empty_proposal(self):
        gt_map = slam_gt_map(5)
        empty = ObjectMap(task=TaskKind.SEMANTIC_SLAM, objects=())
        report = evaluate(empty, gt_map)
        assert report.omq == 0.0
        assert report.n_fn == 5
        assert report.avg_pairwise == 0.0

    def test_exact_arithmetic_case(self):
        # one TP with pOQ 0.5, one FN, one FP with cost 0.6
        gt_map = GroundTruthMap(
            task=TaskKind.SEMANTIC_SLAM,
            objects=(
                GroundTruthObject(box(0), "chair", "g0"),
                GroundTruthObject(box(50), "table", "g1"),
            ),
        )
        proposal = ObjectMap(
            task=TaskKind.SEMANTIC_SLAM,
            objects=(
                ProposedObject(box(0.5), LabelDistribution({"chair": 0.75})),
                ProposedObject(box(-50), LabelDistribution({"tv": 0.6})),
            ),
        )
        report = evaluate(proposal, gt_map)
        assert report.n_tp == 1 and report.n_fn == 1 and report.n_fp == 1
        assert report.omq == pytest.approx(0.5 / 2.6, abs=1e-12)

    def test_both_empty_is_perfect(self):
        report = evaluate(
            ObjectMap(task=TaskKind.SEMANTIC_SLAM, objects=()),
            GroundTruthMap(task=TaskKind.SEMANTIC_SLAM, objects=()),
        )
        assert report.omq == 1.0

    def test_task_mismatch(self):
        with pytest.raises(TaskMismatch):
            evaluate(ObjectMap(task=TaskKind.SCD, objects=()), slam_gt_map(1))

    def test_fp_never_helps(self):
        gt_map = slam_gt_map(3)
        perfect = gt_as_proposal(gt_map)
        with_fp = ObjectMap(
            task=TaskKind.SEMANTIC_SLAM,
            objects=perfect.objects
            + (ProposedObject(box(99), LabelDistribution({"tv": 0.7})),),
        )
        assert evaluate(with_fp, gt_map).omq < evaluate(perfect, gt_map).omq

    def test_extra_unmatched_gt_strictly_decreases(self):
        gt3 = slam_gt_map(3)
        gt4 = GroundTruthMap(
            task=TaskKind.SEMANTIC_SLAM,
            objects=gt3.objects + (GroundTruthObject(box(77), "tv", "far"),),
        )
        proposal = gt_as_proposal(gt3)
        assert evaluate(proposal, gt4).omq < evaluate(proposal, gt3).omq

    def test_permutation_invariance(self):
        rng = np.random.default_rng(31)
        gt_map = slam_gt_map(4)
        # offset boxes and soft labels so qualities are nontrivial
        objs = [
            ProposedObject(box(2.0 * i + 0.3), LabelDistribution({g.true_label: 0.8}))
            for i, g in enumerate(gt_map.objects)
        ]
        proposal = ObjectMap(task=TaskKind.SEMANTIC_SLAM, objects=tuple(objs))
        base = evaluate(proposal, gt_map)
        perm = rng.permutation(4)
        shuffled_prop = ObjectMap(
            task=TaskKind.SEMANTIC_SLAM, objects=tuple(proposal.objects[i] for i in perm)
        )
        shuffled_gt = GroundTruthMap(
            task=TaskKind.SEMANTIC_SLAM, objects=tuple(gt_map.objects[i] for i in rng.permutation(4))
        )
        got = evaluate(shuffled_prop, shuffled_gt)
        assert got.omq == pytest.approx(base.omq, abs=1e-15)
        assert got.n_tp == base.n_tp and got.n_fn == base.n_fn and got.n_fp == base.n_fp

    def test_zero_label_mass_never_tp_even_at_iou_one(self):
        gt_map = GroundTruthMap(
            task=TaskKind.SEMANTIC_SLAM,
            objects=(GroundTruthObject(box(), "chair", "g0"),),
        )
        proposal = ObjectMap(
            task=TaskKind.SEMANTIC_SLAM,
            objects=(ProposedObject(box(), LabelDistribution({"table": 1.0})),),
        )
        report = evaluate(proposal, gt_map)
        assert report.n_tp == 0
        assert report.n_fp == 1 and report.n_fn == 1

    def test_report_payload_shape(self):
        gt_map = slam_gt_map(2)
        payload = evaluate(gt_as_proposal(gt_map), gt_map).to_payload()
        assert payload["omq"] == 1.0
        assert "avg_state_quality" not in payload
        assert len(payload["pairs"]) == 2
        assert payload["pairs"][0]["gt_instance_id"] == "e:0"

    def test_omq_recomputable_from_report_fields(self):
        rng = np.random.default_rng(404)
        for _ in range(30):
            proposal, gt_map, _, _ = random_maps(rng, scd=False)
            payload = evaluate(proposal, gt_map).to_payload()
            denominator = (
                payload["n_tp"] + payload["n_fn"] + math.fsum(payload["fp_costs"])
            )
            total = math.fsum(p["pairwise"] for p in payload["pairs"])
            recomputed = total / denominator if denominator else 1.0
            # payload values carry 6-decimal rounding
            assert recomputed == pytest.approx(payload["omq"], abs=1e-4)


def random_maps(rng, scd, max_objects=6):
    m = int(rng.integers(0, max_objects + 1))
    n = int(rng.integers(0, max_objects + 1))
    classes = list(CLASS_LIST[:6])

    def rand_box():
        c = rng.uniform(-2, 2, 3)
        e = rng.uniform(0.3, 2.0, 3)
        return c, e

    proposed_raw, gt_raw = [], []
    prop_objs, gt_objs = [], []
    for i in range(m):
        c, e = rand_box()
        k = int(rng.integers(1, 4))
        picks = rng.choice(len(classes), size=k, replace=False)
        raw = rng.random(k)
        raw = raw / raw.sum() * float(rng.uniform(0.3, 1.0))
        labels = {classes[int(p)]: float(v) for p, v in zip(picks, raw)}
        state = None
        state_raw = None
        if scd:
            s = rng.random(3)
            s = s / s.sum()
            state_raw = {"added": float(s[0]), "removed": float(s[1]), "same": float(s[2])}
            state = state_raw
        proposed_raw.append(
            {"center": c, "extent": e, "label_probs": labels, "state_probs": state_raw}
        )
        prop_objs.append(prop(box(*c, *e), labels=labels, state=state))
    for j in range(n):
        c, e = rand_box()
        label = classes[int(rng.integers(0, len(classes)))]
        state = str(rng.choice(["added", "removed"])) if scd else None
        gt_raw.append({"center": c, "extent": e, "true_label": label, "true_state": state})
        gt_objs.append(gt(box(*c, *e), label=label, iid=f"g{j}", state=state))
    task = TaskKind.SCD if scd else TaskKind.SEMANTIC_SLAM
    return (
        ObjectMap(task=task, objects=tuple(prop_objs)),
        GroundTruthMap(task=task, objects=tuple(gt_objs)),
        proposed_raw,
        gt_raw,
    )


class TestAgainstBruteForce:
    @pytest.mark.parametrize("scd", [False, True])
    def test_random_instances_match_oracle(self, scd):
        rng = np.random.default_rng(7777 if scd else 8888)
        for _ in range(60):
            proposal, gt_map, proposed_raw, gt_raw = random_maps(rng, scd)
            got = evaluate(proposal, gt_map).omq
            want = brute_force_omq(proposed_raw, gt_raw, scd)
            assert got == pytest.approx(want, abs=1e-12)
