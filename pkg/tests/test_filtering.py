import random

import pytest

from posefilter.aoi import CenterSource
from posefilter.filtering import (
    FilterConfig,
    FilterDecision,
    FilterReason,
    all_above_upper,
    decide_detection,
    filter_detections,
    kept_detections,
)

from helpers import aoi_at, det, oracle_decide, rand_box

# box (5, 5, 20, 20): centre (15, 15), half extent 10
AOI = aoi_at(15.0, 15.0, 10.0)
CFG = FilterConfig()  # upper 0.7, overlap 0.25, cap 2.5


class TestConfig:
    def test_defaults(self):
        assert (CFG.upper_conf, CFG.overlap_frac, CFG.size_cap_multiplier) == (0.7, 0.25, 2.5)
        assert CFG.bypass_enabled

    def test_upper_above_one_disables_bypass(self):
        assert not FilterConfig(upper_conf=1.1).bypass_enabled
        assert FilterConfig(upper_conf=1.0).bypass_enabled

    def test_validation(self):
        with pytest.raises(ValueError):
            FilterConfig(upper_conf=-0.1)
        with pytest.raises(ValueError):
            FilterConfig(overlap_frac=1.5)
        with pytest.raises(ValueError):
            FilterConfig(size_cap_multiplier=0.0)

    def test_decision_consistency_enforced(self):
        d = det(0, 0, 1, 1)
        with pytest.raises(ValueError):
            FilterDecision(detection=d, kept=True, reason=FilterReason.NO_AOIS)
        with pytest.raises(ValueError):
            FilterDecision(detection=d, kept=False, reason=FilterReason.AOI_MATCH)


class TestDecideDetection:
    def test_bypass(self):
        decision = decide_detection(det(500, 500, 10, 10, score=0.9), [AOI], CFG)
        assert decision.kept and decision.reason == FilterReason.ABOVE_UPPER

    def test_bypass_boundary_inclusive(self):
        decision = decide_detection(det(500, 500, 10, 10, score=0.7), [AOI], CFG)
        assert decision.kept and decision.reason == FilterReason.ABOVE_UPPER

    def test_kept_quarter_overlap(self):
        # inter over (0,0,10,10) is 5x5=25 of area 100: exactly the threshold
        decision = decide_detection(det(0, 0, 10, 10, score=0.5), [AOI], CFG)
        assert decision.kept and decision.reason == FilterReason.AOI_MATCH

    def test_large_sliver_discarded(self):
        # 200x10 box: only 100 of 2000 overlaps, and 200 > 2.5 * 20
        decision = decide_detection(det(0, 0, 200, 10, score=0.5), [AOI], CFG)
        assert not decision.kept and decision.reason == FilterReason.NO_AOI_OVERLAP

    def test_too_large_despite_overlap(self):
        # 20x80 box: inter 20x20=400 of 1600 (25%), but 80 > 50
        decision = decide_detection(det(5, 5, 20, 80, score=0.5), [AOI], CFG)
        assert not decision.kept and decision.reason == FilterReason.TOO_LARGE

    def test_size_cap_boundary_inclusive(self):
        # max dim exactly 2.5 * 20 = 50 passes
        decision = decide_detection(det(5, 5, 50, 20, score=0.5), [AOI], CFG)
        assert decision.kept == (decision.reason == FilterReason.AOI_MATCH)
        assert decision.kept or decision.reason == FilterReason.TOO_LARGE
        # overlap: inter x [5,25]=20, y [5,25]=20 -> 400 / 1000 = 0.4
        assert decision.kept

    def test_no_aois(self):
        decision = decide_detection(det(0, 0, 10, 10, score=0.5), [], CFG)
        assert not decision.kept and decision.reason == FilterReason.NO_AOIS

    def test_both_conditions_must_hold_on_one_region(self):
        # region A overlaps enough but is too small for the size cap;
        # region B is big enough but the overlap is too thin. Mixing the
        # two predicates across regions would wrongly keep the box.
        thin = det(0, 0, 30, 2, score=0.5)  # area 60, max dim 30
        region_a = aoi_at(4.0, 4.0, 4.0)    # box (0,0,8,8): inter 16/60, cap 20 < 30
        region_b = aoi_at(75.0, 50.0, 50.0)  # box (25,0,100,100): inter 10/60, cap 250
        decision = decide_detection(thin, [region_a, region_b], CFG)
        assert not decision.kept and decision.reason == FilterReason.TOO_LARGE

    def test_second_region_can_keep(self):
        far = aoi_at(500.0, 500.0, 10.0)
        decision = decide_detection(det(0, 0, 10, 10, score=0.5), [far, AOI], CFG)
        assert decision.kept and decision.reason == FilterReason.AOI_MATCH

    def test_upper_zero_keeps_everything(self):
        cfg = FilterConfig(upper_conf=0.0)
        decision = decide_detection(det(0, 0, 10, 10, score=0.0), [], cfg)
        assert decision.kept and decision.reason == FilterReason.ABOVE_UPPER

    def test_upper_disabled_drops_score_one(self):
        cfg = FilterConfig(upper_conf=1.5)
        decision = decide_detection(det(500, 500, 10, 10, score=1.0), [], cfg)
        assert not decision.kept and decision.reason == FilterReason.NO_AOIS


class TestFilterDetections:
    def test_order_and_identity_preserved(self):
        dets = [det(0, 0, 10, 10, score=0.5), det(500, 500, 3, 3, score=0.95),
                det(600, 600, 400, 400, score=0.1)]
        decisions = filter_detections(dets, [AOI], CFG)
        assert [dec.detection is d for dec, d in zip(decisions, dets)] == [True] * 3
        assert [dec.kept for dec in decisions] == [True, True, False]

    def test_empty_input(self):
        assert filter_detections([], [AOI], CFG) == []

    def test_mixed_image_ids_rejected(self):
        with pytest.raises(ValueError):
            filter_detections([det(0, 0, 1, 1, image_id=1)], [aoi_at(5, 5, 2, image_id=2)], CFG)

    def test_kept_detections_extracts(self):
        dets = [det(0, 0, 10, 10, score=0.5), det(900, 900, 10, 10, score=0.2)]
        decisions = filter_detections(dets, [AOI], CFG)
        assert kept_detections(decisions) == [dets[0]]

    def test_all_above_upper(self):
        assert all_above_upper([], CFG)
        assert all_above_upper([det(0, 0, 1, 1, score=0.7)], CFG)
        assert not all_above_upper([det(0, 0, 1, 1, score=0.69)], CFG)


def random_instance(rng):
    dets = [
        det(*_box_args(rng), score=rng.random(), class_id=rng.randrange(1, 5))
        for _ in range(rng.randrange(0, 6))
    ]
    aois = [
        aoi_at(rng.uniform(0, 300), rng.uniform(0, 300), rng.uniform(0.5, 80))
        for _ in range(rng.randrange(0, 4))
    ]
    cfg = FilterConfig(
        upper_conf=rng.choice([0.0, 0.3, 0.7, 1.0, 1.1]),
        overlap_frac=rng.choice([0.0, 0.1, 0.25, 0.6, 1.0]),
        size_cap_multiplier=rng.choice([0.5, 1.0, 2.5, 10.0]),
    )
    return dets, aois, cfg


def _box_args(rng):
    b = rand_box(rng, lo=-20.0, hi=320.0, max_side=150.0)
    return b.x, b.y, b.w, b.h


class TestAgainstOracle:
    def test_matches_brute_force_restatement(self):
        rng = random.Random(97)
        for _ in range(500):
            dets, aois, cfg = random_instance(rng)
            decisions = filter_detections(dets, aois, cfg)
            for d, decision in zip(dets, decisions):
                kept, reason = oracle_decide(d, aois, cfg)
                assert decision.kept == kept
                assert decision.reason.value == reason


class TestMonotonicity:
    def test_lower_upper_conf_keeps_superset(self):
        rng = random.Random(41)
        for _ in range(200):
            dets, aois, _ = random_instance(rng)
            lo, hi = sorted([rng.random(), rng.random()])
            kept_hi = {i for i, dec in enumerate(filter_detections(dets, aois, FilterConfig(upper_conf=hi)))
                       if dec.kept}
            kept_lo = {i for i, dec in enumerate(filter_detections(dets, aois, FilterConfig(upper_conf=lo)))
                       if dec.kept}
            assert kept_hi <= kept_lo

    def test_higher_overlap_keeps_subset(self):
        rng = random.Random(43)
        for _ in range(200):
            dets, aois, _ = random_instance(rng)
            lo, hi = sorted([rng.random(), rng.random()])
            kept_lo = {i for i, dec in enumerate(
                filter_detections(dets, aois, FilterConfig(overlap_frac=lo))) if dec.kept}
            kept_hi = {i for i, dec in enumerate(
                filter_detections(dets, aois, FilterConfig(overlap_frac=hi))) if dec.kept}
            assert kept_hi <= kept_lo

    def test_larger_cap_keeps_superset(self):
        rng = random.Random(47)
        for _ in range(200):
            dets, aois, _ = random_instance(rng)
            lo, hi = sorted([rng.uniform(0.1, 5), rng.uniform(0.1, 5)])
            kept_lo = {i for i, dec in enumerate(
                filter_detections(dets, aois, FilterConfig(size_cap_multiplier=lo))) if dec.kept}
            kept_hi = {i for i, dec in enumerate(
                filter_detections(dets, aois, FilterConfig(size_cap_multiplier=hi))) if dec.kept}
            assert kept_lo <= kept_hi

    def test_extra_region_keeps_superset(self):
        rng = random.Random(53)
        for _ in range(200):
            dets, aois, cfg = random_instance(rng)
            extra = aois + [aoi_at(rng.uniform(0, 300), rng.uniform(0, 300), rng.uniform(0.5, 80))]
            kept_base = {i for i, dec in enumerate(filter_detections(dets, aois, cfg)) if dec.kept}
            kept_more = {i for i, dec in enumerate(filter_detections(dets, extra, cfg)) if dec.kept}
            assert kept_base <= kept_more
