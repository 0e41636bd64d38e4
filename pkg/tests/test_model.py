"""Data model validation and canonicalization tests."""

import pytest

from tetaeval import (
    BBox,
    CategoryEntry,
    CategoryTable,
    Dataset,
    Frame,
    GtBox,
    PredBox,
    Sequence,
    canonicalize,
    gt_track_counts,
    merge_gt_pred,
    validate_dataset,
)

CATS = CategoryTable({1: CategoryEntry("car"), 2: CategoryEntry("bus")})


def well_formed():
    frames = (
        Frame(0, (GtBox(BBox(0, 0, 5, 5), 1, 1),), (PredBox(BBox(0, 0, 5, 5), 7, 1, 0.9),)),
        Frame(1, (GtBox(BBox(1, 0, 5, 5), 1, 1),), ()),
    )
    return Dataset((Sequence("a", frames),), CATS)


class TestValidate:
    def test_well_formed_gives_empty_report(self):
        report = validate_dataset(well_formed())
        assert report.ok
        assert len(report) == 0

    def test_duplicate_gt_identity(self):
        frames = (
            Frame(
                0,
                (GtBox(BBox(0, 0, 5, 5), 1, 1), GtBox(BBox(9, 9, 5, 5), 1, 1)),
                (),
            ),
        )
        report = validate_dataset(Dataset((Sequence("a", frames),), CATS))
        assert len(report) == 1
        assert report.violations[0].message == "duplicate gt identity"

    def test_degenerate_box(self):
        frames = (Frame(0, (GtBox(BBox(0, 0, 0, 5), 1, 1),), ()),)
        report = validate_dataset(Dataset((Sequence("a", frames),), CATS))
        assert len(report) == 1
        assert report.violations[0].message == "degenerate box"

    def test_score_out_of_range(self):
        frames = (Frame(0, (), (PredBox(BBox(0, 0, 5, 5), 1, 1, 1.5),)),)
        report = validate_dataset(Dataset((Sequence("a", frames),), CATS))
        assert any("score" in v.message for v in report.violations)

    def test_unknown_category(self):
        frames = (Frame(0, (GtBox(BBox(0, 0, 5, 5), 1, 99),), ()),)
        report = validate_dataset(Dataset((Sequence("a", frames),), CATS))
        assert any("unknown category" in v.message for v in report.violations)

    def test_duplicate_frame_index(self):
        frames = (Frame(0, (), ()), Frame(0, (), ()))
        report = validate_dataset(Dataset((Sequence("a", frames),), CATS))
        assert any("duplicate frame index" in v.message for v in report.violations)

    def test_violation_coordinates(self):
        frames = (Frame(3, (GtBox(BBox(0, 0, -1, 5), 4, 1),), ()),)
        report = validate_dataset(Dataset((Sequence("zz", frames),), CATS))
        v = report.violations[0]
        assert v.sequence_id == "zz" and v.frame_index == 3 and "4" in v.entity


class TestCanonicalize:
    def test_idempotent_on_canonical(self):
        ds = canonicalize(well_formed())
        assert canonicalize(ds) == ds

    def test_sorts_out_of_order_frames(self):
        frames = (
            Frame(2, (GtBox(BBox(0, 0, 5, 5), 1, 1),), ()),
            Frame(0, (GtBox(BBox(0, 0, 5, 5), 1, 1),), ()),
        )
        ds = canonicalize(Dataset((Sequence("a", frames),), CATS))
        assert [f.frame_index for f in ds.sequences[0].frames] == [0, 2]

    def test_sorts_boxes_by_track(self):
        frames = (
            Frame(
                0,
                (GtBox(BBox(0, 0, 5, 5), 9, 1), GtBox(BBox(9, 9, 5, 5), 1, 2)),
                (),
            ),
        )
        ds = canonicalize(Dataset((Sequence("a", frames),), CATS))
        assert [b.track_id for b in ds.sequences[0].frames[0].gt] == [1, 9]

    def test_recomputes_stale_counts(self):
        stale = CategoryTable(
            {1: CategoryEntry("car", 999), 2: CategoryEntry("bus", 999)}
        )
        frames = (
            Frame(0, (GtBox(BBox(0, 0, 5, 5), 1, 1), GtBox(BBox(9, 9, 5, 5), 2, 1)), ()),
            Frame(1, (GtBox(BBox(0, 0, 5, 5), 1, 1),), ()),
        )
        ds = canonicalize(Dataset((Sequence("a", frames),), stale))
        # brute-force recount: distinct (sequence, track) per class
        expected = gt_track_counts(ds)
        assert ds.categories.entries[1].gt_track_count == expected[1] == 2
        assert ds.categories.entries[2].gt_track_count == 0

    def test_content_preserving(self):
        ds0 = well_formed()
        ds = canonicalize(ds0)
        boxes0 = sorted(
            (s.sequence_id, f.frame_index, b.track_id, b.box)
            for s in ds0.sequences
            for f in s.frames
            for b in f.gt
        )
        boxes1 = sorted(
            (s.sequence_id, f.frame_index, b.track_id, b.box)
            for s in ds.sequences
            for f in s.frames
            for b in f.gt
        )
        assert boxes0 == boxes1

    def test_rejects_invalid(self):
        frames = (Frame(0, (GtBox(BBox(0, 0, 0, 5), 1, 1),), ()),)
        with pytest.raises(ValueError, match="degenerate"):
            canonicalize(Dataset((Sequence("a", frames),), CATS))

    def test_validate_after_canonicalize_is_empty(self):
        assert validate_dataset(canonicalize(well_formed())).ok


class TestMerge:
    def test_frame_union(self):
        gt = canonicalize(
            Dataset((Sequence("a", (Frame(0, (GtBox(BBox(0, 0, 5, 5), 1, 1),), ()),)),), CATS)
        )
        pred = canonicalize(
            Dataset(
                (Sequence("a", (Frame(1, (), (PredBox(BBox(0, 0, 5, 5), 1, 1, 0.5),)),)),),
                CATS,
            )
        )
        merged = merge_gt_pred(gt, pred)
        assert [f.frame_index for f in merged.sequences[0].frames] == [0, 1]

    def test_rejects_unknown_pred_sequence(self):
        gt = canonicalize(Dataset((Sequence("a", (Frame(0, (), ()),)),), CATS))
        pred = canonicalize(Dataset((Sequence("b", (Frame(0, (), ()),)),), CATS))
        with pytest.raises(ValueError, match="missing from ground truth"):
            merge_gt_pred(gt, pred)
