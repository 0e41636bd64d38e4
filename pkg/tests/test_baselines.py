"""HOTA and CLEAR baseline tests, including the degeneration bridge."""

import math

import pytest

from helpers import build_gt, build_pred, perfect_predictions, random_tracking_data
from tetaeval import (
    EvalConfig,
    clear_evaluate,
    compose_teta,
    evaluate,
    hota_evaluate,
)
from tetaeval.baselines import HOTA_ALPHA_GRID
from tetaeval.model import CategoryTable, Dataset

CATS = {1: "car", 2: "bus"}


class TestHota:
    def test_alpha_grid(self):
        assert len(HOTA_ALPHA_GRID) == 19
        assert HOTA_ALPHA_GRID[0] == 0.05 and HOTA_ALPHA_GRID[-1] == 0.95

    def test_perfect_predictions(self):
        gt, _ = random_tracking_data(seed=31)
        rep = hota_evaluate(gt, perfect_predictions(gt))
        assert all(v == 1.0 for v in rep.det_a)
        assert all(v == 1.0 for v in rep.ass_a)
        assert all(v == 1.0 for v in rep.hota)

    def test_empty_predictions(self):
        gt, _ = random_tracking_data(seed=32)
        rep = hota_evaluate(gt, Dataset((), CategoryTable({})))
        assert all(v == 0.0 for v in rep.det_a)
        assert all(v == 0.0 for v in rep.hota)

    def test_empty_gt_rejected(self):
        _, pred = random_tracking_data(seed=33)
        with pytest.raises(ValueError):
            hota_evaluate(Dataset((), CategoryTable({})), pred)

    def test_hota_is_geometric_mean(self):
        gt, pred = random_tracking_data(seed=34)
        rep = hota_evaluate(gt, pred)
        for d, a, h in zip(rep.det_a, rep.ass_a, rep.hota):
            assert h == math.sqrt(d * a)

    def test_bridge_to_single_category_mode(self):
        for seed in range(10):
            gt, pred = random_tracking_data(seed=seed, n_classes=1, distractor_rate=0.5)
            cfg = EvalConfig(alpha=0.5, margin_r=0.0, mode="single_category")
            rep = evaluate(gt, pred, cfg)
            det, ass, _ = hota_evaluate(gt, pred, alphas=(0.5,)).at_alpha(0.5)
            cs = rep.per_class[0]
            assert abs(cs.loc.loc_a - det) <= 1e-9
            assert abs(cs.assoc_a - ass) <= 1e-9


class TestClear:
    def test_perfect_predictions(self):
        gt, _ = random_tracking_data(seed=35)
        rep = clear_evaluate(gt, perfect_predictions(gt))
        for s in rep.per_class.values():
            assert s.mota == 1.0
            assert s.idf1 == 1.0
            assert s.idsw == 0

    def test_missed_frame_count_arithmetic(self):
        gt = build_gt([(t, 1, 1, t * 5, 0, 10, 10) for t in range(4)], CATS)
        rows = [(t, 9, 1, t * 5, 0, 10, 10, 0.9) for t in range(4) if t != 2]
        pred = build_pred(rows, CATS)
        rep = clear_evaluate(gt, pred)
        assert rep.per_class[1].mota == 0.75  # 1 - 1/4

    def test_identity_switch_counted(self):
        gt = build_gt([(t, 1, 1, t * 5, 0, 10, 10) for t in range(4)], CATS)
        rows = [(t, 9 if t < 2 else 10, 1, t * 5, 0, 10, 10, 0.9) for t in range(4)]
        pred = build_pred(rows, CATS)
        rep = clear_evaluate(gt, pred)
        assert rep.per_class[1].idsw == 1
        assert rep.per_class[1].mota == 0.75  # 1 - 1/4 from the switch

    def test_wrong_class_fig1_scenario(self):
        # perfect boxes and identities, wrong class label everywhere
        gt = build_gt([(t, 1, 1, t * 5, 0, 10, 10) for t in range(4)], CATS)
        pred = build_pred([(t, 9, 2, t * 5, 0, 10, 10, 0.9) for t in range(4)], CATS)
        rep = clear_evaluate(gt, pred)
        assert rep.per_class[1].idf1 == 0.0
        assert rep.per_class[1].mota <= 0.0
        teta = evaluate(gt, pred, EvalConfig())
        cs = teta.per_class[0]
        assert cs.loc.loc_a == 1.0 and cs.assoc_a == 1.0 and cs.cls_a == 0.0
        assert abs(cs.teta - compose_teta(1.0, 1.0, 0.0)) <= 1e-15
        assert abs(cs.teta - 2 / 3) <= 1e-9

    def test_fp_injection_strictly_decreases_mota(self):
        gt, pred = random_tracking_data(seed=36, distractor_rate=0.0, miss_rate=0.0)
        base = clear_evaluate(gt, pred)
        cid = sorted(base.per_class)[0]
        # inject one false positive of class cid near nothing
        from tetaeval.model import Frame, PredBox, BBox, Sequence, canonicalize

        seqs = []
        injected = False
        for seq in pred.sequences:
            frames = []
            for f in seq.frames:
                preds = f.preds
                if not injected:
                    preds = preds + (PredBox(BBox(900.0, 900.0, 5.0, 5.0), 999, cid, 0.9),)
                    injected = True
                frames.append(Frame(f.frame_index, f.gt, preds))
            seqs.append(Sequence(seq.sequence_id, tuple(frames)))
        worse = clear_evaluate(gt, canonicalize(Dataset(tuple(seqs), pred.categories)))
        assert worse.per_class[cid].mota < base.per_class[cid].mota

    def test_idf1_invariant_under_frame_shift(self):
        gt, pred = random_tracking_data(seed=37)
        from tetaeval.model import Frame, Sequence, canonicalize

        def shift(ds, k):
            seqs = []
            for seq in ds.sequences:
                frames = tuple(
                    Frame(f.frame_index + k, f.gt, f.preds) for f in seq.frames
                )
                seqs.append(Sequence(seq.sequence_id, frames))
            return canonicalize(Dataset(tuple(seqs), ds.categories))

        a = clear_evaluate(gt, pred)
        b = clear_evaluate(shift(gt, 7), shift(pred, 7))
        for cid in a.per_class:
            assert a.per_class[cid].idf1 == b.per_class[cid].idf1

    def test_empty_gt_rejected(self):
        _, pred = random_tracking_data(seed=38)
        with pytest.raises(ValueError):
            clear_evaluate(Dataset((), CategoryTable({})), pred)
