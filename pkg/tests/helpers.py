"""Shared fixture builders and synthetic data generators."""

import numpy as np

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
)


def build_gt(rows, categories, seq_id="s0"):
    """rows: (frame, track, cat, x, y, w, h)."""
    frames = {}
    for frame, track, cat, x, y, w, h in rows:
        frames.setdefault(frame, []).append(
            GtBox(BBox(float(x), float(y), float(w), float(h)), track, cat)
        )
    seq = Sequence(
        seq_id,
        tuple(Frame(fi, tuple(boxes), ()) for fi, boxes in sorted(frames.items())),
    )
    return canonicalize(Dataset((seq,), _table(categories)))


def build_pred(rows, categories, seq_id="s0"):
    """rows: (frame, track, cat, x, y, w, h, score)."""
    frames = {}
    for frame, track, cat, x, y, w, h, score in rows:
        frames.setdefault(frame, []).append(
            PredBox(BBox(float(x), float(y), float(w), float(h)), track, cat, float(score))
        )
    seq = Sequence(
        seq_id,
        tuple(Frame(fi, (), tuple(boxes)) for fi, boxes in sorted(frames.items())),
    )
    return canonicalize(Dataset((seq,), _table(categories)))


def _table(categories):
    if isinstance(categories, CategoryTable):
        return categories
    return CategoryTable({cid: CategoryEntry(name) for cid, name in categories.items()})


def random_tracking_data(
    seed,
    n_sequences=1,
    n_classes=2,
    max_tracks=6,
    n_frames=12,
    miss_rate=0.15,
    split_rate=0.2,
    wrong_class_rate=0.0,
    distractor_rate=0.3,
    correct_labels=True,
):
    """Random (gt, pred) datasets: moving boxes, jitter, drops, id splits.

    Predicted labels are copied from the ground truth when
    ``correct_labels`` is set; ``wrong_class_rate`` flips a track's label to
    a random other class. Distractors are far-away false-positive tracks.
    """
    rng = np.random.default_rng(seed)
    cats = CategoryTable({c: CategoryEntry(f"class_{c}") for c in range(n_classes)})
    gt_seqs = []
    pred_seqs = []
    for s in range(n_sequences):
        sid = f"seq{s:03d}"
        n_tracks = int(rng.integers(1, max_tracks + 1))
        tracks = []
        for t in range(n_tracks):
            start = int(rng.integers(0, max(1, n_frames - 2)))
            end = int(rng.integers(start + 1, n_frames + 1))
            x0, y0 = rng.random(2) * 100
            vx, vy = rng.random(2) * 4 - 2
            cat = int(rng.integers(0, n_classes))
            pred_cat = cat
            if not correct_labels or rng.random() < wrong_class_rate:
                others = [c for c in range(n_classes) if c != cat]
                if others:
                    pred_cat = others[int(rng.integers(0, len(others)))]
            split_at = None
            if rng.random() < split_rate and end - start > 2:
                split_at = int(rng.integers(start + 1, end))
            tracks.append((t, start, end, x0, y0, vx, vy, cat, pred_cat, split_at))
        gt_frames = []
        pred_frames = []
        for fi in range(n_frames):
            gt = []
            preds = []
            for t, start, end, x0, y0, vx, vy, cat, pred_cat, split_at in tracks:
                if not start <= fi < end:
                    continue
                x = x0 + vx * fi
                y = y0 + vy * fi
                gt.append(GtBox(BBox(x, y, 12.0, 12.0), t, cat))
                if rng.random() < miss_rate:
                    continue
                dx, dy = rng.random(2) * 3 - 1.5
                tid = t if split_at is None or fi < split_at else t + 1000
                preds.append(
                    PredBox(BBox(x + dx, y + dy, 12.0, 12.0), tid, pred_cat, float(rng.random()))
                )
            for k in range(int(rng.integers(0, 3)) if rng.random() < distractor_rate else 0):
                preds.append(
                    PredBox(
                        BBox(400.0 + 40 * k + fi, 400.0, 9.0, 9.0),
                        2000 + k,
                        int(rng.integers(0, n_classes)),
                        float(rng.random()),
                    )
                )
            gt_frames.append(Frame(fi, tuple(gt), ()))
            pred_frames.append(Frame(fi, (), tuple(preds)))
        gt_seqs.append(Sequence(sid, tuple(gt_frames)))
        pred_seqs.append(Sequence(sid, tuple(pred_frames)))
    gt_ds = canonicalize(Dataset(tuple(gt_seqs), cats))
    pred_ds = canonicalize(Dataset(tuple(pred_seqs), cats))
    return gt_ds, pred_ds


def permute_pred_labels(pred_ds, perm):
    """Relabel predicted classes through the mapping ``perm`` (id -> id)."""
    seqs = []
    for seq in pred_ds.sequences:
        frames = tuple(
            Frame(
                f.frame_index,
                f.gt,
                tuple(
                    PredBox(b.box, b.track_id, perm.get(b.category_id, b.category_id), b.score)
                    for b in f.preds
                ),
            )
            for f in seq.frames
        )
        seqs.append(Sequence(seq.sequence_id, frames))
    return canonicalize(Dataset(tuple(seqs), pred_ds.categories))


def perfect_predictions(gt_ds, score=0.9):
    """Predictions that copy the ground truth exactly (same ids and classes)."""
    seqs = []
    for seq in gt_ds.sequences:
        frames = tuple(
            Frame(
                f.frame_index,
                (),
                tuple(PredBox(b.box, b.track_id, b.category_id, score) for b in f.gt),
            )
            for f in seq.frames
        )
        seqs.append(Sequence(seq.sequence_id, frames))
    return canonicalize(Dataset(tuple(seqs), gt_ds.categories))
