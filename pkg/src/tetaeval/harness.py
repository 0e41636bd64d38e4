"""Synthetic perturbations, dataset statistics, and cross-metric comparison.

Every perturbation is a pure function of (dataset, parameters, seed); the
random source is NumPy's PCG64 generator, so outputs are reproducible
across platforms. Perturbations that need randomness require an explicit
seed. Geometry is never touched: the point of each corruption is to move
exactly one failure axis (class labels, duplicate tracks, identity churn)
and watch how the metrics react.
"""

import csv
import io
from collections import defaultdict
from dataclasses import dataclass, replace

import numpy as np

from .baselines import clear_evaluate, hota_evaluate
from .kernels import iou_matrix_kernel
from .model import (
    CategoryEntry,
    CategoryTable,
    Dataset,
    Frame,
    Sequence,
    canonicalize,
)
from .teta import evaluate

PERTURB_KINDS = ("class_noise", "copy_paste", "merge_tail", "fragment")
DEFAULT_COPY_SCORE = 0.01


@dataclass(frozen=True)
class PerturbSpec:
    kind: str
    rate: float | None = None
    copies: int | None = None
    n: int | None = None
    period: int | None = None
    score: float = DEFAULT_COPY_SCORE
    seed: int | None = None

    def __post_init__(self):
        if self.kind not in PERTURB_KINDS:
            raise ValueError(f"unknown perturbation {self.kind!r}, expected one of {PERTURB_KINDS}")
        if self.kind == "class_noise":
            if self.rate is None or not 0.0 <= self.rate <= 1.0:
                raise ValueError("class_noise needs rate in [0, 1]")
            if self.seed is None:
                raise ValueError("class_noise is stochastic and needs a seed")
        elif self.kind == "copy_paste":
            if self.copies is None or self.copies < 1:
                raise ValueError("copy_paste needs copies >= 1")
            if not 0.0 <= self.score <= 1.0:
                raise ValueError("copy score must be in [0, 1]")
        elif self.kind == "merge_tail":
            if self.n is None or self.n < 1:
                raise ValueError("merge_tail needs n >= 1")
        elif self.kind == "fragment":
            if self.period is None or self.period < 2:
                raise ValueError("fragment needs period >= 2")

    def label(self):
        parts = []
        for name in ("rate", "copies", "n", "period", "seed"):
            v = getattr(self, name)
            if v is not None:
                parts.append(f"{name}={v}")
        if self.kind == "copy_paste" and self.score != DEFAULT_COPY_SCORE:
            parts.append(f"score={self.score}")
        return f"{self.kind}({','.join(parts)})"

    def apply(self, gt, pred):
        """Return the (gt, pred) pair after this corruption."""
        if self.kind == "class_noise":
            return gt, inject_class_noise(pred, self.rate, self.seed)
        if self.kind == "copy_paste":
            return gt, copy_paste_tracks(pred, self.copies, self.score)
        if self.kind == "merge_tail":
            return merge_tail_classes(gt, pred, self.n)
        return gt, fragment_tracks(pred, self.period, self.seed)


def _rebuild(ds, box_fn):
    """Map every prediction box through ``box_fn(sequence_id, box)``."""
    sequences = []
    for seq in ds.sequences:
        frames = []
        for f in seq.frames:
            preds = tuple(box_fn(seq.sequence_id, b) for b in f.preds)
            frames.append(Frame(f.frame_index, f.gt, preds))
        sequences.append(Sequence(seq.sequence_id, tuple(frames), seq.fps_hint))
    return Dataset(tuple(sequences), ds.categories)


def _pred_tracks(ds):
    """Sorted (sequence_id, track_id) list of prediction tracks."""
    tracks = sorted(
        {
            (seq.sequence_id, b.track_id)
            for seq in ds.sequences
            for f in seq.frames
            for b in f.preds
        }
    )
    return tracks


def inject_class_noise(pred, rate, seed):
    """Reassign each prediction track to a random different class with p=rate."""
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    pred = canonicalize(pred)
    cat_ids = sorted(pred.categories.entries)
    if rate > 0 and len(cat_ids) < 2:
        raise ValueError("class noise needs at least two categories to swap between")
    rng = np.random.Generator(np.random.PCG64(seed))
    # reference class of a track = class of its earliest box
    first_class = {}
    for seq in pred.sequences:
        for f in seq.frames:
            for b in f.preds:
                first_class.setdefault((seq.sequence_id, b.track_id), b.category_id)
    new_class = {}
    for key in _pred_tracks(pred):
        if rng.random() < rate:
            others = [c for c in cat_ids if c != first_class[key]]
            new_class[key] = others[int(rng.integers(0, len(others)))]

    def relabel(sid, b):
        c = new_class.get((sid, b.track_id))
        return b if c is None else replace(b, category_id=c)

    return canonicalize(_rebuild(pred, relabel))


def copy_paste_tracks(pred, copies, score=DEFAULT_COPY_SCORE):
    """Duplicate every prediction track ``copies`` times at the given score."""
    if copies < 1:
        raise ValueError("copies must be >= 1")
    if not 0.0 <= score <= 1.0:
        raise ValueError("score must be in [0, 1]")
    pred = canonicalize(pred)
    clone_ids = {}
    for seq in pred.sequences:
        track_ids = sorted({b.track_id for f in seq.frames for b in f.preds})
        next_id = (max(track_ids) + 1) if track_ids else 0
        for tid in track_ids:
            ids = []
            for _ in range(copies):
                ids.append(next_id)
                next_id += 1
            clone_ids[(seq.sequence_id, tid)] = ids
    sequences = []
    for seq in pred.sequences:
        frames = []
        for f in seq.frames:
            preds = list(f.preds)
            for b in f.preds:
                for new_id in clone_ids.get((seq.sequence_id, b.track_id), ()):
                    preds.append(replace(b, track_id=new_id, score=score))
            frames.append(Frame(f.frame_index, f.gt, tuple(preds)))
        sequences.append(Sequence(seq.sequence_id, tuple(frames), seq.fps_hint))
    return canonicalize(Dataset(tuple(sequences), pred.categories))


def merge_tail_classes(gt, pred, n):
    """Merge the n least-populated gt classes into one synthetic class.

    Classes are ranked by descending gt track count (ties by ascending id);
    the same relabeling map is applied to both datasets.
    """
    gt = canonicalize(gt)
    pred = canonicalize(pred)
    ranked = sorted(
        gt.categories.entries,
        key=lambda cid: (-gt.categories.entries[cid].gt_track_count, cid),
    )
    if not 1 <= n <= len(ranked):
        raise ValueError(f"n must be in [1, {len(ranked)}], got {n}")
    tail = set(ranked[len(ranked) - n :])
    all_ids = set(gt.categories.entries) | set(pred.categories.entries)
    merged_id = max(all_ids) + 1

    def apply(ds):
        sequences = []
        for seq in ds.sequences:
            frames = []
            for f in seq.frames:
                gt_boxes = tuple(
                    replace(b, category_id=merged_id) if b.category_id in tail else b
                    for b in f.gt
                )
                preds = tuple(
                    replace(b, category_id=merged_id) if b.category_id in tail else b
                    for b in f.preds
                )
                frames.append(Frame(f.frame_index, gt_boxes, preds))
            sequences.append(Sequence(seq.sequence_id, tuple(frames), seq.fps_hint))
        entries = {
            cid: entry
            for cid, entry in ds.categories.entries.items()
            if cid not in tail
        }
        entries[merged_id] = CategoryEntry("merged_tail")
        return canonicalize(Dataset(tuple(sequences), CategoryTable(entries)))

    return apply(gt), apply(pred)


def fragment_tracks(pred, period, seed=None):
    """Split every prediction track into a fresh identity every ``period`` frames.

    Splitting is by occurrence count along the track, so the operation is
    deterministic; ``seed`` is accepted for interface symmetry and unused.
    """
    if period < 2:
        raise ValueError("period must be >= 2")
    pred = canonicalize(pred)
    sequences = []
    for seq in pred.sequences:
        occurrences = defaultdict(list)
        for f in seq.frames:
            for b in f.preds:
                occurrences[b.track_id].append(f.frame_index)
        track_ids = sorted(occurrences)
        next_id = (max(track_ids) + 1) if track_ids else 0
        new_id = {}
        position = {}
        for tid in track_ids:
            for pos, fi in enumerate(occurrences[tid]):
                position[(tid, fi)] = pos
                seg = pos // period
                if (tid, seg) not in new_id:
                    if seg == 0:
                        new_id[(tid, seg)] = tid
                    else:
                        new_id[(tid, seg)] = next_id
                        next_id += 1
        frames = []
        for f in seq.frames:
            preds = tuple(
                replace(
                    b,
                    track_id=new_id[(b.track_id, position[(b.track_id, f.frame_index)] // period)],
                )
                for b in f.preds
            )
            frames.append(Frame(f.frame_index, f.gt, preds))
        sequences.append(Sequence(seq.sequence_id, tuple(frames), seq.fps_hint))
    return canonicalize(Dataset(tuple(sequences), pred.categories))


def temporal_class_correction(pred):
    """Majority-vote each track's class (ties: higher score mass, lower id)."""
    pred = canonicalize(pred)
    tallies = defaultdict(lambda: defaultdict(lambda: [0, 0.0]))
    for seq in pred.sequences:
        for f in seq.frames:
            for b in f.preds:
                cell = tallies[(seq.sequence_id, b.track_id)][b.category_id]
                cell[0] += 1
                cell[1] += b.score
    winner = {
        key: min(votes.items(), key=lambda kv: (-kv[1][0], -kv[1][1], kv[0]))[0]
        for key, votes in tallies.items()
    }

    def relabel(sid, b):
        return replace(b, category_id=winner[(sid, b.track_id)])

    return canonicalize(_rebuild(pred, relabel))


# ---------------------------------------------------------------------------
# Inter-object overlap statistics


@dataclass(frozen=True)
class OverlapCdf:
    thresholds: tuple
    fractions: tuple
    num_boxes: int

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["threshold", "fraction"])
        for t, fr in zip(self.thresholds, self.fractions):
            writer.writerow([repr(float(t)), repr(float(fr))])
        return buf.getvalue().encode("utf-8")


def overlap_cdf(gt, thresholds):
    """Cumulative fraction of gt boxes whose max same-frame IoU <= threshold."""
    gt = canonicalize(gt)
    if gt.num_gt_boxes() == 0:
        raise ValueError("overlap statistics need at least one ground-truth box")
    thresholds = [float(t) for t in thresholds]
    if not thresholds or any(not 0.0 <= t <= 1.0 for t in thresholds):
        raise ValueError("thresholds must be a nonempty ascending list in [0, 1]")
    if any(b < a for a, b in zip(thresholds, thresholds[1:])):
        raise ValueError("thresholds must be ascending")
    if thresholds[-1] < 1.0:
        thresholds.append(1.0)
    max_overlaps = []
    for seq in gt.sequences:
        for f in seq.frames:
            k = len(f.gt)
            if k == 0:
                continue
            if k == 1:
                max_overlaps.append(0.0)
                continue
            g = np.asarray(
                [(b.box.x, b.box.y, b.box.w, b.box.h) for b in f.gt], np.float64
            )
            m = iou_matrix_kernel(g, g)
            np.fill_diagonal(m, 0.0)
            max_overlaps.extend(float(v) for v in m.max(axis=1))
    arr = np.asarray(max_overlaps, np.float64)
    fractions = tuple(float(np.count_nonzero(arr <= t)) / arr.size for t in thresholds)
    return OverlapCdf(tuple(thresholds), fractions, int(arr.size))


# ---------------------------------------------------------------------------
# Cross-metric comparison


@dataclass(frozen=True)
class ComparisonRow:
    perturbation: str
    metric: str
    component: str
    class_name: str
    value: float | int | None


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["perturbation", "metric", "component", "class", "value"])
        for r in self.rows:
            v = "" if r.value is None else repr(r.value) if isinstance(r.value, float) else r.value
            writer.writerow([r.perturbation, r.metric, r.component, r.class_name, v])
        return buf.getvalue().encode("utf-8")

    def to_json_dict(self):
        return [
            {
                "perturbation": r.perturbation,
                "metric": r.metric,
                "component": r.component,
                "class": r.class_name,
                "value": r.value,
            }
            for r in self.rows
        ]

    def lookup(self, perturbation, metric, component, class_name):
        for r in self.rows:
            if (r.perturbation, r.metric, r.component, r.class_name) == (
                perturbation,
                metric,
                component,
                class_name,
            ):
                return r.value
        raise KeyError((perturbation, metric, component, class_name))


def _teta_rows(tag, report):
    rows = []
    for cs in report.per_class:
        for comp, value in (
            ("teta", cs.teta),
            ("loc_a", cs.loc.loc_a),
            ("assoc_a", cs.assoc_a),
            ("cls_a", cs.cls_a),
        ):
            rows.append(ComparisonRow(tag, "TETA", comp, cs.name, value))
    s = report.overall
    for comp, value in (
        ("teta", s.teta),
        ("loc_a", s.loc_a),
        ("assoc_a", s.assoc_a),
        ("cls_a", s.cls_a),
    ):
        rows.append(ComparisonRow(tag, "TETA", comp, "all", value))
    return rows


def _hota_rows(tag, report):
    return [
        ComparisonRow(tag, "HOTA", "hota", "all", report.hota_mean),
        ComparisonRow(tag, "HOTA", "det_a", "all", report.det_a_mean),
        ComparisonRow(tag, "HOTA", "ass_a", "all", report.ass_a_mean),
    ]


def _clear_rows(tag, report):
    rows = []
    for cid in sorted(report.per_class):
        s = report.per_class[cid]
        name = report.names[cid]
        rows.append(ComparisonRow(tag, "CLEAR", "mota", name, s.mota))
        rows.append(ComparisonRow(tag, "CLEAR", "motp", name, s.motp))
        rows.append(ComparisonRow(tag, "CLEAR", "idf1", name, s.idf1))
        rows.append(ComparisonRow(tag, "CLEAR", "idsw", name, s.idsw))
        rows.append(ComparisonRow(tag, "CLEAR", "fp", name, s.fp))
    for comp in ("mota", "motp", "idf1"):
        rows.append(ComparisonRow(tag, "CLEAR", comp, "all", report.macro(comp)))
    return rows


def compare_metrics(gt, pred, perturbs, cfg, jobs=1):
    """Evaluate TETA, HOTA, and CLEAR on the base predictions and each corruption."""
    gt = canonicalize(gt)
    pred = canonicalize(pred)
    cells = [("base", gt, pred)]
    for spec in perturbs:
        g2, p2 = spec.apply(gt, pred)
        cells.append((spec.label(), g2, p2))
    rows = []
    for tag, g2, p2 in cells:
        rows.extend(_teta_rows(tag, evaluate(g2, p2, cfg, jobs=jobs)))
        rows.extend(_hota_rows(tag, hota_evaluate(g2, p2)))
        rows.extend(_clear_rows(tag, clear_evaluate(g2, p2)))
    return ComparisonTable(tuple(rows))
