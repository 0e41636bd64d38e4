"""In-memory data model for tracking ground truth and predictions.

Boxes use the (x, y, w, h) top-left pixel convention shared by the
MOT-Challenge and COCO formats. Track identities are scoped per sequence:
the same integer in two sequences names two different tracks. Validation
never raises; violations are returned as data so callers can report every
problem at once. ``canonicalize`` is the single gate that enforces the
invariants and the deterministic ordering the evaluators rely on.
"""

from dataclasses import dataclass, field, replace
from math import isfinite


@dataclass(frozen=True)
class BBox:
    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        # normalize numpy scalars so serialization sees plain floats
        for name in ("x", "y", "w", "h"):
            object.__setattr__(self, name, float(getattr(self, name)))


@dataclass(frozen=True)
class GtBox:
    box: BBox
    track_id: int
    category_id: int

    def __post_init__(self):
        object.__setattr__(self, "track_id", int(self.track_id))
        object.__setattr__(self, "category_id", int(self.category_id))


@dataclass(frozen=True)
class PredBox:
    box: BBox
    track_id: int
    category_id: int
    score: float

    def __post_init__(self):
        object.__setattr__(self, "track_id", int(self.track_id))
        object.__setattr__(self, "category_id", int(self.category_id))
        object.__setattr__(self, "score", float(self.score))


@dataclass(frozen=True)
class Frame:
    frame_index: int
    gt: tuple = ()
    preds: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "gt", tuple(self.gt))
        object.__setattr__(self, "preds", tuple(self.preds))


@dataclass(frozen=True)
class Sequence:
    sequence_id: str
    frames: tuple = ()
    fps_hint: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "frames", tuple(self.frames))


@dataclass(frozen=True)
class CategoryEntry:
    name: str
    gt_track_count: int = 0


@dataclass(frozen=True)
class CategoryTable:
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "entries", dict(self.entries))

    def name_of(self, category_id):
        entry = self.entries.get(category_id)
        return entry.name if entry else f"class_{category_id}"

    def ids(self):
        return sorted(self.entries)


@dataclass(frozen=True)
class Dataset:
    sequences: tuple = ()
    categories: CategoryTable = field(default_factory=CategoryTable)

    def __post_init__(self):
        object.__setattr__(self, "sequences", tuple(self.sequences))

    def sequence_ids(self):
        return [s.sequence_id for s in self.sequences]

    def num_gt_boxes(self):
        return sum(len(f.gt) for s in self.sequences for f in s.frames)

    def num_pred_boxes(self):
        return sum(len(f.preds) for s in self.sequences for f in s.frames)


@dataclass(frozen=True)
class Violation:
    sequence_id: str | None
    frame_index: int | None
    entity: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))

    @property
    def ok(self):
        return not self.violations

    def __len__(self):
        return len(self.violations)


def _check_box(box, where, out, seq_id, frame_index):
    vals = (box.x, box.y, box.w, box.h)
    if not all(isfinite(v) for v in vals):
        out.append(Violation(seq_id, frame_index, where, "non-finite box"))
    elif box.w <= 0 or box.h <= 0:
        out.append(Violation(seq_id, frame_index, where, "degenerate box"))


def validate_dataset(ds):
    """Collect every invariant violation; an empty report means a valid dataset."""
    out = []
    known_cats = set(ds.categories.entries)
    names = {}
    for cat_id, entry in ds.categories.entries.items():
        if cat_id < 0:
            out.append(Violation(None, None, f"category {cat_id}", "negative category id"))
        if entry.name in names:
            out.append(
                Violation(
                    None,
                    None,
                    f"category {cat_id}",
                    f"duplicate category name {entry.name!r} (also category {names[entry.name]})",
                )
            )
        names[entry.name] = cat_id

    seen_seq_ids = set()
    for seq in ds.sequences:
        sid = seq.sequence_id
        if sid in seen_seq_ids:
            out.append(Violation(sid, None, "sequence", "duplicate sequence id"))
        seen_seq_ids.add(sid)
        if seq.fps_hint is not None and not (isfinite(seq.fps_hint) and seq.fps_hint > 0):
            out.append(Violation(sid, None, "sequence", "fps hint must be positive"))
        seen_frames = set()
        for frame in seq.frames:
            fi = frame.frame_index
            if fi < 0:
                out.append(Violation(sid, fi, "frame", "negative frame index"))
            if fi in seen_frames:
                out.append(Violation(sid, fi, "frame", "duplicate frame index"))
            seen_frames.add(fi)
            gt_tracks = set()
            for b in frame.gt:
                entity = f"gt track {b.track_id}"
                _check_box(b.box, entity, out, sid, fi)
                if b.track_id < 0:
                    out.append(Violation(sid, fi, entity, "negative track id"))
                if b.category_id < 0:
                    out.append(Violation(sid, fi, entity, "negative category id"))
                elif b.category_id not in known_cats:
                    out.append(Violation(sid, fi, entity, f"unknown category {b.category_id}"))
                if b.track_id in gt_tracks:
                    out.append(Violation(sid, fi, entity, "duplicate gt identity"))
                gt_tracks.add(b.track_id)
            pred_tracks = set()
            for b in frame.preds:
                entity = f"pred track {b.track_id}"
                _check_box(b.box, entity, out, sid, fi)
                if b.track_id < 0:
                    out.append(Violation(sid, fi, entity, "negative track id"))
                if b.category_id < 0:
                    out.append(Violation(sid, fi, entity, "negative category id"))
                elif b.category_id not in known_cats:
                    out.append(Violation(sid, fi, entity, f"unknown category {b.category_id}"))
                if not (isfinite(b.score) and 0.0 <= b.score <= 1.0):
                    out.append(Violation(sid, fi, entity, "score outside [0, 1]"))
                if b.track_id in pred_tracks:
                    out.append(Violation(sid, fi, entity, "duplicate pred identity"))
                pred_tracks.add(b.track_id)
    return ValidationReport(tuple(out))


def gt_track_counts(ds):
    """Number of distinct (sequence, track) ground-truth tracks per category."""
    tracks = set()
    for seq in ds.sequences:
        for frame in seq.frames:
            for b in frame.gt:
                tracks.add((b.category_id, seq.sequence_id, b.track_id))
    counts = {}
    for cat_id, _, _ in tracks:
        counts[cat_id] = counts.get(cat_id, 0) + 1
    return counts


def canonicalize(ds):
    """Sorted, validated, count-refreshed copy of ``ds``; idempotent."""
    report = validate_dataset(ds)
    if not report.ok:
        head = "; ".join(
            f"[{v.sequence_id}/{v.frame_index}] {v.entity}: {v.message}"
            for v in report.violations[:5]
        )
        more = "" if len(report) <= 5 else f" (+{len(report) - 5} more)"
        raise ValueError(f"dataset failed validation: {head}{more}")
    sequences = []
    for seq in sorted(ds.sequences, key=lambda s: s.sequence_id):
        frames = []
        for frame in sorted(seq.frames, key=lambda f: f.frame_index):
            frames.append(
                Frame(
                    frame_index=frame.frame_index,
                    gt=tuple(sorted(frame.gt, key=lambda b: b.track_id)),
                    preds=tuple(sorted(frame.preds, key=lambda b: b.track_id)),
                )
            )
        sequences.append(replace(seq, frames=tuple(frames)))
    counts = gt_track_counts(ds)
    entries = {}
    for cat_id in sorted(ds.categories.entries):
        entry = ds.categories.entries[cat_id]
        entries[cat_id] = CategoryEntry(entry.name, counts.get(cat_id, 0))
    return Dataset(sequences=tuple(sequences), categories=CategoryTable(entries))


def merge_gt_pred(gt, pred):
    """Overlay a gt dataset and a prediction dataset into combined sequences.

    Frames are paired by index (union of both sides). Prediction sequences
    must be a subset of the ground-truth sequences; an absent prediction
    sequence simply contributes no boxes.
    """
    gt_map = {s.sequence_id: s for s in gt.sequences}
    pred_map = {s.sequence_id: s for s in pred.sequences}
    extra = sorted(set(pred_map) - set(gt_map))
    if extra:
        raise ValueError(f"prediction sequences missing from ground truth: {extra}")
    sequences = []
    for sid in sorted(gt_map):
        gt_frames = {f.frame_index: f for f in gt_map[sid].frames}
        pred_frames = (
            {f.frame_index: f for f in pred_map[sid].frames} if sid in pred_map else {}
        )
        frames = []
        for fi in sorted(set(gt_frames) | set(pred_frames)):
            g = gt_frames.get(fi)
            p = pred_frames.get(fi)
            frames.append(Frame(fi, g.gt if g else (), p.preds if p else ()))
        sequences.append(Sequence(sid, tuple(frames), gt_map[sid].fps_hint))
    cats = dict(gt.categories.entries)
    for cat_id, entry in pred.categories.entries.items():
        cats.setdefault(cat_id, CategoryEntry(entry.name, 0))
    return canonicalize(Dataset(tuple(sequences), CategoryTable(cats)))
