"""Annotation and prediction file I/O.

Three formats are supported:

* ``canonical_json`` — the toolkit's own schema (see ``write_canonical``).
* ``mot_csv`` — MOT-Challenge text lines ``frame,id,x,y,w,h,conf,class,vis``;
  visibility is parsed and discarded, one sequence per file.
* ``cocovid_json`` — COCO-style video datasets (TAO layout): videos map to
  sequences, annotations carry ``track_id`` and ``image_id``.

Parsers are total over well-formed files and raise :class:`ParseError`
carrying the offending line/record otherwise. Every parse result is
canonical (sorted frames/boxes, refreshed track counts) and single-role:
only ground truth or only predictions are populated.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from .model import (
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

FORMATS = ("canonical_json", "mot_csv", "cocovid_json")
ROLES = ("gt", "pred")


class ParseError(ValueError):
    """Malformed input; carries the line or record that failed."""

    def __init__(self, reason, line=None, record=None):
        self.reason = reason
        self.line = line
        self.record = record
        where = ""
        if line is not None:
            where = f"line {line}: "
        elif record is not None:
            where = f"record {record}: "
        super().__init__(f"{where}{reason}")


@dataclass(frozen=True)
class IngestOptions:
    format: str
    role: str
    top_k_per_frame: int | None = None
    sequence_id: str | None = None

    def __post_init__(self):
        if self.format not in FORMATS:
            raise ValueError(f"unknown format {self.format!r}, expected one of {FORMATS}")
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}, expected one of {ROLES}")
        if self.top_k_per_frame is not None:
            if self.role != "pred":
                raise ValueError("top_k_per_frame only applies to predictions")
            if self.top_k_per_frame < 1:
                raise ValueError("top_k_per_frame must be positive")


def _read_source(source):
    """Return (text, default_sequence_id) from a path, bytes, or str payload."""
    if isinstance(source, bytes):
        return source.decode("utf-8"), "seq0"
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and Path(source).exists()):
        p = Path(source)
        return p.read_text(encoding="utf-8"), p.stem
    if isinstance(source, str):
        return source, "seq0"
    raise TypeError(f"unsupported source type {type(source)!r}")


def parse(source, opts):
    """Parse ``source`` as ``opts.format`` into a canonical single-role Dataset."""
    text, default_seq = _read_source(source)
    if opts.format == "mot_csv":
        ds = _parse_mot_csv(text, opts, opts.sequence_id or default_seq)
    elif opts.format == "canonical_json":
        ds = _parse_canonical(text, opts)
    else:
        ds = _parse_cocovid(text, opts)
    try:
        ds = canonicalize(ds)
    except ValueError as exc:
        raise ParseError(str(exc)) from exc
    if opts.top_k_per_frame is not None:
        ds = top_k_filter(ds, opts.top_k_per_frame)
    return ds


# ---------------------------------------------------------------------------
# MOT-Challenge CSV


def _parse_mot_csv(text, opts, sequence_id):
    frames = {}
    cats = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 9:
            raise ParseError(f"expected 9 comma-separated fields, got {len(parts)}", line=lineno)
        try:
            frame_index = int(parts[0])
            track_id = int(parts[1])
            x, y, w, h = (float(v) for v in parts[2:6])
            conf = float(parts[6])
            category_id = int(parts[7])
            float(parts[8])  # visibility: validated, then discarded
        except ValueError as exc:
            raise ParseError(f"bad field value ({exc})", line=lineno) from exc
        box = BBox(x, y, w, h)
        gt, preds = frames.setdefault(frame_index, ([], []))
        if opts.role == "gt":
            gt.append(GtBox(box, track_id, category_id))
        else:
            preds.append(PredBox(box, track_id, category_id, conf))
        cats.add(category_id)
    frame_objs = tuple(
        Frame(frame_index=fi, gt=tuple(g), preds=tuple(p))
        for fi, (g, p) in sorted(frames.items())
    )
    table = CategoryTable({c: CategoryEntry(f"class_{c}") for c in sorted(cats)})
    if not frame_objs:
        return Dataset(sequences=(), categories=table)
    return Dataset(sequences=(Sequence(sequence_id, frame_objs),), categories=table)


def write_mot_csv(ds, role):
    """Serialize the single sequence of ``ds`` as MOT-Challenge CSV bytes."""
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    ds = canonicalize(ds)
    if len(ds.sequences) > 1:
        raise ValueError("MOT CSV holds a single sequence; split the dataset first")
    lines = []
    for seq in ds.sequences:
        for frame in seq.frames:
            if role == "gt":
                for b in frame.gt:
                    lines.append(
                        f"{frame.frame_index},{b.track_id},{b.box.x!r},{b.box.y!r},"
                        f"{b.box.w!r},{b.box.h!r},1,{b.category_id},-1"
                    )
            else:
                for b in frame.preds:
                    lines.append(
                        f"{frame.frame_index},{b.track_id},{b.box.x!r},{b.box.y!r},"
                        f"{b.box.w!r},{b.box.h!r},{b.score!r},{b.category_id},-1"
                    )
    out = "\n".join(lines)
    if lines:
        out += "\n"
    return out.encode("utf-8")


# ---------------------------------------------------------------------------
# Canonical JSON


def _require(obj, key, what):
    if not isinstance(obj, dict) or key not in obj:
        raise ParseError(f"missing key {key!r}", record=what)
    return obj[key]


def _parse_bbox(values, what):
    if not isinstance(values, (list, tuple)) or len(values) != 4:
        raise ParseError("bbox must be [x, y, w, h]", record=what)
    try:
        x, y, w, h = (float(v) for v in values)
    except (TypeError, ValueError) as exc:
        raise ParseError(f"bbox values must be numbers ({exc})", record=what) from exc
    return BBox(x, y, w, h)


def _parse_canonical(text, opts):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", line=exc.lineno) from exc
    cats = {}
    for rec in _require(doc, "categories", "document"):
        cid = int(_require(rec, "id", "category"))
        cats[cid] = CategoryEntry(str(_require(rec, "name", "category")))
    sequences = []
    n_preds_total = 0
    for seq_rec in _require(doc, "sequences", "document"):
        sid = str(_require(seq_rec, "id", "sequence"))
        frames = []
        for fr in _require(seq_rec, "frames", "sequence"):
            what = f"{sid}/frame"
            index = int(_require(fr, "index", what))
            gt = []
            preds = []
            if opts.role == "gt":
                for rec in _require(fr, "gt", what):
                    gt.append(
                        GtBox(
                            _parse_bbox(_require(rec, "bbox", what), what),
                            int(_require(rec, "track", what)),
                            int(_require(rec, "cat", what)),
                        )
                    )
            else:
                for rec in _require(fr, "pred", what):
                    preds.append(
                        PredBox(
                            _parse_bbox(_require(rec, "bbox", what), what),
                            int(_require(rec, "track", what)),
                            int(_require(rec, "cat", what)),
                            float(rec.get("score", 1.0)),
                        )
                    )
                n_preds_total += len(preds)
            frames.append(Frame(index, tuple(gt), tuple(preds)))
        sequences.append(Sequence(sid, tuple(frames)))
    ds = Dataset(tuple(sequences), CategoryTable(cats))
    if opts.role == "pred" and n_preds_total == 0:
        # Ground-truth files may be supplied as predictions (self-evaluation,
        # oracle runs): reuse the gt records with full confidence.
        ds = _gt_file_as_predictions(doc, cats)
    return ds


def _gt_file_as_predictions(doc, cats):
    sequences = []
    for seq_rec in doc["sequences"]:
        sid = str(seq_rec["id"])
        frames = []
        for fr in seq_rec["frames"]:
            what = f"{sid}/frame"
            preds = [
                PredBox(
                    _parse_bbox(_require(rec, "bbox", what), what),
                    int(_require(rec, "track", what)),
                    int(_require(rec, "cat", what)),
                    1.0,
                )
                for rec in fr.get("gt", ())
            ]
            frames.append(Frame(int(fr["index"]), (), tuple(preds)))
        sequences.append(Sequence(sid, tuple(frames)))
    return Dataset(tuple(sequences), CategoryTable(cats))


def write_canonical(ds):
    """Serialize to canonical JSON bytes; deterministic, shortest float repr."""
    ds = canonicalize(ds)
    doc = {
        "categories": [
            {"id": cid, "name": ds.categories.entries[cid].name}
            for cid in sorted(ds.categories.entries)
        ],
        "sequences": [
            {
                "id": seq.sequence_id,
                "frames": [
                    {
                        "index": frame.frame_index,
                        "gt": [
                            {
                                "track": b.track_id,
                                "cat": b.category_id,
                                "bbox": [b.box.x, b.box.y, b.box.w, b.box.h],
                            }
                            for b in frame.gt
                        ],
                        "pred": [
                            {
                                "track": b.track_id,
                                "cat": b.category_id,
                                "score": b.score,
                                "bbox": [b.box.x, b.box.y, b.box.w, b.box.h],
                            }
                            for b in frame.preds
                        ],
                    }
                    for frame in seq.frames
                ],
            }
            for seq in ds.sequences
        ],
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


# ---------------------------------------------------------------------------
# COCO-VID / TAO JSON


def _parse_cocovid(text, opts):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc}", line=exc.lineno) from exc
    cats = {}
    for rec in _require(doc, "categories", "document"):
        cats[int(_require(rec, "id", "category"))] = CategoryEntry(
            str(_require(rec, "name", "category"))
        )
    videos = {}
    for rec in _require(doc, "videos", "document"):
        vid = int(_require(rec, "id", "video"))
        videos[vid] = str(rec.get("name", vid))
    per_video_images = {vid: [] for vid in videos}
    image_meta = {}
    for rec in _require(doc, "images", "document"):
        img_id = int(_require(rec, "id", "image"))
        vid = int(_require(rec, "video_id", f"image {img_id}"))
        if vid not in videos:
            raise ParseError(f"unknown video_id {vid}", record=f"image {img_id}")
        frame_id = rec.get("frame_id", rec.get("frame_index"))
        image_meta[img_id] = (vid, frame_id)
        per_video_images[vid].append(img_id)
    # resolve frame indices: explicit frame_id wins, else order within video
    frame_of_image = {}
    for vid, img_ids in per_video_images.items():
        img_ids.sort()
        for order, img_id in enumerate(img_ids):
            _, frame_id = image_meta[img_id]
            frame_of_image[img_id] = int(frame_id) if frame_id is not None else order
    boxes = {}
    for rec in _require(doc, "annotations", "document"):
        what = f"annotation {rec.get('id', '?')}" if isinstance(rec, dict) else "annotation"
        img_id = int(_require(rec, "image_id", what))
        if img_id not in image_meta:
            raise ParseError(f"unknown image_id {img_id}", record=what)
        cat_id = int(_require(rec, "category_id", what))
        if cat_id not in cats:
            raise ParseError(f"unknown category {cat_id}", record=what)
        track_id = int(_require(rec, "track_id", what))
        box = _parse_bbox(_require(rec, "bbox", what), what)
        vid = image_meta[img_id][0]
        key = (vid, frame_of_image[img_id])
        gt, preds = boxes.setdefault(key, ([], []))
        if opts.role == "gt":
            gt.append(GtBox(box, track_id, cat_id))
        else:
            preds.append(PredBox(box, track_id, cat_id, float(rec.get("score", 1.0))))
    sequences = []
    for vid in sorted(videos):
        # the images list defines the frame set; frames may carry no boxes
        frame_indices = sorted({frame_of_image[i] for i in per_video_images[vid]})
        frames = tuple(
            Frame(fi, *(tuple(part) for part in boxes.get((vid, fi), ((), ()))))
            for fi in frame_indices
        )
        sequences.append(Sequence(videos[vid], frames))
    return Dataset(tuple(sequences), CategoryTable(cats))


def write_cocovid(ds, role):
    """Serialize as COCO-style video JSON; ids are assigned deterministically."""
    if role not in ROLES:
        raise ValueError(f"unknown role {role!r}")
    ds = canonicalize(ds)
    videos = []
    images = []
    annotations = []
    img_id = 0
    ann_id = 0
    for vid, seq in enumerate(ds.sequences, start=1):
        videos.append({"id": vid, "name": seq.sequence_id})
        for frame in seq.frames:
            img_id += 1
            images.append({"id": img_id, "video_id": vid, "frame_id": frame.frame_index})
            source = frame.gt if role == "gt" else frame.preds
            for b in source:
                ann_id += 1
                rec = {
                    "id": ann_id,
                    "image_id": img_id,
                    "track_id": b.track_id,
                    "category_id": b.category_id,
                    "bbox": [b.box.x, b.box.y, b.box.w, b.box.h],
                }
                if role == "pred":
                    rec["score"] = b.score
                annotations.append(rec)
    doc = {
        "videos": videos,
        "images": images,
        "annotations": annotations,
        "categories": [
            {"id": cid, "name": ds.categories.entries[cid].name}
            for cid in sorted(ds.categories.entries)
        ],
    }
    return json.dumps(doc, separators=(",", ":"), ensure_ascii=False).encode("utf-8")


# ---------------------------------------------------------------------------


def top_k_filter(ds, k):
    """Keep the k highest-score predictions per frame (ties: lower track id)."""
    if k < 1:
        raise ValueError("k must be positive")
    sequences = []
    for seq in ds.sequences:
        frames = []
        for frame in seq.frames:
            if len(frame.preds) > k:
                kept = sorted(frame.preds, key=lambda b: (-b.score, b.track_id))[:k]
                frames.append(
                    Frame(
                        frame.frame_index,
                        frame.gt,
                        tuple(sorted(kept, key=lambda b: b.track_id)),
                    )
                )
            else:
                frames.append(frame)
        sequences.append(
            Sequence(seq.sequence_id, tuple(frames), seq.fps_hint)
        )
    return Dataset(tuple(sequences), ds.categories)


def sniff_format(source):
    """Guess the file format from its name and content."""
    if isinstance(source, (str, Path)) and "\n" not in str(source):
        suffix = Path(source).suffix.lower()
        if suffix in (".csv", ".txt"):
            return "mot_csv"
    text, _ = _read_source(source)
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc}", line=exc.lineno) from exc
        if "sequences" in doc:
            return "canonical_json"
        if "videos" in doc:
            return "cocovid_json"
        raise ParseError("JSON document is neither canonical nor COCO-VID")
    return "mot_csv"
