"""Reference HOTA and CLEAR-MOT/IDF1 implementations.

These serve two purposes: cross-metric comparison tables, and degeneration
checks against the local-cluster metric (single-category mode with margin 0
must reproduce HOTA's detection and association subscores at the same
threshold). The HOTA pipeline here is written independently of the
local-cluster evaluator; both share only the low-level IoU and assignment
kernels, which carry their own exhaustive oracles.
"""

import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np

from .assignment import solve_max_assignment
from .kernels import iou_matrix_kernel
from .model import canonicalize, merge_gt_pred

HOTA_ALPHA_GRID = tuple(round(0.05 * i, 2) for i in range(1, 20))
CLEAR_IOU_GATE = 0.5
_IOU_TIE_WEIGHT = 1e-3


@dataclass(frozen=True)
class HotaReport:
    alphas: tuple
    det_a: tuple
    ass_a: tuple
    hota: tuple
    det_a_mean: float
    ass_a_mean: float
    hota_mean: float

    def at_alpha(self, alpha):
        """(DetA, AssA, HOTA) at one alpha of the grid."""
        i = self.alphas.index(alpha)
        return self.det_a[i], self.ass_a[i], self.hota[i]

    def to_json_dict(self):
        return {
            "alphas": list(self.alphas),
            "det_a": list(self.det_a),
            "ass_a": list(self.ass_a),
            "hota": list(self.hota),
            "det_a_mean": self.det_a_mean,
            "ass_a_mean": self.ass_a_mean,
            "hota_mean": self.hota_mean,
        }


@dataclass(frozen=True)
class ClearScores:
    mota: float
    motp: float | None
    idf1: float
    idsw: int
    tp: int
    fn: int
    fp: int
    num_gt: int


@dataclass(frozen=True)
class ClearReport:
    per_class: dict
    names: dict

    def macro(self, field):
        vals = [getattr(s, field) for s in self.per_class.values()]
        vals = [v for v in vals if v is not None]
        return sum(vals) / len(vals) if vals else None

    def to_json_dict(self):
        return {
            "per_class": {
                str(cid): {
                    "name": self.names.get(cid, f"class_{cid}"),
                    "mota": s.mota,
                    "motp": s.motp,
                    "idf1": s.idf1,
                    "idsw": s.idsw,
                    "tp": s.tp,
                    "fn": s.fn,
                    "fp": s.fp,
                    "num_gt": s.num_gt,
                }
                for cid, s in sorted(self.per_class.items())
            },
            "macro": {f: self.macro(f) for f in ("mota", "motp", "idf1")},
        }


class _SeqArrays:
    """Class-agnostic per-frame arrays for one combined sequence."""

    def __init__(self, seq):
        self.frames = []
        for frame in seq.frames:
            g = np.asarray(
                [(b.box.x, b.box.y, b.box.w, b.box.h) for b in frame.gt], np.float64
            ).reshape(len(frame.gt), 4)
            p = np.asarray(
                [(b.box.x, b.box.y, b.box.w, b.box.h) for b in frame.preds], np.float64
            ).reshape(len(frame.preds), 4)
            self.frames.append(
                (
                    np.asarray([b.track_id for b in frame.gt], np.int64),
                    np.asarray([b.track_id for b in frame.preds], np.int64),
                    iou_matrix_kernel(g, p),
                )
            )
        self.gt_ids = sorted({int(t) for g, _, _ in self.frames for t in g})
        self.pred_ids = sorted({int(t) for _, p, _ in self.frames for t in p})


def hota_evaluate(gt, pred, alphas=HOTA_ALPHA_GRID):
    """Standard HOTA over an alpha grid, class-agnostic, exhaustive gt assumed."""
    gt = canonicalize(gt)
    pred = canonicalize(pred)
    if gt.num_gt_boxes() == 0:
        raise ValueError("HOTA needs at least one ground-truth box")
    combined = merge_gt_pred(gt, pred)
    seqs = [_SeqArrays(s) for s in combined.sequences]

    det_a = []
    ass_a = []
    hota = []
    for alpha in alphas:
        tp = fn = fp = 0
        assoc_sum = 0.0
        for sa in seqs:
            gidx = {t: i for i, t in enumerate(sa.gt_ids)}
            pidx = {t: i for i, t in enumerate(sa.pred_ids)}
            n_g, n_p = len(sa.gt_ids), len(sa.pred_ids)
            gt_count = np.zeros(n_g, np.float64)
            pred_count = np.zeros(n_p, np.float64)
            pot = np.zeros((n_g, n_p), np.float64)
            for g_tracks, p_tracks, iou in sa.frames:
                gi = np.asarray([gidx[int(t)] for t in g_tracks], np.int64)
                pi = np.asarray([pidx[int(t)] for t in p_tracks], np.int64)
                gt_count[gi] += 1.0
                pred_count[pi] += 1.0
                if gi.size and pi.size:
                    pot[np.ix_(gi, pi)] += iou >= alpha
            if n_g and n_p:
                potential = pot / (gt_count[:, None] + pred_count[None, :] - pot)
            else:
                potential = np.zeros((n_g, n_p), np.float64)

            matches = defaultdict(int)
            seq_pairs = []
            for g_tracks, p_tracks, iou in sa.frames:
                if iou.size == 0:
                    fn += g_tracks.shape[0]
                    fp += p_tracks.shape[0]
                    continue
                cand = iou >= alpha
                if not cand.any():
                    fn += g_tracks.shape[0]
                    fp += p_tracks.shape[0]
                    continue
                gi = np.asarray([gidx[int(t)] for t in g_tracks], np.int64)
                pi = np.asarray([pidx[int(t)] for t in p_tracks], np.int64)
                score = potential[np.ix_(gi, pi)] + _IOU_TIE_WEIGHT * iou
                cost = np.where(cand, score, 0.0)
                result = solve_max_assignment(cost)
                n_matched = 0
                for i, j in result.pairs:
                    if cand[i, j]:
                        key = (int(g_tracks[i]), int(p_tracks[j]))
                        matches[key] += 1
                        seq_pairs.append(key)
                        n_matched += 1
                tp += n_matched
                fn += g_tracks.shape[0] - n_matched
                fp += p_tracks.shape[0] - n_matched
            for key in seq_pairs:
                tpa = matches[key]
                g_n = gt_count[gidx[key[0]]]
                p_n = pred_count[pidx[key[1]]]
                assoc_sum += tpa / (g_n + p_n - tpa)
        d = tp / (tp + fn + fp) if (tp + fn + fp) else 0.0
        a = assoc_sum / tp if tp else 0.0
        det_a.append(d)
        ass_a.append(a)
        hota.append(math.sqrt(d * a))

    n = len(alphas)
    return HotaReport(
        alphas=tuple(alphas),
        det_a=tuple(det_a),
        ass_a=tuple(ass_a),
        hota=tuple(hota),
        det_a_mean=sum(det_a) / n,
        ass_a_mean=sum(ass_a) / n,
        hota_mean=sum(hota) / n,
    )


def clear_evaluate(gt, pred):
    """CLEAR-MOT (MOTA/MOTP/IDSW) and IDF1, grouped by predicted class."""
    gt = canonicalize(gt)
    pred = canonicalize(pred)
    if gt.num_gt_boxes() == 0:
        raise ValueError("CLEAR needs at least one ground-truth box")
    combined = merge_gt_pred(gt, pred)

    class_ids = sorted(
        {
            int(b.category_id)
            for seq in combined.sequences
            for f in seq.frames
            for b in f.gt
        }
    )
    per_class = {}
    for cid in class_ids:
        per_class[cid] = _clear_one_class(combined, cid)
    names = {cid: combined.categories.name_of(cid) for cid in class_ids}
    return ClearReport(per_class=per_class, names=names)


def _clear_one_class(combined, cid):
    tp = fn = fp = idsw = num_gt = 0
    motp_sum = 0.0
    idtp = 0.0
    gt_dets = 0
    pred_dets = 0
    for seq in combined.sequences:
        last_matched = {}
        prev = {}
        overlap = defaultdict(int)
        seq_gt_tracks = set()
        seq_pred_tracks = set()
        for frame in seq.frames:
            gt_boxes = [b for b in frame.gt if b.category_id == cid]
            pred_boxes = [b for b in frame.preds if b.category_id == cid]
            num_gt += len(gt_boxes)
            gt_dets += len(gt_boxes)
            pred_dets += len(pred_boxes)
            seq_gt_tracks.update(b.track_id for b in gt_boxes)
            seq_pred_tracks.update(b.track_id for b in pred_boxes)
            if not gt_boxes or not pred_boxes:
                fn += len(gt_boxes)
                fp += len(pred_boxes)
                prev = {}
                continue
            g = np.asarray(
                [(b.box.x, b.box.y, b.box.w, b.box.h) for b in gt_boxes], np.float64
            )
            p = np.asarray(
                [(b.box.x, b.box.y, b.box.w, b.box.h) for b in pred_boxes], np.float64
            )
            iou = iou_matrix_kernel(g, p)
            cand = iou >= CLEAR_IOU_GATE
            for i in range(len(gt_boxes)):
                for j in range(len(pred_boxes)):
                    if cand[i, j]:
                        overlap[(gt_boxes[i].track_id, pred_boxes[j].track_id)] += 1
            pred_pos = {b.track_id: j for j, b in enumerate(pred_boxes)}
            taken_g = set()
            taken_p = set()
            frame_matches = {}
            # keep last frame's correspondences while they still overlap
            for i, b in enumerate(gt_boxes):
                pt = prev.get(b.track_id)
                if pt is not None and pt in pred_pos:
                    j = pred_pos[pt]
                    if j not in taken_p and cand[i, j]:
                        frame_matches[i] = j
                        taken_g.add(i)
                        taken_p.add(j)
            free_g = [i for i in range(len(gt_boxes)) if i not in taken_g]
            free_p = [j for j in range(len(pred_boxes)) if j not in taken_p]
            if free_g and free_p:
                sub = iou[np.ix_(free_g, free_p)]
                sub_cand = sub >= CLEAR_IOU_GATE
                result = solve_max_assignment(np.where(sub_cand, sub, 0.0))
                for a, b_ in result.pairs:
                    if sub_cand[a, b_]:
                        frame_matches[free_g[a]] = free_p[b_]
            prev = {}
            for i, j in sorted(frame_matches.items()):
                gt_track = gt_boxes[i].track_id
                pred_track = pred_boxes[j].track_id
                tp += 1
                motp_sum += float(iou[i, j])
                if gt_track in last_matched and last_matched[gt_track] != pred_track:
                    idsw += 1
                last_matched[gt_track] = pred_track
                prev[gt_track] = pred_track
            fn += len(gt_boxes) - len(frame_matches)
            fp += len(pred_boxes) - len(frame_matches)
        # trajectory-level identity matching for IDF1
        g_tracks = sorted(seq_gt_tracks)
        p_tracks = sorted(seq_pred_tracks)
        if g_tracks and p_tracks:
            mat = np.zeros((len(g_tracks), len(p_tracks)), np.float64)
            for (gtk, ptk), n in overlap.items():
                mat[g_tracks.index(gtk), p_tracks.index(ptk)] = n
            idtp += solve_max_assignment(mat).objective
    mota = 1.0 - (fn + fp + idsw) / num_gt if num_gt else 0.0
    motp = motp_sum / tp if tp else None
    idf1 = 2.0 * idtp / (gt_dets + pred_dets) if (gt_dets + pred_dets) else 0.0
    return ClearScores(
        mota=mota,
        motp=motp,
        idf1=idf1,
        idsw=idsw,
        tp=tp,
        fn=fn,
        fp=fp,
        num_gt=num_gt,
    )
