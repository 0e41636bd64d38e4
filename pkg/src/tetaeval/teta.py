"""Local-cluster tracking metric: LocA, AssocA, ClsA and their combination.

Evaluation runs per sequence. Matching is class-agnostic: candidate
(gt, pred) pairs are those with IoU >= alpha, and each frame is solved by
maximum assignment over a score that prefers pairs whose tracks co-occur
often across the sequence (a Jaccard count over candidate co-occurrences)
plus a small IoU term (weight 1/1000) to settle spatial ties.

Per-class grouping uses ground-truth anchors, not predicted labels: every
gt box anchors a local cluster, and each prediction joins the cluster of
its highest-IoU anchor when that IoU reaches the margin ``r``. Unmatched
in-cluster predictions are localization false positives; predictions
outside every cluster are ignored under incomplete annotations, counted as
classification false positives under complete annotations, and counted as
localization false positives in single-category mode (where there is no
classification term to absorb them).
"""

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from decimal import ROUND_HALF_EVEN, Decimal

import numpy as np

from .assignment import solve_max_assignment
from .kernels import iou_matrix_kernel
from .model import (
    CategoryEntry,
    CategoryTable,
    Dataset,
    Frame,
    Sequence,
    canonicalize,
    merge_gt_pred,
)
from .ingest import top_k_filter

MODES = ("incomplete", "complete", "single_category")
IOU_TIE_WEIGHT = 1e-3
SINGLE_CATEGORY_ID = 0


@dataclass(frozen=True)
class EvalConfig:
    alpha: float = 0.5
    margin_r: float = 0.5
    mode: str = "incomplete"
    cls_alpha_floor: float = 0.5
    freq_thresholds: tuple = (10, 100)
    top_k: int | None = None

    def __post_init__(self):
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 0.0 <= self.margin_r < 1.0:
            raise ValueError(f"margin_r must be in [0, 1), got {self.margin_r}")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == "single_category" and self.margin_r != 0.0:
            raise ValueError("single_category mode forces margin_r = 0")
        if not 0.0 < self.cls_alpha_floor < 1.0:
            raise ValueError("cls_alpha_floor must be in (0, 1)")
        rare_max, common_max = self.freq_thresholds
        if not (0 < rare_max < common_max):
            raise ValueError(
                f"freq_thresholds must satisfy 0 < rare_max < common_max, got {self.freq_thresholds}"
            )
        object.__setattr__(self, "freq_thresholds", (int(rare_max), int(common_max)))
        if self.top_k is not None and self.top_k < 1:
            raise ValueError("top_k must be positive")

    def to_json_dict(self):
        return {
            "alpha": self.alpha,
            "margin_r": self.margin_r,
            "mode": self.mode,
            "cls_alpha_floor": self.cls_alpha_floor,
            "freq_thresholds": list(self.freq_thresholds),
            "top_k": self.top_k,
        }


# ---------------------------------------------------------------------------
# Matching


@dataclass
class FrameData:
    """Per-frame arrays extracted once for the numeric kernels."""

    frame_index: int
    gt_boxes: np.ndarray
    gt_tracks: np.ndarray
    gt_classes: np.ndarray
    pred_boxes: np.ndarray
    pred_tracks: np.ndarray
    pred_classes: np.ndarray
    iou: np.ndarray
    matched_gt: np.ndarray = None
    matched_pred: np.ndarray = None


@dataclass(frozen=True)
class MatchedPair:
    frame_index: int
    gt_index: int
    pred_index: int
    iou_value: float
    gt_track: int
    pred_track: int
    gt_class: int
    pred_class: int


@dataclass
class MatchResult:
    sequence_id: str
    alpha: float
    pairs: list
    gt_track_frames: dict
    pred_track_frames: dict
    potential: dict
    match_counts: dict
    frames: list


def _frame_data(frame):
    g = np.asarray(
        [(b.box.x, b.box.y, b.box.w, b.box.h) for b in frame.gt], np.float64
    ).reshape(len(frame.gt), 4)
    p = np.asarray(
        [(b.box.x, b.box.y, b.box.w, b.box.h) for b in frame.preds], np.float64
    ).reshape(len(frame.preds), 4)
    return FrameData(
        frame_index=frame.frame_index,
        gt_boxes=g,
        gt_tracks=np.asarray([b.track_id for b in frame.gt], np.int64),
        gt_classes=np.asarray([b.category_id for b in frame.gt], np.int64),
        pred_boxes=p,
        pred_tracks=np.asarray([b.track_id for b in frame.preds], np.int64),
        pred_classes=np.asarray([b.category_id for b in frame.preds], np.int64),
        iou=iou_matrix_kernel(g, p),
        matched_gt=np.zeros(len(frame.gt), np.bool_),
        matched_pred=np.zeros(len(frame.preds), np.bool_),
    )


def match_sequence(seq, alpha):
    """Class-agnostic joint localization/association matching of one sequence."""
    frames = [_frame_data(f) for f in seq.frames]

    gt_ids = sorted({int(t) for fd in frames for t in fd.gt_tracks})
    pred_ids = sorted({int(t) for fd in frames for t in fd.pred_tracks})
    gidx = {t: i for i, t in enumerate(gt_ids)}
    pidx = {t: i for i, t in enumerate(pred_ids)}
    n_g, n_p = len(gt_ids), len(pred_ids)

    gt_frames = np.zeros(n_g, np.float64)
    pred_frames = np.zeros(n_p, np.float64)
    pot = np.zeros((n_g, n_p), np.float64)
    for fd in frames:
        gi = np.asarray([gidx[int(t)] for t in fd.gt_tracks], np.int64)
        pi = np.asarray([pidx[int(t)] for t in fd.pred_tracks], np.int64)
        gt_frames[gi] += 1.0
        pred_frames[pi] += 1.0
        if gi.size and pi.size:
            cand = fd.iou >= alpha
            pot[np.ix_(gi, pi)] += cand

    if n_g and n_p:
        denom = gt_frames[:, None] + pred_frames[None, :] - pot
        potential = pot / denom
    else:
        potential = np.zeros((n_g, n_p), np.float64)

    pairs = []
    match_counts = defaultdict(int)
    for fd in frames:
        if fd.iou.size == 0:
            continue
        cand = fd.iou >= alpha
        if not cand.any():
            continue
        gi = np.asarray([gidx[int(t)] for t in fd.gt_tracks], np.int64)
        pi = np.asarray([pidx[int(t)] for t in fd.pred_tracks], np.int64)
        score = potential[np.ix_(gi, pi)] + IOU_TIE_WEIGHT * fd.iou
        cost = np.where(cand, score, 0.0)
        result = solve_max_assignment(cost)
        for i, j in result.pairs:
            if not cand[i, j]:
                continue
            fd.matched_gt[i] = True
            fd.matched_pred[j] = True
            gt_track = int(fd.gt_tracks[i])
            pred_track = int(fd.pred_tracks[j])
            pairs.append(
                MatchedPair(
                    frame_index=fd.frame_index,
                    gt_index=i,
                    pred_index=j,
                    iou_value=float(fd.iou[i, j]),
                    gt_track=gt_track,
                    pred_track=pred_track,
                    gt_class=int(fd.gt_classes[i]),
                    pred_class=int(fd.pred_classes[j]),
                )
            )
            match_counts[(gt_track, pred_track)] += 1

    return MatchResult(
        sequence_id=seq.sequence_id,
        alpha=alpha,
        pairs=pairs,
        gt_track_frames={t: int(gt_frames[gidx[t]]) for t in gt_ids},
        pred_track_frames={t: int(pred_frames[pidx[t]]) for t in pred_ids},
        potential={
            (g, p): int(pot[gidx[g], pidx[p]])
            for g in gt_ids
            for p in pred_ids
            if pot[gidx[g], pidx[p]] > 0
        },
        match_counts=dict(match_counts),
        frames=frames,
    )


# ---------------------------------------------------------------------------
# Clusters


def _anchors_for(iou, margin_r):
    """Anchor gt index per prediction (-1 when no anchor reaches the margin)."""
    n_g, n_p = iou.shape
    anchors = np.full(n_p, -1, np.int64)
    if n_g == 0:
        return anchors
    best = np.argmax(iou, axis=0)  # ties resolve to the lowest gt index
    best_iou = iou[best, np.arange(n_p)]
    anchors[best_iou >= margin_r] = best[best_iou >= margin_r]
    return anchors


def build_clusters(frame, margin_r):
    """Assign each prediction of ``frame`` to its anchor gt, or None."""
    fd = _frame_data(frame)
    anchors = _anchors_for(fd.iou, margin_r)
    return tuple(int(a) if a >= 0 else None for a in anchors)


def clusters_for_match(match, margin_r):
    """Per-frame anchor arrays for every frame seen by ``match``."""
    return {fd.frame_index: _anchors_for(fd.iou, margin_r) for fd in match.frames}


# ---------------------------------------------------------------------------
# Score families


@dataclass(frozen=True)
class LocCounts:
    tpl: int = 0
    fpl: int = 0
    fnl: int = 0

    def __add__(self, other):
        return LocCounts(self.tpl + other.tpl, self.fpl + other.fpl, self.fnl + other.fnl)

    @property
    def loc_a(self):
        d = self.tpl + self.fpl + self.fnl
        return self.tpl / d if d else 0.0

    @property
    def loc_re(self):
        d = self.tpl + self.fnl
        return self.tpl / d if d else 0.0

    @property
    def loc_pr(self):
        d = self.tpl + self.fpl
        return self.tpl / d if d else 0.0


@dataclass(frozen=True)
class ClsCounts:
    tpc: int = 0
    fnc: int = 0
    fpc: int = 0

    def __add__(self, other):
        return ClsCounts(self.tpc + other.tpc, self.fnc + other.fnc, self.fpc + other.fpc)

    @property
    def cls_a(self):
        d = self.tpc + self.fnc + self.fpc
        return self.tpc / d if d else 0.0


@dataclass(frozen=True)
class PairAssociation:
    pair: MatchedPair
    tpa: int
    fpa: int
    fna: int
    score: float


@dataclass
class AssocCounts:
    per_pair: list = field(default_factory=list)
    class_sum: dict = field(default_factory=dict)
    class_tpl: dict = field(default_factory=dict)
    pooled_sum: float = 0.0
    pooled_tpl: int = 0

    def assoc_a(self, category_id):
        n = self.class_tpl.get(category_id, 0)
        return self.class_sum.get(category_id, 0.0) / n if n else 0.0


def localization_scores(match, clusters, mode):
    """Per-class TPL/FPL/FNL counts from one matched sequence."""
    if set(clusters) != {fd.frame_index for fd in match.frames}:
        raise ValueError("cluster frames do not cover the matched frames")
    out = defaultdict(LocCounts)
    for pair in match.pairs:
        out[pair.gt_class] = out[pair.gt_class] + LocCounts(tpl=1)
    for fd in match.frames:
        anchors = clusters[fd.frame_index]
        for i in range(fd.gt_tracks.shape[0]):
            if not fd.matched_gt[i]:
                c = int(fd.gt_classes[i])
                out[c] = out[c] + LocCounts(fnl=1)
        for j in range(fd.pred_tracks.shape[0]):
            if fd.matched_pred[j]:
                continue
            a = int(anchors[j])
            if a >= 0:
                c = int(fd.gt_classes[a])
                out[c] = out[c] + LocCounts(fpl=1)
            elif mode == "single_category":
                # no classification term exists to absorb stray predictions
                out[SINGLE_CATEGORY_ID] = out[SINGLE_CATEGORY_ID] + LocCounts(fpl=1)
    return dict(out)


def association_scores(match):
    """Track-overlap Jaccard score for every matched pair, grouped by gt class."""
    counts = AssocCounts()
    sums = defaultdict(float)
    ns = defaultdict(int)
    for pair in match.pairs:
        tpa = match.match_counts[(pair.gt_track, pair.pred_track)]
        fna = match.gt_track_frames[pair.gt_track] - tpa
        fpa = match.pred_track_frames[pair.pred_track] - tpa
        score = tpa / (tpa + fpa + fna)
        counts.per_pair.append(PairAssociation(pair, tpa, fpa, fna, score))
        sums[pair.gt_class] += score
        ns[pair.gt_class] += 1
        counts.pooled_sum += score
        counts.pooled_tpl += 1
    counts.class_sum = dict(sums)
    counts.class_tpl = dict(ns)
    return counts


def classification_scores(match, clusters, mode, cls_alpha_floor=0.5):
    """Per-class TPC/FNC/FPC over well-matched pairs (IoU >= the floor)."""
    out = defaultdict(ClsCounts)
    for pair in match.pairs:
        if pair.iou_value < cls_alpha_floor:
            continue
        if pair.pred_class == pair.gt_class:
            c = pair.gt_class
            out[c] = out[c] + ClsCounts(tpc=1)
        else:
            out[pair.gt_class] = out[pair.gt_class] + ClsCounts(fnc=1)
            out[pair.pred_class] = out[pair.pred_class] + ClsCounts(fpc=1)
    if mode == "complete":
        for fd in match.frames:
            anchors = clusters[fd.frame_index]
            for j in range(fd.pred_tracks.shape[0]):
                if not fd.matched_pred[j] and anchors[j] < 0:
                    c = int(fd.pred_classes[j])
                    out[c] = out[c] + ClsCounts(fpc=1)
    return dict(out)


def compose_teta(loc_a, assoc_a, cls_a):
    """Arithmetic mean of the three component scores."""
    for v in (loc_a, assoc_a, cls_a):
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"component scores must be in [0, 1], got {v}")
    return (loc_a + assoc_a + cls_a) / 3.0


def frequency_groups(cats, thresholds):
    """Bucket categories into rare/common/frequent by gt track count."""
    rare_max, common_max = thresholds
    groups = {}
    for cat_id, entry in cats.entries.items():
        if entry.gt_track_count <= rare_max:
            groups[cat_id] = "rare"
        elif entry.gt_track_count <= common_max:
            groups[cat_id] = "common"
        else:
            groups[cat_id] = "frequent"
    return groups


# ---------------------------------------------------------------------------
# Dataset-level evaluation


@dataclass(frozen=True)
class ClassScores:
    category_id: int
    name: str
    loc: LocCounts
    cls: ClsCounts
    assoc_a: float
    assoc_tpl: int
    cls_a: float | None
    teta: float


@dataclass(frozen=True)
class GroupScores:
    teta: float
    loc_a: float
    assoc_a: float
    cls_a: float | None
    num_classes: int


@dataclass(frozen=True)
class TetaReport:
    config: EvalConfig
    per_class: tuple
    per_group: dict
    overall: GroupScores
    pooled_loc: LocCounts
    pooled_assoc_a: float
    pooled_assoc_tpl: int

    def to_json_dict(self):
        per_class = [
            {
                "cat": cs.category_id,
                "loc_a": cs.loc.loc_a,
                "assoc_a": cs.assoc_a,
                "cls_a": cs.cls_a,
                "teta": cs.teta,
                "tpl": cs.loc.tpl,
                "fpl": cs.loc.fpl,
                "fnl": cs.loc.fnl,
                "loc_re": cs.loc.loc_re,
                "loc_pr": cs.loc.loc_pr,
                "name": cs.name,
            }
            for cs in self.per_class
        ]
        groups = {
            g: (None if s is None else _group_dict(s))
            for g, s in self.per_group.items()
        }
        return {
            "config": self.config.to_json_dict(),
            "per_class": per_class,
            "per_group": groups,
            "overall": _group_dict(self.overall),
            "pooled": {
                "loc_a": self.pooled_loc.loc_a,
                "loc_re": self.pooled_loc.loc_re,
                "loc_pr": self.pooled_loc.loc_pr,
                "tpl": self.pooled_loc.tpl,
                "fpl": self.pooled_loc.fpl,
                "fnl": self.pooled_loc.fnl,
                "assoc_a": self.pooled_assoc_a,
                "assoc_tpl": self.pooled_assoc_tpl,
            },
            "percent": {
                "per_class": [
                    {
                        "cat": row["cat"],
                        "name": row["name"],
                        "teta": to_percent(row["teta"]),
                        "loc_a": to_percent(row["loc_a"]),
                        "assoc_a": to_percent(row["assoc_a"]),
                        "cls_a": to_percent(row["cls_a"]),
                        "loc_re": to_percent(row["loc_re"]),
                        "loc_pr": to_percent(row["loc_pr"]),
                    }
                    for row in per_class
                ],
                "per_group": {
                    g: (None if s is None else _group_percent(s))
                    for g, s in self.per_group.items()
                },
                "overall": _group_percent(self.overall),
            },
        }

    def render_table(self):
        """Fixed-width percent table for terminals and text reports."""
        header = f"{'class':<20}{'TETA':>9}{'LocA':>9}{'AssocA':>9}{'ClsA':>9}{'LocRe':>9}{'LocPr':>9}"
        lines = [header, "-" * len(header)]

        def fmt(v):
            return "-" if v is None else f"{to_percent(v):.2f}"

        for cs in self.per_class:
            lines.append(
                f"{cs.name:<20}{fmt(cs.teta):>9}{fmt(cs.loc.loc_a):>9}{fmt(cs.assoc_a):>9}"
                f"{fmt(cs.cls_a):>9}{fmt(cs.loc.loc_re):>9}{fmt(cs.loc.loc_pr):>9}"
            )
        lines.append("-" * len(header))
        for group in ("rare", "common", "frequent"):
            s = self.per_group.get(group)
            if s is not None:
                lines.append(
                    f"{group:<20}{fmt(s.teta):>9}{fmt(s.loc_a):>9}{fmt(s.assoc_a):>9}{fmt(s.cls_a):>9}"
                )
        s = self.overall
        lines.append(f"{'all':<20}{fmt(s.teta):>9}{fmt(s.loc_a):>9}{fmt(s.assoc_a):>9}{fmt(s.cls_a):>9}")
        return "\n".join(lines) + "\n"


def _group_dict(s):
    return {
        "teta": s.teta,
        "loc_a": s.loc_a,
        "assoc_a": s.assoc_a,
        "cls_a": s.cls_a,
        "num_classes": s.num_classes,
    }


def _group_percent(s):
    return {
        "teta": to_percent(s.teta),
        "loc_a": to_percent(s.loc_a),
        "assoc_a": to_percent(s.assoc_a),
        "cls_a": to_percent(s.cls_a),
        "num_classes": s.num_classes,
    }


def to_percent(x):
    """Score fraction -> percent, rounded half-to-even to 2 decimals."""
    if x is None:
        return None
    return float(Decimal(repr(x * 100.0)).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN))


def _collapse_categories(ds):
    """Relabel every box to the single shared category."""
    sequences = []
    for seq in ds.sequences:
        frames = []
        for f in seq.frames:
            frames.append(
                Frame(
                    f.frame_index,
                    tuple(replace(b, category_id=SINGLE_CATEGORY_ID) for b in f.gt),
                    tuple(replace(b, category_id=SINGLE_CATEGORY_ID) for b in f.preds),
                )
            )
        sequences.append(Sequence(seq.sequence_id, tuple(frames), seq.fps_hint))
    table = CategoryTable({SINGLE_CATEGORY_ID: CategoryEntry("object")})
    return canonicalize(Dataset(tuple(sequences), table))


def _evaluate_sequence(seq, cfg):
    match = match_sequence(seq, cfg.alpha)
    clusters = clusters_for_match(match, cfg.margin_r)
    loc = localization_scores(match, clusters, cfg.mode)
    assoc = association_scores(match)
    cls = classification_scores(match, clusters, cfg.mode, cfg.cls_alpha_floor)
    return loc, assoc, cls


def evaluate(gt, pred, cfg, jobs=1):
    """Evaluate predictions against ground truth; see module docstring."""
    gt = canonicalize(gt)
    pred = canonicalize(pred)
    if gt.num_gt_boxes() == 0:
        raise ValueError("nothing to evaluate: ground truth has no boxes")
    if cfg.top_k is not None:
        pred = top_k_filter(pred, cfg.top_k)
    combined = merge_gt_pred(gt, pred)
    if cfg.mode == "single_category":
        combined = _collapse_categories(combined)

    loc_total = defaultdict(LocCounts)
    cls_total = defaultdict(ClsCounts)
    assoc_sum = defaultdict(float)
    assoc_n = defaultdict(int)
    pooled_assoc_sum = 0.0
    pooled_assoc_n = 0

    sequences = list(combined.sequences)
    if jobs > 1 and len(sequences) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(lambda s: _evaluate_sequence(s, cfg), sequences))
    else:
        results = [_evaluate_sequence(s, cfg) for s in sequences]

    # reduction iterates sequences in id order so results never depend on jobs
    for loc, assoc, cls in results:
        for c, counts in loc.items():
            loc_total[c] = loc_total[c] + counts
        for c, counts in cls.items():
            cls_total[c] = cls_total[c] + counts
        for c in sorted(assoc.class_sum):
            assoc_sum[c] += assoc.class_sum[c]
            assoc_n[c] += assoc.class_tpl[c]
        pooled_assoc_sum += assoc.pooled_sum
        pooled_assoc_n += assoc.pooled_tpl

    present = [
        cid
        for cid in sorted(combined.categories.entries)
        if combined.categories.entries[cid].gt_track_count > 0
    ]
    single = cfg.mode == "single_category"
    per_class = []
    for cid in present:
        loc = loc_total.get(cid, LocCounts())
        cls = cls_total.get(cid, ClsCounts())
        n = assoc_n.get(cid, 0)
        assoc_a = assoc_sum.get(cid, 0.0) / n if n else 0.0
        if single:
            cls_a = None
            teta = (loc.loc_a + assoc_a) / 2.0
        else:
            cls_a = cls.cls_a
            teta = compose_teta(loc.loc_a, assoc_a, cls_a)
        per_class.append(
            ClassScores(
                category_id=cid,
                name=combined.categories.name_of(cid),
                loc=loc,
                cls=cls,
                assoc_a=assoc_a,
                assoc_tpl=n,
                cls_a=cls_a,
                teta=teta,
            )
        )

    groups = frequency_groups(combined.categories, cfg.freq_thresholds)
    per_group = {}
    for group in ("rare", "common", "frequent"):
        members = [cs for cs in per_class if groups.get(cs.category_id) == group]
        per_group[group] = _mean_scores(members, single)
    overall = _mean_scores(per_class, single)

    pooled_loc = LocCounts()
    for counts in loc_total.values():
        pooled_loc = pooled_loc + counts
    pooled_assoc = pooled_assoc_sum / pooled_assoc_n if pooled_assoc_n else 0.0

    return TetaReport(
        config=cfg,
        per_class=tuple(per_class),
        per_group=per_group,
        overall=overall,
        pooled_loc=pooled_loc,
        pooled_assoc_a=pooled_assoc,
        pooled_assoc_tpl=pooled_assoc_n,
    )


def _mean_scores(members, single):
    if not members:
        return None
    n = len(members)
    loc_a = sum(cs.loc.loc_a for cs in members) / n
    assoc_a = sum(cs.assoc_a for cs in members) / n
    if single:
        cls_a = None
        teta = (loc_a + assoc_a) / 2.0
    else:
        cls_a = sum(cs.cls_a for cs in members) / n
        teta = compose_teta(loc_a, assoc_a, cls_a)
    return GroupScores(teta=teta, loc_a=loc_a, assoc_a=assoc_a, cls_a=cls_a, num_classes=n)
