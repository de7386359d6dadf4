"""Tracking metrics: HOTA (with DetA/AssA), CLEAR-MOT accuracy with
identity switches, and identity-F1 under optimal global id matching.

All metrics share one per-frame matching primitive: minimum-cost bipartite
matching on (1 - IoU) restricted to pairs with IoU at or above the
localization threshold.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .core import BoundingBox, iou
from .solvers import hungarian

__all__ = [
    "EmptyGroundTruth",
    "SequenceResult",
    "EvalReport",
    "frame_match",
    "hota",
    "mota_ids",
    "idf1",
    "evaluate_sequence",
]

DEFAULT_ALPHAS = tuple(np.round(np.arange(0.05, 1.0, 0.05), 2))


class EmptyGroundTruth(Exception):
    pass


@dataclass
class SequenceResult:
    """Per-frame ground truth and predictions: frame -> [(id, box)]."""

    gt: dict[int, list[tuple[int, BoundingBox]]]
    pred: dict[int, list[tuple[int, BoundingBox]]]

    def frames(self):
        return sorted(set(self.gt) | set(self.pred))

    def gt_count(self) -> int:
        return sum(len(v) for v in self.gt.values())

    def pred_count(self) -> int:
        return sum(len(v) for v in self.pred.values())


@dataclass
class EvalReport:
    hota: float = 0.0
    deta: float = 0.0
    assa: float = 0.0
    mota: float = 0.0
    idf1: float = 0.0
    id_switches: int = 0
    per_sequence: dict[str, dict] = field(default_factory=dict)


def frame_match(gt_frame: list[tuple[int, BoundingBox]],
                pred_frame: list[tuple[int, BoundingBox]],
                alpha_loc: float) -> list[tuple[int, int]]:
    """Matched (gt index, pred index) pairs by IoU-optimal assignment,
    restricted to pairs with IoU >= alpha_loc."""
    if not gt_frame or not pred_frame:
        return []
    cost = np.ones((len(gt_frame), len(pred_frame)))
    for i, (_, gb) in enumerate(gt_frame):
        for j, (_, pb) in enumerate(pred_frame):
            v = iou(gb, pb)
            cost[i, j] = 1.0 - v if v >= alpha_loc else np.inf
    return hungarian(cost).pairs


def _matches_per_frame(result: SequenceResult, alpha: float):
    """Per-frame list of matched (gt id, pred id) pairs."""
    out = {}
    for f in result.frames():
        gt_f = result.gt.get(f, [])
        pr_f = result.pred.get(f, [])
        pairs = frame_match(gt_f, pr_f, alpha)
        out[f] = [(gt_f[i][0], pr_f[j][0]) for i, j in pairs]
    return out


def hota(result: SequenceResult,
         alphas=DEFAULT_ALPHAS) -> tuple[float, float, float]:
    """(HOTA, DetA, AssA) averaged over the localization thresholds."""
    n_gt = result.gt_count()
    if n_gt == 0:
        raise EmptyGroundTruth("no ground-truth boxes")
    n_pred = result.pred_count()
    gt_totals = Counter(i for v in result.gt.values() for i, _ in v)
    pred_totals = Counter(i for v in result.pred.values() for i, _ in v)

    hotas, detas, assas = [], [], []
    for alpha in alphas:
        matches = _matches_per_frame(result, alpha)
        tp_pairs = [p for pairs in matches.values() for p in pairs]
        tp = len(tp_pairs)
        fn = n_gt - tp
        fp = n_pred - tp
        deta = tp / (tp + fn + fp) if (tp + fn + fp) else 0.0
        if tp == 0:
            assa = 0.0
        else:
            co = Counter(tp_pairs)
            acc = 0.0
            for (gi, pi), tpa in co.items():
                fna = gt_totals[gi] - tpa
                fpa = pred_totals[pi] - tpa
                acc += tpa * (tpa / (tpa + fna + fpa))
            assa = acc / tp
        detas.append(deta)
        assas.append(assa)
        hotas.append(np.sqrt(deta * assa))
    return float(np.mean(hotas)), float(np.mean(detas)), float(np.mean(assas))


def mota_ids(result: SequenceResult,
             alpha: float = 0.5) -> tuple[float, int]:
    """CLEAR-MOT accuracy and identity-switch count.

    A switch is counted whenever a ground-truth id's matched prediction id
    differs from its previous matched prediction id.
    """
    n_gt = result.gt_count()
    matches = _matches_per_frame(result, alpha)
    tp = sum(len(v) for v in matches.values())
    fn = n_gt - tp
    fp = result.pred_count() - tp
    last_match: dict[int, int] = {}
    idsw = 0
    for f in result.frames():
        for gi, pi in matches[f]:
            if gi in last_match and last_match[gi] != pi:
                idsw += 1
            last_match[gi] = pi
    mota = 1.0 - (fn + fp + idsw) / n_gt if n_gt else 0.0
    return float(mota), idsw


def idf1(result: SequenceResult, alpha: float = 0.5) -> float:
    """Identity-F1: optimal global gt-id/pred-id matching maximizing the
    per-frame overlap count, then F1 over identity-true detections."""
    overlap: dict[tuple[int, int], int] = defaultdict(int)
    gt_ids, pred_ids = set(), set()
    for f in result.frames():
        for gi, gb in result.gt.get(f, []):
            gt_ids.add(gi)
        for pi, pb in result.pred.get(f, []):
            pred_ids.add(pi)
        for gi, gb in result.gt.get(f, []):
            for pi, pb in result.pred.get(f, []):
                if iou(gb, pb) >= alpha:
                    overlap[(gi, pi)] += 1
    if not pred_ids or not gt_ids:
        return 0.0
    gt_list = sorted(gt_ids)
    pred_list = sorted(pred_ids)
    cost = np.zeros((len(gt_list), len(pred_list)))
    for i, gi in enumerate(gt_list):
        for j, pi in enumerate(pred_list):
            cost[i, j] = -overlap.get((gi, pi), 0)
    pairs = hungarian(cost).pairs
    idtp = sum(overlap.get((gt_list[i], pred_list[j]), 0) for i, j in pairs)
    idfn = result.gt_count() - idtp
    idfp = result.pred_count() - idtp
    denom = 2 * idtp + idfp + idfn
    return 2 * idtp / denom if denom else 0.0


def evaluate_sequence(result: SequenceResult, name: str = "seq") -> EvalReport:
    h, d, a = hota(result)
    m, ids = mota_ids(result)
    f1 = idf1(result)
    report = EvalReport(hota=h, deta=d, assa=a, mota=m, idf1=f1,
                        id_switches=ids)
    report.per_sequence[name] = {
        "hota": h, "deta": d, "assa": a, "mota": m, "idf1": f1,
        "id_switches": ids,
    }
    return report
