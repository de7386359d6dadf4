"""Independent brute-force reference implementations used to check the
library's solvers and metrics.  Everything here is written from the plain
definitions with exhaustive enumeration; nothing is shared with the package
internals beyond basic types."""

import itertools

import numpy as np

from prtrack.core import iou


def brute_assignment(costs):
    """Minimum-cost complete assignment by enumerating all permutations.

    Returns (best total cost, set of pair sets achieving it).  Only finite
    matrices; rectangular allowed (assigns min(m, n) pairs).
    """
    costs = np.asarray(costs, dtype=float)
    m, n = costs.shape
    transposed = False
    if m > n:
        costs = costs.T
        m, n = n, m
        transposed = True
    best = None
    best_sets = []
    for cols in itertools.permutations(range(n), m):
        total = sum(costs[r, c] for r, c in enumerate(cols))
        if best is None or total < best - 1e-12:
            best = total
            best_sets = [frozenset(enumerate(cols))]
        elif abs(total - best) <= 1e-12:
            best_sets.append(frozenset(enumerate(cols)))
    if transposed:
        best_sets = [frozenset((c, r) for r, c in s) for s in best_sets]
    return best, best_sets


def brute_frame_match(gt_frame, pred_frame, alpha):
    """IoU-optimal per-frame matching by enumeration: among injective
    gt->pred mappings restricted to IoU >= alpha, pick the one with the
    largest pair count, then the largest total IoU."""
    ng, npr = len(gt_frame), len(pred_frame)
    ious = np.zeros((ng, npr))
    for i, (_, gb) in enumerate(gt_frame):
        for j, (_, pb) in enumerate(pred_frame):
            ious[i, j] = iou(gb, pb)
    best_pairs = []
    best_key = (-1, -np.inf)
    rows = list(range(ng))
    for r in range(min(ng, npr), -1, -1):
        for row_sub in itertools.combinations(rows, r):
            for cols in itertools.permutations(range(npr), r):
                if any(ious[i, j] < alpha for i, j in zip(row_sub, cols)):
                    continue
                total = sum(ious[i, j] for i, j in zip(row_sub, cols))
                key = (r, total)
                if key > best_key:
                    best_key = key
                    best_pairs = list(zip(row_sub, cols))
        if best_key[0] == r and best_pairs:
            break
    return best_pairs


def _matches(gt, pred, alpha):
    frames = sorted(set(gt) | set(pred))
    out = {}
    for f in frames:
        gt_f = gt.get(f, [])
        pr_f = pred.get(f, [])
        pairs = brute_frame_match(gt_f, pr_f, alpha)
        out[f] = [(gt_f[i][0], pr_f[j][0]) for i, j in pairs]
    return out


def brute_hota(gt, pred, alphas):
    """(HOTA, DetA, AssA) from the definitions, averaged over alphas."""
    n_gt = sum(len(v) for v in gt.values())
    n_pred = sum(len(v) for v in pred.values())
    gt_tot = {}
    for v in gt.values():
        for i, _ in v:
            gt_tot[i] = gt_tot.get(i, 0) + 1
    pr_tot = {}
    for v in pred.values():
        for i, _ in v:
            pr_tot[i] = pr_tot.get(i, 0) + 1
    hs, ds, As = [], [], []
    for alpha in alphas:
        matches = _matches(gt, pred, alpha)
        pairs = [p for v in matches.values() for p in v]
        tp = len(pairs)
        fn, fp = n_gt - tp, n_pred - tp
        deta = tp / (tp + fn + fp) if tp + fn + fp else 0.0
        if tp == 0:
            assa = 0.0
        else:
            counts = {}
            for p in pairs:
                counts[p] = counts.get(p, 0) + 1
            s = 0.0
            for (gi, pi), tpa in counts.items():
                s += tpa * tpa / (gt_tot[gi] + pr_tot[pi] - tpa)
            assa = s / tp
        ds.append(deta)
        As.append(assa)
        hs.append((deta * assa) ** 0.5)
    return (float(np.mean(hs)), float(np.mean(ds)), float(np.mean(As)))


def brute_mota_ids(gt, pred, alpha=0.5):
    n_gt = sum(len(v) for v in gt.values())
    matches = _matches(gt, pred, alpha)
    tp = sum(len(v) for v in matches.values())
    fn = n_gt - tp
    fp = sum(len(v) for v in pred.values()) - tp
    last = {}
    idsw = 0
    for f in sorted(matches):
        for gi, pi in matches[f]:
            if gi in last and last[gi] != pi:
                idsw += 1
            last[gi] = pi
    mota = 1.0 - (fn + fp + idsw) / n_gt if n_gt else 0.0
    return mota, idsw


def brute_idf1(gt, pred, alpha=0.5):
    """IDF1 by enumerating all injective gt-id -> pred-id mappings."""
    overlap = {}
    gt_ids, pred_ids = set(), set()
    frames = sorted(set(gt) | set(pred))
    for f in frames:
        for gi, _ in gt.get(f, []):
            gt_ids.add(gi)
        for pi, _ in pred.get(f, []):
            pred_ids.add(pi)
        for gi, gb in gt.get(f, []):
            for pi, pb in pred.get(f, []):
                if iou(gb, pb) >= alpha:
                    overlap[(gi, pi)] = overlap.get((gi, pi), 0) + 1
    gl, pl = sorted(gt_ids), sorted(pred_ids)
    if not gl or not pl:
        return 0.0
    best = 0
    r = min(len(gl), len(pl))
    for gsub in itertools.combinations(gl, r):
        for psub in itertools.permutations(pl, r):
            idtp = sum(overlap.get((g, p), 0) for g, p in zip(gsub, psub))
            best = max(best, idtp)
    n_gt = sum(len(v) for v in gt.values())
    n_pred = sum(len(v) for v in pred.values())
    denom = 2 * best + (n_gt - best) + (n_pred - best)
    return 2 * best / denom if denom else 0.0
