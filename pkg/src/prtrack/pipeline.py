"""End-to-end orchestration: scenario -> training -> embedding -> online
tracking -> tracklet merging -> team/role assignment -> evaluation.

Each stage is usable on its own; the CLI wires them to files.
"""

from __future__ import annotations

import numpy as np

from . import reference
from .config import RunConfig
from .core import BoundingBox, Detection, Role, Tracklet
from .embedder import EmbedderModel, GridSample, forward_batch, train
from .motio import FeatureRecord, MotRecord
from .postproc import (MergeConfig, TooFewPlayers, assign_roles, assign_teams,
                       merge_tracklets)
from .reid_metrics import RetrievalItem, RetrievalSet, evaluate_retrieval, \
    role_metrics
from .simgen import Scenario, generate, to_reid_dataset, to_tracking_input
from .solvers import DegenerateInput
from .track_metrics import SequenceResult, evaluate_sequence
from .tracker import FrameInput, OnlineTracker

__all__ = [
    "train_on_scenario",
    "embed_samples",
    "embed_detections",
    "track_frames",
    "tracklets_to_records",
    "records_to_result",
    "gt_to_records",
    "evaluate_reid",
    "team_accuracy",
    "run_pipeline",
]


def train_on_scenario(cfg: RunConfig, scenario: Scenario):
    """Train the embedding model on the scenario's training identities."""
    train_set, queries, gallery = to_reid_dataset(
        scenario, sampling_stride=cfg.sampling_stride)
    model, history = train(cfg.train, train_set)
    return model, history, (train_set, queries, gallery)


def embed_samples(model: EmbedderModel,
                  samples: list[GridSample]) -> list[RetrievalItem]:
    if not samples:
        return []
    feats, role_logits = forward_batch(model, [s.grid for s in samples])
    return [RetrievalItem(f, s.identity, s.team, s.role, s.view)
            for f, s in zip(feats, samples)]


def embed_detections(model: EmbedderModel, scenario: Scenario,
                     frame_inputs: list[list[Detection]]) -> None:
    """Replace detection features and role logits with model outputs,
    in place."""
    for frame_idx, dets in enumerate(frame_inputs):
        if not dets:
            continue
        obs_by_id = {ob.identity: ob
                     for ob in scenario.frames[frame_idx] if ob.present}
        grids = [obs_by_id[d.gt_identity].grid for d in dets]
        feats, role_logits = forward_batch(model, grids)
        for d, f, rl in zip(dets, feats, role_logits):
            d.features = f
            d.role_logits = rl


def track_frames(frame_inputs: list[list[Detection]],
                 cfg: RunConfig) -> list[Tracklet]:
    tracker = OnlineTracker(cfg.tracker)
    for frame_idx, dets in enumerate(frame_inputs):
        tracker.step(FrameInput(frame=frame_idx + 1, detections=dets))
    return tracker.finish()


def tracklets_to_records(tracklets: list[Tracklet],
                         id_map: dict[int, int] | None = None
                         ) -> list[MotRecord]:
    records = []
    for t in tracklets:
        tid = id_map.get(t.id, t.id) if id_map else t.id
        for d in t.detections:
            records.append(MotRecord(
                frame=d.frame, id=tid,
                bb_left=d.box.x, bb_top=d.box.y,
                bb_width=d.box.w, bb_height=d.box.h,
                conf=d.confidence))
    return records


def gt_to_records(gt_records) -> list[MotRecord]:
    return [MotRecord(frame=f, id=i, bb_left=b.x, bb_top=b.y,
                      bb_width=b.w, bb_height=b.h)
            for f, i, b in gt_records]


def records_to_result(gt: list[MotRecord],
                      pred: list[MotRecord]) -> SequenceResult:
    gt_frames: dict[int, list] = {}
    pred_frames: dict[int, list] = {}
    for r in gt:
        gt_frames.setdefault(r.frame, []).append((r.id, r.box))
    for r in pred:
        pred_frames.setdefault(r.frame, []).append((r.id, r.box))
    return SequenceResult(gt=gt_frames, pred=pred_frames)


def evaluate_reid(model: EmbedderModel, queries: list[GridSample],
                  gallery: list[GridSample]) -> dict:
    """Identity/team retrieval and role classification over a split."""
    q_items = embed_samples(model, queries)
    g_items = embed_samples(model, gallery)
    retrieval = RetrievalSet(q_items, g_items)
    reid_map, reid_r1 = evaluate_retrieval(retrieval, "identity")
    team_map, team_r1 = evaluate_retrieval(retrieval, "team")
    _, q_role_logits = forward_batch(model, [s.grid for s in queries])
    preds = [Role(int(np.argmax(rl))) for rl in q_role_logits]
    truths = [s.role for s in queries]
    acc, prec = role_metrics(preds, truths)
    return {
        "reid_map": reid_map, "reid_rank1": reid_r1,
        "team_map": team_map, "team_rank1": team_r1,
        "role_accuracy": acc, "role_precision": prec,
    }


def team_accuracy(tracklets: list[Tracklet], seed: int = 0) -> float:
    """Clustering accuracy of team assignment against majority ground-truth
    team per tracklet, maximized over the two label permutations."""
    roles = assign_roles(tracklets)
    try:
        teams = assign_teams(tracklets, seed=seed, roles=roles)
    except (TooFewPlayers, DegenerateInput):
        return float("nan")
    truth = {}
    for t in tracklets:
        if t.id not in teams:
            continue
        gt_teams = [d.gt_team for d in t.detections if d.gt_team is not None]
        if not gt_teams:
            continue
        truth[t.id] = int(np.bincount(gt_teams).argmax())
    common = [tid for tid in teams if tid in truth]
    if not common:
        return float("nan")
    pred = np.array([teams[t] for t in common])
    gt = np.array([truth[t] for t in common])
    direct = (pred == gt).mean()
    flipped = (1 - pred == gt).mean()
    return float(max(direct, flipped))


def run_pipeline(cfg: RunConfig) -> dict:
    """Full chain on one seed; returns the report dictionary."""
    return run_pipeline_full(cfg)[0]


def run_pipeline_full(cfg: RunConfig):
    """Full chain; returns (report, artifacts) where artifacts holds the
    model, tracklets, and MOT record lists for file output."""
    scenario = generate(cfg.scenario)
    model, history, (train_set, queries, gallery) = train_on_scenario(
        cfg, scenario)
    frame_inputs, gt_records = to_tracking_input(
        scenario, detector_noise=cfg.detector_noise,
        noise_param=cfg.detector_noise_param, features="none", seed=cfg.seed)
    embed_detections(model, scenario, frame_inputs)
    tracklets = track_frames(frame_inputs, cfg)
    merged, id_map = merge_tracklets(tracklets, cfg.merge)

    gt_mot = gt_to_records(gt_records)
    pred_mot = tracklets_to_records(merged)
    result = records_to_result(gt_mot, pred_mot)
    track_report = evaluate_sequence(result)

    reid_report = evaluate_reid(model, queries, gallery)
    cluster_acc = team_accuracy(merged, seed=cfg.seed)

    report = {
        "seed": cfg.seed,
        "training": {"initial_loss": history[0], "final_loss": history[-1]},
        "reid": reid_report,
        "team_cluster_accuracy": cluster_acc,
        "tracking": {
            "hota": track_report.hota, "deta": track_report.deta,
            "assa": track_report.assa, "mota": track_report.mota,
            "idf1": track_report.idf1,
            "id_switches": track_report.id_switches,
            "tracklets_before_merge": len(tracklets),
            "tracklets_after_merge": len(merged),
        },
        "reference": {
            "label": reference.REFERENCE_LABEL,
            "reid": reference.REID_REFERENCE,
            "tracking_gt": reference.TRACKING_REFERENCE_GT,
            "tracking_det": reference.TRACKING_REFERENCE_DET,
            "team_cluster": reference.TEAM_CLUSTER_REFERENCE,
        },
    }
    artifacts = {
        "model": model,
        "tracklets": tracklets,
        "merged": merged,
        "gt_mot": gt_mot,
        "raw_mot": tracklets_to_records(tracklets),
        "merged_mot": pred_mot,
    }
    return report, artifacts
