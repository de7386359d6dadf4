import numpy as np
import pytest

from prtrack.core import (BoundingBox, Detection, PartFeatureSet, Role,
                          Tracklet)
from prtrack.postproc import (MergeConfig, TooFewPlayers, assign_roles,
                              assign_teams, merge_tracklets,
                              tracklet_cost_matrix)


def feat(vec, vis=None, k=2):
    vec = np.asarray(vec, dtype=float)
    if vis is None:
        vis = np.ones(k + 1, dtype=int)
    return PartFeatureSet(parts=np.tile(vec, (k, 1)), foreground=vec,
                          visibility=np.asarray(vis))


def tracklet(tid, frames, vec, vis=None, role=Role.PLAYER, team=None):
    dets = [Detection(frame=f, box=BoundingBox(0, 0, 10, 10),
                      gt_team=team, gt_role=role) for f in frames]
    logits = np.full(4, -1.0)
    logits[int(role)] = 1.0
    return Tracklet(id=tid, detections=dets, ema_features=feat(vec, vis),
                    role_logit_sum=logits * len(frames))


def test_cost_matrix_diagonal_and_overlap():
    a = tracklet(1, [1, 2, 3], [0.0, 0.0])
    b = tracklet(2, [2, 3, 4], [0.0, 0.0])       # overlaps a
    c = tracklet(3, [10, 11], [0.0, 0.0])
    costs = tracklet_cost_matrix([a, b, c])
    assert np.isinf(costs[0, 0]) and np.isinf(costs[1, 1])
    assert np.isinf(costs[0, 1]) and np.isinf(costs[1, 0])
    assert costs[0, 2] == pytest.approx(0.0)
    allow = tracklet_cost_matrix([a, b, c],
                                 MergeConfig(allow_temporal_overlap=True))
    assert allow[0, 1] == pytest.approx(0.0)


def test_merge_joins_matching_fragments():
    a = tracklet(1, [1, 2, 3], [1.0, 0.0])
    b = tracklet(5, [10, 11, 12], [1.0, 0.05])
    c = tracklet(7, [20, 21], [9.0, 9.0])
    merged, id_map = merge_tracklets([a, b, c])
    assert len(merged) == 2
    assert id_map == {1: 1, 5: 1, 7: 7}
    joined = next(t for t in merged if t.id == 1)
    assert [d.frame for d in joined.detections] == [1, 2, 3, 10, 11, 12]


def test_merge_features_count_weighted():
    a = tracklet(1, [1, 2, 3], [0.0, 0.0])       # 3 detections
    b = tracklet(2, [10], [0.3, 0.0])            # 1 detection
    merged, _ = merge_tracklets([a, b], MergeConfig(merge_threshold=0.5))
    assert len(merged) == 1
    np.testing.assert_allclose(merged[0].ema_features.foreground,
                               [0.075, 0.0], atol=1e-12)


def test_merge_respects_threshold():
    a = tracklet(1, [1, 2], [0.0, 0.0])
    b = tracklet(2, [10, 11], [1.0, 0.0])
    merged, id_map = merge_tracklets([a, b], MergeConfig(merge_threshold=0.3))
    assert len(merged) == 2
    assert id_map == {1: 1, 2: 2}


def test_merge_rounds_chain_fragments():
    a = tracklet(1, [1, 2], [0.0, 0.0])
    b = tracklet(2, [10, 11], [0.05, 0.0])
    c = tracklet(3, [20, 21], [0.1, 0.0])
    merged, id_map = merge_tracklets([a, b, c])
    assert len(merged) == 1
    assert set(id_map.values()) == {1}


def test_foreground_only_ignores_part_mismatch():
    base = np.array([0.0, 0.0])
    a = tracklet(1, [1, 2], base)
    b = tracklet(2, [10, 11], base)
    # corrupt one part embedding of b far beyond the threshold
    parts = b.ema_features.parts.copy()
    parts[1] += 10.0
    b.ema_features = PartFeatureSet(parts=parts, foreground=base,
                                    visibility=b.ema_features.visibility)
    part_based, _ = merge_tracklets([a, b])
    assert len(part_based) == 2
    fg_only, _ = merge_tracklets([a, b], MergeConfig(foreground_only=True))
    assert len(fg_only) == 1


def test_assign_roles_votes_and_tie_breaks():
    t = tracklet(1, [1, 2], [0.0, 0.0], role=Role.REFEREE)
    roles = assign_roles([t])
    assert roles[1] == Role.REFEREE
    t.role_logit_sum = np.zeros(4)
    assert assign_roles([t])[1] == Role.PLAYER  # lowest index wins ties
    t.role_logit_sum = None
    with pytest.raises(ValueError):
        assign_roles([t])


def test_assign_teams_two_clusters():
    left = [tracklet(i, [i], [5.0, 0.0]) for i in range(1, 5)]
    right = [tracklet(i, [i], [-5.0, 0.0]) for i in range(5, 9)]
    ref = tracklet(9, [1], [0.0, 9.0], role=Role.REFEREE)
    teams = assign_teams(left + right + [ref], seed=0)
    assert 9 not in teams
    assert len({teams[t.id] for t in left}) == 1
    assert len({teams[t.id] for t in right}) == 1
    assert teams[1] != teams[5]


def test_assign_teams_too_few_players():
    ref = tracklet(1, [1], [0.0, 0.0], role=Role.REFEREE)
    staff = tracklet(2, [1], [1.0, 0.0], role=Role.STAFF)
    with pytest.raises(TooFewPlayers):
        assign_teams([ref, staff])


def test_merge_config_validation():
    with pytest.raises(ValueError):
        MergeConfig(merge_threshold=0.0)
