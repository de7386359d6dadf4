"""Synthetic soccer-scenario generator.

Produces ground truth for a desk-scale match clip: smooth agent
trajectories on a pitch, identities, teams, roles, occlusion/exit events,
and per-frame feature-grid observations whose cell contents encode a latent
appearance (role/team centroid + identity offset + noise) plus a per-part
signature, so the embedding model has learnable signal for all three tasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .core import BoundingBox, Detection, PartFeatureSet, Role
from .embedder import FeatureGrid, GridSample

__all__ = [
    "ConfigInvalid",
    "ScenarioConfig",
    "Agent",
    "Observation",
    "Scenario",
    "generate",
    "to_reid_dataset",
    "to_tracking_input",
    "oracle_feature_projection",
]


class ConfigInvalid(Exception):
    pass


@dataclass(frozen=True)
class ScenarioConfig:
    # Roster and clip length mirror a 30 s broadcast clip at 25 fps.
    n_players_per_team: int = 10
    n_goalkeepers: int = 2
    n_referees: int = 2
    n_staff: int = 1
    frames: int = 750
    pitch_width: float = 1920.0
    pitch_height: float = 1080.0
    occlusion_rate: float = 0.0
    exit_rate: float = 0.0
    feature_noise_sigma: float = 0.3
    role_separation: float = 3.0
    team_separation: float = 3.0
    identity_separation: float = 1.0
    part_signature_scale: float = 2.0
    grid_h: int = 8
    grid_w: int = 4
    channels: int = 16
    num_parts: int = 5
    seed: int = 0

    def validate(self):
        if self.n_players_per_team < 1 or self.frames < 1:
            raise ConfigInvalid("need at least one player per team and one frame")
        if not (0.0 <= self.occlusion_rate <= 1.0):
            raise ConfigInvalid("occlusion_rate must be in [0, 1]")
        if not (0.0 <= self.exit_rate <= 1.0):
            raise ConfigInvalid("exit_rate must be in [0, 1]")
        if self.feature_noise_sigma < 0:
            raise ConfigInvalid("feature_noise_sigma must be >= 0")
        if min(self.team_separation, self.role_separation,
               self.identity_separation) < 0:
            raise ConfigInvalid("separations must be >= 0")
        needed = 6 + self.num_parts + 1
        if self.channels < needed:
            raise ConfigInvalid(
                f"channels must be >= {needed} to host centroids and part "
                f"signatures")


@dataclass
class Agent:
    identity: int
    team: int | None  # 0 left / 1 right; None for referees and staff
    role: Role
    latent: np.ndarray  # (C,)


@dataclass
class Observation:
    """One agent in one frame."""

    frame: int
    identity: int
    present: bool
    box: BoundingBox | None
    part_visible: np.ndarray | None  # (K,)
    grid: FeatureGrid | None


@dataclass
class Scenario:
    config: ScenarioConfig
    agents: list[Agent]
    frames: list[list[Observation]]  # frames[t] = observations of all agents
    events: list[tuple] = field(default_factory=list)

    def agent(self, identity: int) -> Agent:
        return next(a for a in self.agents if a.identity == identity)


def _part_layout(h: int, w: int, k: int) -> np.ndarray:
    """Base silhouette labels: vertical part bands, background margins at
    the top and bottom corners."""
    labels = np.zeros((h, w), dtype=int)
    edges = np.linspace(0, h, k + 1)
    for row in range(h):
        part = int(np.searchsorted(edges, row + 0.5) )
        labels[row, :] = min(max(part, 1), k)
    if w >= 3:
        labels[0, 0] = 0
        labels[0, w - 1] = 0
        labels[h - 1, 0] = 0
        labels[h - 1, w - 1] = 0
    return labels


def _sample_events(rng: np.random.Generator, frames: int, rate: float,
                   dur_lo: int, dur_hi: int) -> list[tuple[int, int]]:
    """Event windows (start, end) covering roughly ``rate`` of the clip."""
    if rate <= 0:
        return []
    mean_dur = (dur_lo + dur_hi) / 2.0
    mean_gap = max(1.0, mean_dur * (1.0 - rate) / rate)
    events = []
    t = int(rng.exponential(mean_gap))
    while t < frames:
        dur = int(rng.integers(dur_lo, dur_hi + 1))
        events.append((t, min(frames, t + dur)))
        t += dur + max(1, int(rng.exponential(mean_gap)))
    return events


def generate(config: ScenarioConfig) -> Scenario:
    """Build a full scenario, deterministic per seed."""
    config.validate()
    rng = np.random.default_rng(config.seed)
    c, k = config.channels, config.num_parts

    # Orthogonal directions: one axis per role, one team axis each for
    # players and goalkeepers, then part signatures.  Role separation and
    # team separation are controlled independently.
    q, _ = np.linalg.qr(rng.normal(size=(c, c)))
    rs, ts = config.role_separation, config.team_separation
    centroids = {
        (Role.PLAYER, 0): rs * q[:, 0] - 0.5 * ts * q[:, 4],
        (Role.PLAYER, 1): rs * q[:, 0] + 0.5 * ts * q[:, 4],
        (Role.GOALKEEPER, 0): rs * q[:, 1] - 0.5 * ts * q[:, 5],
        (Role.GOALKEEPER, 1): rs * q[:, 1] + 0.5 * ts * q[:, 5],
        (Role.REFEREE, None): rs * q[:, 2],
        (Role.STAFF, None): rs * q[:, 3],
    }
    signatures = config.part_signature_scale * q[:, 6:6 + k + 1].T  # (K+1, C)

    agents: list[Agent] = []
    ident = 1
    def add(role, team):
        nonlocal ident
        offset = rng.normal(size=c)
        offset *= config.identity_separation / np.linalg.norm(offset)
        key = (role, team if role in (Role.PLAYER, Role.GOALKEEPER) else None)
        agents.append(Agent(ident, team, role, centroids[key] + offset))
        ident += 1

    for team in (0, 1):
        for _ in range(config.n_players_per_team):
            add(Role.PLAYER, team)
    for j in range(config.n_goalkeepers):
        add(Role.GOALKEEPER, j % 2)
    for _ in range(config.n_referees):
        add(Role.REFEREE, None)
    for _ in range(config.n_staff):
        add(Role.STAFF, None)

    # Smooth trajectories: bounded-acceleration random walk with wall bounce.
    n_agents = len(agents)
    pw, ph = config.pitch_width, config.pitch_height
    pos = np.column_stack([rng.uniform(0.1 * pw, 0.9 * pw, n_agents),
                           rng.uniform(0.1 * ph, 0.9 * ph, n_agents)])
    vel = rng.normal(0.0, 2.0, size=(n_agents, 2))
    box_h = rng.uniform(100.0, 140.0, n_agents)
    box_w = box_h * rng.uniform(0.38, 0.46, n_agents)
    v_max = 6.0

    base_labels = _part_layout(config.grid_h, config.grid_w, k)
    sig_grid = signatures[base_labels]  # (H, W, C) for the unoccluded layout

    # Occlusion and exit windows per agent.  Long occlusions ramp through a
    # partial phase (some parts hidden), a full phase (detection absent),
    # and a partial reappearance phase; short ones stay partial throughout.
    occl = [_sample_events(rng, config.frames, config.occlusion_rate, 10, 60)
            for _ in range(n_agents)]

    def _phase_plan(s, e):
        dur = e - s
        def partial():
            nhide = int(rng.integers(1, max(2, k)))
            top = bool(rng.random() < 0.5)
            return ("partial", nhide, top)
        if dur >= 24:
            ramp = min(8, dur // 3)
            return [(s, s + ramp, partial()),
                    (s + ramp, e - ramp, ("full",)),
                    (e - ramp, e, partial())]
        return [(s, e, partial())]

    occl_phases = [[p for ev in events_i for p in _phase_plan(*ev)]
                   for events_i in occl]
    exits = [_sample_events(rng, config.frames, config.exit_rate, 30, 120)
             for _ in range(n_agents)]

    events = []
    for i, a in enumerate(agents):
        for s, e, kind in occl_phases[i]:
            events.append(("occlusion", a.identity, s, e, kind[0]))
        for s, e in exits[i]:
            events.append(("exit", a.identity, s, e, "full"))

    frames_out: list[list[Observation]] = []
    for t in range(config.frames):
        obs_t = []
        for i, a in enumerate(agents):
            exited = any(s <= t < e for s, e in exits[i])
            occluded_full = False
            hidden_parts = np.zeros(k, dtype=bool)
            for s, e, kind in occl_phases[i]:
                if s <= t < e:
                    if kind[0] == "full":
                        occluded_full = True
                    elif kind[2]:
                        hidden_parts[:kind[1]] = True   # occluder from above
                    else:
                        hidden_parts[k - kind[1]:] = True  # from below
            if exited or occluded_full:
                obs_t.append(Observation(t + 1, a.identity, False,
                                         None, None, None))
                continue
            box = BoundingBox(pos[i, 0] - box_w[i] / 2,
                              pos[i, 1] - box_h[i] / 2,
                              box_w[i], box_h[i])
            part_vis = (~hidden_parts).astype(int)
            labels = base_labels.copy()
            for j in range(k):
                if hidden_parts[j]:
                    labels[labels == j + 1] = 0
            cells = signatures[labels].copy()
            cells[labels > 0] += a.latent
            cells += rng.normal(0.0, config.feature_noise_sigma, cells.shape)
            obs_t.append(Observation(t + 1, a.identity, True, box, part_vis,
                                     FeatureGrid(cells, labels)))
        frames_out.append(obs_t)

        accel = rng.normal(0.0, 0.4, size=(n_agents, 2))
        vel = np.clip(vel + accel, -v_max, v_max)
        pos = pos + vel
        for axis, limit in ((0, pw), (1, ph)):
            low = pos[:, axis] < 0.05 * limit
            high = pos[:, axis] > 0.95 * limit
            vel[low | high, axis] *= -1
            pos[:, axis] = np.clip(pos[:, axis], 0.05 * limit, 0.95 * limit)

    return Scenario(config, agents, frames_out, events)


def to_reid_dataset(scenario: Scenario, sampling_stride: int = 25,
                    view_chunk: int = 125):
    """Uniformly subsample frames per identity and split into a training
    list plus a query/gallery retrieval structure over held-out identities.

    Returns (train samples, query samples, gallery samples), all lists of
    :class:`GridSample`.  Identity splits are disjoint; samples carry a view
    id (frame chunk) used for same-view gallery filtering.
    """
    if sampling_stride < 1:
        raise ValueError("stride must be >= 1")
    cfg = scenario.config
    per_identity: dict[int, list[GridSample]] = {}
    for frame_obs in scenario.frames:
        for ob in frame_obs:
            if not ob.present:
                continue
            agent = scenario.agent(ob.identity)
            per_identity.setdefault(ob.identity, []).append(
                GridSample(ob.grid, ob.identity, agent.team, agent.role,
                           view=(ob.frame - 1) // view_chunk))
    for ident, samples in per_identity.items():
        per_identity[ident] = samples[::sampling_stride]

    left = [a.identity for a in scenario.agents
            if a.role == Role.PLAYER and a.team == 0]
    right = [a.identity for a in scenario.agents
             if a.role == Role.PLAYER and a.team == 1]
    other = [a.identity for a in scenario.agents if a.role != Role.PLAYER]

    def split(ids, n_train):
        return ids[:n_train], ids[n_train:]

    train_ids, test_ids = [], []
    for group, minimum in ((left, 4), (right, 4), (other, 3)):
        n_train = max(minimum, int(math.ceil(len(group) / 2)))
        n_train = min(n_train, len(group))
        tr, te = split(group, n_train)
        train_ids.extend(tr)
        test_ids.extend(te)

    train = [s for i in train_ids for s in per_identity.get(i, [])]
    queries, gallery = [], []
    for ident in test_ids:
        samples = per_identity.get(ident, [])
        if len(samples) < 2:
            gallery.extend(samples)
            continue
        n_query = max(1, len(samples) // 4)
        queries.extend(samples[:n_query])
        gallery.extend(samples[n_query:])
    return train, queries, gallery


def oracle_feature_projection(config: ScenarioConfig, dim: int = 8):
    """Fixed projection and per-part offsets used for ground-truth-derived
    detection features (independent of any trained model)."""
    rng = np.random.default_rng(config.seed + 987654321)
    proj = rng.normal(0.0, 1.0 / np.sqrt(config.channels),
                      size=(dim, config.channels))
    offsets = rng.normal(0.0, 1.0, size=(config.num_parts + 1, dim))
    return proj, offsets


def _oracle_features(agent: Agent, part_vis: np.ndarray, proj, offsets,
                     sigma: float, rng: np.random.Generator,
                     role_logit_scale: float = 6.0):
    k = part_vis.shape[0]
    dim = proj.shape[0]
    base = proj @ agent.latent
    parts = np.zeros((k, dim))
    for j in range(k):
        if part_vis[j]:
            parts[j] = base + offsets[j + 1] + rng.normal(0.0, sigma, dim)
    visible = part_vis.astype(bool)
    if visible.any():
        fg = parts[visible].mean(axis=0)
        vis = np.concatenate([[1], part_vis])
    else:
        fg = np.zeros(dim)
        vis = np.zeros(k + 1, dtype=int)
    role_logits = np.full(4, -role_logit_scale / 2)
    role_logits[int(agent.role)] = role_logit_scale / 2
    return PartFeatureSet(parts=parts, foreground=fg, visibility=vis), role_logits


def to_tracking_input(scenario: Scenario, detector_noise: str = "none",
                      noise_param: float = 0.0, features: str = "oracle",
                      feature_sigma: float = 0.05, seed: int = 0):
    """Turn a scenario into per-frame tracker inputs plus ground truth.

    ``detector_noise``: 'none', 'jitter' (gaussian box offsets of
    ``noise_param`` pixels), or 'dropout' (drop each detection with
    probability ``noise_param``).  ``features``: 'oracle' attaches
    ground-truth-derived part features, 'none' leaves features empty
    (filled later by an embedding model).

    Returns (frame inputs, gt records) where each gt record is
    (frame, identity, box) and each frame input is a list of Detections.
    """
    if detector_noise not in ("none", "jitter", "dropout"):
        raise ValueError(f"unknown detector noise {detector_noise!r}")
    rng = np.random.default_rng(seed)
    proj, offsets = oracle_feature_projection(scenario.config)
    frame_inputs: list[list[Detection]] = []
    gt_records: list[tuple[int, int, BoundingBox]] = []
    for frame_obs in scenario.frames:
        dets = []
        for ob in frame_obs:
            if not ob.present:
                continue
            gt_records.append((ob.frame, ob.identity, ob.box))
            if detector_noise == "dropout" and rng.random() < noise_param:
                continue
            box = ob.box
            if detector_noise == "jitter":
                dx, dy = rng.normal(0.0, noise_param, 2)
                box = BoundingBox(box.x + dx, box.y + dy, box.w, box.h)
            agent = scenario.agent(ob.identity)
            feats = role_logits = None
            if features == "oracle":
                feats, role_logits = _oracle_features(
                    agent, ob.part_visible, proj, offsets, feature_sigma, rng)
            dets.append(Detection(frame=ob.frame, box=box, confidence=1.0,
                                  features=feats, role_logits=role_logits,
                                  gt_identity=ob.identity,
                                  gt_team=agent.team, gt_role=agent.role))
        frame_inputs.append(dets)
    return frame_inputs, gt_records
