"""
Fills the attribute columns of a rally from the upstream model outputs.

Categorical columns come from the classifier probabilities, fused across
models by mean or vote. Hitters alternate starting from the predicted first
hitter. Coordinates come from the ball, the player boxes and the poses at
each HitFrame.
"""
from typing import Any, Dict, Hashable, List, Optional, Sequence, Tuple

import math
from collections import Counter
from dataclasses import dataclass

from shuttlehit.constants import ASSEMBLY_DEFAULTS, POSE_KEYPOINTS
from shuttlehit.pipeline.errors import AssemblyError, ConfigurationError
from shuttlehit.pipeline.detections import Box, ClassProbs, DetectionBundle, Pose, check_probability_vector
from shuttlehit.pipeline.rally import DEFAULT_DOMAINS, Domains, Point, Rally, Shot, validate
from shuttlehit.pipeline.utils import exact_mean, log


ORIGIN = Point(0.0, 0.0)


@dataclass(frozen=True)
class AssemblyConfig:
    side_of_A: str = ASSEMBLY_DEFAULTS["side_of_A"]
    location_mode: str = ASSEMBLY_DEFAULTS["location_mode"]
    ankle_indices: Tuple[int, int] = ASSEMBLY_DEFAULTS["ankle_indices"]
    keypoint_confidence: float = ASSEMBLY_DEFAULTS["keypoint_confidence"]
    landing_y_source: str = ASSEMBLY_DEFAULTS["landing_y_source"]
    ensemble: str = ASSEMBLY_DEFAULTS["ensemble"]
    alternate_hitters: bool = ASSEMBLY_DEFAULTS["alternate_hitters"]

    def __post_init__(self):
        if self.side_of_A not in ("top", "bottom"):
            raise ConfigurationError("side_of_A must be 'top' or 'bottom'")
        if self.location_mode not in ("bbox-vertex", "pose-feet"):
            raise ConfigurationError("location_mode must be 'bbox-vertex' or 'pose-feet'")
        if len(self.ankle_indices) != 2 or not all(0 <= i < POSE_KEYPOINTS for i in self.ankle_indices):
            raise ConfigurationError(f"ankle_indices must be two indices below {POSE_KEYPOINTS}")
        if self.landing_y_source not in ("box", "ball"):
            raise ConfigurationError("landing_y_source must be 'box' or 'ball'")
        if self.ensemble not in ("mean", "vote"):
            raise ConfigurationError("ensemble must be 'mean' or 'vote'")
        object.__setattr__(self, "ankle_indices", tuple(int(i) for i in self.ankle_indices))

    @staticmethod
    def from_settings(settings: Dict[str, Any]) -> "AssemblyConfig":
        return AssemblyConfig(
            side_of_A=settings["side_of_A"],
            location_mode=settings["location_mode"],
            ankle_indices=tuple(settings["ankle_indices"]),
            keypoint_confidence=float(settings["keypoint_confidence"]),
            landing_y_source=settings["landing_y_source"],
            ensemble=settings["ensemble"],
            alternate_hitters=bool(settings["alternate_hitters"]),
        )


def alternate_hitters(first: str, n: int, labels: Sequence[str] = DEFAULT_DOMAINS.hitter) -> List[str]:
    """
    ``n`` hitters starting from ``first`` and switching at every shot.
    """
    if len(labels) != 2 or first not in labels:
        raise AssemblyError(f"Cannot alternate {first!r} within {list(labels)}")
    other = labels[1] if first == labels[0] else labels[0]
    return [first if i % 2 == 0 else other for i in range(n)]


def vote_ensemble(labels: Sequence[Hashable], order: Optional[Sequence[Hashable]] = None) -> Hashable:
    """
    Most frequent label. Ties go to the label coming first in ``order``,
    or the smallest one when no order is given.
    """
    if not labels:
        raise AssemblyError("Cannot vote on an empty list of labels.")
    counts = Counter(labels)
    if order is None:
        rank = {label: i for i, label in enumerate(sorted(counts))}
    else:
        rank = {label: i for i, label in enumerate(order)}
    return min(counts, key=lambda label: (-counts[label], rank.get(label, len(rank))))


def _argmax(values: Sequence[float]) -> int:
    best = 0
    for i, value in enumerate(values):
        if value > values[best]:
            best = i
    return best


def mean_ensemble(prob_vectors: Sequence[Sequence[float]]) -> int:
    """
    1-based category with the highest average probability, the smallest
    one on ties.
    """
    if not prob_vectors:
        raise AssemblyError("Cannot average an empty list of probability vectors.")
    lengths = {len(vector) for vector in prob_vectors}
    if len(lengths) > 1:
        raise AssemblyError(f"Probability vectors of different lengths: {sorted(lengths)}")
    means = [exact_mean(column) for column in zip(*prob_vectors)]
    return _argmax(means) + 1


def ensemble_category(prob_vectors: Sequence[Sequence[float]], method: str) -> int:
    """
    1-based category chosen from the outputs of several models.
    Voting first reduces every vector to its own best category.
    """
    if method == "vote":
        return vote_ensemble([_argmax(vector) + 1 for vector in prob_vectors])
    return mean_ensemble(prob_vectors)


def nearest_vertex(box: Box, point: Point) -> Point:
    """
    Corner of the box closest to the point. Ties go to the top-left
    corner, then clockwise.
    """
    best = None
    best_distance = math.inf
    for corner in box.corners():
        distance = math.hypot(corner.x - point[0], corner.y - point[1])
        if distance < best_distance:
            best, best_distance = corner, distance
    return best


def foot_position(pose: Optional[Pose], cfg: AssemblyConfig = AssemblyConfig(), box: Optional[Box] = None) -> Point:
    """
    Midpoint of the ankles. An ankle below the confidence floor is ignored;
    without any reliable ankle the bottom center of the box is used.
    """
    if pose is None:
        raise AssemblyError("No pose to locate the feet from.")
    ankles = [pose.keypoints[i] for i in cfg.ankle_indices]
    reliable = [k for k in ankles if k.confidence >= cfg.keypoint_confidence]
    if len(reliable) == 2:
        return Point((reliable[0].x + reliable[1].x) / 2, (reliable[0].y + reliable[1].y) / 2)
    if len(reliable) == 1:
        return Point(reliable[0].x, reliable[0].y)

    box = pose.box or box
    if box is None:
        raise AssemblyError("No reliable ankle and no box to fall back on.")
    return box.bottom_center


def ball_at(bundle: DetectionBundle, frame: int) -> Optional[Point]:
    """
    The ball at a frame: the trajectory point if any, else the detection.
    """
    detections = bundle.at(frame)
    return detections.track or detections.ball


def resolve_landing(
    hit_frame: int,
    bundle: DetectionBundle,
    hitter_box: Optional[Box],
    cfg: AssemblyConfig = AssemblyConfig()
) -> Point:
    """
    LandingX is the ball x at the HitFrame. LandingY is the bottom-right y
    of the hitter box, or the ball y with ``landing_y_source`` set to
    ``ball``. Without a ball, or without a hitter box, the landing is
    (0, 0).
    """
    ball = ball_at(bundle, hit_frame)
    if ball is None:
        return ORIGIN
    if cfg.landing_y_source == "ball":
        return Point(ball.x, ball.y)
    if hitter_box is None:
        return ORIGIN
    return Point(ball.x, hitter_box.bottom_right.y)


def split_players(
    shot_hitter: str,
    boxes: Sequence[Box],
    cfg: AssemblyConfig = AssemblyConfig(),
    labels: Sequence[str] = DEFAULT_DOMAINS.hitter
) -> Optional[Tuple[Box, Box]]:
    """
    (hitter box, defender box), or None unless there are exactly two boxes.

    The bottom player is the one whose box center is lower in the image.
    ``side_of_A`` tells which half belongs to the first label.
    """
    if len(boxes) != 2:
        return None
    top, bottom = sorted(boxes, key=lambda b: (b.center.y, b.center.x))
    a_box, b_box = (bottom, top) if cfg.side_of_A == "bottom" else (top, bottom)
    if shot_hitter == labels[0]:
        return a_box, b_box
    return b_box, a_box


def _matching_pose(box: Box, poses: Sequence[Pose]) -> Optional[Pose]:
    candidates = [pose for pose in poses if pose.box is not None]
    if not candidates:
        return None
    return min(candidates, key=lambda pose: math.hypot(
        pose.box.center.x - box.center.x, pose.box.center.y - box.center.y))


def _location(box: Box, ball: Optional[Point], poses: Sequence[Pose], cfg: AssemblyConfig) -> Point:
    if cfg.location_mode == "pose-feet":
        pose = _matching_pose(box, poses)
        if pose is not None:
            return foot_position(pose, cfg, box)
        log("WARNING! No pose for a player box, using its nearest vertex instead.")
    if ball is None:
        return box.bottom_center
    return nearest_vertex(box, ball)


def assign_roles_and_locations(
    shot_hitter: str,
    bundle: DetectionBundle,
    hit_frame: int,
    ball: Optional[Point],
    cfg: AssemblyConfig = AssemblyConfig(),
    labels: Sequence[str] = DEFAULT_DOMAINS.hitter
) -> Tuple[Point, Point]:
    """
    (HitterLocation, DefenderLocation) at the HitFrame. Without exactly two
    player boxes both locations are (0, 0) and a warning is logged.
    """
    detections = bundle.at(hit_frame)
    players = split_players(shot_hitter, detections.players, cfg, labels)
    if players is None:
        log(f"WARNING! {len(detections.players)} player boxes in frame {hit_frame}, "
            f"locations set to (0, 0).")
        return ORIGIN, ORIGIN
    hitter_box, defender_box = players
    return (_location(hitter_box, ball, detections.poses, cfg),
            _location(defender_box, ball, detections.poses, cfg))


def _non_negative(point: Point) -> Point:
    return Point(max(0.0, point.x), max(0.0, point.y))


def _category(probs: ClassProbs, shot_seq: int, column: str, domain: Sequence, cfg: AssemblyConfig):
    vectors = probs.get(shot_seq, column)
    for vector in vectors:
        check_probability_vector(vector, f"{column} of shot {shot_seq}")
        if len(vector) != len(domain):
            raise AssemblyError(f"{column} of shot {shot_seq} has {len(vector)} "
                                f"probabilities for {len(domain)} categories.")
    return domain[ensemble_category(vectors, cfg.ensemble) - 1]


def assemble_submission(
    events: Rally,
    probs: ClassProbs,
    bundle: DetectionBundle,
    cfg: AssemblyConfig = AssemblyConfig(),
    domains: Domains = DEFAULT_DOMAINS
) -> Rally:
    """
    Completes a rally holding only ShotSeq and HitFrame.

    Winner is filled on the last shot only. Coordinates detected slightly
    outside the image are clamped to 0.
    Raises AssemblyError when probabilities are missing for a shot or a
    HitFrame is outside the detections.
    """
    if len(domains.hitter) != 2:
        raise AssemblyError(f"Two hitter labels are needed, found {list(domains.hitter)}")

    n = len(events.shots)
    predicted_hitters = [_category(probs, shot.shot_seq, "Hitter", domains.hitter, cfg)
                         for shot in events.shots]
    if cfg.alternate_hitters and n:
        hitters = alternate_hitters(predicted_hitters[0], n, domains.hitter)
    else:
        hitters = predicted_hitters

    shots = []
    for j, (shot, hitter) in enumerate(zip(events.shots, hitters)):
        if not bundle.covers(shot.hit_frame):
            raise AssemblyError(f"HitFrame {shot.hit_frame} of shot {shot.shot_seq} is outside "
                                f"the detections (last frame {bundle.last_frame}).")

        ball = ball_at(bundle, shot.hit_frame)
        players = split_players(hitter, bundle.at(shot.hit_frame).players, cfg, domains.hitter)
        hitter_location, defender_location = assign_roles_and_locations(
            hitter, bundle, shot.hit_frame, ball, cfg, domains.hitter)
        landing = resolve_landing(shot.hit_frame, bundle, players[0] if players else None, cfg)

        winner = ""
        if j == n - 1:
            winner = _category(probs, shot.shot_seq, "Winner", domains.winner, cfg)

        shots.append(Shot(
            shot_seq=shot.shot_seq,
            hit_frame=shot.hit_frame,
            hitter=hitter,
            round_head=_category(probs, shot.shot_seq, "RoundHead", domains.round_head, cfg),
            backhand=_category(probs, shot.shot_seq, "Backhand", domains.backhand, cfg),
            ball_height=_category(probs, shot.shot_seq, "BallHeight", domains.ball_height, cfg),
            landing=_non_negative(landing),
            hitter_location=_non_negative(hitter_location),
            defender_location=_non_negative(defender_location),
            ball_type=_category(probs, shot.shot_seq, "BallType", domains.ball_type, cfg),
            winner=winner,
        ))

    rally = Rally(rally_id=events.rally_id, shots=tuple(shots))
    report = validate(rally, domains)
    if not report.ok:
        raise AssemblyError(f"Assembled rally '{rally.rally_id}' is invalid:\n{report}")
    return rally
