"""
Competition scoring.

A rally scores 0 when the predicted shot count is wrong. Otherwise it earns
0.1 plus the average score of its shots. A shot whose HitFrame is off by more
than the tolerance earns nothing, else 0.1 plus the weights of every matching
column (see ``constants.SHOT_WEIGHTS``). The dataset score is the mean over
all ground truth rallies.
"""
from typing import Any, Dict, List, Optional, Sequence, Tuple

import json
import math
from dataclasses import dataclass, field

from shuttlehit.constants import SHOT_WEIGHTS, COUNT_GATE_WEIGHT, SCORING_DEFAULTS
from shuttlehit.pipeline.errors import ConfigurationError, DataError
from shuttlehit.pipeline.rally import Point, Rally, Shot
from shuttlehit.pipeline.utils import exact_mean, log, ordered_map


@dataclass(frozen=True)
class ScoringConfig:
    hit_frame_tolerance: int = SCORING_DEFAULTS["hit_frame_tolerance"]
    landing_threshold: float = SCORING_DEFAULTS["landing_threshold"]
    location_threshold: float = SCORING_DEFAULTS["location_threshold"]
    inclusive_distance: bool = SCORING_DEFAULTS["inclusive_distance"]

    def __post_init__(self):
        if self.hit_frame_tolerance < 0:
            raise ConfigurationError("hit_frame_tolerance must be >= 0")
        if self.landing_threshold <= 0 or self.location_threshold <= 0:
            raise ConfigurationError("distance thresholds must be > 0")

    @staticmethod
    def from_settings(settings: Dict[str, Any]) -> "ScoringConfig":
        return ScoringConfig(
            hit_frame_tolerance=int(settings["hit_frame_tolerance"]),
            landing_threshold=float(settings["landing_threshold"]),
            location_threshold=float(settings["location_threshold"]),
            inclusive_distance=bool(settings["inclusive_distance"]),
        )


@dataclass(frozen=True)
class ShotScore:
    """
    Score of one predicted shot. ``terms`` maps every column to the weight
    it earned; it is empty when the HitFrame gate failed.
    """
    gated: bool
    terms: Dict[str, float] = field(default_factory=dict)
    total: float = 0.0

    def to_dict(self) -> Dict[str, Any]:
        return {"gated": self.gated, "total": self.total, "terms": dict(self.terms)}


@dataclass(frozen=True)
class RallyScore:
    count_gate: bool
    ass: float
    total: float
    per_shot: Tuple[ShotScore, ...] = ()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total": self.total,
            "count_gate": self.count_gate,
            "ass": self.ass,
            "shots": [shot.to_dict() for shot in self.per_shot],
        }


@dataclass(frozen=True)
class ScoreReport:
    per_rally: Dict[str, RallyScore]
    total: float
    warnings: Tuple[str, ...] = ()

    def column_contributions(self) -> Dict[str, float]:
        """
        Share of the dataset total earned by the shot count gate and by
        every column. The values add up to the total.
        """
        rallies = list(self.per_rally.values())
        contributions = {"ShotCount": exact_mean(
            COUNT_GATE_WEIGHT if r.count_gate else 0.0 for r in rallies)}
        for column in SHOT_WEIGHTS:
            contributions[column] = exact_mean(
                exact_mean(s.terms.get(column, 0.0) for s in r.per_shot)
                if r.count_gate else 0.0
                for r in rallies)
        return contributions

    def to_dict(self) -> Dict[str, Any]:
        return {
            "total": self.total,
            "rallies": {rally_id: self.per_rally[rally_id].to_dict()
                        for rally_id in sorted(self.per_rally)},
            "warnings": list(self.warnings),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def dist_within(p: Point, q: Point, threshold: float, inclusive: bool = False) -> bool:
    """
    True if the Euclidean distance between p and q is below the
    threshold (or equal to it, when inclusive).
    """
    distance = math.hypot(p[0] - q[0], p[1] - q[1])
    if inclusive:
        return distance <= threshold
    return distance < threshold


def shot_score(gt: Shot, pred: Shot, is_last: bool, cfg: ScoringConfig = ScoringConfig()) -> ShotScore:
    """
    Scores one predicted shot against its ground truth.

    On a shot that is not the last of the rally, the Winner term is earned
    only by leaving the predicted Winner blank.
    """
    if abs(gt.hit_frame - pred.hit_frame) > cfg.hit_frame_tolerance:
        return ShotScore(gated=False, terms={}, total=0.0)

    if is_last:
        winner_ok = gt.winner == pred.winner
    else:
        winner_ok = not pred.winner

    matches = {
        "HitFrame": True,
        "Hitter": gt.hitter == pred.hitter,
        "BallHeight": gt.ball_height == pred.ball_height,
        "Landing": dist_within(gt.landing, pred.landing,
                               cfg.landing_threshold, cfg.inclusive_distance),
        "HitterLocation": dist_within(gt.hitter_location, pred.hitter_location,
                                      cfg.location_threshold, cfg.inclusive_distance),
        "DefenderLocation": dist_within(gt.defender_location, pred.defender_location,
                                        cfg.location_threshold, cfg.inclusive_distance),
        "Backhand": gt.backhand == pred.backhand,
        "RoundHead": gt.round_head == pred.round_head,
        "BallType": gt.ball_type == pred.ball_type,
        "Winner": winner_ok,
    }
    terms = {column: (SHOT_WEIGHTS[column] if ok else 0.0) for column, ok in matches.items()}
    return ShotScore(gated=True, terms=terms, total=math.fsum(terms.values()))


def rally_score(gt: Rally, pred: Rally, cfg: ScoringConfig = ScoringConfig()) -> RallyScore:
    """
    Scores a predicted rally. Shots are paired by position.
    """
    if len(gt.shots) != len(pred.shots):
        return RallyScore(count_gate=False, ass=0.0, total=0.0, per_shot=())

    last = len(gt.shots) - 1
    per_shot = tuple(
        shot_score(gt_shot, pred_shot, j == last, cfg)
        for j, (gt_shot, pred_shot) in enumerate(zip(gt.shots, pred.shots))
    )
    # Two empty rallies pass the gate with an average of 0
    ass = exact_mean(score.total for score in per_shot)
    return RallyScore(count_gate=True, ass=ass, total=COUNT_GATE_WEIGHT + ass, per_shot=per_shot)


def pair_rallies(
    ground_truth: Sequence[Rally],
    predictions: Sequence[Rally]
) -> Tuple[List[Tuple[Rally, Optional[Rally]]], List[str]]:
    """
    Matches predictions to ground truth by rally id.

    Returns the pairs, in ground truth order, with None for every missing
    prediction, and the ids of the predictions matching no ground truth.
    Raises DataError on duplicate ids on either side.
    """
    for side, rallies in (("ground truth", ground_truth), ("predictions", predictions)):
        seen = set()
        for rally in rallies:
            if rally.rally_id in seen:
                raise DataError(f"Duplicate rally id '{rally.rally_id}' in the {side}.")
            seen.add(rally.rally_id)

    by_id = {rally.rally_id: rally for rally in predictions}
    gt_ids = {rally.rally_id for rally in ground_truth}
    pairs = [(rally, by_id.get(rally.rally_id)) for rally in ground_truth]
    unknown = sorted(rally_id for rally_id in by_id if rally_id not in gt_ids)
    return pairs, unknown


def dataset_score(
    pairs: Sequence[Tuple[Rally, Optional[Rally]]],
    cfg: ScoringConfig = ScoringConfig(),
    unknown_predictions: Sequence[str] = (),
    threads: Optional[int] = None
) -> ScoreReport:
    """
    Scores a whole dataset. A missing prediction (None) scores 0 for its
    rally. Predictions for unknown rallies are reported and ignored.
    """
    warnings = []
    seen = set()
    for gt, _ in pairs:
        if gt.rally_id in seen:
            raise DataError(f"Duplicate rally id '{gt.rally_id}' in the ground truth.")
        seen.add(gt.rally_id)

    def score_pair(pair: Tuple[Rally, Optional[Rally]]) -> RallyScore:
        gt, pred = pair
        if pred is None:
            return RallyScore(count_gate=False, ass=0.0, total=0.0, per_shot=())
        return rally_score(gt, pred, cfg)

    scores = ordered_map(score_pair, list(pairs), threads)

    for gt, pred in pairs:
        if pred is None:
            warnings.append(f"missing prediction for rally '{gt.rally_id}', scored 0")
    for rally_id in unknown_predictions:
        warnings.append(f"prediction for unknown rally '{rally_id}' ignored")
    for warning in warnings:
        log(f"WARNING! {warning}")

    per_rally = {gt.rally_id: score for (gt, _), score in zip(pairs, scores)}
    total = exact_mean(score.total for score in scores)
    return ScoreReport(per_rally=per_rally, total=total, warnings=tuple(warnings))
