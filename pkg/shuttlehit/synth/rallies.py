"""
Synthetic rallies and predictions whose score is known in advance.

``perturb`` damages a ground truth rally in controlled ways and records
what it did, so that ``expected_rally_score`` can compute the score the
prediction must get without going through the scoring code.
"""
from typing import Dict, List, Optional, Tuple, Union

import math
from dataclasses import dataclass, field, replace

from shuttlehit.constants import SYNTH_DEFAULTS, SHOT_WEIGHTS, COUNT_GATE_WEIGHT
from shuttlehit.pipeline.errors import PerturbError
from shuttlehit.pipeline.rally import DEFAULT_DOMAINS, Domains, Point, Rally, Shot
from shuttlehit.pipeline.scoring import ScoringConfig
from shuttlehit.pipeline.utils import exact_mean
from shuttlehit.synth.random import Xorshift64Star


#: Columns holding a category, with the attribute name on Shot and domain
CATEGORY_COLUMNS = {
    "Hitter": "hitter",
    "RoundHead": "round_head",
    "Backhand": "backhand",
    "BallHeight": "ball_height",
    "BallType": "ball_type",
}

#: Columns holding a point, with the attribute name on Shot
POINT_COLUMNS = {
    "Landing": "landing",
    "HitterLocation": "hitter_location",
    "DefenderLocation": "defender_location",
}


@dataclass(frozen=True)
class SynthParams:
    n_shots: Tuple[int, int] = SYNTH_DEFAULTS["n_shots"]
    frame_gap: Tuple[int, int] = SYNTH_DEFAULTS["frame_gap"]
    first_frame: Tuple[int, int] = SYNTH_DEFAULTS["first_frame"]
    x_range: Tuple[int, int] = SYNTH_DEFAULTS["x_range"]
    y_range: Tuple[int, int] = SYNTH_DEFAULTS["y_range"]
    domains: Domains = DEFAULT_DOMAINS
    seed: int = SYNTH_DEFAULTS["seed"]

    def __post_init__(self):
        for name in ("n_shots", "frame_gap", "first_frame", "x_range", "y_range"):
            low, high = getattr(self, name)
            if low > high:
                raise PerturbError(f"{name} is an empty range: [{low}, {high}]")
        if self.n_shots[0] < 0 or self.first_frame[0] < 0:
            raise PerturbError("n_shots and first_frame can't be negative")
        if self.frame_gap[0] < 1:
            raise PerturbError("frame_gap must be at least 1")
        if self.x_range[0] < 0 or self.y_range[0] < 0:
            raise PerturbError("coordinate ranges must be non-negative")


def _random_point(params: SynthParams, rng: Xorshift64Star) -> Point:
    return Point(float(rng.randint(*params.x_range)), float(rng.randint(*params.y_range)))


def gen_rally(params: SynthParams = SynthParams(), rally_id: str = "rally_00001",
              rng: Optional[Xorshift64Star] = None) -> Rally:
    """
    A valid random rally. Without a generator, one is seeded from
    ``params.seed``.
    """
    rng = rng or Xorshift64Star(params.seed)
    domains = params.domains
    n_shots = rng.randint(*params.n_shots)

    shots = []
    frame = rng.randint(*params.first_frame)
    for seq in range(1, n_shots + 1):
        if seq > 1:
            frame += rng.randint(*params.frame_gap)
        shots.append(Shot(
            shot_seq=seq,
            hit_frame=frame,
            hitter=rng.choice(domains.hitter),
            round_head=rng.choice(domains.round_head),
            backhand=rng.choice(domains.backhand),
            ball_height=rng.choice(domains.ball_height),
            landing=_random_point(params, rng),
            hitter_location=_random_point(params, rng),
            defender_location=_random_point(params, rng),
            ball_type=rng.choice(domains.ball_type),
            winner=rng.choice(domains.winner) if seq == n_shots else "",
        ))
    return Rally(rally_id=rally_id, shots=tuple(shots))


def gen_rallies(n: int, params: SynthParams = SynthParams()) -> List[Rally]:
    """
    ``n`` rallies named ``rally_00001``, ``rally_00002``... drawn from one
    generator seeded with ``params.seed``.
    """
    rng = Xorshift64Star(params.seed)
    return [gen_rally(params, f"rally_{i:05d}", rng) for i in range(1, n + 1)]


@dataclass(frozen=True)
class PerturbSpec:
    """
    How to damage a prediction. ``columns`` maps a column to ``keep`` or
    ``corrupt`` (categories and Winner) or to an offset in pixels (points).
    Every change is applied to a shot with probability ``rate``.
    ``shot_count_delta`` adds or removes shots at the end of the rally.
    """
    columns: Dict[str, Union[str, float]] = field(default_factory=dict)
    hit_frame_jitter: int = 0
    rate: float = 1.0
    shot_count_delta: int = 0

    def __post_init__(self):
        for column, action in self.columns.items():
            if column in POINT_COLUMNS:
                if action == "keep":
                    continue
                if isinstance(action, str) or not math.isfinite(action) or action < 0:
                    raise PerturbError(f"{column} takes 'keep' or an offset >= 0, not {action!r}")
            elif column in CATEGORY_COLUMNS or column == "Winner":
                if action not in ("keep", "corrupt"):
                    raise PerturbError(f"{column} takes 'keep' or 'corrupt', not {action!r}")
            else:
                raise PerturbError(f"Unknown column to perturb: {column}")
        if not 0 <= self.rate <= 1:
            raise PerturbError("rate must be within [0, 1]")


@dataclass(frozen=True)
class ShotExpectation:
    """
    What perturb did to one shot: the HitFrame error, whether every
    categorical column still matches and the displacement of every point.
    """
    frame_error: int
    matches: Dict[str, bool]
    offsets: Dict[str, float]


@dataclass(frozen=True)
class Correctness:
    count_ok: bool
    shots: Tuple[ShotExpectation, ...] = ()


def _other_value(values, current, rng: Xorshift64Star, column: str):
    others = [value for value in values if value != current]
    if not others:
        raise PerturbError(f"Cannot corrupt {column}: its domain has a single value.")
    return rng.choice(others)


def perturb(
    rally: Rally,
    spec: PerturbSpec = PerturbSpec(),
    seed: int = SYNTH_DEFAULTS["seed"],
    domains: Domains = DEFAULT_DOMAINS
) -> Tuple[Rally, Correctness]:
    """
    A prediction for the rally, damaged as ``spec`` describes, and the record of
    what is still correct in it.

    Offsets move points to the right, so the distance they introduce is
    exactly the offset for integer coordinates. Corrupting the Winner of a
    shot that is not the last one sets a label where a blank is expected.
    """
    rng = Xorshift64Star(seed)
    last = len(rally.shots) - 1
    shots = []
    expectations = []

    def hit(probability: float) -> bool:
        return probability >= 1 or rng.random() < probability

    for j, shot in enumerate(rally.shots):
        changes = {}
        matches = {}
        offsets = {}

        frame_error = spec.hit_frame_jitter if spec.hit_frame_jitter and hit(spec.rate) else 0
        changes["hit_frame"] = shot.hit_frame + frame_error

        for column, name in CATEGORY_COLUMNS.items():
            corrupt = spec.columns.get(column, "keep") == "corrupt" and hit(spec.rate)
            if corrupt:
                changes[name] = _other_value(domains.categories(name), getattr(shot, name), rng, column)
            matches[column] = not corrupt

        corrupt = spec.columns.get("Winner", "keep") == "corrupt" and hit(spec.rate)
        if corrupt and j == last:
            changes["winner"] = _other_value(domains.winner, shot.winner, rng, "Winner")
        elif corrupt:
            changes["winner"] = rng.choice(domains.winner)
        matches["Winner"] = not corrupt

        for column, name in POINT_COLUMNS.items():
            action = spec.columns.get(column, "keep")
            offset = 0.0 if action == "keep" or not hit(spec.rate) else float(action)
            point = getattr(shot, name)
            changes[name] = Point(point.x + offset, point.y)
            offsets[column] = offset

        shots.append(replace(shot, **changes))
        expectations.append(ShotExpectation(frame_error, matches, offsets))

    shots = _change_count(shots, spec.shot_count_delta)
    prediction = Rally(rally_id=rally.rally_id, shots=tuple(shots))
    return prediction, Correctness(count_ok=spec.shot_count_delta == 0, shots=tuple(expectations))


def _change_count(shots: List[Shot], delta: int) -> List[Shot]:
    if delta < 0:
        if -delta > len(shots):
            raise PerturbError(f"Cannot remove {-delta} shots from a rally of {len(shots)}.")
        shots = shots[:len(shots) + delta]
        if shots:
            shots[-1] = replace(shots[-1], winner="")
        return shots
    for _ in range(delta):
        if shots:
            previous = shots[-1]
            shots[-1] = replace(previous, winner="")
            shots.append(replace(previous, shot_seq=previous.shot_seq + 1,
                                 hit_frame=previous.hit_frame + 1))
        else:
            shots.append(Shot(1, 0, DEFAULT_DOMAINS.hitter[0], DEFAULT_DOMAINS.round_head[0],
                              DEFAULT_DOMAINS.backhand[0], DEFAULT_DOMAINS.ball_height[0],
                              Point(0, 0), Point(0, 0), Point(0, 0), DEFAULT_DOMAINS.ball_type[0]))
    return shots


def _within(offset: float, threshold: float, inclusive: bool) -> bool:
    return offset <= threshold if inclusive else offset < threshold


def expected_rally_score(correctness: Correctness, cfg: ScoringConfig = ScoringConfig()) -> float:
    """
    Score of a perturbed prediction, computed from the correctness record
    alone.
    """
    if not correctness.count_ok:
        return 0.0

    totals = []
    for shot in correctness.shots:
        if abs(shot.frame_error) > cfg.hit_frame_tolerance:
            totals.append(0.0)
            continue
        earned = [SHOT_WEIGHTS["HitFrame"]]
        earned += [SHOT_WEIGHTS[column] for column, ok in shot.matches.items() if ok]
        earned += [SHOT_WEIGHTS["Landing"]] if _within(
            shot.offsets["Landing"], cfg.landing_threshold, cfg.inclusive_distance) else []
        earned += [SHOT_WEIGHTS[column] for column in ("HitterLocation", "DefenderLocation")
                   if _within(shot.offsets[column], cfg.location_threshold, cfg.inclusive_distance)]
        totals.append(math.fsum(earned))
    return COUNT_GATE_WEIGHT + exact_mean(totals)


def random_perturb_spec(rng: Xorshift64Star) -> PerturbSpec:
    """
    A random spec touching every column, used to sweep the scoring code.
    Offsets straddle the default distance thresholds, thresholds included.
    """
    columns: Dict[str, Union[str, float]] = {}
    for column in list(CATEGORY_COLUMNS) + ["Winner"]:
        columns[column] = rng.choice(("keep", "corrupt"))
    for column in POINT_COLUMNS:
        columns[column] = float(rng.choice((0, 3, 5, 6, 8, 10, 12)))
    return PerturbSpec(
        columns=columns,
        hit_frame_jitter=rng.choice((0, 1, 2, 3, -2, -3)),
        rate=rng.choice((0.25, 0.5, 1.0)),
        shot_count_delta=rng.choice((0, 0, 0, 0, 0, 0, 0, 1, -1)),
    )
