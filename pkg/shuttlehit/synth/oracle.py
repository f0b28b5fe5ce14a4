"""
Second, independent implementation of the competition score, written as
plainly as possible. Tests compare it against ``pipeline.scoring``.
"""
from shuttlehit.pipeline.rally import Rally
from shuttlehit.pipeline.scoring import ScoringConfig


def _close(ax, ay, bx, by, threshold, inclusive):
    distance = ((ax - bx) ** 2 + (ay - by) ** 2) ** 0.5
    if inclusive:
        return distance <= threshold
    return distance < threshold


def oracle_score(gt: Rally, pred: Rally, cfg: ScoringConfig = ScoringConfig()) -> float:
    """
    Rally total: 0 on a wrong shot count, else 0.1 plus the average shot
    score.
    """
    n = len(gt.shots)
    if len(pred.shots) != n:
        return 0.0
    if n == 0:
        return 0.1

    shot_sum = 0.0
    for j in range(n):
        g = gt.shots[j]
        p = pred.shots[j]
        if abs(g.hit_frame - p.hit_frame) > cfg.hit_frame_tolerance:
            continue

        score = 0.1
        if g.hitter == p.hitter:
            score += 0.1
        if g.ball_height == p.ball_height:
            score += 0.1
        if _close(g.landing[0], g.landing[1], p.landing[0], p.landing[1],
                  cfg.landing_threshold, cfg.inclusive_distance):
            score += 0.1
        if _close(g.hitter_location[0], g.hitter_location[1],
                  p.hitter_location[0], p.hitter_location[1],
                  cfg.location_threshold, cfg.inclusive_distance):
            score += 0.05
        if _close(g.defender_location[0], g.defender_location[1],
                  p.defender_location[0], p.defender_location[1],
                  cfg.location_threshold, cfg.inclusive_distance):
            score += 0.05
        if g.backhand == p.backhand:
            score += 0.05
        if g.round_head == p.round_head:
            score += 0.05
        if g.ball_type == p.ball_type:
            score += 0.2
        if j == n - 1:
            if g.winner == p.winner:
                score += 0.1
        elif p.winner == "":
            score += 0.1
        shot_sum += score

    return 0.1 + shot_sum / n
