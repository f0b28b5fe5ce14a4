"""
Synthetic hit probability streams with peaks at known frames.
"""
from typing import List, Sequence

from shuttlehit.pipeline.errors import StreamError
from shuttlehit.pipeline.events import ProbabilityStream
from shuttlehit.synth.random import Xorshift64Star


def gen_probability_stream(
    hit_frames: Sequence[int],
    length: int,
    peak_width: int = 6,
    noise: float = 0.0,
    seed: int = 7,
    rally_id: str = "rally_00001"
) -> ProbabilityStream:
    """
    Uniform noise in [0, noise) plus a triangular peak of height 1 on each
    hit frame, falling to 0 after ``peak_width`` frames on both sides.
    Values are clipped to 1.
    """
    if length < 1:
        raise StreamError("A stream needs at least one frame.")
    if peak_width < 0 or noise < 0 or noise > 1:
        raise StreamError("peak_width must be >= 0 and noise within [0, 1]")
    frames = sorted(hit_frames)
    for frame in frames:
        if not 0 <= frame < length:
            raise StreamError(f"Hit frame {frame} is outside the stream (length {length}).")
    for previous, frame in zip(frames, frames[1:]):
        if frame - previous <= 2 * peak_width:
            raise StreamError(f"Peaks at {previous} and {frame} overlap "
                              f"(peak width {peak_width}).")

    rng = Xorshift64Star(seed)
    probs: List[float] = [noise * rng.random() if noise else 0.0 for _ in range(length)]
    for frame in frames:
        for k in range(-peak_width, peak_width + 1):
            if 0 <= frame + k < length:
                probs[frame + k] += 1 - abs(k) / (peak_width + 1)
    return ProbabilityStream(rally_id=rally_id, probs=tuple(min(1.0, p) for p in probs))


def random_hit_frames(rng: Xorshift64Star, length: int, peak_width: int, max_hits: int) -> List[int]:
    """
    Up to ``max_hits`` frames spaced enough for their peaks not to overlap.
    """
    hits = []
    frame = rng.randint(peak_width, peak_width + 10)
    while frame < length - peak_width and len(hits) < max_hits:
        hits.append(frame)
        frame += rng.randint(2 * peak_width + 1, 2 * peak_width + 30)
    return hits
