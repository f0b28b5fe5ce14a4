"""
Synthetic frame sequences with a known, uniform motion.

The texture is a sum of low frequency cosines that repeat over the frame,
so translating it with wrap-around keeps it smooth everywhere and the
true flow is the shift itself at every pixel.
"""
from typing import List, Tuple

import math
from pathlib import Path

import numpy as np

from shuttlehit.pipeline.errors import FrameError
from shuttlehit.pipeline.flow import GrayFrame
from shuttlehit.pipeline.frames import frame_name, write_frame
from shuttlehit.synth.random import Xorshift64Star


#: Wave vectors of the texture, in cycles per frame width and height
TEXTURE_FREQUENCIES = ((1, 0), (0, 1), (1, 1), (1, -1), (2, 0), (0, 2), (2, 1), (1, 2), (2, -1), (1, -2))

#: Mean intensity and total amplitude of the texture: values stay in [0.05, 0.95]
TEXTURE_BASE = 0.5
TEXTURE_AMPLITUDE = 0.45

MAX_SHIFT = 2


def gen_motion_sequence(
    size: Tuple[int, int] = (64, 64),
    shift: Tuple[int, int] = (1, 0),
    n_frames: int = 2,
    seed: int = 7
) -> List[GrayFrame]:
    """
    ``n_frames`` frames of a random texture moving by ``shift`` = (dx, dy)
    pixels per frame, wrapping around the borders.
    """
    width, height = size
    dx, dy = shift
    if width < 1 or height < 1 or n_frames < 1:
        raise FrameError("size and n_frames must be positive")
    if abs(dx) > MAX_SHIFT or abs(dy) > MAX_SHIFT:
        raise FrameError(f"shifts are limited to {MAX_SHIFT} pixels per frame, got {shift}")

    rng = Xorshift64Star(seed)
    amplitudes = [rng.uniform(0.5, 1.0) for _ in TEXTURE_FREQUENCIES]
    scale = TEXTURE_AMPLITUDE / sum(amplitudes)
    phases = [rng.uniform(0, 2 * math.pi) for _ in TEXTURE_FREQUENCIES]

    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    frames = []
    for t in range(n_frames):
        # The content at (x, y) in frame t was at (x - t*dx, y - t*dy) in frame 0
        sx, sy = x - t * dx, y - t * dy
        values = np.full((height, width), TEXTURE_BASE)
        for (nx, ny), amplitude, phase in zip(TEXTURE_FREQUENCIES, amplitudes, phases):
            values += amplitude * scale * np.cos(2 * math.pi * (nx * sx / width + ny * sy / height) + phase)
        frames.append(GrayFrame(values))
    return frames


def to_rgb(frame: GrayFrame) -> np.ndarray:
    level = np.round(frame.values * 255).astype(np.uint8)
    return np.dstack([level, level, level])


def write_motion_sequence(frames: List[GrayFrame], out_dir: Path) -> List[Path]:
    """
    Writes the frames as ``frame_000001.ppm``, ``frame_000002.ppm``...
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return [write_frame(to_rgb(frame), out_dir / frame_name(i)) for i, frame in enumerate(frames, start=1)]
