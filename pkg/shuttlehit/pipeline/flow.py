"""
Optical flow preprocessing: dense Lucas-Kanade flow between consecutive
frames, background removal by motion magnitude and rendering of the flow
as image frames.
"""
from typing import Any, Dict, List, Optional, Sequence, Tuple

import math
from pathlib import Path
from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from PIL import Image

from shuttlehit.constants import PREPROC_DEFAULTS, RENDER_PERCENTILE, LUMA_WEIGHTS
from shuttlehit.pipeline.errors import ConfigurationError, FrameError
from shuttlehit.pipeline.frames import frame_name, frame_size, read_frame, resize_frame, write_frame
from shuttlehit.pipeline.utils import log, ordered_map


RENDER_MODES = ("magnitude-gray", "angle-hue")


@dataclass(frozen=True)
class PreprocConfig:
    window_radius: int = PREPROC_DEFAULTS["window_radius"]
    background_threshold: float = PREPROC_DEFAULTS["background_threshold"]
    min_eigen: float = PREPROC_DEFAULTS["min_eigen"]
    output_size: Tuple[int, int] = PREPROC_DEFAULTS["output_size"]
    render_mode: str = PREPROC_DEFAULTS["render_mode"]
    remove_background: bool = PREPROC_DEFAULTS["remove_background"]

    def __post_init__(self):
        if self.window_radius < 1:
            raise ConfigurationError("window_radius must be >= 1")
        if self.background_threshold <= 0 or self.min_eigen <= 0:
            raise ConfigurationError("background_threshold and min_eigen must be > 0")
        if len(self.output_size) != 2 or min(self.output_size) < 1:
            raise ConfigurationError(f"invalid output_size {self.output_size}")
        if self.render_mode not in RENDER_MODES:
            raise ConfigurationError(f"render_mode must be one of {', '.join(RENDER_MODES)}")
        object.__setattr__(self, "output_size", tuple(int(s) for s in self.output_size))

    @staticmethod
    def from_settings(settings: Dict[str, Any]) -> "PreprocConfig":
        return PreprocConfig(
            window_radius=int(settings["window_radius"]),
            background_threshold=float(settings["background_threshold"]),
            min_eigen=float(settings["min_eigen"]),
            output_size=tuple(settings["output_size"]),
            render_mode=settings["render_mode"],
            remove_background=bool(settings["remove_background"]),
        )


@dataclass(frozen=True, eq=False)
class GrayFrame:
    """
    Intensities in [0, 1], indexed as ``values[y, x]``.
    """
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2 or values.size == 0:
            raise FrameError(f"a frame must be a non-empty 2D array, got shape {values.shape}")
        if not np.all(np.isfinite(values)) or values.min() < 0 or values.max() > 1:
            raise FrameError("frame intensities must be finite and within [0, 1]")
        object.__setattr__(self, "values", values)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True, eq=False)
class FlowField:
    """
    Per pixel displacement in pixels per frame. Invalid pixels carry no
    flow.
    """
    u: np.ndarray
    v: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        if not (self.u.shape == self.v.shape == self.valid.shape):
            raise FrameError("u, v and valid must have the same shape")

    @property
    def width(self) -> int:
        return self.u.shape[1]

    @property
    def height(self) -> int:
        return self.u.shape[0]

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)


def to_grayscale(frame: np.ndarray) -> GrayFrame:
    """
    Luma of an 8-bit RGB frame, scaled to [0, 1].
    """
    frame = np.asarray(frame)
    if frame.ndim != 3 or frame.shape[2] != 3 or frame.shape[0] == 0 or frame.shape[1] == 0:
        raise FrameError(f"expected a non-empty RGB frame, got shape {frame.shape}")
    luma = frame.astype(np.float64) @ np.array(LUMA_WEIGHTS) / 255.0
    # Rounding can push pure white a hair above 1
    return GrayFrame(np.clip(luma, 0.0, 1.0))


def _window_sum(values: np.ndarray, radius: int) -> np.ndarray:
    kernel = np.ones((2 * radius + 1, 2 * radius + 1))
    return ndimage.convolve(values, kernel, mode="constant", cval=0.0)


def lucas_kanade_flow(prev: GrayFrame, next_: GrayFrame, cfg: PreprocConfig = PreprocConfig()) -> FlowField:
    """
    Dense Lucas-Kanade flow from ``prev`` to ``next_``.

    Every pixel solves the 2x2 least squares system built over a
    (2r+1)x(2r+1) window from the spatial gradients and the temporal
    difference. Spatial gradients are central differences of the average
    of the two frames.

    Pixels whose structure tensor has its smaller eigenvalue below
    ``min_eigen``, and pixels closer than the window radius to the border,
    are invalid and carry zero flow.
    """
    if prev.values.shape != next_.values.shape:
        raise FrameError(f"frame sizes differ: {prev.width}x{prev.height} "
                         f"and {next_.width}x{next_.height}")
    r = cfg.window_radius
    height, width = prev.values.shape

    if height < 2 or width < 2:
        zeros = np.zeros((height, width))
        return FlowField(zeros, zeros.copy(), np.zeros((height, width), dtype=bool))

    Iy, Ix = np.gradient(0.5 * (prev.values + next_.values))
    It = next_.values - prev.values

    Sxx = _window_sum(Ix * Ix, r)
    Syy = _window_sum(Iy * Iy, r)
    Sxy = _window_sum(Ix * Iy, r)
    Sxt = _window_sum(Ix * It, r)
    Syt = _window_sum(Iy * It, r)

    half_trace = (Sxx + Syy) / 2
    spread = np.sqrt(((Sxx - Syy) / 2) ** 2 + Sxy ** 2)
    valid = (half_trace - spread) >= cfg.min_eigen
    valid[:r, :] = False
    valid[-r:, :] = False
    valid[:, :r] = False
    valid[:, -r:] = False

    det = Sxx * Syy - Sxy ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        u = (-Syy * Sxt + Sxy * Syt) / det
        v = (Sxy * Sxt - Sxx * Syt) / det
    valid &= np.isfinite(u) & np.isfinite(v)
    u = np.where(valid, u, 0.0)
    v = np.where(valid, v, 0.0)
    return FlowField(u, v, valid)


def suppress_background(flow: FlowField, cfg: PreprocConfig = PreprocConfig()) -> FlowField:
    """
    Zeroes and invalidates every pixel moving slower than the background
    threshold. Other pixels are left untouched.
    """
    keep = flow.valid & (flow.magnitude() >= cfg.background_threshold)
    return FlowField(np.where(keep, flow.u, 0.0), np.where(keep, flow.v, 0.0), keep)


def render_flow(flow: FlowField, cfg: PreprocConfig = PreprocConfig()) -> np.ndarray:
    """
    Renders the flow as a (height, width, 3) uint8 RGB image.

    Brightness is the magnitude over the 99th percentile of the moving
    pixels, clamped to 1. In ``angle-hue`` mode the hue follows the flow
    direction. Pixels without motion are black, every moving pixel gets at
    least the darkest visible level.
    """
    magnitude = np.where(flow.valid, flow.magnitude(), 0.0)
    moving = magnitude > 0
    image = np.zeros((flow.height, flow.width, 3), dtype=np.uint8)
    if not moving.any():
        return image

    scale = np.percentile(magnitude[moving], RENDER_PERCENTILE)
    level = np.round(np.clip(magnitude / scale, 0.0, 1.0) * 255)
    level[moving] = np.maximum(level[moving], 1)
    level = level.astype(np.uint8)

    if cfg.render_mode == "magnitude-gray":
        return np.dstack([level, level, level])

    hue = np.mod(np.arctan2(flow.v, flow.u) / (2 * math.pi), 1.0)
    hue = (np.floor(hue * 256) % 256).astype(np.uint8)
    saturation = np.where(moving, 255, 0).astype(np.uint8)
    hsv = Image.merge("HSV", [Image.fromarray(channel) for channel in (hue, saturation, level)])
    return np.asarray(hsv.convert("RGB"), dtype=np.uint8)


def flow_frame(prev: GrayFrame, next_: GrayFrame, cfg: PreprocConfig = PreprocConfig()) -> np.ndarray:
    """
    The rendered, resized output frame of one pair of input frames.
    """
    flow = lucas_kanade_flow(prev, next_, cfg)
    if cfg.remove_background:
        flow = suppress_background(flow, cfg)
    return resize_frame(render_flow(flow, cfg), cfg.output_size)


def process_sequence(
    frames: Sequence[Path],
    out_dir: Path,
    cfg: PreprocConfig = PreprocConfig(),
    threads: Optional[int] = None
) -> List[Path]:
    """
    Turns N input frames into N-1 flow frames: output frame t comes from
    the input pair (t, t+1) and is named like the input numbering,
    starting from ``frame_000001.ppm``.

    Frame sizes are checked from the file headers before any output is
    written. Pixels are loaded pair by pair, so only the pairs being
    processed are held in memory.
    """
    frames = list(frames)
    if len(frames) < 2:
        raise FrameError(f"at least 2 frames are needed, found {len(frames)}")

    width, height = frame_size(frames[0])
    for path in frames[1:]:
        size = frame_size(path)
        if size != (width, height):
            raise FrameError(f"{path}: size {size[0]}x{size[1]} differs from "
                             f"{width}x{height} of {frames[0]}")

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    log(f"Computing {len(frames) - 1} flow frames into {out_dir}")

    def process_pair(index: int) -> Path:
        prev = to_grayscale(read_frame(frames[index]))
        next_ = to_grayscale(read_frame(frames[index + 1]))
        return write_frame(flow_frame(prev, next_, cfg), out_dir / frame_name(index + 1))

    return ordered_map(process_pair, list(range(len(frames) - 1)), threads)
