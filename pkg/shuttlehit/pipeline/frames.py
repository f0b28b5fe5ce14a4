from typing import List, Tuple

from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from shuttlehit.constants import FRAME_NAME_FORMAT, FRAME_GLOB
from shuttlehit.pipeline.errors import FrameError


def frame_name(index: int) -> str:
    """
    File name of the frame with the given 1-based index.
    """
    return FRAME_NAME_FORMAT.format(index)


def list_frames(directory: Path) -> List[Path]:
    """
    The frame files of a sequence directory, in frame order.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FrameError(f"{directory}: not a directory")
    return sorted(directory.glob(FRAME_GLOB))


def _open_ppm(path: Path) -> Image.Image:
    try:
        image = Image.open(str(path))
    except (OSError, UnidentifiedImageError) as e:
        raise FrameError(f"{path}: cannot read frame ({e})") from None
    if image.format not in ("PPM", "PNM"):
        image.close()
        raise FrameError(f"{path}: not a PPM file ({image.format})")
    return image


def frame_size(path: Path) -> Tuple[int, int]:
    """
    (width, height) of a PPM frame, read from its header only.
    """
    with _open_ppm(path) as image:
        return image.size


def read_frame(path: Path) -> np.ndarray:
    """
    Reads a PPM frame as a (height, width, 3) uint8 array.
    """
    with _open_ppm(path) as image:
        try:
            return np.asarray(image.convert("RGB"), dtype=np.uint8).copy()
        except OSError as e:
            raise FrameError(f"{path}: cannot read frame ({e})") from None


def write_frame(image: np.ndarray, path: Path) -> Path:
    """
    Writes a (height, width, 3) uint8 array as binary PPM (P6).
    """
    if image.ndim == 2:
        image = np.dstack([image] * 3)
    Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).save(str(path), format="PPM")
    return Path(path)


def resize_frame(image: np.ndarray, size: Tuple[int, int]) -> np.ndarray:
    """
    Bilinear resize to (width, height).
    """
    width, height = size
    if image.shape[1] == width and image.shape[0] == height:
        return image
    resized = Image.fromarray(np.ascontiguousarray(image, dtype=np.uint8)).resize(
        (int(width), int(height)), Image.BILINEAR)
    return np.asarray(resized, dtype=np.uint8)
