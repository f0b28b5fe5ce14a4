"""
Hit event extraction from per-frame probability streams.

Frames whose probability reaches the stream quantile are candidates.
Candidates closer than ``min_gap`` frames belong to the same hit, which is
placed on the most probable frame of the group.
"""
from typing import Any, Dict, List, Optional, Sequence, Tuple

import io
import re
import csv
import math
from pathlib import Path
from dataclasses import dataclass

import numpy as np

from shuttlehit.constants import EXTRACTION_DEFAULTS, FLAT_STREAM_RANGE, STREAM_COLUMNS
from shuttlehit.pipeline.errors import ConfigurationError, StreamError
from shuttlehit.pipeline.rally import Domains, DEFAULT_DOMAINS, Rally, placeholder_shot
from shuttlehit.pipeline.utils import exact_mean, log


#: ``<rally_id>.csv`` or ``<rally_id>.fold<k>.csv``
STREAM_FILE_NAME = re.compile(r"^(?P<rally_id>.+?)(\.fold(?P<fold>\d+))?\.csv$")


@dataclass(frozen=True)
class ProbabilityStream:
    rally_id: str
    probs: Tuple[float, ...]

    def __post_init__(self):
        probs = tuple(float(p) for p in self.probs)
        if not probs:
            raise StreamError(f"The stream of rally '{self.rally_id}' is empty.")
        for frame, prob in enumerate(probs):
            if not math.isfinite(prob) or prob < 0 or prob > 1:
                raise StreamError(f"The stream of rally '{self.rally_id}' has "
                                  f"probability {prob} at frame {frame}, outside [0, 1].")
        object.__setattr__(self, "probs", probs)

    def __len__(self) -> int:
        return len(self.probs)


@dataclass(frozen=True)
class ExtractionConfig:
    quantile: float = EXTRACTION_DEFAULTS["quantile"]
    min_gap: int = EXTRACTION_DEFAULTS["min_gap"]

    def __post_init__(self):
        if not 0 < self.quantile < 1:
            raise ConfigurationError("quantile must be strictly between 0 and 1")
        if self.min_gap < 1:
            raise ConfigurationError("min_gap must be >= 1")

    @staticmethod
    def from_settings(settings: Dict[str, Any]) -> "ExtractionConfig":
        return ExtractionConfig(quantile=float(settings["quantile"]),
                                min_gap=int(settings["min_gap"]))


@dataclass(frozen=True)
class HitEvent:
    frame: int
    peak_prob: float


def quantile_threshold(stream: ProbabilityStream, q: float) -> float:
    """
    The q-quantile of the stream, interpolating linearly between the
    order statistics around index q * (n - 1).
    """
    if not len(stream.probs):
        raise StreamError("Cannot compute the quantile of an empty stream.")
    if not 0 < q < 1:
        raise ConfigurationError("quantile must be strictly between 0 and 1")
    return float(np.quantile(np.asarray(stream.probs), q, method="linear"))


def extract_hits(stream: ProbabilityStream, cfg: ExtractionConfig = ExtractionConfig()) -> List[HitEvent]:
    """
    Hit events of a stream, sorted by frame.

    Candidates are grouped left to right: a candidate further than
    ``min_gap`` frames from the previous one starts a new group. Each group
    yields its most probable frame, the earliest one on ties. Flat streams
    yield nothing.

    When the quantile falls on the baseline, as with a few sparse peaks
    over zeros, only frames above it are candidates.
    """
    probs = stream.probs
    lowest = min(probs)
    if max(probs) - lowest < FLAT_STREAM_RANGE:
        return []

    threshold = quantile_threshold(stream, cfg.quantile)
    if threshold <= lowest:
        candidates = [frame for frame, prob in enumerate(probs) if prob > lowest]
    else:
        candidates = [frame for frame, prob in enumerate(probs) if prob >= threshold]

    groups: List[List[int]] = []
    for frame in candidates:
        if groups and frame - groups[-1][-1] <= cfg.min_gap:
            groups[-1].append(frame)
        else:
            groups.append([frame])

    events = []
    for group in groups:
        best = group[0]
        for frame in group[1:]:
            if probs[frame] > probs[best]:
                best = frame
        events.append(HitEvent(frame=best, peak_prob=probs[best]))
    return events


def merge_streams(streams: Sequence[ProbabilityStream]) -> ProbabilityStream:
    """
    Frame by frame mean of several streams of the same rally. The result
    does not depend on the order of the streams.
    """
    streams = list(streams)
    if not streams:
        raise StreamError("No streams to merge.")
    rally_ids = {stream.rally_id for stream in streams}
    if len(rally_ids) > 1:
        raise StreamError(f"Cannot merge streams of different rallies: {sorted(rally_ids)}")
    lengths = {len(stream) for stream in streams}
    if len(lengths) > 1:
        raise StreamError(f"Cannot merge streams of different lengths: {sorted(lengths)}")
    if len(streams) == 1:
        return streams[0]

    merged = tuple(exact_mean(frame_probs) for frame_probs in zip(*(s.probs for s in streams)))
    return ProbabilityStream(rally_id=streams[0].rally_id, probs=merged)


def to_shot_rows(events: Sequence[HitEvent], rally_id: str = "", domains: Domains = DEFAULT_DOMAINS) -> Rally:
    """
    A rally with ShotSeq and HitFrame set from the events, every other
    column left to its placeholder.
    """
    for previous, event in zip(events, events[1:]):
        if event.frame <= previous.frame:
            raise StreamError(f"Events must be sorted without duplicates: "
                              f"frame {event.frame} follows {previous.frame}")
    shots = [placeholder_shot(seq, event.frame, domains) for seq, event in enumerate(events, start=1)]
    return Rally(rally_id=rally_id, shots=tuple(shots))


def parse_stream_csv(text: str, rally_id: str = "", path: Optional[Path] = None) -> ProbabilityStream:
    """
    Parses a ``frame,prob`` file. Frames must be 0..n-1 in order.
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [cell.strip() for cell in rows[0]] != STREAM_COLUMNS:
        raise StreamError(f"{path}: the header must be '{','.join(STREAM_COLUMNS)}'")

    probs = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != 2:
            raise StreamError(f"{path} (row {line}): expected 2 values, found {len(row)}")
        try:
            frame, prob = int(row[0]), float(row[1])
        except ValueError:
            raise StreamError(f"{path} (row {line}): cannot read {row}") from None
        if frame != len(probs):
            raise StreamError(f"{path} (row {line}): frame {frame} found, "
                              f"expected {len(probs)}")
        if not math.isfinite(prob) or prob < 0 or prob > 1:
            raise StreamError(f"{path} (row {line}): probability {prob} outside [0, 1]")
        probs.append(prob)

    if not probs:
        raise StreamError(f"{path}: the stream has no frames")
    return ProbabilityStream(rally_id=rally_id, probs=tuple(probs))


def read_stream_csv(path: Path) -> ProbabilityStream:
    """
    Reads a stream file. The rally id is the file name without the fold
    suffix.
    """
    path = Path(path)
    match = STREAM_FILE_NAME.match(path.name)
    rally_id = match.group("rally_id") if match else path.stem
    try:
        text = path.read_text(encoding="utf-8-sig")
    except OSError as e:
        raise StreamError(f"{path}: cannot read the file ({e.strerror})") from None
    return parse_stream_csv(text, rally_id=rally_id, path=path)


def write_stream_csv(stream: ProbabilityStream, path: Path) -> Path:
    lines = [",".join(STREAM_COLUMNS)]
    lines += [f"{frame},{prob!r}" for frame, prob in enumerate(stream.probs)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return Path(path)


def group_stream_files(location: Path) -> Dict[str, List[Path]]:
    """
    The stream files of a directory (or a single file), grouped by rally
    id. Fold files of one rally are listed in name order.
    """
    location = Path(location)
    if location.is_file():
        paths = [location]
    elif location.is_dir():
        paths = sorted(p for p in location.iterdir() if p.suffix == ".csv" and p.is_file())
    else:
        raise StreamError(f"{location}: no such file or directory")

    groups: Dict[str, List[Path]] = {}
    for path in paths:
        match = STREAM_FILE_NAME.match(path.name)
        rally_id = match.group("rally_id") if match else path.stem
        groups.setdefault(rally_id, []).append(path)
    return {rally_id: groups[rally_id] for rally_id in sorted(groups)}


def load_streams(location: Path, merge: bool = False) -> List[ProbabilityStream]:
    """
    One stream per rally. Several fold files of a rally are only accepted
    when they can be merged.
    """
    streams = []
    for rally_id, paths in group_stream_files(location).items():
        if len(paths) > 1 and not merge:
            raise StreamError(f"Rally '{rally_id}' has {len(paths)} stream files, "
                              f"merge them or keep only one.")
        folds = [read_stream_csv(path) for path in paths]
        if len(folds) > 1:
            log(f"Merging {len(folds)} streams of rally '{rally_id}'")
        streams.append(merge_streams(folds))
    return streams
