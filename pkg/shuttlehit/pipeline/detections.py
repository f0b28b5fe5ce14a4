"""
Ingestion of the upstream model outputs: player and ball detections, ball
trajectories, player poses and per-shot classifier probabilities.
"""
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import io
import csv
import json
import math
from pathlib import Path
from dataclasses import dataclass, field

from shuttlehit.constants import POSE_KEYPOINTS, CLASSIFIED_ATTRIBUTES
from shuttlehit.pipeline.errors import AssemblyError
from shuttlehit.pipeline.rally import Point
from shuttlehit.pipeline.utils import log


@dataclass(frozen=True)
class Box:
    """
    Axis-aligned box in image coordinates, y growing downwards.
    """
    x1: float
    y1: float
    x2: float
    y2: float

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x1, self.y1, self.x2, self.y2)):
            raise AssemblyError(f"Box {self} has non finite corners.")
        if self.x1 > self.x2 or self.y1 > self.y2:
            raise AssemblyError(f"Box corners are not ordered: {self}")

    @property
    def center(self) -> Point:
        return Point((self.x1 + self.x2) / 2, (self.y1 + self.y2) / 2)

    @property
    def bottom_center(self) -> Point:
        return Point((self.x1 + self.x2) / 2, self.y2)

    @property
    def bottom_right(self) -> Point:
        return Point(self.x2, self.y2)

    def corners(self) -> Tuple[Point, Point, Point, Point]:
        """
        Top-left first, then clockwise.
        """
        return (Point(self.x1, self.y1), Point(self.x2, self.y1),
                Point(self.x2, self.y2), Point(self.x1, self.y2))


@dataclass(frozen=True)
class Keypoint:
    x: float
    y: float
    confidence: float


@dataclass(frozen=True)
class Pose:
    """
    The 17 COCO keypoints of one player, with the box they were found in.
    """
    keypoints: Tuple[Keypoint, ...]
    box: Optional[Box] = None

    def __post_init__(self):
        keypoints = tuple(k if isinstance(k, Keypoint) else Keypoint(*map(float, k))
                          for k in self.keypoints)
        if len(keypoints) != POSE_KEYPOINTS:
            raise AssemblyError(f"A pose needs {POSE_KEYPOINTS} keypoints, found {len(keypoints)}")
        object.__setattr__(self, "keypoints", keypoints)


@dataclass(frozen=True)
class Detection:
    frame: int
    kind: str
    box: Box
    conf: float = 1.0


@dataclass(frozen=True)
class FrameDetections:
    """
    What is known about one frame. At most two player boxes.
    """
    players: Tuple[Box, ...] = ()
    ball: Optional[Point] = None
    track: Optional[Point] = None
    poses: Tuple[Pose, ...] = ()


@dataclass(frozen=True)
class DetectionBundle:
    frames: Dict[int, FrameDetections] = field(default_factory=dict)

    @property
    def last_frame(self) -> int:
        return max(self.frames) if self.frames else -1

    def at(self, frame: int) -> FrameDetections:
        return self.frames.get(frame, FrameDetections())

    def covers(self, frame: int) -> bool:
        """
        True if frame is within the range of the ingested data. An empty
        bundle covers everything, with nothing to say about any frame.
        """
        return not self.frames or 0 <= frame <= self.last_frame

    @staticmethod
    def build(
        detections: Sequence[Detection],
        track: Optional[Dict[int, Point]] = None,
        poses: Optional[Dict[int, List[Pose]]] = None
    ) -> "DetectionBundle":
        """
        Groups the inputs by frame. When more than two players or more than
        one ball are detected in a frame, the most confident ones are kept.
        """
        track = track or {}
        poses = poses or {}
        players: Dict[int, List[Detection]] = {}
        balls: Dict[int, List[Detection]] = {}
        for detection in detections:
            target = players if detection.kind == "player" else balls
            target.setdefault(detection.frame, []).append(detection)

        frames = {}
        for frame in sorted(set(players) | set(balls) | set(track) | set(poses)):
            frame_players = sorted(players.get(frame, []), key=lambda d: -d.conf)
            if len(frame_players) > 2:
                log(f"WARNING! {len(frame_players)} players detected in frame {frame}, "
                    f"keeping the two most confident.")
            frame_balls = sorted(balls.get(frame, []), key=lambda d: -d.conf)
            frames[frame] = FrameDetections(
                players=tuple(d.box for d in frame_players[:2]),
                ball=frame_balls[0].box.center if frame_balls else None,
                track=track.get(frame),
                poses=tuple(poses.get(frame, [])),
            )
        return DetectionBundle(frames=frames)


@dataclass(frozen=True)
class ClassProbs:
    """
    Classifier outputs keyed by (shot_seq, column). Every entry holds one
    probability vector per model (fold).
    """
    vectors: Dict[Tuple[int, str], Tuple[Tuple[float, ...], ...]] = field(default_factory=dict)

    def get(self, shot_seq: int, column: str) -> Tuple[Tuple[float, ...], ...]:
        try:
            return self.vectors[(shot_seq, column)]
        except KeyError:
            raise AssemblyError(f"No {column} probabilities for shot {shot_seq}.") from None


def check_probability_vector(probs: Sequence[float], where: str = "") -> Tuple[float, ...]:
    probs = tuple(float(p) for p in probs)
    if not probs:
        raise AssemblyError(f"{where}: empty probability vector")
    if any(not math.isfinite(p) or p < 0 for p in probs):
        raise AssemblyError(f"{where}: probabilities must be finite and >= 0, found {list(probs)}")
    if abs(math.fsum(probs) - 1) > 1e-6:
        raise AssemblyError(f"{where}: probabilities add up to {math.fsum(probs)}, not 1")
    return probs


def _json_lines(path: Path) -> Iterator[Tuple[int, dict]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.readlines()
    except OSError as e:
        raise AssemblyError(f"{path}: cannot read the file ({e.strerror})") from None
    for line_number, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except ValueError as e:
            raise AssemblyError(f"{path} (row {line_number}): invalid JSON ({e})") from None
        if not isinstance(record, dict):
            raise AssemblyError(f"{path} (row {line_number}): expected a JSON object")
        yield line_number, record


def load_detections(path: Path) -> List[Detection]:
    """
    Reads ``{frame, kind, x1, y1, x2, y2, conf}`` lines. Balls are points,
    stored as degenerate boxes.
    """
    detections = []
    for line, record in _json_lines(path):
        try:
            kind = record["kind"]
            if kind not in ("player", "ball"):
                raise ValueError(f"unknown kind {kind!r}")
            detections.append(Detection(
                frame=int(record["frame"]),
                kind=kind,
                box=Box(float(record["x1"]), float(record["y1"]),
                        float(record["x2"]), float(record["y2"])),
                conf=float(record.get("conf", 1.0)),
            ))
        except (KeyError, TypeError, ValueError, AssemblyError) as e:
            raise AssemblyError(f"{path} (row {line}): invalid detection ({e})") from None
    return detections


def load_track(path: Path) -> Dict[int, Point]:
    """
    Reads a ``frame,x,y,visible`` trajectory. Only visible points are kept.
    """
    try:
        text = Path(path).read_text(encoding="utf-8-sig")
    except OSError as e:
        raise AssemblyError(f"{path}: cannot read the file ({e.strerror})") from None

    rows = list(csv.reader(io.StringIO(text)))
    if not rows or [c.strip() for c in rows[0]] != ["frame", "x", "y", "visible"]:
        raise AssemblyError(f"{path}: the header must be 'frame,x,y,visible'")

    track = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            frame, x, y, visible = int(row[0]), float(row[1]), float(row[2]), int(row[3])
        except (IndexError, ValueError):
            raise AssemblyError(f"{path} (row {line}): cannot read {row}") from None
        if visible not in (0, 1):
            raise AssemblyError(f"{path} (row {line}): visible must be 0 or 1")
        if visible:
            track[frame] = Point(x, y)
    return track


def load_poses(path: Path) -> Dict[int, List[Pose]]:
    """
    Reads ``{frame, box, kp}`` lines, grouped by frame.
    """
    poses: Dict[int, List[Pose]] = {}
    for line, record in _json_lines(path):
        try:
            box = Box(*map(float, record["box"]))
            pose = Pose(keypoints=tuple(tuple(k) for k in record["kp"]), box=box)
            poses.setdefault(int(record["frame"]), []).append(pose)
        except (KeyError, TypeError, ValueError, AssemblyError) as e:
            raise AssemblyError(f"{path} (row {line}): invalid pose ({e})") from None
    return poses


def load_class_probs(path: Path) -> ClassProbs:
    """
    Reads ``{shot_seq, attribute, probs}`` lines. Several lines for the
    same shot and attribute are the outputs of several models.
    """
    vectors: Dict[Tuple[int, str], List[Tuple[float, ...]]] = {}
    for line, record in _json_lines(path):
        try:
            attribute = record["attribute"]
            if attribute not in CLASSIFIED_ATTRIBUTES:
                raise ValueError(f"unknown attribute {attribute!r}")
            key = (int(record["shot_seq"]), attribute)
            probs = check_probability_vector(record["probs"], f"{path} (row {line})")
        except (KeyError, TypeError, ValueError) as e:
            raise AssemblyError(f"{path} (row {line}): invalid probabilities ({e})") from None
        vectors.setdefault(key, []).append(probs)
    return ClassProbs({key: tuple(value) for key, value in vectors.items()})
