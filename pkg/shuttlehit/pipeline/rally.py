"""
Rally and shot data model, with the competition CSV format.

One CSV file holds one rally, one row per shot, with the fixed header
listed in ``constants.SHOT_COLUMNS``.
"""
from typing import Any, Dict, List, NamedTuple, Optional, Tuple, Union

import io
import csv
import math
import re
from pathlib import Path
from dataclasses import dataclass, field

from shuttlehit.constants import DOMAIN_DEFAULTS, SHOT_COLUMNS, RALLY_FILE_SUFFIX
from shuttlehit.pipeline.errors import ConfigurationError, InvalidRallyError, RallyFormatError
from shuttlehit.pipeline.utils import log


class Point(NamedTuple):
    """2D point in pixels."""
    x: float
    y: float


@dataclass(frozen=True)
class Domains:
    """
    Allowed values of every categorical column.
    """
    hitter: Tuple[str, ...] = tuple(DOMAIN_DEFAULTS["hitter"])
    round_head: Tuple[int, ...] = tuple(DOMAIN_DEFAULTS["round_head"])
    backhand: Tuple[int, ...] = tuple(DOMAIN_DEFAULTS["backhand"])
    ball_height: Tuple[int, ...] = tuple(DOMAIN_DEFAULTS["ball_height"])
    ball_type: Tuple[int, ...] = tuple(DOMAIN_DEFAULTS["ball_type"])
    winner: Tuple[str, ...] = tuple(DOMAIN_DEFAULTS["winner"])

    def __post_init__(self):
        for name in ("hitter", "round_head", "backhand", "ball_height", "ball_type", "winner"):
            values = tuple(getattr(self, name))
            if not values:
                raise ConfigurationError(f"The '{name}' domain is empty.")
            if len(set(values)) != len(values):
                raise ConfigurationError(f"The '{name}' domain has repeated values.")
            object.__setattr__(self, name, values)
        for name in ("round_head", "backhand", "ball_height", "ball_type"):
            if not all(isinstance(v, int) and not isinstance(v, bool) for v in getattr(self, name)):
                raise ConfigurationError(f"The '{name}' domain must contain integers.")
        for name in ("hitter", "winner"):
            if not all(isinstance(v, str) and v and "," not in v for v in getattr(self, name)):
                raise ConfigurationError(f"The '{name}' domain must contain non-empty labels.")

    @staticmethod
    def from_settings(settings: Dict[str, Any]) -> "Domains":
        return Domains(**{key: tuple(value) for key, value in settings.items()})

    def categories(self, name: str) -> Tuple[Any, ...]:
        return getattr(self, name)


DEFAULT_DOMAINS = Domains()


@dataclass(frozen=True)
class Shot:
    """
    One hit of the shuttlecock: one row of a rally file.
    An empty ``winner`` means the cell was left blank.
    """
    shot_seq: int
    hit_frame: int
    hitter: str
    round_head: int
    backhand: int
    ball_height: int
    landing: Point
    hitter_location: Point
    defender_location: Point
    ball_type: int
    winner: str = ""

    def __post_init__(self):
        for name in ("landing", "hitter_location", "defender_location"):
            value = getattr(self, name)
            if not isinstance(value, Point):
                object.__setattr__(self, name, Point(float(value[0]), float(value[1])))


@dataclass(frozen=True)
class Rally:
    """
    All the shots of one video clip, in order.
    """
    rally_id: str
    shots: Tuple[Shot, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "shots", tuple(self.shots))

    def __len__(self) -> int:
        return len(self.shots)


@dataclass(frozen=True)
class Violation:
    row: int
    rule: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    """
    Every invariant violation of a rally. Rows are 0-based shot positions.
    """
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        if self.ok:
            return "valid"
        return "\n".join(f"row {v.row}: [{v.rule}] {v.message}" for v in self.violations)


def validate(rally: Rally, domains: Domains = DEFAULT_DOMAINS) -> ValidationReport:
    """
    Lists every invariant violation of the rally, ordered by row and then
    by rule identifier. Never raises.
    """
    violations = []
    last = len(rally.shots) - 1

    for row, shot in enumerate(rally.shots):
        if shot.shot_seq != row + 1:
            violations.append(Violation(row, "seq-order",
                f"ShotSeq is {shot.shot_seq}, expected {row + 1}"))

        if shot.hit_frame < 0:
            violations.append(Violation(row, "hitframe-negative",
                f"HitFrame {shot.hit_frame} is negative"))

        if row > 0 and shot.hit_frame <= rally.shots[row - 1].hit_frame:
            violations.append(Violation(row, "hitframe-order",
                f"HitFrame {shot.hit_frame} does not follow "
                f"{rally.shots[row - 1].hit_frame}"))

        for name in ("landing", "hitter_location", "defender_location"):
            point = getattr(shot, name)
            if not all(math.isfinite(c) and c >= 0 for c in point):
                violations.append(Violation(row, "coord-range",
                    f"{name} {tuple(point)} is not finite and non-negative"))

        for name, values in _category_checks(shot, domains):
            violations.append(Violation(row, "category-domain",
                f"{name} value {values[0]!r} not in {list(values[1])}"))

        if shot.winner and row != last:
            violations.append(Violation(row, "winner-nonlast",
                f"Winner {shot.winner!r} set on a shot that is not the last"))

    violations.sort(key=lambda v: (v.row, v.rule))
    return ValidationReport(tuple(violations))


def _category_checks(shot: Shot, domains: Domains):
    checks = [
        ("Hitter", shot.hitter, domains.hitter),
        ("RoundHead", shot.round_head, domains.round_head),
        ("Backhand", shot.backhand, domains.backhand),
        ("BallHeight", shot.ball_height, domains.ball_height),
        ("BallType", shot.ball_type, domains.ball_type),
    ]
    if shot.winner:
        checks.append(("Winner", shot.winner, domains.winner))
    for name, value, domain in checks:
        if value not in domain:
            yield name, (value, domain)


_INTEGER = re.compile(r"^[+-]?\d+(\.0*)?$")


def _parse_int(cell: str, column: str, line: int, path) -> int:
    if not _INTEGER.match(cell.strip()):
        raise RallyFormatError(f"{column} must be an integer, found {cell!r}", path, line)
    return int(cell.strip().split(".")[0])


def _parse_float(cell: str, column: str, line: int, path) -> float:
    try:
        value = float(cell) if "_" not in cell else math.nan
    except ValueError:
        value = math.nan
    if not math.isfinite(value):
        raise RallyFormatError(f"{column} must be a finite number, found {cell!r}", path, line)
    return value


def _check_domain(value, domain, column: str, line: int, path) -> None:
    if value not in domain:
        raise RallyFormatError(f"{column} value {value!r} is outside {list(domain)}", path, line)


def parse_rally_csv(
    text: Union[bytes, str],
    rally_id: str = "",
    domains: Domains = DEFAULT_DOMAINS,
    path: Optional[Path] = None
) -> Rally:
    """
    Parses one rally file. Numbers are read exactly and the decimal
    separator is always '.'.

    Raises RallyFormatError on a wrong header, non-numeric values, values
    outside the category domains and ShotSeq values that are not 1..n.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode("utf-8-sig")
        except UnicodeDecodeError as e:
            raise RallyFormatError(f"not valid UTF-8: {e}", path) from None

    rows = list(csv.reader(io.StringIO(text)))
    if not rows:
        raise RallyFormatError("the file is empty, the header is missing", path, 1)

    header = [cell.strip() for cell in rows[0]]
    if header != SHOT_COLUMNS:
        missing = [c for c in SHOT_COLUMNS if c not in header]
        extra = [c for c in header if c not in SHOT_COLUMNS]
        raise RallyFormatError(
            f"wrong header (missing: {missing}, unexpected: {extra}). "
            f"Expected: {','.join(SHOT_COLUMNS)}", path, 1)

    shots = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue  # Trailing blank lines
        if len(row) != len(SHOT_COLUMNS):
            raise RallyFormatError(f"expected {len(SHOT_COLUMNS)} values, "
                                   f"found {len(row)}", path, line)
        cells = dict(zip(SHOT_COLUMNS, (cell.strip() for cell in row)))

        ints = {column: _parse_int(cells[column], column, line, path) for column in
                ("ShotSeq", "HitFrame", "RoundHead", "Backhand", "BallHeight", "BallType")}
        floats = {column: _parse_float(cells[column], column, line, path) for column in
                  SHOT_COLUMNS[6:12]}

        _check_domain(cells["Hitter"], domains.hitter, "Hitter", line, path)
        _check_domain(ints["RoundHead"], domains.round_head, "RoundHead", line, path)
        _check_domain(ints["Backhand"], domains.backhand, "Backhand", line, path)
        _check_domain(ints["BallHeight"], domains.ball_height, "BallHeight", line, path)
        _check_domain(ints["BallType"], domains.ball_type, "BallType", line, path)
        if cells["Winner"]:
            _check_domain(cells["Winner"], domains.winner, "Winner", line, path)

        if ints["ShotSeq"] != len(shots) + 1:
            raise RallyFormatError(
                f"duplicate/gap in ShotSeq: found {ints['ShotSeq']}, "
                f"expected {len(shots) + 1}", path, line)

        shots.append(Shot(
            shot_seq=ints["ShotSeq"],
            hit_frame=ints["HitFrame"],
            hitter=cells["Hitter"],
            round_head=ints["RoundHead"],
            backhand=ints["Backhand"],
            ball_height=ints["BallHeight"],
            landing=Point(floats["LandingX"], floats["LandingY"]),
            hitter_location=Point(floats["HitterLocationX"], floats["HitterLocationY"]),
            defender_location=Point(floats["DefenderLocationX"], floats["DefenderLocationY"]),
            ball_type=ints["BallType"],
            winner=cells["Winner"],
        ))

    return Rally(rally_id=rally_id, shots=tuple(shots))


def _format_number(value: float) -> str:
    """
    Integers are written without decimal point, other values with the
    shortest representation that reads back to the same float.
    """
    value = float(value)
    if value.is_integer():
        return str(int(value))
    return repr(value)


def write_rally_csv(rally: Rally, domains: Domains = DEFAULT_DOMAINS) -> bytes:
    """
    Serializes a valid rally in the canonical format: fixed header order,
    LF line endings, empty Winner cells left blank.

    Raises InvalidRallyError reporting the first violation.
    """
    report = validate(rally, domains)
    if not report.ok:
        first = report.violations[0]
        raise InvalidRallyError(f"Rally '{rally.rally_id}' is invalid, "
                                f"row {first.row}: [{first.rule}] {first.message}")

    lines = [",".join(SHOT_COLUMNS)]
    for shot in rally.shots:
        lines.append(",".join([
            str(shot.shot_seq),
            str(shot.hit_frame),
            shot.hitter,
            str(shot.round_head),
            str(shot.backhand),
            str(shot.ball_height),
            _format_number(shot.landing.x),
            _format_number(shot.landing.y),
            _format_number(shot.hitter_location.x),
            _format_number(shot.hitter_location.y),
            _format_number(shot.defender_location.x),
            _format_number(shot.defender_location.y),
            str(shot.ball_type),
            shot.winner,
        ]))
    return ("\n".join(lines) + "\n").encode("utf-8")


def read_rally_file(path: Path, domains: Domains = DEFAULT_DOMAINS) -> Rally:
    """
    Reads ``<rally_id>.csv``.
    """
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise RallyFormatError(f"cannot read the file: {e.strerror}", path) from None
    return parse_rally_csv(data, rally_id=path.stem, domains=domains, path=path)


def write_rally_file(rally: Rally, directory: Path, domains: Domains = DEFAULT_DOMAINS) -> Path:
    """
    Writes the rally as ``<directory>/<rally_id>.csv`` and returns the path.
    """
    if not rally.rally_id:
        raise InvalidRallyError("Cannot name the file of a rally without id.")
    path = Path(directory) / (rally.rally_id + RALLY_FILE_SUFFIX)
    path.write_bytes(write_rally_csv(rally, domains))
    return path


def list_rally_files(directory: Path) -> List[Path]:
    """
    All the rally files of a directory, sorted by name.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise RallyFormatError("not a directory", directory)
    return sorted(p for p in directory.iterdir()
                  if p.suffix == RALLY_FILE_SUFFIX and p.is_file())


def read_rally_dir(directory: Path, domains: Domains = DEFAULT_DOMAINS) -> List[Rally]:
    """
    Reads every rally file of a directory, sorted by rally id.
    """
    rallies = [read_rally_file(path, domains) for path in list_rally_files(directory)]
    log(f"Read {len(rallies)} rallies from {directory}")
    return rallies


def placeholder_shot(shot_seq: int, hit_frame: int, domains: Domains = DEFAULT_DOMAINS) -> Shot:
    """
    A shot with only ShotSeq and HitFrame known. Categories take the first
    value of their domain, coordinates are (0, 0) and Winner is blank.
    """
    origin = Point(0.0, 0.0)
    return Shot(
        shot_seq=shot_seq,
        hit_frame=hit_frame,
        hitter=domains.hitter[0],
        round_head=domains.round_head[0],
        backhand=domains.backhand[0],
        ball_height=domains.ball_height[0],
        landing=origin,
        hitter_location=origin,
        defender_location=origin,
        ball_type=domains.ball_type[0],
        winner="",
    )

