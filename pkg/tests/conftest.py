from typing import Union

import os
import json
import pytest
import logging

from pathlib import Path, PosixPath
from dataclasses import replace
from inspect import getmembers, isfunction, isclass, ismethod

from shuttlehit import constants
from shuttlehit.pipeline import main, configuration, rally, flow, events, assembly
from shuttlehit.pipeline.rally import Point, Rally, Shot


@pytest.fixture(autouse=True)
def point_to_tmpdir(monkeypatch, tmpdir):
    """
        Mocks all the path values in constants.py to point to the
        pytest temp directory.
    """
    modules = [
        main,
        configuration,
        rally,
        flow,
        events,
        assembly,
    ]
    os.mkdir(tmpdir / "data")

    base_path = str(constants.BASE_PATH.absolute()).strip()
    test_path = str(tmpdir).strip()

    for const, value in vars(constants).items():
        if (not const.startswith("_") and
            (isinstance(value, str) or
            isinstance(value, PosixPath)
        )):
            new_value = _patch_path(value, base_path, test_path)
            if new_value == value:
                continue

            monkeypatch.setattr(constants, const, new_value)
            for module in modules:
                if hasattr(module, const):
                    monkeypatch.setattr(module, const, new_value)

                # Mock function defaults pointing to the real paths
                functions = [func for name, func in getmembers(module, isfunction)]
                for clas in getmembers(module, isclass):
                    functions += [func for name, func in getmembers(clas, ismethod)]

                for function in functions:
                    if function.__defaults__:
                        new_defaults = tuple(
                            _patch_path(v, base_path, test_path) if isinstance(v, (Path, str)) else v
                            for v in function.__defaults__)
                        monkeypatch.setattr(function, "__defaults__", new_defaults)


def _patch_path(value: Union[Path, str], base_path: str, test_path: str) -> Union[Path, str]:
    new_value = str(value).replace(base_path, test_path)
    if isinstance(value, PosixPath):
        new_value = Path(new_value)
    return new_value


@pytest.fixture
def logs(monkeypatch):
    logs = []

    def mock_log(msg, *args, **kwargs):
        print(msg)
        logs.append(msg)

    monkeypatch.setattr(logging, "info", mock_log)
    yield logs


def in_logs(logs, string):
    """
        Looks for a string in the entire logs stack
    """
    total = "\n".join(logs)
    try:
        where = total.index(string) + 1  # So that 0 == not found
        print(f"---------> {string}: {where}")
        return True
    except ValueError:
        return False


def make_shot(seq: int = 1, frame: int = 10, **overrides) -> Shot:
    """
        A valid shot, with every field overridable by name.
    """
    values = dict(
        shot_seq=seq,
        hit_frame=frame,
        hitter="A",
        round_head=1,
        backhand=2,
        ball_height=1,
        landing=Point(500, 600),
        hitter_location=Point(400, 650),
        defender_location=Point(700, 200),
        ball_type=3,
        winner="",
    )
    values.update(overrides)
    return Shot(**values)


def make_rally(rally_id: str = "rally_00001", n: int = 3, winner: str = "B") -> Rally:
    """
        A valid rally of n shots 20 frames apart, hitters alternating.
    """
    shots = [make_shot(seq, 10 + 20 * (seq - 1), hitter="AB"[(seq - 1) % 2]) for seq in range(1, n + 1)]
    if shots:
        shots[-1] = replace(shots[-1], winner=winner)
    return Rally(rally_id, tuple(shots))


@pytest.fixture
def sample_rally():
    return make_rally()


@pytest.fixture
def config_file(tmpdir):
    """
        Writes a configuration file and returns its path.
    """
    def write(data):
        path = Path(tmpdir) / "test-configuration.json"
        path.write_text(json.dumps(data))
        return path
    return write
