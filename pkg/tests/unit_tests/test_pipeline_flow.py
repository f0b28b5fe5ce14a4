import pytest
import numpy as np
from pathlib import Path

from shuttlehit.pipeline import flow as flow_module
from shuttlehit.pipeline.errors import ConfigurationError, FrameError
from shuttlehit.pipeline.flow import (
    FlowField,
    GrayFrame,
    PreprocConfig,
    lucas_kanade_flow,
    process_sequence,
    render_flow,
    suppress_background,
    to_grayscale,
)
from shuttlehit.pipeline.frames import frame_name, list_frames, read_frame, write_frame
from shuttlehit.synth.motion import gen_motion_sequence, write_motion_sequence


def _uniform_flow(u, v, shape=(8, 8)):
    return FlowField(np.full(shape, float(u)), np.full(shape, float(v)), np.ones(shape, dtype=bool))


def _mean_error(flow, dx, dy):
    return (np.mean(np.abs(flow.u[flow.valid] - dx)), np.mean(np.abs(flow.v[flow.valid] - dy)))


def test_config_validation():
    with pytest.raises(ConfigurationError):
        PreprocConfig(window_radius=0)
    with pytest.raises(ConfigurationError):
        PreprocConfig(background_threshold=0)
    with pytest.raises(ConfigurationError):
        PreprocConfig(render_mode="rainbow")


def test_grayscale():
    black = to_grayscale(np.zeros((4, 6, 3), dtype=np.uint8))
    assert (black.width, black.height) == (6, 4)
    assert np.all(black.values == 0)

    white = to_grayscale(np.full((4, 6, 3), 255, dtype=np.uint8))
    assert np.allclose(white.values, 1.0)
    assert white.values.max() <= 1.0

    red = np.zeros((2, 2, 3), dtype=np.uint8)
    red[..., 0] = 255
    assert np.allclose(to_grayscale(red).values, 0.299)


def test_grayscale_empty_frame():
    with pytest.raises(FrameError):
        to_grayscale(np.zeros((0, 4, 3), dtype=np.uint8))


def test_gray_frame_range():
    with pytest.raises(FrameError):
        GrayFrame(np.full((2, 2), 1.5))


def test_identical_frames_give_zero_flow():
    frame = gen_motion_sequence((32, 32), (0, 0), 1, seed=3)[0]
    flow = lucas_kanade_flow(frame, frame)
    assert flow.valid.any()
    assert np.all(flow.u == 0) and np.all(flow.v == 0)


def test_identical_frames_are_all_background():
    frame = gen_motion_sequence((32, 32), (1, 0), 1, seed=3)[0]
    flow = suppress_background(lucas_kanade_flow(frame, frame))
    assert not flow.valid.any()
    assert np.all(flow.u == 0) and np.all(flow.v == 0)


def test_constant_frames_are_invalid():
    frame = GrayFrame(np.full((16, 16), 0.4))
    flow = lucas_kanade_flow(frame, GrayFrame(np.full((16, 16), 0.6)))
    assert not flow.valid.any()
    assert np.all(flow.u == 0) and np.all(flow.v == 0)


def test_border_is_invalid():
    prev, next_ = gen_motion_sequence((32, 32), (1, 0), 2, seed=1)
    flow = lucas_kanade_flow(prev, next_, PreprocConfig(window_radius=3))
    assert not flow.valid[:3, :].any() and not flow.valid[-3:, :].any()
    assert not flow.valid[:, :3].any() and not flow.valid[:, -3:].any()


def test_dimension_mismatch():
    with pytest.raises(FrameError, match="frame sizes differ"):
        lucas_kanade_flow(GrayFrame(np.zeros((4, 4))), GrayFrame(np.zeros((4, 5))))


def test_translation_by_one_pixel():
    prev, next_ = gen_motion_sequence((64, 64), (1, 0), 2, seed=7)
    flow = lucas_kanade_flow(prev, next_)
    error_u, error_v = _mean_error(flow, 1, 0)
    assert flow.valid.sum() > 0.5 * flow.valid.size
    assert error_u <= 0.25 and error_v <= 0.25


@pytest.mark.parametrize("seed", [1, 2, 3, 4])
def test_translation_recovery_sweep(seed):
    for dx in range(-2, 3):
        for dy in range(-2, 3):
            prev, next_ = gen_motion_sequence((64, 64), (dx, dy), 2, seed=seed)
            flow = lucas_kanade_flow(prev, next_)
            error_u, error_v = _mean_error(flow, dx, dy)
            assert error_u <= 0.25 and error_v <= 0.25, (dx, dy, error_u, error_v)


def test_suppress_background():
    assert not suppress_background(_uniform_flow(0, 0)).valid.any()

    u = np.zeros((5, 5))
    u[2, 3] = 1.0
    flow = suppress_background(FlowField(u, np.zeros((5, 5)), np.ones((5, 5), dtype=bool)))
    assert flow.valid.sum() == 1 and flow.valid[2, 3]
    assert flow.u[2, 3] == 1.0


def test_suppress_background_is_idempotent():
    rng = np.random.default_rng(5)
    for _ in range(20):
        flow = FlowField(rng.normal(0, 1, (12, 12)), rng.normal(0, 1, (12, 12)), rng.random((12, 12)) > 0.2)
        once = suppress_background(flow)
        twice = suppress_background(once)
        assert np.array_equal(once.u, twice.u)
        assert np.array_equal(once.v, twice.v)
        assert np.array_equal(once.valid, twice.valid)


def test_render_black_exactly_where_suppressed():
    rng = np.random.default_rng(8)
    flow = suppress_background(FlowField(rng.normal(0, 1, (16, 16)), rng.normal(0, 1, (16, 16)),
                                         np.ones((16, 16), dtype=bool)))
    for mode in ("magnitude-gray", "angle-hue"):
        image = render_flow(flow, PreprocConfig(render_mode=mode))
        black = np.all(image == 0, axis=2)
        assert np.array_equal(black, ~flow.valid)


def test_render_all_suppressed_is_black():
    flow = suppress_background(_uniform_flow(0.1, 0))
    assert not render_flow(flow).any()


def test_render_uniform_flow_is_uniform_gray():
    image = render_flow(_uniform_flow(1, 0))
    assert image.shape == (8, 8, 3)
    assert np.all(image == image[0, 0])
    assert image[0, 0, 0] > 0
    assert image[0, 0, 0] == image[0, 0, 1] == image[0, 0, 2]


def test_render_opposite_flows_have_complementary_hues():
    cfg = PreprocConfig(render_mode="angle-hue")
    right = render_flow(_uniform_flow(1, 0), cfg)[0, 0].astype(int)
    left = render_flow(_uniform_flow(-1, 0), cfg)[0, 0].astype(int)
    assert not np.array_equal(right, left)
    # Full saturation and value: complementary colours add up to white
    assert np.all(np.abs(right + left - 255) <= 2)


def test_process_two_identical_frames(tmpdir):
    frames = write_motion_sequence(gen_motion_sequence((32, 32), (0, 0), 2), Path(tmpdir) / "in")
    outputs = process_sequence(frames, Path(tmpdir) / "out")
    assert [p.name for p in outputs] == [frame_name(1)]
    image = read_frame(outputs[0])
    assert image.shape == (180, 180, 3)
    assert not image.any()


def test_process_translating_pattern(tmpdir):
    frames = write_motion_sequence(gen_motion_sequence((48, 48), (2, 0), 3, seed=2), Path(tmpdir) / "in")
    outputs = process_sequence(frames, Path(tmpdir) / "out", PreprocConfig(output_size=(48, 48)))
    assert len(outputs) == 2
    first, second = (read_frame(p).any(axis=2) for p in outputs)
    assert first.any() and second.any()
    assert (first & second).sum() >= 0.5 * first.sum()


def test_process_is_deterministic_with_threads(tmpdir):
    frames = write_motion_sequence(gen_motion_sequence((32, 32), (1, 1), 5, seed=4), Path(tmpdir) / "in")
    single = process_sequence(frames, Path(tmpdir) / "single")
    threaded = process_sequence(frames, Path(tmpdir) / "threaded", threads=3)
    assert len(single) == len(threaded) == 4
    for a, b in zip(single, threaded):
        assert a.read_bytes() == b.read_bytes()


def test_process_keep_background(tmpdir):
    frames = write_motion_sequence(gen_motion_sequence((32, 32), (1, 0), 2, seed=6), Path(tmpdir) / "in")
    with_bg = process_sequence(frames, Path(tmpdir) / "a", PreprocConfig(remove_background=False))
    assert read_frame(with_bg[0]).any()


def test_process_needs_two_frames(tmpdir):
    frames = write_motion_sequence(gen_motion_sequence((8, 8), (0, 0), 1), Path(tmpdir) / "in")
    with pytest.raises(FrameError, match="at least 2 frames"):
        process_sequence(frames, Path(tmpdir) / "out")


def test_process_size_mismatch(tmpdir):
    directory = Path(tmpdir) / "in"
    directory.mkdir()
    write_frame(np.zeros((8, 8, 3), dtype=np.uint8), directory / frame_name(1))
    write_frame(np.zeros((8, 8, 3), dtype=np.uint8), directory / frame_name(2))
    write_frame(np.zeros((8, 9, 3), dtype=np.uint8), directory / frame_name(3))
    with pytest.raises(FrameError, match="frame_000003.ppm: size 9x8 differs"):
        process_sequence(list_frames(directory), Path(tmpdir) / "out")
    assert not (Path(tmpdir) / "out").exists()


def test_process_loads_frames_pair_by_pair(tmpdir, monkeypatch):
    frames = write_motion_sequence(gen_motion_sequence((16, 16), (1, 0), 6, seed=3), Path(tmpdir) / "in")
    calls = []

    def reading(path):
        calls.append(("read", Path(path).name))
        return read_frame(path)

    def writing(image, path):
        calls.append(("write", Path(path).name))
        return write_frame(image, path)

    monkeypatch.setattr(flow_module, "read_frame", reading)
    monkeypatch.setattr(flow_module, "write_frame", writing)
    outputs = process_sequence(frames, Path(tmpdir) / "out")

    assert len(outputs) == 5
    # Nothing past the first pair is decoded before the first output exists
    first_write = calls.index(("write", frame_name(1)))
    assert calls[:first_write] == [("read", frames[0].name), ("read", frames[1].name)]
    assert [name for kind, name in calls if kind == "write"] == [frame_name(i) for i in range(1, 6)]
