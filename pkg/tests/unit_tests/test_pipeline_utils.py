import time
import threading

from freezegun import freeze_time

from shuttlehit.pipeline.utils import exact_mean, log, log_error, log_row, ordered_map
from tests.conftest import in_logs


@freeze_time("2021-01-01 10:00:00")
def test_log(logs):
    log("Hello")
    assert logs == ["10:00:00 -> Hello"]


@freeze_time("2021-01-01 10:00:00")
def test_log_error_without_exception(logs):
    log_error("Something broke", fatal="exiting.")
    assert in_logs(logs, "10:00:00 -> ERROR! Something broke THIS ERROR IS FATAL: exiting.")
    assert not in_logs(logs, "The exception is")


def test_log_error_with_exception(logs):
    try:
        raise ValueError("boom")
    except ValueError as e:
        log_error("Caught it", e)
    assert in_logs(logs, "ERROR! Caught it")
    assert in_logs(logs, "ValueError: boom")


def test_log_row(logs):
    log_row("-")
    assert logs == ["\n" + "-" * 50 + "\n"]


def test_exact_mean_empty():
    assert exact_mean([]) == 0.0


def test_exact_mean_is_order_independent():
    values = [0.1, 0.2, 0.3, 1e-17, 0.7, 1 / 3]
    assert exact_mean(values) == exact_mean(reversed(values)) == exact_mean(sorted(values))


def test_exact_mean_of_repeated_value():
    # A plain sum of ten 0.1 is not exactly 1.0
    assert exact_mean([0.1] * 10) == 0.1
    assert exact_mean([0.9, 0.9, 0.9]) == 0.9


def test_ordered_map_keeps_order():
    def slow_square(x):
        time.sleep(0.001 * (5 - x))
        return x * x
    assert ordered_map(slow_square, [0, 1, 2, 3, 4], threads=4) == [0, 1, 4, 9, 16]


def test_ordered_map_single_thread_runs_inline():
    seen = []
    ordered_map(lambda x: seen.append(threading.current_thread()), [1, 2, 3], threads=1)
    assert all(thread is threading.main_thread() for thread in seen)
