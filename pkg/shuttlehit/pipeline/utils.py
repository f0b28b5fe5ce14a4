from typing import Callable, Iterable, List, Optional, TypeVar

import logging
import datetime
import traceback
from fractions import Fraction
from concurrent.futures import ThreadPoolExecutor

from shuttlehit.constants import LOG_TIME_FORMAT


T = TypeVar("T")
R = TypeVar("R")


def log(msg: str) -> None:
    """
    Logs the message to the console
    """
    logging.info(f"{datetime.datetime.now().strftime(LOG_TIME_FORMAT)} -> {msg}")


def log_error(msg: str, e: Exception = None, fatal: str = None) -> None:
    """
    Logs an error to the console
    """
    if msg and msg != "":
        msg = f"ERROR! {msg} "

    fatal_msg = ""
    if fatal is not None:
        fatal_msg = f"THIS ERROR IS FATAL: {fatal}"

    stacktrace = ""
    if e is not None:
        stacktrace += f"The exception is:\n\n{traceback.format_exc()}\n"

    log(f"{msg}{fatal_msg} {stacktrace}")


def log_row(char: str = "=") -> None:
    """
    Logs a row to the console
    """
    logging.info(f"\n{char*50}\n")


def exact_mean(values: Iterable[float]) -> float:
    """
    Mean of floats computed on their exact rational values and rounded
    once. The result does not depend on the order of the values.
    Returns 0.0 for an empty input.
    """
    values = list(values)
    if not values:
        return 0.0
    return float(sum(Fraction(value) for value in values) / len(values))


def ordered_map(func: Callable[[T], R], items: List[T], threads: Optional[int] = None) -> List[R]:
    """
    Applies func to every item, in parallel if threads > 1.
    Results always come back in input order.
    """
    if not threads or threads <= 1 or len(items) <= 1:
        return [func(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, items))
