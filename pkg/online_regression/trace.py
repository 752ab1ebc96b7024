# mypy: ignore-errors
import asyncio
import functools
import logging
import sys
from inspect import signature
from timeit import default_timer as timer
from typing import Any, Callable, ParamSpec, TypeVar

import numpy as np


logger = logging.getLogger(__name__)

P = ParamSpec("P")
R = TypeVar("R")

_MAX_REPR = 80


def _short_repr(value: Any) -> str:
    """Keeps log lines readable when arguments are arrays, streams or learner state."""
    if isinstance(value, np.ndarray):
        return f"ndarray{value.shape}"
    if isinstance(value, (list, tuple)) and len(value) > 8:
        return f"{type(value).__name__}[{len(value)}]"
    text = repr(value)
    if len(text) > _MAX_REPR:
        return text[: _MAX_REPR - 3] + "..."
    return text


def trace(func: Callable[P, R]) -> Callable[P, R]:
    """
    Logs the call, its result and the elapsed wall time at DEBUG level.

    Failures are logged at ERROR level and re-raised. Argument formatting is skipped
    entirely unless DEBUG is enabled, so decorated functions cost one timer call.
    """
    sig = signature(func)

    def describe(args: tuple, kwargs: dict) -> str:
        bound_args = sig.bind(*args, **kwargs)
        return ", ".join(f"{k}={_short_repr(v)}" for k, v in bound_args.arguments.items() if k != "self")

    @functools.wraps(func)
    def log_decorator_wrapper_sync(*args, **kwargs):
        start = timer()
        try:
            value = func(*args, **kwargs)
            if logger.isEnabledFor(logging.DEBUG):
                elapsed = (timer() - start) * 1000.0
                call = f"{func.__qualname__}({describe(args, kwargs)})"
                logger.debug(f"{call} -> {_short_repr(value)} ({elapsed:.2f}ms)")
            return value
        except Exception:
            elapsed = (timer() - start) * 1000.0
            call = f"{func.__qualname__}({describe(args, kwargs)})"
            logger.error(f"{call} ->\n\t{sys.exc_info()[1]!s} ({elapsed:.2f}ms)")
            raise

    @functools.wraps(func)
    async def log_decorator_wrapper_async(*args, **kwargs):
        start = timer()
        try:
            value = await func(*args, **kwargs)
            if logger.isEnabledFor(logging.DEBUG):
                elapsed = (timer() - start) * 1000.0
                call = f"{func.__qualname__}({describe(args, kwargs)})"
                logger.debug(f"{call} -> {_short_repr(value)} ({elapsed:.2f}ms)")
            return value
        except Exception:
            elapsed = (timer() - start) * 1000.0
            call = f"{func.__qualname__}({describe(args, kwargs)})"
            logger.error(f"{call} ->\n\t{sys.exc_info()[1]!s} ({elapsed:.2f}ms)")
            raise

    if asyncio.iscoroutinefunction(func):
        return log_decorator_wrapper_async
    return log_decorator_wrapper_sync
