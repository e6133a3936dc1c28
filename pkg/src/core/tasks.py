"""Core task: start and stop the worker pool when the application starts and stops."""

# Standard library imports
import logging
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from typing import AsyncIterator, Callable

# Third party imports
from fastapi import FastAPI

from src.core.config import LOG_LEVEL, THREADS, configure_logging

log = logging.getLogger(__name__)


def create_start_app_handler(app: FastAPI) -> Callable:
    """
    It returns a function that configures logging and opens the worker pool.

    Args:
      app (FastAPI): FastAPI

    Returns:
      A function that takes no arguments and returns None.
    """

    async def start_app() -> None:
        configure_logging(LOG_LEVEL)
        app.state.executor = ThreadPoolExecutor(max_workers=THREADS, thread_name_prefix="hgm")
        log.info("Worker pool started with %d thread(s)", THREADS)

    return start_app


def create_stop_app_handler(app: FastAPI) -> Callable:
    """Shut the worker pool down."""

    async def stop_app() -> None:
        executor = getattr(app.state, "executor", None)
        if executor is not None:
            executor.shutdown(wait=True)
            log.info("Worker pool stopped")

    return stop_app


@asynccontextmanager
async def lifespan(app: FastAPI) -> AsyncIterator[None]:
    """Run the start handler before serving and the stop handler after."""
    await create_start_app_handler(app)()
    try:
        yield
    finally:
        await create_stop_app_handler(app)()
