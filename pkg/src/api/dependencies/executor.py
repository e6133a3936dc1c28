"""Dependency for the worker pool."""

# Standard library imports
from concurrent.futures import Executor

# Third party imports
from starlette.requests import Request


def get_executor(request: Request) -> Executor:
    """Get the worker pool from app state."""
    return request.app.state.executor
