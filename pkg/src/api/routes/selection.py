"""Router for model selection."""

# Standard library imports
import asyncio
from concurrent.futures import Executor
from functools import partial

# Third party imports
from fastapi import APIRouter, Depends, Form

from src.api.dependencies.data import get_data_matrix
from src.api.dependencies.executor import get_executor
from src.core.config import LAMBDA_GRID_SIZE, RESTARTS
from src.models.data import DataMatrix
from src.models.fit import ScanResponse
from src.models.solver import Estimator, SolverConfig
from src.services.selection import scan
from src.utils.grids import parse_int_list, parse_lambda_grid

router = APIRouter()


@router.post("/scan", response_model=ScanResponse)
async def scan_grid(
    k_grid: str = Form(...),
    lambda_grid: str = Form(str(LAMBDA_GRID_SIZE)),
    estimator: Estimator = Form(Estimator.SCIO),
    restarts: int = Form(RESTARTS, ge=1),
    seed: int = Form(0),
    x: DataMatrix = Depends(get_data_matrix),
    executor: Executor = Depends(get_executor),
) -> ScanResponse:
    """BIC over every (K, lambda) pair; ``lambda_grid`` is a point count or a list."""
    ks = parse_int_list(k_grid)
    grid = parse_lambda_grid(lambda_grid)
    cfg = SolverConfig(k=min(ks), lam=1.0, estimator=estimator, restarts=restarts, seed=seed)
    run = partial(
        scan,
        x,
        ks,
        None if isinstance(grid, int) else grid,
        cfg,
        grid_size=grid if isinstance(grid, int) else LAMBDA_GRID_SIZE,
    )
    selected, path, failures = await asyncio.get_running_loop().run_in_executor(executor, run)
    return ScanResponse(selected=selected, path=path, failures=failures)
