"""Router for fitting."""

# Standard library imports
import asyncio
from concurrent.futures import Executor
from functools import partial

# Third party imports
from fastapi import APIRouter, Depends, Form, status

from src.api.dependencies.data import get_data_matrix
from src.api.dependencies.executor import get_executor
from src.core.config import MAX_ITER, RESTARTS
from src.models.data import DataMatrix
from src.models.fit import FitResponse, FitSummary
from src.models.solver import Estimator, SolverConfig
from src.services.solver import HgmSolver

router = APIRouter()


@router.post("/", response_model=FitResponse, status_code=status.HTTP_200_OK)
async def fit_matrix(
    k: int = Form(..., ge=1),
    lam: float = Form(..., gt=0),
    estimator: Estimator = Form(Estimator.SCIO),
    restarts: int = Form(RESTARTS, ge=1),
    seed: int = Form(0),
    max_iter: int = Form(MAX_ITER, ge=0),
    x: DataMatrix = Depends(get_data_matrix),
    executor: Executor = Depends(get_executor),
) -> FitResponse:
    """Fit groups, latent signals and the latent network of an uploaded matrix."""
    cfg = SolverConfig(
        k=k, lam=lam, estimator=estimator, restarts=restarts, seed=seed, max_iter=max_iter
    )
    loop = asyncio.get_running_loop()
    state, traces = await loop.run_in_executor(executor, partial(HgmSolver(cfg).fit, x))
    summary = FitSummary(
        k=k,
        lam=lam,
        estimator=estimator,
        n=x.n,
        p=x.p,
        objective=state.objective,
        neg_log_lik=state.neg_log_lik,
        iterations=state.iterations,
        converged=state.converged,
        restarts=len(traces),
        seed=seed,
    )
    return FitResponse.from_state(state, summary)
