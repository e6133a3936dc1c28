"""Server Setup."""

# Third party imports
from fastapi import FastAPI, Request, status
from fastapi.responses import JSONResponse

from src.api.routes.fit import router as fit_router
from src.api.routes.selection import router as selection_router
from src.core import config, tasks
from src.core.errors import HgmError


def get_application() -> FastAPI:
    """Server configs."""
    app = FastAPI(title=config.PROJECT_NAME, version=config.VERSION, lifespan=tasks.lifespan)

    @app.exception_handler(HgmError)
    async def hgm_error_handler(request: Request, exc: HgmError) -> JSONResponse:
        return JSONResponse(
            status_code=status.HTTP_422_UNPROCESSABLE_ENTITY, content={"detail": str(exc)}
        )

    @app.get("/", name="index")
    async def index() -> str:
        return "Visit /docs to view the documentation."

    app.include_router(fit_router, prefix="/fit")
    app.include_router(selection_router, prefix="/selection")

    return app


app = get_application()
