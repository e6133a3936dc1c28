"""Setting up configs."""

# Standard library imports
import logging

# Third party imports
from starlette.config import Config

config = Config(".env")

log = logging.getLogger(__name__)


PROJECT_NAME = "hgm-network"
VERSION = "1.0"

LOG_LEVEL = config("LOG_LEVEL", cast=str, default="INFO")
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# core model
PHI_FLOOR = config("HGM_PHI_FLOOR", cast=float, default=1e-8)

# alternating solver
E_TOL = config("HGM_E_TOL", cast=float, default=1e-4)
MAX_ITER = config("HGM_MAX_ITER", cast=int, default=100)
RESTARTS = config("HGM_RESTARTS", cast=int, default=10)
OSCILLATION_PATIENCE = 3

# precision estimators
PRECISION_TOL = config("HGM_PRECISION_TOL", cast=float, default=1e-4)
PRECISION_MAX_ITER = config("HGM_PRECISION_MAX_ITER", cast=int, default=1000)
REFIT_EPSILON = 1e-6

# model selection
LAMBDA_GRID_SIZE = 50
LAMBDA_GRID_RATIO = 0.01

# execution
THREADS = config("HGM_THREADS", cast=int, default=1)
RNG_ALGORITHM = "numpy.random.PCG64"

# storage
MATRIX_MAGIC = b"HGMMAT01"


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Install the root handler once, for CLI and server processes alike."""
    logging.basicConfig(level=level.upper(), format=LOG_FORMAT)
    log.debug("Logging configured at %s", level.upper())
