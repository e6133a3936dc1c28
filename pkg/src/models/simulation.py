"""Models for the simulation benchmark."""

# Standard library imports
from typing import Annotated, List, Optional

# Third party imports
from pydantic import Field, model_validator

from src.models.core import CoreModel
from src.models.data import GroupAssignment, HiddenSignals, PrecisionMatrix
from src.models.solver import Estimator, SolverConfig


class SimulationSpec(CoreModel):
    """Block-diagonal latent network observed through noisy replicates."""

    n: Annotated[int, Field(ge=2)] = 180
    k: Annotated[int, Field(ge=1)] = 200
    block_size: Annotated[int, Field(ge=1)] = 5
    rho: Annotated[float, Field(gt=0, lt=1)] = 0.8
    replicates_per_node: Annotated[int, Field(ge=1)] = 50
    noise_sd: Annotated[float, Field(ge=0)] = 1.0
    seed: int = 0

    @model_validator(mode="after")
    def check_blocks(self) -> "SimulationSpec":
        """Blocks must tile the K nodes."""
        if self.k % self.block_size:
            raise ValueError(f"k = {self.k} is not divisible by block_size = {self.block_size}")
        return self

    @property
    def p(self) -> int:
        """Observed variable count."""
        return self.k * self.replicates_per_node


class GroundTruth(CoreModel):
    """True parameters behind a simulated dataset."""

    omega_true: PrecisionMatrix
    g_true: GroupAssignment
    z_true: HiddenSignals


class EdgeConfusion(CoreModel):
    """Confusion counts over the K(K-1)/2 upper-triangle node pairs."""

    tp: Annotated[int, Field(ge=0)]
    fp: Annotated[int, Field(ge=0)]
    tn: Annotated[int, Field(ge=0)]
    fn: Annotated[int, Field(ge=0)]

    @property
    def sensitivity(self) -> float:
        """tp / (tp + fn); 1 when there is no true edge to miss."""
        positives = self.tp + self.fn
        return self.tp / positives if positives else 1.0

    @property
    def specificity(self) -> float:
        """tn / (tn + fp); 1 when every pair is a true edge."""
        negatives = self.tn + self.fp
        return self.tn / negatives if negatives else 1.0


class RocPoint(CoreModel):
    """Edge recovery at one lambda."""

    lam: float
    sensitivity: float
    specificity: float
    bic: Optional[float] = None


class EstimatorRoc(CoreModel):
    """Pointwise-averaged ROC path of one estimator."""

    estimator: Estimator
    points: List[RocPoint]
    auc: float
    bic_selected: Optional[RocPoint] = None


class ExperimentReport(CoreModel):
    """Aggregated result of ``run_experiment``."""

    spec: SimulationSpec
    config: SolverConfig
    repeats: int
    failures: int = 0
    generator: str
    coherence_rates: List[float] = []
    coherence_mean: float = 0.0
    exact_fraction: float = 0.0
    roc: List[EstimatorRoc] = []
