"""Search for hazard boundaries of ML-enabled systems by cooperative
co-evolution of scenarios and ML-component output sequences."""
from .analysis import dbs, mann_whitney_u, progress_curve, vargha_delaney
from .archive import SolutionArchive
from .baselines import GeneticSearch, RandomSearch
from .ccea import MLCSHE, assess_fitness, post_process, update_population_archive
from .config import ConfigError, ExperimentConfig, load_config
from .distance import DistanceMatrix, HeterogeneousDistance, dist
from .fitness import BoundaryFitness, FitnessConfig, boundary_fitness, wilson_ci
from .genotypes import (
    CompleteSolution,
    MlcOutputSequence,
    ParamSpec,
    Scenario,
    SearchSpaceSpec,
    case_study_space,
)
from .oracles import (
    ExternalProcessOracle,
    MTQOracle,
    OnemaxOracle,
    OracleError,
    Region,
    SafetyOracle,
    SyntheticRegionOracle,
)
from .records import RunRecord

__version__ = "0.1.0"

__all__ = [
    "BoundaryFitness", "CompleteSolution", "ConfigError", "DistanceMatrix",
    "ExperimentConfig", "ExternalProcessOracle", "FitnessConfig", "GeneticSearch",
    "HeterogeneousDistance", "MLCSHE", "MTQOracle", "MlcOutputSequence", "OnemaxOracle",
    "OracleError", "ParamSpec", "RandomSearch", "Region", "RunRecord", "SafetyOracle",
    "Scenario", "SearchSpaceSpec", "SolutionArchive", "SyntheticRegionOracle",
    "assess_fitness", "boundary_fitness", "case_study_space", "dbs", "dist", "load_config",
    "mann_whitney_u", "post_process", "progress_curve", "update_population_archive",
    "vargha_delaney", "wilson_ci",
]
