"""Robust geometric model fitting with graph-cut local optimization."""

from .bench import ExperimentConfig, TrialRecord, angular_error, model_error, run_experiment, run_trial
from .core import (
    Labeling,
    ModelKind,
    ModelParams,
    ScoredModel,
    Settings,
    kernel,
    pairwise_cost,
    residual,
    residuals,
    sampson_distance,
    support,
    total_energy,
    unary_cost,
)
from .datasets import CorrespondenceDataset, load_dataset, save_dataset
from .engine import (
    EngineState,
    RunReport,
    build_problem_graph,
    draw_minimal_sample,
    local_optimize,
    lo_trigger,
    required_iterations,
    run,
)
from .errors import (
    ContractViolationError,
    DatasetFormatError,
    DatasetParseError,
    DegenerateSampleError,
    GCRansacError,
    InsufficientDataError,
    InvalidInputError,
    NoModelFoundError,
    OracleScaleExceededError,
    SingularModelError,
)
from .estimators import MinimalSample, SolverResult, fit_lsq, fit_minimal, oriented_epipolar_check
from .maxflow import CutResult, EnergyGraph, brute_force_min_energy, min_cut
from .neighborhood import NeighborhoodGraph, brute_force_neighborhood, build_neighborhood
from .scenes import SyntheticLineScene, SyntheticTwoViewScene, gen_line_scene, gen_two_view_scene

__version__ = "0.1.0"
