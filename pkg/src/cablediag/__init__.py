"""Simulation and diagnostics workbench for water-tree-degraded power
cables monitored through power-line modems.

Physics chain: dielectric aging model -> transmission-line network solver
-> reflectometry post-processing.  Learning chain: labeled scenario
datasets -> from-scratch SVM/boosting models -> multi-stage diagnosis.
"""

from .dielectric import (
    GAMMA_HOMO_MAX,
    YEAR_SECONDS,
    AgingProfile,
    CableSpec,
    MaterialParams,
    equivalent_age,
    homogeneous_depth,
    max_field,
    propagation_velocity,
    total_permittivity,
    water_permittivity,
    wt_permittivity,
)
from .netmodel import (
    ChannelObservation,
    FrequencyGrid,
    LocalizedDegradation,
    NetworkScenario,
    SingularityError,
    impulse_response,
    solve_network,
)
from .pipeline import (
    AmbiguousVotesError,
    DiagnosisReport,
    ModelBundle,
    diagnose,
    load_bundle,
    ntr_sweep,
    observe_network,
    robustness_eval,
    save_bundle,
    train_pipeline,
)
from .reflectometry import (
    ChirpParams,
    JtfdrTrace,
    detect_peaks,
    localize,
    run_jtfdr,
    tdr_trace,
)
from .scenario import (
    TASK_IDS,
    Dataset,
    ScenarioConfig,
    generate_dataset,
    load_dataset,
    load_scenarios,
    reference_ld_scenario,
    save_dataset,
    save_scenarios,
)

__version__ = "1.0.0"

__all__ = [
    "AgingProfile",
    "AmbiguousVotesError",
    "CableSpec",
    "ChannelObservation",
    "ChirpParams",
    "Dataset",
    "DiagnosisReport",
    "FrequencyGrid",
    "GAMMA_HOMO_MAX",
    "JtfdrTrace",
    "LocalizedDegradation",
    "MaterialParams",
    "ModelBundle",
    "NetworkScenario",
    "ScenarioConfig",
    "SingularityError",
    "TASK_IDS",
    "YEAR_SECONDS",
    "detect_peaks",
    "diagnose",
    "equivalent_age",
    "generate_dataset",
    "homogeneous_depth",
    "impulse_response",
    "load_bundle",
    "load_dataset",
    "load_scenarios",
    "localize",
    "max_field",
    "ntr_sweep",
    "observe_network",
    "propagation_velocity",
    "reference_ld_scenario",
    "robustness_eval",
    "run_jtfdr",
    "save_bundle",
    "save_dataset",
    "save_scenarios",
    "solve_network",
    "tdr_trace",
    "total_permittivity",
    "train_pipeline",
    "water_permittivity",
    "wt_permittivity",
]
