"""Distributed model-reference adaptive control for leader-follower platoons."""

from .config import PRESETS, ConfigError, load_config, load_preset
from .export import emit_plots, export_csv
from .graph import GraphError, GraphTopology, evaluation_order, in_neighbors, validate
from .matching import coupling_matching, feedback_matching, solve_lyapunov, ultimate_bound
from .plants import AgentPlant, ReferenceModel, UncertaintySpec, vehicle_plant, vehicle_reference
from .simulation import (ControllerSettings, DiagnosticSettings, DivergenceError,
                         IntegrationSettings, ScenarioConfig, SimulationTrace, run, sync_metrics,
                         with_overrides)

__version__ = "0.1.0"

__all__ = [
    "PRESETS", "AgentPlant", "ConfigError", "ControllerSettings", "DiagnosticSettings",
    "DivergenceError", "GraphError", "GraphTopology", "IntegrationSettings", "ReferenceModel",
    "ScenarioConfig", "SimulationTrace", "UncertaintySpec", "coupling_matching", "emit_plots",
    "evaluation_order", "export_csv", "feedback_matching", "in_neighbors", "load_config",
    "load_preset", "run", "solve_lyapunov", "sync_metrics", "ultimate_bound", "validate",
    "vehicle_plant", "vehicle_reference", "with_overrides",
]
