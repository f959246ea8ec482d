"""Collision-resilient quadrotor simulation and control.

A deterministic rigid-body quadrotor simulator built around a
compliant-arm collision sensing chain: per-arm compression readings are
fused into an intensity and a body-frame direction, a peak-hold detector
confirms the hit, and a minimum-snap retreat segment flown by a geometric
attitude controller returns the vehicle to hover.
"""
from .batch import BatchReport, run_batch
from .config import (ConfigError, ParseError, ScenarioConfig,
                     ValidationError, bundled_names, load_scenario, loads,
                     resolve_scenario, serialize)
from .controller import (ControllerGains, DegenerateThrust, FlatReference,
                         GeometricController)
from .dynamics import (NonFiniteState, RigidState, RotorThrusts,
                       SingularMixer, VehicleParams, WrenchCommand, allocate,
                       inverse_allocate, mixer_matrix, step)
from .planner import (EndpointConstraints, IllConditioned, PolySegment,
                      evaluate, recovery_target, solve_min_snap,
                      time_allocation)
from .report import emit_plot_data, render_figures
from .sensing import (ArmModel, DetectionEvent, Detector, DetectorConfig,
                      characterize, compress, hall_reading)
from .sim import (FlightMode, IncompleteLog, RunMetrics, SimLog, metrics,
                  run)
from .world import (ContactPoint, ImpulseEvent, Pole, Unstructured, Wall,
                    apply_impulse, cage_points, contact_wrench,
                    unstructured_surface)

__version__ = "0.1.0"

__all__ = [
    "ArmModel", "BatchReport", "ConfigError", "ContactPoint",
    "ControllerGains", "DegenerateThrust", "DetectionEvent", "Detector",
    "DetectorConfig", "EndpointConstraints", "FlatReference", "FlightMode",
    "GeometricController", "IllConditioned", "ImpulseEvent", "IncompleteLog",
    "NonFiniteState", "ParseError", "Pole", "PolySegment", "RigidState",
    "RotorThrusts", "RunMetrics", "ScenarioConfig", "SimLog",
    "SingularMixer", "Unstructured", "ValidationError", "VehicleParams",
    "Wall", "WrenchCommand", "allocate", "apply_impulse", "bundled_names",
    "cage_points", "characterize", "compress", "contact_wrench",
    "emit_plot_data", "evaluate", "hall_reading", "inverse_allocate",
    "load_scenario", "loads", "metrics", "mixer_matrix", "recovery_target",
    "render_figures", "resolve_scenario", "run", "run_batch", "serialize",
    "solve_min_snap", "step", "time_allocation", "unstructured_surface",
]
