"""Discrete-event simulator for multi-beam directional CSMA/CA MAC schemes."""

from .config import ConfigError, ScenarioConfig, load_scenario, parse_scenario
from .network import Network, RunResult, simulate

__all__ = ["ConfigError", "ScenarioConfig", "load_scenario", "parse_scenario", "Network",
           "RunResult", "simulate"]
