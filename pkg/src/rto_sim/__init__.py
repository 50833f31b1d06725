"""Discrete-event simulator for the request-to-order procurement flow of vessel requisitions."""

from .domain import Scenario, validate_scenario
from .engine import run_batch, run_once

__all__ = ["Scenario", "validate_scenario", "run_once", "run_batch"]
__version__ = "0.1.0"
