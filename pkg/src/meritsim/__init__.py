"""Agent-based long-term electricity market simulator."""
from .domain import (
    Bid,
    ClearingResult,
    Fuel,
    GenCo,
    LoadDurationCurve,
    PlantInstance,
    PlantSpec,
    PlantStatus,
    PlantType,
    ScenarioConfig,
    validate_ldc,
)
from .errors import MeritSimError

__all__ = [
    "Bid", "ClearingResult", "Fuel", "GenCo", "LoadDurationCurve", "MeritSimError", "PlantInstance",
    "PlantSpec", "PlantStatus", "PlantType", "ScenarioConfig", "validate_ldc",
]
__version__ = "0.1.0"
