from .config import ConfigError, ScenarioConfig, from_dict, load, validate, with_axis
from .metrics import RunSummary, compute_summary
from .runner import TickRecord, run_scenario, vio_oracle
from .sweep import sweep

__all__ = [
    "ConfigError", "ScenarioConfig", "from_dict", "load", "validate", "with_axis",
    "RunSummary", "compute_summary", "TickRecord", "run_scenario", "vio_oracle", "sweep",
]
