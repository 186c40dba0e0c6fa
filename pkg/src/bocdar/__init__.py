"""Online joint detection of collective anomalies and change points."""

__version__ = "0.1.0"

from .detector import DetectionEvent, Detector, DetectorConfig  # noqa: E402
from .engine_ar import BocdArEngine  # noqa: E402
from .engine_bocd import BocdEngine  # noqa: E402
from .errors import (  # noqa: E402
    ConfigError,
    DimensionError,
    HistoryMissError,
    HorizonError,
    UnsupportedOperation,
)
from .hyperbound import q0_upper_bound, spurious_alarm_rate  # noqa: E402
from .obsmodel import ObsModelConfig  # noqa: E402
from .params import Hyperparams  # noqa: E402
from .runconfig import RunConfig  # noqa: E402
from .simgen import generate_paper_series  # noqa: E402

__all__ = [
    "BocdArEngine", "BocdEngine", "ConfigError", "DetectionEvent", "Detector",
    "DetectorConfig", "DimensionError", "HistoryMissError", "HorizonError",
    "Hyperparams", "ObsModelConfig", "RunConfig", "UnsupportedOperation",
    "generate_paper_series", "q0_upper_bound", "spurious_alarm_rate",
]
