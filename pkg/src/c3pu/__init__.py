"""Behavioral simulator of a capacitive-coupling analog in-memory MAC array.

Voltage-to-time conversion, cell multiplication, bitline integration,
device mismatch, fixed-point baselines and a small classifier compiled
onto two arrays.
"""

from .errors import (
    C3puError,
    CalibrationError,
    ConfigurationError,
    MonteCarloError,
    NonlinearityWarning,
    TimingViolation,
    TrainingError,
    ValidationError,
)
from .vtc import VtcParams, conversion_gain, delay, pulse_width
from .cell import CellConfig, TransistorModel, capacitance_for_weight, x_eq
from .crossbar import CrossbarConfig, PulseTrain, calibrate_crossbar, default_crossbar, simulate_mac
from .variability import NOISELESS, PAPER_NOISE, MismatchSpec, monte_carlo
from .oracle import FxpFormat, error_report, fxp_mac, ideal_mac

__version__ = "0.1.0"
