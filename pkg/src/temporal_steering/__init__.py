"""Temporal steering inequality toolkit.

Open-system qubit dynamics, conditional measurement tables, the steering
parameter S_N and its entropic variant, and the BB84 intercept-resend
analysis with its two security thresholds.
"""

from ._backend import BACKEND
from .bb84 import (
    EveParams,
    KrausChannel,
    bb84_error_rate,
    bb84_steering,
    binary_entropy,
    eve_channel,
    sweep,
    threshold_entropic,
    threshold_independent,
)
from .dynamics import LindbladModel, TimeGrid, ancilla_model, evolve, rabi_model
from .steering import (
    ConditionalTable,
    HiddenStateModel,
    MeasurementSetting,
    SteeringResult,
    entropic_steering,
    hidden_table,
    ordering_scenario,
    quantum_table,
    steering_curve,
    steering_parameter,
    werner_table,
)

__version__ = "0.1.0"
