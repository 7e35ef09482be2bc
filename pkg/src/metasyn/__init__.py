"""Simulator for multistate metaplastic memristive synaptic networks."""

from .synapse import (
    Efficacy,
    GDSynapse,
    MetaState,
    TransitionPolicy,
    UpdateDirection,
    efficacy_of,
    gd_step,
    transition,
)
from .device import (
    CalibrationError,
    DeviceParams,
    DeviceState,
    MetastateTable,
    NoiseModel,
    PulseSpec,
    apply_pulse,
    calibrate_metastate_table,
    conductance,
    decode_metastate,
    program_transition,
    state_derivative,
    window,
)
from .network import (
    AccuracyTrace,
    BehavioralNetwork,
    Model,
    NetworkConfig,
    Pattern,
    generate_patterns,
    make_pattern_set,
    run_lifetime,
)
from .crossbar import (
    ComparatorConfig,
    ComparatorMode,
    Crossbar,
    ProgramEvent,
    init_crossbar,
    run_lifetime_hw,
)
from .experiments import (
    ExperimentSpec,
    SweepResult,
    Variant,
    run_comparison,
    run_experiment,
    sweep_cf,
    sweep_size,
    threshold_crossing,
)

__all__ = [
    "AccuracyTrace",
    "BehavioralNetwork",
    "CalibrationError",
    "ComparatorConfig",
    "ComparatorMode",
    "Crossbar",
    "DeviceParams",
    "DeviceState",
    "Efficacy",
    "ExperimentSpec",
    "GDSynapse",
    "MetaState",
    "MetastateTable",
    "Model",
    "NetworkConfig",
    "NoiseModel",
    "Pattern",
    "ProgramEvent",
    "PulseSpec",
    "SweepResult",
    "TransitionPolicy",
    "UpdateDirection",
    "Variant",
    "apply_pulse",
    "calibrate_metastate_table",
    "conductance",
    "decode_metastate",
    "efficacy_of",
    "gd_step",
    "generate_patterns",
    "init_crossbar",
    "make_pattern_set",
    "program_transition",
    "run_comparison",
    "run_experiment",
    "run_lifetime",
    "run_lifetime_hw",
    "sweep_cf",
    "sweep_size",
    "threshold_crossing",
    "transition",
    "window",
]
