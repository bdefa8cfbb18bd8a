"""Uniform sequential circuits for infinite-chain time evolution.

States are passed around as JSON strings in the same format the ``usc`` CLI writes into its
checkpoints, so ``json.load(open(".../step_000040.json"))["theta"]`` can be dumped and fed back in.
"""

from ._usc import (
    ConfigError,
    ContractViolation,
    DegenerateInput,
    Error,
    ExportError,
    StepFailure,
    entropy,
    expectation,
    fidelity_density,
    fit_environment,
    observable_qasm,
    qasm_zero_probability,
    random_state,
    simulate,
    squared_expectation_circuits,
)

__all__ = [
    "ConfigError",
    "ContractViolation",
    "DegenerateInput",
    "Error",
    "ExportError",
    "StepFailure",
    "entropy",
    "expectation",
    "fidelity_density",
    "fit_environment",
    "observable_qasm",
    "qasm_zero_probability",
    "random_state",
    "simulate",
    "squared_expectation_circuits",
]
