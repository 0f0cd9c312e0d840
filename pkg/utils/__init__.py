"""
Utility package shared by the CLI, the JSON API and the services.

* :mod:`utils.logging_utils`: Flask and CLI logging setup, the
  ``log_request_metrics`` view decorator and ``log_duration`` timer.
* :mod:`utils.validators`: coercion and validation of run parameters.
* :mod:`utils.formatting`: human-readable table rendering of reports.
"""
from .formatting import render_report, render_table
from .logging_utils import (
    log_duration,
    log_request_metrics,
    setup_cli_logging,
    setup_logging,
)
from .validators import (
    pair_name,
    safe_int,
    validate_bit,
    validate_lambda_bits,
    validate_oracle_host,
    validate_pair,
    validate_scheme,
    validate_seed,
    validate_shots,
    validate_states,
)

__all__ = [
    # formatting
    "render_report",
    "render_table",
    # logging_utils
    "log_duration",
    "log_request_metrics",
    "setup_cli_logging",
    "setup_logging",
    # validators
    "pair_name",
    "safe_int",
    "validate_bit",
    "validate_lambda_bits",
    "validate_oracle_host",
    "validate_pair",
    "validate_scheme",
    "validate_seed",
    "validate_shots",
    "validate_states",
]
