"""
Exception hierarchy for the pigeonhole simulator.

This module provides domain-specific exceptions so that callers (the CLI,
the JSON API, tests) can tell bad input apart from impossible physics and
from a failed verification.
"""
from typing import Optional, Dict, Any, Sequence


# ============================================================================
# Base Application Exceptions
# ============================================================================

class AppError(Exception):
    """Base exception for all application errors."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details = details or {}


class ConfigurationError(AppError):
    """Raised when there's a configuration issue."""

    def __init__(self, message: str, config_key: Optional[str] = None):
        super().__init__(message)
        self.config_key = config_key


# ============================================================================
# Validation and Input Exceptions
# ============================================================================

class ValidationError(AppError):
    """Base exception for validation errors."""

    def __init__(self, message: str, field: Optional[str] = None,
                 value: Optional[Any] = None):
        super().__init__(message, {'field': field, 'value': value})
        self.field = field
        self.value = value


class InvalidArgumentError(ValidationError):
    """Raised when an engine operation receives an out-of-contract argument."""


# ============================================================================
# Simulation Exceptions
# ============================================================================

class SimulationError(AppError):
    """Base exception for state-vector engine failures."""


class ImpossibleOutcomeError(SimulationError):
    """Raised when a measurement is forced onto a zero-probability outcome."""

    def __init__(self, message: str, qubit: Optional[int] = None,
                 bit: Optional[int] = None, probability: Optional[float] = None):
        super().__init__(message, {'qubit': qubit, 'bit': bit,
                                   'probability': probability})
        self.qubit = qubit
        self.bit = bit
        self.probability = probability


# ============================================================================
# Circuit Exceptions
# ============================================================================

class CircuitError(AppError):
    """Base exception for circuit construction and parsing."""


class CircuitValidationError(CircuitError):
    """Raised when an instruction does not fit its circuit."""

    def __init__(self, message: str, instruction: Optional[str] = None):
        super().__init__(message, {'instruction': instruction})
        self.instruction = instruction


class CircuitParseError(CircuitError):
    """Raised when circuit text cannot be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None,
                 line: Optional[str] = None):
        location = f"line {line_number}: " if line_number is not None else ""
        super().__init__(f"{location}{message}",
                         {'line_number': line_number, 'line': line})
        self.line_number = line_number
        self.line = line


# ============================================================================
# Locality Exceptions
# ============================================================================

class LocalityError(AppError):
    """Base exception for site-annotation problems."""


class LocalityViolationError(LocalityError):
    """Raised when a post-setup quantum operation spans two sites."""

    def __init__(self, message: str, instruction_index: Optional[int] = None,
                 sites: Optional[Sequence[str]] = None):
        super().__init__(message, {'instruction_index': instruction_index,
                                   'sites': list(sites or [])})
        self.instruction_index = instruction_index
        self.sites = tuple(sites or ())


class NotApplicableError(LocalityError):
    """Raised when a trace check needs sites the trace does not contain."""

    def __init__(self, message: str, missing_sites: Optional[Sequence[str]] = None):
        super().__init__(message, {'missing_sites': list(missing_sites or [])})
        self.missing_sites = tuple(missing_sites or ())


# ============================================================================
# Verification Exceptions
# ============================================================================

class CheckFailedError(AppError):
    """Raised when a reproduced identity or statistic misses its tolerance."""

    def __init__(self, message: str, check: Optional[str] = None,
                 value: Optional[float] = None, tolerance: Optional[float] = None):
        super().__init__(message, {'check': check, 'value': value,
                                   'tolerance': tolerance})
        self.check = check
        self.value = value
        self.tolerance = tolerance


# ============================================================================
# Utility Functions
# ============================================================================

def get_exception_hierarchy() -> Dict[str, list]:
    """
    Return the exception hierarchy for documentation purposes.

    Returns:
        Dictionary mapping base exceptions to their subclasses
    """
    return {
        'AppError': [
            'ConfigurationError', 'ValidationError', 'SimulationError',
            'CircuitError', 'LocalityError', 'CheckFailedError'
        ],
        'ValidationError': ['InvalidArgumentError'],
        'SimulationError': ['ImpossibleOutcomeError'],
        'CircuitError': ['CircuitValidationError', 'CircuitParseError'],
        'LocalityError': ['LocalityViolationError', 'NotApplicableError'],
    }


def is_user_error(exception: Exception) -> bool:
    """
    Determine if an exception represents a user error (4xx) or system error (5xx).

    Args:
        exception: The exception to check

    Returns:
        True if it's a user error, False if it's a system error
    """
    user_error_types = (ValidationError, CircuitError, LocalityError)
    return isinstance(exception, user_error_types)


def get_error_category(exception: Exception) -> str:
    """
    Get the category of an exception for logging and monitoring.

    Args:
        exception: The exception to categorize

    Returns:
        String category name
    """
    if isinstance(exception, ValidationError):
        return 'validation'
    if isinstance(exception, CircuitError):
        return 'circuit'
    if isinstance(exception, LocalityError):
        return 'locality'
    if isinstance(exception, SimulationError):
        return 'simulation'
    if isinstance(exception, CheckFailedError):
        return 'check'
    if isinstance(exception, ConfigurationError):
        return 'configuration'
    return 'system'


def exit_code_for(exception: Exception) -> int:
    """Map an exception to the CLI exit-code contract (2 usage, 1 failure)."""
    from config import ExitCodes

    if is_user_error(exception) or isinstance(exception, ConfigurationError):
        return ExitCodes.USAGE
    return ExitCodes.CHECK_FAILED
