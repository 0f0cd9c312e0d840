"""Pin the public surface of the exception hierarchy.

These tests catch silent regressions in attribute names, default values,
and ``str()`` output. Each exception class exposes a small contract (the
attributes its handler in ``error_handlers.py`` or the CLI reads) and
nothing more.
"""
from __future__ import annotations

import pytest

from exceptions import (
    AppError,
    CheckFailedError,
    CircuitError,
    CircuitParseError,
    CircuitValidationError,
    ConfigurationError,
    ImpossibleOutcomeError,
    InvalidArgumentError,
    LocalityError,
    LocalityViolationError,
    NotApplicableError,
    SimulationError,
    ValidationError,
    exit_code_for,
    get_error_category,
    get_exception_hierarchy,
    is_user_error,
)


class TestAppError:
    def test_str_returns_message(self):
        assert str(AppError("boom")) == "boom"

    def test_default_details_is_empty_dict(self):
        assert AppError("boom").details == {}

    def test_explicit_details_are_preserved(self):
        assert AppError("boom", {"k": "v"}).details == {"k": "v"}


class TestConfigurationError:
    def test_default_config_key_is_none(self):
        assert ConfigurationError("nope").config_key is None

    def test_custom_config_key(self):
        assert ConfigurationError("nope", "ORACLE_HOST").config_key == "ORACLE_HOST"


class TestValidationErrors:
    def test_field_and_value(self):
        e = InvalidArgumentError("bad", field="shots", value=0)
        assert isinstance(e, ValidationError)
        assert e.field == "shots"
        assert e.value == 0
        assert e.details == {"field": "shots", "value": 0}


class TestSimulationErrors:
    def test_impossible_outcome_attributes(self):
        e = ImpossibleOutcomeError("never", qubit=2, bit=1, probability=0.0)
        assert isinstance(e, SimulationError)
        assert (e.qubit, e.bit, e.probability) == (2, 1, 0.0)


class TestCircuitErrors:
    def test_parse_error_prefixes_line_number(self):
        e = CircuitParseError("syntax error", 4, "foo")
        assert str(e) == "line 4: syntax error"
        assert e.line_number == 4
        assert e.line == "foo"

    def test_parse_error_without_line(self):
        assert str(CircuitParseError("empty circuit")) == "empty circuit"

    def test_validation_error_keeps_instruction(self):
        e = CircuitValidationError("out of range", "x 9")
        assert isinstance(e, CircuitError)
        assert e.instruction == "x 9"


class TestLocalityErrors:
    def test_violation_attributes(self):
        e = LocalityViolationError("spans", 3, ["Alice", "Bob"])
        assert isinstance(e, LocalityError)
        assert e.instruction_index == 3
        assert e.sites == ("Alice", "Bob")

    def test_not_applicable_defaults(self):
        assert NotApplicableError("no sites").missing_sites == ()


class TestCheckFailedError:
    def test_attributes(self):
        e = CheckFailedError("off", check="counterfactual", value=0.5, tolerance=1e-12)
        assert (e.check, e.value, e.tolerance) == ("counterfactual", 0.5, 1e-12)


class TestHelpers:
    @pytest.mark.parametrize(
        "exc, user_error, category, exit_code",
        [
            (InvalidArgumentError("x"), True, "validation", 2),
            (CircuitParseError("x"), True, "circuit", 2),
            (NotApplicableError("x"), True, "locality", 2),
            (ConfigurationError("x"), False, "configuration", 2),
            (ImpossibleOutcomeError("x"), False, "simulation", 1),
            (CheckFailedError("x"), False, "check", 1),
            (AppError("x"), False, "system", 1),
        ],
    )
    def test_classification(self, exc, user_error, category, exit_code):
        assert is_user_error(exc) is user_error
        assert get_error_category(exc) == category
        assert exit_code_for(exc) == exit_code

    def test_hierarchy_lists_every_subclass(self):
        hierarchy = get_exception_hierarchy()
        assert set(hierarchy["AppError"]) == {
            "ConfigurationError", "ValidationError", "SimulationError",
            "CircuitError", "LocalityError", "CheckFailedError",
        }
        assert hierarchy["CircuitError"] == ["CircuitValidationError", "CircuitParseError"]
