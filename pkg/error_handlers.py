"""Error handling module for the JSON API."""
import traceback
from typing import Any, Tuple

from flask import Flask, current_app, jsonify, request
from werkzeug.exceptions import HTTPException

from exceptions import (
    AppError, CheckFailedError, CircuitError, LocalityError, ValidationError,
    get_error_category, is_user_error
)


class ErrorHandler:
    """Centralized error handling with JSON responses."""

    @staticmethod
    def handle_app_error(e: AppError) -> Tuple[Any, int]:
        """Handle application errors: 400 for user errors, 500 otherwise."""
        is_user_fault = is_user_error(e)
        status_code = 400 if is_user_fault else 500

        log_level = 'warning' if is_user_fault else 'error'
        error_category = get_error_category(e)

        getattr(current_app.logger, log_level)(
            f"{error_category.title()} Error: {e.message} | "
            f"Type: {type(e).__name__} | "
            f"Details: {e.details}"
        )

        error_data = {
            'error': e.message,
            'category': error_category,
            'success': False,
            'details': e.details,
        }
        if isinstance(e, ValidationError):
            error_data['field'] = e.field
        return jsonify(error_data), status_code

    @staticmethod
    def handle_validation_error(e: ValidationError) -> Tuple[Any, int]:
        current_app.logger.warning(
            f"Validation Error: {e.message} | "
            f"Field: {e.field} | "
            f"Value: {e.value!r}"
        )
        return jsonify({
            'error': e.message,
            'field': e.field,
            'success': False,
            'category': 'validation'
        }), 400

    @staticmethod
    def handle_circuit_error(e: CircuitError) -> Tuple[Any, int]:
        """Circuit errors carry the offending line or instruction in ``details``."""
        current_app.logger.warning(
            f"Circuit Error: {e.message} | "
            f"Type: {type(e).__name__} | "
            f"Details: {e.details}"
        )
        return jsonify({
            'error': e.message,
            'details': e.details,
            'success': False,
            'category': 'circuit'
        }), 400

    @staticmethod
    def handle_check_failed(e: CheckFailedError) -> Tuple[Any, int]:
        current_app.logger.error(
            f"Check Failed: {e.message} | "
            f"Check: {e.check} | "
            f"Value: {e.value} | "
            f"Tolerance: {e.tolerance}"
        )
        return jsonify({
            'error': e.message,
            'check': e.check,
            'value': e.value,
            'tolerance': e.tolerance,
            'success': False,
            'category': 'check'
        }), 500


def register_error_handlers(app: Flask) -> None:
    """Register error handlers with the Flask app."""

    @app.errorhandler(404)
    def not_found_error(_error):
        current_app.logger.warning(f"404 Error: {request.url}")
        return jsonify({
            'error': 'Resource not found',
            'success': False
        }), 404

    @app.errorhandler(500)
    def internal_error(error):
        current_app.logger.error(f"500 Error: {str(error)}")
        if current_app.debug:
            current_app.logger.error(f"Traceback: {traceback.format_exc()}")
        return jsonify({
            'error': 'Internal server error',
            'success': False
        }), 500

    @app.errorhandler(429)
    def ratelimit_handler(_e):
        current_app.logger.warning(f"Rate limit exceeded: {request.remote_addr}")
        return jsonify({
            'error': 'Rate limit exceeded. Please try again later.',
            'success': False
        }), 429

    @app.errorhandler(AppError)
    def handle_app_error(error):
        return ErrorHandler.handle_app_error(error)

    @app.errorhandler(ValidationError)
    def handle_validation_error(error):
        return ErrorHandler.handle_validation_error(error)

    @app.errorhandler(CircuitError)
    def handle_circuit_error(error):
        return ErrorHandler.handle_circuit_error(error)

    @app.errorhandler(LocalityError)
    def handle_locality_error(error):
        return ErrorHandler.handle_app_error(error)

    @app.errorhandler(CheckFailedError)
    def handle_check_failed(error):
        return ErrorHandler.handle_check_failed(error)

    @app.errorhandler(HTTPException)
    def handle_http_exception(error):
        current_app.logger.warning(f"HTTP Exception {error.code}: {error.description}")
        return jsonify({
            'error': error.description,
            'success': False
        }), error.code
