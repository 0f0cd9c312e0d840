"""Logging configuration and timing helpers."""
from __future__ import annotations

import logging
import os
import sys
import time
from functools import wraps
from logging.handlers import RotatingFileHandler
from typing import Any, Callable

from flask import Flask, current_app, request

_FILE_FORMAT = "%(asctime)s %(levelname)s: %(message)s [in %(pathname)s:%(lineno)d]"
_CLI_FORMAT = "%(levelname)s %(name)s: %(message)s"


def _rotating_handler(log_file: str, max_bytes: int, backup_count: int) -> RotatingFileHandler:
    directory = os.path.dirname(log_file)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    handler = RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count)
    handler.setFormatter(logging.Formatter(_FILE_FORMAT))
    return handler


def setup_logging(app: Flask) -> None:
    """Configure application logging.

    Production / non-debug runs get a rotating file handler at
    ``app.config['LOG_FILE']`` with the size and backup-count limits
    from config. Tests and debug mode skip the file handler so they
    don't litter ``logs/`` (the default Flask stderr logger
    still works as expected).
    """
    if app.debug or app.testing:
        return

    file_handler = _rotating_handler(
        app.config["LOG_FILE"],
        app.config["LOG_MAX_BYTES"],
        app.config["LOG_BACKUP_COUNT"],
    )
    log_level = getattr(logging, app.config["LOG_LEVEL"].upper(), logging.INFO)
    file_handler.setLevel(log_level)
    app.logger.addHandler(file_handler)
    app.logger.setLevel(log_level)
    # Engine modules log through their own module loggers.
    logging.getLogger("services").addHandler(file_handler)
    logging.getLogger("services").setLevel(log_level)
    app.logger.info("Application startup")


def setup_cli_logging(config_class: Any, verbose: bool = False) -> None:
    """Configure logging for the command-line frontend.

    Log records go to stderr so stdout carries nothing but the report,
    which keeps ``--format json`` output byte-stable and pipeable.
    Non-debug configurations also write the rotating file log.
    """
    level_name = "DEBUG" if verbose else str(config_class.LOG_LEVEL)
    # Quiet by default on the terminal; the report is the output.
    stderr_level = getattr(logging, level_name.upper(), logging.INFO) if verbose else logging.WARNING

    root = logging.getLogger()
    for handler in list(root.handlers):
        if getattr(handler, "_pigeonhole_cli", False):
            root.removeHandler(handler)

    stream_handler = logging.StreamHandler(sys.stderr)
    stream_handler.setFormatter(logging.Formatter(_CLI_FORMAT))
    stream_handler.setLevel(stderr_level)
    stream_handler._pigeonhole_cli = True  # pylint: disable=protected-access
    root.addHandler(stream_handler)

    if not getattr(config_class, "DEBUG", False):
        file_handler = _rotating_handler(
            config_class.LOG_FILE, config_class.LOG_MAX_BYTES, config_class.LOG_BACKUP_COUNT
        )
        file_handler.setLevel(getattr(logging, str(config_class.LOG_LEVEL).upper(), logging.INFO))
        file_handler._pigeonhole_cli = True  # pylint: disable=protected-access
        root.addHandler(file_handler)

    root.setLevel(logging.DEBUG)


def log_duration(label: str) -> Callable:
    """Decorator that logs how long an engine call took.

    Wrap long-running operations (scans, sampled runs, equivalence
    suites) to get one DEBUG line on success and one ERROR line with
    the truncated error message on failure, via the wrapped function's
    module logger.
    """
    def decorator(f: Callable) -> Callable:
        logger = logging.getLogger(f.__module__)

        @wraps(f)
        def decorated_function(*args: Any, **kwargs: Any) -> Any:
            start_time = time.perf_counter()
            try:
                result = f(*args, **kwargs)
            except Exception as exc:
                duration = time.perf_counter() - start_time
                logger.error(f"{label} failed after {duration:.2f}s: {str(exc)[:200]}")
                raise
            duration = time.perf_counter() - start_time
            logger.debug(f"{label} finished in {duration:.2f}s")
            return result

        return decorated_function

    return decorator


def log_request_metrics(f: Callable) -> Callable:
    """Decorator that logs HTTP request duration + outcome.

    Wrap any Flask view function with ``@log_request_metrics`` after
    ``@app.route(...)`` to get a single log line per request capturing
    ``method``, ``path``, success/error, duration, and the truncated
    error message on the failure branch.
    """
    @wraps(f)
    def decorated_function(*args: Any, **kwargs: Any) -> Any:
        start_time = time.time()
        try:
            result = f(*args, **kwargs)
        except Exception as exc:
            duration = time.time() - start_time
            current_app.logger.error(
                f"Request {request.method} {request.path} - "
                f"Status: Error - Duration: {duration:.2f}s - "
                f"Error: {str(exc)}"
            )
            raise
        duration = time.time() - start_time
        current_app.logger.info(
            f"Request {request.method} {request.path} - "
            f"Status: Success - Duration: {duration:.2f}s"
        )
        return result

    return decorated_function
