"""Input validation and coercion for run parameters.

Every helper either returns a normalised value or raises
:class:`exceptions.InvalidArgumentError` naming the offending field, so the
CLI and the JSON API report bad flags the same way. They have no Flask
side effects and are safe to import from anywhere.
"""
from __future__ import annotations

from typing import Any, Optional, Tuple

from config import ExperimentConstants, ORACLE_HOSTS
from exceptions import InvalidArgumentError


# ---------------------------------------------------------------------------
# Numeric helpers
# ---------------------------------------------------------------------------

def safe_int(value: Any, default: Optional[int] = None) -> Optional[int]:
    """Coerce ``value`` to ``int`` or return ``default`` on failure.

    ``None`` and ``''`` map to ``default``; ``0`` and ``'0'`` are kept.
    """
    if value is None or value == "":
        return default
    try:
        return int(value)
    except (ValueError, TypeError):
        return default


def _bounded_count(value: Any, field: str, maximum: Optional[int]) -> int:
    count = safe_int(value)
    if count is None or count < 1:
        raise InvalidArgumentError(f"{field} must be a positive integer",
                                   field=field, value=value)
    if maximum is not None and count > maximum:
        raise InvalidArgumentError(f"{field} must be at most {maximum}",
                                   field=field, value=value)
    return count


def validate_shots(shots: Any, maximum: Optional[int] = None) -> int:
    """Return ``shots`` as an int ``>= 1`` (and ``<= maximum`` when given)."""
    return _bounded_count(shots, "shots", maximum)


def validate_states(states: Any, maximum: Optional[int] = None) -> int:
    """Return the equivalence-suite state count as an int ``>= 1``."""
    return _bounded_count(states, "states", maximum)


def validate_seed(seed: Any) -> int:
    """Return ``seed`` as a non-negative int (SeedSequence entropy)."""
    seed_int = safe_int(seed)
    if seed_int is None or seed_int < 0:
        raise InvalidArgumentError("seed must be a non-negative integer",
                                   field="seed", value=seed)
    return seed_int


# ---------------------------------------------------------------------------
# Experiment vocabulary
# ---------------------------------------------------------------------------

def validate_scheme(scheme: Optional[str]) -> str:
    """Normalise a parity-scheme tag (``direct`` / ``oracle`` / ...)."""
    normalised = (scheme or ExperimentConstants.DEFAULT_SCHEME).strip().lower()
    if normalised not in ExperimentConstants.SCHEMES:
        raise InvalidArgumentError(
            f"scheme must be one of {', '.join(ExperimentConstants.SCHEMES)}",
            field="scheme", value=scheme,
        )
    return normalised


def validate_pair(pair: Optional[str]) -> Tuple[int, int]:
    """Map ``ab`` / ``bc`` / ``ac`` to data-qubit indices."""
    normalised = (pair or ExperimentConstants.DEFAULT_PAIR).strip().lower()
    if normalised not in ExperimentConstants.PAIRS:
        raise InvalidArgumentError(
            f"pair must be one of {', '.join(ExperimentConstants.PAIRS)}",
            field="pair", value=pair,
        )
    return ExperimentConstants.PAIRS[normalised]


def pair_name(pair: Tuple[int, int]) -> str:
    """Inverse of :func:`validate_pair`."""
    for name, indices in ExperimentConstants.PAIRS.items():
        if tuple(pair) == indices:
            return name
    raise InvalidArgumentError("unknown qubit pair", field="pair", value=pair)


def validate_lambda_bits(lambda_bits: Any) -> int:
    """Return the shared-ancilla bit count, 0 or 1."""
    value = safe_int(lambda_bits)
    if value not in (0, 1):
        raise InvalidArgumentError("lambda_bits must be 0 or 1",
                                   field="lambda_bits", value=lambda_bits)
    return value


def validate_oracle_host(host: Optional[str]) -> str:
    """Normalise the teleported-scheme oracle hosting choice."""
    normalised = (host or ORACLE_HOSTS[0]).strip().lower()
    if normalised not in ORACLE_HOSTS:
        raise InvalidArgumentError(
            f"oracle host must be one of {', '.join(ORACLE_HOSTS)}",
            field="oracle_host", value=host,
        )
    return normalised


def validate_bit(value: Any, field: str = "bit") -> int:
    """Return ``value`` as a classical bit; only the numbers 0 and 1 qualify."""
    if value not in (0, 1):
        raise InvalidArgumentError(f"{field} must be 0 or 1", field=field, value=value)
    return int(value)
