"""
Configuration module for the pigeonhole simulator.

This module contains all configuration classes, constants, and settings
shared by the command-line frontend and the JSON API.
"""
import os

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

ORACLE_HOSTS = ('separate', 'alice')


class Config:
    """Base configuration class."""
    # Flask Core Settings
    SECRET_KEY = os.environ.get('SECRET_KEY', 'dev-key-not-used-for-sessions')  # nosec B105
    JSON_SORT_KEYS = True

    # Logging Configuration
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'INFO')
    LOG_FILE = 'logs/pigeonhole.log'
    LOG_MAX_BYTES = 10 * 1024 * 1024  # 10MB
    LOG_BACKUP_COUNT = 10

    # Sampling
    DEFAULT_SEED = 7
    DEFAULT_SHOTS = 100_000
    # Fixed chunk size keeps per-chunk RNG streams identical no matter how
    # chunks are scheduled.
    SAMPLE_CHUNK_SIZE = 4096
    # Upper bound on requested shots (CLI and API)
    MAX_SHOTS = 10_000_000
    # Thread-pool width for sampling chunks and scan chunks; 1 runs them inline
    WORKERS = int(os.environ.get('PIGEONHOLE_WORKERS', 1))

    # Channel-equivalence suite
    EQUIVALENCE_STATES = 100
    EQUIVALENCE_SEED = 2024
    MAX_EQUIVALENCE_STATES = 10_000

    # Hidden-variable scan
    SCAN_CHUNK_SIZE = 8192

    # Teleported-scheme layout: oracle at its own site, or hosted in Alice's lab
    ORACLE_HOST = os.environ.get('PIGEONHOLE_ORACLE_HOST', 'separate')

    MAX_QUBITS = 12

    # Output
    JSON_INDENT = 2

    # Rate Limiting (HTTP surface only)
    RATELIMIT_STORAGE_URL = 'memory://'
    DEFAULT_RATE_LIMIT = "500 per day"
    SCAN_RATE_LIMIT = "6 per minute"
    EQUIVALENCE_RATE_LIMIT = "12 per minute"

    # Compression Settings
    COMPRESS_MIMETYPES = ['application/json', 'text/plain']
    COMPRESS_LEVEL = 6
    COMPRESS_MIN_SIZE = 500

    @classmethod
    def validate(cls) -> None:
        """Checks shared by every environment; subclasses add stricter ones."""
        from exceptions import ConfigurationError

        if cls.ORACLE_HOST not in ORACLE_HOSTS:
            raise ConfigurationError(
                f"ORACLE_HOST must be one of {', '.join(ORACLE_HOSTS)}",
                config_key='ORACLE_HOST',
            )


class DevelopmentConfig(Config):
    """Development configuration."""
    DEBUG = True
    DEVELOPMENT = True
    LOG_LEVEL = os.environ.get('LOG_LEVEL', 'DEBUG')


class ProductionConfig(Config):
    """Production configuration."""
    DEBUG = False
    DEVELOPMENT = False
    RATELIMIT_STORAGE_URL = os.environ.get('REDIS_URL', 'memory://')

    @classmethod
    def validate(cls) -> None:
        """Production adds size checks on top of the common ones."""
        from exceptions import ConfigurationError

        super().validate()
        for key in ('SAMPLE_CHUNK_SIZE', 'SCAN_CHUNK_SIZE', 'EQUIVALENCE_STATES',
                    'MAX_SHOTS', 'MAX_EQUIVALENCE_STATES', 'WORKERS'):
            if getattr(cls, key) <= 0:
                raise ConfigurationError(f"{key} must be positive", config_key=key)


class TestingConfig(Config):
    """Testing configuration."""
    TESTING = True
    DEBUG = True
    LOG_LEVEL = 'DEBUG'
    ORACLE_HOST = 'separate'
    RATELIMIT_STORAGE_URL = 'memory://'


# Configuration mapping
config = {
    'development': DevelopmentConfig,
    'production': ProductionConfig,
    'testing': TestingConfig,
    'default': DevelopmentConfig
}


def get_config(config_name=None):
    """Resolve a config class from a name or the ``PIGEONHOLE_CONFIG`` env var."""
    name = config_name or os.environ.get('PIGEONHOLE_CONFIG', 'default')
    if name not in config:
        from exceptions import ConfigurationError

        raise ConfigurationError(
            f"Unknown configuration '{name}'", config_key='PIGEONHOLE_CONFIG'
        )
    return config[name]


class SimulationConstants:
    """Numeric tolerances used across the engine."""

    # Exact amplitude identities and state-vector invariants
    EXACT_TOLERANCE = 1e-12
    # Branches (and projections) below this mass are dropped
    PRUNE_THRESHOLD = 1e-12
    # Channel equivalence and branch-probability conservation
    EQUIVALENCE_TOLERANCE = 1e-10
    # Hidden-variable statistics comparison
    LHV_TOLERANCE = 1e-9
    # Exact-mode report values are rounded to this many decimals
    REPORT_DECIMALS = 12


class ExitCodes:
    """Process exit codes for the CLI."""

    OK = 0
    CHECK_FAILED = 1
    USAGE = 2


class ExperimentConstants:
    """Fixed vocabulary of the experiment."""

    SCHEMES = ('direct', 'oracle', 'distillation', 'teleported')
    PAIRS = {'ab': (0, 1), 'bc': (1, 2), 'ac': (0, 2)}
    DATA_SITES = ('Alice', 'Bob', 'Charlie')
    ORACLE_SITE = 'OracleSite'
    EVALUATOR = 'Evaluator'
    DEFAULT_SCHEME = 'distillation'
    DEFAULT_PAIR = 'ab'
