"""Tests for ``config.py`` resolution and production validation."""
from __future__ import annotations

import pytest

from config import (
    DevelopmentConfig,
    ExitCodes,
    ProductionConfig,
    TestingConfig,
    get_config,
)
from exceptions import ConfigurationError


class TestGetConfig:
    @pytest.mark.parametrize(
        "name, expected",
        [
            ("development", DevelopmentConfig),
            ("production", ProductionConfig),
            ("testing", TestingConfig),
            ("default", DevelopmentConfig),
        ],
    )
    def test_named(self, name, expected):
        assert get_config(name) is expected

    def test_environment_fallback(self, monkeypatch):
        monkeypatch.setenv("PIGEONHOLE_CONFIG", "production")
        assert get_config() is ProductionConfig

    def test_unknown_name(self):
        with pytest.raises(ConfigurationError) as exc_info:
            get_config("staging")
        assert exc_info.value.config_key == "PIGEONHOLE_CONFIG"
        assert "Unknown configuration 'staging'" in str(exc_info.value)


class TestProductionValidate:
    def test_defaults_are_valid(self, monkeypatch):
        monkeypatch.setattr(ProductionConfig, "ORACLE_HOST", "separate")
        ProductionConfig.validate()

    def test_bad_oracle_host(self, monkeypatch):
        monkeypatch.setattr(ProductionConfig, "ORACLE_HOST", "bob")
        with pytest.raises(ConfigurationError) as exc_info:
            ProductionConfig.validate()
        assert exc_info.value.config_key == "ORACLE_HOST"

    @pytest.mark.parametrize(
        "key",
        ["SAMPLE_CHUNK_SIZE", "SCAN_CHUNK_SIZE", "EQUIVALENCE_STATES", "MAX_SHOTS",
         "MAX_EQUIVALENCE_STATES", "WORKERS"],
    )
    def test_non_positive_sizes(self, monkeypatch, key):
        monkeypatch.setattr(ProductionConfig, "ORACLE_HOST", "separate")
        monkeypatch.setattr(ProductionConfig, key, 0)
        with pytest.raises(ConfigurationError) as exc_info:
            ProductionConfig.validate()
        assert exc_info.value.config_key == key

    def test_testing_config_is_valid(self):
        TestingConfig.validate()


class TestCommonValidate:
    @pytest.mark.parametrize("config_class", [DevelopmentConfig, TestingConfig])
    def test_bad_oracle_host_is_rejected_everywhere(self, monkeypatch, config_class):
        monkeypatch.setattr(config_class, "ORACLE_HOST", "bogus")
        with pytest.raises(ConfigurationError) as exc_info:
            config_class.validate()
        assert exc_info.value.config_key == "ORACLE_HOST"
        assert "ORACLE_HOST must be one of" in str(exc_info.value)


def test_exit_codes():
    assert (ExitCodes.OK, ExitCodes.CHECK_FAILED, ExitCodes.USAGE) == (0, 1, 2)


def test_testing_defaults():
    assert TestingConfig.DEFAULT_SEED == 7
    assert TestingConfig.DEFAULT_SHOTS == 100_000
    assert TestingConfig.ORACLE_HOST == "separate"
