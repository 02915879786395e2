import os
import logging
from dataclasses import dataclass
from typing import Optional
from dotenv import load_dotenv

from errors import ConfigurationError

LOG_FORMAT = '%(asctime)s - %(levelname)s - %(message)s'


@dataclass(frozen=True)
class Settings:
    log_level: str = "INFO"
    log_file: Optional[str] = None
    batch_size: int = 256
    full_expectation_cap: int = 16
    bridge_timeout: float = 30.0
    workers: int = 1


def _positive(name, raw, cast):
    try:
        value = cast(raw)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{name} must be a number, got {raw!r}")
    if value <= 0:
        raise ConfigurationError(f"{name} must be positive, got {raw!r}")
    return value


def load_settings(dotenv_path=None):
    """Read settings from the environment (and a .env file if present)"""
    load_dotenv(dotenv_path)
    defaults = Settings()
    level = os.getenv("ARCHIPELAGO_LOG_LEVEL", defaults.log_level).upper()
    if not isinstance(logging.getLevelName(level), int):
        raise ConfigurationError(f"Unknown log level: {level}")
    return Settings(
        log_level=level,
        log_file=os.getenv("ARCHIPELAGO_LOG_FILE") or None,
        batch_size=_positive("ARCHIPELAGO_BATCH_SIZE",
                             os.getenv("ARCHIPELAGO_BATCH_SIZE", defaults.batch_size), int),
        full_expectation_cap=_positive("ARCHIPELAGO_FULL_EXPECTATION_CAP",
                                       os.getenv("ARCHIPELAGO_FULL_EXPECTATION_CAP",
                                                 defaults.full_expectation_cap), int),
        bridge_timeout=_positive("ARCHIPELAGO_BRIDGE_TIMEOUT",
                                 os.getenv("ARCHIPELAGO_BRIDGE_TIMEOUT", defaults.bridge_timeout), float),
        workers=_positive("ARCHIPELAGO_WORKERS",
                          os.getenv("ARCHIPELAGO_WORKERS", defaults.workers), int),
    )


def configure_logging(settings):
    """Configure logging for the entire application"""
    handlers = [logging.StreamHandler()]  # stderr; outputs go to files or stdout
    if settings.log_file:
        handlers.append(logging.FileHandler(settings.log_file))
    logging.basicConfig(
        level=getattr(logging, settings.log_level),
        format=LOG_FORMAT,
        handlers=handlers,
        force=True,
    )
