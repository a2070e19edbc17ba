"""
Process-wide settings.

Values come from the environment (optionally a .env file in the working
directory). CLI flags and experiment configs override them per run.

  FLATLAB_OUT_DIR     default output directory            (out)
  FLATLAB_THREADS     worker threads for ladder/battery   (1)
  FLATLAB_LOG_LEVEL   logging level name                  (INFO)
  FLATLAB_CONFIG_DIR  named experiment configs for the API (eval/configs)
"""
import logging
import os

from dotenv import load_dotenv
from pydantic import BaseModel, field_validator

load_dotenv()


class Settings(BaseModel):
    out_dir: str = "out"
    threads: int = 1
    log_level: str = "INFO"
    config_dir: str = "eval/configs"

    @field_validator("threads")
    @classmethod
    def positive_threads(cls, v):
        assert v >= 1, f"threads must be >= 1, got {v}"
        return v

    @field_validator("log_level")
    @classmethod
    def known_level(cls, v):
        v = v.upper()
        assert v in ("DEBUG", "INFO", "WARNING", "ERROR"), f"Bad log level: {v}"
        return v


def get_settings() -> Settings:
    return Settings(
        out_dir=os.getenv("FLATLAB_OUT_DIR", "out"),
        threads=int(os.getenv("FLATLAB_THREADS", "1")),
        log_level=os.getenv("FLATLAB_LOG_LEVEL", "INFO"),
        config_dir=os.getenv("FLATLAB_CONFIG_DIR", "eval/configs"),
    )


def configure_logging(level: str | None = None) -> None:
    """Called by entry points only (CLI, API start-up); library code just logs."""
    logging.basicConfig(
        level=(level or get_settings().log_level).upper(),
        format="%(asctime)s %(levelname)s %(name)s %(message)s",
    )
