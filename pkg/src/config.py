import os
from dotenv import load_dotenv

from .errors import ConfigError

load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"{name} must be an integer, got '{raw}'") from None


def _float_env(name: str, default: float) -> float:
    raw = os.getenv(name)
    if raw is None or raw == "":
        return default
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"{name} must be a number, got '{raw}'") from None


class Config:
    # Default external solver executables; unset means the embedded engines
    SAT_SOLVER = os.getenv("BOOLMIN_SAT_SOLVER")
    QBF_SOLVER = os.getenv("BOOLMIN_QBF_SOLVER")

    # 2^24 assignments keeps a truth table under 16 Mi bits
    TRUTH_TABLE_CAP = _int_env("BOOLMIN_TRUTH_TABLE_CAP", 24)
    EXPANSION_CAP = _int_env("BOOLMIN_EXPANSION_CAP", 16)
    SCHEME_DEPTH_CAP = _int_env("BOOLMIN_SCHEME_DEPTH_CAP", 7)

    DEFAULT_TIMEOUT = _float_env("BOOLMIN_TIMEOUT", 60.0)
    LOG_LEVEL = os.getenv("BOOLMIN_LOG_LEVEL", "WARNING")

    @staticmethod
    def validate():
        for env_name, path in (("BOOLMIN_SAT_SOLVER", Config.SAT_SOLVER),
                               ("BOOLMIN_QBF_SOLVER", Config.QBF_SOLVER)):
            if path and not os.access(path, os.X_OK):
                raise ConfigError(f"{env_name} points to '{path}', which is not an executable file")
        for name in ("TRUTH_TABLE_CAP", "EXPANSION_CAP", "SCHEME_DEPTH_CAP"):
            if getattr(Config, name) < 1:
                raise ConfigError(f"BOOLMIN_{name} must be positive")
        if Config.DEFAULT_TIMEOUT <= 0:
            raise ConfigError("BOOLMIN_TIMEOUT must be positive")

    @staticmethod
    def default_sat_backend() -> str:
        return f"external:{Config.SAT_SOLVER}" if Config.SAT_SOLVER else "internal"

    @staticmethod
    def default_qbf_backend() -> str:
        return f"external:{Config.QBF_SOLVER}" if Config.QBF_SOLVER else "internal"
