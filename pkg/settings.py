import logging
import os
from pathlib import Path

from dotenv import load_dotenv

from src.errors import ConfigError
from src.sdp_core import SolverSettings

project_root = Path(__file__).resolve().parent
# print(project_root)

# Optional overrides from a local .env
load_dotenv(project_root / ".env")

data_path = project_root / "data"
golden_path = data_path / "golden"

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def _env_number(name, cast):
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return None
    try:
        value = cast(raw)
    except ValueError:
        raise ConfigError(f"{name}={raw!r} is not a valid {cast.__name__}")
    if value <= 0:
        raise ConfigError(f"{name} must be positive, got {raw!r}")
    return value


def default_solver_settings(tol_gap=None, max_iter=None):
    """SolverSettings after QCAP_SOLVER_TOL / QCAP_MAX_ITER and explicit overrides."""
    tol = _env_number("QCAP_SOLVER_TOL", float)
    iters = _env_number("QCAP_MAX_ITER", int)
    kwargs = {}
    if tol is not None:
        kwargs.update(tol_gap=tol, tol_feas=tol)
    if iters is not None:
        kwargs["max_iter"] = iters
    if tol_gap is not None:
        kwargs["tol_gap"] = tol_gap
    if max_iter is not None:
        kwargs["max_iter"] = max_iter
    try:
        return SolverSettings(**kwargs)
    except ValueError as e:
        raise ConfigError(str(e))


def log_level(verbose=False):
    if verbose:
        return logging.DEBUG
    name = os.getenv("QCAP_LOG_LEVEL", "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        raise ConfigError(f"QCAP_LOG_LEVEL={name!r} is not a logging level")
    return level


def configure_logging(verbose=False):
    root = logging.getLogger()
    level = log_level(verbose)
    if not root.handlers:
        logging.basicConfig(level=level, format=LOG_FORMAT)
    root.setLevel(level)


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return Path(path)
