import logging
import os
import tempfile

import numpy as np
from scipy.linalg import lu_factor, lu_solve
from scipy.special import roots_hermite

from .config import Config

logger = logging.getLogger(__name__)


def _is_ci_environment() -> bool:
    ci_indicators = [
        "CI",
        "GITHUB_ACTIONS",
        "TRAVIS",
        "JENKINS_URL",
        "GITLAB_CI",
        "CIRCLECI",
        "APPVEYOR",
        "TEAMCITY_VERSION",
    ]
    return any(os.getenv(indicator) for indicator in ci_indicators)


def _check_linear_algebra() -> bool:
    """Complex dense solves from numpy and scipy agree on a well-conditioned system."""
    try:
        rng = np.random.default_rng(7)
        A = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16)) + 8.0 * np.eye(16)
        b = rng.normal(size=16) + 1j * rng.normal(size=16)
        x_numpy = np.linalg.solve(A, b)
        x_scipy = lu_solve(lu_factor(A), b)
        residual = float(np.max(np.abs(A @ x_numpy - b)))
        if residual > 1e-10 or not np.allclose(x_numpy, x_scipy, rtol=1e-10, atol=1e-12):
            logger.error("Linear algebra backend disagrees (residual %.3e)", residual)
            return False
        logger.info("Linear algebra backend ready (residual %.1e)", residual)
        return True
    except Exception as exc:
        logger.exception("Linear algebra check failed: %s", exc)
        return False


def _check_quadrature() -> bool:
    """Gauss-Hermite weights integrate the Gaussian weight exactly."""
    try:
        _, weights = roots_hermite(Config.DOPPLER_MAX_ORDER)
        total = float(np.sum(weights) / np.sqrt(np.pi))
        if abs(total - 1.0) > 1e-10:
            logger.error("Gauss-Hermite order %d weights sum to %.12f", Config.DOPPLER_MAX_ORDER, total)
            return False
        return True
    except Exception as exc:
        logger.exception("Quadrature check failed: %s", exc)
        return False


def check_output_dir(path: str) -> bool:
    """Output directory exists (or can be created) and accepts files."""
    try:
        os.makedirs(path, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=path):
            pass
        logger.info("Output directory ready: %s", path)
        return True
    except OSError as exc:
        logger.error("Output directory %s is not writable: %s", path, exc)
        return False


def run_startup_checks() -> None:
    """
    Run mandatory checks before any computation starts.
    Raises RuntimeError if the numerical stack is unusable. The output
    directory is checked per run, once --out and the run file are resolved.
    """
    if os.getenv("SKIP_STARTUP_CHECKS") in ("1", "true", "True"):
        logger.info("Startup checks skipped by configuration.")
        return

    if _is_ci_environment():
        logger.info("CI environment detected. Skipping startup checks.")
        return

    if os.getenv("TESTING") == "true":
        logger.info("Testing environment detected. Skipping startup checks.")
        return

    logger.info("Running startup checks...")
    checks = {
        "linear_algebra": _check_linear_algebra(),
        "quadrature": _check_quadrature(),
    }

    failed = [name for name, ok in checks.items() if not ok]
    if failed:
        raise RuntimeError(f"Startup checks failed: {', '.join(failed)}")

    logger.info("All startup checks passed successfully.")
