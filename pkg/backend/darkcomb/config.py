import os
from dataclasses import dataclass

from dotenv import load_dotenv, find_dotenv

# Load environment variables from nearest .env (project root when running from backend/)
dotenv_path = find_dotenv()
if dotenv_path:
    load_dotenv(dotenv_path=dotenv_path)
else:
    load_dotenv()


def _default_threads() -> int:
    return os.cpu_count() or 1


@dataclass
class Config:
    """
    Runtime configuration loaded from environment variables (.env).

    Physical parameters of a run live in RunConfig; this class only holds
    solver limits and process-level settings.
    """

    # === Execution ===
    THREADS: int = int(os.getenv("DARKCOMB_THREADS", str(_default_threads())))
    OUTPUT_DIR: str = os.getenv(
        "DARKCOMB_OUTPUT_DIR",
        os.path.join(os.getcwd(), "output")
    )
    # Steady-state solves stacked into one vectorized batch
    BATCH_SIZE: int = int(os.getenv("DARKCOMB_BATCH_SIZE", "1024"))
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # === Floquet solver ===
    FLOQUET_MAX_HARMONICS: int = int(os.getenv("FLOQUET_MAX_HARMONICS", "32"))
    FLOQUET_TOL: float = float(os.getenv("FLOQUET_TOL", "1e-10"))

    # === Doppler quadrature ===
    DOPPLER_MAX_ORDER: int = int(os.getenv("DOPPLER_MAX_ORDER", "512"))
    DOPPLER_TOL: float = float(os.getenv("DOPPLER_TOL", "1e-9"))
    # absolute floor on the order-to-order change, in units of the normalized coherence
    DOPPLER_ATOL: float = float(os.getenv("DOPPLER_ATOL", "1e-5"))

    # === Dressed states / linear response ===
    DRESSED_GUARD_BAND: float = float(os.getenv("DRESSED_GUARD_BAND", "1e-6"))
    LINEARITY_RTOL: float = float(os.getenv("LINEARITY_RTOL", "0.01"))
