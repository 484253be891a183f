"""
Configuration file for the cDMD background modeling toolkit.
Supports .env files and environment variables.
"""
import os
from dotenv import load_dotenv

load_dotenv()


def get_config(key: str, default: str = "") -> str:
    """Get configuration value from environment variables (after .env loading)."""
    value = os.getenv(key)
    if value is None or value == "":
        return default
    return value


# Runtime Configuration
THREADS = int(get_config("CDMD_THREADS", str(os.cpu_count() or 1)))
OUTPUT_DIR = get_config("CDMD_OUTPUT_DIR", "./cdmd_out")
LOG_LEVEL = get_config("CDMD_LOG_LEVEL", "INFO")

# Sensing Configuration (evaluation settings: very sparse sensing, p=1000)
DEFAULT_SENSING = "sparse"
DEFAULT_P = 1000
DEFAULT_SEED = 0

# Decomposition Configuration
DEFAULT_METHOD = "compressed"
DEFAULT_RANK = "auto"
DEFAULT_AMPLITUDE_MODE = "full"
DEFAULT_OMEGA_TOL = 0.01
DEFAULT_FRAME_INTERVAL = 1.0

# Background / Mask Configuration
DEFAULT_K = 10
DEFAULT_TAU = 25.0
DEFAULT_POSTFILTER = "none"
DEFAULT_BATCH_SIZE = 200

# Report Configuration
SCHEMA_DIR = os.path.join(os.path.dirname(os.path.abspath(__file__)), "schemas")
