"""
Runtime configuration for fksum

Values come from the environment (a local .env file is honoured) and fall
back to the defaults below. CLI flags take precedence over these.
"""

import os

from dotenv import load_dotenv

# Load environment variables
load_dotenv()


def _float_list(raw: str) -> tuple:
    return tuple(float(tok) for tok in raw.split(",") if tok.strip())


# Kernel
DEFAULT_BETA = _float_list(os.getenv("FKSUM_BETA", "0.25,0.25"))
DENSITY_FLOOR = float(os.getenv("FKSUM_DENSITY_FLOOR", "1e-20"))

# Logging
LOG_LEVEL = os.getenv("FKSUM_LOG_LEVEL", "INFO").upper()

# Benchmark settings
NAIVE_CAP = int(os.getenv("FKSUM_NAIVE_CAP", "20000"))
BENCH_WORKERS = int(os.getenv("FKSUM_BENCH_WORKERS", "4"))
PROGRESS_FILE = os.getenv("FKSUM_PROGRESS_FILE", "bench_progress.json")
TIMING_REPS = int(os.getenv("FKSUM_TIMING_REPS", "5"))
