import os

from dotenv import load_dotenv

load_dotenv()

LOG_LEVEL = os.getenv("FEQO_LOG_LEVEL", "INFO").upper()
OUTPUT_DIR = os.getenv("FEQO_OUTPUT_DIR", "runs")

# sweeps
SWEEP_WORKERS = int(os.getenv("FEQO_SWEEP_WORKERS", "1"))
SWEEP_CAP = int(os.getenv("FEQO_SWEEP_CAP", "256"))

# analysis / solver defaults
WIGNER_POINTS = int(os.getenv("FEQO_WIGNER_POINTS", "512"))
WIGNER_MAX_POINTS = int(os.getenv("FEQO_WIGNER_MAX_POINTS", "4096"))
NORM_TOLERANCE = float(os.getenv("FEQO_NORM_TOLERANCE", "1e-6"))

PROJECT_NAME = os.getenv("PROJECT_NAME", "feqo")
VERSION = "1.0.0"
