# config.py

import os
from typing import Optional

VERSION = "0.3.0"

# ---------------- Solver / law ----------------

SOLVER_TOL = 1e-12
SOLVER_MAX_ITER = 60
SPECTRUM_TAU = 1e-3
WEIGHT_TOL = 1e-12
POLE_GUARD = 1e-14
BRACKET_EPS = 1e-10

# eta levels (times gamma_+ - gamma_-) for the real-axis limit
ETA_SCHEDULE = (1e-2, 5e-3, 2.5e-3)
# r = 1 + delta levels for the identity contour formulas
RADIUS_DELTAS = (1e-2, 5e-3)
RADIUS_MAX_LEVELS = 8
EXTRAPOLATION_TOL = 1e-4

DENSITY_POINTS = 2000
DENSITY_COLLAR = 0.05

# ---------------- Quadrature ----------------

LOCAL_QUAD_NODES = 128
CONTOUR_NODES = 256
CONTOUR_MAX_NODES = 8192
IDENTITY_CHEBYSHEV_NODES = 1 << 13

# ---------------- Statistics defaults ----------------

DEFAULT_C = 3.0
DEFAULT_T = 3.0
DEFAULT_A = 1.0
DEFAULT_B = 4.0
LOCAL_LOG_OFFSET = 0.5
DEFAULT_ALPHA = 0.05

GLOBAL_KINDS = ("t1g", "t2g", "t3g", "t4g")
LOCAL_KINDS = ("t1l", "t2l", "t3l", "t4l")
ALL_KINDS = GLOBAL_KINDS + LOCAL_KINDS

# ---------------- Simulation defaults ----------------

DESK_N = 200
DESK_PHI = 50.0
DESK_REPS = 500
PAPER_N = 400
PAPER_PHI = 100.0
PAPER_REPS = 1000
MAX_ENTRIES = 200_000_000

# ---------------- Environment ----------------

THREADS_ENV = "COVTEST_THREADS"
DB_PATH_ENV = "COVTEST_DB_PATH"
LOG_LEVEL_ENV = "COVTEST_LOG_LEVEL"
DB_PATH = "data/runs.db"


def _env_int(name: str) -> Optional[int]:
    raw = (os.environ.get(name) or "").strip()
    if not raw:
        return None
    try:
        v = int(raw)
    except ValueError:
        return None
    return v if v > 0 else None


def default_threads() -> int:
    env = _env_int(THREADS_ENV)
    if env:
        return env
    try:
        return max(1, len(os.sched_getaffinity(0)))
    except (AttributeError, OSError):
        return max(1, os.cpu_count() or 1)


def db_path() -> str:
    return (os.environ.get(DB_PATH_ENV) or "").strip() or DB_PATH


def log_level() -> str:
    return (os.environ.get(LOG_LEVEL_ENV) or "").strip().upper() or "WARNING"
