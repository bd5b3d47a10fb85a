import os
from pathlib import Path

BASE_DIR = Path(__file__).resolve().parent.parent

DB_URL = os.getenv("NETMISFIT_DB_URL", f"sqlite:///{(BASE_DIR / 'netmisfit.db').as_posix()}")

DEFAULT_SEED = int(os.getenv("NETMISFIT_SEED", "0"))
DEFAULT_WORKERS = int(os.getenv("NETMISFIT_WORKERS", "1"))
LOG_LEVEL = os.getenv("NETMISFIT_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

SCHEMA_VERSION = "1.0"

# Dense bool adjacency costs n**2 bytes.
MAX_VERTICES = 20000
# Two int64 index arrays of C(n,2) entries each; 2000 vertices is about 32 MB.
PAIR_CACHE_MAX_N = 2000

DEFAULT_ALPHA = 0.05
DEFAULT_CLAMP_EPS = 1e-6

COND_LIMIT = 1e12
ERG_SINGULAR_RTOL = 1e-10
ERG_SINGULAR_ATOL = 1e-300
SBM_DROP_RTOL = 1e-10
A_DIAG_FLOOR = 1e-12

VEM_TOL = 1e-6
VEM_MAX_ITER = 200
VEM_RESTARTS = 5
EMPTY_BLOCK_MASS = 1e-8

SCENARIO2_GROUPS = 10
