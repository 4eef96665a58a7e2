import logging
import math

from .errors import ConfigError

# =========================================================
# CONFIG
# =========================================================
GRID_SIZE       = 1000              # uniform quadrature grid on [0,1]
REL_TOL         = 1e-12             # singular values below REL_TOL * s_max are truncated

# greedy (Jones iteration)
M_PRIME         = 1.5
M_DPRIME        = 2.0
SEL_EPS         = 1e-6              # first-step acceptance threshold
GREEDY_W_RANGE  = (0.0, 200.0)
GREEDY_B_RANGE  = (-100.0, 0.0)
MAX_DRAWS       = 100_000
DRAW_BATCH      = 256               # (w, b) pairs drawn per vectorized batch
STOP_ERR_SQ     = 1e-16

# random basis
RANDOM_W_RANGE  = (0.0, 200.0)
RANDOM_B_RANGE  = (-200.0, 200.0)
INDICATOR_RANGE = (0.0, 1.0)
DISCARD_COND    = 1e12              # cond_limit of the "ill-conditioned elements discarded" variant
SNAPSHOT_STEPS  = (5, 50, 500)
BLOWUP_STEPS    = 500

# quasi-orthogonal chains
CHAIN_TOL        = 0.037 * math.pi / 2
CHAIN_THETA      = 0.1
CHAINS_PER_N     = 20
MAX_CHAIN_LENGTH = 1_000_000

# experiments
TRIALS          = 100
BOX_QUANTILES   = (0.25, 0.75)      # blue boxes hold 50% of the data
WHISKER_QUANT   = (0.125, 0.875)    # whiskers hold 75% of the data

LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"


def configure_logging(verbose=False):
    """Attach one stream handler to the package logger (idempotent)."""
    logger = logging.getLogger("basis_approx")
    if not logger.handlers:
        handler = logging.StreamHandler()
        handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(handler)
    logger.setLevel(logging.DEBUG if verbose else logging.INFO)
    return logger


def check_interval(name, bounds):
    """Validate a closed interval [lo, hi] given as a 2-sequence."""
    if len(bounds) != 2 or bounds[0] > bounds[1]:
        raise ConfigError(f"{name} must be a closed interval [lo, hi], got {tuple(bounds)}")
