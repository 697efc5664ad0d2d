"""
Django settings for hmvp project.

Generated by 'django-admin startproject' and trimmed down to what a
command-line numerical project needs: no database, no URL routes, no
templates. Everything numerical that has a default lives at the bottom
of this file as an HMVP_* setting.

For more information on this file, see
https://docs.djangoproject.com/en/5.1/topics/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Not used for anything security related (no sessions, no signing),
# but Django refuses to start certain utilities without it.
SECRET_KEY = os.environ.get('HMVP_SECRET_KEY', 'hmvp-local-not-secret')

DEBUG = os.environ.get('HMVP_DEBUG', '') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    # Own:
    'mvp',
]

# The project never touches a database.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True


# Logging

HMVP_LOG_LEVEL = os.environ.get('HMVP_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'keyvalue': {
            'format': 'ts=%(asctime)s level=%(levelname)s '
                      'logger=%(name)s msg="%(message)s"',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'keyvalue',
        },
    },
    'loggers': {
        'mvp': {
            'handlers': ['console'],
            'level': HMVP_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Version written into every run manifest
HMVP_VERSION = '1.0.0'

# Where the commands write CSV/JSON artifacts unless --output-dir is given
HMVP_OUTPUT_DIR = Path(os.environ.get('HMVP_OUTPUT_DIR', 'hmvp-output'))

# Worker count. The environment variable wins over the --threads flag;
# 0 means "not set" and falls back to the flag, then to the CPU count.
HMVP_THREADS = int(os.environ.get('HMVP_THREADS', '0') or 0)

# Gauge-ball quadrature: (n_rho, n_phi, n_theta) per group index n.
# Rules for n >= 2 are scaled down to stay below 10**6 nodes.
HMVP_QUADRATURE_RESOLUTION = {
    1: (24, 24, 24),
    2: (16, 16, 12),
    3: (5, 10, 7),
}
HMVP_QUADRATURE_FALLBACK_RESOLUTION = (4, 8, 4)
HMVP_MAX_RULE_NODES = 10 ** 6

# Horizontal calculus
HMVP_FD_STEP = 1e-4
HMVP_GRADIENT_THRESHOLD = 1e-9

# Gauss-Legendre nodes for every time average over [t - c*eps^2, t]
HMVP_TIME_NODES = 16

# Closed-ball extremum search: coarse polar grid, then compass search
HMVP_SEARCH = {
    'n_rho': 6,
    'n_phi': 12,
    'n_theta': 16,
    'tol': 1e-10,
    'max_iters': 5000,
}

# Expansion residuals
HMVP_ORDER_THRESHOLD = 2.2
HMVP_EXACT_RESIDUAL = 1e-13
HMVP_DEFAULT_EPS_LADDER = (0.4, 0.2, 0.1, 0.05)

# Moment identities (normalized, absolute) and M(n) (relative)
HMVP_MOMENT_TOLERANCE = 1e-12
HMVP_M_TOLERANCE = 1e-6

# DPP solver
HMVP_FP_TOLERANCE = 1e-10
HMVP_MAX_INNER_ITERS = 500
HMVP_WINDOW_SLABS = 2
HMVP_HORIZONTAL_RATIO = 0.4
HMVP_VERTICAL_RATIO = 1.0
HMVP_VERTICAL_NODES = 3

# Error messages
ERR_MSG_DIMENSION_MISMATCH = "Points live in different groups: H^{} and H^{}!"
ERR_MSG_BAD_COORDS = "Expected 2n+1 finite coordinates, got {}!"
ERR_MSG_NON_POSITIVE = "{} must be positive, got {}!"
ERR_MSG_ANGLE = "The angle {} = {} is outside [0, {})!"
ERR_MSG_BAD_EXPONENT = "The exponent p must satisfy p > 1 or p = inf, got {}!"
ERR_MSG_BAD_INDEX = "Frame index must be in 1..{}, got {}!"
ERR_MSG_DEGENERATE_GRADIENT = ("Horizontal gradient {:.3e} is below the "
                               "threshold {:.3e}!")
ERR_MSG_DOMAIN = "Field '{}' is not finite at the requested points!"
ERR_MSG_BAD_RESOLUTION = "Resolution counts must be integers >= 2, got {}!"
ERR_MSG_SHORT_LADDER = "At least 3 ladder points are needed, got {}!"
ERR_MSG_LADDER_ORDER = "The eps ladder must be strictly decreasing!"
ERR_MSG_NO_CONVERGENCE = ("Inner iteration of slab {} did not converge in "
                          "{} sweeps (last change {:.3e})!")
ERR_MSG_COLLAR = "The collar {} is narrower than eps = {}!"
ERR_MSG_WINDOW = "delta_t = {} must divide eps^2 = {} and not exceed it!"
ERR_MSG_UNKNOWN_FIELD = "Unknown field '{}'!"
