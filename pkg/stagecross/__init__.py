"""
stagecross - Multistage Boundary-Crossing Samplers

Stage-size policies for sampling a drifted Brownian motion until it crosses a
boundary, the normal-distribution kernels they are built from, a reproducible
Monte Carlo risk engine, and multistage tests of two simple hypotheses.

License: MIT
"""

import os

__version__ = "0.1.0"
__author__ = "stagecross developers"
__license__ = "MIT"

# Package metadata
__all__ = [
    '__version__',
    '__author__',
    '__license__',
]

# Configuration constants that can be used across modules
DEFAULT_REPS = 10000
DEFAULT_SEED = 0
DEFAULT_MU = 1.0
DEFAULT_FORMAT = "csv"
DEFAULT_WORKERS = os.cpu_count() or 1

STAGE_CAP = 10**6
REPLICATION_CAP = 10**8
M_STAR_CAP = 30
DEGENERATE_DISTANCE = 1e-12

# Package-level constants
PACKAGE_NAME = "stagecross"
PACKAGE_DESCRIPTION = "Multistage boundary-crossing samplers and Monte Carlo risk engine"


def get_version():
    """Return the package version"""
    return __version__


def get_package_info():
    """Return package information"""
    return {
        'name': PACKAGE_NAME,
        'version': __version__,
        'description': PACKAGE_DESCRIPTION,
        'author': __author__,
        'license': __license__,
    }
