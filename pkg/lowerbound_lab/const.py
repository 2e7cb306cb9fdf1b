# coding:utf-8
# constants module

import math

__version__ = 0.10

REPORT_SCHEMA_VERSION = 1

# numeric defaults, all overridable through ExperimentConfig
DEFAULT_TOL = 1e-9
DEFAULT_HORIZON = 200
AGREEMENT_TOL = 1e-8
RANK_THRESHOLD = 1e-8
POISSON_TAIL = 1e-14
DENSE_CAP = 4096
DEFAULT_SHRINK = 0.95
POSITIVITY_FLOOR = 1e-12
DEFAULT_STEPS = (0.3, 1.0, math.sqrt(2))
DEFAULT_SAMPLE_STEP = 0.5
DOMINATION_GROWTH = 1e-6
MIN_TRUNCATION = 8

# horizon <= N - HORIZON_MARGIN keeps shift-type gallery formulas exact
HORIZON_MARGIN = 8

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_INAPPLICABLE = 2
EXIT_USAGE = 64
