# Operator evaluation
DEFAULT_TAIL_TOL = 1e-12
MAX_TAIL_TOL = 1e-6
DEFAULT_QUAD_ORDER = 8  # exact for polynomials of degree <= 15

# Supremum windows for the moduli (all [0, inf) suprema are truncated here)
WINDOW_LO = 0.0
WINDOW_HI = 10.0
WINDOW_POINTS = 201
REFINE_LEVELS = 3
REFINE_SAMPLES = 9  # samples per refined cell
STEP_SAMPLES = 32  # ladder points per halving of the step argument
DT_MIN_STEP = 1e-6  # smallest step kept on the ladders

# Total variation
TV_BASE_INTERVALS = 64
TV_REL_STOP = 1e-6
TV_REFINE_LEVELS = 6

# Constants the estimates leave open
BV_CONSTANT = 2.0
MAJORANT_M = 1.0
BOUND_SLACK = 1e-9
IDENTITY_SLACK = 1e-12

# Moment engine
STIRLING_MAX = 20
ASYMPTOTIC_ENVELOPES = {2: 5.0, 3: 50.0, 6: 500.0}
ASYMPTOTIC_SCALES = {2: 1, 3: 2, 6: 3}

# Test-function metadata
FD_STEP = 1e-5
EXP_SAFE_UPPER = 600.0  # t^k e^t stays finite below this

# Figure reproduction
FIGURE_M = (10, 25, 100)
FIGURE_A = 2.0
FIGURE_X_LO = 0.0
FIGURE_X_HI = 5.0
FIGURE_POINTS = 201
