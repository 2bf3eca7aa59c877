"""delayhopf - Stability and Hopf bifurcation analysis of a delayed financial system."""

__version__ = "1.0.0"
__author__ = "delayhopf Contributors"

# Integration defaults
DEFAULT_STEP = 1e-3
DEFAULT_HORIZON = 200.0
DEFAULT_JMAX = 3
BLOWUP_THRESHOLD = 1e12

# Numerical tolerances
EQUILIBRIUM_TOLERANCE = 1e-12
CROSSING_TOLERANCE = 1e-8
REALNESS_TOLERANCE = 1e-9
SIMPLICITY_TOLERANCE = 1e-10

# Envelope classification thresholds
DECAY_RATIO = 0.5
GROWTH_RATIO = 2.0
PERIOD_TOLERANCE = 0.05
TRANSIENT_FRACTION = 0.25
WINDOW_FRACTION = 0.2
AMPLITUDE_FLOOR = 1e-10

# Argument-principle contour defaults
DEFAULT_CONTOUR_SAMPLES = 256
MAX_CONTOUR_SAMPLES = 2**18
CONTOUR_CLEARANCE = 1e-6
CONTOUR_RETRIES = 5
WINDING_RESIDUAL_LIMIT = 0.1
