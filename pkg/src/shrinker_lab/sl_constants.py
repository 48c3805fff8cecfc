"""Global constants for the Shrinker Lab package

This module holds all global constants used within the components of the
Shrinker Lab package. Some of the constants are used as keyword equivalents
for attributes listed in the `sl_settings.toml` file.
"""

# fmt: off
# =========================================================
#              M I S C .   C O N S T A N T S
# =========================================================
DEF_MODEL = 'gaussian:1'        # Default model spec
DEF_DATA = 'sin'                # Default initial data
DEF_TOPOLOGY = 'periodic'       # [truncated|periodic|cylinder]
DEF_L = 10.0                    # Default half-length of truncated domains
DEF_H = 0.1                     # Default grid spacing
DEF_PERIOD = 6.283185307179586  # Default period for periodic harness (2*pi)
DEF_N_THETA = 32                # Default polar resolution on sphere factor
DEF_N_PHI = 64                  # Default azimuthal resolution on sphere factor

DEF_SCHEME = 'cn'               # [cn|explicit] time stepping scheme
DEF_SPACE_SCHEME = 'auto'       # [auto|central|spectral] spatial operator
DEF_DT = 1e-3                   # Default time step
DEF_T_FINAL = 0.5               # Default length of forward runs
DEF_T_START = 0.0               # Default start time of forward runs
DEF_T_EVAL = 0.5                # Default evaluation time for series and backward solves

DEF_J = 20                      # Default truncation order of time series
DEF_J_MAX = 40                  # Hard cap on truncation order
DEF_J_MIN_RADIUS = 4            # Min order for radius and bound fits
DEF_DELTA_MAX = 1e6             # Radius cap for 'entire' series
DEF_ENTIRE_SLOPE = -0.6         # Log-ratio slope at or below which a series is 'entire'
DEF_PRECISION = 80              # Decimal digits for extended precision sampling
DEF_FILTER_LEVEL = 1e-13        # Relative Fourier amplitude filter for spectral iterates
DEF_ZERO_FLOOR = 1e-300         # Floor below which coefficients count as zero

DEF_K = 40                      # Default Tychonov truncation order
DEF_K_MAX = 400                 # Hard cap on Tychonov truncation order
DEF_TYCHONOV_DPS = 60           # Decimal digits for Tychonov evaluation
DEF_TAIL_RATIO = 0.5            # Max last-term ratio for a reliable Tychonov tail

DEF_QUAD_NODES = 64             # Default quadrature resolution (per factor)
DEF_SEED = 451                  # Default seed for random sample points
DEF_SAMPLES = 100               # Default number of random sample points
DEF_OUTDIR = 'sl_output'        # Default output directory

DEF_A_FLOOR = 1e-300            # Floor for fitted A-constants of trivial data
DEF_A4_MAX = 1.0                # Upper end of the A4 search grid
DEF_A4_STEPS = 41               # Number of A4 grid values
DEF_GROWTH_LIMIT = 0.25         # Allowed A3 growth per 4 added coefficients

DEF_RADIUS = 1.0                # Default parabolic cylinder size r
DEF_CUTOFF = 0.5                # Default cutoff fraction delta
DEF_EXPONENT = 1.0              # Default exponent m in mean value checks
DEF_LEVELS = 4                  # Default Moser chain depth
DEF_LEVELS_MAX = 6              # Max Moser chain depth
DEF_K_LOCAL = 4                 # Default localization parameter k
DEF_SUBSOL_FACTOR = 10.0        # Subsolution tolerance in units of scheme error
DEF_MIN_BALL_NODES = 3          # Min nodes per radius inside a ball
DEF_CHAIN_BOUND = 10.0          # Max ratio of Moser step constants to first step

DEF_RESIDUAL_TOL = 1e-10        # Tolerance for soliton identity residuals
DEF_BOUND_RTOL = 1e-12          # Relative slack in bound comparisons
DEF_ENTROPY_TOL = 1e-6          # Self-check tolerance for entropy quadrature
# fmt: on


# =========================================================
#    K E Y W O R D S   F O R   C O N F I G   F I L E S
# =========================================================
KWD_MODEL = 'MODEL'
KWD_DATA = 'DATA'
KWD_TOPOLOGY = 'TOPOLOGY'
KWD_L = 'L'
KWD_H = 'H'
KWD_PERIOD = 'PERIOD'
KWD_N_THETA = 'N_THETA'
KWD_N_PHI = 'N_PHI'
KWD_SCHEME = 'SCHEME'
KWD_SPACE_SCHEME = 'SPACE_SCHEME'
KWD_DT = 'DT'
KWD_T_FINAL = 'T_FINAL'
KWD_T_START = 'T_START'
KWD_T_EVAL = 'T_EVAL'
KWD_J = 'J'
KWD_K = 'K'
KWD_DELTA_MAX = 'DELTA_MAX'
KWD_PRECISION = 'PRECISION'
KWD_QUAD_NODES = 'QUAD_NODES'
KWD_SEED = 'SEED'
KWD_SAMPLES = 'SAMPLES'
KWD_OUTDIR = 'OUTDIR'
KWD_A4_MAX = 'A4_MAX'
KWD_A4_STEPS = 'A4_STEPS'
KWD_GROWTH_LIMIT = 'GROWTH_LIMIT'
KWD_RADIUS = 'RADIUS'
KWD_CUTOFF = 'CUTOFF'
KWD_EXPONENT = 'EXPONENT'
KWD_LEVELS = 'LEVELS'
KWD_K_LOCAL = 'K_LOCAL'

ENV_THREADS = 'SHRINKER_LAB_THREADS'

# fmt: off
# =========================================================
#     C O N S T A N T S   F O R   M O D E L S   E T C .
# =========================================================
MODEL_GAUSSIAN = 'gaussian'     # Flat Gaussian shrinker
MODEL_CYLINDER = 'cylinder'     # Round cylinder S^k x R^(n-k)

TOPO_TRUNCATED = 'truncated'    # Truncated line [-L, L]
TOPO_PERIODIC = 'periodic'      # Periodic line (operator self-test harness)
TOPO_CYLINDER = 'cylinder'      # Lat-long sphere x truncated axis

SCHEME_CN = 'cn'                # Crank-Nicolson
SCHEME_EXPLICIT = 'explicit'    # Forward Euler
SPACE_CENTRAL = 'central'       # Second-order central stencil
SPACE_SPECTRAL = 'spectral'     # Fourier differentiation (periodic only)
SPACE_AUTO = 'auto'             # Spectral on periodic lines, central otherwise

BOUNDARY_MASKED = 'zero-flux/masked'
BOUNDARY_PERIODIC = 'periodic'

EXIT_OK = 0                     # All checks passed
EXIT_FAILED = 1                 # A verified inequality or criterion failed
EXIT_USAGE = 2                  # Usage or config error
EXIT_NUMERIC = 3                # Divergence, NaN, unreliable tails
# fmt: on
