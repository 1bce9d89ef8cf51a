import math

# Integrator
DEFAULT_DT = 1e-3
FIXED_POINT_TOL = 1e-13
FIXED_POINT_MAX_ITER = 40
UNIT_SPEED_TOL = 1e-9
REDUCTION_MAX_ITER = 1000
Y_CAP = 1e3

# Finite differences
FD_STEP = 1e-3
FD_VALUE_TOL = 1e-6
FD_SECOND_TOL = 1e-4

# Geometry
T0_DEFAULT = 0.5
EXP_DERIVATIVE_BOUND = 2.5
BUMP_CENTER = (0.0, math.log(1.6))
BUMP_WIDTH = 0.35
BUMP_BOUNDARY_MARGIN = 0.05
QUADRATURE_NODES = 16

# Splitting and bounds
SPLITTING_HORIZON = 15.0
SPLITTING_RESIDUAL_TOL = 1e-6
GENERIC_JACOBI_VECTOR = (1.0, 0.3)
SAFETY_FACTOR = 1.1
EBERLEIN_REL_TOL = 1e-6
BOUND_REL_TOL = 1e-9
NEARBY_RADIUS = 0.1
NEARBY_SAMPLES = 4
INCLUSION_RADIUS = 0.1
INCLUSION_SWEEP = tuple(round(0.05 * k, 2) for k in range(1, 11))
INCLUSION_MAX_SKIP_FRACTION = 0.01
CONJUGATE_POINT_TOL = 1e-12

# Spectrum
RENORM_DT = 1.0
SPECTRUM_TRANSIENT_FRACTION = 0.05
SPECTRUM_CLUSTER_FACTOR = 10.0
SPECTRUM_POSITIVE_FACTOR = 3.0
SPECTRUM_HALFWIDTH_FLOOR = 1e-6
SPECTRUM_CONVERGENCE_THRESHOLD = 5e-2
COCYCLE_OVERFLOW = 1e150
REGULARITY_REL_TOL = 1e-6

# Entropy
FLOW_STEP_N = 1
RHO_CONST = 0.05
XI_GRAPH = 0.9
XI_GRAPH_GRID = (0.8, 0.9, 0.95)
Y_CORE = 5.0
FLAT_CORE_HALF_WIDTH = 10.0
RETURN_TIME_CAP = 50
BOWEN_BOX_INFLATION = 1.25
BOWEN_EDGE_FRACTION = 0.9
BOWEN_MAX_DOUBLINGS = 4
INDETERMINATE_MAX_FRACTION = 0.10
LINEAR_WINDOW_R2 = 0.95
LINEAR_WINDOW_MIN_POINTS = 3
PESIN_EPSILON = 0.05
ENTROPY_TOLERANCE = 0.15
LOWER_BOUND_MIN_FRACTION = 0.9
MIN_CELL_COUNT = 5
CONFIDENCE_Z = 1.96

# CLI
EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3
DEFAULT_SEED = 20240611
DEFAULT_THREADS = 1
DEFAULT_OUTPUT_DIR = "output"
