"""
Pipeline Rules - editable constants of the segmentation pipeline
"""

# LOCAL SUBSPACES
DEFAULT_SUBSPACE_DIM = 4        # trajectories of a rigid object span at most 4 dims
DEFAULT_NEIGHBORS = 3           # minimum for d=4 (k >= d-1)
DEFAULT_NORM_P = 2.0

# RANK ESTIMATION
DEFAULT_KAPPA = 0.1
RANK_PER_MOTION = 4             # known-rank convention: 8 for two motions, 12 for three

# K-MEANS
KMEANS_RESTARTS = 10
KMEANS_MAX_ITER = 100

# SYNTHETIC DATA
MAX_REJECTION_ATTEMPTS = 10_000

# EVALUATION
MAX_MATCHING_LABELS = 10        # exhaustive permutation matching bound
SEQUENCE_GROUPS = ("checker", "traffic", "articulated", "synthetic")

# SWEEPS
THRESHOLD_FACTORS = (0.8, 0.9, 0.95, 1.05, 1.10, 1.20)
NEIGHBOR_COUNTS = (3, 4, 5)

# REFERENCE TARGETS (% error, Hopkins 155)
# keyed by (motions, group); motions=None means all sequences
REFERENCE_TARGETS = {
    (2, "checker"): {"average": 0.23, "median": 0.00},
    (2, "traffic"): {"average": 1.40, "median": 0.00},
    (2, "articulated"): {"average": 1.77, "median": 0.88},
    (2, "all"): {"average": 0.57, "median": 0.00},
    (3, "checker"): {"average": 0.87, "median": 0.35},
    (3, "traffic"): {"average": 1.86, "median": 1.53},
    (3, "articulated"): {"average": 5.12, "median": 5.12},
    (3, "all"): {"average": 1.31, "median": 0.45},
    (None, "all"): {"average": 0.76, "median": 0.20},
}
REFERENCE_TOLERANCE = 0.3       # absolute percentage points
