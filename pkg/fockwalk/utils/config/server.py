import os

# process-wide knobs, read once at import
LOG_LEVEL = os.environ.get('FOCKWALK_LOG_LEVEL', 'INFO').upper()

# trajectory thread pool; 1 runs the ensemble inline
MAX_WORKERS = int(os.environ.get('FOCKWALK_MAX_WORKERS', '1'))

DEFAULT_TRAJECTORIES = int(os.environ.get('FOCKWALK_TRAJECTORIES', '200'))

# P(n >= n_max - 2) above this raises a truncation fault
TRUNCATION_TOLERANCE = float(os.environ.get('FOCKWALK_TRUNCATION_TOLERANCE', '1e-6'))

# DensityMatrix acceptance tolerances
HERMITIAN_TOLERANCE = 1e-10
TRACE_TOLERANCE = 1e-10
EIGENVALUE_TOLERANCE = 1e-10

# levels kept above the target when n_max is not given
TRUNCATION_MARGIN = 10
MIN_TRUNCATION_MARGIN = 4

# stabilization window for fidelity traces
STABILITY_WINDOW = 10
STABILITY_TOLERANCE = 0.005

# step at which the protocol summary snapshots the populations
SNAPSHOT_STEP = 73

# population that escapes the target climbs to the next trapping levels
# j^2 (n_target + 1) - 1; untrapped runs cover the first LEAK_TRAP_LEVEL of them
LEAK_TRAP_LEVEL = 3
