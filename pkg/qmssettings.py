# This file contains the common settings for the toolkit
# This file is a template, with an explanation of what the config values do

# Copy this file into a new one called qmssettings_local.py
# Put the cutoffs, tolerances, etc that you want to use in there
# The values in this file serve as a fallback

#### TRUNCATION
DIMENSION_CAP = 5000 # largest Fock dimension D = binomial(N_max + d, d) that build_space accepts
INTERIOR_MARGIN = 2 # grades kept away from the cutoff; 2 because H, G and G0 are quadratic

#### SPECTRAL THRESHOLDS
EIG_RELATIVE_TOL = 1e-10 # eigenvalues of K below EIG_RELATIVE_TOL * ||K|| count as zero
SUPPORT_EIG_RELATIVE_TOL = 1e-8 # eigen-rank threshold for evolved states (relative to the largest eigenvalue)
GRAM_SCHMIDT_DROP_TOL = 1e-10 # drop a direction when its residual is below this times the largest kept norm
HERMITIAN_TOL = 1e-12 # Omega = Omega^dagger, kappa = kappa^T, c = c^dagger
UNITARY_TOL = 1e-10 # r^dagger r = 1 for Kraus mixing, Bogoliubov constraint residuals

#### INTEGRATION
EXPM_MAX_SUPERDIM = 10_000 # dense expm is used while the superoperator side D^2 stays under this
RK4_STEP = 1e-3 # fixed step of the classical RK4 integrator
TRACE_ABORT_TOL = 1e-4 # abort an integration once |tr(rho) - 1| exceeds this
CONTRACTION_SLACK = 1e-8 # allowed growth of ||P_t psi|| between output times

#### FINITE DIMENSION
FD_MAX_DIM = 6 # largest Hilbert dimension n accepted by the finite-dimensional engine
FD_DIFF_STEP = 1e-4 # step of the one-sided finite difference in initial_derivative
FD_POSITIVE_FLOOR = 1e-12 # fd_positivity_probe verdict is positive above this value

#### DIAGNOSTICS
THEOREM2_C_GRID = [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6] # candidate constants c, c0
SECTOR_SHIFT_GRID = [0.0, 0.5, 1.0] # shifts omega tried by sector_estimate
CLOSURE_STABLE_ROUNDS = 2 # closure iteration stops after this many rounds without growth
DEFAULT_SAMPLES = 200 # default sample count for the sampled checks

# whether to enable debug logging... it's quite verbose
DEBUG = False
