"""Pinned numerical tolerances shared by every module."""

#: exact structural identities (orthonormality, trace preservation, duality)
STRUCTURE = 1e-12
#: numerical propagation (matrix exponentials, resolvents, stationary solves)
PROPAGATION = 1e-10
#: quadrature and integrator cross-checks
QUADRATURE = 1e-6

#: eigenvector condition number above which expm falls back to Pade
EIG_CONDITION_MAX = 1e8
#: density matrices may have eigenvalues down to this value
POSITIVITY = -1e-10

#: detailed-balance verdict threshold and the reported "marginal" band
VERDICT = 1e-10
MARGINAL = 1e-6

#: poles closer than this are merged
POLE_MERGE = 1e-8
#: ensemble stationarity criterion on ||d rho_S / dt||
STATIONARITY = 1e-10
#: fixed-step integration budget h * (fastest rate)
STEP_RATE = 0.05
#: Volterra stability threshold h * max|pole|
STEP_POLE = 0.1
