"""Numerical tolerances used across the package (single source of truth)."""

# Hermitian symmetry deviation allowed at construction / validation.
HERMITIAN_ATOL = 1e-12

# Density-matrix contracts.
TRACE_ATOL = 1e-10
PSD_ATOL = 1e-10
NUCLEAR_SLACK = 1e-9

# Eigendecomposition reconstruction residual, relative to the input norm.
EIG_RECON_RTOL = 1e-9

# Trace measurements of Hermitian observables must be real up to this much.
REAL_IMAG_ATOL = 1e-10
