"""Random-rate Lindblad ensembles: non-Markovian dynamics, exact versus regression correlations, detailed balance."""

from .balance import BalanceReport, balance_report, stationary_dispersion, stationary_states
from .correlations import CorrelationGrid, correlate, deviation_F, exact_two_time, qrt_two_time
from .dynamics import Trajectory, ensemble_density, laplace_kernel, propagate_member
from .ensemble import RateEnsemble, TlsModel, exponential_ensemble
from .kernels import RationalKernel, invert_rational_kernel
from .operators import Superoperator, hermitian_basis
from .volterra import volterra_evolve

__all__ = [
    "BalanceReport",
    "CorrelationGrid",
    "RateEnsemble",
    "RationalKernel",
    "Superoperator",
    "TlsModel",
    "Trajectory",
    "balance_report",
    "correlate",
    "deviation_F",
    "ensemble_density",
    "exact_two_time",
    "exponential_ensemble",
    "hermitian_basis",
    "invert_rational_kernel",
    "laplace_kernel",
    "propagate_member",
    "qrt_two_time",
    "stationary_dispersion",
    "stationary_states",
    "volterra_evolve",
]
