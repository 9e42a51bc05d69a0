"""Heat kernels of Schroedinger operators: sharp Gaussian estimate functionals.

Numerical evaluation of the Gauss-Weierstrass kernel and its drifted and
resolvent relatives, the bridge functionals S and N, the comparison kernel K,
Kato-type quantities, Brownian-bridge Monte Carlo oracles and a verification
harness that checks the inequalities relating them.
"""

from .errors import (DivergenceError, DomainError, GsekError, ParseError, SingularPointError,
                     UnboundedPotentialError, UsageError)
from .kernels import (bessel_k, bessel_k_integral, drifted_kernel, gauss_weierstrass, newtonian_kernel,
                      resolvent_kernel, sharp_kernel_K)
from .potentials import cylinder_potential, evaluate, f_profile, rho, support_bound
from .dsl import parse_potential
from .quadrature import Estimate, QuadConfig, grid_oracle_integrate, integrate_space, integrate_time_space
from .search import SearchConfig, SupResult
from .quantities import (A_value, K_norm, K_potential_value, N_value, S_value, delta_inverse, delta_inverse_norm,
                         e_star, kato_bracket, r_star, sup_N, sup_S)
from .bridge_mc import BridgeConfig, MCEstimate, S_bridge_estimate, feynman_kac_ratio, sample_bridge

__version__ = "0.1.0"
