"""Lipschitz transport maps between log-concave measures and their bounded perturbations."""
from .bounds import (BoundReport, PogorelovParams, PsiBar, bootstrap_refine, build_psi_bar,
                     caffarelli_bound, cost_upper_bound, log_sobolev_transfer, outreach_radius,
                     perturbation_sup_bound, talagrand_bound, theorem_1_1_constant)
from .measures import (Perturbation, Potential, WeightedMeasure1D, ball_mass, cdf,
                       make_measure, normalize_constant, truncate)
from .radial import RadialTransport, build_radial, evaluate_map, gradient_eigenvalues, reduce_to_1d
from .transport1d import (GridSpec, TransportMap1D, build_transport, log_derivative,
                          relative_entropy, tail_limit_check, transport_cost)
from .verify import (VerificationOutcome, check_lemma_5_1, check_remark_5_2, check_theorem_1_2,
                     check_theorem_1_3, linearization_residual, lipschitz_estimate,
                     pogorelov_h_profile)

__version__ = "0.1.0"
