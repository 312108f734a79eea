"""Phase-covariant qubit channels, their dynamics, and convex mixtures of them."""

from .channel import (
    PhaseCovariantChannel,
    apply,
    choi,
    compose,
    convex_mix,
    covariance_defect,
    fixed_point,
    is_completely_positive,
    is_unital,
)
from .config import DEFAULT_TOLERANCES, Tolerances
from .dynamics import (
    EigenvalueTrajectory,
    RateTrajectory,
    TimeGrid,
    cp_divisibility_via_choi,
    eigenvalues_from_rates,
    is_commutative_family,
    is_cp_divisible,
    propagator,
    rates_from_eigenvalues,
    semigroup_trajectory,
)
from .mixtures import (
    EtaFamilyMixtureSpec,
    EtaFunction,
    SemigroupMixtureSpec,
    commutativity_fit,
    eta_mixture_eigenvalues,
    invertibility_report,
    semigroup_mixture_eigenvalues,
    semigroup_mixture_rates,
    semigroup_recovery,
    verify_prop2,
)

__version__ = "0.1.0"
