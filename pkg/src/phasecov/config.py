"""Numeric policy shared by every check in the package."""

from dataclasses import dataclass, replace

DEFAULT_T_MAX = 10.0
DEFAULT_POINTS = 2001
DEFAULT_SEED = 7


@dataclass(frozen=True)
class Tolerances:
    """Tolerances used across the package.

    Attributes:
        hermitian: allowed asymmetry when accepting a Hermitian operator.
        cp: slack for complete positivity (closed-form inequalities and Choi spectrum).
        unital: bound on ``|lambda_star|`` for a unital channel.
        rate: slack for the sign of decoherence rates.
        singular: ``|lambda|`` below this marks a non-invertible time.
        commutative: bound on the commutativity defect.
        weights: allowed deviation of mixing weights from the simplex.
        recovery_eta: largest admissible ``|eta|`` in semigroup recovery.
        recovery_match: reproduction error allowed for recovered solutions.
        identity: tolerance for the proof's sum-rewriting identity.
    """

    hermitian: float = 1e-12
    cp: float = 1e-9
    unital: float = 1e-12
    rate: float = 1e-9
    singular: float = 1e-8
    commutative: float = 1e-9
    weights: float = 1e-12
    recovery_eta: float = 1.0 + 1e-10
    recovery_match: float = 1e-9
    identity: float = 1e-10

    def with_overrides(self, **kwargs) -> "Tolerances":
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


DEFAULT_TOLERANCES = Tolerances()
