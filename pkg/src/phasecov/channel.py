"""Static phase-covariant qubit channels.

A channel is fixed by three reals: the doubly degenerate eigenvalue
``lambda1`` (on s1, s2), the eigenvalue ``lambda3`` (on s3) and the
non-unitality shift ``lambda_star`` of the image of the identity.
No physicality check happens at construction, so the non-CP region
stays reachable for the CP tests.
"""

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .config import DEFAULT_TOLERANCES
from .qubit_algebra import (
    IDENTITY,
    SIGMA1,
    SIGMA2,
    SIGMA3,
    from_bloch,
    hermitian4_eigenvalues,
    max_abs,
)


@dataclass(frozen=True)
class PhaseCovariantChannel:
    lambda1: float
    lambda3: float
    lambda_star: float

    def __post_init__(self):
        for name in ("lambda1", "lambda3", "lambda_star"):
            value = float(getattr(self, name))
            if not np.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value}")
            object.__setattr__(self, name, value)

    @classmethod
    def identity(cls):
        return cls(1.0, 1.0, 0.0)

    def as_tuple(self):
        return (self.lambda1, self.lambda3, self.lambda_star)

    def superoperator(self):
        """4x4 real matrix acting on ``(tr X, tr s1 X, tr s2 X, tr s3 X)``."""
        return np.array(
            [
                [1.0, 0.0, 0.0, 0.0],
                [0.0, self.lambda1, 0.0, 0.0],
                [0.0, 0.0, self.lambda1, 0.0],
                [self.lambda_star, 0.0, 0.0, self.lambda3],
            ]
        )


class CPReport(NamedTuple):
    """Outcome of the complete-positivity test.

    ``first_slack`` is ``1 - |l3| - |l*|`` and ``second_slack`` is
    ``(1 + l3)^2 - 4 l1^2 - l*^2``; both are nonnegative for CP channels.
    """

    completely_positive: bool
    first_slack: float
    second_slack: float

    def __bool__(self):
        return self.completely_positive


def apply(ch: PhaseCovariantChannel, X):
    X = np.asarray(X, dtype=complex)
    tr = np.trace(X)
    out = (IDENTITY + ch.lambda_star * SIGMA3) * tr
    out = out + ch.lambda1 * (SIGMA1 * np.trace(SIGMA1 @ X) + SIGMA2 * np.trace(SIGMA2 @ X))
    out = out + ch.lambda3 * SIGMA3 * np.trace(SIGMA3 @ X)
    return 0.5 * out


def choi(ch: PhaseCovariantChannel):
    """Unnormalized Choi matrix ``sum_ij |i><j| (x) L[|i><j|]`` (trace 2)."""
    l1, l3, ls = ch.as_tuple()
    C = np.zeros((4, 4), dtype=complex)
    C[0, 0] = (1 + ls + l3) / 2
    C[1, 1] = (1 - ls - l3) / 2
    C[2, 2] = (1 + ls - l3) / 2
    C[3, 3] = (1 - ls + l3) / 2
    C[0, 3] = C[3, 0] = l1
    return C


def choi_from_action(ch: PhaseCovariantChannel):
    """Choi matrix assembled block by block from :func:`apply` (reference path)."""
    C = np.zeros((4, 4), dtype=complex)
    for i in range(2):
        for j in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[i, j] = 1.0
            C[2 * i : 2 * i + 2, 2 * j : 2 * j + 2] = apply(ch, E)
    return C


def choi_batch(lambda1, lambda3, lambda_star):
    """Stack of Choi matrices for arrays of parameters (same layout as :func:`choi`)."""
    l1, l3, ls = np.broadcast_arrays(
        np.asarray(lambda1, float), np.asarray(lambda3, float), np.asarray(lambda_star, float)
    )
    C = np.zeros(l1.shape + (4, 4), dtype=complex)
    C[..., 0, 0] = (1 + ls + l3) / 2
    C[..., 1, 1] = (1 - ls - l3) / 2
    C[..., 2, 2] = (1 + ls - l3) / 2
    C[..., 3, 3] = (1 - ls + l3) / 2
    C[..., 0, 3] = l1
    C[..., 3, 0] = l1
    return C


def choi_min_eigenvalue(ch: PhaseCovariantChannel):
    return float(hermitian4_eigenvalues(choi(ch))[0])


def cp_slacks(lambda1, lambda3, lambda_star):
    """Vectorised slacks of the two CP inequalities."""
    lambda1, lambda3, lambda_star = (np.asarray(a, float) for a in (lambda1, lambda3, lambda_star))
    first = 1.0 - np.abs(lambda3) - np.abs(lambda_star)
    second = (1.0 + lambda3) ** 2 - 4.0 * lambda1**2 - lambda_star**2
    return first, second


def is_completely_positive(ch: PhaseCovariantChannel, tol=DEFAULT_TOLERANCES.cp) -> CPReport:
    """CP test from the closed-form inequalities; a slack of ``-tol`` still counts as CP."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    first, second = cp_slacks(*ch.as_tuple())
    first, second = float(first), float(second)
    return CPReport(first >= -tol and second >= -tol, first, second)


class FixedPointError(ValueError):
    pass


def fixed_point(ch: PhaseCovariantChannel):
    """Invariant state ``(I + lambda_star / (1 - lambda3) s3) / 2``."""
    if ch.lambda3 == 1.0:
        raise FixedPointError("degenerate fixed-point family")
    return from_bloch([1.0, 0.0, 0.0, ch.lambda_star / (1.0 - ch.lambda3)])


def compose(a: PhaseCovariantChannel, b: PhaseCovariantChannel) -> PhaseCovariantChannel:
    """``a`` after ``b``."""
    return PhaseCovariantChannel(
        a.lambda1 * b.lambda1,
        a.lambda3 * b.lambda3,
        a.lambda_star + a.lambda3 * b.lambda_star,
    )


def convex_mix(
    channels: Sequence[PhaseCovariantChannel],
    weights: Sequence[float],
    tol=DEFAULT_TOLERANCES.weights,
) -> PhaseCovariantChannel:
    weights = np.asarray(weights, dtype=float)
    if len(channels) == 0 or weights.shape != (len(channels),):
        raise ValueError("need one weight per channel")
    check_probability_vector(weights, tol)
    params = np.array([ch.as_tuple() for ch in channels])
    return PhaseCovariantChannel(*(weights @ params))


def check_probability_vector(weights, tol=DEFAULT_TOLERANCES.weights):
    weights = np.asarray(weights, dtype=float)
    if not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite")
    if np.any(weights < 0):
        raise ValueError(f"weights must be nonnegative, got {weights.tolist()}")
    if abs(weights.sum() - 1.0) > tol:
        raise ValueError(f"weights must sum to 1, got {weights.sum()!r}")
    return weights


def is_unital(ch: PhaseCovariantChannel, tol=DEFAULT_TOLERANCES.unital):
    return abs(ch.lambda_star) <= tol


def phase_rotation(phi):
    """``exp(-i s3 phi)``."""
    return np.diag([np.exp(-1j * phi), np.exp(1j * phi)])


def covariance_defect(ch: PhaseCovariantChannel, phi, X):
    U = phase_rotation(phi)
    Ud = U.conj().T
    X = np.asarray(X, dtype=complex)
    return max_abs(apply(ch, U @ X @ Ud) - U @ apply(ch, X) @ Ud)
