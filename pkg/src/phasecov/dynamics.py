"""Time-dependent phase-covariant dynamical maps.

A dynamical map is sampled on a uniform :class:`TimeGrid` as an
:class:`EigenvalueTrajectory`; its time-local generator is sampled as a
:class:`RateTrajectory` of the rates ``(gamma_plus, gamma_minus, gamma3)``.
The two are converted into each other by cumulative Simpson quadrature
and by finite differences respectively.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

from . import numerics
from .channel import PhaseCovariantChannel, choi_batch, compose, cp_slacks
from .config import DEFAULT_POINTS, DEFAULT_T_MAX, DEFAULT_TOLERANCES
from .qubit_algebra import SIGMA3, hermitian4_eigenvalues

SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)
SIGMA_MINUS = np.array([[0, 0], [1, 0]], dtype=complex)

COMMUTATIVITY_MAX_SAMPLES = 200


@dataclass(frozen=True)
class TimeGrid:
    t_max: float = DEFAULT_T_MAX
    n_points: int = DEFAULT_POINTS

    def __post_init__(self):
        if not (np.isfinite(self.t_max) and self.t_max > 0):
            raise ValueError(f"t_max must be positive, got {self.t_max}")
        if int(self.n_points) != self.n_points or self.n_points < 3:
            raise ValueError(f"n_points must be an integer >= 3, got {self.n_points}")
        object.__setattr__(self, "t_max", float(self.t_max))
        object.__setattr__(self, "n_points", int(self.n_points))

    @property
    def step(self):
        return self.t_max / (self.n_points - 1)

    @property
    def points(self):
        return np.linspace(0.0, self.t_max, self.n_points)

    def require_odd(self):
        if self.n_points % 2 == 0:
            raise ValueError(f"Simpson quadrature needs an odd n_points, got {self.n_points}")

    def index_of(self, t):
        """Grid index of time ``t``; raises if ``t`` is not a grid node."""
        pos = t / self.step
        i = int(round(pos))
        if not (0 <= i < self.n_points) or abs(pos - i) > 1e-9:
            raise ValueError(f"time {t} is not a node of the grid")
        return i


def _as_series(values, grid, name):
    arr = np.asarray(values, dtype=float)
    if arr.shape != (grid.n_points,):
        raise ValueError(f"{name} must have {grid.n_points} samples, got shape {arr.shape}")
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class EigenvalueTrajectory:
    grid: TimeGrid
    lambda1: np.ndarray
    lambda3: np.ndarray
    lambda_star: np.ndarray

    def __post_init__(self):
        for name in ("lambda1", "lambda3", "lambda_star"):
            object.__setattr__(self, name, _as_series(getattr(self, name), self.grid, name))

    @property
    def times(self):
        return self.grid.points

    def channel(self, i):
        return PhaseCovariantChannel(self.lambda1[i], self.lambda3[i], self.lambda_star[i])

    def channel_at(self, t):
        return self.channel(self.grid.index_of(t))

    def initial_defect(self):
        """Distance of the t=0 sample from the identity channel."""
        return max(abs(self.lambda1[0] - 1), abs(self.lambda3[0] - 1), abs(self.lambda_star[0]))

    def cp_violations(self, tol=DEFAULT_TOLERANCES.cp):
        """Grid times at which the sampled channel fails the CP inequalities."""
        first, second = cp_slacks(self.lambda1, self.lambda3, self.lambda_star)
        return self.times[(first < -tol) | (second < -tol)]


@dataclass(frozen=True, eq=False)
class RateTrajectory:
    """Sampled decoherence rates.

    ``valid`` marks the nodes that carry a rate; nodes excluded around
    singular times hold 0.0 and are skipped by every analysis.
    """

    grid: TimeGrid
    gamma_plus: np.ndarray
    gamma_minus: np.ndarray
    gamma3: np.ndarray
    valid: Optional[np.ndarray] = None

    def __post_init__(self):
        valid = (
            np.ones(self.grid.n_points, dtype=bool)
            if self.valid is None
            else np.asarray(self.valid, dtype=bool).copy()
        )
        if valid.shape != (self.grid.n_points,):
            raise ValueError("valid mask does not match the grid")
        valid.setflags(write=False)
        object.__setattr__(self, "valid", valid)
        for name in ("gamma_plus", "gamma_minus", "gamma3"):
            arr = np.where(valid, np.asarray(getattr(self, name), dtype=float), 0.0)
            arr = _as_series(arr, self.grid, name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} is not finite at every valid node")
            object.__setattr__(self, name, arr)

    @classmethod
    def constant(cls, gamma_plus, gamma_minus, gamma3, grid):
        ones = np.ones(grid.n_points)
        return cls(grid, gamma_plus * ones, gamma_minus * ones, gamma3 * ones)

    @property
    def times(self):
        return self.grid.points

    def stacked(self):
        return np.vstack([self.gamma_plus, self.gamma_minus, self.gamma3])


@dataclass(frozen=True)
class DivisibilityReport:
    cp_divisible: bool
    min_rate: float
    method: str
    first_violation_time: Optional[float] = None
    excluded_times: tuple = field(default_factory=tuple)

    def __post_init__(self):
        if self.cp_divisible and self.first_violation_time is not None:
            raise ValueError("a CP-divisible report cannot carry a violation time")


class RateReconstruction(NamedTuple):
    rates: RateTrajectory
    singular_times: tuple


class CommutativityCheck(NamedTuple):
    commutative: bool
    max_defect: float


def _lindblad_plus(X):
    return SIGMA_PLUS @ X @ SIGMA_MINUS - 0.5 * (
        SIGMA_MINUS @ SIGMA_PLUS @ X + X @ SIGMA_MINUS @ SIGMA_PLUS
    )


def _lindblad_minus(X):
    return SIGMA_MINUS @ X @ SIGMA_PLUS - 0.5 * (
        SIGMA_PLUS @ SIGMA_MINUS @ X + X @ SIGMA_PLUS @ SIGMA_MINUS
    )


def _dephasing(X):
    return 0.25 * (SIGMA3 @ X @ SIGMA3 - X)


def generator_action(rates_at_t, X):
    """Apply ``g+ L+ + g- L- + g3 L3`` to the operator ``X``."""
    gp, gm, g3 = rates_at_t
    X = np.asarray(X, dtype=complex)
    return gp * _lindblad_plus(X) + gm * _lindblad_minus(X) + g3 * _dephasing(X)


def eigenvalues_from_rates(rates: RateTrajectory) -> EigenvalueTrajectory:
    """Integrate the rates into channel eigenvalues (cumulative Simpson)."""
    grid = rates.grid
    grid.require_odd()
    if not np.all(rates.valid):
        raise ValueError("rate trajectory has excluded nodes; cannot integrate")
    h = grid.step
    Gp = numerics.cumulative_simpson(rates.gamma_plus, h)
    Gm = numerics.cumulative_simpson(rates.gamma_minus, h)
    G3 = numerics.cumulative_simpson(rates.gamma3, h)
    lambda1 = np.exp(-0.5 * (Gp + Gm + G3))
    lambda3 = np.exp(-(Gp + Gm))
    lambda_star = numerics.integrating_factor_integral(
        rates.gamma_plus - rates.gamma_minus, Gp + Gm, h
    )
    return EigenvalueTrajectory(grid, lambda1, lambda3, lambda_star)


def singular_nodes(values, threshold):
    """Nodes where ``|values|`` is below threshold or the sign flips to the next node."""
    values = np.asarray(values, dtype=float)
    bad = np.abs(values) < threshold
    flips = np.sign(values[:-1]) * np.sign(values[1:]) < 0
    bad[:-1] |= flips
    bad[1:] |= flips
    return bad


def _dilate(mask, radius):
    out = mask.copy()
    for r in range(1, radius + 1):
        out[r:] |= mask[:-r]
        out[:-r] |= mask[r:]
    return out


def rates_from_eigenvalues(
    traj: EigenvalueTrajectory, threshold=DEFAULT_TOLERANCES.singular
) -> RateReconstruction:
    """Differentiate eigenvalues back into rates.

    ``g+ + g- = -d ln|l3|/dt``, ``g+ - g- = dl*/dt + l* (g+ + g-)`` and
    ``g3 = d ln|l3/l1^2|/dt``. Nodes where ``l1`` or ``l3`` vanish (or change
    sign) are listed in ``singular_times`` and excluded together with the
    two neighbours on each side reached by the stencil.
    """
    grid = traj.grid
    h = grid.step
    singular = singular_nodes(traj.lambda1, threshold) | singular_nodes(traj.lambda3, threshold)
    excluded = _dilate(singular, 2)

    with np.errstate(divide="ignore", invalid="ignore"):
        log3 = np.log(np.abs(traj.lambda3))
        log1 = np.log(np.abs(traj.lambda1))
    log3 = np.where(np.isfinite(log3), log3, 0.0)
    log1 = np.where(np.isfinite(log1), log1, 0.0)

    total = -numerics.derivative(log3, h)
    diff = numerics.derivative(traj.lambda_star, h) + traj.lambda_star * total
    gamma3 = numerics.derivative(log3 - 2.0 * log1, h)
    rates = RateTrajectory(
        grid,
        np.where(excluded, 0.0, 0.5 * (total + diff)),
        np.where(excluded, 0.0, 0.5 * (total - diff)),
        np.where(excluded, 0.0, gamma3),
        valid=~excluded,
    )
    return RateReconstruction(rates, tuple(float(t) for t in grid.points[singular]))


def semigroup_trajectory(gp, gm, g3, grid: TimeGrid) -> EigenvalueTrajectory:
    """Closed-form eigenvalues of ``exp(t L)`` for constant nonnegative rates."""
    if min(gp, gm, g3) < 0:
        raise ValueError("semigroup rates must be nonnegative")
    t = grid.points
    total = gp + gm
    lambda1 = np.exp(-0.5 * t * (total + g3))
    lambda3 = np.exp(-total * t)
    if total > 0:
        lambda_star = (gp - gm) / total * -np.expm1(-total * t)
    else:
        lambda_star = np.zeros_like(t)
    return EigenvalueTrajectory(grid, lambda1, lambda3, lambda_star)


def semigroup_channel(gp, gm, g3, t) -> PhaseCovariantChannel:
    """Single-time version of :func:`semigroup_trajectory`."""
    total = gp + gm
    lambda_star = (gp - gm) / total * -np.expm1(-total * t) if total > 0 else 0.0
    return PhaseCovariantChannel(np.exp(-0.5 * t * (total + g3)), np.exp(-total * t), lambda_star)


def propagator_from_channels(lt: PhaseCovariantChannel, ls: PhaseCovariantChannel,
                             threshold=DEFAULT_TOLERANCES.singular) -> PhaseCovariantChannel:
    """``V`` with ``compose(V, ls) == lt``."""
    if abs(ls.lambda1) < threshold or abs(ls.lambda3) < threshold:
        raise ValueError("non-invertible at s")
    ratio3 = lt.lambda3 / ls.lambda3
    return PhaseCovariantChannel(
        lt.lambda1 / ls.lambda1, ratio3, lt.lambda_star - ls.lambda_star * ratio3
    )


def propagator(traj: EigenvalueTrajectory, t, s, threshold=DEFAULT_TOLERANCES.singular):
    """Propagator ``V(t, s)`` between two grid times, ``t >= s``."""
    if t < s:
        raise ValueError("propagator needs t >= s")
    return propagator_from_channels(traj.channel_at(t), traj.channel_at(s), threshold)


def is_cp_divisible(rates: RateTrajectory, tol=DEFAULT_TOLERANCES.rate) -> DivisibilityReport:
    """Rate-sign criterion: CP-divisible iff every rate is >= -tol on the grid."""
    stacked = rates.stacked()[:, rates.valid]
    times = rates.times[rates.valid]
    excluded = tuple(float(t) for t in rates.times[~rates.valid])
    if times.size == 0:
        return DivisibilityReport(True, float("nan"), "rate-sign", None, excluded)
    node_min = stacked.min(axis=0)
    min_rate = float(node_min.min())
    violating = np.nonzero(node_min < -tol)[0]
    if violating.size:
        return DivisibilityReport(False, min_rate, "rate-sign", float(times[violating[0]]), excluded)
    return DivisibilityReport(True, min_rate, "rate-sign", None, excluded)


def step_propagators(traj: EigenvalueTrajectory, threshold=DEFAULT_TOLERANCES.singular):
    """Parameters of ``V(t_{i+1}, t_i)`` for every step starting at an invertible node.

    Returns ``(start_indices, lambda1, lambda3, lambda_star)`` as arrays.
    """
    l1, l3, ls = traj.lambda1, traj.lambda3, traj.lambda_star
    ok = (np.abs(l1[:-1]) >= threshold) & (np.abs(l3[:-1]) >= threshold)
    idx = np.nonzero(ok)[0]
    ratio3 = l3[idx + 1] / l3[idx]
    return idx, l1[idx + 1] / l1[idx], ratio3, ls[idx + 1] - ls[idx] * ratio3


def cp_divisibility_via_choi(
    traj: EigenvalueTrajectory, tol=DEFAULT_TOLERANCES.cp, threshold=DEFAULT_TOLERANCES.singular
) -> DivisibilityReport:
    """Certify each step propagator through the spectrum of its Choi matrix.

    ``min_rate`` holds the smallest Choi eigenvalue found over all steps.
    """
    idx, p1, p3, ps = step_propagators(traj, threshold)
    times = traj.times
    skipped = np.setdiff1d(np.arange(traj.grid.n_points - 1), idx)
    excluded = tuple(float(times[i]) for i in skipped)
    if idx.size == 0:
        return DivisibilityReport(True, float("nan"), "choi-propagator", None, excluded)
    mins = hermitian4_eigenvalues(choi_batch(p1, p3, ps))[:, 0]
    min_eig = float(mins.min())
    bad = np.nonzero(mins < -tol)[0]
    if bad.size:
        return DivisibilityReport(
            False, min_eig, "choi-propagator", float(times[idx[bad[0]]]), excluded
        )
    return DivisibilityReport(True, min_eig, "choi-propagator", None, excluded)


def subsample_indices(n, limit=COMMUTATIVITY_MAX_SAMPLES):
    return np.unique(np.round(np.linspace(0, n - 1, min(n, limit))).astype(int))


def commutativity_defect_matrix(lambda3, lambda_star):
    """``|l*(t)(1 - l3(s)) - l*(s)(1 - l3(t))|`` for all pairs of samples."""
    one_minus = 1.0 - np.asarray(lambda3, float)
    ls = np.asarray(lambda_star, float)
    return np.abs(np.outer(ls, one_minus) - np.outer(one_minus, ls))


def is_commutative_family(traj: EigenvalueTrajectory, tol=DEFAULT_TOLERANCES.commutative):
    """Pairwise check of ``L(t) L(s) == L(s) L(t)`` on at most 200 subsampled nodes."""
    idx = subsample_indices(traj.grid.n_points)
    defect = float(commutativity_defect_matrix(traj.lambda3[idx], traj.lambda_star[idx]).max())
    return CommutativityCheck(defect <= tol, defect)


def composition_commutator(a: PhaseCovariantChannel, b: PhaseCovariantChannel):
    """``lambda_star`` gap between ``a o b`` and ``b o a`` (other parameters always agree)."""
    return compose(a, b).lambda_star - compose(b, a).lambda_star

