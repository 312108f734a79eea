"""Convex combinations of phase-covariant dynamical maps.

Two families are covered:

* mixtures of the three Markovian semigroups generated by ``2 w1 L+``,
  ``2 w2 L-`` and ``2 w3 L3`` (amplitude damping, inverse amplitude
  damping, pure dephasing), for which eigenvalues and rates are closed
  form;
* mixtures ``x1 L+(eta1) + x2 L-(eta2) + x3 L3(eta3)`` driven by arbitrary
  sampled functions ``eta_k(t)`` with ``|eta_k| <= 1``.

Every claim about these families (unitality restoration, CP-divisibility
of semigroup mixtures, invertibility, impossibility of recovering a
semigroup from three components, commutativity) has a checker here.
"""

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import numerics
from .channel import check_probability_vector
from .config import DEFAULT_TOLERANCES
from .dynamics import (
    DivisibilityReport,
    EigenvalueTrajectory,
    RateReconstruction,
    RateTrajectory,
    TimeGrid,
    is_commutative_family,
    is_cp_divisible,
    semigroup_trajectory,
    singular_nodes,
)


class InternalConsistencyError(RuntimeError):
    """Two closed forms that must agree do not; this is a bug, not a physics result."""


def _probabilities(x, tol=DEFAULT_TOLERANCES.weights):
    x = np.asarray(x, dtype=float)
    if x.shape != (3,):
        raise ValueError(f"expected three mixing weights, got {x.tolist()}")
    return check_probability_vector(x, tol)


@dataclass(frozen=True, eq=False)
class SemigroupMixtureSpec:
    """Weights ``x`` and semigroup rates ``w`` of a three-semigroup mixture."""

    x: np.ndarray
    w: np.ndarray

    def __post_init__(self):
        x = _probabilities(self.x)
        w = np.asarray(self.w, dtype=float)
        if w.shape != (3,) or not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError(f"rates must be three nonnegative numbers, got {w.tolist()}")
        for name, arr in (("x", x), ("w", w)):
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)


@dataclass(frozen=True, eq=False)
class EtaFunction:
    """A sampled ``eta(t)``, optionally tagged with the closed form it came from.

    Tagged forms: ``"exp"`` is ``exp(-w t)``, ``"exp_cos"`` is
    ``exp(-w t) cos(omega t)``.
    """

    grid: TimeGrid
    values: np.ndarray
    form: Optional[str] = None
    w: Optional[float] = None
    omega: float = 1.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float).copy()
        if values.shape != (self.grid.n_points,):
            raise ValueError(f"eta needs {self.grid.n_points} samples, got shape {values.shape}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def exp(cls, w, grid):
        return cls(grid, np.exp(-w * grid.points), "exp", float(w))

    @classmethod
    def exp_cos(cls, w, grid, omega=1.0):
        t = grid.points
        return cls(grid, np.exp(-w * t) * np.cos(omega * t), "exp_cos", float(w), float(omega))

    @classmethod
    def constant(cls, value, grid):
        return cls(grid, np.full(grid.n_points, float(value)))

    def derivative(self):
        t = self.grid.points
        if self.form == "exp":
            return -self.w * self.values
        if self.form == "exp_cos":
            return -np.exp(-self.w * t) * (
                self.w * np.cos(self.omega * t) + self.omega * np.sin(self.omega * t)
            )
        return numerics.derivative(self.values, self.grid.step)


def _eta(values, grid):
    return values if isinstance(values, EtaFunction) else EtaFunction(grid, values)


@dataclass(frozen=True, eq=False)
class EtaFamilyMixtureSpec:
    x: np.ndarray
    eta: tuple
    grid: TimeGrid
    tol: float = 1e-10

    def __post_init__(self):
        x = _probabilities(self.x).copy()
        x.setflags(write=False)
        object.__setattr__(self, "x", x)
        if len(self.eta) != 3:
            raise ValueError("need exactly three eta functions")
        etas = tuple(_eta(e, self.grid) for e in self.eta)
        for k, e in enumerate(etas, start=1):
            if e.grid != self.grid:
                raise ValueError(f"eta{k} lives on a different grid")
            if np.max(np.abs(e.values)) > 1.0 + self.tol:
                raise ValueError(f"|eta{k}| exceeds 1; component is not completely positive")
            if abs(e.values[0] - 1.0) > self.tol:
                raise ValueError(f"eta{k}(0) must equal 1")
        object.__setattr__(self, "eta", etas)


class InvertibilityReport(NamedTuple):
    invertible: bool
    crossings: tuple  # (eigenvalue name, t_lo, t_hi) brackets


class CommutativityFit(NamedTuple):
    a: float
    max_residual: float
    commutative: bool
    lambda_commutative: Optional[bool] = None
    lambda_defect: Optional[float] = None


@dataclass(frozen=True, eq=False)
class RecoveryVerdict:
    feasible: bool
    eta_solutions: Optional[tuple] = None
    failure_reason: Optional[str] = None
    analytic_feasible: bool = True
    numeric_feasible: bool = True
    notes: tuple = field(default_factory=tuple)


# ---------------------------------------------------------------------------
# Semigroup mixtures
# ---------------------------------------------------------------------------


def semigroup_mixture_eigenvalues(spec: SemigroupMixtureSpec, grid: TimeGrid) -> EigenvalueTrajectory:
    t = grid.points
    (x1, x2, x3), (w1, w2, w3) = spec.x, spec.w
    e1, e2 = np.exp(-2 * w1 * t), np.exp(-2 * w2 * t)
    lambda1 = x1 * np.exp(-w1 * t) + x2 * np.exp(-w2 * t) + x3 * np.exp(-w3 * t)
    lambda3 = x1 * e1 + x2 * e2 + x3
    lambda_star = -x1 * np.expm1(-2 * w1 * t) + x2 * np.expm1(-2 * w2 * t)
    return EigenvalueTrajectory(grid, lambda1, lambda3, lambda_star)


def _gamma3_numerator_terms(spec, t):
    """The two bracketed sums of the gamma3 numerator, per node.

    ``first = sum_{mu,nu} x_mu x_nu e^{-(w_mu + 2 w_nu) t} (w_mu - w_nu)``
    ``second = sum_mu x_mu e^{-w_mu t} x3 [w_mu (1 - e^{-2 w3 t}) + w3 e^{-2 w3 t}]``
    """
    x, w = spec.x, spec.w
    single = np.exp(-np.outer(t, w))  # e^{-w_mu t}, shape (n, 3)
    double = single**2  # e^{-2 w_nu t}
    wdiff = w[:, None] - w[None, :]
    first = np.einsum("m,n,tm,tn,mn->t", x, x, single, double, wdiff)
    e3 = double[:, 2]
    w3 = w[2]
    bracket = w[None, :] * (1.0 - e3)[:, None] + (w3 * e3)[:, None]
    second = x[2] * np.einsum("m,tm,tm->t", x, single, bracket)
    return first, second


def semigroup_mixture_rates(spec: SemigroupMixtureSpec, grid: TimeGrid) -> RateTrajectory:
    """Closed-form decoherence rates of a three-semigroup mixture."""
    t = grid.points
    (x1, x2, x3), (w1, w2, _) = spec.x, spec.w
    e1, e2 = np.exp(-2 * w1 * t), np.exp(-2 * w2 * t)
    lambda3 = x1 * e1 + x2 * e2 + x3
    gamma_plus = 2 * x1 / lambda3 * (w1 * e1 * (1 + x2 * np.expm1(-2 * w2 * t)) - x2 * w2 * e2 * np.expm1(-2 * w1 * t))
    gamma_minus = 2 * x2 / lambda3 * (w2 * e2 * (1 + x1 * np.expm1(-2 * w1 * t)) - x1 * w1 * e1 * np.expm1(-2 * w2 * t))
    first, second = _gamma3_numerator_terms(spec, t)
    lambda1 = np.exp(-np.outer(t, spec.w)) @ spec.x
    # denominator is lambda1 * lambda3; the dephasing component keeps lambda3 at 1
    gamma3 = 2 * (first + second) / (lambda1 * lambda3)
    return RateTrajectory(grid, gamma_plus, gamma_minus, gamma3)


def prop2_identity_sides(spec: SemigroupMixtureSpec, grid: TimeGrid):
    """Both sides of the pair-sum rewriting used to show ``gamma3 >= 0``.

    Left: ``sum_{mu,nu} x_mu x_nu e^{-(w_mu + 2 w_nu) t} (w_mu - w_nu)``.
    Right: ``sum_{a>b} x_a x_b e^{-(w_a + w_b) t} (w_b - w_a)(e^{-w_a t} - e^{-w_b t})``,
    a sum of nonnegative terms.
    """
    t = grid.points
    x, w = spec.x, spec.w
    lhs, _ = _gamma3_numerator_terms(spec, t)
    rhs = np.zeros_like(t)
    for a in range(3):
        for b in range(a):
            rhs += (
                x[a] * x[b] * np.exp(-(w[a] + w[b]) * t) * (w[b] - w[a])
                * (np.exp(-w[a] * t) - np.exp(-w[b] * t))
            )
    return lhs, rhs


def verify_prop2(spec: SemigroupMixtureSpec, grid: TimeGrid, tol=DEFAULT_TOLERANCES.rate,
                 identity_tol=DEFAULT_TOLERANCES.identity) -> DivisibilityReport:
    """Check that a semigroup mixture is CP-divisible.

    Raises:
        InternalConsistencyError: if the pair-sum identity fails at some node.
    """
    lhs, rhs = prop2_identity_sides(spec, grid)
    gap = np.abs(lhs - rhs)
    if np.any(gap > identity_tol):
        i = int(np.argmax(gap))
        raise InternalConsistencyError(
            f"pair-sum identity off by {gap[i]:.3e} at t={grid.points[i]:.6g}"
        )
    return is_cp_divisible(semigroup_mixture_rates(spec, grid), tol)


def random_semigroup_spec(rng: np.random.Generator, w_max=5.0) -> SemigroupMixtureSpec:
    """Weights uniform on the simplex, rates uniform on ``[0, w_max]^3``."""
    x = rng.dirichlet(np.ones(3))
    x = x / x.sum()
    return SemigroupMixtureSpec(x, rng.uniform(0.0, w_max, 3))


# ---------------------------------------------------------------------------
# Generic mixtures
# ---------------------------------------------------------------------------


def mix_trajectories(trajectories: Sequence[EigenvalueTrajectory], weights) -> EigenvalueTrajectory:
    """Convex combination of dynamical maps sampled on a common grid."""
    weights = check_probability_vector(weights)
    if len(trajectories) != weights.size or not trajectories:
        raise ValueError("need one weight per trajectory")
    grid = trajectories[0].grid
    if any(tr.grid != grid for tr in trajectories):
        raise ValueError("trajectories live on different grids")
    stack = np.array([[tr.lambda1, tr.lambda3, tr.lambda_star] for tr in trajectories])
    mixed = np.tensordot(weights, stack, axes=1)
    return EigenvalueTrajectory(grid, *mixed)


def mirrored_pair(gp, gm, g3, grid: TimeGrid):
    """Semigroups with rates ``(gp, gm, g3)`` and ``(gm, gp, g3)`` and their equal mixture.

    The two components share ``lambda1`` and ``lambda3`` and carry opposite
    ``lambda_star``, so the mixture is unital although neither component is.
    """
    a = semigroup_trajectory(gp, gm, g3, grid)
    b = semigroup_trajectory(gm, gp, g3, grid)
    return a, b, mix_trajectories([a, b], [0.5, 0.5])


def unitality_defect(traj: EigenvalueTrajectory) -> float:
    return float(np.max(np.abs(traj.lambda_star)))


# ---------------------------------------------------------------------------
# eta families
# ---------------------------------------------------------------------------


def eta_component_trajectory(k, eta: EtaFunction) -> EigenvalueTrajectory:
    """Eigenvalues of a single component map: ``k`` is ``"+"``, ``"-"`` or ``"3"``."""
    v = eta.values
    if k == "+":
        return EigenvalueTrajectory(eta.grid, v, v**2, 1 - v**2)
    if k == "-":
        return EigenvalueTrajectory(eta.grid, v, v**2, v**2 - 1)
    if k == "3":
        ones = np.ones_like(v)
        return EigenvalueTrajectory(eta.grid, v, ones, np.zeros_like(v))
    raise ValueError(f"unknown component {k!r}")


def eta_mixture_eigenvalues(spec: EtaFamilyMixtureSpec) -> EigenvalueTrajectory:
    x1, x2, x3 = spec.x
    n1, n2, n3 = (e.values for e in spec.eta)
    lambda1 = x1 * n1 + x2 * n2 + x3 * n3
    lambda3 = x1 * n1**2 + x2 * n2**2 + x3
    lambda_star = x1 * (1 - n1**2) - x2 * (1 - n2**2)
    return EigenvalueTrajectory(spec.grid, lambda1, lambda3, lambda_star)


def semigroup_as_eta_spec(spec: SemigroupMixtureSpec, grid: TimeGrid) -> EtaFamilyMixtureSpec:
    return EtaFamilyMixtureSpec(spec.x, tuple(EtaFunction.exp(w, grid) for w in spec.w), grid)


def _crossing_brackets(values, times, tol):
    n = values.size
    intervals = []
    for i in np.nonzero(np.abs(values) <= tol)[0]:
        intervals.append((max(i - 1, 0), min(i + 1, n - 1)))
    for i in np.nonzero(np.sign(values[:-1]) * np.sign(values[1:]) < 0)[0]:
        intervals.append((i, i + 1))
    intervals.sort()
    merged = []
    for lo, hi in intervals:
        if merged and lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(hi, merged[-1][1]))
        else:
            merged.append((lo, hi))
    return [(float(times[lo]), float(times[hi])) for lo, hi in merged]


def invertibility_report(traj: EigenvalueTrajectory, tol=DEFAULT_TOLERANCES.singular) -> InvertibilityReport:
    """Invertible iff ``lambda1 > tol`` and ``lambda3 > tol`` at every node.

    Zero crossings (sign changes between nodes, or nodes within ``tol`` of
    zero) are reported as ``(name, t_lo, t_hi)`` brackets.
    """
    t = traj.times
    crossings = []
    for name in ("lambda1", "lambda3"):
        values = getattr(traj, name)
        crossings += [(name, lo, hi) for lo, hi in _crossing_brackets(values, t, tol)]
    invertible = bool(np.all(traj.lambda1 > tol) and np.all(traj.lambda3 > tol))
    return InvertibilityReport(invertible, tuple(crossings))


def equal_eta_eigenvalues(x, eta: EtaFunction) -> EigenvalueTrajectory:
    x1, x2, x3 = _probabilities(x)
    v = eta.values
    return EigenvalueTrajectory(eta.grid, v, x3 + (1 - x3) * v**2, (x1 - x2) * (1 - v**2))


def equal_eta_rates(x, eta, eta_dot=None, grid: Optional[TimeGrid] = None,
                    threshold=DEFAULT_TOLERANCES.singular) -> RateReconstruction:
    """Rates of the mixture in which all three components share one ``eta``.

    ``eta_dot`` defaults to the analytic derivative of a tagged
    :class:`EtaFunction`, otherwise to the finite-difference stencil.
    Nodes where ``eta`` vanishes are excluded and listed.
    """
    x1, x2, x3 = _probabilities(x)
    if grid is None:
        if not isinstance(eta, EtaFunction):
            raise ValueError("a grid is required for raw eta samples")
        grid = eta.grid
    eta = _eta(eta, grid)
    v = eta.values
    vdot = eta.derivative() if eta_dot is None else np.asarray(eta_dot, dtype=float)
    denom = x3 + (1 - x3) * v**2
    singular = singular_nodes(v, threshold) | (np.abs(denom) < threshold)
    with np.errstate(divide="ignore", invalid="ignore"):
        gamma_plus = -2 * x1 * vdot * v / denom
        gamma_minus = -2 * x2 * vdot * v / denom
        gamma3 = -(vdot / v) * 2 * x3 / denom
    rates = RateTrajectory(grid, gamma_plus, gamma_minus, gamma3, valid=~singular)
    return RateReconstruction(rates, tuple(float(t) for t in grid.points[singular]))


def commutativity_fit(eta1, eta2, grid: TimeGrid, tol=DEFAULT_TOLERANCES.commutative,
                      x=None) -> CommutativityFit:
    """Fit ``eta2^2 = a eta1^2 + 1 - a`` by least squares.

    ``a`` minimises ``sum (eta2^2 - 1 - a (eta1^2 - 1))^2``. When the weights
    ``x`` are supplied, the eigenvalue criterion is evaluated on the mixture
    as an independent cross-check.
    """
    n1 = _eta(eta1, grid).values
    n2 = _eta(eta2, grid).values
    u = n1**2 - 1.0
    v = n2**2 - 1.0
    suu = float(u @ u)
    if suu <= 1e-24 * u.size:
        a = float("nan")
        residual = float(np.max(np.abs(v)))
    else:
        a = float(u @ v) / suu
        residual = float(np.max(np.abs(n2**2 - a * n1**2 - (1.0 - a))))
    lam_ok = lam_defect = None
    if x is not None:
        ones = EtaFunction.constant(1.0, grid)
        spec = EtaFamilyMixtureSpec(x, (_eta(eta1, grid), _eta(eta2, grid), ones), grid)
        lam_ok, lam_defect = is_commutative_family(eta_mixture_eigenvalues(spec), tol)
    return CommutativityFit(a, residual, residual <= tol, lam_ok, lam_defect)


# ---------------------------------------------------------------------------
# Recovering a semigroup from a mixture
# ---------------------------------------------------------------------------

WEIGHT_REASON = "x1+x2 ≥ 1 forces x3 = 0"


def _analytic_recovery(x, gp, gm, g3, tol):
    """Decide feasibility over all t >= 0 from the weights and target rates alone."""
    x1, x2, x3 = x
    if x3 > 0:
        # real roots for every t need x1 >= g+/(g+ + g-) and x2 >= g-/(g+ + g-), summing to 1
        return False, WEIGHT_REASON
    if x1 == 0 and gp > 0:
        return False, "x1 = 0 cannot carry gamma_plus > 0"
    if x2 == 0 and gm > 0:
        return False, "x2 = 0 cannot carry gamma_minus > 0"
    if abs(x1 * gm - x2 * gp) > tol:
        return False, "x1*gamma_minus must equal x2*gamma_plus (eta not real as t -> inf)"
    if g3 > 0:
        return False, "a two-component mixture cannot carry gamma3 > 0"
    return True, None


def semigroup_recovery(x, target, grid: TimeGrid, tolerances=DEFAULT_TOLERANCES,
                       balance_tol=1e-12) -> RecoveryVerdict:
    """Try to write the semigroup with rates ``target`` as an eta-family mixture with weights ``x``.

    The verdict is reached twice: analytically from the weights (valid for
    all ``t >= 0``) and numerically by solving for ``eta_k`` on ``grid``.
    It is feasible only when both agree on feasibility.
    """
    x = _probabilities(x)
    gp, gm, g3 = (float(g) for g in target)
    if min(gp, gm, g3) < 0:
        raise ValueError("target rates must be nonnegative")
    if gp + gm <= 0:
        raise ValueError("target needs gamma_plus + gamma_minus > 0")

    analytic_ok, analytic_reason = _analytic_recovery(x, gp, gm, g3, balance_tol)

    t = grid.points
    total = gp + gm
    target_traj = semigroup_trajectory(gp, gm, g3, grid)
    x1, x2, x3 = x

    numeric_reason = None
    etas = []
    # radicand 1 - c (1 - e^{-Gt}) written as (1 - c) + c e^{-Gt}, with 1 - c taken
    # from the weight imbalance so a balanced target keeps an exact zero offset
    imbalance = x1 * gm - x2 * gp
    for xk, gk, offset, label in (
        (x1, gp, imbalance - x3 * gp, "eta1"),
        (x2, gm, -imbalance - x3 * gm, "eta2"),
    ):
        if xk == 0:
            if gk > 0:
                numeric_reason = numeric_reason or f"{label} would need division by a zero weight"
            etas.append(np.ones_like(t))
            continue
        scale = xk * total
        radicand = offset / scale + gk / scale * np.exp(-total * t)
        neg = np.nonzero(radicand < -1e-12)[0]
        if neg.size and numeric_reason is None:
            numeric_reason = f"eta not real at t={t[neg[0]]:.6g} ({label})"
        etas.append(np.sqrt(np.clip(radicand, 0.0, None)))
    n1, n2 = etas
    partial = x1 * n1 + x2 * n2
    if x3 > 0:
        n3 = (target_traj.lambda1 - partial) / x3
        over = np.nonzero(np.abs(n3) > tolerances.recovery_eta)[0]
        if over.size and numeric_reason is None:
            numeric_reason = f"|eta3| exceeds 1 at t={t[over[0]]:.6g}"
    else:
        n3 = np.ones_like(t)
        gap = np.abs(partial - target_traj.lambda1)
        bad = np.nonzero(gap > tolerances.recovery_match)[0]
        if bad.size and numeric_reason is None:
            numeric_reason = f"lambda1 mismatch at t={t[bad[0]]:.6g} would need x3 > 0"
    numeric_ok = numeric_reason is None

    feasible = analytic_ok and numeric_ok
    notes = ()
    if analytic_ok != numeric_ok:
        notes = (f"analytic and grid verdicts disagree on [0, {grid.t_max:g}]",)
    if not feasible:
        return RecoveryVerdict(False, None, analytic_reason or numeric_reason,
                               analytic_ok, numeric_ok, notes)

    solutions = tuple(EtaFunction(grid, v) for v in (n1, n2, n3))
    mixed = eta_mixture_eigenvalues(EtaFamilyMixtureSpec(x, solutions, grid))
    err = max(
        np.max(np.abs(mixed.lambda1 - target_traj.lambda1)),
        np.max(np.abs(mixed.lambda3 - target_traj.lambda3)),
        np.max(np.abs(mixed.lambda_star - target_traj.lambda_star)),
    )
    if err > tolerances.recovery_match:
        raise InternalConsistencyError(f"recovered etas miss the target by {err:.3e}")
    return RecoveryVerdict(True, solutions, None, True, True, notes)


# ---------------------------------------------------------------------------
# Named examples
# ---------------------------------------------------------------------------


def exmsg_spec(w=1.0, x=(0.3, 0.7, 0.0)) -> SemigroupMixtureSpec:
    """Equal-rate mixture of amplitude and inverse amplitude damping (generalized amplitude damping)."""
    return SemigroupMixtureSpec(x, (w, w, w))


def example_2_spec(grid: TimeGrid) -> EtaFamilyMixtureSpec:
    """Equal weights, ``eta1 = e^{-t} cos t`` and ``eta2 = eta3 = e^{-t}``.

    The cosine sits in ``eta1``, i.e. in the amplitude-damping-type
    component, which is therefore the non-invertible one (at
    ``t = (2k+1) pi / 2``); the mixture itself stays invertible.
    """
    return EtaFamilyMixtureSpec(
        (1 / 3, 1 / 3, 1 / 3),
        (EtaFunction.exp_cos(1.0, grid), EtaFunction.exp(1.0, grid), EtaFunction.exp(1.0, grid)),
        grid,
    )
