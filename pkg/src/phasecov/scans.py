"""Seeded randomized verification batches.

Each scan draws its cases from one ``numpy`` generator seeded by the
caller, so a given ``(kind, count, seed, grid)`` always reproduces the
same summary.
"""

from dataclasses import dataclass, field

import numpy as np

from .channel import PhaseCovariantChannel, choi_batch, covariance_defect, cp_slacks
from .config import DEFAULT_TOLERANCES
from .dynamics import RateTrajectory, TimeGrid, eigenvalues_from_rates, rates_from_eigenvalues
from .mixtures import random_semigroup_spec, verify_prop2, prop2_identity_sides
from .numerics import interior
from .qubit_algebra import hermitian4_eigenvalues

ROUNDTRIP_TOLERANCE = 1e-6
COVARIANCE_TOLERANCE = 1e-12
CP_SAMPLE_BOX = 1.5


@dataclass
class ScanResult:
    kind: str
    count: int
    seed: int
    passed: int = 0
    metrics: dict = field(default_factory=dict)

    @property
    def failed(self):
        return self.count - self.passed

    @property
    def ok(self):
        return self.failed == 0

    def lines(self):
        out = [f"scan={self.kind}", f"count={self.count}", f"seed={self.seed}",
               f"pass={self.passed}", f"fail={self.failed}"]
        out += [f"{k}={v:.6e}" if isinstance(v, float) else f"{k}={v}" for k, v in self.metrics.items()]
        return out


def random_channel_parameters(rng, count, box=CP_SAMPLE_BOX):
    return rng.uniform(-box, box, size=(count, 3))


def random_hermitian2(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return 0.5 * (a + a.conj().T)


def random_smooth_rates(rng, grid: TimeGrid, max_rate=5.0, max_terms=3):
    """Three rates, each a sum of at most three decaying exponentials bounded by ``max_rate``.

    Amplitudes are positive and sum to at most ``max_rate``; decay constants
    lie in ``[0.5, 3]``.
    """
    t = grid.points
    series = []
    for _ in range(3):
        m = rng.integers(1, max_terms + 1)
        amp = rng.uniform(0.0, 1.0, m)
        amp *= rng.uniform(0.0, max_rate) / amp.sum()
        decay = rng.uniform(0.5, 3.0, m)
        series.append((amp[:, None] * np.exp(-decay[:, None] * t)).sum(axis=0))
    return RateTrajectory(grid, *series)


def roundtrip_error(rates: RateTrajectory):
    """Sup-norm gap between ``rates`` and rates -> eigenvalues -> rates on the stencil interior."""
    back, _ = rates_from_eigenvalues(eigenvalues_from_rates(rates))
    inner = interior(rates.grid.n_points)
    gap = np.abs(back.stacked() - rates.stacked())[:, inner]
    gap = gap[:, back.valid[inner]]
    return float(gap.max()) if gap.size else 0.0


def scan_cp_choi(count, seed, tol=DEFAULT_TOLERANCES.cp):
    rng = np.random.default_rng(seed)
    params = random_channel_parameters(rng, count)
    first, second = cp_slacks(*params.T)
    predicate = (first >= -tol) & (second >= -tol)
    min_eig = hermitian4_eigenvalues(choi_batch(*params.T))[:, 0]
    oracle = min_eig >= -tol
    agree = predicate == oracle
    result = ScanResult("cp-choi", count, seed, int(agree.sum()))
    result.metrics["cp_fraction"] = float(predicate.mean())
    result.metrics["closest_choi_margin"] = float(np.min(np.abs(min_eig)))
    return result


def scan_prop2(count, seed, grid: TimeGrid, tol=DEFAULT_TOLERANCES.rate):
    rng = np.random.default_rng(seed)
    result = ScanResult("prop2", count, seed)
    min_rate = np.inf
    worst_identity = 0.0
    for _ in range(count):
        spec = random_semigroup_spec(rng)
        lhs, rhs = prop2_identity_sides(spec, grid)
        worst_identity = max(worst_identity, float(np.max(np.abs(lhs - rhs))))
        report = verify_prop2(spec, grid, tol)
        min_rate = min(min_rate, report.min_rate)
        result.passed += report.cp_divisible
    result.metrics["min_rate"] = float(min_rate)
    result.metrics["max_identity_gap"] = worst_identity
    return result


def scan_roundtrip(count, seed, grid: TimeGrid, tol=ROUNDTRIP_TOLERANCE):
    rng = np.random.default_rng(seed)
    result = ScanResult("roundtrip", count, seed)
    worst = 0.0
    for _ in range(count):
        err = roundtrip_error(random_smooth_rates(rng, grid))
        worst = max(worst, err)
        result.passed += err <= tol
    result.metrics["max_error"] = worst
    return result


def scan_covariance(count, seed, tol=COVARIANCE_TOLERANCE):
    rng = np.random.default_rng(seed)
    result = ScanResult("covariance", count, seed)
    worst = 0.0
    for _ in range(count):
        ch = PhaseCovariantChannel(*rng.uniform(-1.0, 1.0, 3))
        d = covariance_defect(ch, rng.uniform(-np.pi, np.pi), random_hermitian2(rng))
        worst = max(worst, d)
        result.passed += d <= tol
    result.metrics["max_defect"] = worst
    return result


SCAN_KINDS = ("cp-choi", "prop2", "roundtrip", "covariance")


def run_scan(kind, count, seed, grid: TimeGrid, tolerances=DEFAULT_TOLERANCES):
    if count < 1:
        raise ValueError("count must be at least 1")
    if kind == "cp-choi":
        return scan_cp_choi(count, seed, tolerances.cp)
    if kind == "prop2":
        return scan_prop2(count, seed, grid, tolerances.rate)
    if kind == "roundtrip":
        return scan_roundtrip(count, seed, grid)
    if kind == "covariance":
        return scan_covariance(count, seed)
    raise ValueError(f"unknown scan kind {kind!r}; choose from {', '.join(SCAN_KINDS)}")
