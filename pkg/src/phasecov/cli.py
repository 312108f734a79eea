"""Command-line front end.

Exit codes: 0 for success or an affirmative verdict, 1 for a negative
verdict, 2 for usage and input errors.
"""

import argparse
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import formats
from .channel import PhaseCovariantChannel, choi_min_eigenvalue, is_completely_positive
from .config import DEFAULT_POINTS, DEFAULT_SEED, DEFAULT_T_MAX, Tolerances
from .dynamics import (
    EigenvalueTrajectory,
    RateTrajectory,
    TimeGrid,
    cp_divisibility_via_choi,
    eigenvalues_from_rates,
    is_commutative_family,
    is_cp_divisible,
    rates_from_eigenvalues,
    semigroup_trajectory,
)
from .mixtures import (
    EtaFamilyMixtureSpec,
    InternalConsistencyError,
    SemigroupMixtureSpec,
    commutativity_fit,
    eta_mixture_eigenvalues,
    example_2_spec,
    exmsg_spec,
    invertibility_report,
    mirrored_pair,
    semigroup_mixture_eigenvalues,
    semigroup_mixture_rates,
    semigroup_recovery,
    verify_prop2,
)
from .scans import SCAN_KINDS, run_scan

SEMIGROUP_PRESETS = {
    "amplitude-damping": (1.0, 0.0, 0.0),
    "inverse-amplitude-damping": (0.0, 1.0, 0.0),
    "pure-dephasing": (0.0, 0.0, 1.0),
}
PRESETS = tuple(SEMIGROUP_PRESETS) + ("example-1", "example-2", "exmsg")


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    subcommand: str
    t_max: float = DEFAULT_T_MAX
    n_points: int = DEFAULT_POINTS
    tol: Optional[float] = None
    seed: int = DEFAULT_SEED
    input: Optional[str] = None
    output: Optional[str] = None
    tolerances: Tolerances = field(default_factory=Tolerances)

    def __post_init__(self):
        if not (self.t_max > 0 and np.isfinite(self.t_max)):
            raise UsageError(f"--t-max must be positive, got {self.t_max}")
        if self.n_points < 3 or self.n_points % 2 == 0:
            raise UsageError(f"--points must be odd and >= 3, got {self.n_points}")
        if self.tol is not None and not self.tol >= 0:
            raise UsageError(f"--tol must be nonnegative, got {self.tol}")

    @property
    def grid(self):
        return TimeGrid(self.t_max, self.n_points)

    def tolerance(self, name):
        """The ``--tol`` override if given, else the named default."""
        return self.tol if self.tol is not None else getattr(self.tolerances, name)


def _load_config_file(path):
    try:
        obj = formats.parse_spec_text(Path(path).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read config: {exc}") from None
    except formats.FormatError as exc:
        raise UsageError(f"bad config file: {exc}") from None
    known = {"t_max", "points", "tol", "seed", "tolerances"}
    unknown = set(obj) - known
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return obj


def build_config(args) -> RunConfig:
    """Merge defaults, the ``--config`` file and command-line flags (flags win)."""
    values = {}
    tolerances = Tolerances()
    if args.config:
        file_values = _load_config_file(args.config)
        for key, target in (("t_max", "t_max"), ("points", "n_points"), ("tol", "tol"), ("seed", "seed")):
            if key in file_values:
                values[target] = file_values[key]
        if "tolerances" in file_values:
            try:
                tolerances = tolerances.with_overrides(**file_values["tolerances"])
            except TypeError as exc:
                raise UsageError(f"bad tolerances in config: {exc}") from None
    for flag, target in (("t_max", "t_max"), ("points", "n_points"), ("tol", "tol"), ("seed", "seed")):
        value = getattr(args, flag, None)
        if value is not None:
            values[target] = value
    try:
        values = {
            k: (int(v) if k in ("n_points", "seed") else float(v)) for k, v in values.items()
        }
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad numeric setting: {exc}") from None
    return RunConfig(
        args.command,
        input=getattr(args, "input", None),
        output=args.output,
        tolerances=tolerances,
        **values,
    )


def _bool(value):
    return "true" if value else "false"


class _Output:
    """Writes to ``--output`` when given, otherwise to stdout."""

    def __init__(self, path):
        self.path = path
        self.stream = None

    def __enter__(self):
        self.stream = open(self.path, "w", newline="") if self.path else sys.stdout
        return self.stream

    def __exit__(self, *exc):
        if self.path:
            self.stream.close()
        return False


def _read_text(path):
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None


def _load_spec(path, grid):
    try:
        return formats.load_mixture_spec(_read_text(path), grid, Path(path).parent)
    except formats.FormatError as exc:
        raise UsageError(f"{path}: {exc}") from None


def _read_trajectory(path):
    try:
        return formats.read_trajectory_csv(_read_text(path))
    except (formats.FormatError, ValueError) as exc:
        raise UsageError(f"{path}: {exc}") from None


def preset_dynamics(name, grid):
    """Eigenvalues and, when known in closed form, rates of a named preset."""
    if name in SEMIGROUP_PRESETS:
        gp, gm, g3 = SEMIGROUP_PRESETS[name]
        return semigroup_trajectory(gp, gm, g3, grid), RateTrajectory.constant(gp, gm, g3, grid)
    if name == "example-1":
        _, _, mixed = mirrored_pair(1.0, 0.0, 0.0, grid)
        spec = SemigroupMixtureSpec((0.5, 0.5, 0.0), (0.5, 0.5, 0.0))
        return mixed, semigroup_mixture_rates(spec, grid)
    if name == "example-2":
        return eta_mixture_eigenvalues(example_2_spec(grid)), None
    if name == "exmsg":
        spec = exmsg_spec()
        return semigroup_mixture_eigenvalues(spec, grid), semigroup_mixture_rates(spec, grid)
    raise UsageError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_check_cp(args, cfg):
    ch = PhaseCovariantChannel(args.lambda1, args.lambda3, args.lambda_star)
    report = is_completely_positive(ch, cfg.tolerance("cp"))
    min_eig = choi_min_eigenvalue(ch)
    lines = [
        f"completely_positive={_bool(report.completely_positive)}",
        f"slack_linear={formats.format_float(report.first_slack)}",
        f"slack_quadratic={formats.format_float(report.second_slack)}",
        f"choi_min_eigenvalue={formats.format_float(min_eig)}",
    ]
    with _Output(cfg.output) as out:
        out.write("\n".join(lines) + "\n")
    return 0 if report.completely_positive else 1


def _source_count(args, names):
    return sum(getattr(args, n, None) is not None for n in names)


def cmd_evolve(args, cfg):
    grid = cfg.grid
    if _source_count(args, ("preset", "rates", "input")) != 1:
        raise UsageError("evolve needs exactly one of --preset, --rates, --input")
    if args.preset:
        traj, _ = preset_dynamics(args.preset, grid)
    elif args.rates:
        if min(args.rates) < 0:
            raise UsageError("constant rates must be nonnegative")
        traj = semigroup_trajectory(*args.rates, grid)
    else:
        rates = _read_trajectory(args.input)
        if not isinstance(rates, RateTrajectory):
            raise UsageError("evolve --input expects a rate CSV")
        if rates.grid.n_points % 2 == 0:
            raise UsageError("rate CSV needs an odd number of rows for Simpson quadrature")
        traj = eigenvalues_from_rates(rates)
    with _Output(cfg.output) as out:
        formats.write_eigenvalue_csv(out, traj)
    return 0


def cmd_rates(args, cfg):
    if _source_count(args, ("preset", "input")) != 1:
        raise UsageError("rates needs exactly one of --preset, --input")
    if args.preset:
        traj, _ = preset_dynamics(args.preset, cfg.grid)
    else:
        traj = _read_trajectory(args.input)
        if not isinstance(traj, EigenvalueTrajectory):
            raise UsageError("rates --input expects an eigenvalue CSV")
    rates, singular = rates_from_eigenvalues(traj, cfg.tolerances.singular)
    with _Output(cfg.output) as out:
        formats.write_rate_csv(out, rates)
    if singular:
        print("singular_times=" + ";".join(formats.format_float(t) for t in singular), file=sys.stderr)
    return 0


def cmd_mix_semigroups(args, cfg):
    grid = cfg.grid
    if (args.spec is None) == (args.preset is None):
        raise UsageError("mix-semigroups needs a spec file or --preset exmsg")
    if args.preset:
        if args.preset != "exmsg":
            raise UsageError("mix-semigroups only knows the 'exmsg' preset")
        spec = exmsg_spec()
    else:
        spec = _load_spec(args.spec, grid)
        if not isinstance(spec, SemigroupMixtureSpec):
            raise UsageError("mix-semigroups needs a spec with 'rates'")
    traj = semigroup_mixture_eigenvalues(spec, grid)
    rates = semigroup_mixture_rates(spec, grid)
    try:
        report = verify_prop2(spec, grid, cfg.tolerance("rate"), cfg.tolerances.identity)
    except InternalConsistencyError as exc:
        print(f"internal consistency failure: {exc}", file=sys.stderr)
        return 1
    header = formats.EIGENVALUE_HEADER + formats.RATE_HEADER[1:]
    columns = [traj.times, traj.lambda1, traj.lambda3, traj.lambda_star,
               rates.gamma_plus, rates.gamma_minus, rates.gamma3]
    summary = f"cp_divisible={_bool(report.cp_divisible)},min_rate={formats.format_float(report.min_rate)}"
    with _Output(cfg.output) as out:
        formats.write_rows(out, header, columns)
        out.write(summary + "\n")
    if cfg.output:
        print(summary)
    return 0 if report.cp_divisible else 1


def _eta_spec_from_args(args, cfg):
    if (args.spec is None) == (args.preset is None):
        raise UsageError("needs a spec file or --preset example-2")
    if args.preset:
        if args.preset != "example-2":
            raise UsageError("only the 'example-2' preset is an eta family")
        return example_2_spec(cfg.grid)
    spec = _load_spec(args.spec, cfg.grid)
    if not isinstance(spec, EtaFamilyMixtureSpec):
        raise UsageError("needs a spec with 'eta'")
    return spec


def cmd_mix_eta(args, cfg):
    spec = _eta_spec_from_args(args, cfg)
    traj = eta_mixture_eigenvalues(spec)
    inv = invertibility_report(traj, cfg.tolerances.singular)
    comm_ok, defect = is_commutative_family(traj, cfg.tolerance("commutative"))
    summary = (
        f"invertible={_bool(inv.invertible)},zero_crossings={len(inv.crossings)},"
        f"commutative={_bool(comm_ok)},max_commutativity_defect={formats.format_float(defect)}"
    )
    with _Output(cfg.output) as out:
        formats.write_eigenvalue_csv(out, traj)
        out.write(summary + "\n")
    if cfg.output:
        print(summary)
    return 0


def _report_lines(report):
    lines = [
        f"method={report.method}",
        f"cp_divisible={_bool(report.cp_divisible)}",
        f"min_value={formats.format_float(report.min_rate)}",
    ]
    if report.first_violation_time is not None:
        lines.append(f"first_violation_time={formats.format_float(report.first_violation_time)}")
    if report.excluded_times:
        lines.append(f"excluded_points={len(report.excluded_times)}")
    return lines


def cmd_divisibility(args, cfg):
    grid = cfg.grid
    if _source_count(args, ("preset", "input", "spec")) != 1:
        raise UsageError("divisibility needs exactly one of --preset, --input, --spec")
    traj = rates = None
    if args.preset:
        traj, rates = preset_dynamics(args.preset, grid)
    elif args.spec:
        spec = _load_spec(args.spec, grid)
        if isinstance(spec, SemigroupMixtureSpec):
            traj, rates = semigroup_mixture_eigenvalues(spec, grid), semigroup_mixture_rates(spec, grid)
        else:
            traj = eta_mixture_eigenvalues(spec)
    else:
        loaded = _read_trajectory(args.input)
        if isinstance(loaded, RateTrajectory):
            rates = loaded
            if loaded.grid.n_points % 2 == 1:
                traj = eigenvalues_from_rates(loaded)
        else:
            traj = loaded
    if rates is None:
        rates, _ = rates_from_eigenvalues(traj, cfg.tolerances.singular)
    reports = [is_cp_divisible(rates, cfg.tolerance("rate"))]
    if traj is not None:
        reports.append(cp_divisibility_via_choi(traj, cfg.tolerance("cp"), cfg.tolerances.singular))
    verdict = all(r.cp_divisible for r in reports)
    lines = []
    for r in reports:
        lines += _report_lines(r)
    lines.append(f"verdict={'cp-divisible' if verdict else 'not-cp-divisible'}")
    if len({r.cp_divisible for r in reports}) > 1:
        lines.append("warning=methods disagree")
    with _Output(cfg.output) as out:
        out.write("\n".join(lines) + "\n")
    return 0 if verdict else 1


def cmd_commutativity(args, cfg):
    tol = cfg.tolerance("commutative")
    if (args.spec is None) == (args.preset is None):
        raise UsageError("commutativity needs a spec file or --preset")
    if args.spec is not None:
        spec = _load_spec(args.spec, cfg.grid)
    elif args.preset == "example-2":
        spec = example_2_spec(cfg.grid)
    else:
        spec = None

    if isinstance(spec, EtaFamilyMixtureSpec):
        fit = commutativity_fit(spec.eta[0], spec.eta[1], spec.grid, tol, x=spec.x)
        ok = fit.lambda_commutative
        lines = [
            f"a={formats.format_float(fit.a)}",
            f"max_residual={formats.format_float(fit.max_residual)}",
            f"eta_criterion_commutative={_bool(fit.commutative)}",
            f"max_defect={formats.format_float(fit.lambda_defect)}",
            f"commutative={_bool(ok)}",
        ]
        if fit.commutative != ok:
            lines.append("warning=eta and eigenvalue criteria disagree")
    else:
        if isinstance(spec, SemigroupMixtureSpec):
            traj = semigroup_mixture_eigenvalues(spec, cfg.grid)
        else:
            traj, _ = preset_dynamics(args.preset, cfg.grid)
        ok, defect = is_commutative_family(traj, tol)
        lines = [f"commutative={_bool(ok)}", f"max_defect={formats.format_float(defect)}"]
    with _Output(cfg.output) as out:
        out.write("\n".join(lines) + "\n")
    return 0 if ok else 1


def cmd_recover(args, cfg):
    try:
        verdict = semigroup_recovery(args.weights, args.target, cfg.grid, cfg.tolerances)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if not verdict.feasible:
        print(f"infeasible: {verdict.failure_reason}")
        return 1
    print("feasible")
    for note in verdict.notes:
        print(f"note: {note}")
    with _Output(cfg.output) as out:
        formats.write_eta_csv(out, cfg.grid, verdict.eta_solutions)
    return 0


def cmd_scan(args, cfg):
    if args.count < 1:
        raise UsageError("--count must be at least 1")
    tolerances = cfg.tolerances
    if cfg.tol is not None:
        tolerances = tolerances.with_overrides(cp=cfg.tol, rate=cfg.tol)
    result = run_scan(args.kind, args.count, cfg.seed, cfg.grid, tolerances)
    with _Output(cfg.output) as out:
        out.write("\n".join(result.lines()) + "\n")
    return 0 if result.ok else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _common_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--t-max", dest="t_max", type=float, help=f"end of the time grid (default {DEFAULT_T_MAX:g})")
    common.add_argument("--points", type=int, help=f"odd number of grid points (default {DEFAULT_POINTS})")
    common.add_argument("--tol", type=float, help="override the tolerance used by this command")
    common.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
    common.add_argument("--output", help="write results to this file instead of stdout")
    common.add_argument("--config", help="JSON config with t_max, points, tol, seed, tolerances")
    return common


def build_parser():
    common = _common_parser()
    parser = argparse.ArgumentParser(
        prog="phasecov", description="Phase-covariant qubit dynamical maps and their mixtures."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check-cp", parents=[common], help="complete positivity of a channel")
    p.add_argument("lambda1", type=float)
    p.add_argument("lambda3", type=float)
    p.add_argument("lambda_star", type=float)

    p = sub.add_parser("evolve", parents=[common], help="eigenvalue trajectory from rates or a preset")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--rates", type=float, nargs=3, metavar=("GAMMA_PLUS", "GAMMA_MINUS", "GAMMA3"))
    p.add_argument("--input", help="rate CSV to integrate")

    p = sub.add_parser("rates", parents=[common], help="decoherence rates from an eigenvalue trajectory")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--input", help="eigenvalue CSV")

    p = sub.add_parser("mix-semigroups", parents=[common], help="mixture of three semigroups")
    p.add_argument("spec", nargs="?")
    p.add_argument("--preset", choices=("exmsg",))

    p = sub.add_parser("mix-eta", parents=[common], help="mixture of eta-family maps")
    p.add_argument("spec", nargs="?")
    p.add_argument("--preset", choices=("example-2",))

    p = sub.add_parser("divisibility", parents=[common], help="CP-divisibility by rate sign and Choi spectrum")
    p.add_argument("--preset", choices=PRESETS)
    p.add_argument("--input", help="rate or eigenvalue CSV")
    p.add_argument("--spec", help="mixture specification file")

    p = sub.add_parser("commutativity", parents=[common], help="commutativity of a family or mixture")
    p.add_argument("spec", nargs="?")
    p.add_argument("--preset", choices=PRESETS)

    p = sub.add_parser("recover", parents=[common], help="write a semigroup as an eta-family mixture")
    p.add_argument("--weights", type=float, nargs=3, required=True, metavar=("X1", "X2", "X3"))
    p.add_argument("--target", type=float, nargs=3, required=True,
                   metavar=("GAMMA_PLUS", "GAMMA_MINUS", "GAMMA3"))

    p = sub.add_parser("scan", parents=[common], help="seeded randomized verification batch")
    p.add_argument("kind", choices=SCAN_KINDS)
    p.add_argument("--count", type=int, default=1000)
    return parser


COMMANDS = {
    "check-cp": cmd_check_cp,
    "evolve": cmd_evolve,
    "rates": cmd_rates,
    "mix-semigroups": cmd_mix_semigroups,
    "mix-eta": cmd_mix_eta,
    "divisibility": cmd_divisibility,
    "commutativity": cmd_commutativity,
    "recover": cmd_recover,
    "scan": cmd_scan,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](args, cfg)
    except (UsageError, ValueError) as exc:
        print(f"phasecov {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
