import io

import numpy as np
import pytest

from phasecov.dynamics import EigenvalueTrajectory, RateTrajectory, TimeGrid, semigroup_trajectory
from phasecov.formats import (
    EIGENVALUE_HEADER,
    FormatError,
    format_float,
    load_mixture_spec,
    parse_spec_text,
    read_samples_csv,
    read_trajectory_csv,
    write_eigenvalue_csv,
    write_eta_csv,
    write_rate_csv,
)
from phasecov.mixtures import EtaFamilyMixtureSpec, EtaFunction, SemigroupMixtureSpec


def test_eigenvalue_csv_round_trip_is_exact(small_grid):
    traj = semigroup_trajectory(0.3, 0.9, 0.1, small_grid)
    buf = io.StringIO()
    write_eigenvalue_csv(buf, traj)
    text = buf.getvalue()
    assert text.splitlines()[0] == ",".join(EIGENVALUE_HEADER)
    back = read_trajectory_csv(text)
    assert isinstance(back, EigenvalueTrajectory)
    assert back.grid == small_grid
    for name in ("lambda1", "lambda3", "lambda_star"):
        assert np.array_equal(getattr(back, name), getattr(traj, name))


def test_rate_csv_omits_excluded_nodes(small_grid):
    valid = np.ones(small_grid.n_points, dtype=bool)
    valid[10:15] = False
    rates = RateTrajectory(small_grid, np.ones(501), np.ones(501), np.ones(501), valid=valid)
    buf = io.StringIO()
    write_rate_csv(buf, rates)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,gamma_plus,gamma_minus,gamma3"
    assert len(lines) == 1 + small_grid.n_points - 5
    assert "nan" not in buf.getvalue().lower()


def test_rate_csv_round_trip(small_grid):
    rates = RateTrajectory(small_grid, *np.random.default_rng(0).uniform(size=(3, 501)))
    buf = io.StringIO()
    write_rate_csv(buf, rates)
    back = read_trajectory_csv(buf.getvalue())
    assert isinstance(back, RateTrajectory)
    assert np.array_equal(back.stacked(), rates.stacked())


def test_eta_csv(small_grid):
    etas = [EtaFunction.exp(w, small_grid) for w in (1, 2, 3)]
    buf = io.StringIO()
    write_eta_csv(buf, small_grid, etas)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "t,eta1,eta2,eta3"
    assert lines[1] == "0,1,1,1"


def test_format_float_round_trips():
    for v in (0.1, 1 / 3, np.pi, 1e-300, -2.5e10):
        assert float(format_float(v)) == v


@pytest.mark.parametrize(
    "text, match",
    [
        ("", "empty"),
        ("t,lambda1,lambda3,lambda_star\n", "rows"),
        ("t,lambda1,lambda3,lambda_star\n0,1,1,x\n0.5,1,1,0\n1,1,1,0\n", "non-numeric"),
        ("t,lambda1,lambda3,lambda_star\n0,1,1,0\n0.5,1,1\n1,1,1,0\n", "rows"),
        ("t,lambda1,lambda3,lambda_star\n0,1,1,0\n0.5,1,1,nan\n1,1,1,0\n", "non-finite"),
        ("t,lambda1,lambda3,lambda_star\n0,1,1,0\n0.7,1,1,0\n1,1,1,0\n", "uniform"),
        ("t,a,b,c\n0,1,1,0\n0.5,1,1,0\n1,1,1,0\n", "header"),
        ("t,lambda1,lambda3,lambda_star\n0.1,1,1,0\n0.5,1,1,0\n1,1,1,0\n", "start at 0"),
    ],
)
def test_malformed_csv(text, match):
    with pytest.raises(FormatError, match=match):
        read_trajectory_csv(text)


def test_comment_lines_ignored():
    text = "# generated\nt,lambda1,lambda3,lambda_star\n0,1,1,0\n0.5,0.9,0.8,0.1\n1,0.8,0.7,0.2\n"
    traj = read_trajectory_csv(text)
    assert traj.grid == TimeGrid(1.0, 3)


def test_samples_csv(small_grid):
    t = small_grid.points
    two = "t,eta\n" + "".join(f"{a},{b}\n" for a, b in zip(t.tolist(), np.exp(-t).tolist()))
    assert np.allclose(read_samples_csv(two, small_grid), np.exp(-t))
    one = "eta\n" + "".join(f"{b}\n" for b in np.exp(-t).tolist())
    assert np.allclose(read_samples_csv(one, small_grid), np.exp(-t))
    with pytest.raises(FormatError):
        read_samples_csv("eta\n1\n0.5\n", small_grid)


def test_spec_text_accepts_bare_keys():
    assert parse_spec_text("{weights: [0.3, 0.7, 0], rates: [1, 1, 1]}") == {
        "weights": [0.3, 0.7, 0],
        "rates": [1, 1, 1],
    }
    assert parse_spec_text('{"weights": [1, 0, 0]}') == {"weights": [1, 0, 0]}
    with pytest.raises(FormatError):
        parse_spec_text("[1, 2]")
    with pytest.raises(FormatError):
        parse_spec_text("{weights: ")


def test_load_semigroup_spec(small_grid):
    spec = load_mixture_spec("{weights: [0.3, 0.7, 0], rates: [1, 1, 1]}", small_grid)
    assert isinstance(spec, SemigroupMixtureSpec)
    assert np.allclose(spec.w, 1.0)


def test_load_eta_spec_with_samples(tmp_path, small_grid):
    t = small_grid.points
    (tmp_path / "eta3.csv").write_text("eta\n" + "".join(f"{v}\n" for v in np.exp(-2 * t).tolist()))
    text = (
        '{weights: [0.34, 0.33, 0.33], eta: [{form: "exp_cos", w: 1}, {form: "exp", w: 1},'
        ' {form: "samples", file: "eta3.csv"}]}'
    )
    spec = load_mixture_spec(text, small_grid, tmp_path)
    assert isinstance(spec, EtaFamilyMixtureSpec)
    assert np.allclose(spec.eta[0].values, np.exp(-t) * np.cos(t))
    assert np.allclose(spec.eta[2].values, np.exp(-2 * t))


@pytest.mark.parametrize(
    "text",
    [
        "{rates: [1, 1, 1]}",
        "{weights: [0.5, 0.5], rates: [1, 1, 1]}",
        "{weights: [0.5, 0.6, 0], rates: [1, 1, 1]}",
        "{weights: [0.5, 0.5, 0], rates: [1, -1, 1]}",
        "{weights: [0.5, 0.5, 0]}",
        "{weights: [0.5, 0.5, 0], rates: [1, 1, 1], eta: []}",
        '{weights: [0.5, 0.5, 0], eta: [{form: "exp"}, {form: "exp", w: 1}, {form: "exp", w: 1}]}',
        '{weights: [0.5, 0.5, 0], eta: [{form: "gauss", w: 1}, {form: "exp", w: 1}, {form: "exp", w: 1}]}',
        '{weights: [0.5, 0.5, 0], eta: [{form: "samples", file: "missing.csv"}, {form: "exp", w: 1},'
        ' {form: "exp", w: 1}]}',
        '{weights: [0.5, 0.5, 0], eta: [{form: "exp", w: -1}, {form: "exp", w: 1}, {form: "exp", w: 1}]}',
    ],
)
def test_malformed_specs(text, small_grid, tmp_path):
    with pytest.raises(FormatError):
        load_mixture_spec(text, small_grid, tmp_path)
