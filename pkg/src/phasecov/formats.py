"""Text formats: trajectory CSV files and mixture specification files.

CSV floats are written with 17 significant digits so every 64-bit value
survives a write/read cycle exactly.

Mixture specifications are JSON, with bare (unquoted) keys also accepted::

    {weights: [0.3, 0.7, 0], rates: [1, 1, 1]}
    {weights: [0.34, 0.33, 0.33],
     eta: [{form: "exp_cos", w: 1}, {form: "exp", w: 1}, {form: "samples", file: "eta3.csv"}]}
"""

import csv
import io
import json
import re
from pathlib import Path

import numpy as np

from .dynamics import EigenvalueTrajectory, RateTrajectory, TimeGrid
from .mixtures import EtaFamilyMixtureSpec, EtaFunction, SemigroupMixtureSpec

EIGENVALUE_HEADER = ("t", "lambda1", "lambda3", "lambda_star")
RATE_HEADER = ("t", "gamma_plus", "gamma_minus", "gamma3")
ETA_HEADER = ("t", "eta1", "eta2", "eta3")

_BARE_KEY = re.compile(r'([{,]\s*)([A-Za-z_][A-Za-z0-9_]*)\s*:')


class FormatError(ValueError):
    """Malformed input file."""


def format_float(value):
    return f"{float(value):.17g}"


def write_rows(stream, header, columns, mask=None):
    columns = [np.asarray(c, dtype=float) for c in columns]
    stream.write(",".join(header) + "\n")
    rows = range(columns[0].size)
    for i in rows:
        if mask is not None and not mask[i]:
            continue
        stream.write(",".join(format_float(c[i]) for c in columns) + "\n")


def write_eigenvalue_csv(stream, traj: EigenvalueTrajectory):
    write_rows(stream, EIGENVALUE_HEADER, [traj.times, traj.lambda1, traj.lambda3, traj.lambda_star])


def write_rate_csv(stream, rates: RateTrajectory):
    """Rows only for valid nodes; excluded nodes are left out rather than written as NaN."""
    write_rows(
        stream, RATE_HEADER,
        [rates.times, rates.gamma_plus, rates.gamma_minus, rates.gamma3],
        mask=rates.valid,
    )


def write_eta_csv(stream, grid: TimeGrid, etas):
    write_rows(stream, ETA_HEADER, [grid.points] + [e.values for e in etas])


def _read_table(text):
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row and not row[0].lstrip().startswith("#")]
    if not rows:
        raise FormatError("empty CSV input")
    header = tuple(h.strip() for h in rows[0])
    if len(rows) < 2 or any(len(row) != len(header) for row in rows[1:]):
        raise FormatError("CSV rows do not match the header")
    try:
        data = np.array([[float(v) for v in row] for row in rows[1:]], dtype=float)
    except ValueError as exc:
        raise FormatError(f"non-numeric CSV entry: {exc}") from None
    if data.ndim != 2 or data.shape[0] == 0 or data.shape[1] != len(header):
        raise FormatError("CSV rows do not match the header")
    if not np.all(np.isfinite(data)):
        raise FormatError("CSV contains non-finite values")
    return header, data


def grid_from_times(t, rtol=1e-9):
    t = np.asarray(t, dtype=float)
    if t.size < 3 or t[0] != 0.0:
        raise FormatError("time column must start at 0 and hold at least 3 points")
    grid = TimeGrid(t[-1], t.size)
    if np.max(np.abs(grid.points - t)) > rtol * max(1.0, grid.t_max):
        raise FormatError("time column is not a uniform grid")
    return grid


def read_trajectory_csv(text):
    """Parse eigenvalue or rate CSV text into the matching trajectory type."""
    header, data = _read_table(text)
    grid = grid_from_times(data[:, 0])
    if header == EIGENVALUE_HEADER:
        return EigenvalueTrajectory(grid, data[:, 1], data[:, 2], data[:, 3])
    if header == RATE_HEADER:
        return RateTrajectory(grid, data[:, 1], data[:, 2], data[:, 3])
    raise FormatError(f"unrecognised CSV header {','.join(header)}")


def read_samples_csv(text, grid: TimeGrid):
    """Read sampled ``eta`` values: a ``t,eta`` table or a single ``eta`` column."""
    header, data = _read_table(text)
    if data.shape[1] == 2:
        values = data[:, 1]
        if data.shape[0] != grid.n_points or np.max(np.abs(data[:, 0] - grid.points)) > 1e-9 * grid.t_max:
            raise FormatError("eta samples are not on the requested grid")
    elif data.shape[1] == 1:
        values = data[:, 0]
        if values.size != grid.n_points:
            raise FormatError(f"expected {grid.n_points} eta samples, got {values.size}")
    else:
        raise FormatError(f"eta sample file needs one or two columns, got {header}")
    return values


def parse_spec_text(text):
    """JSON with optional bare keys; returns a dict."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError:
        try:
            obj = json.loads(_BARE_KEY.sub(r'\1"\2":', text))
        except json.JSONDecodeError as exc:
            raise FormatError(f"cannot parse specification: {exc}") from None
    if not isinstance(obj, dict):
        raise FormatError("specification must be an object")
    return obj


def _three_numbers(obj, key):
    values = obj.get(key)
    if not isinstance(values, list) or len(values) != 3:
        raise FormatError(f"'{key}' must be a list of three numbers")
    try:
        return [float(v) for v in values]
    except (TypeError, ValueError):
        raise FormatError(f"'{key}' must be a list of three numbers") from None


def _eta_from_entry(entry, grid, base_dir):
    if not isinstance(entry, dict) or "form" not in entry:
        raise FormatError("each eta entry needs a 'form'")
    form = entry["form"]
    try:
        if form == "exp":
            return EtaFunction.exp(float(entry["w"]), grid)
        if form == "exp_cos":
            return EtaFunction.exp_cos(float(entry["w"]), grid, float(entry.get("omega", 1.0)))
        if form == "samples":
            path = Path(entry["file"])
            if not path.is_absolute():
                path = Path(base_dir) / path
            return EtaFunction(grid, read_samples_csv(path.read_text(), grid))
    except KeyError as exc:
        raise FormatError(f"eta entry of form {form!r} is missing {exc}") from None
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad eta entry: {exc}") from None
    except OSError as exc:
        raise FormatError(f"cannot read eta samples: {exc}") from None
    raise FormatError(f"unknown eta form {form!r}")


def load_mixture_spec(text, grid: TimeGrid, base_dir="."):
    """Build a :class:`SemigroupMixtureSpec` or an :class:`EtaFamilyMixtureSpec` from spec text."""
    obj = parse_spec_text(text)
    weights = _three_numbers(obj, "weights")
    try:
        if "rates" in obj and "eta" not in obj:
            return SemigroupMixtureSpec(weights, _three_numbers(obj, "rates"))
        if "eta" in obj and "rates" not in obj:
            entries = obj["eta"]
            if not isinstance(entries, list) or len(entries) != 3:
                raise FormatError("'eta' must list three entries")
            etas = tuple(_eta_from_entry(e, grid, base_dir) for e in entries)
            return EtaFamilyMixtureSpec(weights, etas, grid)
    except FormatError:
        raise
    except ValueError as exc:
        raise FormatError(str(exc)) from None
    raise FormatError("specification needs exactly one of 'rates' or 'eta'")
