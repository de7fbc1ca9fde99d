"""Instance construction: synthetic generators, percentile-shift cost
matrices from tabular features, and flat-file ingestion.

File formats
------------
Instance values: CSV with header ``px,py`` and one row per feature value.
Instance costs: headerless m x m CSV; the literal token ``inf`` marks an
infinite entry. gamma is supplied by configuration, not stored.
Feature table: a header row of column names, one metadata row declaring each
column as ``actionable``, ``actionable_up`` (its percentile may never
decrease) or ``discrete``, then one data row per feature value.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Tuple

import numpy as np

from .algorithms import RngStream
from .core import Instance, make_instance, sort_canonical

KIND_ACTIONABLE = "actionable"
KIND_ACTIONABLE_UP = "actionable_up"
KIND_DISCRETE = "discrete"
_KINDS = (KIND_ACTIONABLE, KIND_ACTIONABLE_UP, KIND_DISCRETE)


@dataclass(frozen=True)
class SynthConfig:
    """Knobs for the synthetic generator.

    Population weights are truncated-normal draws (mean/std below, resampled
    while negative), outcomes are uniform on [0, 1], and each ordered pair of
    distinct values gets a uniform cost with probability
    `finite_cost_fraction`, otherwise the flat unreachable cost.
    """

    m: int
    gamma: float = 0.3
    weight_mean: float = 0.5
    weight_std: float = 0.1
    finite_cost_fraction: float = 0.5
    unreachable_cost: float = 2.0
    seed: int = 0
    symmetric: bool = False

    def __post_init__(self):
        if self.m < 2:
            raise ValueError("m must be >= 2")
        if not 0.0 <= self.finite_cost_fraction <= 1.0:
            raise ValueError("finite_cost_fraction must lie in [0, 1]")


def generate_synthetic(config: SynthConfig) -> Instance:
    """Draw an instance from the synthetic model; fully determined by seed."""
    rng = RngStream(config.seed)
    m = config.m
    while True:
        weights = rng.normal(config.weight_mean, config.weight_std, m)
        while np.any(weights < 0.0):
            bad = weights < 0.0
            weights[bad] = rng.normal(
                config.weight_mean, config.weight_std, int(bad.sum())
            )
        if weights.sum() > 0.0:
            break
    px = weights / weights.sum()

    py = rng.uniform(size=m)

    coins = rng.random((m, m))
    values = rng.uniform(size=(m, m))
    cost = np.where(
        coins < config.finite_cost_fraction, values, config.unreachable_cost
    )
    if config.symmetric:
        upper = np.triu_indices(m, k=1)
        cost[(upper[1], upper[0])] = cost[upper]
    np.fill_diagonal(cost, 0.0)

    instance, _ = sort_canonical(px, py, cost, config.gamma)
    return instance


@dataclass(frozen=True, eq=False)
class FeatureTable:
    """Tabular description of the m feature values.

    Actionable columns are numeric; discrete columns are compared for
    equality only. alpha scales the percentile-shift cost.
    """

    names: Tuple[str, ...]
    kinds: Tuple[str, ...]
    columns: Tuple[np.ndarray, ...]
    alpha: float = 1.0

    def __post_init__(self):
        if len(self.names) != len(self.kinds) or len(self.names) != len(self.columns):
            raise ValueError("names, kinds and columns must align")
        for kind in self.kinds:
            if kind not in _KINDS:
                raise ValueError(f"unknown column kind {kind!r}")
        lengths = {len(c) for c in self.columns}
        if len(lengths) > 1:
            raise ValueError("all columns must have the same number of rows")
        if self.alpha < 1.0:
            raise ValueError("alpha must be >= 1")

    @property
    def m(self) -> int:
        return len(self.columns[0]) if self.columns else 0

    @property
    def monotone_up_only(self) -> Tuple[str, ...]:
        return tuple(
            n for n, k in zip(self.names, self.kinds) if k == KIND_ACTIONABLE_UP
        )


def _weighted_ecdf(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Right-continuous empirical CDF evaluated at each row's own value:
    out[i] = total weight of rows with value <= values[i]. Tied values share
    a percentile."""
    order = np.argsort(values, kind="stable")
    sorted_vals = values[order]
    csum = np.cumsum(weights[order])
    # last cumulative weight within each run of equal values
    last = np.searchsorted(sorted_vals, sorted_vals, side="right") - 1
    out = np.empty_like(csum)
    out[order] = csum[last]
    return out


def build_cost_matrix(table: FeatureTable, px: Sequence[float] | None = None) -> np.ndarray:
    """Adaptation costs between rows: alpha times the largest percentile
    shift across actionable columns, infinite when any discrete column
    differs or a never-decreasing column would lose percentile.

    px weights the empirical CDFs; omit it for plain row counting.
    """
    m = table.m
    if px is None:
        w = np.full(m, 1.0 / m)
    else:
        w = np.asarray(px, dtype=float)
        if w.shape != (m,):
            raise ValueError("px must have one weight per row")
        w = w / w.sum()

    shift = np.zeros((m, m))
    blocked = np.zeros((m, m), dtype=bool)
    n_actionable = 0
    for name, kind, col in zip(table.names, table.kinds, table.columns):
        if kind == KIND_DISCRETE:
            vals = np.asarray(col)
            blocked |= vals[:, None] != vals[None, :]
            continue
        n_actionable += 1
        q = _weighted_ecdf(np.asarray(col, dtype=float), w)
        delta = q[None, :] - q[:, None]
        np.maximum(shift, np.abs(delta), out=shift)
        if kind == KIND_ACTIONABLE_UP:
            blocked |= delta < 0.0

    if n_actionable == 0:
        warnings.warn(
            "no actionable columns: all unblocked pairs get zero cost",
            stacklevel=2,
        )
    cost = np.where(blocked, np.inf, table.alpha * shift)
    np.fill_diagonal(cost, 0.0)
    return cost


def _fmt(v: float) -> str:
    return repr(float(v))


def save_instance(instance: Instance, values_path, cost_path) -> None:
    """Write px/py and the cost matrix; floats keep full round-trip precision."""
    with open(values_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["px", "py"])
        for p, y in zip(instance.px, instance.py):
            w.writerow([_fmt(p), _fmt(y)])
    with open(cost_path, "w", newline="") as f:
        w = csv.writer(f)
        for row in instance.cost:
            w.writerow([_fmt(c) for c in row])


def _parse_float(token: str, path, line_no: int) -> float:
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"{path}: line {line_no}: bad float {token!r}") from None


def load_instance(values_path, cost_path, gamma: float) -> Instance:
    """Read an instance back from the two CSV files; validates invariants."""
    values_path, cost_path = Path(values_path), Path(cost_path)
    px, py = [], []
    with open(values_path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != ["px", "py"]:
            raise ValueError(f"{values_path}: line 1: expected header 'px,py'")
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise ValueError(f"{values_path}: line {line_no}: expected 2 fields")
            px.append(_parse_float(row[0], values_path, line_no))
            py.append(_parse_float(row[1], values_path, line_no))
    m = len(px)
    if m == 0:
        raise ValueError(f"{values_path}: no data rows")

    cost = []
    with open(cost_path, newline="") as f:
        for line_no, row in enumerate(csv.reader(f), start=1):
            if not row:
                continue
            if len(row) != m:
                raise ValueError(
                    f"{cost_path}: line {line_no}: expected {m} fields, got {len(row)}"
                )
            cost.append([_parse_float(t, cost_path, line_no) for t in row])
    if len(cost) != m:
        raise ValueError(f"{cost_path}: expected {m} rows, got {len(cost)}")
    return make_instance(px, py, cost, gamma)


def save_feature_table(table: FeatureTable, path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(table.names)
        w.writerow(table.kinds)
        for r in range(table.m):
            w.writerow([
                _fmt(col[r]) if kind != KIND_DISCRETE else str(col[r])
                for kind, col in zip(table.kinds, table.columns)
            ])


def load_feature_table(path, alpha: float = 1.0) -> FeatureTable:
    path = Path(path)
    with open(path, newline="") as f:
        reader = csv.reader(f)
        names = next(reader, None)
        kinds = next(reader, None)
        if names is None or kinds is None:
            raise ValueError(f"{path}: need a name row and a kind row")
        kinds = [k.strip() for k in kinds]
        for k in kinds:
            if k not in _KINDS:
                raise ValueError(f"{path}: line 2: unknown column kind {k!r}")
        raw_rows = []
        for line_no, row in enumerate(reader, start=3):
            if not row:
                continue
            if len(row) != len(names):
                raise ValueError(
                    f"{path}: line {line_no}: expected {len(names)} fields"
                )
            raw_rows.append((line_no, row))
    columns = []
    for c, kind in enumerate(kinds):
        if kind == KIND_DISCRETE:
            columns.append(np.array([row[c] for _, row in raw_rows], dtype=object))
        else:
            columns.append(
                np.array([
                    _parse_float(row[c], path, line_no) for line_no, row in raw_rows
                ])
            )
    return FeatureTable(
        names=tuple(n.strip() for n in names),
        kinds=tuple(kinds),
        columns=tuple(columns),
        alpha=alpha,
    )
