"""Scenario samples, portfolio weights and the profit/loss vs. loss conventions.

Rows of a :class:`ScenarioMatrix` are equally likely i.i.d. draws; the
empirical measure puts mass ``1/N`` on each of them.
"""
from __future__ import annotations

import csv
import enum
import io
import math
import os
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from eulercap.errors import ValidationError


class Convention(enum.Enum):
    """Sign convention of a scenario table."""

    PROFIT_LOSS = "profit_loss"
    LOSS_ONLY = "loss_only"


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)  # always copy; callers keep their arrays
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ScenarioMatrix:
    """N scenarios x n assets of per-asset outcomes.

    ``values[k, i]`` is the profit/loss (or the loss, for ``LOSS_ONLY``) of
    asset ``i`` in scenario ``k``. The array is stored read-only.
    """

    values: np.ndarray
    asset_names: tuple[str, ...] = ()
    convention: Convention = Convention.PROFIT_LOSS

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.ndim != 2:
            raise ValidationError(f"scenario values must be 2-D, got shape {v.shape}")
        n_scen, n_assets = v.shape
        if n_scen < 1 or n_assets < 1:
            raise ValidationError(f"need at least one scenario and one asset, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            k, i = np.argwhere(~np.isfinite(v))[0]
            raise ValidationError(f"non-finite value at scenario {k}, asset {i}")
        if self.convention is Convention.LOSS_ONLY and np.any(v < 0):
            k, i = np.argwhere(v < 0)[0]
            raise ValidationError(f"negative loss {v[k, i]!r} at scenario {k}, asset {i}")
        names = tuple(self.asset_names) or tuple(f"asset{i + 1}" for i in range(n_assets))
        if len(names) != n_assets:
            raise ValidationError(f"{len(names)} asset names for {n_assets} columns")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "asset_names", names)

    @property
    def n_scenarios(self) -> int:
        """Number of rows."""
        return self.values.shape[0]

    @property
    def n_assets(self) -> int:
        """Number of columns."""
        return self.values.shape[1]

    def column(self, i: int) -> np.ndarray:
        """Values of asset ``i`` across scenarios."""
        return self.values[:, i]


@dataclass(frozen=True)
class PortfolioWeights:
    """Non-negative exposure multipliers ``u``, one per asset."""

    u: np.ndarray = field()

    def __post_init__(self):
        u = np.atleast_1d(np.asarray(self.u, dtype=float))
        if u.ndim != 1:
            raise ValidationError("weights must be a vector")
        if not np.all(np.isfinite(u)):
            raise ValidationError("weights must be finite")
        if np.any(u < 0):
            raise ValidationError(f"weights must be >= 0, got {u.tolist()}")
        object.__setattr__(self, "u", _frozen(u))

    def __len__(self) -> int:
        return len(self.u)


def as_weights(weights, n_assets: int) -> np.ndarray:
    """Validate ``weights`` against ``n_assets`` and return them as an array."""
    if not isinstance(weights, PortfolioWeights):
        weights = PortfolioWeights(weights)
    if len(weights) != n_assets:
        raise ValidationError(
            f"dimension mismatch: {len(weights)} weights for {n_assets} assets")
    return weights.u


def as_matrix(matrix) -> ScenarioMatrix:
    """Coerce an array or ``ScenarioMatrix`` to a validated ``ScenarioMatrix``."""
    if isinstance(matrix, ScenarioMatrix):
        return matrix
    return ScenarioMatrix(np.asarray(matrix, dtype=float))


def aggregate(matrix, weights) -> np.ndarray:
    """Portfolio outcomes ``sum_i u_i * values[:, i]`` per scenario."""
    m = as_matrix(matrix)
    u = as_weights(weights, m.n_assets)
    return m.values @ u


def losses_to_profit_loss(losses: ScenarioMatrix, gains: Sequence[float]) -> ScenarioMatrix:
    """Turn per-asset losses ``L_i`` into profit/loss ``g_i - L_i``."""
    if losses.convention is not Convention.LOSS_ONLY:
        raise ValidationError("losses_to_profit_loss expects a LOSS_ONLY matrix")
    g = np.atleast_1d(np.asarray(gains, dtype=float))
    if g.shape != (losses.n_assets,):
        raise ValidationError(f"{g.size} gains for {losses.n_assets} assets")
    if not np.all(np.isfinite(g)):
        raise ValidationError("gains must be finite")
    return ScenarioMatrix(g[None, :] - losses.values, losses.asset_names, Convention.PROFIT_LOSS)


def load_scenarios(source: str | os.PathLike | IO[str],
                   convention: Convention = Convention.PROFIT_LOSS) -> ScenarioMatrix:
    """Parse a comma-separated scenario table.

    The first row holds the asset names; every further row is one scenario.
    A leading column named ``scenario`` is dropped. Errors name the 1-based
    line and column of the offending cell.
    """
    if isinstance(source, (str, os.PathLike)):
        with open(source, newline="") as fh:
            return load_scenarios(fh, convention)
    text = source.read()
    rows = list(csv.reader(io.StringIO(text)))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError("empty input: no header row")
    header = [c.strip() for c in rows[0]]
    skip = 1 if header and header[0].lower() == "scenario" else 0
    names = header[skip:]
    if not names or any(not n for n in names):
        raise ValidationError("line 1: header must name every asset column")
    body = rows[1:]
    if not body:
        raise ValidationError("empty body: header only, no scenario rows")
    values = np.empty((len(body), len(names)))
    for r, row in enumerate(body):
        line = r + 2
        if len(row) != len(header):
            raise ValidationError(
                f"line {line}: ragged row with {len(row)} cells, expected {len(header)}")
        for c, cell in enumerate(row[skip:]):
            col = c + skip + 1
            try:
                x = float(cell)
            except ValueError:
                raise ValidationError(
                    f"line {line}, column {col} ({names[c]}): non-numeric cell {cell.strip()!r}"
                ) from None
            if not math.isfinite(x):
                raise ValidationError(
                    f"line {line}, column {col} ({names[c]}): non-finite cell {cell.strip()!r}")
            values[r, c] = x
    return ScenarioMatrix(values, tuple(names), convention)
