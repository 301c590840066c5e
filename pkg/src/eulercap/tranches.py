"""Tranche loss components of a CDO-style horizontal loss decomposition.

The portfolio loss fraction ``L(u) = sum_k u_k L_k`` is cut into tranches
``Y_j = min(L, c_j) - min(L, c_{j-1})`` at enhancement levels
``0 = c_0 < c_1 < ... < c_m = 1``. With levels that are homogeneous of
degree one in ``u`` the functions ``F_j(u) = E[min(L(u), c_j(u))]`` are too,
and Euler's theorem splits every tranche expected loss into per-name
components whose rows add up to the names' expected losses.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from eulercap.errors import ValidationError
from eulercap.kernel import KernelConfig, nadaraya_watson, smoothed_quantile
from eulercap.measures import quantile
from eulercap.scenarios import ScenarioMatrix, as_weights


@dataclass(frozen=True)
class QuantileLevel:
    """Level at the alpha-quantile of the portfolio loss."""

    alpha: float

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValidationError(f"quantile level alpha must lie in (0, 1), got {self.alpha!r}")


@dataclass(frozen=True)
class ELMultiple:
    """Level at ``b`` times the portfolio expected loss."""

    b: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValidationError(f"EL multiple must be positive, got {self.b!r}")


Level = Union[QuantileLevel, ELMultiple]


@dataclass(frozen=True)
class TrancheSpec:
    """The ``m - 1`` interior enhancement levels; ``c_0 = 0`` and ``c_m = 1`` are implicit."""

    levels: tuple[Level, ...]

    def __post_init__(self):
        levels = tuple(self.levels)
        if not levels:
            raise ValidationError("a tranche spec needs at least one interior level (m >= 2)")
        object.__setattr__(self, "levels", levels)

    @property
    def n_tranches(self) -> int:
        """Number of tranches ``m``."""
        return len(self.levels) + 1

    @classmethod
    def reference_case(cls) -> TrancheSpec:
        """Equity / thin mezzanine / thick mezzanine / super senior at the
        50%, 55% and 99.9% loss quantiles."""
        return cls((QuantileLevel(0.50), QuantileLevel(0.55), QuantileLevel(0.999)))

    @classmethod
    def from_entries(cls, entries: Sequence[tuple[str, float]]) -> TrancheSpec:
        """Build from ``(type, value)`` pairs with type ``quantile`` or ``el_multiple``."""
        levels: list[Level] = []
        for kind, value in entries:
            if kind == "quantile":
                levels.append(QuantileLevel(float(value)))
            elif kind == "el_multiple":
                levels.append(ELMultiple(float(value)))
            else:
                raise ValidationError(f"unknown tranche level type {kind!r}")
        return cls(tuple(levels))


def _losses(losses) -> np.ndarray:
    v = losses.values if isinstance(losses, ScenarioMatrix) else np.asarray(losses, dtype=float)
    if v.ndim == 1:
        v = v[:, None]
    if v.ndim != 2 or v.shape[0] == 0:
        raise ValidationError(f"per-asset loss sample must be N x n, got shape {v.shape}")
    return v


def _check_levels(c: np.ndarray) -> None:
    if c[0] != 0 or c[-1] != 1:
        raise ValidationError(f"levels must start at 0 and end at 1, got {c.tolist()}")
    for j in range(1, c.size):
        if not c[j] > c[j - 1]:
            raise ValidationError(
                f"enhancement levels not strictly increasing: c_{j - 1}={c[j - 1]!r} >= c_{j}={c[j]!r}")


def tranche_losses(L_sample, levels) -> np.ndarray:
    """``N x m`` matrix of tranche losses ``min(L, c_j) - min(L, c_{j-1})``."""
    c = np.asarray(levels, dtype=float)
    _check_levels(c)
    L = np.asarray(L_sample, dtype=float).ravel()
    capped = np.minimum(L[:, None], c[None, :])
    return np.diff(capped, axis=1)


def _level_value(level: Level, L: np.ndarray, asset_el: np.ndarray, u: np.ndarray) -> float:
    if isinstance(level, QuantileLevel):
        return quantile(L, level.alpha)
    return float(level.b * (u @ asset_el))


def realize_levels(spec: TrancheSpec, L_sample, asset_el, u) -> np.ndarray:
    """Evaluate the levels for the portfolio ``u``: ``[0, c_1, ..., c_{m-1}, 1]``."""
    L = np.asarray(L_sample, dtype=float).ravel()
    if L.size == 0:
        raise ValidationError("empty loss sample")
    u = np.asarray(u, dtype=float)
    asset_el = np.asarray(asset_el, dtype=float)
    c = np.empty(spec.n_tranches + 1)
    c[0], c[-1] = 0.0, 1.0
    for j, level in enumerate(spec.levels, start=1):
        c[j] = _level_value(level, L, asset_el, u)
        if not 0 < c[j] < 1:
            raise ValidationError(f"realised level c_{j}={c[j]!r} ({level}) lies outside (0, 1)")
    _check_levels(c)
    return c


def expected_capped_loss(losses, u, level: Level, asset_el=None) -> float:
    """``F(u) = E[min(L(u), c(u))]`` with the level realised at ``u``."""
    v = _losses(losses)
    u = np.asarray(u, dtype=float)
    el = v.mean(axis=0) if asset_el is None else np.asarray(asset_el, dtype=float)
    L = v @ u
    c = _level_value(level, L, el, u)
    if not 0 < c < 1:
        raise ValidationError(f"realised level {c!r} ({level}) lies outside (0, 1)")
    return float(np.minimum(L, c).mean())


def quantile_is_continuous(L: np.ndarray, q: float) -> bool:
    """Empirical mass at ``q`` below ``2/N`` (at most one scenario sits on it)."""
    return int(np.count_nonzero(L == q)) < 2


def f_derivative_quantile(losses, u, alpha: float, cfg: KernelConfig | None = None, *,
                          bandwidth: float | None = None,
                          sorted_loss: np.ndarray | None = None) -> np.ndarray:
    """Gradient of ``E[min(L(u), q_alpha(L(u)))]`` in ``u``:
    ``(1 - alpha) E[L_k | L(u) = q] + alpha E[L_k | L(u) <= q]``.

    The first conditional expectation is a Nadaraya-Watson estimate at the
    kernel-smoothed quantile, the second a plain tail-complement average.
    """
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    cfg = cfg or KernelConfig()
    v = _losses(losses)
    u = as_weights(u, v.shape[1])
    L = v @ u
    q = quantile(L, alpha)
    b = cfg.resolve(L) if bandwidth is None else bandwidth
    if sorted_loss is None:
        qs = smoothed_quantile(L, cfg, alpha, bandwidth=b)
    else:
        qs = smoothed_quantile(sorted_loss, cfg, alpha, bandwidth=b, presorted=True)
    at_q = np.atleast_1d(nadaraya_watson(L, v, cfg, qs, bandwidth=b))
    below = v[L <= q].mean(axis=0)
    return (1 - alpha) * at_q + alpha * below


def f_derivative_general(losses, u, level: Level, eps: float = 1e-2, asset_el=None) -> np.ndarray:
    """Gradient of ``F(u) = E[min(L(u), c(u))]`` by central differences.

    Component ``k`` is perturbed by ``+-eps * u_k`` with the level re-realised
    at each perturbed portfolio (common random numbers). A zero weight is
    stepped forward by ``eps * sum(u)`` instead. If a perturbed portfolio has
    an inadmissible level, ``eps`` is halved once before giving up.
    """
    if not 0 < eps <= 0.1:
        raise ValidationError(f"eps must lie in (0, 0.1], got {eps!r}")
    v = _losses(losses)
    u = as_weights(u, v.shape[1])
    el = v.mean(axis=0) if asset_el is None else np.asarray(asset_el, dtype=float)
    out = np.empty(v.shape[1])
    for k in range(v.shape[1]):
        for attempt, e in enumerate((eps, eps / 2)):
            try:
                out[k] = _central_difference(v, u, level, el, k, e)
                break
            except ValidationError:
                if attempt == 1:
                    raise
    return out


def _central_difference(v, u, level, el, k, eps) -> float:
    if u[k] > 0:
        h = eps * u[k]
        up, dn = u.copy(), u.copy()
        up[k] += h
        dn[k] -= h
        return (expected_capped_loss(v, up, level, el) - expected_capped_loss(v, dn, level, el)) / (2 * h)
    h = eps * u.sum()
    if h == 0:
        raise ValidationError("all weights are zero")
    up = u.copy()
    up[k] += h
    return (expected_capped_loss(v, up, level, el) - expected_capped_loss(v, u, level, el)) / h


@dataclass(frozen=True)
class TrancheComponentMatrix:
    """Per-name tranche loss components.

    ``E[k, l]`` is name ``k``'s share of tranche ``l``'s expected loss. Rows
    add up to ``asset_el`` (``u_k E[L_k]``), columns to ``tranche_el``
    (``E[Y_l]``) up to estimation error.
    """

    E: np.ndarray
    asset_el: np.ndarray
    tranche_el: np.ndarray
    levels: np.ndarray
    derivatives: np.ndarray  # (m - 1) x n gradients of F_1 .. F_{m-1}
    unit_el: np.ndarray  # E[L_k]
    routes: tuple[str, ...] = field(default=())

    def row_residuals(self) -> np.ndarray:
        """Row sums minus the names' expected losses."""
        return self.E.sum(axis=1) - self.asset_el

    def column_residuals(self) -> np.ndarray:
        """Column sums minus the tranche expected losses."""
        return self.E.sum(axis=0) - self.tranche_el

    def tranche_ratios(self) -> np.ndarray:
        """``E[Y_l] / E[L]`` per tranche."""
        return self.tranche_el / self.asset_el.sum()

    def component_ratios(self) -> np.ndarray:
        """``E[k, l] / (u_k E[L_k])`` as an ``n x m`` array.

        Computed from the gradients, so it stays defined for names with zero
        weight.
        """
        n = self.unit_el.size
        d = np.vstack([np.zeros(n), self.derivatives, self.unit_el])
        return (np.diff(d, axis=0) / self.unit_el).T


def tranche_loss_components(losses, u, spec: TrancheSpec, cfg: KernelConfig | None = None,
                            *, asset_el=None, eps: float = 1e-2,
                            route: str = "auto") -> TrancheComponentMatrix:
    """Split each tranche expected loss into per-name components.

    Quantile levels use the closed-form gradient (``route="auto"``) unless the
    loss distribution has an atom at the quantile, in which case, and for
    EL-multiple levels, the finite-difference gradient is used.
    ``route="fd"`` forces finite differences throughout.
    """
    if route not in ("auto", "fd"):
        raise ValidationError(f"route must be 'auto' or 'fd', got {route!r}")
    cfg = cfg or KernelConfig()
    v = _losses(losses)
    u = as_weights(u, v.shape[1])
    unit_el = v.mean(axis=0) if asset_el is None else np.asarray(asset_el, dtype=float)
    L = v @ u
    c = realize_levels(spec, L, unit_el, u)
    derivs, routes = [], []
    b = L_sorted = None
    for j, level in enumerate(spec.levels, start=1):
        if (route == "auto" and isinstance(level, QuantileLevel)
                and quantile_is_continuous(L, c[j])):
            if b is None:
                b, L_sorted = cfg.resolve(L), np.sort(L)
            derivs.append(f_derivative_quantile(v, u, level.alpha, cfg, bandwidth=b,
                                                sorted_loss=L_sorted))
            routes.append("quantile")
        else:
            derivs.append(f_derivative_general(v, u, level, eps, unit_el))
            routes.append("fd")
    d = np.vstack([np.zeros(v.shape[1]), *derivs, unit_el])
    E = (u[:, None] * np.diff(d, axis=0).T)
    tranche_el = tranche_losses(L, c).mean(axis=0)
    return TrancheComponentMatrix(E, u * unit_el, tranche_el, c, np.array(derivs), unit_el,
                                  tuple(routes))


@dataclass(frozen=True)
class Extreme:
    """An interior grid extreme of one tranche's EL ratio."""

    tranche: int  # 1-based tranche index
    u: float
    kind: str  # "min" or "max"
    tranche_ratio: float
    component_ratios: np.ndarray
    spread: float  # max_k |component ratio - tranche ratio|
    relative_spread: float


def tranche_ratio_se(losses, u, spec: TrancheSpec, *, asset_el=None,
                     batches: int = 10) -> np.ndarray:
    """Batch-means standard errors of ``E[Y_l] / E[L]`` for every tranche.

    The scenarios are cut into ``batches`` contiguous blocks; levels are
    re-realised inside each block so that quantile noise is included.
    """
    if batches < 2:
        raise ValidationError(f"need at least two batches, got {batches}")
    v = _losses(losses)
    if v.shape[0] < 2 * batches:
        raise ValidationError(f"{v.shape[0]} scenarios are too few for {batches} batches")
    u = as_weights(u, v.shape[1])
    unit_el = v.mean(axis=0) if asset_el is None else np.asarray(asset_el, dtype=float)
    ratios = []
    for block in np.array_split(v, batches):
        L = block @ u
        c = realize_levels(spec, L, unit_el, u)
        ratios.append(tranche_losses(L, c).mean(axis=0) / L.mean())
    return np.std(ratios, axis=0, ddof=1) / np.sqrt(batches)


def _prominence(col: np.ndarray, g: int) -> float:
    """Topographic prominence of the local maximum of ``col`` at ``g``."""
    peak = col[g]
    bases = []
    for side in (col[g - 1::-1], col[g + 1:]):
        higher = np.nonzero(side > peak)[0]
        stop = higher[0] if higher.size else side.size
        if stop == 0:
            return 0.0
        bases.append(side[:stop].min())
    return float(peak - max(bases))


def extreme_check(u_grid, tranche_ratios, component_ratios, *, tranche_ratio_se=None,
                  min_prominence: float = 3.0) -> list[Extreme]:
    """Locate interior grid extremes of ``E[Y_j]/E[L]`` and measure how far
    the names' component ratios are from the tranche ratio there.

    ``tranche_ratios`` is ``G x m``; ``component_ratios`` is ``G x n x m``.
    With ``tranche_ratio_se`` (``G x m`` Monte Carlo standard errors) an
    extreme is kept only if its prominence exceeds ``min_prominence`` times
    the largest standard error along that tranche's curve, which discards
    wiggles of a flat but noisy curve.
    """
    u = np.asarray(u_grid, dtype=float)
    r = np.asarray(tranche_ratios, dtype=float)
    cr = np.asarray(component_ratios, dtype=float)
    if r.shape[0] != u.size or cr.shape[0] != u.size:
        raise ValidationError("grid results do not match the u grid")
    se = None
    if tranche_ratio_se is not None:
        se = np.asarray(tranche_ratio_se, dtype=float)
        if se.shape != r.shape:
            raise ValidationError(f"standard errors have shape {se.shape}, expected {r.shape}")
    out = []
    for j in range(r.shape[1]):
        col = r[:, j]
        for g in range(1, u.size - 1):
            left, mid, right = col[g - 1], col[g], col[g + 1]
            if mid > left and mid > right:
                kind, signed = "max", col
            elif mid < left and mid < right:
                kind, signed = "min", -col
            else:
                continue
            if se is not None and _prominence(signed, g) <= min_prominence * se[:, j].max():
                continue
            comps = cr[g, :, j]
            spread = float(np.max(np.abs(comps - mid)))
            out.append(Extreme(j + 1, float(u[g]), kind, float(mid), comps.copy(), spread,
                               spread / abs(mid) if mid != 0 else float("inf")))
    return out
