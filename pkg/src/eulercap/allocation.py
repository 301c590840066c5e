"""Euler and marginal risk contributions, RORAC and diversification indices.

Every allocation function takes a scenario matrix (``N x n`` profit/loss),
non-negative weights ``u`` and returns a :class:`ContributionReport` whose
``per_asset`` entries are contributions of the weighted positions
``u_i * X_i`` to the risk of ``X(u) = sum_i u_i X_i``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from eulercap.errors import DegeneracyError, ValidationError
from eulercap.kernel import (
    KernelConfig,
    nadaraya_watson,
    smoothed_quantile,
    smoothing_noise_mean,
)
from eulercap.measures import (
    MeasureKind,
    RiskMeasureSpec,
    expected_shortfall,
    std_dev_measure,
    value_at_risk,
)
from eulercap.scenarios import as_matrix, as_weights


class Method(enum.Enum):
    """How a contribution vector was estimated."""

    STD_DEV_CLOSED_FORM = "std_closed_form"
    ES_DIRECT = "es_direct"
    VAR_KERNEL = "var_kernel"
    VAR_LINEAR_APPROX = "var_linear"
    MARGINAL = "marginal"
    MARGINAL_NORMALIZED = "marginal_normalized"


@dataclass(frozen=True)
class ContributionReport:
    """Per-asset risk contributions and the portfolio risk they allocate."""

    per_asset: np.ndarray
    total: float
    method: Method
    asset_names: tuple[str, ...] = ()
    degenerate: bool = False
    details: dict = field(default_factory=dict)

    @property
    def residual(self) -> float:
        """``total - sum(per_asset)``; zero (to rounding) for full allocations."""
        return float(self.total - self.per_asset.sum())

    def relative_residual(self) -> float:
        """``|residual| / |total|``."""
        return abs(self.residual) / max(abs(self.total), 1e-300)


@dataclass(frozen=True)
class RoracReport:
    """Portfolio and per-asset RORAC. Entries whose capital is not positive
    are NaN and flagged ``False`` in ``defined``."""

    portfolio_rorac: float
    per_asset_rorac: np.ndarray
    defined: np.ndarray
    portfolio_defined: bool


def _setup(matrix, weights):
    m = as_matrix(matrix)
    u = as_weights(weights, m.n_assets)
    return m, u, m.values @ u


def _weighted_cov(values: np.ndarray, u: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Population covariances ``cov(u_i X_i, X)``."""
    xc = x - x.mean()
    return u * ((values - values.mean(axis=0)).T @ xc) / x.size


def euler_stddev_contrib(matrix, weights, c: float) -> ContributionReport:
    """``c * cov(u_i X_i, X) / sqrt(var X)``."""
    m, u, x = _setup(matrix, weights)
    total = std_dev_measure(x, c)
    if total == 0.0:
        return ContributionReport(np.zeros(m.n_assets), 0.0, Method.STD_DEV_CLOSED_FORM,
                                  m.asset_names, degenerate=True)
    per_asset = c * _weighted_cov(m.values, u, x) / x.std()
    return ContributionReport(per_asset, total, Method.STD_DEV_CLOSED_FORM, m.asset_names)


def euler_es_contrib(matrix, weights, alpha: float) -> ContributionReport:
    """``-u_i * E[X_i | X <= -VaR_alpha(X)]`` on the empirical measure."""
    m, u, x = _setup(matrix, weights)
    var = value_at_risk(x, alpha)
    tail = x <= -var
    per_asset = -u * m.values[tail].mean(axis=0)
    total = expected_shortfall(x, alpha)
    return ContributionReport(per_asset, total, Method.ES_DIRECT, m.asset_names,
                              details={"var": var, "tail_size": int(tail.sum())})


def euler_var_contrib_kernel(matrix, weights, alpha: float, cfg: KernelConfig | None = None,
                             *, rescale: bool = False) -> ContributionReport:
    """Kernel-smoothed Euler VaR contributions.

    ``total`` is ``VaR_alpha(X_hat + b xi)``; each contribution is minus the
    Nadaraya-Watson estimate of ``E[u_i X_i | X = -total]`` with the same
    bandwidth. The contributions sum to ``total + b * E[xi | X_hat + b xi = -total]``;
    the gap is left in ``residual`` unless ``rescale`` is set, which
    multiplies all contributions by one common factor to close it.
    """
    cfg = cfg or KernelConfig()
    m, u, x = _setup(matrix, weights)
    b = cfg.resolve(x)
    total = smoothed_quantile(-x, cfg, alpha, bandwidth=b)
    x0 = -total
    per_asset = -nadaraya_watson(x, m.values * u, cfg, x0, bandwidth=b)
    per_asset = np.atleast_1d(per_asset)
    details = {
        "bandwidth": b,
        "query_point": x0,
        "smoothing_term": b * smoothing_noise_mean(x, b, x0),
    }
    if rescale:
        s = per_asset.sum()
        if s == 0:
            raise DegeneracyError("cannot rescale contributions summing to zero")
        details["multiplier"] = total / s
        per_asset = per_asset * (total / s)
    return ContributionReport(per_asset, total, Method.VAR_KERNEL, m.asset_names, details=details)


def euler_var_contrib_linear(matrix, weights, alpha: float) -> ContributionReport:
    """Best-linear-prediction approximation
    ``cov(u_i X_i, X) / var(X) * UL_VaR(X) - E[u_i X_i]``."""
    m, u, x = _setup(matrix, weights)
    var_x = x.var()
    if var_x == 0.0:
        raise DegeneracyError("zero portfolio variance: linear VaR approximation undefined")
    total = value_at_risk(x, alpha)
    ul = total + x.mean()
    per_asset = _weighted_cov(m.values, u, x) / var_x * ul - u * m.values.mean(axis=0)
    return ContributionReport(per_asset, total, Method.VAR_LINEAR_APPROX, m.asset_names)


def to_unexpected_loss(report: ContributionReport, matrix, weights) -> ContributionReport:
    """Shift contributions from ``rho`` to ``UL_rho = rho + E[X]``; the
    Euler contribution of ``E[X]`` is ``E[u_i X_i]``."""
    m, u, x = _setup(matrix, weights)
    return ContributionReport(report.per_asset + u * m.values.mean(axis=0),
                              report.total + float(x.mean()), report.method,
                              report.asset_names, report.degenerate,
                              {**report.details, "unexpected_loss": True})


def euler_contrib(spec: RiskMeasureSpec, matrix, weights, cfg: KernelConfig | None = None,
                  *, var_method: str = "kernel", rescale: bool = False) -> ContributionReport:
    """Euler contributions for any supported measure.

    VaR uses the kernel estimator by default; ``var_method="linear"`` selects
    the regression approximation.
    """
    if spec.kind is MeasureKind.STD_DEV:
        return euler_stddev_contrib(matrix, weights, spec.c)
    if spec.kind is MeasureKind.ES:
        rep = euler_es_contrib(matrix, weights, spec.alpha)
    elif var_method == "kernel":
        rep = euler_var_contrib_kernel(matrix, weights, spec.alpha, cfg, rescale=rescale)
    elif var_method == "linear":
        rep = euler_var_contrib_linear(matrix, weights, spec.alpha)
    else:
        raise ValidationError(f"unknown VaR contribution method {var_method!r}")
    return to_unexpected_loss(rep, matrix, weights) if spec.unexpected_loss else rep


def marginal_contrib(spec: RiskMeasureSpec, matrix, weights) -> ContributionReport:
    """With-without contributions ``rho(X) - rho(X - u_i X_i)``."""
    m, u, x = _setup(matrix, weights)
    total = spec.evaluate(x)
    per_asset = np.empty(m.n_assets)
    for i in range(m.n_assets):
        without = x - u[i] * m.values[:, i]
        per_asset[i] = total - spec.evaluate(without)
    return ContributionReport(per_asset, total, Method.MARGINAL, m.asset_names)


def normalized_marginal_contrib(spec: RiskMeasureSpec, matrix, weights) -> ContributionReport:
    """Marginal contributions rescaled to add up to ``rho(X)``."""
    raw = marginal_contrib(spec, matrix, weights)
    s = raw.per_asset.sum()
    if s == 0.0:
        raise DegeneracyError("marginal contributions sum to zero; cannot normalise")
    return ContributionReport(raw.per_asset / s * raw.total, raw.total, Method.MARGINAL_NORMALIZED,
                              raw.asset_names, details={"scale": raw.total / s})


def rorac(matrix, weights, spec: RiskMeasureSpec, contributions: ContributionReport, *,
          capital: float | None = None) -> RoracReport:
    """Portfolio RORAC ``E[X] / rho(X)`` and per-asset ``E[u_i X_i] / contribution_i``.

    ``capital`` replaces ``rho(X)`` in the portfolio ratio; pass
    ``contributions.total`` to measure both ratios against the risk function
    the contributions were derived from (the smoothed quantile for kernel VaR).
    """
    m, u, x = _setup(matrix, weights)
    means = u * m.values.mean(axis=0)
    risk = spec.evaluate(x) if capital is None else float(capital)
    port_ok = risk > 0
    port = float(means.sum() / risk) if port_ok else float("nan")
    caps = np.asarray(contributions.per_asset, dtype=float)
    defined = caps > 0
    per = np.full(m.n_assets, np.nan)
    per[defined] = means[defined] / caps[defined]
    return RoracReport(port, per, defined, bool(port_ok))


ContributionMethod = Callable[[RiskMeasureSpec, object, np.ndarray], ContributionReport]

_PROBE_METHODS: dict[str, ContributionMethod] = {
    "euler": lambda spec, m, u: euler_contrib(spec, m, u),
    "euler_linear": lambda spec, m, u: euler_contrib(spec, m, u, var_method="linear"),
    "marginal": marginal_contrib,
    "marginal_normalized": normalized_marginal_contrib,
}


@dataclass(frozen=True)
class ProbeVerdict:
    """Outcome of a RORAC compatibility probe for one asset.

    ``hypothesis`` is ``"greater"`` / ``"less"`` when the asset's RORAC is
    above / below the portfolio RORAC, else ``"indeterminate"``. ``holds[j]``
    says whether increasing the asset's weight by the factor ``1 + steps[j]``
    moved the portfolio RORAC in the direction the hypothesis predicts.
    """

    hypothesis: str
    asset_rorac: float
    portfolio_rorac: float
    steps: tuple[float, ...]
    perturbed_rorac: tuple[float, ...]
    holds: tuple[bool, ...]

    @property
    def compatible(self) -> bool | None:
        """``None`` when no hypothesis applies, else whether every step confirmed it."""
        if self.hypothesis == "indeterminate":
            return None
        return all(self.holds)


def rorac_compatibility_probe(spec: RiskMeasureSpec, matrix, weights, i: int,
                              steps: Sequence[float] = (1e-3, 1e-2), *,
                              method: str | ContributionMethod = "euler",
                              rtol: float = 1e-12) -> ProbeVerdict:
    """Check the RORAC compatibility implication for asset ``i``.

    The asset RORAC comes from the chosen contribution method; the portfolio
    RORAC before and after the weight change is ``E[X] / spec(X)``.
    """
    m, u, _ = _setup(matrix, weights)
    contrib = _PROBE_METHODS[method] if isinstance(method, str) else method
    rep = contrib(spec, m, u)
    rr = rorac(m, u, spec, rep)
    means = m.values.mean(axis=0)
    r_i, r = rr.per_asset_rorac[i], rr.portfolio_rorac
    if not (rr.defined[i] and rr.portfolio_defined) or abs(r_i - r) <= rtol * max(abs(r), 1e-300):
        hyp = "indeterminate"
    else:
        hyp = "greater" if r_i > r else "less"
    perturbed, holds = [], []
    for h in steps:
        if not h > 0:
            raise ValidationError(f"probe steps must be positive, got {h!r}")
        v = u.copy()
        v[i] *= 1 + h
        rho_v = spec.evaluate(m.values @ v)
        r_h = float(v @ means / rho_v) if rho_v > 0 else float("nan")
        perturbed.append(r_h)
        if hyp == "greater":
            holds.append(bool(r_h > r))
        elif hyp == "less":
            holds.append(bool(r_h < r))
        else:
            holds.append(False)
    return ProbeVerdict(hyp, float(r_i), float(r), tuple(steps), tuple(perturbed), tuple(holds))


def standalone_risks(spec: RiskMeasureSpec, matrix, weights) -> np.ndarray:
    """``rho(u_i X_i)`` per asset."""
    m, u, _ = _setup(matrix, weights)
    return np.array([spec.evaluate(u[i] * m.values[:, i]) for i in range(m.n_assets)])


def diversification_index(spec: RiskMeasureSpec, matrix, weights) -> float:
    """``rho(X) / sum_i rho(u_i X_i)``."""
    m, u, x = _setup(matrix, weights)
    denom = standalone_risks(spec, m, u).sum()
    if not denom > 0:
        raise DegeneracyError(f"sum of stand-alone risks is {denom!r}; diversification index undefined")
    return float(spec.evaluate(x) / denom)


def marginal_diversification_index(spec: RiskMeasureSpec, matrix, weights,
                                   contributions: ContributionReport) -> np.ndarray:
    """``contribution_i / rho(u_i X_i)``; NaN where the stand-alone risk is not positive."""
    alone = standalone_risks(spec, matrix, weights)
    out = np.full(alone.shape, np.nan)
    ok = alone > 0
    out[ok] = np.asarray(contributions.per_asset)[ok] / alone[ok]
    return out


def gradient_check(spec: RiskMeasureSpec, matrix, weights, eps: float = 1e-4) -> np.ndarray:
    """Relative gap between closed-form Euler contributions and central
    finite differences ``(f(u + eps u_i e_i) - f(u - eps u_i e_i)) / (2 eps)``
    of ``f(u) = rho(X(u))`` on the same scenarios."""
    if spec.kind is MeasureKind.VAR:
        raise ValidationError("gradient_check supports StdDev and ES only")
    if not 0 < eps <= 0.1:
        raise ValidationError(f"eps must lie in (0, 0.1], got {eps!r}")
    m, u, _ = _setup(matrix, weights)
    closed = euler_contrib(spec, m, u).per_asset
    out = np.zeros(m.n_assets)
    for i in range(m.n_assets):
        if u[i] == 0:
            continue  # contribution u_i * df/du_i vanishes on both sides
        up, dn = u.copy(), u.copy()
        up[i] *= 1 + eps
        dn[i] *= 1 - eps
        fd = (spec.evaluate(m.values @ up) - spec.evaluate(m.values @ dn)) / (2 * eps)
        out[i] = abs(fd - closed[i]) / max(abs(closed[i]), 1e-12)
    return out
