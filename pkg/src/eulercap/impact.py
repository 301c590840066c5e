"""Risk impact of a factor (set) on a portfolio loss.

The loss ``L`` is split into ``E[L | S]`` and the uncorrelated residual
``L - E[L | S]``; the risk impact is the Euler contribution of ``E[L | S]``
to ``rho(L)`` relative to ``rho(L)``. The quasi risk impact compares
stand-alone risks instead: ``rho(E[L | S]) / rho(L)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from eulercap.errors import DegeneracyError, ValidationError
from eulercap.kernel import KernelConfig, nadaraya_watson, smoothed_quantile
from eulercap.measures import RiskMeasureSpec, quantile
from eulercap.vasicek import FactorSample, VasicekParams, conditional_el_given_factor, portfolio_loss


@dataclass(frozen=True)
class ConditionalELSample:
    """Scenario-wise pairs of ``E[L | S]`` and ``L``."""

    m: np.ndarray
    L: np.ndarray
    factor_label: str = "S"

    def __post_init__(self):
        m = np.asarray(self.m, dtype=float).ravel()
        L = np.asarray(self.L, dtype=float).ravel()
        if m.shape != L.shape:
            raise ValidationError(f"E[L|S] and L samples differ in length ({m.size} vs {L.size})")
        if m.size == 0:
            raise ValidationError("empty sample")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "L", L)

    def shifted(self, a: float) -> ConditionalELSample:
        """The pairs for ``L + a`` (whose conditional expectation is ``m + a``)."""
        return ConditionalELSample(self.m + a, self.L + a, self.factor_label)


@dataclass(frozen=True)
class RiskImpactReport:
    """All four impact measures of one factor at one confidence level."""

    ri_sigma: float
    ri_var: float
    ri_es: float
    qri_es: float
    alpha: float
    factor_label: str


def conditional_el_sample(params: VasicekParams, u: float, factor: str,
                          sample: FactorSample) -> ConditionalELSample:
    """Closed-form ``E[L(u) | S_i]`` at every scenario's factor draw, paired
    with that scenario's ``L(u)``."""
    if sample.params != params:
        raise ValidationError("factor sample was simulated with different model parameters")
    s = {"S1": sample.S1, "S2": sample.S2}.get(factor)
    if s is None:
        raise ValidationError(f"factor must be 'S1' or 'S2', got {factor!r}")
    m = conditional_el_given_factor(params, u, factor, s)
    return ConditionalELSample(m, portfolio_loss(sample, u), factor)


def risk_impact_sigma(pairs: ConditionalELSample) -> float:
    """``var(E[L|S]) / var(L)``, the coefficient of determination."""
    # np.var of a constant array can be a rounding residue instead of zero
    if np.ptp(pairs.L) == 0:
        raise DegeneracyError("zero loss variance: risk impact undefined")
    if np.ptp(pairs.m) == 0:
        return 0.0
    return float(pairs.m.var() / pairs.L.var())


def risk_impact_var(pairs: ConditionalELSample, alpha: float,
                    cfg: KernelConfig | None = None) -> float:
    """``(E[E[L|S] | L = q] - E[L]) / (E[L | L = q] - E[L])`` at the
    kernel-smoothed alpha-quantile ``q`` of ``L``.

    Both conditional expectations are Nadaraya-Watson estimates with the
    bandwidth of the ``L`` sample, so the denominator is the sum of the
    kernel Euler contributions of ``E[L|S]`` and of the residual.
    """
    cfg = cfg or KernelConfig()
    L = pairs.L
    if np.ptp(L) == 0:
        raise DegeneracyError("constant loss sample: VaR risk impact undefined")
    b = cfg.resolve(L)
    q = smoothed_quantile(L, cfg, alpha, bandwidth=b)
    est = nadaraya_watson(L, np.column_stack([pairs.m, L]), cfg, q, bandwidth=b)
    el = L.mean()
    den = est[1] - el
    if not den > 0:
        raise DegeneracyError(f"VaR unexpected loss is {den!r}; risk impact undefined")
    return float((est[0] - el) / den)


def _tail(L: np.ndarray, alpha: float) -> np.ndarray:
    return L >= quantile(L, alpha)


def risk_impact_es(pairs: ConditionalELSample, alpha: float) -> float:
    """``(E[E[L|S] | L >= q] - E[L]) / (E[L | L >= q] - E[L])``."""
    L = pairs.L
    tail = _tail(L, alpha)
    el = L.mean()
    den = L[tail].mean() - el
    if not den > 0:
        raise DegeneracyError(f"ES unexpected loss is {den!r}; risk impact undefined")
    return float((pairs.m[tail].mean() - el) / den)


def quasi_ri(pairs: ConditionalELSample, spec: RiskMeasureSpec) -> float:
    """``rho(E[L|S]) / rho(L)``, each sample evaluated on its own.

    Losses are fed to ``spec`` as profit/loss ``-L``; use unexpected-loss
    VaR/ES specs (or StdDev) for measures that ignore constant shifts.
    """
    denom = spec.evaluate(-pairs.L)
    if not denom > 0:
        raise DegeneracyError(f"rho(L) is {denom!r}; quasi risk impact undefined")
    return float(spec.evaluate(-pairs.m) / denom)


def quasi_ri_es(pairs: ConditionalELSample, alpha: float) -> float:
    """Quasi risk impact under the unexpected-loss ES."""
    return quasi_ri(pairs, RiskMeasureSpec.es(alpha, unexpected_loss=True))


def risk_impact(pairs: ConditionalELSample, alpha: float,
                cfg: KernelConfig | None = None) -> RiskImpactReport:
    """RI for sigma, VaR and ES together with the quasi RI for ES."""
    return RiskImpactReport(
        ri_sigma=risk_impact_sigma(pairs),
        ri_var=risk_impact_var(pairs, alpha, cfg),
        ri_es=risk_impact_es(pairs, alpha),
        qri_es=quasi_ri_es(pairs, alpha),
        alpha=alpha,
        factor_label=pairs.factor_label,
    )
