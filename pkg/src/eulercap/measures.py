"""Portfolio risk measures on profit/loss samples.

All measures act on a vector of portfolio profit/loss outcomes ``x`` under
the empirical measure (mass ``1/N`` per scenario) and report risk as a
positive number for losses:

* ``VaR_a(X) = q_a(-X)`` with the lower quantile ``q_g(Y) = min{y : P[Y <= y] >= g}``
* ``ES_a(X) = -E[X | X <= -VaR_a(X)]``
* ``sigma_c(X) = c * std(X)`` (population variance)

Unexpected-loss variants add ``E[X]``.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from eulercap.errors import ValidationError


def _sample(x) -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise ValidationError("empty sample")
    return x


def _check_prob(p: float, name: str = "probability") -> float:
    p = float(p)
    if not 0.0 < p < 1.0:
        raise ValidationError(f"{name} must lie in (0, 1), got {p!r}")
    return p


def order_index(gamma: float, n: int) -> int:
    """1-based rank ``ceil(gamma * n)`` of the lower gamma-quantile.

    ``gamma * n`` products that are integers up to rounding (0.999 * 1e6)
    are snapped to the integer before taking the ceiling.
    """
    x = gamma * n
    r = round(x)
    k = r if abs(x - r) <= 1e-9 * max(1.0, x) else math.ceil(x)
    return min(max(int(k), 1), n)


def quantile(sample, gamma: float) -> float:
    """Lower empirical gamma-quantile: the ``ceil(gamma*N)``-th order statistic."""
    x = _sample(sample)
    gamma = _check_prob(gamma, "gamma")
    k = order_index(gamma, x.size)
    return float(np.partition(x, k - 1)[k - 1])


def value_at_risk(pl_sample, alpha: float) -> float:
    """``q_alpha(-X)``: the lower empirical alpha-quantile of the loss."""
    return quantile(-_sample(pl_sample), alpha)


def expected_shortfall(pl_sample, alpha: float) -> float:
    """``-mean{x_k : x_k <= -VaR_alpha}``; ties at the threshold are included."""
    x = _sample(pl_sample)
    threshold = -value_at_risk(x, alpha)
    return float(-x[x <= threshold].mean())


def std_dev_measure(pl_sample, c: float) -> float:
    """``c * sigma(X) - E[X]`` with the population standard deviation."""
    if not c > 0:
        raise ValidationError(f"c must be positive, got {c!r}")
    x = _sample(pl_sample)
    return float(c * x.std())


def chebychev_c(alpha: float) -> float:
    """Multiplier solving ``1 / (1 + c**2) = 1 - alpha`` (one-sided Chebychev)."""
    alpha = _check_prob(alpha, "alpha")
    return math.sqrt(alpha / (1.0 - alpha))


class MeasureKind(enum.Enum):
    """Families of supported risk measures."""

    STD_DEV = "std"
    VAR = "var"
    ES = "es"


@dataclass(frozen=True)
class RiskMeasureSpec:
    """A risk measure with its parameters, optionally in unexpected-loss form."""

    kind: MeasureKind
    alpha: float | None = None
    c: float | None = None
    unexpected_loss: bool = False

    def __post_init__(self):
        kind = MeasureKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if kind is MeasureKind.STD_DEV:
            if self.c is None or not self.c > 0:
                raise ValidationError(f"StdDev measure needs c > 0, got {self.c!r}")
            if self.unexpected_loss:
                raise ValidationError("unexpected loss is not defined for StdDev (already centred)")
        else:
            if self.alpha is None:
                raise ValidationError(f"{kind.name} measure needs alpha")
            _check_prob(self.alpha, "alpha")

    @classmethod
    def std_dev(cls, c: float) -> RiskMeasureSpec:
        """StdDev measure with multiplier ``c``."""
        return cls(MeasureKind.STD_DEV, c=c)

    @classmethod
    def var(cls, alpha: float, unexpected_loss: bool = False) -> RiskMeasureSpec:
        """VaR at ``alpha``."""
        return cls(MeasureKind.VAR, alpha=alpha, unexpected_loss=unexpected_loss)

    @classmethod
    def es(cls, alpha: float, unexpected_loss: bool = False) -> RiskMeasureSpec:
        """Expected shortfall at ``alpha``."""
        return cls(MeasureKind.ES, alpha=alpha, unexpected_loss=unexpected_loss)

    def base(self, pl_sample) -> float:
        """The measure without the unexpected-loss adjustment."""
        if self.kind is MeasureKind.STD_DEV:
            return std_dev_measure(pl_sample, self.c)
        if self.kind is MeasureKind.VAR:
            return value_at_risk(pl_sample, self.alpha)
        return expected_shortfall(pl_sample, self.alpha)

    def evaluate(self, pl_sample) -> float:
        """Risk of a profit/loss sample under this measure."""
        if self.unexpected_loss:
            return unexpected_loss(pl_sample, self)
        return self.base(pl_sample)

    __call__ = evaluate

    def describe(self) -> str:
        """Short label used in report headers."""
        if self.kind is MeasureKind.STD_DEV:
            return f"std(c={self.c:g})"
        prefix = "UL_" if self.unexpected_loss else ""
        return f"{prefix}{self.kind.name}(alpha={self.alpha:g})"


def unexpected_loss(pl_sample, spec: RiskMeasureSpec) -> float:
    """``rho(X) + E[X]`` for VaR or ES; for losses this is ``q_a(L) - E[L]`` etc."""
    if spec.kind is MeasureKind.STD_DEV:
        raise ValidationError("unexpected loss is not defined for StdDev (already centred)")
    x = _sample(pl_sample)
    return spec.base(x) + float(x.mean())


def homogeneity_check(spec: RiskMeasureSpec, pl_sample, h: float) -> float:
    """Relative gap ``|rho(h x) - h rho(x)| / max(|rho(x)|, 1e-12)``."""
    if not h > 0:
        raise ValidationError(f"h must be positive, got {h!r}")
    x = _sample(pl_sample)
    r = spec.evaluate(x)
    return abs(spec.evaluate(h * x) - h * r) / max(abs(r), 1e-12)
