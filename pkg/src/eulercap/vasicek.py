"""Asymptotic two-factor Vasicek model with two homogeneous sub-portfolios.

Sub-portfolio loss fractions are ``L_i = Phi((t_i + sqrt(rho_i) S_i) / sqrt(1 - rho_i))``
with ``(S_1, S_2)`` jointly standard normal, ``corr(S_1, S_2) = tau``, and the
portfolio loss is ``L(u) = u L_1 + (1 - u) L_2``.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial import hermite_e
from scipy import special

from eulercap.errors import ValidationError
from eulercap.scenarios import Convention, ScenarioMatrix

norm_cdf = special.ndtr
norm_ppf = special.ndtri

CHUNK = 1 << 16  # scenarios per random substream; fixed so output does not depend on workers


def norm_pdf(x):
    """Standard normal density."""
    return np.exp(-0.5 * np.square(x)) / math.sqrt(2 * math.pi)


@lru_cache(maxsize=None)
def _gh_rule(n: int):
    nodes, weights = hermite_e.hermegauss(n)
    return nodes, weights / math.sqrt(2 * math.pi)


def gauss_hermite_expectation(f, n: int = 64) -> float:
    """``E[f(Z)]`` for standard normal ``Z`` by ``n``-point Gauss-Hermite quadrature."""
    nodes, weights = _gh_rule(n)
    return float(weights @ np.asarray(f(nodes), dtype=float))


@dataclass(frozen=True)
class VasicekParams:
    """Thresholds, asset correlations and factor correlation of the two-factor model."""

    t1: float
    t2: float
    rho1: float
    rho2: float
    tau: float

    def __post_init__(self):
        for name in ("t1", "t2", "rho1", "rho2", "tau"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise ValidationError(f"{name} must be finite, got {v!r}")
        for name in ("rho1", "rho2"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValidationError(f"{name} must lie in (0, 1), got {v!r}")
        if not 0 <= self.tau <= 1:
            raise ValidationError(f"tau must lie in [0, 1], got {self.tau!r}")

    @classmethod
    def from_pds(cls, p1: float, p2: float, rho1: float, rho2: float, tau: float) -> VasicekParams:
        """Parameters with thresholds ``t_i = Phi^-1(p_i)``."""
        for name, p in (("p1", p1), ("p2", p2)):
            if not 0 < p < 1:
                raise ValidationError(f"{name} must lie in (0, 1), got {p!r}")
        return cls(float(norm_ppf(p1)), float(norm_ppf(p2)), rho1, rho2, tau)

    @classmethod
    def reference_case(cls) -> VasicekParams:
        """PDs 1% and 2.5%, asset correlations 0.2 and 0.3, factor correlation 0.4."""
        return cls.from_pds(0.01, 0.025, 0.2, 0.3, 0.4)

    @property
    def pds(self) -> tuple[float, float]:
        """Default probabilities ``Phi(t_1), Phi(t_2)``."""
        return float(norm_cdf(self.t1)), float(norm_cdf(self.t2))


def vasicek_loss(t: float, rho: float, s):
    """Loss fraction ``Phi((t + sqrt(rho) s) / sqrt(1 - rho))`` given factor value ``s``."""
    return norm_cdf((t + math.sqrt(rho) * np.asarray(s)) / math.sqrt(1 - rho))


@dataclass(frozen=True)
class FactorSample:
    """Simulated sub-portfolio losses and the factor draws behind them."""

    L1: np.ndarray
    L2: np.ndarray
    S1: np.ndarray
    S2: np.ndarray
    seed: int
    params: VasicekParams

    def __len__(self) -> int:
        return self.L1.size

    def loss_matrix(self) -> ScenarioMatrix:
        """The ``N x 2`` loss sample ``(L_1, L_2)``."""
        return ScenarioMatrix(np.column_stack([self.L1, self.L2]), ("L1", "L2"),
                              Convention.LOSS_ONLY)


def _draw_chunk(seq: np.random.SeedSequence, size: int) -> np.ndarray:
    rng = np.random.Generator(np.random.Philox(seq))
    return rng.standard_normal((2, size))


def simulate(params: VasicekParams, n: int, seed: int, *, workers: int = 1) -> FactorSample:
    """Draw ``n`` scenarios of ``(L_1, L_2, S_1, S_2)``.

    Scenarios are split into fixed chunks of ``CHUNK`` rows, each drawn from
    its own Philox substream spawned from ``seed``; the result is therefore
    bit-identical for any number of ``workers``.
    """
    if n < 1:
        raise ValidationError(f"need at least one scenario, got {n}")
    sizes = [min(CHUNK, n - s) for s in range(0, n, CHUNK)]
    seqs = np.random.SeedSequence(seed).spawn(len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_draw_chunk, seqs, sizes))
    else:
        parts = [_draw_chunk(q, s) for q, s in zip(seqs, sizes)]
    z = np.concatenate(parts, axis=1)
    s1 = z[0]
    s2 = params.tau * s1 + math.sqrt(1 - params.tau**2) * z[1]
    l1 = vasicek_loss(params.t1, params.rho1, s1)
    l2 = vasicek_loss(params.t2, params.rho2, s2)
    for a in (l1, l2, s1, s2):
        a.setflags(write=False)
    return FactorSample(l1, l2, s1, s2, seed, params)


def _check_u(u: float) -> float:
    if not 0 <= u <= 1:
        raise ValidationError(f"sub-portfolio weight must lie in [0, 1], got {u!r}")
    return float(u)


def portfolio_loss(sample: FactorSample, u: float) -> np.ndarray:
    """``u L_1 + (1 - u) L_2`` per scenario."""
    u = _check_u(u)
    return u * sample.L1 + (1 - u) * sample.L2


def conditional_el_given_factor(params: VasicekParams, u: float, factor: str, s):
    """``E[L(u) | S_1 = s]`` or ``E[L(u) | S_2 = s]`` in closed form."""
    u = _check_u(u)
    p = params
    s = np.asarray(s, dtype=float)
    if factor in ("S1", 1):
        own = vasicek_loss(p.t1, p.rho1, s)
        other = norm_cdf((p.t2 + math.sqrt(p.rho2) * p.tau * s) / math.sqrt(1 - p.rho2 * p.tau**2))
        out = u * own + (1 - u) * other
    elif factor in ("S2", 2):
        own = vasicek_loss(p.t2, p.rho2, s)
        other = norm_cdf((p.t1 + math.sqrt(p.rho1) * p.tau * s) / math.sqrt(1 - p.rho1 * p.tau**2))
        out = u * other + (1 - u) * own
    else:
        raise ValidationError(f"factor must be 'S1' or 'S2', got {factor!r}")
    return float(out) if out.ndim == 0 else out


def vasicek_quantile(t: float, rho: float, alpha: float) -> float:
    """Exact alpha-quantile of a single Vasicek loss variable."""
    if not 0 < alpha < 1:
        raise ValidationError(f"alpha must lie in (0, 1), got {alpha!r}")
    return float(norm_cdf((t + math.sqrt(rho) * norm_ppf(alpha)) / math.sqrt(1 - rho)))


def vasicek_density(t: float, rho: float, x):
    """Density of the Vasicek loss ``Phi((t + sqrt(rho) S)/sqrt(1 - rho))`` at ``x`` in (0, 1)."""
    x = np.asarray(x, dtype=float)
    y = norm_ppf(x)
    s = (math.sqrt(1 - rho) * y - t) / math.sqrt(rho)
    return norm_pdf(s) * math.sqrt(1 - rho) / (math.sqrt(rho) * norm_pdf(y))
