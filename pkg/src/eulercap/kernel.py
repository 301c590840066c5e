"""Kernel smoothing of the empirical measure.

Adding independent noise ``b * xi`` (``xi`` with kernel density ``phi``) to
the empirical portfolio outcome gives the Rosenblatt-Parzen density, a
strictly increasing smoothed CDF (used to solve for smoothed quantiles) and
Nadaraya-Watson estimates of conditional expectations given the smoothed
outcome.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, special

from eulercap.errors import DegeneracyError, ValidationError
from eulercap.measures import order_index, quantile

SILVERMAN = "silverman"
GAUSSIAN = "gaussian"

_SQRT_2PI = math.sqrt(2.0 * math.pi)


@dataclass(frozen=True)
class KernelConfig:
    """Kernel choice and bandwidth (a positive number or ``"silverman"``)."""

    kernel: str = GAUSSIAN
    bandwidth: float | str = SILVERMAN

    def __post_init__(self):
        if self.kernel != GAUSSIAN:
            raise ValidationError(f"unsupported kernel {self.kernel!r}; only 'gaussian' has a closed-form CDF here")
        bw = self.bandwidth
        if isinstance(bw, str):
            if bw.lower() != SILVERMAN:
                raise ValidationError(f"unknown bandwidth rule {bw!r}")
            object.__setattr__(self, "bandwidth", SILVERMAN)
        elif not (np.isfinite(bw) and bw > 0):
            raise ValidationError(f"bandwidth must be positive, got {bw!r}")

    def resolve(self, sample) -> float:
        """Bandwidth to use for ``sample``."""
        if self.bandwidth == SILVERMAN:
            return silverman_bandwidth(sample)
        return float(self.bandwidth)


def silverman_rule(sigma: float, iqr: float, n: int) -> float:
    """``0.9 * min(sigma, iqr / 1.34) * n**(-1/5)``; a zero IQR falls back to sigma."""
    spread = min(sigma, iqr / 1.34) if iqr > 0 else sigma
    return 0.9 * spread * n ** -0.2


def silverman_bandwidth(sample) -> float:
    """Silverman's rule-of-thumb bandwidth of ``sample``."""
    x = np.asarray(sample, dtype=float).ravel()
    if x.size < 2:
        raise ValidationError("Silverman bandwidth needs at least two observations")
    sigma = float(x.std())
    if sigma == 0.0:
        raise DegeneracyError("zero-spread sample: all observations equal")
    iqr = quantile(x, 0.75) - quantile(x, 0.25)
    return silverman_rule(sigma, iqr, x.size)


def rp_density(sample, cfg: KernelConfig, x, *, bandwidth: float | None = None):
    """Rosenblatt-Parzen density ``(1/(bN)) sum_k phi((x - x_k)/b)`` at ``x``."""
    xs = np.asarray(sample, dtype=float).ravel()
    b = bandwidth if bandwidth is not None else cfg.resolve(xs)
    pts = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty(pts.shape)
    chunk = max(1, 2**22 // max(xs.size, 1))
    flat = pts.ravel()
    res = out.ravel()
    for s in range(0, flat.size, chunk):
        with np.errstate(over="ignore"):  # huge |z| just gives a zero kernel value
            z = (flat[s:s + chunk, None] - xs[None, :]) / b
            res[s:s + chunk] = np.exp(-0.5 * z * z).sum(axis=1) / (_SQRT_2PI * b * xs.size)
    return float(out[0]) if np.ndim(x) == 0 else out


# Phi(-12) ~ 2e-33: observations further than this many bandwidths from the
# evaluation point contribute exactly 0 or 1 to the smoothed CDF.
_CDF_WINDOW = 12.0


def smoothed_cdf(sample, b: float, y: float, *, presorted: bool = False) -> float:
    """``P[X_hat + b xi <= y] = (1/N) sum_k Phi((y - x_k)/b)``."""
    xs = np.asarray(sample, dtype=float).ravel()
    if not presorted:
        xs = np.sort(xs)
    lo, hi = np.searchsorted(xs, [y - _CDF_WINDOW * b, y + _CDF_WINDOW * b])
    inner = special.ndtr((y - xs[lo:hi]) / b).sum()
    return float((lo + inner) / xs.size)


def smoothed_quantile(sample, cfg: KernelConfig, gamma: float, *,
                      bandwidth: float | None = None, presorted: bool = False) -> float:
    """gamma-quantile of the kernel-smoothed distribution ``X_hat + b xi``.

    Root of the smoothed CDF, bracketed around the empirical quantile and
    solved to ``1e-10 * (1 + |y|)``. Pass ``presorted=True`` when ``sample``
    is already sorted ascending.
    """
    if not 0.0 < gamma < 1.0:
        raise ValidationError(f"gamma must lie in (0, 1), got {gamma!r}")
    xs = np.asarray(sample, dtype=float).ravel()
    if not presorted:
        xs = np.sort(xs)
    b = bandwidth if bandwidth is not None else cfg.resolve(xs)

    def f(y):
        return smoothed_cdf(xs, b, y, presorted=True) - gamma

    # The smoothed CDF is below (k-1)/N < gamma at x_(k) - 12b and above
    # k'/N > gamma at x_(k') + 12b, with k = ceil(gamma N) and k' = floor(gamma N) + 1.
    n = xs.size
    k = order_index(gamma, n)
    k_up = min(int(math.floor(gamma * n)) + 1, n)
    q0 = float(xs[k - 1])
    lo = q0 - _CDF_WINDOW * b
    hi = float(xs[k_up - 1]) + _CDF_WINDOW * b
    # rounding can defeat the shifts when b is tiny relative to |x|; widen if so
    step = max(_CDF_WINDOW * b, 4 * np.spacing(abs(q0) + abs(hi)))
    for _ in range(200):
        if f(lo) < 0:
            break
        lo -= step
        step *= 2
    step = max(_CDF_WINDOW * b, 4 * np.spacing(abs(q0) + abs(hi)))
    for _ in range(200):
        if f(hi) > 0:
            break
        hi += step
        step *= 2
    try:
        y, info = optimize.brentq(f, lo, hi, xtol=1e-10 * (1 + abs(q0)), maxiter=200,
                                  full_output=True, disp=False)
    except ValueError as exc:  # bracket never straddled the root
        raise DegeneracyError(f"smoothed quantile bracket failed: {exc}") from None
    if not info.converged:
        raise DegeneracyError(f"smoothed quantile did not converge after {info.iterations} iterations")
    return float(y)


def kernel_weights(x_sample, b: float, x0: float) -> np.ndarray:
    """Normalised Gaussian kernel weights at ``x0``.

    The exponent is shifted by the nearest observation's, written as
    ``-(z - z_min)(z + z_min)/2`` so that no squared distance is formed, and
    far-tail query points keep full precision. If even ``z_min`` overflows,
    the weights take their small-bandwidth limit: equal mass on the nearest
    observations.
    """
    xs = np.asarray(x_sample, dtype=float).ravel()
    if not np.isfinite(x0):
        raise ValidationError(f"query point must be finite, got {x0!r}")
    d = np.abs(x0 - xs)
    d_min = d.min()
    with np.errstate(over="ignore", invalid="ignore"):
        z = d / b
        z_min = d_min / b
        if np.isfinite(z_min):
            w = np.exp(-0.5 * (z - z_min) * (z + z_min))
        else:
            w = (d == d_min).astype(float)
    return w / w.sum()


def nadaraya_watson(x_sample, y_sample, cfg: KernelConfig, x0: float, *,
                    bandwidth: float | None = None):
    """Kernel estimate of ``E[Y | X = x0]``.

    ``y_sample`` may be a vector or an ``N x n`` matrix; columns share the
    weights, so estimates of column sums equal sums of column estimates.
    """
    xs = np.asarray(x_sample, dtype=float).ravel()
    ys = np.asarray(y_sample, dtype=float)
    if ys.shape[0] != xs.size:
        raise ValidationError(f"x and y samples differ in length ({xs.size} vs {ys.shape[0]})")
    b = bandwidth if bandwidth is not None else cfg.resolve(xs)
    w = kernel_weights(xs, b, x0)
    est = w @ ys
    return float(est) if ys.ndim == 1 else est


def nadaraya_watson_se(x_sample, y_sample, b: float, x0: float) -> float:
    """Plug-in standard error of the Nadaraya-Watson estimate at ``x0``:
    ``sqrt(sum_k w_k**2 (y_k - m)**2)`` with normalised weights ``w``."""
    ys = np.asarray(y_sample, dtype=float).ravel()
    w = kernel_weights(x_sample, b, x0)
    m = w @ ys
    return float(np.sqrt(np.sum(w * w * (ys - m) ** 2)))


def smoothing_noise_mean(x_sample, b: float, x0: float) -> float:
    """``E[xi | X_hat + b xi = x0]``.

    Given ``X_hat = x_k`` the noise must equal ``(x0 - x_k)/b``; scenario
    ``k`` is weighted by ``phi((x0 - x_k)/b)``.
    """
    xs = np.asarray(x_sample, dtype=float).ravel()
    w = kernel_weights(xs, b, x0)
    return float(w @ ((x0 - xs) / b))
