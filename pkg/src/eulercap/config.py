"""Run configuration: flat ``key = value`` files merged with command-line overrides.

Recognised keys::

    t1, t2 or p1, p2     default thresholds or default probabilities
    rho1, rho2, tau      asset and factor correlations
    gains                comma-separated per-asset expected gains
    tranches             comma-separated ``quantile:0.5`` / ``el_multiple:2`` entries
    weights              comma-separated portfolio weights (scenario-file modes)
    measure              std | var | es | ul_var | ul_es
    alpha, c             confidence level and StdDev multiplier
    scenarios, seed      Monte Carlo sample size and seed
    grid                 ``start:stop:step`` weight grid for figure modes
    bandwidth            positive number or ``silverman``
    scenario_file        path of a scenario CSV (relative to the config file)
    convention           profit_loss | loss_only

Lines starting with ``#`` and blank lines are ignored.
"""
from __future__ import annotations

import enum
import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from eulercap.errors import ValidationError
from eulercap.kernel import KernelConfig
from eulercap.measures import RiskMeasureSpec, chebychev_c
from eulercap.scenarios import Convention
from eulercap.tranches import TrancheSpec
from eulercap.vasicek import VasicekParams

KNOWN_KEYS = frozenset({
    "t1", "t2", "p1", "p2", "rho1", "rho2", "tau", "gains", "tranches", "weights",
    "measure", "alpha", "c", "scenarios", "seed", "grid", "bandwidth", "scenario_file",
    "convention",
})
MODEL_KEYS = ("t1", "t2", "p1", "p2", "rho1", "rho2", "tau")

DEFAULT_SEED = 12345
DEFAULT_SCENARIOS = 1_000_000
DEFAULT_GRID = "0:1:0.01"
DEFAULT_GAINS = (0.015, 0.04)
DEFAULT_FIGURE_ALPHA = 0.999
DEFAULT_REPORT_ALPHA = 0.99


class Mode(enum.Enum):
    """Command-line run modes."""

    ALLOC = "alloc"
    DIVERS = "divers"
    CDO = "cdo"
    IMPACT = "impact"
    FIGURE = "figure"


class Figure(enum.Enum):
    """Curve tables available in figure mode."""

    RORAC = "rorac"
    TRANCHE_EL = "tranche-el"
    RISK_IMPACT = "risk-impact"
    QRI = "qri"


def read_config_file(path: str | os.PathLike) -> dict[str, str]:
    """Parse a flat ``key = value`` file; errors name the offending line."""
    out: dict[str, str] = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValidationError(f"{path}, line {lineno}: expected 'key = value', got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            key = key.lower()
            if key not in KNOWN_KEYS:
                raise ValidationError(f"{path}, line {lineno}: unknown key {key!r}")
            if key in out:
                raise ValidationError(f"{path}, line {lineno}: duplicate key {key!r}")
            out[key] = value
    if "scenario_file" in out and not os.path.isabs(out["scenario_file"]):
        base = os.path.dirname(os.path.abspath(path))
        out["scenario_file"] = os.path.join(base, out["scenario_file"])
    return out


def _float(raw: Mapping[str, str], key: str) -> float:
    try:
        x = float(raw[key])
    except ValueError:
        raise ValidationError(f"{key} must be a number, got {raw[key]!r}") from None
    if not math.isfinite(x):
        raise ValidationError(f"{key} must be finite, got {raw[key]!r}")
    return x


def _int(raw: Mapping[str, str], key: str) -> int:
    try:
        return int(raw[key])
    except ValueError:
        raise ValidationError(f"{key} must be an integer, got {raw[key]!r}") from None


def _floats(text: str, key: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ValidationError(f"{key} must be a comma-separated list of numbers, got {text!r}") from None
    if not vals:
        raise ValidationError(f"{key} is empty")
    return vals


def parse_grid(text: str) -> np.ndarray:
    """``start:stop:step`` to an inclusive grid inside ``[0, 1]``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"grid must look like start:stop:step, got {text!r}")
    try:
        a, b, step = (float(p) for p in parts)
    except ValueError:
        raise ValidationError(f"grid entries must be numbers, got {text!r}") from None
    if not step > 0:
        raise ValidationError(f"grid step must be positive, got {step!r}")
    if not 0 <= a <= b <= 1:
        raise ValidationError(f"grid bounds must satisfy 0 <= start <= stop <= 1, got {a!r}:{b!r}")
    n = int(math.floor((b - a) / step + 1e-9))
    return np.round(a + step * np.arange(n + 1), 12)


def parse_tranches(text: str) -> TrancheSpec:
    """Comma-separated ``quantile:a`` / ``el_multiple:b`` entries to a tranche spec."""
    entries = []
    for item in (s.strip() for s in text.split(",")):
        if not item:
            continue
        kind, sep, value = item.partition(":")
        if not sep:
            raise ValidationError(f"tranche entry must look like type:value, got {item!r}")
        try:
            entries.append((kind.strip().lower(), float(value)))
        except ValueError:
            raise ValidationError(f"tranche value must be a number, got {value!r}") from None
    return TrancheSpec.from_entries(entries)


def parse_model(raw: Mapping[str, str]) -> VasicekParams:
    """Model parameters from thresholds ``t1, t2`` or default probabilities ``p1, p2``."""
    for a, b in (("t1", "p1"), ("t2", "p2")):
        if a in raw and b in raw:
            raise ValidationError(f"give either {a} or {b}, not both")
        if a not in raw and b not in raw:
            raise ValidationError(f"model needs {a} or {b}")
    for key in ("rho1", "rho2", "tau"):
        if key not in raw:
            raise ValidationError(f"model needs {key}")
    rho1, rho2, tau = (_float(raw, k) for k in ("rho1", "rho2", "tau"))
    if "p1" in raw or "p2" in raw:
        if "t1" in raw or "t2" in raw:
            raise ValidationError("mixing thresholds and default probabilities is not supported")
        return VasicekParams.from_pds(_float(raw, "p1"), _float(raw, "p2"), rho1, rho2, tau)
    return VasicekParams(_float(raw, "t1"), _float(raw, "t2"), rho1, rho2, tau)


def parse_measure(name: str, alpha: float, c: float | None) -> RiskMeasureSpec:
    """Measure name, confidence level and optional StdDev multiplier to a spec."""
    name = name.lower()
    if name == "std":
        return RiskMeasureSpec.std_dev(chebychev_c(alpha) if c is None else c)
    table = {"var": (RiskMeasureSpec.var, False), "es": (RiskMeasureSpec.es, False),
             "ul_var": (RiskMeasureSpec.var, True), "ul_es": (RiskMeasureSpec.es, True)}
    if name not in table:
        raise ValidationError(f"unknown measure {name!r}; use std, var, es, ul_var or ul_es")
    make, ul = table[name]
    return make(alpha, unexpected_loss=ul)


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one command-line run."""

    mode: Mode
    figure: Figure | None
    model: VasicekParams | None
    scenario_file: str | None
    measure: RiskMeasureSpec
    n_scenarios: int
    seed: int
    grid: np.ndarray
    kernel: KernelConfig
    gains: tuple[float, ...] | None
    tranches: TrancheSpec
    weights: tuple[float, ...] | None
    convention: Convention
    rescale_var_contrib: bool = False
    workers: int = 1
    out: str | None = None
    raw: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if (self.model is None) == (self.scenario_file is None):
            raise ValidationError("exactly one of model parameters and a scenario file is required")
        if self.n_scenarios < 1:
            raise ValidationError(f"scenarios must be positive, got {self.n_scenarios}")
        if self.workers < 1:
            raise ValidationError(f"workers must be positive, got {self.workers}")

    def digest(self) -> str:
        """Hash of every setting that can change the output (not ``workers`` or ``out``)."""
        payload = {
            "mode": self.mode.value,
            "figure": self.figure.value if self.figure else None,
            "model": None if self.model is None else [repr(v) for v in (
                self.model.t1, self.model.t2, self.model.rho1, self.model.rho2, self.model.tau)],
            "scenario_file": self.scenario_file,
            "measure": self.measure.describe(),
            "n": self.n_scenarios,
            "seed": self.seed,
            "grid": [repr(float(x)) for x in self.grid],
            "bandwidth": repr(self.kernel.bandwidth),
            "gains": None if self.gains is None else [repr(g) for g in self.gains],
            "tranches": repr(self.tranches),
            "weights": None if self.weights is None else [repr(w) for w in self.weights],
            "convention": self.convention.value,
            "rescale": self.rescale_var_contrib,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def build_config(mode: str, raw: Mapping[str, str], *, figure: str | None = None,
                 rescale_var_contrib: bool = False, workers: int = 1,
                 out: str | None = None) -> RunConfig:
    """Resolve merged key/value settings (file values overridden by flags)."""
    m = Mode(mode)
    fig = None
    if m is Mode.FIGURE:
        if figure is None:
            raise ValidationError("figure mode needs --figure rorac|tranche-el|risk-impact|qri")
        try:
            fig = Figure(figure)
        except ValueError:
            raise ValidationError(f"unknown figure {figure!r}") from None
    elif figure is not None:
        raise ValidationError("--figure is only valid in figure mode")

    has_model = any(k in raw for k in MODEL_KEYS)
    scenario_file = raw.get("scenario_file")
    if m is Mode.FIGURE:
        if scenario_file is not None:
            raise ValidationError("figure modes simulate the factor model; drop scenario_file")
        model = parse_model(raw) if has_model else VasicekParams.reference_case()
    else:
        if has_model:
            raise ValidationError(f"{m.value} mode reads a scenario file; drop the model parameters")
        if scenario_file is None:
            raise ValidationError(f"{m.value} mode needs a scenario file (--input or scenario_file)")
        model = None

    default_alpha = DEFAULT_FIGURE_ALPHA if m is Mode.FIGURE else DEFAULT_REPORT_ALPHA
    alpha = _float(raw, "alpha") if "alpha" in raw else default_alpha
    c = _float(raw, "c") if "c" in raw else None
    default_measure = "ul_var" if fig is Figure.RORAC else "es"
    measure = parse_measure(raw.get("measure", default_measure), alpha, c)

    bw = raw.get("bandwidth", "silverman")
    try:
        bandwidth: float | str = float(bw)
    except ValueError:
        bandwidth = bw
    kernel = KernelConfig(bandwidth=bandwidth)

    convention_name = raw.get("convention", "loss_only" if m in (Mode.CDO, Mode.IMPACT) else "profit_loss")
    try:
        convention = Convention[convention_name.upper()]
    except KeyError:
        raise ValidationError(f"unknown convention {convention_name!r}") from None

    return RunConfig(
        mode=m,
        figure=fig,
        model=model,
        scenario_file=scenario_file,
        measure=measure,
        n_scenarios=_int(raw, "scenarios") if "scenarios" in raw else DEFAULT_SCENARIOS,
        seed=_int(raw, "seed") if "seed" in raw else DEFAULT_SEED,
        grid=parse_grid(raw.get("grid", DEFAULT_GRID)),
        kernel=kernel,
        gains=_floats(raw["gains"], "gains") if "gains" in raw else None,
        tranches=parse_tranches(raw["tranches"]) if "tranches" in raw else TrancheSpec.reference_case(),
        weights=_floats(raw["weights"], "weights") if "weights" in raw else None,
        convention=convention,
        rescale_var_contrib=rescale_var_contrib,
        workers=workers,
        out=out,
        raw=dict(raw),
    )
