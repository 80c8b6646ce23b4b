"""Exchangeable copula samplers parametrized by pairwise Kendall's tau.

Elliptical families use an equicorrelation factor model; Archimedean
families use Marshall-Olkin frailty sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special
from scipy.stats import kendalltau

from copdep.data import RandomStream
from copdep.errors import ConfigurationError

FAMILIES = ("independence", "clayton", "gumbel", "frank", "normal", "student")
TAU_TOLERANCE = 1e-10


@dataclass(frozen=True)
class CopulaSpec:
    family: str = "independence"
    tau: float = 0.0
    n: int = 5
    df: int | None = None

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ConfigurationError(f"unknown copula family {self.family!r}; choose from {FAMILIES}")
        if not 0.0 <= self.tau < 1.0:
            raise ConfigurationError(f"Kendall's tau must lie in [0, 1), got {self.tau}")
        if self.family == "independence" and self.tau != 0.0:
            raise ConfigurationError("the independence copula has tau = 0")
        if self.family == "student":
            if self.df is None or int(self.df) != self.df or self.df < 1:
                raise ConfigurationError(f"student copula needs a positive integer df, got {self.df}")
        if self.n < 1:
            raise ConfigurationError(f"dimension must be positive, got {self.n}")

    @property
    def label(self) -> str:
        if self.family == "student":
            return f"student{self.df}"
        return self.family

    @classmethod
    def from_label(cls, label: str, tau: float = 0.0, n: int = 5) -> CopulaSpec:
        """Parse labels such as ``clayton``, ``student3``, ``student(df=1)``, ``indep``."""
        text = label.strip().lower()
        if text in ("indep", "independence"):
            return cls("independence", 0.0, n)
        if text.startswith("student") or text.startswith("t"):
            digits = "".join(ch for ch in text if ch.isdigit())
            if not digits:
                raise ConfigurationError(f"student copula label needs degrees of freedom: {label!r}")
            return cls("student", tau, n, int(digits))
        return cls(text, tau, n)


def debye1(x: float) -> float:
    """First Debye function D₁(x) = (1/x) ∫₀ˣ t / (eᵗ - 1) dt."""
    if x == 0.0:
        return 1.0
    if x < 0.0:
        raise ConfigurationError("debye1 is only needed for x >= 0")
    value, _ = integrate.quad(lambda t: t / math.expm1(t) if t != 0.0 else 1.0, 0.0, x, epsabs=1e-13, epsrel=1e-13)
    return value / x


def frank_tau(theta: float) -> float:
    if theta == 0.0:
        return 0.0
    return 1.0 - 4.0 / theta * (1.0 - debye1(theta))


def kendall_to_param(family: str, tau: float) -> float:
    """Family parameter giving pairwise Kendall's tau ``tau``.

    clayton θ = 2τ/(1-τ), gumbel θ = 1/(1-τ), normal/student ρ = sin(πτ/2),
    frank θ solves τ(θ) = tau by bisection.
    """
    if not 0.0 <= tau < 1.0:
        raise ConfigurationError(f"Kendall's tau must lie in [0, 1), got {tau}")
    if family == "independence":
        if tau != 0.0:
            raise ConfigurationError("the independence copula has tau = 0")
        return 0.0
    if family == "clayton":
        return 2.0 * tau / (1.0 - tau)
    if family == "gumbel":
        return 1.0 / (1.0 - tau)
    if family in ("normal", "student"):
        return math.sin(math.pi * tau / 2.0)
    if family == "frank":
        if tau == 0.0:
            return 0.0
        lo, hi = 0.0, 1.0
        while frank_tau(hi) < tau:
            hi *= 2.0
        while True:
            mid = 0.5 * (lo + hi)
            err = frank_tau(mid) - tau
            if abs(err) <= TAU_TOLERANCE or hi - lo < 1e-15 * hi:
                return mid
            if err < 0:
                lo = mid
            else:
                hi = mid
    raise ConfigurationError(f"unknown copula family {family!r}")


def _positive_stable(alpha: float, size: int, rng: np.random.Generator) -> np.ndarray:
    """Kanter's representation of S with E exp(-sS) = exp(-s^alpha), 0 < alpha <= 1."""
    if alpha == 1.0:
        return np.ones(size)
    theta = rng.uniform(0.0, math.pi, size)
    e = rng.exponential(1.0, size)
    a = np.sin(alpha * theta) / np.sin(theta) ** (1.0 / alpha)
    b = (np.sin((1.0 - alpha) * theta) / e) ** ((1.0 - alpha) / alpha)
    return a * b


def sample_copula(spec: CopulaSpec, N: int, stream: RandomStream | np.random.Generator) -> np.ndarray:
    """N×n matrix with Uniform(0,1) columns and the family's dependence."""
    rng = stream.generator() if isinstance(stream, RandomStream) else stream
    n = spec.n
    if spec.family == "independence" or spec.tau == 0.0:
        return rng.random((N, n))
    param = kendall_to_param(spec.family, spec.tau)

    if spec.family in ("normal", "student"):
        common = rng.standard_normal((N, 1))
        z = math.sqrt(param) * common + math.sqrt(1.0 - param) * rng.standard_normal((N, n))
        if spec.family == "normal":
            return special.ndtr(z)
        w = rng.chisquare(spec.df, (N, 1)) / spec.df
        return special.stdtr(spec.df, z / np.sqrt(w))

    e = rng.exponential(1.0, (N, n))
    if spec.family == "clayton":
        v = rng.gamma(1.0 / param, 1.0, (N, 1))
        return np.exp(-np.log1p(e / v) / param)
    if spec.family == "gumbel":
        alpha = 1.0 / param
        v = _positive_stable(alpha, N, rng)[:, None]
        return np.exp(-((e / v) ** alpha))
    # frank: logarithmic-series frailty with p = 1 - exp(-θ)
    p = -math.expm1(-param)
    v = rng.logseries(p, (N, 1))
    return -np.log1p(-p * np.exp(-e / v)) / param


def sample_kendall_tau(x: np.ndarray, y: np.ndarray) -> float:
    return float(kendalltau(x, y).statistic)
