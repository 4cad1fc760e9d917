"""Spiked covariance data model.

Observations follow ``y = sqrt(omega/p) * c * xi + a`` with ``c ~ N(0, 1)`` and
``a ~ N(0, I_p)``.  The hidden direction ``xi`` is always rescaled so that
``||xi|| = sqrt(p)`` exactly, whatever distribution its entries were drawn from.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegeneracyError

__all__ = [
    "XiDist",
    "SignalVector",
    "Observation",
    "EstimateState",
    "InitSpec",
    "parse_xi_spec",
    "parse_init_spec",
    "make_signal",
    "sample_observation",
    "init_estimate",
    "trial_rng",
]

SQRT3 = math.sqrt(3.0)


@dataclass(frozen=True)
class XiDist:
    """Entry distribution of the hidden direction.

    ``kind`` is one of ``uniform`` (U[-sqrt3, sqrt3]), ``expshift`` (rate-1
    exponential plus ``param``) or ``sparse`` (``1/sqrt(param)`` with probability
    ``param``, zero otherwise).
    """

    kind: str = "uniform"
    param: float | None = None

    def __post_init__(self):
        if self.kind == "uniform":
            if self.param is not None:
                raise ConfigError("uniform xi distribution takes no parameter")
        elif self.kind == "expshift":
            if self.param is None or not math.isfinite(self.param):
                raise ConfigError("expshift needs a finite bias, e.g. 'expshift:0.9'")
        elif self.kind == "sparse":
            if self.param is None or not 0.0 < self.param < 1.0:
                raise ConfigError(f"sparse level rho must lie in (0, 1), got {self.param}")
        else:
            raise ConfigError(
                f"unknown xi distribution {self.kind!r}; expected uniform, expshift:B or sparse:R"
            )

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}:{self.param:g}"


def parse_xi_spec(text: str | XiDist) -> XiDist:
    """Parse ``uniform``, ``expshift:0.9`` or ``sparse:0.05``."""
    if isinstance(text, XiDist):
        return text
    kind, _, arg = text.strip().lower().partition(":")
    if kind == "uniform":
        if arg:
            raise ConfigError(f"'uniform' takes no parameter, got {text!r}")
        return XiDist("uniform")
    if kind in ("expshift", "sparse"):
        if not arg:
            arg = "0.9" if kind == "expshift" else "0.05"
        try:
            value = float(arg)
        except ValueError:
            raise ConfigError(f"bad parameter in xi spec {text!r}") from None
        return XiDist(kind, value)
    raise ConfigError(f"unknown xi spec {text!r}; expected uniform, expshift:B or sparse:R")


@dataclass(frozen=True)
class SignalVector:
    entries: np.ndarray
    dist: XiDist

    @property
    def p(self) -> int:
        return self.entries.size


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    c: float
    a: np.ndarray


@dataclass
class EstimateState:
    """Iterate ``x``, its norm parameter ``lam = ||x||/sqrt(p)`` and step count."""

    x: np.ndarray
    lam: float
    k: int = 0

    @classmethod
    def from_vector(cls, x: np.ndarray, k: int = 0) -> "EstimateState":
        x = np.asarray(x, dtype=float)
        return cls(x, float(np.linalg.norm(x)) / math.sqrt(x.size), k)

    @property
    def p(self) -> int:
        return self.x.size


@dataclass(frozen=True)
class InitSpec:
    """Cold (``c is None``) or warm start with exact initial alignment ``c``."""

    mode: str = "warm"
    c: float | None = 0.1
    lambda0: float = 1.0

    def __post_init__(self):
        if self.mode not in ("cold", "warm"):
            raise ConfigError(f"init mode must be 'cold' or 'warm', got {self.mode!r}")
        if self.mode == "warm" and (self.c is None or not 0.0 < self.c < 1.0):
            raise ConfigError(f"warm-start alignment c must lie in (0, 1), got {self.c}")
        if self.mode == "cold" and self.c is not None:
            object.__setattr__(self, "c", None)
        if not (self.lambda0 > 0.0 and math.isfinite(self.lambda0)):
            raise ConfigError(f"lambda0 must be positive, got {self.lambda0}")

    def __str__(self) -> str:
        return "cold" if self.mode == "cold" else f"warm:{self.c:g}"

    def with_lambda0(self, lambda0: float) -> "InitSpec":
        return InitSpec(self.mode, self.c, lambda0)


def parse_init_spec(text: str | InitSpec, lambda0: float = 1.0) -> InitSpec:
    """Parse ``cold`` or ``warm:C`` (``warm`` alone means ``warm:0.1``)."""
    if isinstance(text, InitSpec):
        return text
    mode, _, arg = text.strip().lower().partition(":")
    if mode == "cold":
        if arg:
            raise ConfigError(f"'cold' takes no parameter, got {text!r}")
        return InitSpec("cold", None, lambda0)
    if mode == "warm":
        try:
            c = float(arg) if arg else 0.1
        except ValueError:
            raise ConfigError(f"bad alignment in init spec {text!r}") from None
        return InitSpec("warm", c, lambda0)
    raise ConfigError(f"unknown init spec {text!r}; expected cold or warm:C")


def trial_rng(master_seed: int, trial_index: int) -> np.random.Generator:
    """Independent counter-based stream for one trial.

    Streams depend only on ``(master_seed, trial_index)``, so results do not
    depend on the order in which trials are executed.
    """
    if master_seed < 0 or trial_index < 0:
        raise ConfigError("seed and trial index must be non-negative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([master_seed, trial_index])))


def _rescale(v: np.ndarray, target_norm: float) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DegeneracyError("cannot rescale a zero vector")
    return v * (target_norm / norm)


def make_signal(dist: XiDist | str, p: int, rng: np.random.Generator) -> SignalVector:
    dist = parse_xi_spec(dist)
    if p < 2:
        raise ConfigError(f"dimension p must be at least 2, got {p}")
    if dist.kind == "uniform":
        raw = rng.uniform(-SQRT3, SQRT3, size=p)
    elif dist.kind == "expshift":
        raw = rng.exponential(1.0, size=p) + dist.param
    else:
        rho = dist.param
        raw = np.where(rng.random(p) < rho, 1.0 / math.sqrt(rho), 0.0)
        if not raw.any():
            raise ConfigError(f"sparse signal with rho={rho} drew no nonzero entry at p={p}")
    return SignalVector(_rescale(raw, math.sqrt(p)), dist)


def sample_observation(xi: SignalVector | np.ndarray, omega: float, rng: np.random.Generator) -> Observation:
    """Draw one observation; consumes ``c`` first, then the ``p`` noise entries."""
    if omega < 0:
        raise ConfigError(f"SNR omega must be non-negative, got {omega}")
    entries = xi.entries if isinstance(xi, SignalVector) else xi
    p = entries.size
    c = rng.standard_normal()
    a = rng.standard_normal(p)
    y = math.sqrt(omega / p) * c * entries + a
    return Observation(y, c, a)


def init_estimate(spec: InitSpec, xi: SignalVector | np.ndarray, rng: np.random.Generator) -> EstimateState:
    """Cold or warm initial estimate with ``||x0|| = sqrt(p) * lambda0`` exactly.

    The warm start builds ``c * xi + sqrt(1 - c^2) * z`` with ``z`` a Gaussian
    projected off ``xi`` and rescaled to norm ``sqrt(p)``, so ``Q0 = c`` holds
    exactly rather than in expectation.
    """
    entries = xi.entries if isinstance(xi, SignalVector) else np.asarray(xi, dtype=float)
    p = entries.size
    z = rng.standard_normal(p)
    if spec.mode == "cold":
        x0 = z
    else:
        z = z - (z @ entries) / (entries @ entries) * entries
        z = _rescale(z, math.sqrt(p))
        x0 = spec.c * entries + math.sqrt(1.0 - spec.c**2) * z
    x0 = _rescale(x0, math.sqrt(p) * spec.lambda0)
    return EstimateState(x0, spec.lambda0, 0)
