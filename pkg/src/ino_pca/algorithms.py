"""Single-step update rules for INO-PCA and the comparison algorithms.

Every stepper is O(p): ``y y^T x`` is always evaluated as ``(y . x) * y``.
Steppers are pure: they return a new :class:`EstimateState` and never modify
their inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DegeneracyError
from .spiked_model import EstimateState
from .theory_ode import optimal_nu

__all__ = [
    "LAMBDA_FLOOR",
    "AlgorithmSpec",
    "parse_algorithm_spec",
    "ino_pca_step",
    "regularized_step",
    "oja_step",
    "krasulina_step",
    "adaptive_ino_step",
    "ccipca_step",
    "adaoja_step",
    "MultiPcState",
    "multi_pc_step",
]

LAMBDA_FLOOR = 1e-12

KINDS = ("ino", "reg", "oja", "krasulina", "ada-ino", "ccipca", "adaoja")
_TAU_KINDS = ("ino", "reg", "oja", "krasulina")


@dataclass(frozen=True)
class AlgorithmSpec:
    """Which stepper to run and its single hyper-parameter.

    ``param`` is the learning rate for ino/reg/oja/krasulina, the amnesic
    parameter for ccipca and the step scale ``b0`` for adaoja.  ``ada-ino``
    takes no parameter (its rate comes from the oracle).
    """

    kind: str
    param: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown algorithm {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.kind == "ada-ino":
            if self.param is not None:
                raise ConfigError("ada-ino takes no parameter")
            return
        if self.param is None or not math.isfinite(self.param):
            raise ConfigError(f"{self.kind} needs a numeric parameter, e.g. '{self.kind}:0.5'")
        if self.kind == "ccipca":
            if self.param < 0:
                raise ConfigError(f"amnesic parameter must be >= 0, got {self.param}")
        elif not self.param > 0:
            raise ConfigError(f"{self.kind} parameter must be positive, got {self.param}")

    @property
    def tau(self) -> float | None:
        return self.param if self.kind in _TAU_KINDS else None

    @property
    def lazy_init(self) -> bool:
        """CCIPCA starts from the first observation instead of ``x0``."""
        return self.kind == "ccipca"

    def __str__(self) -> str:
        return self.kind if self.param is None else f"{self.kind}:{self.param:g}"


def parse_algorithm_spec(text: str | AlgorithmSpec, default_tau: float | None = None) -> AlgorithmSpec:
    """Parse ``ino:0.5``, ``reg:0.5``, ``oja:0.5``, ``krasulina:0.5``, ``ada-ino``,
    ``ccipca:4`` or ``adaoja:1.0``.  A bare rate-based kind takes ``default_tau``."""
    if isinstance(text, AlgorithmSpec):
        return text
    kind, _, arg = text.strip().lower().partition(":")
    kind = {"adaptive": "ada-ino", "ada_ino": "ada-ino", "regularized": "reg"}.get(kind, kind)
    if not arg:
        if kind in _TAU_KINDS and default_tau is not None:
            return AlgorithmSpec(kind, float(default_tau))
        if kind == "ccipca":
            return AlgorithmSpec(kind, 4.0)
        if kind == "adaoja":
            return AlgorithmSpec(kind, 1.0)
        return AlgorithmSpec(kind)
    try:
        value = float(arg)
    except ValueError:
        raise ConfigError(f"bad parameter in algorithm spec {text!r}") from None
    return AlgorithmSpec(kind, value)


def _check_lam(state: EstimateState, floor: float) -> None:
    if not state.lam > floor:
        raise DegeneracyError(f"norm parameter {state.lam:.3g} fell below floor {floor:g}", step=state.k)


def ino_pca_step(state: EstimateState, y: np.ndarray, tau: float, lambda_floor: float = LAMBDA_FLOOR) -> EstimateState:
    """``x' = x + (tau/p) (y (y.x) / lam - x)``."""
    _check_lam(state, lambda_floor)
    x = state.x
    p = x.size
    yx = y @ x
    x_new = x + (tau / p) * (y * (yx / state.lam) - x)
    return EstimateState.from_vector(x_new, state.k + 1)


def regularized_step(state: EstimateState, y: np.ndarray, tau: float) -> EstimateState:
    """``x' = x + (tau/p) (y (y.x) - lam x)``; no division, so no floor check."""
    x = state.x
    p = x.size
    yx = y @ x
    x_new = x + (tau / p) * (y * yx - state.lam * x)
    return EstimateState.from_vector(x_new, state.k + 1)


def _project(x_hat: np.ndarray, k: int) -> EstimateState:
    p = x_hat.size
    norm = np.linalg.norm(x_hat)
    if norm == 0.0:
        raise DegeneracyError("Oja intermediate vector vanished", step=k)
    return EstimateState(x_hat * (math.sqrt(p) / norm), 1.0, k)


def oja_step(state: EstimateState, y: np.ndarray, tau: float) -> EstimateState:
    """Gradient step ``x + (tau/p) y (y.x)`` followed by projection onto the
    sphere of radius ``sqrt(p)``."""
    x = state.x
    p = x.size
    yx = y @ x
    return _project(x + (tau / p) * (y * yx), state.k + 1)


def krasulina_step(state: EstimateState, y: np.ndarray, tau: float) -> EstimateState:
    x = state.x
    p = x.size
    xx = x @ x
    if xx == 0.0:
        raise DegeneracyError("Krasulina iterate is zero", step=state.k)
    yx = y @ x
    x_new = x + (tau / p) * (y * yx - (yx * yx / xx) * x)
    return EstimateState.from_vector(x_new, state.k + 1)


def adaptive_ino_step(state: EstimateState, y: np.ndarray, omega: float, xi: np.ndarray,
                      lambda_floor: float = LAMBDA_FLOOR) -> EstimateState:
    """INO-PCA step with the oracle rate ``tau_k = lam_k * nu(Q_k)``.

    Needs the true ``xi`` (with ``||xi|| = sqrt(p)``) to evaluate ``Q_k``.
    """
    _check_lam(state, lambda_floor)
    x = state.x
    q = (xi @ x) / (x.size * state.lam)
    return ino_pca_step(state, y, state.lam * optimal_nu(q, omega), lambda_floor)


def ccipca_step(state: EstimateState, y: np.ndarray, k: int, amnesic: float) -> EstimateState:
    """Amnesic average ``v' = (k-1-l)/k v + (1+l)/k y (y.v)/||v||``.

    ``k`` is the 1-based index of the sample being absorbed.  Initializing the
    estimate from the first sample is the caller's job.
    """
    if k < 1:
        raise ConfigError(f"CCIPCA sample index must be >= 1, got {k}")
    v = state.x
    norm = np.linalg.norm(v)
    if norm == 0.0:
        raise DegeneracyError("CCIPCA estimate is zero", step=state.k)
    keep = (k - 1.0 - amnesic) / k
    gain = (1.0 + amnesic) / k
    v_new = keep * v + gain * (y * ((y @ v) / norm))
    return EstimateState.from_vector(v_new, state.k + 1)


def adaoja_step(state: EstimateState, y: np.ndarray, b: float, b0: float) -> tuple[EstimateState, float]:
    """Oja step with an AdaGrad-norm step size.

    With ``g = y (y.x) / p`` the accumulator is ``b' = b + ||g||^2`` and the
    iterate moves by ``sqrt(p) * b0 / sqrt(b') * g`` before projection.  In
    unit-norm coordinates this is the usual AdaOja update scaled by ``b0``.
    """
    if b < 0:
        raise ConfigError(f"AdaOja accumulator must be non-negative, got {b}")
    x = state.x
    p = x.size
    yx = y @ x
    g = y * (yx / p)
    b_new = b + float(g @ g)
    if b_new == 0.0:
        return EstimateState(x.copy(), state.lam, state.k + 1), b_new
    eta = b0 / math.sqrt(b_new)
    return _project(x + (math.sqrt(p) * eta) * g, state.k + 1), b_new


@dataclass
class MultiPcState:
    """Components of the multi-PC wrapper; ``None`` marks a component that is
    initialized lazily from the residual of the sample that reaches it first."""

    components: list[EstimateState | None]
    accumulators: list[float] = field(default_factory=list)
    k: int = 0

    def __post_init__(self):
        if not self.components:
            raise ConfigError("need at least one component")
        if not self.accumulators:
            self.accumulators = [0.0] * len(self.components)

    @classmethod
    def empty(cls, r: int) -> "MultiPcState":
        if r < 1:
            raise ConfigError(f"component count r must be >= 1, got {r}")
        return cls([None] * r)

    @property
    def r(self) -> int:
        return len(self.components)

    def basis(self) -> np.ndarray:
        """Components as columns of a ``p x r`` matrix (all must be initialized)."""
        if any(c is None for c in self.components):
            raise ConfigError("not all components are initialized yet")
        return np.column_stack([c.x for c in self.components])


def multi_pc_step(mstate: MultiPcState, y: np.ndarray, spec: AlgorithmSpec) -> MultiPcState:
    """One sample through the deflation cascade.

    For each component in turn: initialize it from the current residual if it
    is empty, otherwise update it with the chosen stepper; then remove the
    component's direction from the residual (Gram-Schmidt).
    """
    if spec.kind == "ada-ino":
        raise ConfigError("the adaptive oracle rate is defined for a single component only")
    if mstate.r > y.size:
        raise ConfigError(f"r={mstate.r} exceeds the dimension p={y.size}")
    k = mstate.k + 1
    residual = np.array(y, dtype=float, copy=True)
    comps = list(mstate.components)
    accs = list(mstate.accumulators)
    for i in range(min(mstate.r, k)):
        comp = comps[i]
        if comp is None:
            comp = EstimateState.from_vector(residual.copy(), 0)
            if comp.lam == 0.0:
                raise DegeneracyError(f"component {i + 1} initialized from a zero residual", step=k)
        elif spec.kind == "ino":
            comp = ino_pca_step(comp, residual, spec.param)
        elif spec.kind == "reg":
            comp = regularized_step(comp, residual, spec.param)
        elif spec.kind == "oja":
            comp = oja_step(comp, residual, spec.param)
        elif spec.kind == "krasulina":
            comp = krasulina_step(comp, residual, spec.param)
        elif spec.kind == "ccipca":
            comp = ccipca_step(comp, residual, k, spec.param)
        else:
            comp, accs[i] = adaoja_step(comp, residual, accs[i], spec.param)
        comps[i] = comp
        norm = np.linalg.norm(comp.x)
        if norm == 0.0:
            raise DegeneracyError(f"component {i + 1} has zero norm", step=k)
        unit = comp.x / norm
        residual = residual - (residual @ unit) * unit
    return MultiPcState(comps, accs, k)
