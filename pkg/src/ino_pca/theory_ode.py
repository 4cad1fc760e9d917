"""Closed-form steady states and the coupled (Q, lambda) ODE system.

The cosine similarity ``Q`` and norm parameter ``lambda`` of INO-PCA obey

    dQ/dt      = (tau Q / lambda) (omega - omega Q^2 - tau (omega Q^2 + 1) / (2 lambda))
    dlambda/dt = tau (omega Q^2 + 1 - lambda + tau (omega Q^2 + 1) / (2 lambda))

in macroscopic time ``t = k / p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DomainError, IntegrationBlowupError

__all__ = [
    "OdeParams",
    "TheoryTrajectory",
    "SteadyState",
    "ode_rhs",
    "adaptive_ode_rhs",
    "oja_ode_rhs",
    "integrate",
    "integrate_oja",
    "steady_state",
    "critical_snr",
    "optimal_nu",
    "alignment_growth",
    "optimal_lambda0",
]

LEARNING = "learning"
UNSTABLE = "unstable"


@dataclass(frozen=True)
class OdeParams:
    omega: float
    tau: float
    q0: float
    lambda0: float = 1.0
    adaptive: bool = False

    def __post_init__(self):
        if self.omega < 0:
            raise ConfigError(f"omega must be non-negative, got {self.omega}")
        if not self.adaptive and not self.tau > 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if not -1.0 < self.q0 < 1.0 or self.q0 == 0.0:
            raise ConfigError(f"Q0 must lie in (-1, 1) and be nonzero, got {self.q0}")
        if not self.lambda0 > 0:
            raise ConfigError(f"lambda0 must be positive, got {self.lambda0}")


@dataclass(frozen=True)
class TheoryTrajectory:
    t: np.ndarray
    Q: np.ndarray
    lam: np.ndarray

    def at(self, times) -> tuple[np.ndarray, np.ndarray]:
        """Linear interpolation of (Q, lambda) at arbitrary times."""
        times = np.asarray(times, dtype=float)
        return np.interp(times, self.t, self.Q), np.interp(times, self.t, self.lam)

    @property
    def final(self) -> tuple[float, float]:
        return float(self.Q[-1]), float(self.lam[-1])


@dataclass(frozen=True)
class SteadyState:
    branch: str
    Q2: float
    lam: float

    @property
    def Q(self) -> float:
        return math.sqrt(self.Q2)


def ode_rhs(Q: float, lam: float, omega: float, tau: float) -> tuple[float, float]:
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    s = omega * Q * Q + 1.0
    dQ = (tau * Q / lam) * (omega - omega * Q * Q - tau * s / (2.0 * lam))
    dlam = tau * (s - lam + tau * s / (2.0 * lam))
    return dQ, dlam


def optimal_nu(Q: float, omega: float) -> float:
    """Effective rate ``tau / lambda`` maximizing the instantaneous growth of Q."""
    return omega * (1.0 - Q * Q) / (omega * Q * Q + 1.0)


def alignment_growth(nu: float, Q: float, omega: float) -> float:
    """The quantity maximized by :func:`optimal_nu`: dQ/dt as a function of nu."""
    return nu * Q * (omega - omega * Q * Q - nu * (omega * Q * Q + 1.0) / 2.0)


def adaptive_ode_rhs(Q: float, lam: float, omega: float) -> tuple[float, float]:
    """RHS with the oracle rate ``tau_t = lambda_t * optimal_nu(Q_t)``."""
    return ode_rhs(Q, lam, omega, lam * optimal_nu(Q, omega))


def oja_ode_rhs(Q: float, omega: float, tau_hat: float) -> float:
    """Cosine-similarity ODE of Oja's rule (and of the regularized update)."""
    return tau_hat * Q * (omega - omega * Q * Q - tau_hat * (omega * Q * Q + 1.0) / 2.0)


def _step_grid(t_max: float, dt: float) -> tuple[int, float]:
    if not dt > 0 or not t_max > 0:
        raise ConfigError(f"need dt > 0 and t_max > 0, got dt={dt}, t_max={t_max}")
    n = int(math.ceil(t_max / dt - 1e-9))
    return n, t_max - (n - 1) * dt


def integrate(params: OdeParams, t_max: float, dt: float = 1e-3, record_every: int = 1) -> TheoryTrajectory:
    """Classical fixed-step RK4 over the coupled system.

    The final step is shortened so the trajectory ends exactly at ``t_max``;
    points are kept every ``record_every`` steps plus the final point.
    """
    n, last = _step_grid(t_max, dt)
    omega, tau = params.omega, params.tau
    if params.adaptive:
        def f(q, l):
            return adaptive_ode_rhs(q, l, omega)
    else:
        def f(q, l):
            return ode_rhs(q, l, omega, tau)

    q, l = params.q0, params.lambda0
    ts, qs, ls = [0.0], [q], [l]
    t = 0.0
    for i in range(n):
        h = dt if i < n - 1 else last
        try:
            k1q, k1l = f(q, l)
            k2q, k2l = f(q + 0.5 * h * k1q, l + 0.5 * h * k1l)
            k3q, k3l = f(q + 0.5 * h * k2q, l + 0.5 * h * k2l)
            k4q, k4l = f(q + h * k3q, l + h * k3l)
        except DomainError:
            raise IntegrationBlowupError(
                f"lambda became non-positive near t={t:.6g}; try a smaller dt (now {dt:g})"
            ) from None
        q += h * (k1q + 2.0 * k2q + 2.0 * k3q + k4q) / 6.0
        l += h * (k1l + 2.0 * k2l + 2.0 * k3l + k4l) / 6.0
        t = i * dt + h
        if not (abs(q) <= 1.0 + 1e-9 and l > 0.0):
            raise IntegrationBlowupError(
                f"trajectory left |Q| <= 1, lambda > 0 at t={t:.6g} (Q={q:.6g}, lambda={l:.6g}); "
                f"try a smaller dt (now {dt:g})"
            )
        if (i + 1) % record_every == 0 or i == n - 1:
            ts.append(t)
            qs.append(q)
            ls.append(l)
    return TheoryTrajectory(np.array(ts), np.array(qs), np.array(ls))


def integrate_oja(omega: float, tau_hat: float, q0: float, t_max: float, dt: float = 1e-3,
                  record_every: int = 1) -> TheoryTrajectory:
    """RK4 for the scalar Oja ODE; ``lam`` is identically one."""
    n, last = _step_grid(t_max, dt)
    q = q0
    ts, qs = [0.0], [q]
    for i in range(n):
        h = dt if i < n - 1 else last
        k1 = oja_ode_rhs(q, omega, tau_hat)
        k2 = oja_ode_rhs(q + 0.5 * h * k1, omega, tau_hat)
        k3 = oja_ode_rhs(q + 0.5 * h * k2, omega, tau_hat)
        k4 = oja_ode_rhs(q + h * k3, omega, tau_hat)
        q += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
        if not abs(q) <= 1.0 + 1e-9:
            raise IntegrationBlowupError(f"Oja trajectory left |Q| <= 1 at step {i + 1}; reduce dt")
        if (i + 1) % record_every == 0 or i == n - 1:
            ts.append(i * dt + h)
            qs.append(q)
    t = np.array(ts)
    return TheoryTrajectory(t, np.array(qs), np.ones_like(t))


def critical_snr(tau: float) -> float:
    if not tau > 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    # Same value as (-1 + sqrt(1 + 2 tau)) / 2, without cancellation for small tau.
    return tau / (1.0 + math.sqrt(1.0 + 2.0 * tau))


def steady_state(omega: float, tau: float) -> SteadyState:
    """Learning branch iff ``omega^2 + omega - tau/2 > 0`` (i.e. omega > omega_c)."""
    if omega < 0 or not tau > 0:
        raise ConfigError(f"need omega >= 0 and tau > 0, got omega={omega}, tau={tau}")
    num = omega * omega + omega - tau / 2.0
    if num > 0:
        return SteadyState(LEARNING, num / (omega * omega + omega + tau * omega / 2.0), omega + 1.0)
    return SteadyState(UNSTABLE, 0.0, 0.5 * (1.0 + math.sqrt(1.0 + 2.0 * tau)))


def optimal_lambda0(tau: float, omega: float) -> float:
    if not omega > 0:
        raise DomainError("optimal lambda0 is undefined without signal (omega must be positive)")
    return tau / omega
