"""Finite-volume solver for the nonlinear Fokker-Planck equation

    d/dt P_t(x|xi) = -d/dx [G(x, lambda_t, xi, Q_t) P_t] + J(Q_t)/2 d^2/dx^2 P_t

with ``G = tau (omega Q xi + x/lambda - x)`` and ``J = tau^2 (omega Q^2 + 1)``.

The xi-distribution is represented by weighted atoms and one conditional
density per atom is evolved on a shared uniform grid.  Grid nodes carry
trapezoid-rule cells (half cells at the two ends), fluxes between nodes use
the Scharfetter-Gummel exponential fitting and the ends are zero-flux, so the
trapezoid mass of every conditional is conserved to round-off and the update
is positivity preserving under the CFL bound.  Time stepping is Heun's method
(SSP-RK2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigError, DomainError, SolverInstabilityError
from .metrics import trapezoid
from .spiked_model import InitSpec, XiDist, parse_xi_spec, SQRT3
from .theory_ode import OdeParams, TheoryTrajectory, integrate, steady_state

__all__ = [
    "PdeConfig",
    "DensityField",
    "drift_coefficient",
    "diffusion_coefficient",
    "xi_atoms",
    "default_half_width",
    "initial_field",
    "order_parameters",
    "evolve_density",
    "marginal_density",
    "rescaled_marginal",
    "steady_density",
]

SELF_CONSISTENT = "self-consistent"
ODE_DRIVEN = "ode"


def drift_coefficient(x, lam: float, xi, Q: float, omega: float, tau: float):
    if not lam > 0:
        raise DomainError(f"lambda must be positive, got {lam}")
    return tau * (omega * Q * xi + x / lam - x)


def diffusion_coefficient(Q: float, omega: float, tau: float) -> float:
    return tau * tau * (omega * Q * Q + 1.0)


@dataclass(frozen=True)
class PdeConfig:
    omega: float
    tau: float
    n_grid: int = 1024
    half_width: float | None = None
    dt: float | None = None
    moments: str = SELF_CONSISTENT
    n_atoms: int = 64
    cfl: float = 0.8

    def __post_init__(self):
        if self.n_grid < 64:
            raise ConfigError(f"need at least 64 grid points, got {self.n_grid}")
        if self.half_width is not None and not self.half_width > 0:
            raise ConfigError(f"half width must be positive, got {self.half_width}")
        if self.dt is not None and not self.dt > 0:
            raise ConfigError(f"PDE time step must be positive, got {self.dt}")
        if self.moments not in (SELF_CONSISTENT, ODE_DRIVEN):
            raise ConfigError(f"moment source must be {SELF_CONSISTENT!r} or {ODE_DRIVEN!r}")
        if self.omega < 0 or not self.tau > 0:
            raise ConfigError("need omega >= 0 and tau > 0")
        if self.n_atoms < 1:
            raise ConfigError("need at least one xi atom")
        if not 0 < self.cfl <= 1:
            raise ConfigError("CFL safety factor must lie in (0, 1]")


@dataclass
class DensityField:
    x: np.ndarray
    atoms: np.ndarray
    weights: np.ndarray
    cond: np.ndarray
    t: float = 0.0
    Q: float = field(default=float("nan"))
    lam: float = field(default=float("nan"))

    def __post_init__(self):
        self.atoms = np.atleast_1d(np.asarray(self.atoms, dtype=float))
        self.weights = np.atleast_1d(np.asarray(self.weights, dtype=float))
        self.cond = np.atleast_2d(np.asarray(self.cond, dtype=float))
        if self.cond.shape != (self.atoms.size, self.x.size):
            raise ConfigError(f"conditional densities have shape {self.cond.shape}, "
                              f"expected {(self.atoms.size, self.x.size)}")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ConfigError("atom weights must be non-negative and sum to one")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    def masses(self) -> np.ndarray:
        return trapezoid(self.cond, self.x, axis=1)

    def copy(self) -> "DensityField":
        return replace(self, cond=self.cond.copy())


def xi_atoms(dist: XiDist | str, n_atoms: int = 64) -> tuple[np.ndarray, np.ndarray]:
    """Discretize the xi distribution into weighted atoms with ``sum w xi^2 = 1``.

    Continuous distributions become ``n_atoms`` equal-weight quantile atoms at
    the mid-quantiles; the sparse mixture is represented exactly by two atoms.
    """
    dist = parse_xi_spec(dist)
    if dist.kind == "sparse":
        rho = dist.param
        atoms = np.array([0.0, 1.0 / math.sqrt(rho)])
        weights = np.array([1.0 - rho, rho])
    else:
        u = (np.arange(n_atoms) + 0.5) / n_atoms
        if dist.kind == "uniform":
            atoms = -SQRT3 + 2.0 * SQRT3 * u
        else:
            atoms = -np.log1p(-u) + dist.param
        weights = np.full(n_atoms, 1.0 / n_atoms)
    atoms = atoms / math.sqrt(np.sum(weights * atoms**2))
    return atoms, weights


def default_half_width(omega: float, lambda0: float, atoms: np.ndarray) -> float:
    return 6.0 * max(1.0, omega + 1.0, lambda0, float(np.max(np.abs(atoms))) * omega)


def _normalize_rows(cond: np.ndarray, x: np.ndarray) -> np.ndarray:
    return cond / trapezoid(cond, x, axis=1)[:, None]


def initial_field(dist: XiDist | str, init: InitSpec, config: PdeConfig) -> DensityField:
    """Gaussian conditionals matching the cold/warm initial estimates:
    mean ``c lambda0 xi`` and variance ``(1 - c^2) lambda0^2`` (``c = 0`` cold)."""
    atoms, weights = xi_atoms(dist, config.n_atoms)
    lam0 = init.lambda0
    L = config.half_width or default_half_width(config.omega, lam0, atoms)
    x = np.linspace(-L, L, config.n_grid)
    c = init.c if init.mode == "warm" else 0.0
    mean = c * lam0 * atoms[:, None]
    var = (1.0 - c * c) * lam0 * lam0
    cond = _normalize_rows(np.exp(-0.5 * (x[None, :] - mean) ** 2 / var), x)
    fld = DensityField(x, atoms, weights, cond, 0.0)
    fld.Q, fld.lam = order_parameters(fld)
    return fld


def order_parameters(fld: DensityField) -> tuple[float, float]:
    """``lambda = sqrt(sum_a w_a int x^2 P)`` and ``Q = sum_a w_a xi_a int x P / lambda``."""
    m1 = trapezoid(fld.cond * fld.x, fld.x, axis=1)
    m2 = trapezoid(fld.cond * fld.x**2, fld.x, axis=1)
    lam = math.sqrt(float(np.sum(fld.weights * m2)))
    Q = float(np.sum(fld.weights * fld.atoms * m1)) / lam
    return Q, lam


def _bernoulli(z: np.ndarray) -> np.ndarray:
    """``B(z) = z / (exp(z) - 1)`` with the removable singularity at 0."""
    small = np.abs(z) < 1e-8
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 - 0.5 * z, zs / np.expm1(zs))


class _Operator:
    """Spatial operator; caches grid quantities shared by every step."""

    def __init__(self, fld: DensityField, omega: float, tau: float):
        self.x = fld.x
        self.dx = fld.dx
        self.xh = 0.5 * (fld.x[1:] + fld.x[:-1])
        self.atoms = fld.atoms[:, None]
        self.omega = omega
        self.tau = tau
        w = np.full(fld.x.size, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        self.inv_w = 1.0 / w

    def coefficients(self, Q: float, lam: float):
        v = drift_coefficient(self.xh[None, :], lam, self.atoms, Q, self.omega, self.tau)
        D = 0.5 * diffusion_coefficient(Q, self.omega, self.tau)
        z = v * (self.dx / D)
        return D / self.dx * _bernoulli(-z), D / self.dx * _bernoulli(z)

    def max_dt(self, Q: float, lam: float) -> float:
        bm, bp = self.coefficients(Q, lam)
        out = np.zeros((bm.shape[0], self.x.size))
        out[:, :-1] += bm
        out[:, 1:] += bp
        return float(1.0 / np.max(out * self.inv_w))

    def apply(self, P: np.ndarray, Q: float, lam: float) -> np.ndarray:
        bm, bp = self.coefficients(Q, lam)
        flux = bm * P[:, :-1] - bp * P[:, 1:]
        dP = np.zeros_like(P)
        dP[:, :-1] -= flux
        dP[:, 1:] += flux
        return dP * self.inv_w


def evolve_density(initial: DensityField, config: PdeConfig, snapshot_times,
                   trajectory: TheoryTrajectory | None = None) -> list[DensityField]:
    """Advance the conditional densities and return a snapshot at each time.

    In self-consistent mode ``(Q_t, lambda_t)`` are recomputed from the
    densities at every stage; in ODE-driven mode they are read from
    ``trajectory`` (integrated from the initial field's order parameters when
    not supplied).
    """
    times = sorted(float(t) for t in np.atleast_1d(snapshot_times))
    if times and times[0] < initial.t:
        raise ConfigError("snapshot times must not precede the initial time")
    fld = initial.copy()
    fld.Q, fld.lam = order_parameters(fld)
    op = _Operator(fld, config.omega, config.tau)
    if config.moments == ODE_DRIVEN and trajectory is None:
        horizon = max(times[-1] - fld.t, 1e-3) if times else 1e-3
        trajectory = integrate(OdeParams(config.omega, config.tau, fld.Q, fld.lam), horizon, dt=1e-3)
        offset = fld.t
    else:
        offset = 0.0

    def moments(P, t):
        if config.moments == ODE_DRIVEN:
            q, l = trajectory.at(t - offset)
            return float(q), float(l)
        tmp = DensityField.__new__(DensityField)
        tmp.x, tmp.atoms, tmp.weights, tmp.cond = fld.x, fld.atoms, fld.weights, P
        return order_parameters(tmp)

    mass0 = fld.masses()
    snaps = []
    P = fld.cond
    t = fld.t
    for target in times:
        while t < target - 1e-12:
            q, l = moments(P, t)
            h = config.cfl * op.max_dt(q, l)
            if config.dt is not None:
                h = min(h, config.dt)
            h = min(h, target - t)
            P1 = P + h * op.apply(P, q, l)
            q1, l1 = moments(P1, t + h)
            P2 = P1 + h * op.apply(P1, q1, l1)
            P = 0.5 * (P + P2)
            t += h
            pmin = P.min()
            if pmin < -1e-8:
                raise SolverInstabilityError(f"density went negative ({pmin:.3g}) at t={t:.4g}; "
                                             "reduce the time step or refine the grid")
        mass = trapezoid(P, fld.x, axis=1)
        drift = float(np.max(np.abs(mass - mass0)))
        if drift > 1e-4 * max(1.0, t - initial.t):
            raise SolverInstabilityError(f"mass drifted by {drift:.3g} by t={t:.4g}")
        snap = DensityField(fld.x, fld.atoms, fld.weights, P.copy(), t)
        snap.Q, snap.lam = moments(P, t)
        snaps.append(snap)
    return snaps


def marginal_density(fld: DensityField) -> np.ndarray:
    """``P_t(x) = sum_a w_a P_t(x | xi_a)``."""
    return fld.weights @ fld.cond


def rescaled_marginal(fld: DensityField) -> np.ndarray:
    """Density of ``x / lambda_t`` on the same grid: ``lambda_t P_t(lambda_t u)``."""
    lam = fld.lam
    return lam * np.interp(lam * fld.x, fld.x, marginal_density(fld), left=0.0, right=0.0)


def steady_density(x_grid: np.ndarray, xi: float, omega: float, tau: float) -> np.ndarray:
    """Stationary conditional density for the steady state of ``(omega, tau)``:

        P_s(x|xi) ~ exp(tau / J(Q_s) * (2 omega Q_s xi x + x^2/lambda_s - x^2))

    normalized by the trapezoid rule on ``x_grid`` (the positive-Q_s branch).
    """
    ss = steady_state(omega, tau)
    if not ss.lam > 1.0:
        raise DomainError(f"steady density is not integrable for lambda_s={ss.lam} <= 1")
    Qs = ss.Q
    J = diffusion_coefficient(Qs, omega, tau)
    x = np.asarray(x_grid, dtype=float)
    expo = (tau / J) * (2.0 * omega * Qs * xi * x + x * x / ss.lam - x * x)
    dens = np.exp(expo - expo.max())
    return dens / trapezoid(dens, x)
