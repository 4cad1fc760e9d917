"""Experiment protocols built on :func:`run_monte_carlo`: steady-state phase
sweeps, initial-norm sweeps, abrupt signal switches, density comparison
against the PDE, frozen-state moment checks and a small grid-search helper."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..algorithms import parse_algorithm_spec
from ..errors import ConfigError, DomainError
from ..metrics import empirical_histogram, l1_density_distance
from ..spiked_model import InitSpec, XiDist, init_estimate, make_signal, parse_xi_spec, trial_rng
from ..theory_ode import OdeParams, TheoryTrajectory, integrate, steady_state
from ..theory_pde import PdeConfig, evolve_density, initial_field, marginal_density, rescaled_marginal
from .config import ExperimentConfig
from .engine import Aggregate, first_crossing, run_monte_carlo

__all__ = [
    "PhaseRow", "run_phase_sweep",
    "Lambda0Row", "Lambda0Sweep", "run_lambda0_sweep", "ode_q_at",
    "NonstationaryResult", "run_nonstationary",
    "DensitySnapshot", "run_density_comparison",
    "MomentReport", "moment_oracle_check",
    "grid_search",
]


def _tail_mean(agg: Aggregate, tail: float) -> tuple[float, float]:
    """Mean and across-trial std of each trial's mean |Q| over the final
    ``tail`` fraction of the run."""
    t_end = float(agg.t[-1])
    mask = agg.t >= (1.0 - tail) * t_end
    per_trial = np.array([np.mean(np.abs(tr.Q[mask])) for tr in agg.traces])
    return float(per_trial.mean()), float(per_trial.std())


# -- steady state versus SNR -------------------------------------------------

@dataclass(frozen=True)
class PhaseRow:
    omega: float
    Q_s_theory: float
    Q_s_empirical: float
    Q_s_empirical_std: float


def run_phase_sweep(omegas, config: ExperimentConfig, tail: float = 0.1, threads: int = 1) -> list[PhaseRow]:
    """Empirical steady |Q| (final-``tail`` average) against the closed-form
    steady state, one row per SNR value."""
    tau = config.algorithm.tau
    if config.algorithm.kind != "ino":
        raise ConfigError("the phase sweep compares against the fixed-rate INO-PCA steady state")
    rows = []
    for omega in omegas:
        if omega < 0:
            raise ConfigError(f"omega must be non-negative, got {omega}")
        agg = run_monte_carlo(config.replace(omega=float(omega)), theory=False, threads=threads)
        mean, std = _tail_mean(agg, tail)
        rows.append(PhaseRow(float(omega), steady_state(float(omega), tau).Q, mean, std))
    return rows


# -- initial norm sweep ------------------------------------------------------

@dataclass(frozen=True)
class Lambda0Row:
    lambda0: float
    Q_eval_mean: float
    Q_eval_std: float
    Q_eval_theory: float
    Q_steady_mean: float


@dataclass
class Lambda0Sweep:
    t_eval: float
    rows: list[Lambda0Row]
    portraits: dict[float, TheoryTrajectory] = field(default_factory=dict)

    def argmax_theory(self) -> float:
        return max(self.rows, key=lambda r: r.Q_eval_theory).lambda0

    def argmax_empirical(self) -> float:
        return max(self.rows, key=lambda r: r.Q_eval_mean).lambda0

    def steady_spread(self) -> float:
        vals = [r.Q_steady_mean for r in self.rows]
        return max(vals) - min(vals)


def ode_q_at(omega: float, tau: float, q0: float, lambda0: float, t: float, dt: float = 1e-3) -> float:
    return float(integrate(OdeParams(omega, tau, q0, lambda0), t, dt=dt).Q[-1])


def run_lambda0_sweep(lambda0s, config: ExperimentConfig, t_eval: float, tail: float = 0.1,
                      portrait_q0: float | None = None, threads: int = 1) -> Lambda0Sweep:
    """Q at ``t_eval`` and at steady state for each initial norm, with the ODE
    value and a full ODE trajectory (phase portrait) per initial norm."""
    if config.algorithm.kind != "ino":
        raise ConfigError("the initial-norm sweep applies to fixed-rate INO-PCA")
    if not 0 <= t_eval <= config.t_max:
        raise ConfigError(f"t_eval={t_eval} outside [0, t_max={config.t_max}]")
    tau = config.algorithm.tau
    q0 = portrait_q0 if portrait_q0 is not None else (config.init.c if config.init.mode == "warm" else 1e-2)
    rows, portraits = [], {}
    for lam0 in lambda0s:
        if not lam0 > 0:
            raise ConfigError(f"lambda0 must be positive, got {lam0}")
        cfg = config.replace(init=config.init.with_lambda0(float(lam0)))
        agg = run_monte_carlo(cfg, theory=False, threads=threads)
        i = int(np.argmin(np.abs(agg.t - t_eval)))
        Q_at = np.array([abs(tr.Q[i]) for tr in agg.traces])
        steady, _ = _tail_mean(agg, tail)
        traj = integrate(OdeParams(config.omega, tau, q0, float(lam0)), config.t_max, dt=1e-3, record_every=10)
        portraits[float(lam0)] = traj
        q_theory = float(traj.at([t_eval])[0][0])
        rows.append(Lambda0Row(float(lam0), float(Q_at.mean()), float(Q_at.std()), q_theory, steady))
    return Lambda0Sweep(float(t_eval), rows, portraits)


# -- abrupt switch of the signal direction -----------------------------------

@dataclass
class NonstationaryResult:
    switch_t: float
    aggregates: dict[str, Aggregate]
    pre_window: float = 2.0

    def pre_level(self, label: str) -> float:
        """Mean |Q| over the ``pre_window`` preceding the switch."""
        agg = self.aggregates[label]
        mask = (agg.t >= self.switch_t - self.pre_window) & (agg.t < self.switch_t)
        return float(np.mean(agg.Q_mean[mask]))

    def level_at(self, label: str, delta: float) -> float:
        return self.aggregates[label].value_at(self.switch_t + delta)

    def recovery_ratio(self, label: str, delta: float) -> float:
        return self.level_at(label, delta) / self.pre_level(label)

    def recovery_time(self, label: str, fraction: float = 0.8) -> float:
        """Time after the switch until mean |Q| regains ``fraction`` of its
        pre-switch level; ``inf`` if it never does within the run."""
        agg = self.aggregates[label]
        t_hit = first_crossing(agg.t, agg.Q_mean, fraction * self.pre_level(label), after=self.switch_t + 1e-12)
        return t_hit - self.switch_t

    def summary(self, delta: float, fraction: float = 0.8) -> list[dict]:
        return [{"algorithm": lab, "pre_level": self.pre_level(lab), "level_at_checkpoint": self.level_at(lab, delta),
                 "ratio": self.recovery_ratio(lab, delta), "recovery_time": self.recovery_time(lab, fraction)}
                for lab in self.aggregates]


def run_nonstationary(config: ExperimentConfig, algorithms=("ada-ino", "adaoja:1", "ccipca:4"),
                      threads: int = 1) -> NonstationaryResult:
    """Run each algorithm on the same switched stream (same seeds) and report
    |Q| against whichever signal direction is active."""
    if config.switch_t is None:
        raise ConfigError("the non-stationary experiment needs a switch (switch_t and switch_xi)")
    aggs = {}
    for text in algorithms:
        spec = parse_algorithm_spec(text, default_tau=config.algorithm.tau)
        cfg = config.replace(algorithm=spec, abs_q=True)
        aggs[str(spec)] = run_monte_carlo(cfg, theory=False, threads=threads, label=str(spec))
    return NonstationaryResult(config.switch_t, aggs)


# -- density of the coordinates versus the PDE -------------------------------

@dataclass
class DensitySnapshot:
    """PDE marginals and pooled coordinate histograms on one shared grid, both
    for raw coordinates and for coordinates divided by the norm parameter."""

    t: float
    grid: np.ndarray
    pde_raw: np.ndarray
    pde_rescaled: np.ndarray
    hist_raw: np.ndarray
    hist_rescaled: np.ndarray

    @property
    def l1_raw(self) -> float:
        return l1_density_distance(self.hist_raw, self.pde_raw, self.grid)

    @property
    def l1_rescaled(self) -> float:
        return l1_density_distance(self.hist_rescaled, self.pde_rescaled, self.grid)


def _comparison_grid(values: np.ndarray, spacing: float) -> np.ndarray:
    half = spacing * math.ceil((float(np.max(np.abs(values))) + spacing) / spacing)
    n = int(round(2 * half / spacing)) + 1
    return np.linspace(-half, half, n)


def run_density_comparison(config: ExperimentConfig, snapshot_times, pde_config: PdeConfig | None = None,
                           spacing: float = 0.1, threads: int = 1) -> list[DensitySnapshot]:
    """Histogram the estimate's coordinates (pooled over trials) at each
    snapshot time and compare with the PDE marginal, both in raw units and
    after dividing by each trial's norm parameter.

    Without ``pde_config`` the PDE runs on 256 grid points with 32 atoms,
    which resolves the marginals far below histogram noise.
    """
    if config.algorithm.kind != "ino":
        raise ConfigError("the PDE describes fixed-rate INO-PCA only")
    times = tuple(sorted(float(t) for t in snapshot_times))
    cfg = config.replace(snapshot_times=times, t_max=max(max(times), config.sample_every))
    agg = run_monte_carlo(cfg, theory=False, threads=threads)
    pde_config = pde_config or PdeConfig(config.omega, config.algorithm.tau, n_grid=256, n_atoms=32)
    if pde_config.omega != config.omega or pde_config.tau != config.algorithm.tau:
        raise ConfigError("PDE and simulation parameters disagree")
    snaps = evolve_density(initial_field(config.xi, config.init, pde_config), pde_config, times)
    out = []
    for t, fld in zip(times, snaps):
        raw = np.concatenate([tr.snapshots[t][0] for tr in agg.traces])
        resc = np.concatenate([tr.snapshots[t][0] / tr.snapshots[t][1] for tr in agg.traces])
        grid = _comparison_grid(np.concatenate([raw, resc]), spacing)
        out.append(DensitySnapshot(
            t=t, grid=grid,
            pde_raw=np.interp(grid, fld.x, marginal_density(fld), left=0.0, right=0.0),
            pde_rescaled=np.interp(grid, fld.x, rescaled_marginal(fld), left=0.0, right=0.0),
            hist_raw=empirical_histogram(raw, grid),
            hist_rescaled=empirical_histogram(resc, grid),
        ))
    return out


# -- frozen-state increment moments ------------------------------------------

@dataclass
class MomentReport:
    p: int
    n_resamples: int
    Q: float
    lam: float
    drift_z: np.ndarray
    diffusion_empirical: float
    diffusion_theory: float

    @property
    def frac_within_3se(self) -> float:
        return float(np.mean(np.abs(self.drift_z) <= 3.0))

    @property
    def max_abs_z(self) -> float:
        return float(np.max(np.abs(self.drift_z)))

    @property
    def diffusion_rel_err(self) -> float:
        return abs(self.diffusion_empirical - self.diffusion_theory) / self.diffusion_theory

    def passes(self, frac: float = 0.95, rel: float = 0.05) -> bool:
        return self.frac_within_3se >= frac and self.diffusion_rel_err <= rel


def moment_oracle_check(p: int = 500, omega: float = 1.0, tau: float = 0.5, n_resamples: int = 10_000,
                        xi: XiDist | str = "uniform", init: InitSpec | None = None, seed: int = 0,
                        chunk: int = 1000, state: tuple[np.ndarray, np.ndarray] | None = None) -> MomentReport:
    """Resample observations at a frozen ``(x, xi)`` and compare the empirical
    per-coordinate increment moments with the drift
    ``(tau/p)(omega Q xi + x/lam - x)`` and diffusion ``(tau^2/p)(omega Q^2 + 1)``.

    ``state`` may supply ``(x, xi)`` directly; otherwise both are drawn from
    ``xi`` and ``init``.  The INO-PCA increment is evaluated vectorized over a
    chunk of observations at a time.
    """
    if n_resamples < 2:
        raise ConfigError("need at least two resamples")
    rng = trial_rng(seed, 0)
    if state is None:
        xi_vec = make_signal(parse_xi_spec(xi), p, rng).entries
        x = init_estimate(init or InitSpec("warm", 0.3, 1.3), xi_vec, rng).x
    else:
        x, xi_vec = (np.asarray(v, dtype=float) for v in state)
        p = x.size
        if not math.isclose(float(xi_vec @ xi_vec), p, rel_tol=1e-9):
            raise DomainError("supplied xi must satisfy ||xi|| = sqrt(p)")
    lam = float(np.linalg.norm(x)) / math.sqrt(p)
    Q = float(xi_vec @ x) / (p * lam)
    drift = (tau / p) * (omega * Q * xi_vec + x / lam - x)
    s1 = np.zeros(p)
    s2 = np.zeros(p)
    done = 0
    scale = math.sqrt(omega / p)
    while done < n_resamples:
        m = min(chunk, n_resamples - done)
        c = rng.standard_normal(m)
        Y = rng.standard_normal((m, p))
        Y += (scale * c)[:, None] * xi_vec[None, :]
        delta = (tau / p) * (Y * ((Y @ x) / lam)[:, None] - x[None, :])
        s1 += delta.sum(axis=0)
        s2 += (delta * delta).sum(axis=0)
        done += m
    n = n_resamples
    mean = s1 / n
    var = (s2 - n * mean * mean) / (n - 1)
    z = (mean - drift) / np.sqrt(var / n)
    return MomentReport(p, n, Q, lam, z, float(np.mean(s2 / n)), tau * tau / p * (omega * Q * Q + 1.0))


# -- grid search -------------------------------------------------------------

def grid_search(candidates, evaluate, maximize: bool = True):
    """Evaluate each candidate and return ``(best, table)``; the table lists
    ``(candidate, score)`` in input order so chosen values can be reported."""
    table = [(c, float(evaluate(c))) for c in candidates]
    if not table:
        raise ConfigError("grid search needs at least one candidate")
    pick = max if maximize else min
    best = pick(table, key=lambda item: item[1])[0]
    return best, table
