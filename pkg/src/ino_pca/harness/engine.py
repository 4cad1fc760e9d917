"""Per-trial simulation loop and Monte Carlo aggregation.

Each trial owns one RNG stream derived from ``(seed, trial_index)``.  Draw
order inside a trial is fixed: ``xi``, then the post-switch ``xi`` if a switch
is configured, then ``x0``, then one ``(c, a)`` pair per step.  Both engines
consume the stream in that order, so they produce the same trajectory up to
floating-point reassociation in the dot products.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..algorithms import (LAMBDA_FLOOR, adaoja_step, adaptive_ino_step, ccipca_step, ino_pca_step,
                          krasulina_step, oja_step, regularized_step)
from ..errors import ConfigError, DegeneracyError, InoPcaError, LambdaBandError, TrialFailure
from ..metrics import cosine_similarity
from ..spiked_model import EstimateState, init_estimate, make_signal, sample_observation, trial_rng
from ..theory_ode import OdeParams, integrate, integrate_oja
from .config import ExperimentConfig, steps_for

__all__ = ["TrialTrace", "Aggregate", "run_trial", "run_monte_carlo", "aggregate", "theory_columns",
           "first_crossing", "ENGINES"]

ENGINES = ("compiled", "python")
_BAND_CHECKED = ("ino", "reg", "ada-ino")


@dataclass
class TrialTrace:
    t: np.ndarray
    Q: np.ndarray
    lam: np.ndarray
    seed: int
    trial_index: int
    snapshots: dict[float, tuple[np.ndarray, float]] = field(default_factory=dict)

    def __post_init__(self):
        if np.any(np.abs(self.Q) > 1.0):
            raise ConfigError("cosine similarity outside [-1, 1]")


@dataclass
class Aggregate:
    t: np.ndarray
    Q_mean: np.ndarray
    Q_std: np.ndarray
    lam_mean: np.ndarray
    lam_std: np.ndarray
    n_trials: int
    Q_theory: np.ndarray | None = None
    lam_theory: np.ndarray | None = None
    label: str = ""
    traces: list[TrialTrace] = field(default_factory=list, repr=False)

    @property
    def has_theory(self) -> bool:
        return self.Q_theory is not None

    def header(self) -> list[str]:
        cols = ["t", "Q_mean", "Q_std", "lambda_mean", "lambda_std"]
        if self.has_theory:
            cols += ["Q_theory", "lambda_theory"]
        return cols

    def rows(self):
        cols = [self.t, self.Q_mean, self.Q_std, self.lam_mean, self.lam_std]
        if self.has_theory:
            cols += [self.Q_theory, self.lam_theory]
        for i in range(self.t.size):
            yield [c[i] for c in cols]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def value_at(self, t: float, which: str = "Q_mean") -> float:
        """Column value at the recorded time nearest to ``t``."""
        i = int(np.argmin(np.abs(self.t - t)))
        return float(getattr(self, which)[i])


def _fmt(v: float) -> str:
    return repr(float(v))


def _record_steps(config: ExperimentConfig) -> list[int]:
    return list(range(0, config.n_steps + 1, config.record_interval))


def _band_check(config: ExperimentConfig, lam: float, k: int) -> None:
    if config.algorithm.kind in _BAND_CHECKED and not 0.0 < lam <= config.lambda_cap:
        raise LambdaBandError(f"lambda={lam:.6g} left the band (0, {config.lambda_cap:g}] at step {k}")


def _python_advance(config, state, acc, xi, n, rng):
    spec = config.algorithm
    for _ in range(n):
        y = sample_observation(xi, config.omega, rng).y
        if spec.kind == "ino":
            state = ino_pca_step(state, y, spec.param)
        elif spec.kind == "reg":
            state = regularized_step(state, y, spec.param)
        elif spec.kind == "oja":
            state = oja_step(state, y, spec.param)
        elif spec.kind == "krasulina":
            state = krasulina_step(state, y, spec.param)
        elif spec.kind == "ada-ino":
            state = adaptive_ino_step(state, y, config.omega, xi)
        elif spec.kind == "ccipca":
            if state.k == 0:
                state = EstimateState.from_vector(y.copy(), 1)
            else:
                state = ccipca_step(state, y, state.k + 1, spec.param)
        else:
            state, acc = adaoja_step(state, y, acc, spec.param)
    return state, acc


def _compiled_advance(config, state, acc, xi, n, rng):
    spec = config.algorithm
    x = np.ascontiguousarray(state.x, dtype=float).copy()
    param = 0.0 if spec.param is None else float(spec.param)
    status, k, lam, acc = _kernels.advance(_kernels.KIND_CODES[spec.kind], x, float(state.lam), xi,
                                           float(config.omega), param, float(acc), int(state.k), int(n),
                                           rng, LAMBDA_FLOOR)
    if status != _kernels.OK:
        raise DegeneracyError(f"{spec.kind} iterate degenerated (lambda={lam:.3g})", step=int(k))
    return EstimateState(x, float(lam), int(k)), acc


def run_trial(config: ExperimentConfig, trial_index: int, engine: str = "compiled") -> TrialTrace:
    """Simulate one trial and record ``(Q, lambda)`` on the sampling grid.

    Raises :class:`TrialFailure` (carrying seed and trial index) if the stepper
    degenerates or ``lambda`` leaves its admissible band.
    """
    if engine not in ENGINES:
        raise ConfigError(f"unknown engine {engine!r}; expected one of {ENGINES}")
    try:
        return _run_trial(config, trial_index, engine)
    except InoPcaError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise TrialFailure(str(exc), seed=config.seed, trial_index=trial_index) from exc


def _run_trial(config: ExperimentConfig, trial_index: int, engine: str) -> TrialTrace:
    p = config.p
    rng = trial_rng(config.seed, trial_index)
    xi = make_signal(config.xi, p, rng).entries
    xi2 = make_signal(config.switch_xi, p, rng).entries if config.switch_t is not None else None
    state = init_estimate(config.init, xi, rng)
    k_switch = steps_for(p, config.switch_t) if xi2 is not None else None
    records = _record_steps(config)
    snaps = {steps_for(p, ts): ts for ts in config.snapshot_times}
    events = sorted(set(records) | set(snaps) | ({k_switch} if k_switch is not None else set()))
    advance = _compiled_advance if engine == "compiled" else _python_advance
    use_abs = config.use_abs_q
    record_set = set(records)

    Q = np.empty(len(records))
    lam = np.empty(len(records))
    snapshots: dict[float, tuple[np.ndarray, float]] = {}
    acc = 0.0
    j = 0
    for k in events:
        if k > state.k:
            active = xi if k_switch is None or state.k < k_switch else xi2
            state, acc = advance(config, state, acc, active, k - state.k, rng)
        active = xi if k_switch is None or k < k_switch else xi2
        if k in record_set:
            if config.algorithm.lazy_init and state.k == 0:
                q = 0.0
            else:
                q = cosine_similarity(state.x, active)
            Q[j] = abs(q) if use_abs else q
            lam[j] = state.lam
            _band_check(config, state.lam, k)
            j += 1
        if k in snaps:
            snapshots[snaps[k]] = (state.x.copy(), state.lam)
    t = np.asarray(records, dtype=float) / p
    return TrialTrace(t, Q, lam, config.seed, trial_index, snapshots)


def aggregate(traces: list[TrialTrace], label: str = "") -> Aggregate:
    Qs = np.stack([tr.Q for tr in traces])
    ls = np.stack([tr.lam for tr in traces])
    return Aggregate(traces[0].t.copy(), Qs.mean(axis=0), Qs.std(axis=0), ls.mean(axis=0), ls.std(axis=0),
                     len(traces), label=label, traces=list(traces))


def theory_columns(config: ExperimentConfig, t: np.ndarray, dt: float = 1e-3):
    """ODE prediction on the trace grid, or ``None`` when no closed theory
    applies (cold start, switch, or an algorithm without an ODE here)."""
    kind = config.algorithm.kind
    if config.switch_t is not None or config.init.mode != "warm":
        return None
    q0 = config.init.c
    t_max = float(t[-1])
    if kind in ("ino", "ada-ino"):
        params = OdeParams(config.omega, config.algorithm.param or 0.0, q0, config.init.lambda0,
                           adaptive=kind == "ada-ino")
        traj = integrate(params, t_max, dt=dt)
        return traj.at(t)
    if kind in ("oja", "reg"):
        traj = integrate_oja(config.omega, config.algorithm.param, q0, t_max, dt=dt)
        Qt, _ = traj.at(t)
        lam_t = np.ones_like(Qt) if kind == "oja" else np.full_like(Qt, np.nan)
        return Qt, lam_t
    return None


def run_monte_carlo(config: ExperimentConfig, theory: bool = True, engine: str = "compiled",
                    threads: int = 1, label: str = "") -> Aggregate:
    """Run all trials and reduce them in trial-index order.

    With ``threads > 1`` trials run concurrently (the compiled kernel releases
    the GIL); the result does not depend on the thread count.
    """
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")
    indices = range(config.trials)
    if threads == 1 or config.trials == 1:
        traces = [run_trial(config, i, engine) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            traces = list(pool.map(lambda i: run_trial(config, i, engine), indices))
    agg = aggregate(traces, label=label or str(config.algorithm))
    if theory:
        cols = theory_columns(config, agg.t)
        if cols is not None:
            agg.Q_theory, agg.lam_theory = cols
    return agg


def first_crossing(t: np.ndarray, values: np.ndarray, level: float, after: float = -math.inf) -> float:
    """First recorded time ``>= after`` at which ``values`` reaches ``level``;
    ``inf`` if it never does."""
    mask = (t >= after) & (values >= level)
    idx = np.flatnonzero(mask)
    return float(t[idx[0]]) if idx.size else math.inf
