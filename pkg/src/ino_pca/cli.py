"""Command-line entry point: ``ino-pca <subcommand> [flags]``.

Every run writes its CSV outputs plus a ``<name>.manifest.json`` into
``--out``.  The manifest records the argv, the resolved config, the seed and
the output paths; ``ino-pca replay MANIFEST`` re-executes it.

Exit codes: 0 success, 2 configuration or I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .algorithms import AlgorithmSpec, parse_algorithm_spec
from .errors import ConfigError, DomainError, InoPcaError, NumericalError
from .harness.config import ExperimentConfig, desk_config, load_config, paper_config
from .harness.engine import run_monte_carlo
from .harness.experiments import (moment_oracle_check, run_density_comparison, run_lambda0_sweep,
                                  run_nonstationary, run_phase_sweep)
from .harness.multipc import SpikedSource, ingest_matrix, run_multipc
from .spiked_model import parse_xi_spec
from .theory_ode import OdeParams, critical_snr, integrate, integrate_oja, steady_state
from .theory_pde import (PdeConfig, evolve_density, initial_field, marginal_density,
                         rescaled_marginal)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

PAPER = ExperimentConfig()
LAMBDA0_GRID = "0.1,0.25,0.5,1,2,4"


# -- small helpers -----------------------------------------------------------

def _float_list(text: str) -> list[float]:
    """``a,b,c`` or an inclusive range ``start:stop:step``."""
    text = text.strip()
    try:
        if ":" in text:
            start, stop, step = (float(v) for v in text.split(":"))
            if not step > 0 or stop < start:
                raise ValueError
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return [round(start + i * step, 12) for i in range(n)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'a,b,c' or 'start:stop:step', got {text!r}") from None


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    return repr(float(v))


class Outputs:
    """Collects the files written by one run and emits the manifest."""

    def __init__(self, out_dir: str, name: str, argv: list[str]):
        self.dir = Path(out_dir)
        self.name = name
        self.argv = argv
        self.paths: list[str] = []
        self.started = time.perf_counter()

    def _path(self, filename: str) -> Path:
        try:
            self.dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ConfigError(f"cannot create output directory {self.dir}: {exc.strerror}") from None
        return self.dir / filename

    def csv(self, stem: str, header, rows) -> Path:
        path = self._path(f"{stem}.csv")
        try:
            with path.open("w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([_fmt(v) for v in row])
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc.strerror}") from None
        self.paths.append(str(path))
        return path

    def text(self, stem: str, content: str) -> Path:
        path = self._path(f"{stem}.csv")
        try:
            path.write_text(content)
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc.strerror}") from None
        self.paths.append(str(path))
        return path

    def manifest(self, config: ExperimentConfig | None, extra: dict | None = None) -> Path:
        data = {
            "subcommand": self.name,
            "argv": self.argv,
            "config": config.to_dict() if config is not None else None,
            "seed": config.seed if config is not None else None,
            "outputs": self.paths,
            "extra": extra or {},
            "version": __version__,
            "git_describe": _git_describe(),
            "wall_time_s": round(time.perf_counter() - self.started, 3),
        }
        path = self._path(f"{self.name}.manifest.json")
        try:
            path.write_text(json.dumps(data, indent=2, sort_keys=True) + "\n")
        except OSError as exc:
            raise ConfigError(f"cannot write {path}: {exc.strerror}") from None
        return path


def _git_describe() -> str:
    try:
        res = subprocess.run(["git", "describe", "--always", "--dirty", "--tags"], capture_output=True, text=True,
                             cwd=Path(__file__).resolve().parent, timeout=5)
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return res.stdout.strip() if res.returncode == 0 and res.stdout.strip() else "unknown"


def _threads(args) -> int:
    if args.threads is not None:
        return args.threads
    env = os.environ.get("INO_PCA_THREADS")
    if env is None:
        return 1
    try:
        n = int(env)
    except ValueError:
        raise ConfigError(f"INO_PCA_THREADS must be an integer, got {env!r}") from None
    if n < 1:
        raise ConfigError("INO_PCA_THREADS must be >= 1")
    return n


def resolve_config(args, base: ExperimentConfig) -> ExperimentConfig:
    """Layer an optional config file and then explicit flags over ``base``."""
    cfg = load_config(args.config) if args.config else base
    data = cfg.to_dict()
    if args.algo is not None:
        tau = args.tau if args.tau is not None else cfg.algorithm.tau or PAPER.algorithm.tau
        data["algorithm"] = str(parse_algorithm_spec(args.algo, default_tau=tau))
    elif args.tau is not None:
        if cfg.algorithm.tau is None:
            raise ConfigError(f"--tau does not apply to {cfg.algorithm.kind}")
        data["algorithm"] = str(AlgorithmSpec(cfg.algorithm.kind, args.tau))
    for flag, key in (("p", "p"), ("omega", "omega"), ("xi", "xi"), ("init", "init"), ("lambda0", "lambda0"),
                      ("t_max", "t_max"), ("trials", "trials"), ("seed", "seed"),
                      ("sample_every", "sample_every"), ("switch_t", "switch_t"), ("xi2", "switch_xi")):
        value = getattr(args, flag)
        if value is not None:
            data[key] = value
    if data.get("switch_t") is not None and data.get("switch_xi") is None:
        data["switch_xi"] = data["xi"]
    return ExperimentConfig.from_dict(data)


def _print(line: str) -> None:
    print(line, flush=True)


# -- subcommand handlers -----------------------------------------------------

def cmd_simulate(args, out: Outputs, base=None):
    cfg = resolve_config(args, base or PAPER)
    agg = run_monte_carlo(cfg, theory=not args.no_theory, engine=args.engine, threads=_threads(args))
    path = out.text(out.name, agg.to_csv())
    _print(f"final Q_mean={agg.Q_mean[-1]:.6f} lambda_mean={agg.lam_mean[-1]:.6f} ({agg.n_trials} trials) -> {path}")
    return cfg, {"engine": args.engine}


def cmd_theory_ode(args, out: Outputs):
    cfg = resolve_config(args, PAPER)
    q0 = args.q0 if args.q0 is not None else (cfg.init.c if cfg.init.mode == "warm" else 1e-2)
    every = max(1, int(round(cfg.sample_every / args.dt)))
    kind = cfg.algorithm.kind
    if kind in ("oja", "reg"):
        traj = integrate_oja(cfg.omega, cfg.algorithm.param, q0, cfg.t_max, dt=args.dt, record_every=every)
    elif kind in ("ino", "ada-ino"):
        traj = integrate(OdeParams(cfg.omega, cfg.algorithm.param or 0.0, q0, cfg.init.lambda0,
                                   adaptive=kind == "ada-ino"), cfg.t_max, dt=args.dt, record_every=every)
    else:
        raise ConfigError(f"no ODE is available for {kind}")
    path = out.csv(out.name, ["t", "Q", "lambda"], zip(traj.t, traj.Q, traj.lam))
    _print(f"Q({traj.t[-1]:g})={traj.Q[-1]:.6f} lambda={traj.lam[-1]:.6f} -> {path}")
    return cfg, {"q0": q0, "dt": args.dt}


def cmd_theory_pde(args, out: Outputs):
    cfg = resolve_config(args, PAPER)
    if cfg.algorithm.kind != "ino":
        raise ConfigError("the PDE describes fixed-rate INO-PCA only")
    pde = PdeConfig(cfg.omega, cfg.algorithm.tau, n_grid=args.n_grid, n_atoms=args.n_atoms, moments=args.moments)
    times = args.times or [cfg.t_max]
    snaps = evolve_density(initial_field(cfg.xi, cfg.init, pde), pde, times)
    rows = []
    for s in snaps:
        for x, a, b in zip(s.x, marginal_density(s), rescaled_marginal(s)):
            rows.append((s.t, x, a, b))
        _print(f"t={s.t:g} Q={s.Q:.6f} lambda={s.lam:.6f}")
    out.csv(out.name, ["t", "x", "P_marginal", "P_marginal_rescaled"], rows)
    return cfg, {"times": times, "n_grid": args.n_grid, "n_atoms": args.n_atoms, "moments": args.moments}


def cmd_theory_steady(args, out: Outputs):
    omega = args.omega if args.omega is not None else PAPER.omega
    tau = args.tau if args.tau is not None else PAPER.algorithm.tau
    ss = steady_state(omega, tau)
    _print(f"branch={ss.branch} Q_s={ss.Q:.6f} lambda_s={round(ss.lam, 6)}")
    return None, {"omega": omega, "tau": tau}


def cmd_theory_phase(args, out: Outputs):
    tau = args.tau if args.tau is not None else PAPER.algorithm.tau
    wc = critical_snr(tau)
    rows = []
    for w in args.omega_grid:
        ss = steady_state(w, tau)
        rows.append((w, ss.Q, ss.lam, ss.branch, wc))
    path = out.csv(out.name, ["omega", "Q_s_theory", "lambda_s_theory", "branch", "omega_c"], rows)
    _print(f"omega_c={wc:.6f} -> {path}")
    return None, {"tau": tau, "omega_grid": args.omega_grid}


def cmd_sweep_omega(args, out: Outputs, base=None):
    cfg = resolve_config(args, base or PAPER)
    rows = run_phase_sweep(args.omega_grid, cfg, threads=_threads(args))
    path = out.csv(out.name, ["omega", "Q_s_theory", "Q_s_empirical", "Q_s_empirical_std"],
                   [(r.omega, r.Q_s_theory, r.Q_s_empirical, r.Q_s_empirical_std) for r in rows])
    _print(f"omega_c={critical_snr(cfg.algorithm.tau):.6f} -> {path}")
    return cfg, {"omega_grid": args.omega_grid}


def cmd_sweep_lambda0(args, out: Outputs, base=None):
    cfg = resolve_config(args, base or PAPER)
    sweep = run_lambda0_sweep(args.lambda0_grid, cfg, args.t_eval, threads=_threads(args))
    out.csv(out.name, ["lambda0", "Q_eval_mean", "Q_eval_std", "Q_eval_theory", "Q_steady_mean"],
            [(r.lambda0, r.Q_eval_mean, r.Q_eval_std, r.Q_eval_theory, r.Q_steady_mean) for r in sweep.rows])
    portrait = []
    for lam0, traj in sweep.portraits.items():
        portrait.extend((lam0, t, q, l) for t, q, l in zip(traj.t, traj.Q, traj.lam))
    out.csv(f"{out.name}_portraits", ["lambda0", "t", "Q", "lambda"], portrait)
    _print(f"argmax Q(t={args.t_eval:g}): theory lambda0={sweep.argmax_theory():g}, "
           f"simulation lambda0={sweep.argmax_empirical():g}; steady spread={sweep.steady_spread():.4f}")
    return cfg, {"lambda0_grid": args.lambda0_grid, "t_eval": args.t_eval}


def cmd_switch(args, out: Outputs, base=None):
    base = base or PAPER.replace(t_max=100.0, switch_t=50.0, switch_xi=PAPER.xi)
    cfg = resolve_config(args, base)
    res = run_nonstationary(cfg, args.algos, threads=_threads(args))
    for label, agg in res.aggregates.items():
        out.text(f"{out.name}_{label.replace(':', '_')}", agg.to_csv())
    summary = res.summary(args.checkpoint)
    out.csv(f"{out.name}_summary", ["algorithm", "pre_level", "level_at_checkpoint", "ratio", "recovery_time"],
            [(s["algorithm"], s["pre_level"], s["level_at_checkpoint"], s["ratio"], s["recovery_time"])
             for s in summary])
    for s in summary:
        _print(f"{s['algorithm']}: pre={s['pre_level']:.4f} at +{args.checkpoint:g}={s['level_at_checkpoint']:.4f} "
               f"ratio={s['ratio']:.3f} recovery_time={s['recovery_time']:.2f}")
    return cfg, {"algos": list(args.algos), "checkpoint": args.checkpoint}


def cmd_multipc(args, out: Outputs):
    cfg = resolve_config(args, PAPER.replace(p=512))
    if args.data:
        source = ingest_matrix(args.data)
        label = f"data={args.data} rows={source.n_rows} p={source.p}"
    else:
        source = SpikedSource(cfg.p, args.omegas, cfg.xi, seed=cfg.seed)
        label = f"synthetic spikes {args.omegas} p={cfg.p}"
    res = run_multipc(source, args.r, cfg.algorithm, cfg.t_max, cfg.sample_every)
    path = out.csv(out.name, ["t", "grassmann_distance"], zip(res.t, res.distance))
    _print(f"{label}: final distance={res.distance[-1]:.4f} -> {path}")
    return cfg, {"r": args.r, "omegas": args.omegas, "data": args.data}


def cmd_check_moments(args, out: Outputs):
    cfg = resolve_config(args, PAPER.replace(p=500))
    tau = cfg.algorithm.tau
    if cfg.algorithm.kind != "ino":
        raise ConfigError("the moment check applies to fixed-rate INO-PCA")
    rep = moment_oracle_check(cfg.p, cfg.omega, tau, args.n_resamples, cfg.xi, cfg.init, cfg.seed)
    out.csv(out.name, ["coordinate", "drift_z"], enumerate(rep.drift_z))
    _print(f"Q={rep.Q:.4f} lambda={rep.lam:.4f} drift within 3 s.e.: {rep.frac_within_3se:.3f} "
           f"(max |z|={rep.max_abs_z:.2f}); diffusion {rep.diffusion_empirical:.4e} vs {rep.diffusion_theory:.4e} "
           f"(rel. err {rep.diffusion_rel_err:.4f}) -> {'PASS' if rep.passes() else 'FAIL'}")
    return cfg, {"n_resamples": args.n_resamples}


# -- reproduction presets ----------------------------------------------------

def _preset_base(args, **changes) -> ExperimentConfig:
    return paper_config(**changes) if args.paper_scale else desk_config(**changes)


def cmd_reproduce(args, out: Outputs):
    fig = args.figure
    threads = _threads(args)
    if fig == "fig1":
        cfg = resolve_config(args, _preset_base(args, trials=5 if not args.paper_scale else 20,
                                                p=4000 if not args.paper_scale else 10_000))
        times = args.times or [2.0, 10.0, 30.0]
        pde = PdeConfig(cfg.omega, cfg.algorithm.tau) if args.paper_scale else \
            PdeConfig(cfg.omega, cfg.algorithm.tau, n_grid=256, n_atoms=32)
        snaps = run_density_comparison(cfg, times, pde, threads=threads)
        rows = []
        for s in snaps:
            rows.extend(zip([s.t] * s.grid.size, s.grid, s.pde_raw, s.pde_rescaled, s.hist_raw, s.hist_rescaled))
            _print(f"t={s.t:g}: L1 raw={s.l1_raw:.4f} rescaled={s.l1_rescaled:.4f}")
        out.csv(out.name, ["t", "x", "P_marginal", "P_marginal_rescaled", "hist_raw", "hist_rescaled"], rows)
        out.csv(f"{out.name}_l1", ["t", "L1_raw", "L1_rescaled"], [(s.t, s.l1_raw, s.l1_rescaled) for s in snaps])
        return cfg, {"times": times}
    if fig == "fig2":
        args.engine, args.no_theory = "compiled", False
        return cmd_simulate(args, out, base=_preset_base(args))
    if fig == "fig4":
        args.omega_grid = args.omega_grid or _float_list("0:1:0.1")
        return cmd_sweep_omega(args, out, base=_preset_base(args, t_max=150.0))
    if fig == "fig5":
        base = _preset_base(args, t_max=40.0)
        cfg = resolve_config(args, base)
        rows_by_label = {}
        for text in ("ada-ino", "ino:0.1", "ino:0.5", "ino:1.0"):
            run_cfg = cfg.replace(algorithm=parse_algorithm_spec(text))
            agg = run_monte_carlo(run_cfg, theory=True, threads=threads, label=text)
            out.text(f"{out.name}_{text.replace(':', '_')}", agg.to_csv())
            rows_by_label[text] = agg
            hit = np.flatnonzero(agg.Q_mean >= 0.8)
            _print(f"{text}: Q(t_max)={agg.Q_mean[-1]:.4f} reaches 0.8 at "
                   f"{agg.t[hit[0]] if hit.size else math.inf:.2f}")
        return cfg, {"algorithms": list(rows_by_label)}
    if fig == "fig6":
        args.lambda0_grid = args.lambda0_grid or _float_list(LAMBDA0_GRID)
        return cmd_sweep_lambda0(args, out, base=_preset_base(args, t_max=50.0))
    if fig == "fig7":
        args.algos = args.algos or ["ada-ino", "adaoja:1", "ccipca:4"]
        base = _preset_base(args, t_max=100.0, switch_t=50.0, switch_xi=PAPER.xi)
        return cmd_switch(args, out, base=base)
    raise ConfigError(f"unknown figure {fig!r}")


def cmd_replay(args, out_dir_override):
    try:
        manifest = json.loads(Path(args.manifest).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read manifest {args.manifest}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{args.manifest}: invalid JSON ({exc.msg})") from None
    argv = list(manifest.get("argv") or [])
    if not argv or argv[0] == "replay":
        raise ConfigError(f"{args.manifest} does not record a replayable command")
    if out_dir_override is not None:
        argv += ["--out", out_dir_override]
    return main(argv)


# -- parser ------------------------------------------------------------------

def _common_parser() -> argparse.ArgumentParser:
    """Shared experiment flags.  Their stored default is ``None`` so that only
    flags given explicitly override a preset or a config file; the help text
    shows the effective published default."""
    c = argparse.ArgumentParser(add_help=False)
    g = c.add_argument_group("experiment")
    g.add_argument("--config", metavar="FILE", help="TOML config or JSON manifest to start from (default: none)")
    g.add_argument("--p", type=int, help=f"dimension (default: {PAPER.p})")
    g.add_argument("--omega", type=float, help=f"SNR parameter (default: {PAPER.omega:g})")
    g.add_argument("--tau", type=float, help=f"learning rate for rate-based algorithms (default: {PAPER.tau:g})")
    g.add_argument("--algo", metavar="SPEC",
                   help="ino[:tau] | reg[:tau] | oja[:tau] | krasulina[:tau] | ada-ino | ccipca[:l] | adaoja[:b0] "
                        f"(default: {PAPER.algorithm})")
    g.add_argument("--xi", type=parse_xi_spec, metavar="DIST",
                   help=f"uniform | expshift:B | sparse:R (default: {PAPER.xi})")
    g.add_argument("--init", metavar="MODE", help=f"cold | warm:C (default: {PAPER.init})")
    g.add_argument("--lambda0", type=float, help=f"initial norm parameter (default: {PAPER.init.lambda0:g})")
    g.add_argument("--t-max", type=float, help=f"macroscopic horizon (default: {PAPER.t_max:g})")
    g.add_argument("--trials", type=int, help=f"Monte Carlo trials (default: {PAPER.trials})")
    g.add_argument("--seed", type=int, help=f"master seed (default: {PAPER.seed})")
    g.add_argument("--sample-every", type=float, help=f"trace cadence in macroscopic time (default: {PAPER.sample_every:g})")
    g.add_argument("--switch-t", type=float, help="time of the abrupt signal switch (default: none)")
    g.add_argument("--xi2", type=parse_xi_spec, metavar="DIST",
                   help="distribution of the post-switch signal (default: same as --xi)")
    g.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
    g.add_argument("--threads", type=int, help="worker threads; falls back to $INO_PCA_THREADS (default: 1)")
    return c


def build_parser() -> argparse.ArgumentParser:
    common = _common_parser()
    fmt = argparse.RawDescriptionHelpFormatter
    parser = argparse.ArgumentParser(prog="ino-pca", description="Streaming PCA with implicit normalization: "
                                     "simulations, mean-field theory and reproduction presets.", formatter_class=fmt)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo run with ODE columns")
    p.add_argument("--engine", choices=("compiled", "python"), default="compiled",
                   help="stepping engine (default: compiled)")
    p.add_argument("--no-theory", action="store_true", help="omit the Q_theory/lambda_theory columns")
    p.set_defaults(handler=cmd_simulate, name="simulate")

    theory = sub.add_parser("theory", help="deterministic predictions").add_subparsers(dest="what", required=True,
                                                                                        metavar="WHAT")
    p = theory.add_parser("ode", parents=[common], help="integrate the order-parameter ODE")
    p.add_argument("--q0", type=float, help="initial Q (default: the warm-start alignment, or 0.01 for cold)")
    p.add_argument("--dt", type=float, default=1e-3, help="RK4 step (default: 0.001)")
    p.set_defaults(handler=cmd_theory_ode, name="theory_ode")
    p = theory.add_parser("pde", parents=[common], help="evolve the coordinate densities")
    p.add_argument("--times", type=_float_list, help="snapshot times, e.g. 2,10,30 (default: t_max)")
    p.add_argument("--n-grid", type=int, default=256, help="grid points (default: 256)")
    p.add_argument("--n-atoms", type=int, default=32, help="atoms for the xi distribution (default: 32)")
    p.add_argument("--moments", choices=("self-consistent", "ode"), default="self-consistent",
                   help="where Q and lambda come from (default: self-consistent)")
    p.set_defaults(handler=cmd_theory_pde, name="theory_pde")
    p = theory.add_parser("steady", parents=[common], help="closed-form steady state")
    p.set_defaults(handler=cmd_theory_steady, name="theory_steady")
    p = theory.add_parser("phase", parents=[common], help="steady state across an SNR grid")
    p.add_argument("--omega-grid", type=_float_list, default=_float_list("0:2:0.05"),
                   help="SNR values (default: 0:2:0.05)")
    p.set_defaults(handler=cmd_theory_phase, name="theory_phase")

    sweep = sub.add_parser("sweep", help="parameter sweeps").add_subparsers(dest="what", required=True,
                                                                            metavar="WHAT")
    p = sweep.add_parser("lambda0", parents=[common], help="initial-norm sweep")
    p.add_argument("--lambda0-grid", type=_float_list, default=_float_list(LAMBDA0_GRID),
                   help=f"initial norms (default: {LAMBDA0_GRID})")
    p.add_argument("--t-eval", type=float, default=3.0, help="evaluation time (default: 3)")
    p.set_defaults(handler=cmd_sweep_lambda0, name="sweep_lambda0")
    p = sweep.add_parser("omega", parents=[common], help="empirical steady state across SNR")
    p.add_argument("--omega-grid", type=_float_list, default=_float_list("0:1:0.1"),
                   help="SNR values (default: 0:1:0.1)")
    p.set_defaults(handler=cmd_sweep_omega, name="sweep_omega")

    p = sub.add_parser("switch", parents=[common], help="abrupt change of the signal direction")
    p.add_argument("--algos", type=lambda s: [a for a in s.split(",") if a], default=["ada-ino", "adaoja:1", "ccipca:4"],
                   help="comma-separated algorithm specs (default: ada-ino,adaoja:1,ccipca:4)")
    p.add_argument("--checkpoint", type=float, default=20.0, help="time after the switch to report (default: 20)")
    p.set_defaults(handler=cmd_switch, name="switch")

    p = sub.add_parser("multipc", parents=[common], help="subspace tracking with deflation")
    p.add_argument("--r", type=int, default=2, help="number of components (default: 2)")
    p.add_argument("--omegas", type=_float_list, default=[2.0, 1.0], help="spike strengths (default: 2,1)")
    p.add_argument("--data", metavar="CSV", help="stream rows of this numeric CSV instead (default: synthetic)")
    p.set_defaults(handler=cmd_multipc, name="multipc")

    check = sub.add_parser("check", help="consistency checks").add_subparsers(dest="what", required=True,
                                                                              metavar="WHAT")
    p = check.add_parser("moments", parents=[common], help="frozen-state increment moments")
    p.add_argument("--n-resamples", type=int, default=10_000, help="observations at the frozen state (default: 10000)")
    p.set_defaults(handler=cmd_check_moments, name="check_moments")

    p = sub.add_parser("reproduce", parents=[common], help="figure presets at desk scale")
    p.add_argument("figure", choices=("fig1", "fig2", "fig4", "fig5", "fig6", "fig7"))
    p.add_argument("--paper-scale", action="store_true", help="use p=10000 and 20 trials instead of p=2000, 10 trials")
    p.add_argument("--times", type=_float_list, help="fig1 snapshot times (default: 2,10,30)")
    p.add_argument("--omega-grid", type=_float_list, help="fig4 SNR grid (default: 0:1:0.1)")
    p.add_argument("--lambda0-grid", type=_float_list, help=f"fig6 initial norms (default: {LAMBDA0_GRID})")
    p.add_argument("--t-eval", type=float, default=3.0, help="fig6 evaluation time (default: 3)")
    p.add_argument("--algos", type=lambda s: [a for a in s.split(",") if a],
                   help="fig7 algorithms (default: ada-ino,adaoja:1,ccipca:4)")
    p.add_argument("--checkpoint", type=float, default=20.0, help="fig7 time after the switch (default: 20)")
    p.set_defaults(handler=cmd_reproduce, name=None)

    p = sub.add_parser("replay", help="re-run the command recorded in a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default=None, metavar="DIR", help="write to this directory instead (default: as recorded)")
    p.set_defaults(handler=None, name="replay")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        if args.command == "replay":
            return cmd_replay(args, args.out)
        name = args.name or args.figure
        out = Outputs(args.out, name, argv)
        cfg, extra = args.handler(args, out)
        if args.command != "theory" or args.what != "steady":
            out.manifest(cfg, extra)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except InoPcaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
