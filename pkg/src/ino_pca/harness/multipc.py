"""Subspace tracking with the deflation wrapper, against an offline
eigendecomposition of the stream's covariance."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..algorithms import AlgorithmSpec, MultiPcState, multi_pc_step
from ..errors import ConfigError, DomainError, ParseError
from ..metrics import grassmann_distance
from ..spiked_model import XiDist, make_signal, parse_xi_spec, trial_rng

__all__ = ["MAX_ORACLE_P", "SpikedSource", "MatrixSource", "ingest_matrix", "top_eigenvectors",
           "MultiPcResult", "run_multipc"]

MAX_ORACLE_P = 2048


def top_eigenvectors(cov: np.ndarray, r: int) -> np.ndarray:
    """Leading ``r`` eigenvectors of a symmetric matrix, as columns."""
    if cov.shape[0] > MAX_ORACLE_P:
        raise ConfigError(f"offline oracle is capped at p={MAX_ORACLE_P}, got p={cov.shape[0]}")
    vals, vecs = np.linalg.eigh(cov)
    if r > vals.size:
        raise DomainError(f"cannot take {r} eigenvectors of a {vals.size}-dimensional covariance")
    return vecs[:, ::-1][:, :r]


class SpikedSource:
    """Rank-``r`` stream ``y = sum_j sqrt(omega_j/p) c_j xi_j + a`` with
    mutually orthogonal ``xi_j``, each of norm ``sqrt(p)``."""

    def __init__(self, p: int, omegas, xi: XiDist | str = "uniform", seed: int = 0):
        omegas = [float(w) for w in omegas]
        if not omegas or any(w < 0 for w in omegas):
            raise ConfigError("need at least one non-negative spike strength")
        if len(omegas) > p:
            raise ConfigError(f"rank {len(omegas)} exceeds p={p}")
        self.p = p
        self.omegas = np.array(omegas)
        self.rng = trial_rng(seed, 0)
        dist = parse_xi_spec(xi)
        raw = np.column_stack([make_signal(dist, p, self.rng).entries for _ in omegas])
        q, _ = np.linalg.qr(raw)
        self.xis = q * math.sqrt(p)
        self._scale = np.sqrt(self.omegas / p)

    def __next__(self) -> np.ndarray:
        c = self.rng.standard_normal(self.omegas.size)
        a = self.rng.standard_normal(self.p)
        return self.xis @ (self._scale * c) + a

    def __iter__(self):
        return self

    def truth(self, r: int) -> np.ndarray:
        """Top-``r`` eigenvectors of the population covariance
        ``I + sum_j (omega_j/p) xi_j xi_j^T``."""
        cov = np.eye(self.p) + (self.xis * (self.omegas / self.p)) @ self.xis.T
        return top_eigenvectors(cov, r)


class MatrixSource:
    """Rows of a data matrix, mean-centered, streamed in order and cycled."""

    def __init__(self, data: np.ndarray):
        data = np.asarray(data, dtype=float)
        if data.ndim != 2 or data.shape[0] < 1 or data.shape[1] < 1:
            raise ConfigError("data matrix must be two-dimensional and non-empty")
        self.data = data - data.mean(axis=0)
        self.n_rows, self.p = self.data.shape
        self._i = 0

    def __next__(self) -> np.ndarray:
        row = self.data[self._i % self.n_rows]
        self._i += 1
        return row.copy()

    def __iter__(self):
        return self

    def truth(self, r: int) -> np.ndarray:
        return top_eigenvectors(self.data.T @ self.data / self.n_rows, r)


def ingest_matrix(path: str | Path) -> MatrixSource:
    """Read a numeric CSV (one sample per row, no header) into a cycling,
    mean-centered source.  Errors report the 1-based row and column."""
    path = Path(path)
    rows = []
    width = None
    try:
        with path.open(newline="") as fh:
            for i, record in enumerate(csv.reader(fh), start=1):
                if not record or all(not cell.strip() for cell in record):
                    continue
                if width is None:
                    width = len(record)
                elif len(record) != width:
                    raise ParseError(f"{path}: expected {width} columns, found {len(record)}", row=i)
                vals = []
                for j, cell in enumerate(record, start=1):
                    try:
                        v = float(cell)
                    except ValueError:
                        raise ParseError(f"{path}: non-numeric cell {cell.strip()!r}", row=i, column=j) from None
                    if not math.isfinite(v):
                        raise ParseError(f"{path}: non-finite cell {cell.strip()!r}", row=i, column=j)
                    vals.append(v)
                rows.append(vals)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return MatrixSource(np.array(rows))


@dataclass
class MultiPcResult:
    t: np.ndarray
    distance: np.ndarray
    state: MultiPcState
    truth: np.ndarray


def run_multipc(source, r: int, algorithm: AlgorithmSpec, t_max: float, sample_every: float = 0.1) -> MultiPcResult:
    """Stream ``floor(p t_max)`` samples through the deflation wrapper and
    record the Grassmann distance to the oracle subspace.  Entries are NaN
    until all ``r`` components are initialized."""
    p = source.p
    if r < 1 or r > p:
        raise ConfigError(f"r must lie in [1, p={p}], got {r}")
    if p > MAX_ORACLE_P:
        raise ConfigError(f"offline oracle is capped at p={MAX_ORACLE_P}, got p={p}")
    truth = source.truth(r)
    n_steps = int(math.floor(p * t_max + 1e-9))
    every = max(1, int(math.floor(p * sample_every + 1e-9)))
    state = MultiPcState.empty(r)
    ts, ds = [0.0], [math.nan]
    for k in range(1, n_steps + 1):
        state = multi_pc_step(state, next(source), algorithm)
        if k % every == 0 or k == n_steps:
            ts.append(k / p)
            ds.append(grassmann_distance(state.basis(), truth) if k >= r else math.nan)
    return MultiPcResult(np.array(ts), np.array(ds), state, truth)
