"""Monte-Carlo experiment runner: configs, trials, RMSE aggregation."""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from .coarray import interpolate_init, lag_statistics, reference_matrix
from .geometry import ArrayGeometry
from .recovery import RecoveryConfig, RecoveryState, cyclic_minimize
from .signal_sim import SourceScene, generate_snapshots, sample_covariance
from .spectrum import DoaEstimate, SpectrumGrid, find_peaks, music_spectrum, segment_spectrum


class ConfigError(ValueError):
    """Malformed or inconsistent experiment configuration."""


DOA_LAWS = ("fixed", "uniform", "gaussian")
METHODS = ("proposed", "segment_baseline")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: geometry, scene template, sweep grids and solver settings.

    DoA laws:
        ``fixed``: the angles in ``doas``.
        ``uniform``: ``doa_count`` angles evenly spaced over ``doa_range``.
        ``gaussian``: ``doa_count`` angles drawn per trial from
        ``N(doa_mean, doa_std^2)``.
    """

    m: int = 3
    n: int = 5
    doa_law: str = "uniform"
    doas: tuple[float, ...] = ()
    doa_range: tuple[float, float] = (-40.0, 40.0)
    doa_count: int = 9
    doa_mean: float = 0.0
    doa_std: float = 1.0
    snr_grid: tuple[float, ...] = (30.0,)
    snapshot_grid: tuple[int, ...] = (500,)
    trials: int = 1
    master_seed: int = 0
    source_power: float = 1.0
    recovery: RecoveryConfig = field(default_factory=RecoveryConfig)
    grid_step: float = 0.01
    method: str = "proposed"
    matching: str = "sorted"
    redundancy: str = "average"

    def __post_init__(self):
        if self.doa_law not in DOA_LAWS:
            raise ConfigError(f"doa_law must be one of {DOA_LAWS}")
        if self.doa_law == "fixed" and not self.doas:
            raise ConfigError("doa_law = fixed needs doas")
        if self.doa_law != "fixed" and self.doa_count < 1:
            raise ConfigError("doa_count must be >= 1")
        if not self.snr_grid or not self.snapshot_grid:
            raise ConfigError("snr and snapshot grids must be non-empty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if any(t < 1 for t in self.snapshot_grid):
            raise ConfigError("snapshot counts must be >= 1")
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}")
        if self.matching not in ("sorted", "optimal"):
            raise ConfigError("matching must be sorted or optimal")
        if not self.grid_step > 0:
            raise ConfigError("grid_step must be positive")
        if self.redundancy not in ("average", "select"):
            raise ConfigError("redundancy must be average or select")

    @property
    def K(self) -> int:
        return len(self.doas) if self.doa_law == "fixed" else self.doa_count

    def geometry(self) -> ArrayGeometry:
        try:
            return ArrayGeometry(self.m, self.n)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc


@dataclass
class TrialRecord:
    trial_index: int
    snr_db: float
    snapshots: int
    true_doas: np.ndarray
    est_doas: np.ndarray
    errors: np.ndarray
    outer_iters: int = 0
    converged: bool = False
    wall_time: float = 0.0
    failed: bool = False
    reason: str = ""
    final_trace: float = math.nan  # tr(W T(z)) at termination (proposed method only)


@dataclass
class TrialOutput:
    """Everything produced by one pipeline run (used by the CLI)."""

    record: TrialRecord
    snapshots: np.ndarray | None = None
    state: RecoveryState | None = None
    spectrum: SpectrumGrid | None = None
    estimate: DoaEstimate | None = None


def _trial_rngs(master_seed: int, trial_index: int):
    ss = np.random.SeedSequence([int(master_seed), int(trial_index)])
    doa_ss, data_ss, init_ss = ss.spawn(3)
    return np.random.default_rng(doa_ss), np.random.default_rng(data_ss), np.random.default_rng(init_ss)


def draw_doas(config: ExperimentConfig, rng: np.random.Generator) -> np.ndarray:
    if config.doa_law == "fixed":
        th = np.asarray(config.doas, dtype=float)
    elif config.doa_law == "uniform":
        lo, hi = config.doa_range
        th = np.linspace(lo, hi, config.doa_count) if config.doa_count > 1 else np.array([0.5 * (lo + hi)])
    else:
        th = rng.normal(config.doa_mean, config.doa_std, config.doa_count)
        th = np.clip(th, -89.9, 89.9)
    return np.sort(th)


def match_errors(true: np.ndarray, est: np.ndarray, matching: str = "sorted") -> np.ndarray:
    """Signed errors ``est - true`` for ``min(K, found)`` pairs."""
    true = np.sort(np.asarray(true, dtype=float))
    est = np.sort(np.asarray(est, dtype=float))
    if est.size == 0:
        return np.empty(0)
    if matching == "optimal" or est.size != true.size:
        cost = np.abs(np.subtract.outer(true, est))
        ri, ci = linear_sum_assignment(cost)
        return est[ci] - true[ri]
    return est - true


def run_trial_full(config: ExperimentConfig, snr_db: float, T: int, trial_index: int,
                   keep: bool = False) -> TrialOutput:
    """Pipeline from snapshots to DoA estimates; failures become flagged records."""
    doa_rng, data_rng, init_rng = _trial_rngs(config.master_seed, trial_index)
    true = draw_doas(config, doa_rng)
    rec = TrialRecord(trial_index, float(snr_db), int(T), true, np.empty(0), np.empty(0))
    out = TrialOutput(rec)
    t0 = time.perf_counter()
    try:
        geom = config.geometry()
        scene = SourceScene.equal_power(true, snr_db, T, power=config.source_power)
        X = generate_snapshots(geom, scene, rng=data_rng)
        R = sample_covariance(X)
        sig = lag_statistics(R, geom, config.redundancy)
        if config.method == "segment_baseline":
            spec = segment_spectrum(sig, scene.K, config.grid_step)
            est = find_peaks(spec, scene.K)
            rec.converged = True
            if keep:
                out.spectrum = spec
        else:
            ref = reference_matrix(interpolate_init(sig))
            seed = int(init_rng.integers(2 ** 63))
            state = cyclic_minimize(ref, config.recovery, seed=seed)
            spec = music_spectrum(state.T, scene.K, config.grid_step)
            est = find_peaks(spec, scene.K)
            rec.outer_iters = state.outer_iters_used
            rec.converged = state.converged and state.inner_converged
            rec.final_trace = state.trace_history[-1]
            if keep:
                out.state, out.spectrum = state, spec
        if keep:
            out.snapshots, out.estimate = X, est
        rec.est_doas = np.asarray(est.angles_deg, dtype=float)
        rec.errors = np.abs(match_errors(true, rec.est_doas, config.matching))
        if rec.est_doas.size < scene.K:
            rec.failed = True
            rec.reason = f"found {rec.est_doas.size} of {scene.K} peaks"
    except (ValueError, np.linalg.LinAlgError, FloatingPointError) as exc:
        rec.failed = True
        rec.reason = f"{type(exc).__name__}: {exc}"
    rec.wall_time = time.perf_counter() - t0
    return out


def run_trial(config: ExperimentConfig, snr_db: float, T: int, trial_index: int) -> TrialRecord:
    return run_trial_full(config, snr_db, T, trial_index).record


def rmse(records: Sequence[TrialRecord]) -> float:
    """Root-mean-square error (degrees) over successful trials and their sources."""
    ok = [r for r in records if not r.failed]
    if not ok:
        raise RuntimeError("all trials failed")
    err = np.concatenate([np.asarray(r.errors, dtype=float) for r in ok])
    if err.size == 0:
        raise RuntimeError("no matched estimates")
    return float(np.sqrt(np.mean(err ** 2)))


@dataclass(frozen=True)
class CellResult:
    snr_db: float
    snapshots: int
    trials: int
    failures: int
    rmse_deg: float
    mean_iters: float
    mean_wall_ms: float


def worker_count() -> int:
    cap = os.environ.get("COARRAY_DOA_THREADS")
    n = os.cpu_count() or 1
    if cap:
        try:
            n = max(1, min(n, int(cap)))
        except ValueError:
            raise ConfigError(f"COARRAY_DOA_THREADS must be an integer, got {cap!r}")
    return n


def _run_star(args):
    return run_trial(*args)


def run_cell(config: ExperimentConfig, snr_db: float, T: int, workers: int = 1) -> list[TrialRecord]:
    jobs = [(config, snr_db, T, q) for q in range(config.trials)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            records = list(ex.map(_run_star, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        records = [_run_star(j) for j in jobs]
    return sorted(records, key=lambda r: r.trial_index)


def summarize(records: Sequence[TrialRecord]) -> CellResult:
    r0 = records[0]
    failures = sum(r.failed for r in records)
    try:
        err = rmse(records)
    except RuntimeError:
        err = math.nan
    ok = [r for r in records if not r.failed] or list(records)
    return CellResult(r0.snr_db, r0.snapshots, len(records), failures, err,
                      float(np.mean([r.outer_iters for r in ok])),
                      float(np.mean([r.wall_time for r in records]) * 1e3))


def monte_carlo(config: ExperimentConfig, workers: int | None = None) -> list[CellResult]:
    """RMSE table over the (SNR, snapshots) grid, rows in SNR-major order."""
    if workers is None:
        workers = worker_count()
    rows = []
    for snr in config.snr_grid:
        for T in config.snapshot_grid:
            rows.append(summarize(run_cell(config, snr, T, workers)))
    return rows


# -- config file ------------------------------------------------------------

_FLOAT_LIST = ("doas", "snr_db", "doa_range")
_RECOVERY_KEYS = {f: f for f in ("gamma", "mu", "epsilon", "max_outer_iters",
                                 "z_step_tolerance", "z_step_max_iters", "backend")}
_ALIASES = {"m": "m", "n": "n", "doa_law": "doa_law", "doas": "doas", "doa_range": "doa_range",
            "doa_count": "doa_count", "doa_mean": "doa_mean", "doa_std": "doa_std",
            "snr_db": "snr_grid", "snapshots": "snapshot_grid", "trials": "trials",
            "seed": "master_seed", "source_power": "source_power", "grid_step": "grid_step",
            "method": "method", "matching": "matching", "redundancy": "redundancy"}
_INT_KEYS = {"m", "n", "doa_count", "trials", "seed", "max_outer_iters", "z_step_max_iters"}


def parse_config_text(text: str) -> ExperimentConfig:
    """Parse ``key = value`` lines (``#`` comments, comma-separated lists)."""
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lower()
        if key not in _ALIASES and key not in _RECOVERY_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        raw[key] = val

    kwargs, rec = {}, {}
    try:
        for key, val in raw.items():
            if key in _RECOVERY_KEYS:
                if key == "backend":
                    rec[key] = val or None
                else:
                    rec[key] = int(val) if key in _INT_KEYS else float(val)
                continue
            field_name = _ALIASES[key]
            if key in _FLOAT_LIST:
                kwargs[field_name] = tuple(float(v) for v in val.split(",") if v.strip())
            elif key == "snapshots":
                kwargs[field_name] = tuple(int(v) for v in val.split(",") if v.strip())
            elif key in _INT_KEYS:
                kwargs[field_name] = int(val)
            elif key in ("doa_mean", "doa_std", "source_power", "grid_step"):
                kwargs[field_name] = float(val)
            else:
                kwargs[field_name] = val
        if "doa_range" in kwargs and len(kwargs["doa_range"]) != 2:
            raise ConfigError("doa_range needs two values")
        if rec:
            kwargs["recovery"] = RecoveryConfig(**rec)
        cfg = ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    cfg.geometry()
    return cfg


def load_config(path) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc


def with_overrides(config: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(config, **kw)
