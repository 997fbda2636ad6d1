"""Command-line entry point: ``coarray-doa {simulate,recover,spectrum,mc}``."""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from .harness import (ConfigError, _trial_rngs, draw_doas, load_config, monte_carlo,
                      run_trial_full, worker_count)
from .signal_sim import SourceScene, generate_snapshots

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _fmt(x) -> str:
    # repr gives the shortest string that round-trips the double
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _pick(cfg, args):
    snr = cfg.snr_grid[0] if args.snr is None else args.snr
    T = cfg.snapshot_grid[0] if args.snapshots is None else args.snapshots
    return snr, T


def _single(cfg, args):
    snr, T = _pick(cfg, args)
    out = run_trial_full(cfg, snr, T, args.trial, keep=True)
    if out.record.failed and out.spectrum is None:
        raise RuntimeError(out.record.reason)
    return out


def cmd_simulate(cfg, args):
    snr, T = _pick(cfg, args)
    doa_rng, data_rng, _ = _trial_rngs(cfg.master_seed, args.trial)
    geom = cfg.geometry()
    scene = SourceScene.equal_power(draw_doas(cfg, doa_rng), snr, T, power=cfg.source_power)
    X = generate_snapshots(geom, scene, rng=data_rng)
    pos = geom.sensor_positions
    rows = ((i, pos[i], t, X[i, t].real, X[i, t].imag)
            for i in range(X.shape[0]) for t in range(X.shape[1]))
    _write_csv(args.out, ["sensor", "position", "snapshot", "re", "im"], rows)
    return EXIT_OK


def cmd_recover(cfg, args):
    if cfg.method != "proposed":
        raise ConfigError("recover needs method = proposed")
    out = _single(cfg, args)
    z = out.state.z
    U = z.size
    rows = []
    for lag in range(-(U - 1), U):
        v = z[lag] if lag >= 0 else np.conj(z[-lag])
        rows.append((lag, v.real, v.imag))
    _write_csv(args.out, ["lag", "re", "im"], rows)
    return EXIT_OK


def _peaks_path(out: Path, explicit):
    if explicit:
        return Path(explicit)
    return out.with_name(out.stem + ".peaks.csv")


def cmd_spectrum(cfg, args):
    out = _single(cfg, args)
    spec, est = out.spectrum, out.estimate
    _write_csv(args.out, ["theta_deg", "pseudo_spectrum"], zip(spec.angles, spec.values))
    _write_csv(_peaks_path(Path(args.out), args.peaks_out), ["peak_theta_deg", "peak_value"],
               zip(est.angles_deg, est.peak_values))
    return EXIT_OK


def cmd_mc(cfg, args):
    workers = worker_count() if args.workers is None else max(1, min(args.workers, worker_count()))
    rows = monte_carlo(cfg, workers=workers)
    _write_csv(args.out, ["snr_db", "snapshots", "trials", "failures", "rmse_deg", "mean_iters",
                          "mean_wall_ms"],
               ((r.snr_db, r.snapshots, r.trials, r.failures, r.rmse_deg, r.mean_iters,
                 r.mean_wall_ms) for r in rows))
    if all(r.failures == r.trials for r in rows):
        print("error: all trials failed", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coarray-doa", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    handlers = {"simulate": cmd_simulate, "recover": cmd_recover,
                "spectrum": cmd_spectrum, "mc": cmd_mc}
    for name, fn in handlers.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True)
        sp.add_argument("--out", required=True)
        if name != "mc":
            sp.add_argument("--snr", type=float, default=None, help="default: first snr_db entry")
            sp.add_argument("--snapshots", type=int, default=None,
                            help="default: first snapshots entry")
            sp.add_argument("--trial", type=int, default=0, help="trial index (seeds the draw)")
        else:
            sp.add_argument("--workers", type=int, default=None)
        if name == "spectrum":
            sp.add_argument("--peaks-out", default=None,
                            help="peaks CSV (default: <out stem>.peaks.csv)")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
