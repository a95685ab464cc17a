"""Command-line front end.

Three subcommands: ``run`` executes the signal experiment for every
regularizer and seed and emits CSVs, plots and a manifest; ``verify``
runs the oracle suites; ``demo2d`` runs the masked 2D optimization.
Data CSVs are written deterministically (UTF-8, LF, 17 significant
digits), so identical configs produce byte-identical files; plots and
the manifest (which records wall-clock) sit outside that guarantee.

Exit codes: 0 success, 1 invalid config, 2 divergence during a run
(partial logs still written), 3 failed verification.
"""

import argparse
import hashlib
import json
import os
import sys
import time
from dataclasses import replace
from multiprocessing import Pool

import numpy as np

from . import __version__
from .config import config_from_dict, config_to_dict, load_config
from .experiments import generate_pc_signal, make_edge_scene, masked_2d_demo, train_pc
from .mlp import mlp_forward
from .regularizers import PENALTY_NAMES
from .verify import LEVELS, run_verification

OUT_DIR_ENV = "UNROLLTV_OUT"

__all__ = ["main"]


def _fmt(value):
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _run_one(payload):
    config_dict, regularizer, seed = payload
    cfg = replace(config_from_dict(config_dict), regularizer=regularizer)
    params, log = train_pc(cfg, seed=seed)
    return regularizer, seed, params, log


def _probe_header(probe_xs):
    return [f"probe_{x:g}" for x in probe_xs]


def cmd_run(args):
    try:
        cfg = load_config(args.config)
        if args.seeds:
            cfg = replace(cfg, training=replace(cfg.training, seeds=tuple(args.seeds)))
    except (ValueError, OSError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 1

    out_dir = args.out
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    seeds = cfg.training.seeds
    payloads = [
        (config_to_dict(cfg), reg, seed) for reg in PENALTY_NAMES for seed in seeds
    ]
    jobs = max(1, args.jobs)
    if jobs > 1:
        with Pool(jobs) as pool:
            results = pool.map(_run_one, payloads)
    else:
        results = [_run_one(p) for p in payloads]

    by_key = {(reg, seed): (params, log) for reg, seed, params, log in results}
    probe_cols = _probe_header(cfg.training.probe_xs)
    files = []
    diverged = False
    for reg in PENALTY_NAMES:
        for seed in seeds:
            params, log = by_key[(reg, seed)]
            name = f"run_{reg}_seed{seed}.csv"
            rows = (
                [t, log.loss[t], log.val_error[t], log.grad_norm[t], *log.probes[t]]
                for t in range(log.n_steps)
            )
            _write_csv(
                os.path.join(out_dir, name),
                ["step", "loss", "val_error", "grad_norm", *probe_cols],
                rows,
            )
            files.append(name)
            diverged = diverged or log.diverged
            status = f" DIVERGED at step {log.divergence_step}" if log.diverged else ""
            print(
                f"run {reg} seed {seed}: final_error={log.final_error:.4g} "
                f"final_grad_norm={log.final_grad_norm:.4g}{status}"
            )

    tv_final = {seed: by_key[("tv", seed)][1].final_error for seed in seeds}
    summary_rows = []
    for reg in PENALTY_NAMES:
        for seed in seeds:
            log = by_key[(reg, seed)][1]
            summary_rows.append(
                [reg, seed, log.final_error, log.final_grad_norm, log.steps_to_error(tv_final[seed])]
            )
    summary_path = os.path.join(out_dir, "summary.csv")
    _write_csv(
        summary_path,
        ["regularizer", "seed", "final_error", "final_grad_norm", "steps_to_tv_error"],
        [[r[0], r[1], r[2], r[3], r[4]] for r in summary_rows],
    )
    files.append("summary.csv")

    # dense target and final predictions for the first seed, for the overlay plot
    first = seeds[0]
    signal = generate_pc_signal(replace(cfg.signal, seed=int(first)))
    sig_cols = {"x": signal.xs_dense, "target": signal.target_dense}
    for reg in PENALTY_NAMES:
        sig_cols[f"pred_{reg}"] = mlp_forward(by_key[(reg, first)][0], signal.xs_dense)
    _write_csv(
        os.path.join(out_dir, "signals.csv"),
        list(sig_cols),
        zip(*sig_cols.values()),
    )
    files.append("signals.csv")

    print("\nmedian over seeds:")
    print(f"{'regularizer':>12}  {'final_error':>12}  {'final_grad_norm':>15}")
    for reg in PENALTY_NAMES:
        med_err = float(np.median([by_key[(reg, s)][1].final_error for s in seeds]))
        med_gn = float(np.median([by_key[(reg, s)][1].final_grad_norm for s in seeds]))
        print(f"{reg:>12}  {med_err:>12.5g}  {med_gn:>15.5g}")

    if not args.no_plots:
        from . import plots

        run_files = {
            reg: os.path.join(out_dir, f"run_{reg}_seed{first}.csv") for reg in PENALTY_NAMES
        }
        plots.plot_error_curves(run_files, os.path.join(out_dir, "curves_error.svg"))
        plots.plot_grad_norm_curves(run_files, os.path.join(out_dir, "curves_grad_norm.svg"))
        plots.plot_probe_curves(run_files, os.path.join(out_dir, "curves_probes.svg"))
        plots.plot_signal_overlay(
            os.path.join(out_dir, "signals.csv"), os.path.join(out_dir, "signal_overlay.svg")
        )
        files.extend(
            ["curves_error.svg", "curves_grad_norm.svg", "curves_probes.svg", "signal_overlay.svg"]
        )

    manifest = {
        "version": __version__,
        "config": config_to_dict(cfg),
        "seeds": [int(s) for s in seeds],
        "wall_clock_s": time.perf_counter() - t0,
        "files": {name: _digest(os.path.join(out_dir, name)) for name in files},
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")

    if diverged:
        print("error: at least one run diverged; partial logs written", file=sys.stderr)
        return 2
    return 0


def cmd_verify(args):
    results = run_verification(args.level)
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"[{mark}] {r.name:<{width}}  {r.detail}")
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"error: failed checks: {', '.join(failed)}", file=sys.stderr)
        return 3
    return 0


def cmd_demo2d(args):
    try:
        cfg = load_config(args.config)
    except (ValueError, OSError) as exc:
        print(f"error: invalid config: {exc}", file=sys.stderr)
        return 1
    d = cfg.demo2d
    image, _, noisy = make_edge_scene(shape=d.shape, noise=d.noise, seed=d.seed)
    report = masked_2d_demo(image, noisy, d)
    os.makedirs(args.out, exist_ok=True)
    _write_csv(
        os.path.join(args.out, "demo2d_stats.csv"),
        ["statistic", "masked", "unmasked"],
        [
            ["mean_grad_on_edge", report.on_edge_masked, report.on_edge_unmasked],
            ["mean_grad_off_edge", report.off_edge_masked, report.off_edge_unmasked],
        ],
    )
    print(f"mean |grad F| on edge:  masked={report.on_edge_masked:.5g} "
          f"unmasked={report.on_edge_unmasked:.5g}")
    print(f"mean |grad F| off edge: masked={report.off_edge_masked:.5g} "
          f"unmasked={report.off_edge_unmasked:.5g}")
    return 0


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="unrolltv",
        description="Unrolled-TV smoothness experiments and verification",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    default_out = os.environ.get(OUT_DIR_ENV, "runs")

    p_run = sub.add_parser("run", help="train every regularizer x seed and emit CSVs/plots")
    p_run.add_argument("--config", default=None, help="YAML config path (defaults built in)")
    p_run.add_argument("--out", default=default_out, help=f"output dir (env {OUT_DIR_ENV})")
    p_run.add_argument("--seeds", action="append", type=int, default=None,
                       help="override config seeds; repeatable")
    p_run.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes")
    p_run.add_argument("--no-plots", action="store_true", help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_verify = sub.add_parser("verify", help="run the oracle check suites")
    p_verify.add_argument("--level", choices=LEVELS, default="fast")
    p_verify.set_defaults(func=cmd_verify)

    p_demo = sub.add_parser("demo2d", help="masked vs unmasked 2D smoothness demo")
    p_demo.add_argument("--config", default=None)
    p_demo.add_argument("--out", default=default_out)
    p_demo.set_defaults(func=cmd_demo2d)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
