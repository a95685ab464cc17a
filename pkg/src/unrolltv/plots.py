"""Static figures rendered from the emitted CSVs.

Plots are rebuilt from the data files rather than in-memory state, so
external tooling can regenerate them after the fact. Vector output
(SVG); the byte-identity guarantee of the run command covers the CSVs,
not these files.
"""

import csv

import numpy as np

__all__ = [
    "read_csv_columns",
    "plot_error_curves",
    "plot_grad_norm_curves",
    "plot_probe_curves",
    "plot_signal_overlay",
]


def read_csv_columns(path):
    """Read a headered numeric CSV into {column_name: float array}."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(v) for v in row] for row in body]) if body else np.empty((0, len(header)))
    return {name: data[:, i] for i, name in enumerate(header)}


def _axes(title, xlabel, ylabel):
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(7, 4.5))
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    return fig, ax


def _finish(fig, ax, out_path, legend=True):
    if legend:
        ax.legend()
    fig.tight_layout()
    fig.savefig(out_path)
    import matplotlib.pyplot as plt

    plt.close(fig)


def plot_error_curves(run_files, out_path):
    """Validation-error trajectories, one line per regularizer."""
    fig, ax = _axes("Validation error during training", "step", "mean abs error")
    for name, path in run_files.items():
        cols = read_csv_columns(path)
        ax.plot(cols["step"], cols["val_error"], label=name)
    ax.set_yscale("log")
    _finish(fig, ax, out_path)


def plot_grad_norm_curves(run_files, out_path):
    """Total parameter-gradient norm trajectories on a log scale."""
    fig, ax = _axes("Gradient norm during training", "step", "gradient norm")
    for name, path in run_files.items():
        cols = read_csv_columns(path)
        ax.plot(cols["step"], cols["grad_norm"], label=name)
    ax.set_yscale("log")
    _finish(fig, ax, out_path)


def plot_probe_curves(run_files, out_path):
    """Pointwise loss gradients at the probe locations, per regularizer."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    names = list(run_files)
    fig, axes = plt.subplots(len(names), 1, figsize=(7, 2.4 * len(names)), sharex=True)
    axes = np.atleast_1d(axes)
    for ax, name in zip(axes, names):
        cols = read_csv_columns(run_files[name])
        for col in cols:
            if col.startswith("probe_"):
                ax.plot(cols["step"], cols[col], label=f"x={col[len('probe_'):]}")
        ax.set_ylabel(name)
        ax.legend(fontsize="small")
    axes[-1].set_xlabel("step")
    axes[0].set_title("Loss gradient at probed locations")
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def plot_signal_overlay(signals_file, out_path):
    """Dense target against each regularizer's final prediction."""
    cols = read_csv_columns(signals_file)
    fig, ax = _axes("Target vs predictions", "x", "signal")
    ax.plot(cols["x"], cols["target"], color="black", lw=1.8, label="target")
    for name, series in cols.items():
        if name.startswith("pred_"):
            ax.plot(cols["x"], series, lw=1.0, label=name[len("pred_"):])
    _finish(fig, ax, out_path)
