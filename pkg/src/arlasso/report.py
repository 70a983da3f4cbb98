"""Figure rendering for the benchmark outputs.

Renders matplotlib figures to files alongside the delimited outputs: grouped
boxplots of per-replicate L2 losses (one figure per covariance design) and
the exact-sign recovery curves of the suboptimality experiment.  Uses the Agg
backend; no display required.
"""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

METHOD_ORDER = ("l2_oracle", "lasso", "scad", "r_lasso", "ar_lasso")


def loss_boxplots(records, cov_label: str, out_path) -> str:
    """Grouped boxplots of replicate L2 losses by noise model and method."""
    recs = [r for r in records if r.cov == cov_label and r.converged]
    noises = []
    for r in recs:
        if r.noise not in noises:
            noises.append(r.noise)
    methods = [m for m in METHOD_ORDER if any(r.method == m for r in recs)]
    if not noises or not methods:
        raise ValueError(f"no converged records for covariance {cov_label!r}")

    fig, axes = plt.subplots(
        1, len(noises), figsize=(2.6 * len(noises), 4.0), sharey=False
    )
    if len(noises) == 1:
        axes = [axes]
    for ax, noise in zip(axes, noises):
        data = [
            [r.l2_loss for r in recs if r.noise == noise and r.method == m]
            for m in methods
        ]
        ax.boxplot(data, tick_labels=methods, showfliers=False)
        ax.set_title(noise)
        ax.set_yscale("log")
        ax.tick_params(axis="x", rotation=75, labelsize=7)
    axes[0].set_ylabel("L2 loss")
    fig.suptitle(f"Replicate L2 losses ({cov_label} covariates)")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return str(out_path)


def recovery_curves(result, out_path) -> str:
    """Exact-sign recovery rate vs signal strength for each method."""
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    markers = {"lasso": "s", "r_lasso": "o"}
    for method, rates in result.rates.items():
        ax.plot(
            result.beta0_grid, rates,
            marker=markers.get(method, "x"), label=method,
        )
    ax.set_xlabel("signal strength")
    ax.set_ylabel("exact sign recovery rate")
    ax.set_ylim(-0.05, 1.05)
    ax.set_xscale("symlog", linthresh=max(min([b for b in result.beta0_grid if b > 0], default=1.0), 1e-3))
    ax.grid(alpha=0.3)
    ax.legend()
    ax.set_title(f"Sign recovery under Cauchy noise (n={result.n}, p={result.p}, reps={result.reps})")
    fig.tight_layout()
    fig.savefig(out_path, dpi=130)
    plt.close(fig)
    return str(out_path)
