"""Figure rendering for the report path of the CLI.

Renders the order posterior, information-criterion curves, sweep
aggregates, and the three-panel real-data report (histogram, criteria,
posterior) to image files next to the delimited output.  PNG metadata is
stripped so identical runs produce identical bytes.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": None}}


def save_posterior_plot(posterior, path, title="Posterior over number of components"):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.bar(posterior.k_values, posterior.probs, color="#4878a8")
    ax.set_xlabel("K")
    ax.set_ylabel("p(K | y)")
    ax.set_xticks(posterior.k_values)
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_criteria_plot(curve, path, title="Information criteria"):
    fig, ax = plt.subplots(figsize=(5.0, 3.2))
    ax.plot(curve.k_values, curve.aic, marker="o", label="AIC")
    ax.plot(curve.k_values, curve.bic, marker="s", label="BIC")
    ax.set_xlabel("K")
    ax.set_ylabel("criterion (lower is better)")
    ax.set_xticks(curve.k_values)
    ax.legend()
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_report(values, posterior, curve, path, name="data"):
    """Three stacked panels for a 1-d dataset: histogram, criteria, posterior."""
    values = np.asarray(values).reshape(-1)
    fig, axes = plt.subplots(3, 1, figsize=(5.0, 8.0))
    axes[0].hist(values, bins=30, color="#888888", edgecolor="white")
    axes[0].set_title(f"{name}: histogram")
    axes[1].plot(curve.k_values, curve.aic, marker="o", label="AIC")
    axes[1].plot(curve.k_values, curve.bic, marker="s", label="BIC")
    axes[1].set_xticks(curve.k_values)
    axes[1].legend()
    axes[1].set_title("information criteria")
    axes[2].bar(posterior.k_values, posterior.probs, color="#4878a8")
    axes[2].set_xticks(posterior.k_values)
    axes[2].set_title("posterior over K")
    axes[2].set_xlabel("K")
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_sweep_plot(sweep, path):
    """Mean selected order and MSE versus N, one column per k_hat."""
    k_hats = sorted({a.k_hat for a in sweep.aggregates})
    methods = sorted({a.method for a in sweep.aggregates})
    if not k_hats:
        raise ValueError("sweep has no aggregates to plot")
    fig, axes = plt.subplots(2, len(k_hats), figsize=(3.0 * len(k_hats), 5.6),
                             squeeze=False)
    for col, k_hat in enumerate(k_hats):
        for method in methods:
            rows = sorted((a.n, a) for a in sweep.aggregates
                          if a.k_hat == k_hat and a.method == method)
            ns = [n for n, _ in rows]
            axes[0][col].plot(ns, [a.mean_k_star for _, a in rows],
                              marker="o", label=method)
            axes[1][col].plot(ns, [a.mse for _, a in rows], marker="o", label=method)
        axes[0][col].axhline(k_hat, color="gray", linestyle=":")
        axes[0][col].set_title(f"k_hat = {k_hat}")
        axes[0][col].set_ylabel("mean K*" if col == 0 else "")
        axes[1][col].set_ylabel("MSE" if col == 0 else "")
        axes[1][col].set_xlabel("N")
        axes[0][col].set_xscale("log")
        axes[1][col].set_xscale("log")
    axes[0][0].legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
