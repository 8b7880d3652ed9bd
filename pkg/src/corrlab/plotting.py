"""
SVG figures for experiment reports. Needs the ``plot`` extra (matplotlib).
"""
from __future__ import annotations

from pathlib import Path
from typing import Any, Union

import numpy as np

from .measures import WeightedPointCloud

PathLike = Union[str, Path]


def _pyplot() -> Any:
    try:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
    except ImportError as exc:  # pragma: no cover - depends on the environment
        raise RuntimeError(
            "SVG output needs matplotlib; install with: pip install -e .[plot]"
        ) from exc
    return plt


def plot_pairing_report(report: Any, path: PathLike) -> Path:
    """log(error) against n with the fitted exponential line."""
    plt = _pyplot()
    ns = np.array([row.n for row in report.rows], dtype=float)
    errors = np.array([row.abs_error for row in report.rows], dtype=float)
    noise = np.array([row.noise for row in report.rows], dtype=float)
    fig, ax = plt.subplots(figsize=(5, 4))
    positive = errors > 0
    ax.semilogy(ns[positive], errors[positive], "o", label="|error|")
    if np.any(noise > 0):
        ax.semilogy(ns[noise > 0], noise[noise > 0], "x", color="grey", label="noise")
    if report.fitted_rate is not None and np.any(positive):
        anchor = int(np.argmax(positive))
        line = errors[anchor] * report.fitted_rate ** (ns - ns[anchor])
        ax.semilogy(ns, line, "-", label=f"rate {report.fitted_rate:.3f}")
    ax.set_xlabel("n")
    ax.set_ylabel("error")
    ax.set_title(report.form_id)
    ax.legend()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


def plot_cloud(nu: WeightedPointCloud, path: PathLike) -> Path:
    """Finite atoms in the plane, marker area proportional to weight."""
    plt = _pyplot()
    finite = np.isfinite(nu.atoms)
    atoms = nu.atoms[finite]
    weights = nu.weights[finite]
    fig, ax = plt.subplots(figsize=(5, 5))
    sizes = 4.0 * weights / max(float(weights.max(initial=0.0)), 1e-300)
    ax.scatter(atoms.real, atoms.imag, s=sizes, c="black", linewidths=0)
    ax.set_aspect("equal")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg")
    plt.close(fig)
    return path


__all__ = ["plot_pairing_report", "plot_cloud"]
