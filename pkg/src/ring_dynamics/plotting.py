"""PNG figures written next to the CSV/JSON output (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dynamics import OrbitTrace  # noqa: E402

_PROJECTIONS = {"planar": ("x", "z"), "reduced": ("r", "z"), "spatial": ("x", "y")}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_trace(trace: OrbitTrace, path, title: str = "", source=None) -> Path:
    """Orbit projection, with the source drawn as markers at ``source`` points."""
    a, b = _PROJECTIONS[trace.kind]
    fig, ax = plt.subplots(figsize=(5, 5))
    ax.plot(trace.column(a), trace.column(b), lw=0.9, color="C0")
    ax.plot(trace.column(a)[0], trace.column(b)[0], "o", ms=4, color="C3", label="start")
    if source is not None:
        pts = np.atleast_2d(source)
        ax.plot(pts[:, 0], pts[:, 1], "kx", ms=7, label="source")
    if trace.kind == "spatial":
        th = np.linspace(0.0, 2 * np.pi, 400)
        ax.plot(np.cos(th), np.sin(th), "k-", lw=0.6, label="circle")
    ax.set_xlabel(a)
    ax.set_ylabel(b)
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    return _save(fig, path)


def plot_energy(trace: OrbitTrace, path, title: str = "") -> Path:
    e0 = trace.energy[0]
    scale = abs(e0) if e0 != 0 else 1.0
    fig, ax = plt.subplots(figsize=(6, 3))
    ax.plot(trace.t, (trace.energy - e0) / scale, lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("relative energy error")
    ax.set_title(title)
    return _save(fig, path)


def plot_pointing(xs, zs, mask: np.ndarray, path, title: str = "") -> Path:
    """Grid points where the field fails to point to the interval, in red."""
    X, Z = np.meshgrid(xs, zs, indexing="ij")
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.scatter(X[mask], Z[mask], s=4, color="C2", label="points to I")
    ax.scatter(X[~mask], Z[~mask], s=6, color="C3", label="violation")
    ax.set_xlabel("x")
    ax.set_ylabel("z")
    ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    return _save(fig, path)


def plot_wire_limit(epsilons, raw, constant: float, path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.semilogx(epsilons, raw, "o-", label="|grad W| |p|^2 / density")
    ax.axhline(constant, color="k", lw=0.7, ls="--", label=f"extrapolated {constant:.4g}")
    ax.set_xlabel("eps")
    ax.legend(fontsize=8)
    return _save(fig, path)
