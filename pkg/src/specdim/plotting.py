"""Static figure rendering for projections and comparison reports.

Figures are rendered headless through the Agg backend and written to
svg or png files chosen by suffix. SVG output is deterministic for a
given matplotlib version: element ids are salted with a fixed string
and no creation date is embedded, so reruns produce identical bytes.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .errors import ValidationError

_HASH_SALT = "specdim"
_MARKERS = "osD^v*P<>"


def _save(fig, path: Path) -> None:
    suffix = path.suffix.lower()
    if suffix == ".svg":
        with plt.rc_context({"svg.hashsalt": _HASH_SALT}):
            fig.savefig(path, format="svg", metadata={"Date": None})
    elif suffix == ".png":
        fig.savefig(path, format="png")
    else:
        raise ValidationError(
            f"unsupported figure format {suffix!r}; use .svg or .png"
        )


def save_scatter(coords, labels, path, title: str = "Projection") -> None:
    """Scatter of 2-D coordinates with one color and marker per label.

    coords is an (n, 2) array and labels a sequence of n label strings;
    points labeled "query" are drawn larger so they stand out. Label
    groups are plotted in sorted order, which fixes color assignment.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[1] != 2:
        raise ValidationError(
            f"coords must be an (n, 2) array, got shape {coords.shape}"
        )
    names = [str(label) for label in labels]
    if len(names) != coords.shape[0]:
        raise ValidationError(
            f"{len(names)} labels for {coords.shape[0]} points"
        )
    unique = sorted(set(names))
    cmap = plt.get_cmap("tab10")
    fig, ax = plt.subplots(figsize=(6.0, 5.0), dpi=120)
    try:
        for i, label in enumerate(unique):
            mask = np.asarray([name == label for name in names])
            pts = coords[mask]
            ax.scatter(
                pts[:, 0],
                pts[:, 1],
                s=90 if label == "query" else 36,
                color=cmap(i % 10),
                marker=_MARKERS[i % len(_MARKERS)],
                label=label,
                alpha=0.85,
                edgecolors="none",
            )
        ax.set_title(title)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
        ax.set_aspect("equal", adjustable="datalim")
        ax.legend(loc="best", frameon=True)
        fig.tight_layout()
        _save(fig, Path(path))
    finally:
        plt.close(fig)


def save_comparison_chart(report: dict, path) -> None:
    """Per-query agreement bars for a comparison report dict.

    Left panel: recall@k per query with the mean as a horizontal line.
    Right panel: Spearman rank correlation per query, same treatment.
    """
    entries = report["queries"]
    if not entries:
        raise ValidationError("cannot plot a report with zero queries")
    x = np.arange(len(entries))
    recalls = [entry["recall_at_k"] for entry in entries]
    rhos = [entry["rank_correlation"] for entry in entries]
    k = entries[0]["k"]
    factor = entries[0]["factor"]
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10.0, 4.0), dpi=120)
    try:
        ax1.bar(x, recalls, color="#4c72b0", width=0.8)
        ax1.axhline(
            report["mean_recall_at_k"],
            color="#c44e52",
            linewidth=1.2,
            label=f"mean {report['mean_recall_at_k']:.3f}",
        )
        ax1.set_ylim(0.0, 1.05)
        ax1.set_title(f"recall@{k} per query, factor {factor:g}")
        ax1.set_xlabel("query")
        ax1.legend(loc="lower right")

        ax2.bar(x, rhos, color="#55a868", width=0.8)
        ax2.axhline(
            report["mean_rank_correlation"],
            color="#c44e52",
            linewidth=1.2,
            label=f"mean {report['mean_rank_correlation']:.3f}",
        )
        ax2.set_ylim(-1.05, 1.05)
        ax2.set_title("rank correlation per query")
        ax2.set_xlabel("query")
        ax2.legend(loc="lower right")

        for ax in (ax1, ax2):
            if len(entries) > 20:
                ax.set_xticks([])
        fig.tight_layout()
        _save(fig, Path(path))
    finally:
        plt.close(fig)
